#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ndsid/generator.hpp"
#include "ndsid/model.hpp"
#include "ndsid/rng.hpp"
#include "ndsid/simulate.hpp"
#include "ndsid/stage1.hpp"

namespace ndsid {

/// Series chain of carts joined by springs and dampers, forced at both end carts
/// and observed through their positions.
struct ChainSpec {
    Index n_carts = 6;
    Interval mass_range{1.0, 1.5};
    Interval spring_range{0.5, 2.0};
    Interval damper_range{0.1, 0.5};
    Index unknown_coupling = 0;  ///< 1-based coupling between carts m and m+1; 0 = ceil(n/2)
    bool wall_anchoring = true;  ///< extra known spring/damper from carts 1 and n to ground
    bool split_forces = true;    ///< v_i = [elastic; viscous] (m_v = 2n) or net force (m_v = n)
    std::uint64_t seed = 1;

    Index coupling() const { return unknown_coupling > 0 ? unknown_coupling : (n_carts + 1) / 2; }
    void validate() const;
};

/// Physical parameters; couplings j = 1..n-1 join carts j and j+1.
struct ChainParameters {
    std::vector<double> masses;
    std::vector<double> springs;
    std::vector<double> dampers;
    double wall_spring_first = 0.0, wall_damper_first = 0.0;
    double wall_spring_last = 0.0, wall_damper_last = 0.0;
};

struct ChainModel {
    std::vector<DescriptorSubsystem> subsystems;
    Topology topology;
    Vector theta_true;  ///< (k_m, mu_m)
    ChainParameters params;

    NdsModel assemble() const { return assemble_nds(subsystems, topology); }
};

/// Draws parameters from the spec's ranges and builds the network.
ChainModel build_chain(const ChainSpec& spec);

/// Builds the network from explicit parameters.
ChainModel build_chain_from(const ChainParameters& params, Index unknown_coupling,
                            bool split_forces, const Interval& spring_bounds,
                            const Interval& damper_bounds);

struct RelativeErrors {
    double e_eta = 0.0;
    double e_theta = 0.0;
    Index skipped = 0;  ///< entries with a (numerically) zero true value
};

/// sqrt(sum_i ((est_i - true_i) / true_i)^2), skipping entries whose true value is
/// below 1e-12 * max|true|.
double relative_error(const Vector& estimate, const Vector& truth, Index* skipped = nullptr);

RelativeErrors relative_errors(const Vector& eta_hat, const Vector& eta_true,
                               const Vector& theta_hat, const Vector& theta_true);

struct NlsOptions {
    Index max_iterations = 100;
    double lambda0 = 1e-3;
    double step_tol = 1e-10;
    double cost_tol = 1e-14;
    double penalty = 1e30;
    std::optional<Vector> theta_true;  ///< reference for the e_theta trajectory
};

struct NlsResult {
    Vector theta;
    Index iterations = 0;
    double final_cost = 0.0;
    std::vector<double> e_theta;  ///< after each iteration (entry 0: initial guess)
    bool converged = false;
};

/// Levenberg-Marquardt on the steady-state output residual over records with
/// t >= t_settle, with a forward-difference Jacobian (step 1e-6 (1 + |theta_i|)).
/// Candidates whose model cannot be solved get the penalty cost and are rejected.
NlsResult nls_baseline(const SampleDataset& dataset, const NdsModel& model_template,
                       const InputGenerator& gen, const Vector& theta_init,
                       const NlsOptions& opts = {});

/// Subsystem-level maps used by rank conditions of interconnection-free methods:
///   G_yv(s) = Cyx (sE - Axx)^-1 Bxv + Dyv,  G_zu(s) = Czx (sE - Axx)^-1 Bxu + Dzu.
CMatrix transfer_yv(const NdsModel& nds, Complex s);
CMatrix transfer_zu(const NdsModel& nds, Complex s);

/// Count of singular values above rel_tol * sigma_max.
Index numerical_rank(const CMatrix& m, double rel_tol = 1e-10);

/// Random initial guess with e_theta(init, truth) == level exactly.
Vector perturb_theta(const Vector& truth, double level, Rng& rng);

}  // namespace ndsid
