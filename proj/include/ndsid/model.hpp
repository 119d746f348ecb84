#pragma once

#include <optional>
#include <vector>

#include "ndsid/linalg.hpp"

namespace ndsid {

struct SubsystemDims {
    Index nx = 0;  ///< states
    Index nv = 0;  ///< internal inputs
    Index nu = 0;  ///< external inputs
    Index nz = 0;  ///< internal outputs
    Index ny = 0;  ///< external outputs
};

/// One node of the network in descriptor form:
///   E x' = Axx x + Bxv v + Bxu u,  z = Czx x + Dzv v + Dzu u,  y = Cyx x + Dyv v + Dyu u (+ noise).
struct DescriptorSubsystem {
    Matrix E, Axx, Bxv, Bxu;
    Matrix Czx, Dzv, Dzu;
    Matrix Cyx, Dyv, Dyu;

    /// All-zero subsystem with E = I.
    static DescriptorSubsystem zeros(const SubsystemDims& d);

    /// Dimensions read from E, Bxv, Bxu, Czx and Cyx.
    SubsystemDims dims() const;

    /// Throws DimensionError naming `index` if any block disagrees with dims().
    void validate(Index index) const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Affine interconnection Phi(theta) = Phi_0 + sum_i theta_i Phi_i, shape m_v x m_z.
struct Topology {
    Matrix phi0;
    std::vector<Matrix> basis;
    Vector theta;
    std::vector<Interval> bounds;

    Index num_params() const { return static_cast<Index>(basis.size()); }
    void validate() const;
};

Matrix phi_of_theta(const Topology& topology, const Vector& theta);

/// Offsets of each subsystem's slice inside the stacked signal vectors.
struct SignalLayout {
    std::vector<Index> x, v, u, z, y;  ///< size N + 1; entry N holds the total
    Index num_subsystems() const { return static_cast<Index>(x.size()) - 1; }
    Index output_offset(Index k) const { return y.at(k); }
    Index output_size(Index k) const { return y.at(k + 1) - y.at(k); }
};

/// Whole network with block-diagonal stacks and the derived descriptor pencil
///   Ebar [x; z]' = A_theta [x; z] + B_stack u,   y = C_theta [x; z] + Dyu u.
struct NdsModel {
    std::vector<DescriptorSubsystem> subsystems;
    Topology topology;
    SignalLayout layout;

    Matrix E, Axx, Bxv, Bxu, Czx, Dzv, Dzu, Cyx, Dyv, Dyu;
    Matrix phi;  ///< Phi(topology.theta)
    Matrix Ebar, Atheta, Ctheta, Bstack;

    Index mx() const { return Axx.rows(); }
    Index mv() const { return Bxv.cols(); }
    Index mu() const { return Bxu.cols(); }
    Index mz() const { return Czx.rows(); }
    Index my() const { return Cyx.rows(); }

    /// Same network re-assembled at another parameter vector.
    NdsModel with_theta(const Vector& theta) const;
};

NdsModel assemble_nds(const std::vector<DescriptorSubsystem>& subsystems, const Topology& topology);

struct RegularityOptions {
    double settle_fraction = 1e-3;
    std::optional<double> settling_override;  ///< user supplied bound, wins when set
    unsigned seed = 7;
};

struct Diagnostics {
    bool wellposed = false;
    bool regular_pencil = false;
    bool stable = false;
    std::optional<double> settling_bound;
    std::vector<Complex> finite_eigenvalues;
};

/// Well-posedness of I - Dzv Phi, pencil regularity (random-point test) and
/// stability from the finite generalized eigenvalues of (Ebar, A_theta).
Diagnostics check_regularity(const NdsModel& nds, const RegularityOptions& opts = {});

/// Finite generalized eigenvalues of (Ebar, A_theta) from the QZ decomposition.
std::vector<Complex> finite_generalized_eigenvalues(const NdsModel& nds);

/// H(s) = C_theta (s Ebar - A_theta)^-1 B_stack + Dyu.
CMatrix transfer_eval(const NdsModel& nds, Complex s);

/// z-eliminated state-space form  E x' = A x + B u, y = C x + D u (E not inverted).
struct EliminatedRealization {
    Matrix E, A, B, C, D;
};

/// Throws WellPosednessError when I - Dzv Phi is singular.
EliminatedRealization eliminate_internal(const NdsModel& nds);

}  // namespace ndsid
