#pragma once

#include <string>
#include <vector>

#include "ndsid/generator.hpp"
#include "ndsid/model.hpp"
#include "ndsid/stage1.hpp"

namespace ndsid {

/// Coefficient matrices of the unknown parameters and their left null spaces:
///   M = [Bxv Phi_1, ...],  N = [Dzv Phi_1, ...],  Q = [Dyv Phi_1, ...].
struct ProjectionSet {
    Matrix M, N, Q;
    Matrix U_M2, U_N2, U_Q2;
    Index r_M = 0, r_N = 0, r_Q = 0;
    double tol_M = 0.0, tol_N = 0.0, tol_Q = 0.0;
};

/// `rank_tol` < 0 uses max(rows, cols) * eps * sigma_max per matrix.
ProjectionSet build_projections(const NdsModel& nds, double rank_tol = -1.0);

/// Yss_hat = [R_hat C_hat] T^-1. The imaginary residue (max |Im|) is discarded
/// and optionally reported.
Matrix yss_from_eta(const InterpolationVector& eta, const GeneratorSpectrum& spectrum,
                    double* imag_residue = nullptr);

struct LinearSystem {
    Matrix A;
    Vector b;
};

/// Optional row weights of the dynamics / internal / output equation groups.
struct GroupScales {
    double dynamics = 1.0;
    double internal = 1.0;
    double output = 1.0;
};

/// Projected linear system Gamma x = gamma in x = [vec(X_top); vec(X_btm)].
/// Uses only Phi_0 and the fixed blocks, never the stored theta.
LinearSystem build_x_system(const NdsModel& nds, const InputGenerator& gen,
                            const ProjectionSet& proj, const Matrix& yss_hat,
                            const GroupScales& scales = {});

struct XEstimate {
    Matrix X_top, X_btm;
    bool rank_ok = false;
    Index rank = 0;
    double cond = 0.0;
    double residual = 0.0;
};

XEstimate estimate_x(const LinearSystem& sys, Index mx, Index mz, Index order,
                     double rank_tol = 1e-10);

/// Psi theta = kappa assembled from the three governing equations at X_hat.
LinearSystem build_theta_system(const NdsModel& nds, const InputGenerator& gen,
                                const Matrix& X_top, const Matrix& X_btm, const Matrix& yss_hat,
                                const GroupScales& scales = {});

struct ThetaEstimate {
    Vector theta;
    bool rank_ok = false;
    Index rank = 0;
    double cond = 0.0;
    double residual = 0.0;
};

ThetaEstimate estimate_theta(const LinearSystem& sys, double rank_tol = 1e-10);

struct Stage2Options {
    double svd_rank_tol = -1.0;  ///< null-space threshold, < 0 for the default
    double ls_rank_tol = 1e-10;  ///< relative singular value threshold of both solves
    GroupScales scales;
    bool force = false;          ///< continue to theta even when Gamma is rank deficient
    double imag_warn = 1e-8;
};

struct Stage2Report {
    Matrix Yss_hat;
    Matrix X_top, X_btm;
    Vector theta_hat;  ///< NaN entries when the theta step was skipped
    bool gamma_rank_ok = false;
    bool psi_rank_ok = false;
    double gamma_cond = 0.0;
    double psi_cond = 0.0;
    double gamma_residual = 0.0;
    double psi_residual = 0.0;
    Index gamma_rows = 0, gamma_cols = 0;
    Index r_M = 0, r_N = 0, r_Q = 0;
    double yss_imag_residue = 0.0;
    std::vector<std::string> warnings;
};

/// eta_hat -> Yss_hat -> X_hat -> theta_hat.
Stage2Report run_stage2(const NdsModel& nds, const InputGenerator& gen,
                        const GeneratorSpectrum& spectrum, const InterpolationVector& eta_hat,
                        const Stage2Options& opts = {});

struct IdentifiabilityReport {
    bool stage1_pe_hint = false;
    bool gamma_rank_ok = false;
    double gamma_cond = 0.0;
    bool psi_rank_at_truth = false;
    double psi_cond = 0.0;

    bool all_ok() const { return stage1_pe_hint && gamma_rank_ok && psi_rank_at_truth; }
};

/// Design-time check at the model's stored (true) theta using the exact Sylvester X.
IdentifiabilityReport identifiability_report(const NdsModel& nds, const InputGenerator& gen,
                                             const Stage2Options& opts = {});

}  // namespace ndsid
