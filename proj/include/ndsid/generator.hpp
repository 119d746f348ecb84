#pragma once

#include <vector>

#include "ndsid/linalg.hpp"

namespace ndsid {

/// Autonomous input generator  xi' = Xi xi,  u = Pi xi.
struct InputGenerator {
    Matrix Xi;
    Matrix Pi;
    Vector xi0;

    Index order() const { return Xi.rows(); }
    void validate() const;
};

/// Eigenstructure of Xi in canonical order: real eigenvalues ascending, then
/// complex pairs sorted by (omega, sigma), each stored through its omega > 0 member.
///
/// `modal` is the real similarity V with Xi = V J V^-1, where J holds the real
/// eigenvalues and 2x2 blocks [[sigma, omega], [-omega, sigma]]. The complex
/// transform is T = V diag(I, [[1, 1], [j, -j]], ...), so Xi = T Lambda T^-1 and
/// Pi T = [pi_r..., pi_c1, conj(pi_c1), ...].
struct GeneratorSpectrum {
    std::vector<double> lambda_r;
    std::vector<Complex> lambda_c;
    std::vector<Vector> pi_r;
    std::vector<CVector> pi_c;
    Matrix modal;
    Matrix modal_inv;
    Matrix J;
    CMatrix T;
    CMatrix T_inv;
    CVector Lambda;
    std::vector<Index> ordering;  ///< source index (state or eigen-solver) of each canonical mode

    Index m_r() const { return static_cast<Index>(lambda_r.size()); }
    Index m_c() const { return static_cast<Index>(lambda_c.size()); }
    Index order() const { return m_r() + 2 * m_c(); }
};

/// Coefficients of xi(0) in the canonical modal coordinates.
struct SteadyCoefficients {
    Vector alpha;      ///< real modes
    Vector mu, nu;     ///< complex modes, beta_i = mu_i + j nu_i
    Vector phase;      ///< atan2(nu, mu)
    Vector amplitude;  ///< |beta_i|
};

/// Throws AssumptionViolation when two eigenvalues are closer than 1e-8 * ||Xi||.
GeneratorSpectrum analyze_generator(const InputGenerator& gen);

SteadyCoefficients coefficients(const InputGenerator& gen, const GeneratorSpectrum& spectrum);

/// Inverse of coefficients(): V * col(alpha, [mu; nu]...).
Vector reconstruct_xi0(const GeneratorSpectrum& spectrum, const SteadyCoefficients& coeffs);

/// Regressor psi(t): alpha_i e^{lambda_i t} for real modes, then per complex pair
///   [ |beta| e^{sigma t} cos(omega t - phi),  -|beta| e^{sigma t} sin(omega t - phi) ].
Vector psi(const GeneratorSpectrum& spectrum, const SteadyCoefficients& coeffs, double t);

/// u(t) = Pi expm(Xi t) xi(0).
Vector input_u(const InputGenerator& gen, double t);

}  // namespace ndsid
