#pragma once

#include <vector>

#include "ndsid/generator.hpp"
#include "ndsid/model.hpp"
#include "ndsid/simulate.hpp"

namespace ndsid {

/// Real packing of the right tangential interpolations
///   eta_bar = col{ eta_r,1 .. eta_r,mr, [Re eta_c,1; Im eta_c,1] .. },
/// each block m_y long, so that y_s(t) = (psi(t)^T (x) I_my) eta_bar.
struct InterpolationVector {
    Vector eta_bar;
    Index my = 0;
    Index m_r = 0;
    Index m_c = 0;

    static InterpolationVector zeros(Index my, Index m_r, Index m_c);

    Index size() const { return eta_bar.size(); }
    Index modes() const { return m_r + 2 * m_c; }
    Vector real_mode(Index i) const { return eta_bar.segment(i * my, my); }
    CVector complex_mode(Index i) const;
    void set_real_mode(Index i, const Vector& v) { eta_bar.segment(i * my, my) = v; }
    void set_complex_mode(Index i, const CVector& v);
};

/// Gamma(t) = S_k (psi(t)^T (x) I_my) for one record of subsystem k.
Matrix regressor_row(const GeneratorSpectrum& spectrum, const SteadyCoefficients& coeffs,
                     const SampleRecord& sample, const SignalLayout& layout);

struct BatchEstimate {
    InterpolationVector eta;
    bool rank_ok = false;
    Index rank = 0;
    double residual_norm = 0.0;
    double condition_number = 0.0;
    std::size_t samples_used = 0;
};

struct BatchOptions {
    double rank_tol = 1e-10;
    /// Use at most this many steady-state records (in time order); 0 = all.
    std::size_t max_samples = 0;
};

/// Stacked least squares over the records with t >= dataset.t_settle.
/// Throws InsufficientData when no such record exists; a rank-deficient stack
/// is returned with rank_ok = false.
BatchEstimate estimate_batch(const SampleDataset& dataset, const GeneratorSpectrum& spectrum,
                             const SteadyCoefficients& coeffs, const SignalLayout& layout,
                             const BatchOptions& opts = {});

struct RlsState {
    InterpolationVector estimate;
    Matrix P;
    std::size_t k = 0;
    double t_settle = 0.0;
};

RlsState rls_init(Index my, Index m_r, Index m_c, double t_settle, double p0_scale = 1e8);

/// One recursive least-squares step with unit innovation weighting:
///   K = P G^T (G P G^T + I)^-1,  eta += K (y - G eta),  P = (I - K G) P, then symmetrized.
/// Throws PreSettlingSample for t < t_settle.
void rls_update(RlsState& state, const SampleRecord& sample, const GeneratorSpectrum& spectrum,
                const SteadyCoefficients& coeffs, const SignalLayout& layout);

/// Exact interpolations from the transfer matrix: eta_r,i = H(lambda_r,i) pi_r,i,
/// eta_c,i = H(lambda_c,i) pi_c,i.
InterpolationVector oracle_eta(const NdsModel& nds, const GeneratorSpectrum& spectrum);

/// Interpolations read off a steady-state matrix, [R C] = Yss T.
InterpolationVector eta_from_yss(const Matrix& yss, const GeneratorSpectrum& spectrum);

/// Noiseless steady-state prediction of every record's channels, concatenated in
/// record order, evaluated as psi-weighted sums of eta through the SIMD kernels.
class SteadyPredictor {
   public:
    SteadyPredictor(const std::vector<SampleRecord>& records, const GeneratorSpectrum& spectrum,
                    const SteadyCoefficients& coeffs, const SignalLayout& layout);

    Index observations() const { return static_cast<Index>(channel_.size()); }
    /// Observed values in the same order as predict().
    const Vector& observed() const { return observed_; }
    Vector predict(const InterpolationVector& eta) const;
    /// sum of squared differences between predict(eta) and observed().
    double residual_sum_of_squares(const InterpolationVector& eta) const;

   private:
    // psi columns grouped per global output channel, column-major per group
    std::vector<std::vector<double>> psi_by_channel_;
    std::vector<std::vector<std::size_t>> position_by_channel_;
    std::vector<Index> channel_;
    Vector observed_;
    Index modes_ = 0;
    Index my_ = 0;
};

}  // namespace ndsid
