#include "ndsid/stage1.hpp"

#include <algorithm>
#include <string>

#include "ndsid/errors.hpp"
#include "ndsid/kernels.hpp"

namespace ndsid {

InterpolationVector InterpolationVector::zeros(Index my, Index m_r, Index m_c) {
    InterpolationVector v;
    v.my = my;
    v.m_r = m_r;
    v.m_c = m_c;
    v.eta_bar = Vector::Zero((m_r + 2 * m_c) * my);
    return v;
}

CVector InterpolationVector::complex_mode(Index i) const {
    const Index base = (m_r + 2 * i) * my;
    CVector out(my);
    for (Index c = 0; c < my; ++c) out(c) = Complex(eta_bar(base + c), eta_bar(base + my + c));
    return out;
}

void InterpolationVector::set_complex_mode(Index i, const CVector& v) {
    const Index base = (m_r + 2 * i) * my;
    eta_bar.segment(base, my) = v.real();
    eta_bar.segment(base + my, my) = v.imag();
}

Matrix regressor_row(const GeneratorSpectrum& spectrum, const SteadyCoefficients& coeffs,
                     const SampleRecord& sample, const SignalLayout& layout) {
    if (sample.subsystem < 0 || sample.subsystem >= layout.num_subsystems())
        throw InputError("regressor_row: subsystem index out of range");
    const Index my = layout.y.back();
    const Index offset = layout.output_offset(sample.subsystem);
    const Index rows = layout.output_size(sample.subsystem);
    const Vector p = psi(spectrum, coeffs, sample.t);
    Matrix G = Matrix::Zero(rows, p.size() * my);
    for (Index i = 0; i < p.size(); ++i)
        for (Index r = 0; r < rows; ++r) G(r, i * my + offset + r) = p(i);
    return G;
}

BatchEstimate estimate_batch(const SampleDataset& dataset, const GeneratorSpectrum& spectrum,
                             const SteadyCoefficients& coeffs, const SignalLayout& layout,
                             const BatchOptions& opts) {
    const std::size_t first = dataset.first_steady_index();
    std::size_t last = dataset.records.size();
    if (opts.max_samples > 0) last = std::min(last, first + opts.max_samples);
    if (first >= last)
        throw InsufficientData("estimate_batch: no samples at or after the settling bound");

    const Index my = layout.y.back();
    const Index d = spectrum.order() * my;
    Index rows = 0;
    for (std::size_t j = first; j < last; ++j)
        rows += layout.output_size(dataset.records[j].subsystem);

    Matrix G(rows, d);
    Vector y(rows);
    Index r = 0;
    for (std::size_t j = first; j < last; ++j) {
        const auto& rec = dataset.records[j];
        const Matrix g = regressor_row(spectrum, coeffs, rec, layout);
        if (rec.y.size() != g.rows())
            throw DimensionError("estimate_batch: record " + std::to_string(j) +
                                 " has the wrong number of channels");
        G.middleRows(r, g.rows()) = g;
        y.segment(r, g.rows()) = rec.y;
        r += g.rows();
    }

    const auto ls = solve_least_squares(G, y, opts.rank_tol);
    BatchEstimate out;
    out.eta = InterpolationVector::zeros(my, spectrum.m_r(), spectrum.m_c());
    out.eta.eta_bar = ls.x;
    out.rank = ls.rank;
    out.rank_ok = ls.full_rank;
    out.residual_norm = ls.residual_norm;
    out.condition_number = ls.condition;
    out.samples_used = last - first;
    return out;
}

RlsState rls_init(Index my, Index m_r, Index m_c, double t_settle, double p0_scale) {
    if (!(p0_scale > 0.0)) throw InputError("rls_init: P(0) scale must be positive");
    RlsState s;
    s.estimate = InterpolationVector::zeros(my, m_r, m_c);
    const Index d = s.estimate.size();
    s.P = p0_scale * Matrix::Identity(d, d);
    s.t_settle = t_settle;
    return s;
}

void rls_update(RlsState& state, const SampleRecord& sample, const GeneratorSpectrum& spectrum,
                const SteadyCoefficients& coeffs, const SignalLayout& layout) {
    if (sample.t < state.t_settle)
        throw PreSettlingSample("rls_update: sample at t=" + std::to_string(sample.t) +
                                " precedes the settling bound " + std::to_string(state.t_settle));
    const Matrix G = regressor_row(spectrum, coeffs, sample, layout);
    if (G.cols() != state.P.rows()) throw DimensionError("rls_update: state dimension mismatch");
    const Matrix PGt = state.P * G.transpose();
    const Matrix S = G * PGt + Matrix::Identity(G.rows(), G.rows());
    const Matrix K = S.ldlt().solve(PGt.transpose()).transpose();
    Vector& eta = state.estimate.eta_bar;
    eta += K * (sample.y - G * eta);
    state.P -= K * (G * state.P);
    state.P = 0.5 * (state.P + state.P.transpose()).eval();
    ++state.k;
}

InterpolationVector oracle_eta(const NdsModel& nds, const GeneratorSpectrum& spectrum) {
    auto out = InterpolationVector::zeros(nds.my(), spectrum.m_r(), spectrum.m_c());
    for (Index i = 0; i < spectrum.m_r(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const CMatrix H = transfer_eval(nds, spectrum.lambda_r[k]);
        out.set_real_mode(i, (H * spectrum.pi_r[k].cast<Complex>()).real());
    }
    for (Index i = 0; i < spectrum.m_c(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.set_complex_mode(i, transfer_eval(nds, spectrum.lambda_c[k]) * spectrum.pi_c[k]);
    }
    return out;
}

InterpolationVector eta_from_yss(const Matrix& yss, const GeneratorSpectrum& spectrum) {
    if (yss.cols() != spectrum.order()) throw DimensionError("eta_from_yss: column count mismatch");
    const CMatrix RC = yss.cast<Complex>() * spectrum.T;
    auto out = InterpolationVector::zeros(yss.rows(), spectrum.m_r(), spectrum.m_c());
    for (Index i = 0; i < spectrum.m_r(); ++i) out.set_real_mode(i, RC.col(i).real());
    for (Index i = 0; i < spectrum.m_c(); ++i) out.set_complex_mode(i, RC.col(spectrum.m_r() + 2 * i));
    return out;
}

SteadyPredictor::SteadyPredictor(const std::vector<SampleRecord>& records,
                                 const GeneratorSpectrum& spectrum, const SteadyCoefficients& coeffs,
                                 const SignalLayout& layout)
    : modes_(spectrum.order()), my_(layout.y.back()) {
    const auto my = static_cast<std::size_t>(my_);
    std::vector<std::vector<Vector>> rows(my);
    position_by_channel_.assign(my, {});
    std::vector<double> obs;
    for (const auto& rec : records) {
        const Index offset = layout.output_offset(rec.subsystem);
        const Index size = layout.output_size(rec.subsystem);
        if (rec.y.size() != size) throw DimensionError("SteadyPredictor: record channel count");
        const Vector p = psi(spectrum, coeffs, rec.t);
        for (Index c = 0; c < size; ++c) {
            const auto g = static_cast<std::size_t>(offset + c);
            rows[g].push_back(p);
            position_by_channel_[g].push_back(obs.size());
            channel_.push_back(offset + c);
            obs.push_back(rec.y(c));
        }
    }
    observed_ = Eigen::Map<const Vector>(obs.data(), static_cast<Index>(obs.size()));
    psi_by_channel_.assign(my, {});
    for (std::size_t g = 0; g < my; ++g) {
        const std::size_t n = rows[g].size();
        auto& col = psi_by_channel_[g];
        col.resize(n * static_cast<std::size_t>(modes_));
        for (Index i = 0; i < modes_; ++i)
            for (std::size_t r = 0; r < n; ++r) col[static_cast<std::size_t>(i) * n + r] = rows[g][r](i);
    }
}

Vector SteadyPredictor::predict(const InterpolationVector& eta) const {
    if (eta.my != my_ || eta.modes() != modes_)
        throw DimensionError("SteadyPredictor: interpolation vector layout mismatch");
    Vector out = Vector::Zero(observations());
    std::vector<double> acc;
    for (std::size_t g = 0; g < psi_by_channel_.size(); ++g) {
        const std::size_t n = position_by_channel_[g].size();
        acc.assign(n, 0.0);
        const auto& cols = psi_by_channel_[g];
        for (Index i = 0; i < modes_; ++i) {
            const double w = eta.eta_bar(i * my_ + static_cast<Index>(g));
            kernels::axpy(w, std::span<const double>(cols.data() + static_cast<std::size_t>(i) * n, n), acc);
        }
        for (std::size_t r = 0; r < n; ++r) out(static_cast<Index>(position_by_channel_[g][r])) = acc[r];
    }
    return out;
}

double SteadyPredictor::residual_sum_of_squares(const InterpolationVector& eta) const {
    const Vector p = predict(eta);
    return kernels::sum_sq_diff(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                                std::span<const double>(observed_.data(),
                                                        static_cast<std::size_t>(observed_.size())));
}

}  // namespace ndsid
