#include "ndsid/simulate.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include <Eigen/Eigenvalues>

#include "ndsid/errors.hpp"
#include "ndsid/rng.hpp"

namespace ndsid {

namespace {

[[noreturn]] void report_collision(const NdsModel& nds, const InputGenerator& gen) {
    const CVector xi_eigs = Eigen::EigenSolver<Matrix>(gen.Xi, false).eigenvalues();
    std::vector<Complex> pencil;
    try {
        pencil = finite_generalized_eigenvalues(nds);
    } catch (const Error&) {
    }
    Complex best_xi = xi_eigs.size() > 0 ? xi_eigs(0) : Complex{};
    Complex best_pencil{std::numeric_limits<double>::quiet_NaN(), 0.0};
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < xi_eigs.size(); ++i) {
        for (auto p : pencil) {
            const double d = std::abs(xi_eigs(i) - p);
            if (d < best) {
                best = d;
                best_xi = xi_eigs(i);
                best_pencil = p;
            }
        }
    }
    throw EigenvalueCollision(
        "solve_sylvester: a generator eigenvalue coincides with a generalized eigenvalue of "
        "(Ebar, A_theta) (distance " + std::to_string(best) + ")",
        best_xi, best_pencil);
}

}  // namespace

SylvesterSolution solve_sylvester(const NdsModel& nds, const InputGenerator& gen) {
    gen.validate();
    if (gen.Pi.rows() != nds.mu())
        throw DimensionError("solve_sylvester: Pi has " + std::to_string(gen.Pi.rows()) +
                             " rows but the network has m_u=" + std::to_string(nds.mu()));
    const Index n = nds.Atheta.rows();
    const Index q = gen.order();

    SylvesterSolution sol;
    sol.mx = nds.mx();
    if (n == 0 || q == 0) {
        sol.X = Matrix::Zero(n, q);
    } else {
        const Matrix K = kron(Matrix::Identity(q, q), nds.Atheta) - kron(gen.Xi.transpose(), nds.Ebar);
        const Vector rhs = -vec(nds.Bstack * gen.Pi);
        Eigen::PartialPivLU<Matrix> lu(K);
        if (!(lu.rcond() > 1e-14)) report_collision(nds, gen);
        sol.X = unvec(lu.solve(rhs), n, q);
    }
    sol.Z = nds.Ebar * sol.X;
    sol.Yss = nds.Ctheta * sol.X + nds.Dyu * gen.Pi;
    return sol;
}

Vector steady_state_modal(const SylvesterSolution& sol, const GeneratorSpectrum& spectrum,
                          const SteadyCoefficients& coeffs, double t) {
    const CMatrix RC = sol.Yss.cast<Complex>() * spectrum.T;
    const Index mr = spectrum.m_r();
    Vector y = Vector::Zero(sol.Yss.rows());
    for (Index i = 0; i < mr; ++i)
        y += coeffs.alpha(i) * std::exp(spectrum.lambda_r[static_cast<std::size_t>(i)] * t) *
             RC.col(i).real();
    for (Index i = 0; i < spectrum.m_c(); ++i) {
        const Complex beta(coeffs.mu(i), coeffs.nu(i));
        const Complex w = std::conj(beta) * std::exp(spectrum.lambda_c[static_cast<std::size_t>(i)] * t);
        y += (w * RC.col(mr + 2 * i)).real();
    }
    return y;
}

Vector steady_state_response(const SylvesterSolution& sol, const InputGenerator& gen, double t) {
    const Vector y = sol.Yss * (expm(gen.Xi * t) * gen.xi0);
#ifndef NDEBUG
    {
        const auto sp = analyze_generator(gen);
        const Vector modal = steady_state_modal(sol, sp, coefficients(gen, sp), t);
        assert((modal - y).norm() <= 1e-9 * std::max(1.0, y.norm()));
    }
#endif
    return y;
}

ResponseSimulator::ResponseSimulator(const NdsModel& nds, const InputGenerator& gen,
                                     const Vector& x0) {
    gen.validate();
    if (x0.size() != nds.mx())
        throw DimensionError("ResponseSimulator: x0 must have m_x=" + std::to_string(nds.mx()) +
                             " entries");
    const auto r = eliminate_internal(nds);
    mx_ = nds.mx();
    const Index q = gen.order();

    Matrix Ae = r.A, Be = r.B;
    if (mx_ > 0) {
        Eigen::PartialPivLU<Matrix> lu(r.E);
        if (!(lu.rcond() > 1e-12))
            throw UnsupportedDescriptorSimulation(
                "E is singular; time-domain simulation is unavailable, sample the steady state "
                "instead");
        Ae = lu.solve(r.A);
        Be = lu.solve(r.B);
    }
    augmented_ = Matrix::Zero(mx_ + q, mx_ + q);
    augmented_.topLeftCorner(mx_, mx_) = Ae;
    augmented_.topRightCorner(mx_, q) = Be * gen.Pi;
    augmented_.bottomRightCorner(q, q) = gen.Xi;

    initial_.resize(mx_ + q);
    initial_ << x0, gen.xi0;

    output_map_.resize(r.C.rows(), mx_ + q);
    output_map_.leftCols(mx_) = r.C;
    output_map_.rightCols(q) = r.D * gen.Pi;
}

Vector ResponseSimulator::state(double t) const {
    return (expm(augmented_ * t) * initial_).head(mx_);
}

Vector ResponseSimulator::output(double t) const {
    return output_map_ * (expm(augmented_ * t) * initial_);
}

Vector full_response(const NdsModel& nds, const InputGenerator& gen, const Vector& x0, double t) {
    return ResponseSimulator(nds, gen, x0).output(t);
}

namespace {

void validate_window(const SamplingWindow& w, bool need_end) {
    if (!(w.interval_min > 0.0) || !(w.interval_max >= w.interval_min))
        throw InputError("schedule: need 0 < interval_min <= interval_max for subsystem " +
                         std::to_string(w.subsystem));
    if (need_end && !(w.t_end > w.t_start))
        throw InputError("schedule: empty window for subsystem " + std::to_string(w.subsystem));
}

struct Stream {
    Index subsystem;
    Rng rng;
    std::uniform_real_distribution<double> gap;
    double t;

    Stream(const SamplingWindow& w, std::uint64_t seed)
        : subsystem(w.subsystem),
          rng(make_rng(seed, kScheduleStream + static_cast<std::uint64_t>(w.subsystem))),
          gap(w.interval_min, w.interval_max),
          t(w.t_start) {}

    double advance() { return t += gap(rng); }
};

bool entry_less(const ScheduleEntry& a, const ScheduleEntry& b) {
    return a.t < b.t || (a.t == b.t && a.subsystem < b.subsystem);
}

}  // namespace

std::vector<ScheduleEntry> make_schedule(const ScheduleSpec& spec, std::uint64_t seed) {
    std::vector<ScheduleEntry> out;
    for (const auto& w : spec.windows) {
        validate_window(w, true);
        Stream s(w, seed);
        for (double t = s.advance(); t <= w.t_end; t = s.advance()) out.push_back({w.subsystem, t});
    }
    if (out.empty()) throw InputError("schedule: no sampling instant falls inside any window");
    std::stable_sort(out.begin(), out.end(), entry_less);
    return out;
}

std::vector<ScheduleEntry> make_schedule_until(const ScheduleSpec& spec, double t_settle,
                                               Index steady_samples, std::uint64_t seed) {
    if (spec.windows.empty()) throw InputError("schedule: no sampling windows");
    std::vector<Stream> streams;
    for (const auto& w : spec.windows) {
        validate_window(w, false);
        streams.emplace_back(w, seed);
    }
    auto later = [](const std::pair<ScheduleEntry, std::size_t>& a,
                    const std::pair<ScheduleEntry, std::size_t>& b) { return entry_less(b.first, a.first); };
    std::priority_queue<std::pair<ScheduleEntry, std::size_t>,
                        std::vector<std::pair<ScheduleEntry, std::size_t>>, decltype(later)>
        heap(later);
    for (std::size_t i = 0; i < streams.size(); ++i)
        heap.push({{streams[i].subsystem, streams[i].advance()}, i});

    std::vector<ScheduleEntry> out;
    Index steady = 0;
    while (steady < steady_samples) {
        auto [entry, i] = heap.top();
        heap.pop();
        out.push_back(entry);
        if (entry.t >= t_settle) ++steady;
        heap.push({{streams[i].subsystem, streams[i].advance()}, i});
    }
    return out;
}

std::size_t SampleDataset::first_steady_index() const {
    auto it = std::lower_bound(records.begin(), records.end(), t_settle,
                               [](const SampleRecord& r, double t) { return r.t < t; });
    return static_cast<std::size_t>(it - records.begin());
}

SampleDataset measure(const NdsModel& nds, const InputGenerator& gen, const Vector& x0,
                      const std::vector<ScheduleEntry>& schedule, double noise_std,
                      std::uint64_t seed, const MeasureOptions& opts) {
    if (!(noise_std >= 0.0)) throw InputError("measure: noise standard deviation must be >= 0");
    if (!std::is_sorted(schedule.begin(), schedule.end(), entry_less))
        throw InputError("measure: schedule must be sorted by time");

    const auto& layout = nds.layout;
    for (const auto& e : schedule) {
        if (e.subsystem < 0 || e.subsystem >= layout.num_subsystems())
            throw InputError("measure: subsystem index " + std::to_string(e.subsystem) +
                             " out of range");
        if (layout.output_size(e.subsystem) == 0)
            throw InputError("measure: subsystem " + std::to_string(e.subsystem) +
                             " has no external output");
        if (e.t < 0.0) throw InputError("measure: negative sampling time");
    }

    SampleDataset ds;
    ds.noise_variance = noise_std * noise_std;
    ds.t_settle = opts.t_settle;
    ds.rng_seed = seed;
    ds.records.reserve(schedule.size());

    std::optional<ResponseSimulator> sim;
    std::optional<SylvesterSolution> steady;
    if (opts.mode == SimulationMode::Full) {
        sim.emplace(nds, gen, x0);
        try {
            steady = solve_sylvester(nds, gen);
            ds.transient_bound =
                (sim->output(opts.t_settle) - steady_state_response(*steady, gen, opts.t_settle)).norm();
        } catch (const EigenvalueCollision&) {
        }
    } else {
        for (const auto& e : schedule)
            if (e.t < opts.t_settle)
                throw InputError("measure: steady-state-only sampling requires t >= t_settle");
        steady = solve_sylvester(nds, gen);
    }

    std::vector<Rng> noise_rng;
    std::vector<std::normal_distribution<double>> noise;
    for (Index k = 0; k < layout.num_subsystems(); ++k) {
        noise_rng.push_back(make_rng(seed, kNoiseStream + static_cast<std::uint64_t>(k)));
        noise.emplace_back(0.0, 1.0);
    }

    for (const auto& e : schedule) {
        const Vector y = sim ? sim->output(e.t) : steady_state_response(*steady, gen, e.t);
        SampleRecord rec;
        rec.subsystem = e.subsystem;
        rec.t = e.t;
        rec.y = y.segment(layout.output_offset(e.subsystem), layout.output_size(e.subsystem));
        if (noise_std > 0.0) {
            const auto k = static_cast<std::size_t>(e.subsystem);
            for (Index c = 0; c < rec.y.size(); ++c) rec.y(c) += noise_std * noise[k](noise_rng[k]);
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

}  // namespace ndsid
