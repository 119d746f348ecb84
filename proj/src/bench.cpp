#include "ndsid/bench.hpp"

#include <cmath>

#include <Eigen/SVD>
#include <limits>
#include <string>

#include "ndsid/errors.hpp"
#include "ndsid/rng.hpp"

namespace ndsid {

void ChainSpec::validate() const {
    if (n_carts < 2) throw InputError("chain: need at least two carts");
    const Index m = coupling();
    if (m < 1 || m > n_carts - 1)
        throw InputError("chain: unknown coupling must lie in [1, n_carts - 1]");
    for (const auto& r : {mass_range, spring_range, damper_range})
        if (!(r.lo > 0.0) || r.hi < r.lo) throw InputError("chain: ranges must be positive intervals");
}

ChainModel build_chain(const ChainSpec& spec) {
    spec.validate();
    auto rng = make_rng(spec.seed, kChainStream);
    auto draw = [&rng](const Interval& r) {
        return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
    };
    ChainParameters p;
    const auto n = static_cast<std::size_t>(spec.n_carts);
    for (std::size_t i = 0; i < n; ++i) p.masses.push_back(draw(spec.mass_range));
    for (std::size_t j = 0; j + 1 < n; ++j) p.springs.push_back(draw(spec.spring_range));
    for (std::size_t j = 0; j + 1 < n; ++j) p.dampers.push_back(draw(spec.damper_range));
    if (spec.wall_anchoring) {
        p.wall_spring_first = draw(spec.spring_range);
        p.wall_damper_first = draw(spec.damper_range);
        p.wall_spring_last = draw(spec.spring_range);
        p.wall_damper_last = draw(spec.damper_range);
    }
    return build_chain_from(p, spec.coupling(), spec.split_forces, spec.spring_range,
                            spec.damper_range);
}

ChainModel build_chain_from(const ChainParameters& params, Index unknown_coupling,
                            bool split_forces, const Interval& spring_bounds,
                            const Interval& damper_bounds) {
    const Index n = static_cast<Index>(params.masses.size());
    if (n < 2) throw InputError("chain: need at least two carts");
    if (static_cast<Index>(params.springs.size()) != n - 1 ||
        static_cast<Index>(params.dampers.size()) != n - 1)
        throw InputError("chain: need n-1 springs and dampers");
    if (unknown_coupling < 1 || unknown_coupling > n - 1)
        throw InputError("chain: unknown coupling out of range");

    const Index per_v = split_forces ? 2 : 1;
    ChainModel out;
    for (Index i = 0; i < n; ++i) {
        const bool forced = i == 0 || i == n - 1;
        SubsystemDims d{2, per_v, forced ? 1 : 0, 2, forced ? 1 : 0};
        auto s = DescriptorSubsystem::zeros(d);
        s.E(1, 1) = params.masses[static_cast<std::size_t>(i)];
        s.Axx(0, 1) = 1.0;
        s.Bxv.row(1).setOnes();
        s.Czx.setIdentity();
        if (forced) {
            s.Bxu(1, 0) = 1.0;
            s.Cyx(0, 0) = 1.0;
        }
        out.subsystems.push_back(std::move(s));
    }

    // v rows: elastic (and viscous) force of cart i; z columns: p_i, q_i.
    auto elastic_row = [&](Index i) { return per_v * i; };
    auto viscous_row = [&](Index i) { return per_v * i + (split_forces ? 1 : 0); };
    auto pos = [](Index i) { return 2 * i; };
    auto vel = [](Index i) { return 2 * i + 1; };

    const Index mv = per_v * n, mz = 2 * n;
    Matrix phi0 = Matrix::Zero(mv, mz);
    Matrix phi_k = Matrix::Zero(mv, mz);
    Matrix phi_mu = Matrix::Zero(mv, mz);
    auto couple = [&](Matrix& target_k, Matrix& target_mu, Index a, Index b, double k, double mu) {
        target_k(elastic_row(a), pos(a)) -= k;
        target_k(elastic_row(a), pos(b)) += k;
        target_k(elastic_row(b), pos(b)) -= k;
        target_k(elastic_row(b), pos(a)) += k;
        target_mu(viscous_row(a), vel(a)) -= mu;
        target_mu(viscous_row(a), vel(b)) += mu;
        target_mu(viscous_row(b), vel(b)) -= mu;
        target_mu(viscous_row(b), vel(a)) += mu;
    };
    for (Index j = 0; j + 1 < n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        if (j + 1 == unknown_coupling)
            couple(phi_k, phi_mu, j, j + 1, 1.0, 1.0);
        else
            couple(phi0, phi0, j, j + 1, params.springs[jj], params.dampers[jj]);
    }
    phi0(elastic_row(0), pos(0)) -= params.wall_spring_first;
    phi0(viscous_row(0), vel(0)) -= params.wall_damper_first;
    phi0(elastic_row(n - 1), pos(n - 1)) -= params.wall_spring_last;
    phi0(viscous_row(n - 1), vel(n - 1)) -= params.wall_damper_last;

    const auto m = static_cast<std::size_t>(unknown_coupling - 1);
    out.topology.phi0 = phi0;
    out.topology.basis = {phi_k, phi_mu};
    out.theta_true = Vector(2);
    out.theta_true << params.springs[m], params.dampers[m];
    out.topology.theta = out.theta_true;
    out.topology.bounds = {
        {std::min(spring_bounds.lo, out.theta_true(0)), std::max(spring_bounds.hi, out.theta_true(0))},
        {std::min(damper_bounds.lo, out.theta_true(1)), std::max(damper_bounds.hi, out.theta_true(1))}};
    out.params = params;
    return out;
}

double relative_error(const Vector& estimate, const Vector& truth, Index* skipped) {
    if (estimate.size() != truth.size()) throw DimensionError("relative_error: length mismatch");
    const double scale = truth.size() ? truth.cwiseAbs().maxCoeff() : 0.0;
    double s = 0.0;
    Index skip = 0;
    for (Index i = 0; i < truth.size(); ++i) {
        if (std::abs(truth(i)) <= 1e-12 * scale || truth(i) == 0.0) {
            ++skip;
            continue;
        }
        const double r = (estimate(i) - truth(i)) / truth(i);
        s += r * r;
    }
    if (skipped) *skipped = skip;
    return std::sqrt(s);
}

RelativeErrors relative_errors(const Vector& eta_hat, const Vector& eta_true,
                               const Vector& theta_hat, const Vector& theta_true) {
    RelativeErrors e;
    Index s1 = 0, s2 = 0;
    e.e_eta = relative_error(eta_hat, eta_true, &s1);
    e.e_theta = relative_error(theta_hat, theta_true, &s2);
    e.skipped = s1 + s2;
    return e;
}

namespace {

CMatrix subsystem_map(const NdsModel& nds, Complex s, const Matrix& C, const Matrix& B, const Matrix& D) {
    const CMatrix pencil = s * nds.E.cast<Complex>() - nds.Axx.cast<Complex>();
    Eigen::PartialPivLU<CMatrix> lu(pencil);
    return C.cast<Complex>() * lu.solve(B.cast<Complex>()) + D.cast<Complex>();
}

}  // namespace

CMatrix transfer_yv(const NdsModel& nds, Complex s) {
    return subsystem_map(nds, s, nds.Cyx, nds.Bxv, nds.Dyv);
}

CMatrix transfer_zu(const NdsModel& nds, Complex s) {
    return subsystem_map(nds, s, nds.Czx, nds.Bxu, nds.Dzu);
}

Index numerical_rank(const CMatrix& m, double rel_tol) {
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<CMatrix> svd(m);
    const auto& sv = svd.singularValues();
    Index r = 0;
    for (Index i = 0; i < sv.size(); ++i) r += sv(i) > rel_tol * sv(0) ? 1 : 0;
    return r;
}

Vector perturb_theta(const Vector& truth, double level, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector dir(truth.size());
    do {
        for (Index i = 0; i < dir.size(); ++i) dir(i) = g(rng);
    } while (dir.norm() == 0.0);
    dir *= level / dir.norm();
    return truth.array() * (1.0 + dir.array());
}

namespace {

class SteadyResidual {
   public:
    SteadyResidual(const SampleDataset& ds, const NdsModel& tmpl, const InputGenerator& gen)
        : tmpl_(tmpl),
          gen_(gen),
          spectrum_(analyze_generator(gen)),
          coeffs_(coefficients(gen, spectrum_)),
          predictor_(steady_records(ds), spectrum_, coeffs_, tmpl.layout) {
        if (predictor_.observations() == 0)
            throw InsufficientData("nls_baseline: no samples at or after the settling bound");
    }

    /// Predictions at theta; false if the candidate model cannot be solved.
    bool predict(const Vector& theta, Vector& out) const {
        try {
            const auto sol = solve_sylvester(tmpl_.with_theta(theta), gen_);
            out = predictor_.predict(eta_from_yss(sol.Yss, spectrum_));
            return out.allFinite();
        } catch (const Error&) {
            return false;
        }
    }

    const Vector& observed() const { return predictor_.observed(); }

   private:
    static std::vector<SampleRecord> steady_records(const SampleDataset& ds) {
        return {ds.records.begin() + static_cast<std::ptrdiff_t>(ds.first_steady_index()),
                ds.records.end()};
    }

    const NdsModel& tmpl_;
    const InputGenerator& gen_;
    GeneratorSpectrum spectrum_;
    SteadyCoefficients coeffs_;
    SteadyPredictor predictor_;
};

}  // namespace

NlsResult nls_baseline(const SampleDataset& dataset, const NdsModel& model_template,
                       const InputGenerator& gen, const Vector& theta_init,
                       const NlsOptions& opts) {
    if (theta_init.size() != model_template.topology.num_params())
        throw DimensionError("nls_baseline: theta_init has the wrong length");
    const SteadyResidual model(dataset, model_template, gen);
    const Vector& y = model.observed();
    const Vector reference = opts.theta_true ? *opts.theta_true : model_template.topology.theta;

    NlsResult res;
    res.theta = theta_init;
    Vector pred;
    auto cost_of = [&](const Vector& th, Vector& p) {
        if (!model.predict(th, p)) return opts.penalty;
        return (y - p).squaredNorm();
    };
    double cost = cost_of(res.theta, pred);
    res.e_theta.push_back(relative_error(res.theta, reference));
    const double tiny = 1e-24 * static_cast<double>(y.size());
    double lambda = opts.lambda0;
    const Index p = theta_init.size();

    while (res.iterations < opts.max_iterations && cost > tiny && cost < opts.penalty) {
        Matrix J(y.size(), p);
        bool jac_ok = true;
        for (Index i = 0; i < p && jac_ok; ++i) {
            Vector th = res.theta;
            const double h = 1e-6 * (1.0 + std::abs(th(i)));
            th(i) += h;
            Vector pi;
            if (!model.predict(th, pi)) {
                jac_ok = false;
                break;
            }
            J.col(i) = (pi - pred) / h;
        }
        if (!jac_ok) break;

        const Matrix JtJ = J.transpose() * J;
        const Vector g = J.transpose() * (y - pred);
        Vector diag = JtJ.diagonal().cwiseMax(1e-12 * std::max(1.0, JtJ.diagonal().maxCoeff()));

        bool accepted = false;
        Vector step;
        double new_cost = cost;
        Vector new_pred;
        while (lambda < 1e16) {
            Matrix Aug = JtJ;
            Aug.diagonal() += lambda * diag;
            step = Aug.ldlt().solve(g);
            const Vector candidate = res.theta + step;
            new_cost = cost_of(candidate, new_pred);
            if (new_cost < cost) {
                accepted = true;
                res.theta = candidate;
                lambda = std::max(lambda / 10.0, 1e-12);
                break;
            }
            lambda *= 10.0;
        }
        ++res.iterations;
        if (!accepted) {
            res.converged = true;
            break;
        }
        const double decrease = cost - new_cost;
        cost = new_cost;
        pred = new_pred;
        res.e_theta.push_back(relative_error(res.theta, reference));
        if (step.norm() <= opts.step_tol * (1.0 + res.theta.norm()) || decrease <= opts.cost_tol * cost) {
            res.converged = true;
            break;
        }
    }
    if (cost <= tiny) res.converged = true;
    res.final_cost = cost;
    return res;
}

}  // namespace ndsid
