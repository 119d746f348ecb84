// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "ndsid/experiment.hpp"
#include "ndsid/stage2.hpp"

using namespace ndsid;
namespace fs = std::filesystem;

namespace {

const fs::path kProfiles = fs::path(NDSID_SOURCE_DIR) / "profiles";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// every model built by the criteria below, audited by the annihilation check
std::vector<NdsModel> g_models;

struct TestModel {
    NdsModel nds;
    InputGenerator gen;
};

std::vector<TestModel> sylvester_models() {
    std::vector<TestModel> out;
    for (Index n = 2; n <= 10; ++n) {
        auto nds = fixtures::chain(n, static_cast<std::uint64_t>(n)).assemble();
        auto gen = n % 2 ? fixtures::oscillator()
                         : fixtures::random_generator(static_cast<std::uint64_t>(n), nds.mu(), 2, true);
        out.push_back({std::move(nds), std::move(gen)});
    }
    for (std::uint64_t s = 1; out.size() < 20; ++s) {
        auto nds = fixtures::random_model(100 + s, s % 3 == 0);
        auto gen = fixtures::random_generator(100 + s, nds.mu(), 1 + static_cast<Index>(s % 2), s % 2 == 0);
        out.push_back({std::move(nds), std::move(gen)});
    }
    return out;
}

Outcome criterion1() {
    double worst = 0.0;
    const auto models = sylvester_models();
    for (const auto& m : models) {
        g_models.push_back(m.nds);
        const auto sp = analyze_generator(m.gen);
        const Matrix yss = solve_sylvester(m.nds, m.gen).Yss;
        const Matrix rc = yss_from_eta(oracle_eta(m.nds, sp), sp);
        worst = std::max(worst, (yss - rc).norm() / std::max(yss.norm(), 1e-300));
    }
    return {worst <= 1e-9, fmt("max relative difference %.3g over 20 models", worst)};
}

Outcome criterion2() {
    double worst = 0.0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const auto nds = s <= 4 ? fixtures::chain(static_cast<Index>(2 + s), s).assemble()
                                : fixtures::random_model(200 + s, s % 2 == 0);
        const auto gen = fixtures::random_generator(200 + s, nds.mu(), 1 + static_cast<Index>(s % 3), s % 2 == 1);
        g_models.push_back(nds);
        const auto sp = analyze_generator(gen);
        const auto c = coefficients(gen, sp);
        const auto sol = solve_sylvester(nds, gen);
        for (int i = 0; i < 100; ++i) {
            const double t = 0.3 * i;
            const Vector a = sol.Yss * (expm(gen.Xi * t) * gen.xi0);
            const Vector b = steady_state_modal(sol, sp, c, t);
            worst = std::max(worst, (a - b).norm() / std::max(1.0, a.norm()));
        }
    }
    return {worst <= 1e-9, fmt("max relative difference %.3g on 10 models x 100 times", worst)};
}

Outcome criterion3() {
    const auto nds = fixtures::random_model(31, false, true);
    g_models.push_back(nds);
    const auto gen = fixtures::random_generator(31, nds.mu(), 2);
    const auto sp = analyze_generator(gen);
    const auto c = coefficients(gen, sp);
    const auto oracle = oracle_eta(nds, sp);
    const double t_settle = 20.0;
    ScheduleSpec spec;
    for (Index k = 0; k < 3; ++k) spec.windows.push_back({k, 0.0, 0.0, 0.1, 5.0});
    auto sched = make_schedule_until(spec, t_settle, 3 * oracle.size() + 10, 7);
    std::erase_if(sched, [&](const ScheduleEntry& e) { return e.t < t_settle; });
    MeasureOptions mo;
    mo.mode = SimulationMode::SteadyOnly;
    mo.t_settle = t_settle;
    const auto ds = measure(nds, gen, Vector::Zero(nds.mx()), sched, 0.0, 7, mo);

    const auto be = estimate_batch(ds, sp, c, nds.layout);
    const double e_batch = (be.eta.eta_bar - oracle.eta_bar).norm() / oracle.eta_bar.norm();
    auto st = rls_init(nds.my(), sp.m_r(), sp.m_c(), t_settle, 1e8);
    for (std::size_t i = ds.first_steady_index(); i < ds.records.size(); ++i)
        rls_update(st, ds.records[i], sp, c, nds.layout);
    const double e_rls = (st.estimate.eta_bar - be.eta.eta_bar).norm() / be.eta.eta_bar.norm();
    const bool ok = nds.layout.num_subsystems() == 3 && be.rank_ok && e_batch <= 1e-8 && e_rls <= 1e-6 &&
                    ds.steady_count() >= static_cast<std::size_t>(3 * oracle.size());
    return {ok, fmt("batch vs oracle %.3g", e_batch) + fmt(", RLS vs batch %.3g", e_rls) +
                    ", " + std::to_string(ds.steady_count()) + " steady samples for dim " +
                    std::to_string(oracle.size())};
}

Outcome criterion4() {
    std::string detail;
    bool ok = true;
    for (int n : {6, 10}) {
        const auto cfg = ExperimentConfig::load(
            kProfiles / "chain6_smoke.json",
            {"model.chain.n_carts=" + std::to_string(n), "noise_variance=0", "simulation=\"steady\""});
        const auto p = build_problem(cfg);
        g_models.push_back(p.nds);
        const auto idr = identifiability_report(p.nds, p.gen, cfg.stage2);
        const auto ds = generate_dataset(p, cfg, cfg.seed, cfg.steady_samples);
        const auto id = identify(p, ds, cfg);
        const double e = id.sweep.back().e_theta;
        ok = ok && idr.all_ok() && e <= 1e-6;
        detail += "n=" + std::to_string(n) + fmt(" e_theta %.3g", e) +
                  (idr.all_ok() ? "" : " (identifiability check failed)") + (n == 6 ? ", " : "");
    }
    return {ok, detail};
}

Outcome criterion5() {
    const auto cfg = ExperimentConfig::load(kProfiles / "chain10_consistency.json");
    const auto p = build_problem(cfg);
    g_models.push_back(p.nds);
    const auto r = montecarlo(p, cfg);
    bool ok = r.points.size() == 3 && cfg.trials == 50;
    std::string detail = "median e_eta";
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        detail += fmt(" %.3g", r.points[i].median_e_eta);
        if (i && !(r.points[i].median_e_eta < r.points[i - 1].median_e_eta)) ok = false;
    }
    detail += ", median e_theta";
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        detail += fmt(" %.3g", r.points[i].median_e_theta);
        if (i && !(r.points[i].median_e_theta < r.points[i - 1].median_e_theta)) ok = false;
    }
    if (!r.points.empty()) {
        const auto& last = r.points.back();
        double worst = 0.0;
        for (Index i = 0; i < p.theta_true.size(); ++i)
            worst = std::max(worst, std::abs(last.mean_theta(i) - p.theta_true(i)) / last.std_error_theta(i));
        ok = ok && worst <= 3.0 && last.failures == 0;
        detail += fmt(", max |bias|/SE %.2g", worst) + ", failures " + std::to_string(last.failures);
    }
    return {ok, detail};
}

Outcome criterion6() {
    ChainSpec spec;
    spec.n_carts = 100;
    const auto nds = build_chain(spec).assemble();
    g_models.push_back(nds);
    auto rng = make_rng(6, 0x6000);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    Index max_yv = 0, max_zu = 0;
    for (int i = 0; i < 3; ++i) {
        const Complex s(u(rng), u(rng));
        max_yv = std::max(max_yv, numerical_rank(transfer_yv(nds, s)));
        max_zu = std::max(max_zu, numerical_rank(transfer_zu(nds, s)));
    }
    return {max_yv <= 2 && max_zu <= 2,
            "rank G_yv " + std::to_string(max_yv) + ", rank G_zu " + std::to_string(max_zu) +
                " (m_v=" + std::to_string(nds.mv()) + ", m_z=" + std::to_string(nds.mz()) + ")"};
}

Outcome criterion7() {
    auto cfg = ExperimentConfig::load(kProfiles / "chain6_smoke.json");
    cfg.nls.levels = {0.5};
    cfg.nls.inits = 5;
    const auto p = build_problem(cfg);
    g_models.push_back(p.nds);
    int worse = 0;
    std::string detail;
    for (int t = 0; t < 10; ++t) {
        auto trial = cfg;
        trial.seed = derive_seed(cfg.seed, kTrialStream + static_cast<std::uint64_t>(t));
        const auto ds = generate_dataset(p, trial, trial.seed, trial.steady_samples);
        const double two_stage = identify(p, ds, trial).sweep.back().e_theta;
        const double nls = compare_nls(p, ds, trial).front().nls_e_theta;
        if (nls > two_stage) ++worse;
        detail += fmt(" %.2g", nls) + fmt("/%.2g", two_stage);
    }
    return {worse >= 6, "NLS worse in " + std::to_string(worse) + "/10 trials (nls/two-stage:" + detail + ")"};
}

Outcome criterion8() {
    const auto cfg = ExperimentConfig::load(kProfiles / "chain100.json");
    const auto p = build_problem(cfg);
    g_models.push_back(p.nds);
    const Matrix yss = solve_sylvester(p.nds, p.gen).Yss;
    // one period of the 0.32 rad/s generator
    const double period = 2.0 * std::acos(-1.0) / 0.32;
    Vector peak = Vector::Zero(yss.rows());
    for (int i = 0; i < 2000; ++i) {
        const Vector y = yss * (expm(p.gen.Xi * (period * i / 2000.0)) * p.gen.xi0);
        peak = peak.cwiseMax(y.cwiseAbs());
    }
    std::string detail = "peak amplitudes";
    for (Index i = 0; i < peak.size(); ++i) detail += fmt(" %.4g", peak(i));
    return {peak.minCoeff() >= 0.2 && peak.maxCoeff() <= 10.0, detail};
}

Outcome criterion9() {
    for (std::uint64_t s = 1; s <= 10; ++s) g_models.push_back(fixtures::random_model(900 + s, s % 2 == 0));
    double worst = 0.0;
    for (const auto& nds : g_models) {
        const auto p = build_projections(nds);
        auto max_abs = [](const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; };
        for (const auto& phi : nds.topology.basis) {
            worst = std::max(worst, max_abs(p.U_M2.transpose() * nds.Bxv * phi));
            worst = std::max(worst, max_abs(p.U_N2.transpose() * nds.Dzv * phi));
            worst = std::max(worst, max_abs(p.U_Q2.transpose() * nds.Dyv * phi));
        }
    }
    return {worst <= 1e-10,
            fmt("max residual %.3g over ", worst) + std::to_string(g_models.size()) + " models"};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "steady-state matrix vs interpolations", 10, criterion1},
        {2, "matrix vs modal steady-state response", 5, criterion2},
        {3, "stage-1 oracle and RLS equivalence", 5, criterion3},
        {4, "noiseless end-to-end exactness", 30, criterion4},
        {5, "Monte Carlo consistency n=10", 600, criterion5},
        {6, "subsystem map rank audit n=100", 60, criterion6},
        {7, "NLS at 50% init vs two-stage", 600, criterion7},
        {8, "n=100 amplitude envelope", 120, criterion8},
        {9, "projection annihilation", 5, criterion9},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("criterion %d %s  %s: %s [%.1f s, limit %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str(), secs, c.limit_s, in_time ? "" : ", too slow");
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
