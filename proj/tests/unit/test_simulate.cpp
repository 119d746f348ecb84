#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "ndsid/errors.hpp"
#include "ndsid/simulate.hpp"

using namespace ndsid;

namespace {

// Yss rebuilt as [R C] T^-1 from directional transfer evaluations.
Matrix yss_from_transfer(const NdsModel& nds, const InputGenerator& gen) {
    const auto sp = analyze_generator(gen);
    CMatrix RC(nds.my(), sp.order());
    for (Index i = 0; i < sp.m_r(); ++i)
        RC.col(i) = transfer_eval(nds, sp.lambda_r[static_cast<std::size_t>(i)]) *
                    sp.pi_r[static_cast<std::size_t>(i)].cast<Complex>();
    for (Index i = 0; i < sp.m_c(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const CVector c = transfer_eval(nds, sp.lambda_c[k]) * sp.pi_c[k];
        RC.col(sp.m_r() + 2 * i) = c;
        RC.col(sp.m_r() + 2 * i + 1) = c.conjugate();
    }
    return (RC * sp.T_inv).real();
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("static gain of the scalar model") {
    const auto sol = solve_sylvester(fixtures::scalar_model(), fixtures::constant_generator());
    CHECK(sol.X(0, 0) == doctest::Approx(1.0));
    CHECK(sol.Yss(0, 0) == doctest::Approx(1.0));
    for (double t : {0.0, 2.0, 50.0})
        CHECK(steady_state_response(sol, fixtures::constant_generator(), t)(0) == doctest::Approx(1.0));
}

TEST_CASE("two-cart chain steady state matches directional transfer values") {
    const auto nds = fixtures::chain(2).assemble();
    const auto gen = fixtures::oscillator();
    const auto sol = solve_sylvester(nds, gen);
    const Matrix ref = yss_from_transfer(nds, gen);
    CHECK((sol.Yss - ref).norm() <= 1e-9 * ref.norm());
    const Matrix resid = nds.Atheta * sol.X + nds.Bstack * gen.Pi - nds.Ebar * sol.X * gen.Xi;
    CHECK(resid.norm() <= 1e-10 * (nds.Atheta.norm() * sol.X.norm() + nds.Bstack.norm() * gen.Pi.norm()));
}

TEST_CASE("Sylvester residual and transfer cross-check on random descriptor models") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto nds = fixtures::random_model(seed, seed % 2 == 0);
        const auto gen = fixtures::random_generator(seed, nds.mu(), 2);
        const auto sol = solve_sylvester(nds, gen);
        const Matrix resid = nds.Atheta * sol.X + nds.Bstack * gen.Pi - nds.Ebar * sol.X * gen.Xi;
        CHECK(resid.norm() <= 1e-10 * (nds.Atheta.norm() * sol.X.norm() + nds.Bstack.norm() * gen.Pi.norm()));
        CHECK((sol.Z - nds.Ebar * sol.X).norm() == doctest::Approx(0.0));
        const Matrix ref = yss_from_transfer(nds, gen);
        CHECK((sol.Yss - ref).norm() <= 1e-9 * ref.norm());
    }
}

TEST_CASE("generator eigenvalue on a pencil eigenvalue collides") {
    InputGenerator g;
    g.Xi = Matrix::Constant(1, 1, -1.0);
    g.Pi = Matrix::Ones(1, 1);
    g.xi0 = Vector::Ones(1);
    try {
        solve_sylvester(fixtures::scalar_model(), g);
        FAIL("expected a collision");
    } catch (const EigenvalueCollision& e) {
        CHECK(std::abs(e.pencil_eigenvalue() - Complex(-1.0, 0.0)) < 1e-9);
    }
}

TEST_CASE("steady-state response: matrix exponential and modal paths agree") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto nds = fixtures::random_model(seed);
        const auto gen = fixtures::random_generator(seed + 100, nds.mu(), 2);
        const auto sol = solve_sylvester(nds, gen);
        const auto sp = analyze_generator(gen);
        const auto c = coefficients(gen, sp);
        CHECK((steady_state_response(sol, gen, 0.0) - sol.Yss * gen.xi0).norm() < 1e-12);
        for (int k = 0; k < 25; ++k) {
            const double t = 0.4 * k;
            const Vector a = steady_state_response(sol, gen, t);
            const Vector b = steady_state_modal(sol, sp, c, t);
            CHECK((a - b).norm() <= 1e-9 * std::max(1.0, a.norm()));
        }
    }
}

TEST_CASE("steady state under the oscillator is periodic") {
    const auto nds = fixtures::chain(4).assemble();
    const auto gen = fixtures::oscillator();
    const auto sol = solve_sylvester(nds, gen);
    const double period = 2.0 * std::numbers::pi / 0.32;
    for (double t : {0.0, 3.3, 17.0})
        CHECK((steady_state_response(sol, gen, t + period) - steady_state_response(sol, gen, t)).norm() < 1e-9);
}

TEST_CASE("full response") {
    SUBCASE("steady-compatible initial state has no transient") {
        const auto nds = fixtures::chain(4).assemble();
        const auto gen = fixtures::oscillator();
        const auto sol = solve_sylvester(nds, gen);
        const ResponseSimulator sim(nds, gen, sol.X_top() * gen.xi0);
        for (double t : {0.0, 0.7, 5.0, 40.0, 333.0})
            CHECK((sim.output(t) - steady_state_response(sol, gen, t)).norm() < 1e-8);
    }
    SUBCASE("zero initial state settles") {
        const auto nds = fixtures::chain(4).assemble();
        const auto gen = fixtures::oscillator();
        const auto sol = solve_sylvester(nds, gen);
        const double ts = *check_regularity(nds).settling_bound;
        double amp = 0.0;
        for (int k = 0; k < 200; ++k) amp = std::max(amp, steady_state_response(sol, gen, 0.1 * k).norm());
        const Vector y = full_response(nds, gen, Vector::Zero(nds.mx()), 5 * ts);
        CHECK((y - steady_state_response(sol, gen, 5 * ts)).norm() <= 1e-3 * amp);
    }
    SUBCASE("free decay of the scalar model") {
        InputGenerator g = fixtures::constant_generator();
        g.xi0.setZero();
        for (double t : {0.0, 0.5, 3.0})
            CHECK(full_response(fixtures::scalar_model(), g, Vector::Ones(1), t)(0) ==
                  doctest::Approx(std::exp(-t)).epsilon(1e-13));
    }
    SUBCASE("transient decays at least at the slowest pencil rate") {
        const auto nds = fixtures::chain(3).assemble();
        const auto gen = fixtures::oscillator();
        const auto sol = solve_sylvester(nds, gen);
        const auto d = check_regularity(nds);
        double rho = INFINITY;
        for (const auto& e : d.finite_eigenvalues) rho = std::min(rho, std::abs(e.real()));
        const ResponseSimulator sim(nds, gen, Vector::Zero(nds.mx()));
        // state transient, measured in the modal-free energy sense: sup over a window
        auto transient = [&](double t) { return (sim.state(t) - sol.X_top() * expm(gen.Xi * t) * gen.xi0).norm(); };
        const double dt = 30.0;
        double prev = 0.0;
        for (int k = 0; k < 20; ++k) prev = std::max(prev, transient(10.0 + 0.5 * k));
        double next = 0.0;
        for (int k = 0; k < 20; ++k) next = std::max(next, transient(10.0 + dt + 0.5 * k));
        CHECK(next <= prev * std::exp(-rho * dt) * 50.0);
    }
    SUBCASE("singular E is not simulated") {
        const auto nds = fixtures::random_model(2, true);
        const auto gen = fixtures::random_generator(2, nds.mu());
        CHECK_THROWS_AS(ResponseSimulator(nds, gen, Vector::Zero(nds.mx())), UnsupportedDescriptorSimulation);
    }
}

TEST_CASE("sampling schedules") {
    SUBCASE("degenerate interval gives a uniform grid") {
        ScheduleSpec s{{{0, 0.0, 10.0, 1.0, 1.0}}};
        const auto e = make_schedule(s, 3);
        REQUIRE(e.size() == 10);
        for (std::size_t i = 0; i < e.size(); ++i) CHECK(e[i].t == doctest::Approx(1.0 + static_cast<double>(i)));
    }
    SUBCASE("gaps stay inside the interval and timelines are unaligned") {
        ScheduleSpec s{{{0, 0.0, 2000.0}, {3, 0.0, 2000.0}}};
        const auto e = make_schedule(s, 9);
        std::vector<double> t0, t3;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (i) CHECK(e[i].t >= e[i - 1].t);
            (e[i].subsystem == 0 ? t0 : t3).push_back(e[i].t);
        }
        for (auto* v : {&t0, &t3})
            for (std::size_t i = 1; i < v->size(); ++i) {
                CHECK((*v)[i] - (*v)[i - 1] >= 0.1);
                CHECK((*v)[i] - (*v)[i - 1] <= 5.0);
            }
        std::set<double> common(t0.begin(), t0.end());
        int shared = 0;
        for (double t : t3) shared += static_cast<int>(common.count(t));
        CHECK(shared == 0);
        CHECK(make_schedule(s, 9).size() == e.size());
        CHECK(make_schedule(s, 10)[0].t != e[0].t);
    }
    SUBCASE("open-ended schedule stops after the requested steady count") {
        ScheduleSpec s{{{0, 0.0, 0.0}, {1, 0.0, 0.0}}};
        const auto e = make_schedule_until(s, 50.0, 120, 4);
        long steady = std::count_if(e.begin(), e.end(), [](const ScheduleEntry& x) { return x.t >= 50.0; });
        CHECK(steady == 120);
        CHECK(e.back().t >= 50.0);
    }
    SUBCASE("empty window is an input error") {
        ScheduleSpec s{{{0, 0.0, 0.05}}};
        CHECK_THROWS_AS(make_schedule(s, 1), InputError);
    }
}

TEST_CASE("measurements") {
    const auto nds = fixtures::chain(3).assemble();
    const auto gen = fixtures::oscillator();
    ScheduleSpec s{{{0, 0.0, 300.0}, {2, 0.0, 300.0}}};
    const auto sched = make_schedule(s, 5);
    const Vector x0 = Vector::Zero(nds.mx());

    SUBCASE("zero noise equals the noiseless response") {
        const auto ds = measure(nds, gen, x0, sched, 0.0, 1);
        const ResponseSimulator sim(nds, gen, x0);
        for (const auto& r : ds.records) {
            const Vector y = sim.output(r.t);
            CHECK((r.y - y.segment(nds.layout.output_offset(r.subsystem), r.y.size())).norm() == 0.0);
        }
    }
    SUBCASE("same seed, same data") {
        const auto a = measure(nds, gen, x0, sched, 0.5, 77);
        const auto b = measure(nds, gen, x0, sched, 0.5, 77);
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].y == b.records[i].y);
    }
    SUBCASE("noise variance") {
        ScheduleSpec big{{{0, 0.0, 0.0, 1.0, 1.0}}};
        const auto sched2 = make_schedule_until(big, 0.0, 20000, 2);
        MeasureOptions mo;
        mo.mode = SimulationMode::SteadyOnly;
        const double sd = std::sqrt(0.3);
        const auto noisy = measure(nds, gen, x0, sched2, sd, 3, mo);
        const auto clean = measure(nds, gen, x0, sched2, 0.0, 3, mo);
        double ss = 0.0;
        for (std::size_t i = 0; i < noisy.records.size(); ++i) ss += std::pow(noisy.records[i].y(0) - clean.records[i].y(0), 2);
        CHECK(ss / static_cast<double>(noisy.records.size()) == doctest::Approx(0.3).epsilon(0.05));
        CHECK(noisy.noise_variance == doctest::Approx(0.3));
    }
    SUBCASE("steady-only mode refuses early samples") {
        MeasureOptions mo;
        mo.mode = SimulationMode::SteadyOnly;
        mo.t_settle = 100.0;
        CHECK_THROWS_AS(measure(nds, gen, x0, sched, 0.0, 1, mo), InputError);
    }
    SUBCASE("transient bound is reported") {
        MeasureOptions mo;
        mo.t_settle = 250.0;
        const auto ds = measure(nds, gen, x0, sched, 0.0, 1, mo);
        REQUIRE(ds.transient_bound);
        CHECK(*ds.transient_bound >= 0.0);
        CHECK(ds.first_steady_index() > 0);
    }
}

}
