#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "ndsid/errors.hpp"
#include "ndsid/generator.hpp"

using namespace ndsid;

TEST_SUITE("generator") {

TEST_CASE("oscillator spectrum") {
    const auto gen = fixtures::oscillator();
    const auto sp = analyze_generator(gen);
    CHECK(sp.m_r() == 0);
    REQUIRE(sp.m_c() == 1);
    CHECK(std::abs(sp.lambda_c[0] - Complex(0.0, 0.32)) < 1e-15);
    // Pi T with T = [[1, 1], [j, -j]]
    CHECK(std::abs(sp.pi_c[0](0) - Complex(1.5, 2.0)) < 1e-14);
    CHECK(std::abs(sp.pi_c[0](1) - Complex(2.0, 1.0)) < 1e-14);
    CHECK((sp.T * sp.Lambda.asDiagonal() * sp.T_inv - gen.Xi.cast<Complex>()).norm() < 1e-14);
}

TEST_CASE("diagonal generator needs no transform") {
    InputGenerator g;
    g.Xi = Vector::LinSpaced(2, -1.0, -2.0).asDiagonal();
    g.Pi = Matrix::Ones(1, 2);
    g.xi0 = Vector::Ones(2);
    const auto sp = analyze_generator(g);
    CHECK(sp.m_r() == 2);
    CHECK(sp.m_c() == 0);
    CHECK(sp.lambda_r[0] == -2.0);
    CHECK(sp.lambda_r[1] == -1.0);
    // ascending order swaps the two states
    CMatrix swap = CMatrix::Zero(2, 2);
    swap(0, 1) = swap(1, 0) = 1.0;
    CHECK((sp.T - swap).norm() < 1e-15);
    g.Xi = Vector::LinSpaced(2, -2.0, -1.0).asDiagonal();
    CHECK((analyze_generator(g).T - CMatrix::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("repeated eigenvalues are rejected") {
    InputGenerator g;
    g.Xi = Matrix::Identity(2, 2) * -1.0;
    g.Pi = Matrix::Ones(1, 2);
    g.xi0 = Vector::Ones(2);
    CHECK_THROWS_AS(analyze_generator(g), AssumptionViolation);
}

TEST_CASE("coefficients of the oscillator") {
    const auto gen = fixtures::oscillator();
    const auto sp = analyze_generator(gen);
    const auto c = coefficients(gen, sp);
    CHECK(c.mu(0) == doctest::Approx(1.0));
    CHECK(c.nu(0) == doctest::Approx(1.0));
    CHECK(c.amplitude(0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(c.phase(0) == doctest::Approx(std::numbers::pi / 4));

    auto zero = gen;
    zero.xi0.setZero();
    const auto z = coefficients(zero, sp);
    CHECK(z.mu.isZero());
    CHECK(z.nu.isZero());
    CHECK(z.amplitude.isZero());
}

TEST_CASE("single real mode coefficient and regressor") {
    InputGenerator g;
    g.Xi = Matrix::Constant(1, 1, -1.0);
    g.Pi = Matrix::Ones(1, 1);
    g.xi0 = Vector::Constant(1, 2.0);
    const auto sp = analyze_generator(g);
    const auto c = coefficients(g, sp);
    CHECK(c.alpha(0) == doctest::Approx(2.0));
    CHECK(psi(sp, c, std::log(2.0))(0) == doctest::Approx(1.0));
}

TEST_CASE("psi at zero for the oscillator") {
    // psi = [A cos(w t - phi), -A sin(w t - phi)] with A = sqrt 2, phi = pi/4
    const auto gen = fixtures::oscillator();
    const auto sp = analyze_generator(gen);
    const auto c = coefficients(gen, sp);
    const Vector p = psi(sp, c, 0.0);
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == doctest::Approx(1.0));
    SteadyCoefficients none = c;
    none.mu.setZero();
    none.nu.setZero();
    none.amplitude.setZero();
    CHECK(psi(sp, none, 3.0).isZero());
}

TEST_CASE("coefficients round-trip for general generators") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto gen = fixtures::random_generator(seed, 2, 2);
        const auto sp = analyze_generator(gen);
        CHECK(sp.order() == 5);
        const double scale = gen.Xi.norm();
        CHECK((sp.T * sp.Lambda.asDiagonal() * sp.T_inv - gen.Xi.cast<Complex>()).norm() <= 1e-10 * scale);
        CHECK((sp.modal * sp.J * sp.modal_inv - gen.Xi).norm() <= 1e-10 * scale);
        const CMatrix PT = gen.Pi.cast<Complex>() * sp.T;
        for (Index i = 0; i < sp.m_c(); ++i) {
            CHECK((PT.col(sp.m_r() + 2 * i) - sp.pi_c[static_cast<std::size_t>(i)]).norm() < 1e-12);
            CHECK((PT.col(sp.m_r() + 2 * i + 1) - sp.pi_c[static_cast<std::size_t>(i)].conjugate()).norm() < 1e-12);
        }
        CHECK(sp.lambda_c[0].imag() < sp.lambda_c[1].imag());
        const auto c = coefficients(gen, sp);
        CHECK((reconstruct_xi0(sp, c) - gen.xi0).norm() < 1e-12 * gen.xi0.norm());
    }
}

TEST_CASE("input signal") {
    const auto gen = fixtures::oscillator();
    const Vector u0 = input_u(gen, 0.0);
    CHECK(u0(0) == doctest::Approx(3.5));
    CHECK(u0(1) == doctest::Approx(3.0));
    const double period = 2.0 * std::numbers::pi / 0.32;
    CHECK((input_u(gen, period) - u0).norm() < 1e-9);

    InputGenerator c;
    c.Xi = Matrix::Zero(2, 2);
    c.Pi = Matrix::Ones(1, 2);
    c.xi0 = Vector::Constant(2, 0.5);
    for (double t : {0.0, 1.0, 100.0}) CHECK(input_u(c, t)(0) == doctest::Approx(1.0));
}

}
