#pragma once

// Shared model and generator builders for the unit and acceptance tests.

#include <random>
#include <vector>

#include "ndsid/bench.hpp"
#include "ndsid/model.hpp"
#include "ndsid/generator.hpp"
#include "ndsid/rng.hpp"

namespace fixtures {

using namespace ndsid;

/// Xi, Pi, xi0 of the 0.32 rad/s oscillatory generator driving both chain ends.
inline InputGenerator oscillator() {
    InputGenerator g;
    g.Xi = Matrix(2, 2);
    g.Xi << 0.0, 0.32, -0.32, 0.0;
    g.Pi = Matrix(2, 2);
    g.Pi << 1.5, 2.0, 2.0, 1.0;
    g.xi0 = Vector::Ones(2);
    return g;
}

/// E = 1, Axx = -1, Bxu = 1, Cyx = 1, no internal signals.
inline NdsModel scalar_model() {
    auto s = DescriptorSubsystem::zeros({1, 0, 1, 0, 1});
    s.Axx(0, 0) = -1.0;
    s.Bxu(0, 0) = 1.0;
    s.Cyx(0, 0) = 1.0;
    Topology t;
    t.phi0 = Matrix::Zero(0, 0);
    t.theta = Vector(0);
    return assemble_nds({s}, t);
}

inline InputGenerator constant_generator(double value = 1.0) {
    InputGenerator g;
    g.Xi = Matrix::Zero(1, 1);
    g.Pi = Matrix::Constant(1, 1, value);
    g.xi0 = Vector::Ones(1);
    return g;
}

inline ChainModel chain(Index n, std::uint64_t seed = 1) {
    ChainSpec spec;
    spec.n_carts = n;
    spec.seed = seed;
    return build_chain(spec);
}

inline Matrix random_matrix(Index r, Index c, Rng& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index k = 0; k < c; ++k) m(i, k) = u(rng);
    return m;
}

/// Random stable, well-posed network of 2-3 subsystems with two unknown parameters.
/// With `algebraic` the first subsystem carries an extra algebraic state (singular E).
/// With `observe_all` there are exactly three subsystems and each has an output.
inline NdsModel random_model(std::uint64_t seed, bool algebraic = false, bool observe_all = false) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        auto rng = make_rng(seed, 0x9000 + attempt);
        std::uniform_int_distribution<int> pick(1, 3);
        const int n = observe_all ? 3 : 2 + (pick(rng) > 2 ? 1 : 0);
        std::vector<DescriptorSubsystem> subs;
        for (int k = 0; k < n; ++k) {
            SubsystemDims d{pick(rng), pick(rng) > 1 ? 2 : 1, k == 0 || k == n - 1 ? 1 : 0, pick(rng),
                            observe_all || k == 0 || k == n - 1 ? 1 : 0};
            if (algebraic && k == 0) d.nx = 2;
            auto s = DescriptorSubsystem::zeros(d);
            s.E = Matrix::Identity(d.nx, d.nx) + random_matrix(d.nx, d.nx, rng, 0.2);
            s.Axx = -2.0 * Matrix::Identity(d.nx, d.nx) + random_matrix(d.nx, d.nx, rng, 0.5);
            if (algebraic && k == 0) {
                s.E.row(1).setZero();
                s.Axx(1, 1) = -1.5;
            }
            s.Bxv = random_matrix(d.nx, d.nv, rng);
            s.Bxu = random_matrix(d.nx, d.nu, rng) + Matrix::Ones(d.nx, d.nu);
            s.Czx = random_matrix(d.nz, d.nx, rng);
            s.Dzv = random_matrix(d.nz, d.nv, rng, 0.2);
            s.Dzu = random_matrix(d.nz, d.nu, rng, 0.2);
            s.Cyx = random_matrix(d.ny, d.nx, rng) + Matrix::Ones(d.ny, d.nx);
            s.Dyv = random_matrix(d.ny, d.nv, rng, 0.3);
            s.Dyu = random_matrix(d.ny, d.nu, rng, 0.3);
            subs.push_back(std::move(s));
        }
        Index mv = 0, mz = 0;
        for (const auto& s : subs) {
            mv += s.Bxv.cols();
            mz += s.Czx.rows();
        }
        Topology t;
        t.phi0 = random_matrix(mv, mz, rng, 0.3);
        t.basis = {random_matrix(mv, mz, rng, 0.3), random_matrix(mv, mz, rng, 0.3)};
        t.theta = Vector(2);
        t.theta << 0.7, -0.4;
        t.bounds = {{-2.0, 2.0}, {-2.0, 2.0}};
        auto nds = assemble_nds(subs, t);
        const auto d = check_regularity(nds);
        if (d.wellposed && d.regular_pencil && d.stable) return nds;
    }
}

/// Generator of order 1 + 2 * pairs with a random (non-canonical) real basis and
/// distinct omegas. Without `growth` the real eigenvalue and every sigma are 0
/// (bounded signals for long sampling runs); with it the real eigenvalue lies in
/// [0.05, 0.3] and sigma in [0, 0.05].
inline InputGenerator random_generator(std::uint64_t seed, Index mu, Index pairs = 1, bool growth = false,
                                       bool rotate = true) {
    auto rng = make_rng(seed, 0xA000);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Index order = 1 + 2 * pairs;
    Matrix J = Matrix::Zero(order, order);
    const double real_eig = 0.05 + 0.25 * u(rng);
    J(0, 0) = growth ? real_eig : 0.0;
    for (Index i = 0; i < pairs; ++i) {
        const double sigma = growth ? 0.05 * u(rng) : 0.0;
        const double omega = 0.2 + 0.6 * static_cast<double>(i) + 0.3 * u(rng);
        const Index b = 1 + 2 * i;
        J(b, b) = J(b + 1, b + 1) = sigma;
        J(b, b + 1) = omega;
        J(b + 1, b) = -omega;
    }
    Matrix V = Matrix::Identity(order, order);
    if (rotate) V += random_matrix(order, order, rng, 0.4);
    InputGenerator g;
    g.Xi = V * J * V.inverse();
    g.Pi = random_matrix(mu, order, rng) + Matrix::Constant(mu, order, 0.5);
    g.xi0 = Vector::Constant(order, 1.0) + random_matrix(order, 1, rng, 0.5);
    return g;
}

}  // namespace fixtures
