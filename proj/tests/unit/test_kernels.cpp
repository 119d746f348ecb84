#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "ndsid/kernels.hpp"

using namespace ndsid;
namespace k = ndsid::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    auto rng = make_rng(seed, 0xB000);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

struct IsaGuard {
    k::Isa saved = k::active_isa();
    ~IsaGuard() { k::set_active_isa(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar reference values") {
    const std::vector<double> a{1, 2, 3}, b{4, -5, 6};
    CHECK(k::scalar::dot(a, b) == 12.0);
    CHECK(k::scalar::sum_sq_diff(a, b) == 9.0 + 49.0 + 9.0);
    std::vector<double> y{1, 1, 1};
    k::scalar::axpy(2.0, a, y);
    CHECK(y == std::vector<double>{3, 5, 7});
}

TEST_CASE("vector variants match the scalar reference") {
    for (k::Isa isa : {k::Isa::Avx2, k::Isa::Neon}) {
        if (!k::isa_available(isa)) continue;
        CAPTURE(k::isa_name(isa));
        IsaGuard guard;
        k::set_active_isa(isa);
        CHECK(k::active_isa() == isa);
        for (std::size_t n : {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 17, 63, 64, 1000, 1027}) {
            const auto a = random_values(n, n + 1);
            const auto b = random_values(n, n + 1000);
            const double ref_dot = k::scalar::dot(a, b);
            const double ref_ssd = k::scalar::sum_sq_diff(a, b);
            const double tol = 1e-14 * static_cast<double>(n + 1);
            CHECK(k::dot(a, b) == doctest::Approx(ref_dot).epsilon(tol).scale(1.0));
            CHECK(k::sum_sq_diff(a, b) == doctest::Approx(ref_ssd).epsilon(tol).scale(1.0));
            auto y1 = b, y2 = b;
            k::scalar::axpy(0.37, a, y1);
            k::axpy(0.37, a, y2);
            for (std::size_t i = 0; i < n; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-15));
        }
    }
}

TEST_CASE("dispatch can be forced to the scalar path") {
    IsaGuard guard;
    k::set_active_isa(k::Isa::Scalar);
    CHECK(k::active_isa() == k::Isa::Scalar);
    const auto a = random_values(33, 1), b = random_values(33, 2);
    CHECK(k::dot(a, b) == k::scalar::dot(a, b));
}

TEST_CASE("length mismatch is rejected") {
    const std::vector<double> a(3), b(4);
    CHECK_THROWS(k::dot(a, b));
    CHECK_THROWS(k::sum_sq_diff(a, b));
}

}
