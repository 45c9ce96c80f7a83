#include <catch2/catch_amalgamated.hpp>

#include <iunorm/norms.hpp>
#include <iunorm/rng.hpp>
#include <iunorm/step_function.hpp>

#include "test_util.hpp"

using namespace iunorm;

namespace {
const StepFunction f1 = make_step({0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}, std::vector<double>{3, 1, 2});
const StepFunction one = make_step({0.0, 1.0}, std::vector<double>{1});
}

TEST_CASE("lp norms", "[norms]") {
    CHECK(lp_norm(f1, 1.0) == Catch::Approx(2.0));
    CHECK(lp_norm(f1, std::numeric_limits<double>::infinity()) == 3.0);
    CHECK(lp_norm(f1, 2.0) == Catch::Approx(std::sqrt(14.0 / 3.0)));
    CHECK_THROWS_AS(lp_norm(f1, 0.5), std::invalid_argument);
}

TEST_CASE("integral-uniform norm reference values", "[norms]") {
    CHECK(integral_uniform(f1, 1) == Catch::Approx(2.0).margin(1e-12));
    // oracle: expected-max enumeration over ascending values
    CHECK(integral_uniform_expected_max(f1, 2) == Catch::Approx(22.0 / 9.0).margin(1e-12));
    CHECK(integral_uniform(f1, 2) == Catch::Approx(22.0 / 9.0).margin(1e-12));
    const auto chi = make_step({0.0, 0.25, 1.0}, std::vector<double>{1, 0});
    CHECK(integral_uniform(chi, 4) == Catch::Approx(175.0 / 256.0).margin(1e-12));
}

TEST_CASE("indicator identity is exact", "[norms]") {
    for (int d = 1; d <= 9; ++d) {
        const double w = d / 10.0;
        const auto chi = make_step({0.0, w, 1.0}, std::vector<double>{1, 0});
        const auto r = rearrangement(chi);
        for (long m = 1; m <= 64; ++m) {
            const double expect = 1.0 - std::pow(1.0 - w, static_cast<double>(m));
            CHECK(std::abs(integral_uniform(r, m) - expect) <= 1e-12);
        }
    }
}

TEST_CASE("relative prime norm", "[norms]") {
    CHECK(relative_prime(f1, 2) == Catch::Approx(8.0 / 3.0));
    CHECK(relative_prime(f1, 3) == Catch::Approx(3.0)); // top plateau has width exactly 1/3
    for (long m : {1L, 2L, 5L, 17L}) CHECK(relative_prime(one, m) == Catch::Approx(1.0));
}

TEST_CASE("relative star norm", "[norms]") {
    for (long m : {1L, 2L, 7L}) CHECK(relative_star(one, m) == Catch::Approx(1.0));
    CHECK(relative_star(f1, 1) == Catch::Approx(2.0));
    const auto res = relative_star_max(f1, 2);
    CHECK(res.value == Catch::Approx(20.0 / 9.0).margin(1e-10));
    CHECK(res.argmax == Catch::Approx(2.0 / 3.0).margin(1e-9));
    // grid oracle cross-check
    CHECK(res.value >= testutil::star_grid_oracle(rearrangement(f1), 2, 100000) - 1e-9);
}

TEST_CASE("marcinkiewicz norm", "[norms]") {
    const auto res = marcinkiewicz_max(f1, ConcaveProfile::power(0.5));
    CHECK(res.value == Catch::Approx(5.0 / std::sqrt(6.0)).margin(1e-10));
    CHECK(res.argmax == Catch::Approx(2.0 / 3.0).margin(1e-9));
    CHECK(res.value >= testutil::marc_grid_oracle(rearrangement(f1),
                                                  [](double t) { return std::sqrt(t); }, 100000) -
                           1e-9);

    CHECK(marcinkiewicz(one, ConcaveProfile::power(1.0)) == Catch::Approx(1.0));

    // phi(t) = t: the sup is the t->0+ limit f*(0) = ||f||_inf
    const auto lim = marcinkiewicz_max(f1, ConcaveProfile::power(1.0));
    CHECK(lim.value == Catch::Approx(3.0));
    CHECK(lim.argmax == 0.0);
}

TEST_CASE("concave profile validation", "[norms]") {
    CHECK_THROWS_AS(ConcaveProfile::power(0.0), std::invalid_argument);
    CHECK_THROWS_AS(ConcaveProfile::power(1.5), std::invalid_argument);
    CHECK_THROWS_AS(ConcaveProfile::tabulated({{0.0, 0.0}, {1.0, 0.9}}), std::invalid_argument);
    // convex kink fails the midpoint test
    CHECK_THROWS_AS(ConcaveProfile::tabulated({{0.0, 0.0}, {0.5, 0.1}, {1.0, 1.0}}),
                    std::invalid_argument);
    const auto ok = ConcaveProfile::tabulated({{0.0, 0.0}, {0.5, 0.8}, {1.0, 1.0}});
    CHECK(ok(0.25) == Catch::Approx(0.4));
}

TEST_CASE("chain report reference cases", "[norms]") {
    const auto c1 = chain_report(f1, 2);
    CHECK(c1.prime == Catch::Approx(8.0 / 3.0));
    CHECK(c1.star == Catch::Approx(20.0 / 9.0).margin(1e-10));
    CHECK(c1.m_infty == Catch::Approx(22.0 / 9.0));
    CHECK(c1.all_ok());

    const auto c2 = chain_report(one, 5);
    CHECK(c2.prime == Catch::Approx(1.0));
    CHECK(c2.star == Catch::Approx(1.0));
    CHECK(c2.m_infty == Catch::Approx(1.0));
    CHECK(c2.all_ok());

    const auto half2 = make_step({0.0, 0.5, 1.0}, std::vector<double>{2, 0});
    const auto c3 = chain_report(half2, 2);
    CHECK(c3.prime == Catch::Approx(2.0));
    CHECK(c3.star == Catch::Approx(1.5).margin(1e-10));
    CHECK(c3.m_infty == Catch::Approx(1.5));
    CHECK(c3.all_ok());
}

TEST_CASE("norm family invariants on random functions", "[norms]") {
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
        const auto f = testutil::random_step(rng::derive(31337, static_cast<std::uint64_t>(i)), 64);
        const auto r = rearrangement(f);
        const double l1 = lp_norm(r, 1.0), linf = lp_norm(r, inf);

        // m = 1 identity
        CHECK(std::abs(integral_uniform(r, 1) - l1) <= 1e-12 * std::max(1.0, l1));

        // monotone sandwich and the m -> infinity limit
        double prev = 0.0;
        for (long m = 1; m <= 1024; m *= 2) {
            const double v = integral_uniform(r, m);
            CHECK(v >= l1 - 1e-12);
            CHECK(v <= linf + 1e-12);
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
        if (r.widths.front() > 1e-4)
            CHECK(integral_uniform(r, 1L << 20) == Catch::Approx(linf).margin(1e-3));

        // both inequalities from the max <= sum bound
        for (long m : {1L, 2L, 3L, 8L}) {
            const double vm = integral_uniform(r, m);
            CHECK(vm <= static_cast<double>(m) * l1 + 1e-12);
            for (long n = m; n <= 4 * m; ++n) {
                const double vn = integral_uniform(r, n);
                CHECK(vn <= (static_cast<double>(n + 1) / static_cast<double>(m)) * vm + 1e-9);
            }
        }

        // the two integral-uniform routes agree
        for (long m : {1L, 2L, 16L, 128L}) {
            const double a = integral_uniform(r, m);
            const double b = integral_uniform_expected_max(r, m);
            CHECK(a == Catch::Approx(b).epsilon(1e-10).margin(1e-12));
        }

        // chain for a spread of m
        for (long m = 1; m <= 1024; m *= 4) CHECK(chain_report(r, m).all_ok());
    }
}

TEST_CASE("star maximizer beats the dense grid oracle", "[norms]") {
    for (int i = 0; i < 40; ++i) {
        const auto f = testutil::random_step(rng::derive(777, static_cast<std::uint64_t>(i)), 48);
        const auto r = rearrangement(f);
        for (long m : {1L, 2L, 8L, 64L, 512L}) {
            const double analytic = relative_star(r, m);
            const double grid = testutil::star_grid_oracle(r, m, 100000);
            CHECK(grid <= analytic * (1.0 + 1e-6) + 1e-12);
        }
    }
}

TEST_CASE("marcinkiewicz maximizer beats the dense grid oracle", "[norms]") {
    for (int i = 0; i < 25; ++i) {
        const auto f = testutil::random_step(rng::derive(888, static_cast<std::uint64_t>(i)), 48);
        const auto r = rearrangement(f);
        for (double gamma : {0.3, 0.5, 0.9, 1.0}) {
            const double analytic = marcinkiewicz(r, ConcaveProfile::power(gamma));
            const double grid = testutil::marc_grid_oracle(
                r, [gamma](double t) { return std::pow(t, gamma); }, 100000);
            CHECK(grid <= analytic * (1.0 + 1e-6) + 1e-12);
        }
    }
}
