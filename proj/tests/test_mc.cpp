#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <iunorm/mc.hpp>
#include <iunorm/norms.hpp>
#include <iunorm/systems.hpp>

#include "test_util.hpp"

using namespace iunorm;

TEST_CASE("system spec parsing", "[mc]") {
    CHECK(mc::SystemSpec::parse("rademacher").kind == mc::SystemSpec::Kind::rademacher);
    CHECK(mc::SystemSpec::parse("trig2").two_sided);
    const auto mixed = mc::SystemSpec::parse("mixed:q=0.45,normalize");
    CHECK(mixed.q == Catch::Approx(0.45));
    CHECK(mixed.normalize);
    CHECK(mc::SystemSpec::parse("file:/tmp/x.json").path == "/tmp/x.json");
    CHECK_THROWS_AS(mc::SystemSpec::parse("fourier"), std::invalid_argument);
}

TEST_CASE("dyadic ensemble agrees with the explicit Rademacher system", "[mc]") {
    const int n = 8;
    const auto virt = mc::Ensemble::rademacher(n);
    const auto expl = mc::Ensemble::explicit_system(rademacher_system(n));
    const std::vector<NormKind> kinds{NormKind::lp(1.0), NormKind::lp(3.0), NormKind::sup(),
                                      NormKind::m_infty(4), NormKind::prime(8), NormKind::star(3)};
    for (int trial = 0; trial < 10; ++trial) {
        // gaussian coefficients exercise the enumeration path
        std::vector<cplx> coeffs;
        const auto xs = sample_coeffs(CoeffModel::gaussian(), n, rng::derive(99, static_cast<std::uint64_t>(trial)));
        for (double x : xs) coeffs.emplace_back(x, 0.0);
        const auto rv = virt.combination_rearrangement(coeffs);
        const auto re = expl.combination_rearrangement(coeffs);
        for (const auto& kind : kinds)
            CHECK(kind.evaluate(rv) == Catch::Approx(kind.evaluate(re)).epsilon(1e-10).margin(1e-12));
    }
    // sign coefficients exercise the binomial path
    std::vector<cplx> theta;
    for (int i = 0; i < n; ++i) theta.emplace_back(i % 3 == 0 ? -1.0 : 1.0, 0.0);
    const auto rv = virt.combination_rearrangement(theta);
    const auto re = expl.combination_rearrangement(theta);
    for (const auto& kind : kinds)
        CHECK(kind.evaluate(rv) == Catch::Approx(kind.evaluate(re)).epsilon(1e-10).margin(1e-12));
}

TEST_CASE("trig ensemble FFT matches explicit cellwise evaluation", "[mc]") {
    for (bool two_sided : {false, true}) {
        const int n = 8;
        const auto virt = mc::Ensemble::trig(n, 4, two_sided);
        const auto expl = mc::Ensemble::explicit_system(trig_system(n, 4, two_sided));
        REQUIRE(virt.size() == expl.size());
        std::vector<cplx> coeffs;
        for (long i = 0; i < virt.size(); ++i)
            coeffs.emplace_back(rng::uniform01(7, static_cast<std::uint64_t>(i)) - 0.5,
                                rng::uniform01(8, static_cast<std::uint64_t>(i)) - 0.5);
        const auto rv = virt.combination_rearrangement(coeffs);
        const auto re = expl.combination_rearrangement(coeffs);
        for (const auto& kind : {NormKind::lp(1.0), NormKind::sup(), NormKind::m_infty(4)})
            CHECK(kind.evaluate(rv) == Catch::Approx(kind.evaluate(re)).epsilon(1e-9).margin(1e-12));
    }
    // non power-of-two grids take the direct route
    const auto odd = mc::Ensemble::trig(3, 5, false);
    const auto odd_expl = mc::Ensemble::explicit_system(trig_system(3, 5, false));
    std::vector<cplx> ones(3, cplx(1.0, 0.0));
    CHECK(lp_norm(odd.combination_rearrangement(ones), 1.0) ==
          Catch::Approx(lp_norm(odd_expl.combination_rearrangement(ones), 1.0)).epsilon(1e-10));
}

TEST_CASE("per-trial L2 on sign coefficients is exactly sqrt(n)", "[mc]") {
    for (long n : {16L, 100L, 1024L}) {
        const auto est = mc::estimate_expected_norm(mc::Ensemble::rademacher(n),
                                                    CoeffModel::rademacher(), {}, NormKind::lp(2.0),
                                                    50, 4242, 0);
        CHECK(est.mean == std::sqrt(static_cast<double>(n)));
        CHECK(est.stderr_ == 0.0);
    }
}

TEST_CASE("rademacher L1 mean matches the exact binomial oracle", "[mc]") {
    const auto est = mc::estimate_expected_norm(mc::Ensemble::rademacher(100),
                                                CoeffModel::rademacher(), {}, NormKind::lp(1.0),
                                                200, 31, 0);
    const double oracle = testutil::binomial_abs_mean(100);
    CHECK(est.stderr_ == 0.0); // sign coefficients leave the distribution unchanged
    CHECK(est.mean == Catch::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("weight generators", "[mc]") {
    const auto spike = mc::make_weights("spike", 4);
    CHECK(spike == std::vector<cplx>{{1, 0}, {0, 0}, {0, 0}, {0, 0}});
    const auto geo = mc::make_weights("geometric:0.5", 3);
    CHECK(geo[2] == cplx(0.25, 0.0));
    CHECK_THROWS_AS(mc::make_weights("triangular", 3), std::invalid_argument);

    // spike weights on the dyadic system: |xi_1 r_1| = 1 on every trial
    mc::SweepSpec spec;
    spec.system = mc::SystemSpec::parse("rademacher");
    spec.model = CoeffModel::rademacher();
    spec.norm = NormKind::m_infty(1);
    spec.ns = {32};
    spec.ms = {4};
    spec.weights = "spike";
    spec.trials = 20;
    spec.seed = 5;
    const auto rows = mc::run_sweep(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].flag == "ok");
    CHECK(rows[0].mean == Catch::Approx(1.0));
    CHECK(rows[0].stderr_ == 0.0);
}

TEST_CASE("zero weights give a zero estimate", "[mc]") {
    const std::vector<cplx> zeros(16, cplx{});
    const auto est = mc::estimate_expected_norm(mc::Ensemble::rademacher(16),
                                                CoeffModel::gaussian(), zeros, NormKind::m_infty(4),
                                                16, 5, 0);
    CHECK(est.mean == 0.0);
    CHECK(est.stderr_ == 0.0);
}

TEST_CASE("trig pin for the smallest two-sided system", "[mc]") {
    // frozen from a 1e6-trial run: E sup |xi_{-1} e^{-ix} + xi_0 + xi_1 e^{ix}|
    // sampled on 4 cells, gaussian coefficients -> 1.895960 +- 0.00083
    const auto est = mc::estimate_expected_norm(mc::Ensemble::trig(1, 4, true),
                                                CoeffModel::gaussian(), {}, NormKind::sup(),
                                                20000, 98765, 0);
    const double pinned = 1.895960;
    CHECK(std::abs(est.mean - pinned) <= 1.96 * est.stderr_ + 0.00083 * 1.96);
}

TEST_CASE("reproducibility across thread counts", "[mc]") {
    mc::SweepSpec spec;
    spec.system = mc::SystemSpec::parse("rademacher");
    spec.model = CoeffModel::gaussian();
    spec.norm = NormKind::m_infty(1);
    spec.ns = {8, 16};
    spec.ms = {2, 4};
    spec.trials = 300;
    spec.seed = 123;
    spec.threads = 1;
    const auto rows1 = mc::run_sweep(spec);
    spec.threads = 4;
    const auto rows4 = mc::run_sweep(spec);
    std::ostringstream s1, s4;
    mc::write_sweep_csv(s1, rows1);
    mc::write_sweep_csv(s4, rows4);
    CHECK(s1.str() == s4.str());
}

TEST_CASE("sub-grid rerun reproduces rows bitwise", "[mc]") {
    mc::SweepSpec grid;
    grid.system = mc::SystemSpec::parse("rademacher");
    grid.model = CoeffModel::gaussian();
    grid.norm = NormKind::m_infty(1);
    grid.ns = {4, 8, 16};
    grid.ms = {2, 4, 8};
    grid.trials = 150;
    grid.seed = 99;
    const auto rows = mc::run_sweep(grid);

    mc::SweepSpec single = grid;
    single.ns = {8};
    single.ms = {4};
    const auto one = mc::run_sweep(single);
    REQUIRE(one.size() == 1);
    bool found = false;
    for (const auto& r : rows)
        if (r.n == 8 && r.m == 4) {
            found = true;
            CHECK(r.mean == one[0].mean);
            CHECK(r.stderr_ == one[0].stderr_);
        }
    CHECK(found);
}

TEST_CASE("khinchin window for the L1 norm over an orthonormal system", "[mc]") {
    const long n = 64;
    const auto est = mc::estimate_expected_norm(mc::Ensemble::rademacher(n),
                                                CoeffModel::rademacher(), {}, NormKind::lp(1.0),
                                                100, 17, 0);
    CHECK(est.ci_high >= std::sqrt(static_cast<double>(n) / 2.0));
    CHECK(est.ci_low <= std::sqrt(static_cast<double>(n)));
}

TEST_CASE("m-infty estimates are monotone in m", "[mc]") {
    // zero-variance dyadic route: exact monotonicity
    const auto ens = mc::Ensemble::rademacher(64);
    double prev = 0.0;
    for (long m : {2L, 8L, 32L}) {
        const auto est = mc::estimate_expected_norm(ens, CoeffModel::rademacher(), {},
                                                    NormKind::m_infty(m), 50, 9, 0);
        CHECK(est.mean >= prev - 1e-12);
        prev = est.mean;
    }
    // noisy route on an explicit system: monotone within CI overlap
    const auto small = mc::Ensemble::explicit_system(rademacher_system(10));
    double prev_high = 0.0;
    for (long m : {2L, 8L, 32L}) {
        const auto est = mc::estimate_expected_norm(small, CoeffModel::gaussian(), {},
                                                    NormKind::m_infty(m), 400, 9, 0);
        CHECK(est.ci_high >= prev_high - 1e-12);
        prev_high = est.mean;
    }
}

TEST_CASE("tail probability endpoints and monotonicity", "[mc]") {
    const auto ens = mc::Ensemble::rademacher(256);
    const auto zero = mc::tail_probability(ens, CoeffModel::rademacher(), {}, 16, 0.0, 200, 3, 0);
    CHECK(zero.prob.p_hat == 0.0);

    // threshold far above m * ||F||_1 <= m * n
    const auto one = mc::tail_probability(ens, CoeffModel::rademacher(), {}, 16,
                                          16.0 * 256.0, 200, 3, 0);
    CHECK(one.prob.p_hat == 1.0);

    // the spec-scale instance: normalized threshold 0.05 leaves essentially
    // no mass below it
    const auto small_p = mc::tail_probability(ens, CoeffModel::rademacher(), {}, 16, 0.05, 500, 3, 0);
    CHECK(small_p.prob.p_hat <= 0.01);

    // nonincreasing in m within CI, on a noisy explicit system
    const auto noisy = mc::Ensemble::explicit_system(rademacher_system(12));
    double prev = 1.0;
    for (long m : {4L, 16L, 64L}) {
        const auto t = mc::tail_probability(noisy, CoeffModel::gaussian(), {}, m, 0.6, 1500, 3, 0);
        CHECK(t.prob.ci_low <= prev + 1e-12);
        prev = t.prob.ci_high;
    }
}

TEST_CASE("scaling fit basics", "[mc]") {
    std::vector<std::pair<double, double>> sqrt_pts;
    for (double x : {1.0, 2.0, 4.0, 9.0, 16.0}) sqrt_pts.emplace_back(x, std::sqrt(x));
    const auto fit = scaling_fit(sqrt_pts, "x");
    CHECK(fit.exponent == Catch::Approx(0.5).margin(1e-12));
    CHECK(fit.r_squared == Catch::Approx(1.0).margin(1e-12));

    std::vector<std::pair<double, double>> flat;
    for (double x : {1.0, 3.0, 7.0}) flat.emplace_back(x, 2.5);
    CHECK(scaling_fit(flat, "x").exponent == Catch::Approx(0.0).margin(1e-12));

    CHECK_THROWS_AS(scaling_fit({{1.0, 1.0}, {2.0, 2.0}}, "x"), std::invalid_argument);
    CHECK_THROWS_AS(scaling_fit({{1.0, 1.0}, {2.0, -1.0}, {3.0, 1.0}}, "x"), std::invalid_argument);

    // least-squares identity: residuals orthogonal to (1, log x)
    std::vector<std::pair<double, double>> pts;
    for (int i = 1; i <= 8; ++i)
        pts.emplace_back(static_cast<double>(i), std::exp(0.7 * std::log(i) + 0.1 * ((i % 3) - 1)));
    const auto f2 = scaling_fit(pts, "x");
    double r_sum = 0.0, rx_sum = 0.0;
    for (const auto& [x, y] : pts) {
        const double resid = std::log(y) - (f2.intercept + f2.exponent * std::log(x));
        r_sum += resid;
        rx_sum += resid * std::log(x);
    }
    CHECK(std::abs(r_sum) < 1e-12);
    CHECK(std::abs(rx_sum) < 1e-12);
}

TEST_CASE("sign search", "[mc]") {
    // n = 1: no search, direct value
    const auto one = mc::sign_search(mc::Ensemble::rademacher(1), 1, 1, 2);
    CHECK(one.exhaustive);
    CHECK(one.c0 == Catch::Approx(relative_prime(rearrangement(make_step({0.0, 1.0}, std::vector<double>{1})), 2)));

    // rademacher n = 16: sign-invariant distribution, single evaluation
    const auto rad = mc::sign_search(mc::Ensemble::rademacher(16), 4, 10, 2);
    CHECK(rad.exhaustive);
    CHECK(rad.c0 > 0.0);
    CHECK(rad.per_k.size() == 4);

    // indicator n = 16: theta-independent; compare against a direct evaluation
    const auto ind_sys = indicator_system(16);
    const auto ind = mc::sign_search(mc::Ensemble::explicit_system(ind_sys), 4, 10, 2);
    std::vector<cplx> ones(16, cplx(1.0, 0.0));
    const auto direct = rearrangement(linear_combination(ones, ind_sys));
    double expect = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 4; ++k)
        expect = std::min(expect, relative_prime(direct, 1L << k) / std::sqrt(16.0 * k));
    CHECK(ind.c0 == Catch::Approx(expect).epsilon(1e-12));
    CHECK(ind.exhaustive);

    CHECK_THROWS_AS(mc::sign_search(mc::Ensemble::rademacher(16), 5, 10, 2), std::invalid_argument);
}

TEST_CASE("upper ratio", "[mc]") {
    const auto ens = mc::Ensemble::rademacher(64);
    // m = 1: E||F||_1 / ||sqrt(sum f^2)||_1 <= 1 by Cauchy-Schwarz
    const auto r1 = mc::upper_ratio(ens, CoeffModel::rademacher(), 1, 100, 21, 0);
    CHECK(r1.denominator == Catch::Approx(std::sqrt(64.0)));
    CHECK(r1.ratio <= 1.0 + 1e-9);

    double max_ratio = 0.0, min_ratio = 1e9;
    for (long m = 2; m <= 64; m *= 2) {
        const auto r = mc::upper_ratio(ens, CoeffModel::rademacher(), m, 200, 22, 0);
        max_ratio = std::max(max_ratio, r.ratio);
        min_ratio = std::min(min_ratio, r.ratio);
    }
    CHECK(max_ratio < 5.0 * min_ratio);

    CHECK_THROWS_AS(mc::upper_ratio(ens, CoeffModel::two_point(2.0), 4, 100, 23, 0),
                    std::invalid_argument);
}

TEST_CASE("marcinkiewicz gap", "[mc]") {
    // phi(t) = t: m phi(1/m) = 1, so sqrt(log m)/(m phi(1/m)) peaks at m = n
    const auto lin = mc::marcinkiewicz_gap(mc::Ensemble::rademacher(64), CoeffModel::rademacher(),
                                           ConcaveProfile::power(1.0), 50, 77, 0);
    CHECK(lin.argmax_m == 64);
    CHECK(lin.bound_without_A == Catch::Approx(std::sqrt(64.0) * std::sqrt(std::log(64.0))));

    // phi(t) = sqrt(t): sqrt(log m)/sqrt(m) peaks at the integer nearest e
    const auto sq = mc::marcinkiewicz_gap(mc::Ensemble::rademacher(64), CoeffModel::rademacher(),
                                          ConcaveProfile::power(0.5), 50, 77, 0);
    CHECK(sq.argmax_m == 3);
    CHECK(sq.bound_without_A ==
          Catch::Approx(std::sqrt(64.0) * std::sqrt(std::log(3.0)) / std::sqrt(3.0)));

    // fitted A stays within +-25% across n
    std::vector<double> fitted;
    for (long n : {64L, 256L, 1024L})
        fitted.push_back(mc::marcinkiewicz_gap(mc::Ensemble::rademacher(n), CoeffModel::rademacher(),
                                               ConcaveProfile::power(0.5), 50, 78, 0)
                             .fitted_A);
    const double mid = fitted[1];
    for (double a : fitted) CHECK(std::abs(a - mid) <= 0.25 * mid);
}

TEST_CASE("sweep csv round trip preserves the fit exactly", "[mc]") {
    mc::SweepSpec spec;
    spec.system = mc::SystemSpec::parse("rademacher");
    spec.model = CoeffModel::gaussian();
    spec.norm = NormKind::m_infty(1);
    spec.ns = {4, 8, 16}; // gaussian coefficients enumerate, so keep n small
    spec.ms = {4};
    spec.trials = 100;
    spec.seed = 7;
    const auto rows = mc::run_sweep(spec);

    auto points = [](const std::vector<mc::SweepRow>& rs) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : rs) pts.emplace_back(static_cast<double>(r.n), r.mean);
        return pts;
    };
    const auto fit_mem = scaling_fit(points(rows), "n");

    std::ostringstream os;
    mc::write_sweep_csv(os, rows, {"command=sweep"});
    std::istringstream is(os.str());
    const auto rows2 = mc::read_sweep_csv(is);
    REQUIRE(rows2.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows2[i].mean == rows[i].mean); // %.17g round trip is exact
        CHECK(rows2[i].stderr_ == rows[i].stderr_);
    }
    const auto fit_file = scaling_fit(points(rows2), "n");
    CHECK(fit_file.exponent == fit_mem.exponent);
    CHECK(fit_file.intercept == fit_mem.intercept);
}
