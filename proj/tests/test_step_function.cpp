#include <catch2/catch_amalgamated.hpp>

#include <iunorm/norms.hpp>
#include <iunorm/rng.hpp>
#include <iunorm/step_function.hpp>
#include <iunorm/systems.hpp>

#include "test_util.hpp"

using namespace iunorm;

namespace {
const StepFunction f1 = make_step({0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}, std::vector<double>{3, 1, 2});
}

TEST_CASE("make_step constructs and validates", "[stepfn]") {
    const auto c5 = make_step({0.0, 1.0}, std::vector<double>{5.0});
    CHECK(c5.cells() == 1);
    CHECK(c5.value_at(0.7).real() == 5.0);

    CHECK(f1.cells() == 3);
    CHECK(f1.value_at(0.0) == cplx(3, 0));
    CHECK(f1.value_at(0.5) == cplx(1, 0));
    CHECK(f1.value_at(1.0) == cplx(2, 0));

    CHECK_THROWS_AS(make_step({0.0, 0.5, 0.5, 1.0}, std::vector<double>{1, 2, 3}),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_step({0.1, 1.0}, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_step({0.0, 0.9}, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_step({0.0, 0.5, 1.0}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("modulus is the cellwise complex modulus", "[stepfn]") {
    const auto m1 = modulus(f1);
    CHECK(m1.values == std::vector<cplx>{{3, 0}, {1, 0}, {2, 0}});

    const auto g = make_step({0.0, 0.5, 1.0}, std::vector<cplx>{{0, 1}, {-3, 4}});
    const auto mg = modulus(g);
    CHECK(mg.values[0] == cplx(1, 0));
    CHECK(mg.values[1] == cplx(5, 0));

    const auto c = modulus(make_step({0.0, 1.0}, std::vector<double>{-2.0}));
    CHECK(c.values[0] == cplx(2, 0));
}

TEST_CASE("distribution uses the closed inequality", "[stepfn]") {
    const auto lam = distribution(f1);
    CHECK(lam(1.5) == Catch::Approx(2.0 / 3.0));
    CHECK(lam(0.0) == 1.0);
    CHECK(lam(3.01) == 0.0);
    // closed inequality: exactly at an attained value the cell still counts
    CHECK(lam(3.0) == Catch::Approx(1.0 / 3.0));
    CHECK(lam(2.0) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("rearrangement sorts moduli with their widths", "[stepfn]") {
    const auto r = rearrangement(f1);
    CHECK(r.values == std::vector<double>{3, 2, 1});
    for (double w : r.widths) CHECK(w == Catch::Approx(1.0 / 3.0));

    const auto block = rearrangement(make_step({0.0, 0.25, 1.0}, std::vector<double>{4, 0}));
    CHECK(block.values == std::vector<double>{4, 0});
    CHECK(block.widths[0] == 0.25);
    CHECK(block.widths[1] == 0.75);

    const auto c = rearrangement(make_step({0.0, 1.0}, std::vector<double>{5}));
    CHECK(c.values == std::vector<double>{5});
    CHECK(c.widths == std::vector<double>{1});
}

TEST_CASE("linear_combination on the Rademacher system", "[stepfn]") {
    const auto rad = rademacher_system(2);
    const auto f = linear_combination({cplx(1, 0), cplx(1, 0)}, rad);
    CHECK(f.values == std::vector<cplx>{{2, 0}, {0, 0}, {0, 0}, {-2, 0}});
    CHECK(lp_norm(f, 1.0) == Catch::Approx(1.0));

    const auto zero = linear_combination({cplx(0, 0), cplx(0, 0)}, rad);
    for (const auto& v : zero.values) CHECK(v == cplx(0, 0));

    FunctionSystem single;
    single.functions = {f1};
    const auto same = linear_combination({cplx(1, 0)}, single);
    CHECK(same.values == f1.values);

    CHECK_THROWS_AS(linear_combination({cplx(1, 0)}, rad), std::invalid_argument);
}

TEST_CASE("common_refinement merges breakpoints and preserves values", "[stepfn]") {
    const auto thirds = f1;
    const auto halves = make_step({0.0, 0.5, 1.0}, std::vector<double>{7, 9});
    const auto [a, b] = common_refinement(thirds, halves);
    const std::vector<double> expect{0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0};
    CHECK(a.breakpoints == expect);
    CHECK(b.breakpoints == expect);

    const auto [c, d] = common_refinement(thirds, thirds);
    CHECK(c.breakpoints == thirds.breakpoints);
    CHECK(d.values == thirds.values);

    const auto constant = make_step({0.0, 1.0}, std::vector<double>{5});
    const auto [e, f] = common_refinement(constant, thirds);
    CHECK(e.breakpoints == thirds.breakpoints);
    for (const auto& v : e.values) CHECK(v == cplx(5, 0));

    // pointwise values unchanged at random points
    for (int i = 0; i < 10; ++i) {
        const double x = rng::uniform01(42, static_cast<std::uint64_t>(i));
        CHECK(a.value_at(x) == thirds.value_at(x));
        CHECK(b.value_at(x) == halves.value_at(x));
    }
}

TEST_CASE("equimeasurability of the rearrangement", "[stepfn]") {
    for (int i = 0; i < 50; ++i) {
        const auto f = testutil::random_step(rng::derive(1001, static_cast<std::uint64_t>(i)), 40);
        const auto d_f = distribution(f);
        const auto d_r = distribution(to_step(rearrangement(f)));
        REQUIRE(d_f.thresholds.size() == d_r.thresholds.size());
        for (std::size_t k = 0; k < d_f.thresholds.size(); ++k) {
            CHECK(d_f.thresholds[k] == d_r.thresholds[k]);
            CHECK(d_f.measures[k] == Catch::Approx(d_r.measures[k]).margin(1e-12));
        }
    }
}

TEST_CASE("three routes to the L1 norm agree", "[stepfn]") {
    for (int i = 0; i < 50; ++i) {
        const auto f = testutil::random_step(rng::derive(2002, static_cast<std::uint64_t>(i)), 40);
        double direct = 0.0;
        for (std::size_t k = 0; k < f.cells(); ++k) direct += f.width(k) * std::abs(f.values[k]);

        const auto r = rearrangement(f);
        double via_rearr = 0.0;
        for (std::size_t j = 0; j < r.plateaus(); ++j) via_rearr += r.widths[j] * r.values[j];

        // int_0^inf lambda(t) dt as the exact finite sum over thresholds
        const auto lam = distribution(f);
        double via_dist = 0.0;
        for (std::size_t k = 0; k < lam.thresholds.size(); ++k) {
            const double next = (k + 1 < lam.thresholds.size()) ? lam.thresholds[k + 1] : 0.0;
            via_dist += (lam.thresholds[k] - next) * lam.measures[k];
        }
        CHECK(via_rearr == Catch::Approx(direct).epsilon(1e-10));
        CHECK(via_dist == Catch::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("linear_combination is linear", "[stepfn]") {
    const auto rad = rademacher_system(4);

    // integer coefficients on +-1 values: the arithmetic is exact, so the
    // identity holds cellwise bitwise
    std::vector<cplx> a, b, ab;
    for (int i = 0; i < 4; ++i) {
        const auto ui = static_cast<std::uint64_t>(i);
        a.emplace_back(static_cast<double>(rng::at(5, ui) % 17) - 8.0,
                       static_cast<double>(rng::at(6, ui) % 17) - 8.0);
        b.emplace_back(static_cast<double>(rng::at(7, ui) % 17) - 8.0,
                       static_cast<double>(rng::at(8, ui) % 17) - 8.0);
        ab.push_back(a.back() + b.back());
    }
    const auto fa = linear_combination(a, rad);
    const auto fb = linear_combination(b, rad);
    const auto fab = linear_combination(ab, rad);
    for (std::size_t k = 0; k < fab.cells(); ++k)
        CHECK(fab.values[k] == fa.values[k] + fb.values[k]);

    // generic real coefficients: equal up to a few ulp of reassociation
    std::vector<cplx> c, d, cd;
    for (int i = 0; i < 4; ++i) {
        const auto ui = static_cast<std::uint64_t>(i);
        c.emplace_back(rng::uniform01(9, ui), rng::uniform01(10, ui));
        d.emplace_back(rng::uniform01(11, ui), rng::uniform01(12, ui));
        cd.push_back(c.back() + d.back());
    }
    const auto fc = linear_combination(c, rad);
    const auto fd = linear_combination(d, rad);
    const auto fcd = linear_combination(cd, rad);
    for (std::size_t k = 0; k < fcd.cells(); ++k)
        CHECK(std::abs(fcd.values[k] - (fc.values[k] + fd.values[k])) < 1e-12);
}
