#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "freeclt/error.hpp"
#include "freeclt/measure.hpp"
#include "freeclt/semicircle.hpp"
#include "support.hpp"

using namespace freeclt;
using doctest::Approx;

TEST_CASE("construction validates and normalizes") {
    CHECK_THROWS_AS(Measure::from_parts({}, {}, {}), InvalidInput);
    CHECK_THROWS_AS(Measure::from_parts({{0.0, -0.5}, {1.0, 1.5}}, {}, {}), InvalidInput);
    CHECK_THROWS_AS(Measure::from_parts({}, {0.0, 1.0, 0.5}, {1.0, 1.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(Measure::from_parts({}, {0.0, 1.0}, {1.0, -1.0}), InvalidInput);
    CHECK_THROWS_AS(Measure::from_parts({{0.0, 0.5}}, {}, {}), InvalidInput);
    CHECK_THROWS_AS(Measure::from_parts({{NAN, 1.0}}, {}, {}), InvalidInput);

    // Within 1e-6 of unit mass is rescaled exactly.
    const auto m = Measure::from_parts({{0.0, 0.5 + 4e-7}, {1.0, 0.5}}, {}, {});
    CHECK(m.atom_mass() == Approx(1.0).epsilon(1e-15));

    // Near-coincident atoms merge.
    const auto merged = Measure::discrete({{0.0, 0.5}, {1.0, 0.25}, {1.0 + 1e-14, 0.25}});
    CHECK(merged.atoms().size() == 2);
    CHECK(merged.atoms().back().mass == 0.5);
}

TEST_CASE("cdf examples") {
    const auto d0 = Measure::dirac(0.0);
    CHECK(d0.cdf(-0.1) == 0.0);
    CHECK(d0.cdf(0.0) == 1.0);
    CHECK(d0.cdf_left(0.0) == 0.0);
    CHECK(Measure::uniform(-1.0, 1.0).cdf(0.0) == Approx(0.5).epsilon(1e-15));
}

TEST_CASE("cdf is monotone and right-continuous on random measures") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mu = testing::random_measure(rng);
        double prev = 0.0;
        for (double x = -3.0; x <= 3.0; x += 0.01) {
            const double f = mu.cdf(x);
            CHECK(f >= prev - 1e-15);
            CHECK(mu.cdf_left(x) <= f + 1e-15);
            prev = f;
        }
        CHECK(mu.cdf(-10.0) == 0.0);
        CHECK(mu.cdf(10.0) == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("quantile inverts the cdf") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mu = testing::random_measure(rng);
        for (double u = 0.01; u < 1.0; u += 0.01) {
            const double x = mu.quantile(u);
            CHECK(mu.cdf(x) >= u - 1e-9);
            CHECK(mu.cdf_left(x) <= u + 1e-9);
        }
    }
}

TEST_CASE("kolmogorov distance examples") {
    const auto rad = Measure::rademacher();
    CHECK(kolmogorov_distance(rad, rad) == 0.0);
    CHECK(kolmogorov_distance(Measure::dirac(0.0), Measure::dirac(1.0)) == 1.0);
    CHECK(kolmogorov_distance(Measure::dirac(0.0), SemicircleLaw::standard()) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("kolmogorov distance against a dense brute-force scan") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mu = testing::random_measure(rng);
        const auto nu = testing::random_measure(rng);
        double brute = 0.0;
        for (double x = -3.0; x <= 3.0; x += 1e-4)
            brute = std::max({brute, std::abs(mu.cdf(x) - nu.cdf(x)), std::abs(mu.cdf_left(x) - nu.cdf_left(x))});
        const double exact = kolmogorov_distance(mu, nu);
        CHECK(exact >= brute - 1e-12);
        CHECK(exact <= brute + 1e-3);
    }
}

TEST_CASE("kolmogorov distance is a metric") {
    std::mt19937_64 rng(14);
    std::vector<Measure> family;
    for (int i = 0; i < 8; ++i) family.push_back(testing::random_measure(rng));
    for (const auto& a : family)
        for (const auto& b : family) {
            CHECK(kolmogorov_distance(a, b) == kolmogorov_distance(b, a));
            for (const auto& c : family)
                CHECK(kolmogorov_distance(a, c) <= kolmogorov_distance(a, b) + kolmogorov_distance(b, c) + 1e-12);
        }
}

TEST_CASE("affine invariance of the distance") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mu = testing::random_measure(rng);
        const auto nu = testing::random_measure(rng);
        const double s = u(rng), t = u(rng) - 1.5;
        CHECK(kolmogorov_distance(affine_pushforward(mu, s, t), affine_pushforward(nu, s, t)) ==
              Approx(kolmogorov_distance(mu, nu)).epsilon(1e-12));
    }
}

TEST_CASE("moments") {
    const auto rad = Measure::rademacher();
    CHECK(moment(rad, 1) == 0.0);
    CHECK(moment(rad, 2) == 1.0);
    CHECK(moment(Measure::uniform(0.0, 1.0), 2) == Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(abs_moment(rad, 3) == 1.0);
    CHECK(abs_moment(Measure::dirac(0.0), 5) == 0.0);
    CHECK(abs_moment(Measure::uniform(-1.0, 1.0), 3) == Approx(0.25).epsilon(1e-14));
    CHECK(g_moment(rad, GrowthFunction::abs_power(1.0)) == 1.0);
    CHECK(g_moment(Measure::dirac(0.0), GrowthFunction::log1p_abs()) == 0.0);
    CHECK(g_moment(Measure::uniform(-1.0, 1.0), GrowthFunction::abs_power(0.5)) == Approx(2.0 / 7.0).epsilon(1e-13));
    // Quadrature path for a non-power growth function, against Simpson.
    const double ref = testing::simpson([](double x) { return x * x * std::log1p(std::abs(x)) / 4.0; }, -2.0, 2.0, 20000);
    CHECK(g_moment(Measure::uniform(-2.0, 2.0), GrowthFunction::log1p_abs()) == Approx(ref).epsilon(1e-10));
    const GrowthFunction negative{[](double) { return -1.0; }, "negative", std::nullopt};
    CHECK_THROWS_AS(g_moment(rad, negative), InvalidInput);
}

TEST_CASE("moments against Simpson quadrature on random densities") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mu = testing::random_measure(rng, false);
        for (int k = 1; k <= 4; ++k) {
            double ref = 0.0;
            for (const auto& a : mu.atoms()) ref += a.mass * std::pow(a.position, k);
            const auto& g = mu.grid();
            for (std::size_t i = 0; i + 1 < g.size(); ++i)
                ref += testing::simpson([&](double x) { return mu.density_at(x) * std::pow(x, k); },
                                        g[i] + 1e-14, g[i + 1] - 1e-14, 64);
            CHECK(moment(mu, k) == Approx(ref).epsilon(1e-9));
        }
        CHECK(moment(mu, 2) >= moment(mu, 1) * moment(mu, 1));
    }
}

TEST_CASE("tail and window integrals") {
    const auto rad = Measure::rademacher();
    const auto u2 = Measure::uniform(-2.0, 2.0);
    CHECK(tail_second_moment(rad, 2.0) == 0.0);
    CHECK(tail_second_moment(rad, 0.5) == 1.0);
    CHECK(tail_second_moment(rad, 1.0) == 0.0);
    CHECK(tail_second_moment(u2, 1.0) == Approx(7.0 / 6.0).epsilon(1e-14));
    CHECK(windowed_abs_third(rad, 1.0) == 1.0);
    CHECK(windowed_abs_third(rad, 0.5) == 0.0);
    CHECK(windowed_abs_third(u2, 1.0) == Approx(0.125).epsilon(1e-14));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> c(0.05, 2.5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto mu = testing::random_measure(rng);
        const double cut = c(rng);
        CHECK(tail_second_moment(mu, cut) + windowed_second_moment(mu, cut) ==
              Approx(moment(mu, 2)).epsilon(1e-12));
    }
}

TEST_CASE("affine pushforward") {
    const auto half = affine_pushforward(Measure::dirac(1.0), 2.0, 0.0);
    CHECK(half.atoms().front().position == 0.5);
    const auto shifted = affine_pushforward(Measure::rademacher(), 1.0, 1.0);
    REQUIRE(shifted.atoms().size() == 2);
    CHECK(shifted.atoms()[0].position == -2.0);
    CHECK(shifted.atoms()[1].position == 0.0);
    CHECK_THROWS_AS(affine_pushforward(half, 0.0, 1.0), InvalidInput);

    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mu = testing::random_measure(rng);
        CHECK(kolmogorov_distance(affine_pushforward(mu, 1.0, 0.0), mu) <= 1e-14);
        const double s = -1.7, t = 0.3;
        const auto p = affine_pushforward(mu, s, t);
        CHECK(mean(p) == Approx((mean(mu) - t) / s).epsilon(1e-12));
        CHECK(variance(p) == Approx(variance(mu) / (s * s)).epsilon(1e-12));
    }
}

TEST_CASE("truncation") {
    const auto rad = Measure::rademacher();
    CHECK(kolmogorov_distance(truncate(rad, {-2.0, 2.0}), rad) == 0.0);
    const auto all_out = truncate(rad, {-0.5, 0.5});
    CHECK(all_out.is_point_mass());
    CHECK(all_out.atoms().front().position == 0.0);

    const auto t = truncate(Measure::uniform(-2.0, 2.0), {-1.0, 1.0});
    REQUIRE(t.atoms().size() == 1);
    CHECK(t.atoms().front().mass == Approx(0.5).epsilon(1e-14));
    CHECK(t.density_at(0.3) == Approx(0.25).epsilon(1e-14));
    const auto st = centered_stats(t);
    CHECK(st.alpha == Approx(0.0).epsilon(1e-15));
    CHECK(st.beta_sq == Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK_THROWS_AS(truncate(rad, {0.5, 1.0}), InvalidInput);

    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.1, 2.5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto mu = testing::random_measure(rng);
        const TruncationWindow w{-u(rng), u(rng)};
        const auto nu = truncate(mu, w);
        CHECK(nu.support_min() >= w.t);
        CHECK(nu.support_max() <= w.tau);
        CHECK(nu.atom_mass() + nu.continuous_mass() == Approx(1.0).epsilon(1e-9));
        CHECK(kolmogorov_distance(mu, nu) <= outside_mass(mu, w) + 1e-12);
    }
}

TEST_CASE("centered stats") {
    const auto d = centered_stats(Measure::dirac(0.0));
    CHECK(d.alpha == 0.0);
    CHECK(d.beta_sq == 0.0);
    const auto r = centered_stats(Measure::rademacher());
    CHECK(r.alpha == 0.0);
    CHECK(r.beta_sq == 1.0);
}

TEST_CASE("json round trip keeps the field order") {
    std::mt19937_64 rng(20);
    const auto mu = testing::random_measure(rng);
    const auto j = to_json(mu);
    auto it = j.begin();
    CHECK(it.key() == "atoms");
    CHECK((++it).key() == "grid");
    CHECK((++it).key() == "density");
    const auto back = measure_from_json(nlohmann::json::parse(j.dump()));
    CHECK(kolmogorov_distance(mu, back) <= 1e-14);
    CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"atoms": [[0, 2]]})")), InvalidInput);
    CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"atoms": "x"})")), InvalidInput);
}
