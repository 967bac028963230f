#include <doctest.h>

#include <cmath>

#include "ptilab/errors.hpp"
#include "ptilab/schedule.hpp"
#include "support.hpp"

using namespace ptilab;

TEST_CASE("two-step schedule by hand") {
    const NoiseSchedule s = make_linear_schedule(2, 0.1, 0.2);
    CHECK(s.betas[1] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(s.betas[2] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(s.alphas[1] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.alphas[2] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.alpha_bar(2) == doctest::Approx(0.72).epsilon(1e-15));
}

TEST_CASE("single-step schedule") {
    const NoiseSchedule s = make_linear_schedule(1, 0.3, 0.3);
    CHECK(s.alpha_bar(1) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("default schedule matches an independent product") {
    const NoiseSchedule s = make_linear_schedule(1000, 1e-4, 0.02);
    long double prod = 1.0L;
    for (int t = 1; t <= 1000; ++t) {
        const long double beta = 1e-4L + (0.02L - 1e-4L) * (t - 1) / 999.0L;
        prod *= 1.0L - beta;
    }
    CHECK(s.alpha_bar(1000) == doctest::Approx(static_cast<double>(prod)).epsilon(1e-10));
    CHECK(s.alpha_bar(1000) == doctest::Approx(4.04e-5).epsilon(0.01));
    CHECK(s.alpha_bar(1000) < 0.05);
}

TEST_CASE("schedule invariants") {
    test::Gen gen(4);
    for (int trial = 0; trial < 20; ++trial) {
        const int T = gen.integer(2, 2000);
        const double b0 = gen.uniform(1e-5, 0.01);
        const double b1 = gen.uniform(b0 * 1.01, 0.05);
        const NoiseSchedule s = make_linear_schedule(T, b0, b1);
        for (int t = 1; t <= T; ++t) {
            REQUIRE(s.betas[t] > 0.0);
            REQUIRE(s.betas[t] < 1.0);
            if (t > 1) REQUIRE(s.betas[t] > s.betas[t - 1]);
            REQUIRE(s.alpha_bar(t) < s.alpha_bar(t - 1));
            REQUIRE(s.alpha_bar(t) == s.alpha_bar(t - 1) * s.alphas[t]);
        }
        CHECK(s.betas[1] == doctest::Approx(b0).epsilon(1e-14));
        CHECK(s.betas[T] == doctest::Approx(b1).epsilon(1e-14));
    }
}

TEST_CASE("schedule preconditions") {
    CHECK_THROWS_AS(make_linear_schedule(0, 1e-4, 0.02), ConfigError);
    CHECK_THROWS_AS(make_linear_schedule(10, 0.0, 0.02), ConfigError);
    CHECK_THROWS_AS(make_linear_schedule(10, 0.03, 0.02), ConfigError);
    CHECK_THROWS_AS(make_linear_schedule(10, 1e-4, 1.0), ConfigError);
    const NoiseSchedule s = make_linear_schedule(10, 1e-4, 0.02);
    CHECK_THROWS_AS(s.alpha_bar(11), ConfigError);
    CHECK_THROWS_AS(s.alpha_bar(-1), ConfigError);
}

TEST_CASE("DDIM timesteps with the default encoding ratio") {
    const DdimSteps d = ddim_timesteps(1000, 50, 0.8);
    REQUIRE(d.taus.size() == 51);
    CHECK(d.taus[0] == 0);
    for (int i = 1; i <= 50; ++i) CHECK(d.taus[i] == 20 * i);
    CHECK(d.start_index == 40);
}

TEST_CASE("DDIM timesteps small cases") {
    const DdimSteps all = ddim_timesteps(30, 30, 1.0);
    for (int i = 1; i <= 30; ++i) CHECK(all.taus[i] == i);
    CHECK(all.start_index == 30);

    const DdimSteps d = ddim_timesteps(10, 5, 0.5);
    CHECK(d.taus == std::vector<int>{0, 2, 4, 6, 8, 10});
    CHECK(d.start_index == 3);

    CHECK_THROWS_AS(ddim_timesteps(10, 0, 0.5), ConfigError);
    CHECK_THROWS_AS(ddim_timesteps(10, 11, 0.5), ConfigError);
    CHECK_THROWS_AS(ddim_timesteps(10, 5, 0.0), ConfigError);
    CHECK_THROWS_AS(ddim_timesteps(10, 5, 1.5), ConfigError);
}

TEST_CASE("DDIM timestep invariants") {
    test::Gen gen(12);
    for (int trial = 0; trial < 500; ++trial) {
        const int T = gen.integer(1, 3000);
        const int S = gen.integer(1, T);
        // Ratios of the form m / S exercise the exact-ceiling boundary.
        const double r = trial % 2 ? gen.uniform(1e-3, 1.0) : static_cast<double>(gen.integer(1, S)) / S;
        const DdimSteps d = ddim_timesteps(T, S, r);
        REQUIRE(d.taus.size() == static_cast<std::size_t>(S) + 1);
        for (int i = 1; i <= S; ++i) {
            REQUIRE(d.taus[i] > d.taus[i - 1]);
            REQUIRE(d.taus[i] == static_cast<int>((static_cast<long long>(i) * T) / S));
        }
        CHECK(d.start_index >= 1);
        CHECK(d.start_index <= S);
        CHECK(d.start_index >= r * S - 1e-9);
        CHECK(d.start_index - 1 < r * S);
        if (trial % 2 == 0) CHECK(d.start_index == static_cast<int>(std::lround(r * S)));
    }
}

TEST_CASE("q_sample closed forms") {
    const NoiseSchedule s = make_linear_schedule(2, 0.1, 0.2);
    CHECK(q_sample(Vec{1.0}, 2, Vec{1.0}, s)[0] ==
          doctest::Approx(std::sqrt(0.72) + std::sqrt(0.28)).epsilon(1e-15));
    CHECK(q_sample(Vec{1.0}, 2, Vec{1.0}, s)[0] == doctest::Approx(1.37768).epsilon(1e-5));
    CHECK(q_sample(Vec{2.0, -1.0}, 1, Vec{0.0, 0.0}, s) ==
          Vec{std::sqrt(0.9) * 2.0, std::sqrt(0.9) * -1.0});
    CHECK(q_sample(Vec{0.0}, 1, Vec{3.0}, s)[0] == doctest::Approx(std::sqrt(0.1) * 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(q_sample(Vec{1.0}, 0, Vec{1.0}, s), ConfigError);
    CHECK_THROWS_AS(q_sample(Vec{1.0}, 1, Vec{1.0, 2.0}, s), DimensionError);
}

TEST_CASE("q_sample noise variance") {
    const NoiseSchedule s = make_linear_schedule(1000, 1e-4, 0.02);
    Rng rng(31);
    for (int t : {10, 300, 900}) {
        double sum = 0, sum2 = 0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            const Vec eps = gaussian(rng, 1);
            const double v = q_sample(Vec{0.5}, t, eps, s)[0];
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        CHECK(var == doctest::Approx(1.0 - s.alpha_bar(t)).epsilon(0.03));
    }
}
