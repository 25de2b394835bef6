#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lordba/theory.hpp"
#include "oracles.hpp"

using namespace lordba;

TEST_SUITE("theory") {
  TEST_CASE("noiseless factors are exact sign matrices") {
    SignNoiseModel m;
    m.N = 12;
    m.M = 10;
    m.r = 3;
    m.mu_A = 0.7;
    m.mu_B = 1.3;
    const FactorSample s = sample_factors(m, 5);
    CHECK(oracle::max_abs(s.factors.A, scaled(s.sigma_A.to_dense(), 0.7)) == 0.0);
    CHECK(SignMatrix::from_dense(s.factors.A) == s.sigma_A);
    const DenseMatrix lat = reconstruct(latent_adapter(m, s));
    CHECK(oracle::max_abs(lat, s.factors.product()) <= 1e-12);
  }

  TEST_CASE("sampling is reproducible and fixed signs are honoured") {
    SignNoiseModel m;
    m.noise_scale = 0.2;
    m.seed = 11;
    const FactorSample a = sample_factors(m, 3);
    const FactorSample b = sample_factors(m, 3);
    CHECK(a.factors.A == b.factors.A);
    CHECK_FALSE(sample_factors(m, 4).factors.A == a.factors.A);

    std::mt19937_64 rng(1);
    m.fixed_sigma_A = oracle::random_signs(16, 4, rng);
    const FactorSample c = sample_factors(m, 0);
    CHECK(c.sigma_A == *m.fixed_sigma_A);
  }

  TEST_CASE("gaussian residuals are centred") {
    SignNoiseModel m;
    m.N = 1000;
    m.M = 1000;
    m.r = 1;
    m.noise_scale = 0.5;
    const FactorSample s = sample_factors(m, 0);
    double sum = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) {
      sum += s.factors.A(i, 0) - s.sigma_A(i, 0);
      sum += s.factors.B(i, 0) - s.sigma_B(i, 0);
    }
    // 2000 draws: 4 standard errors of the mean
    CHECK(std::abs(sum / 2000.0) <= 4.0 * 0.5 / std::sqrt(2000.0));
  }

  TEST_CASE("sub-Gaussian proxy") {
    SignNoiseModel g;
    g.noise_scale = 0.3;
    CHECK(g.zeta() == doctest::Approx(0.3 * std::sqrt(8.0 / 3.0)));
    CHECK(SignNoiseModel::gaussian_scale_for_zeta(g.zeta()) == doctest::Approx(0.3));
    SignNoiseModel u;
    u.noise = NoiseKind::uniform;
    u.noise_scale = 0.4;
    CHECK(u.zeta() == doctest::Approx(0.4));
  }

  TEST_CASE("model validation") {
    SignNoiseModel m;
    m.r = 0;
    CHECK_THROWS_AS(m.validate(), Error);
    m.r = 2;
    m.noise_scale = -1.0;
    CHECK_THROWS_AS(m.validate(), Error);
    m.noise_scale = 0.0;
    std::mt19937_64 rng(2);
    m.fixed_sigma_A = oracle::random_signs(3, 2, rng);
    CHECK_THROWS_AS(m.validate(), Error);
  }

  TEST_CASE("reconstruction error vanishes without noise") {
    SignNoiseModel m;
    m.N = 16;
    m.M = 16;
    m.r = 4;
    const MCReport r = check_reconstruction_bound(m, 20, 0.1);
    CHECK(r.trials == 20);
    for (const double e : r.empirical) CHECK(e == 0.0);
  }

  TEST_CASE("reconstruction bound report") {
    SignNoiseModel m;
    m.N = 32;
    m.M = 32;
    m.r = 8;
    m.noise_scale = SignNoiseModel::gaussian_scale_for_zeta(0.1);
    const MCReport r = check_reconstruction_bound(m, 50, 0.1);
    CHECK(r.empirical.size() == 50);
    CHECK(r.scalars.at("quantile") == doctest::Approx(quantile(r.empirical, 0.9)));
    CHECK(r.scalars.at("quantile") > 0.0);
    CHECK(r.scalars.at("quantile") < 0.5);
  }

  TEST_CASE("fitted constant is stable across sizes") {
    std::vector<double> consts;
    for (std::size_t n : {32, 64, 128}) {
      SignNoiseModel m;
      m.N = n;
      m.M = n;
      m.r = 8;
      m.noise_scale = SignNoiseModel::gaussian_scale_for_zeta(0.1);
      consts.push_back(check_reconstruction_bound(m, 30, 0.1).scalars.at("c_prime_fit"));
    }
    const auto [lo, hi] = std::minmax_element(consts.begin(), consts.end());
    CHECK(*hi <= 2.0 * *lo);
  }

  TEST_CASE("noise-scaling slope on a small grid") {
    SignNoiseModel m;
    m.N = 32;
    m.M = 32;
    m.r = 4;
    const MCReport r = noise_scaling_regression(m, {0.02, 0.05, 0.1, 0.2}, 40);
    REQUIRE(r.slope.has_value());
    CHECK(*r.slope == doctest::Approx(1.0).epsilon(0.15));
    CHECK(r.grid.size() == 4);
  }

  TEST_CASE("flip bound") {
    SignNoiseModel m;
    m.N = 16;
    m.M = 8;
    m.r = 2;
    m.noise = NoiseKind::uniform;
    m.noise_scale = 0.5;
    const double expected = 2.0 * 16 * 2 * std::exp(-4.0) + 2.0 * 8 * 2 * std::exp(-4.0);
    CHECK(flip_bound(m) == doctest::Approx(expected));

    SignNoiseModel quiet;
    quiet.N = 16;
    quiet.M = 16;
    quiet.r = 4;
    const MCReport clean = check_sign_consistency(quiet, 200);
    CHECK(clean.scalars.at("failures") == 0.0);
    CHECK(clean.passed);

    SignNoiseModel loud = quiet;
    loud.noise_scale = 1.0;
    const MCReport vac = check_sign_consistency(loud, 200);
    CHECK(std::find(vac.notes.begin(), vac.notes.end(), "bound vacuous") != vac.notes.end());
    CHECK(vac.scalars.at("failure_rate") > 0.5);
  }

  TEST_CASE("signal lower bound") {
    const MCReport one = check_signal_lowerbound(8, 6, 1, 100, 3);
    CHECK(one.scalars.at("event_frequency") == 1.0);
    CHECK(one.scalars.at("var_Z") == 0.0);
    const MCReport four = check_signal_lowerbound(16, 16, 4, 2000, 3);
    CHECK(four.passed);
    CHECK(four.scalars.at("expected_Z") == 4.0 * 256.0);
  }

  TEST_CASE("entry tail") {
    SignNoiseModel zero;
    zero.N = 8;
    zero.M = 8;
    zero.r = 2;
    const MCReport z = check_entry_tail(zero, 100, {0.1, 0.5});
    CHECK(z.scalars.at("second_moment") == 0.0);

    SignNoiseModel m = zero;
    m.noise_scale = 0.3;
    const MCReport r = check_entry_tail(m, 5000, {0.1, 0.5, 1.0, 2.0});
    CHECK(r.scalars.at("tail_monotone") == 1.0);
    CHECK(r.passed);
    const double zeta = m.zeta();
    CHECK(r.scalars.at("V") == doctest::Approx(2.0 * zeta * zeta * (1.0 + 1.0 + zeta * zeta)));
    for (std::size_t k = 1; k < r.empirical.size(); ++k) CHECK(r.empirical[k] <= r.empirical[k - 1]);
  }

  TEST_CASE("helpers") {
    const auto [slope, icpt] = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(slope == doctest::Approx(2.0));
    CHECK(icpt == doctest::Approx(1.0));
    CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({5}, 0.9) == 5.0);
  }
}
