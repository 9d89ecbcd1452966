#include <doctest.h>

#include <cmath>

#include "rsgf/certify.hpp"

using namespace rsgf;

TEST_CASE("margin worked examples") {
  CHECK(certify::margin(-1.0, 1.0, 0.1, 1.0, 2.0, 1.0) ==
        doctest::Approx(0.94 / 1.1).epsilon(1e-12));
  CHECK(certify::margin(0.0, 1.0, 0.1, 1.0, 2.0, 0.0) == doctest::Approx(0.0));
  // h -> 0 limit with negative estimate approaches -V_hat.
  CHECK(certify::margin(-0.7, 1.0, 1e-8, 1.0, 5.0, 2.0) == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("margin is monotone in V_hat and L_j") {
  const double base = certify::margin(-0.5, 1.0, 0.1, 1.0, 2.0, 1.5);
  CHECK(certify::margin(-0.4, 1.0, 0.1, 1.0, 2.0, 1.5) <= base);
  CHECK(certify::margin(-0.5, 1.0, 0.1, 1.0, 5.0, 1.5) <= base);
}

TEST_CASE("episodes_required worked example") {
  const auto req = certify::episodes_required(0.85455, 0.1, 1.75, 1.75);
  CHECK(req.value_threshold == doctest::Approx(8.205).epsilon(1e-3));
  CHECK(req.n_value == 26);
  CHECK(req.n_required == 26);
}

TEST_CASE("episodes_required scaling and monotonicity") {
  const auto base = certify::episodes_required(0.85455, 0.1, 1.75, 1.75);
  SUBCASE("doubling the margin divides thresholds by four") {
    const auto doubled = certify::episodes_required(2.0 * 0.85455, 0.1, 1.75, 1.75);
    CHECK(doubled.value_threshold == doctest::Approx(base.value_threshold / 4.0).epsilon(1e-12));
  }
  SUBCASE("delta near one shrinks the requirement") {
    const auto loose = certify::episodes_required(0.85455, 0.999, 1.75, 1.75);
    CHECK(loose.value_threshold ==
          doctest::Approx(2.0 / (0.85455 * 0.85455) * std::log(2.0 / 0.999)).epsilon(1e-12));
    CHECK(loose.n_value <= base.n_value);
  }
  SUBCASE("requirement is nonincreasing in M and delta") {
    double prev = 1e300;
    for (double M : {0.2, 0.4, 0.8, 1.6}) {
      const auto r = certify::episodes_required(M, 0.1, 1.75, 1.75);
      CHECK(r.value_threshold <= prev);
      prev = r.value_threshold;
    }
    prev = 1e300;
    for (double delta : {0.01, 0.05, 0.2, 0.5}) {
      const auto r = certify::episodes_required(0.8, delta, 1.75, 1.75);
      CHECK(r.value_threshold <= prev);
      prev = r.value_threshold;
    }
  }
  SUBCASE("gradient condition joins via the max") {
    const auto with_grad = certify::episodes_required(
        0.85455, 0.1, 1.75, 1.75, certify::GradientConstants{2.75, 22.0, 2});
    CHECK(with_grad.n_required == std::max(with_grad.n_value, with_grad.n_gradient));
    CHECK(with_grad.gradient_threshold ==
          doctest::Approx(-2.0 * 2 / (0.85455 * 0.85455) * std::log(0.1 / 4.0)).epsilon(1e-12));
  }
  SUBCASE("nonpositive margin errors") {
    CHECK_THROWS_WITH_AS(certify::episodes_required(0.0, 0.1, 1.75, 1.75),
                         doctest::Contains("margin"), std::invalid_argument);
    CHECK_THROWS(certify::episodes_required(0.5, 0.0, 1.75, 1.75));
  }
}

TEST_CASE("lipschitz_L_j worked example and degenerate cases") {
  CHECK(certify::lipschitz_L_j(1.0, 1.0, 1.0, 0.5, 2) == doctest::Approx(6.5).epsilon(1e-12));
  CHECK(certify::lipschitz_L_j(1.0, 1.0, 0.0, 0.5, 2) == doctest::Approx(2.25).epsilon(1e-12));
  CHECK(certify::lipschitz_bounding(4.0) == doctest::Approx(4.0));
}

TEST_CASE("closed forms agree with looped sums to 1e-12") {
  for (double gamma : {0.3, 0.5, 0.9, 0.98}) {
    for (int T : {1, 2, 5, 17}) {
      // phi: B sum_{t=0}^{T} gamma^t.
      double geo_T1 = 0.0;
      for (int t = 0; t <= T; ++t) geo_T1 += std::pow(gamma, t);
      const double phi_closed = (1.0 - std::pow(gamma, T + 1)) / (1.0 - gamma);
      CHECK(std::abs(phi_closed - geo_T1) <= 1e-12 * geo_T1);

      // L_j pieces: (1-g^T)/(1-g) = sum_{t<T} g^t and the weighted sum
      // g(1-(T+1)g^T+Tg^{T+1})/(1-g)^2 = sum_{t<=T} t g^t.
      double geo_T = 0.0;
      for (int t = 0; t < T; ++t) geo_T += std::pow(gamma, t);
      double weighted = 0.0;
      for (int t = 0; t <= T; ++t) weighted += t * std::pow(gamma, t);
      const double lj = certify::lipschitz_L_j(1.3, 0.7, 1.1, gamma, T);
      const double lj_loop = 1.3 * 0.7 * geo_T * geo_T + 2.0 * 1.3 * 1.1 * 1.1 * weighted +
                             1.3 * 1.1 * 1.1 * geo_T * geo_T;
      CHECK(std::abs(lj - lj_loop) <= 1e-12 * std::max(1.0, std::abs(lj_loop)));

      // Invariance offset: gamma^T d (1-gamma)/(1-gamma^T) = gamma^T d / sum_{t<T} gamma^t.
      const double offset = certify::invariance_reward_offset(gamma, T, 0.37);
      CHECK(std::abs(offset - std::pow(gamma, T) * 0.37 / geo_T) <= 1e-12);
    }
  }
}

TEST_CASE("horizon confidence") {
  CHECK(certify::horizon_confidence(1, 10, 0.01) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(certify::horizon_confidence(3, 100, 0.0) == doctest::Approx(1.0));
  CHECK(certify::horizon_confidence(2, 100, 0.01) == doctest::Approx(0.0));
}

TEST_CASE("invariance reward construction") {
  CHECK(certify::invariance_reward_offset(0.98, 50, 0.1) == doctest::Approx(0.001146).epsilon(1e-3));
  CHECK(certify::invariance_reward_offset(0.9, 10, 0.0) == 0.0);

  const auto reward = certify::build_invariance_reward(
      [](const Eigen::VectorXd& s) { return s[0] >= 0.0; }, 0.9, 10, 0.0);
  CHECK(reward(Eigen::VectorXd::Constant(1, 1.0)) == doctest::Approx(0.0));
  CHECK(reward(Eigen::VectorXd::Constant(1, -1.0)) == doctest::Approx(1.0));
}

TEST_CASE("probability utilities") {
  CHECK(certify::popoviciu_bound(0.0, 1.0) == doctest::Approx(0.25));
  CHECK_THROWS(certify::popoviciu_bound(1.0, 0.0));

  std::vector<std::pair<double, double>> ranges(10, {0.0, 1.0});
  CHECK(certify::hoeffding_bound(ranges, 2.0) ==
        doctest::Approx(2.0 * std::exp(-0.8)).epsilon(1e-12));
  CHECK(certify::hoeffding_bound(ranges, 2.0) == doctest::Approx(0.8987).epsilon(1e-3));

  CHECK(certify::frechet_lower({0.9, 0.9}) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(certify::frechet_lower({0.1, 0.1, 0.1}) == 0.0);
}

TEST_CASE("finite-iteration bound") {
  CHECK(certify::theorem3_iteration_bound(1.0, 0.1, 1.0, 0.0, 1, 0.5) == doctest::Approx(100.0));
  // kappa/(eps - correction) with correction 0.05: (1/0.05)^2 = 400.
  CHECK(certify::theorem3_iteration_bound(1.0, 0.1, 1.0, 0.05 / (1.5 * (1.0 / 0.5 + 1.0)), 1, 0.5) ==
        doctest::Approx(400.0).epsilon(1e-9));
  CHECK_THROWS_WITH_AS(certify::theorem3_iteration_bound(1.0, 0.1, 1.0, 1.0, 1, 0.5),
                       doctest::Contains("variance"), std::invalid_argument);
}
