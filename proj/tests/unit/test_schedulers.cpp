#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "aoi/error.hpp"
#include "aoi/schedulers.hpp"
#include "support/oracles.hpp"

using namespace aoi;

namespace {

// Index i wins iff nobody has strictly less slack and no earlier index ties.
bool is_edf_choice(const std::vector<double>& slack, std::size_t i) {
  for (std::size_t j = 0; j < slack.size(); ++j) {
    if (slack[j] < slack[i]) return false;
    if (j < i && slack[j] == slack[i]) return false;
  }
  return true;
}

}  // namespace

TEST(Edf, PicksMostUrgentSensor) {
  const std::vector<double> ages{20, 100}, tau{30, 150};
  EXPECT_EQ(edf_select(ages, tau), 0);
  const std::vector<double> ages2{10, 140};
  EXPECT_EQ(edf_select(ages2, tau), 1);
}

TEST(Edf, ExhaustiveOverAllWeakOrderings) {
  Rng rng(5);
  for (std::size_t n = 1; n <= 4; ++n) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= n;
    for (std::size_t code = 0; code < combos; ++code) {
      // Slack ranks in {0..n-1}^n cover every weak ordering, ties included.
      std::vector<double> slack(n), ages(n), tau(n);
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= n) {
        slack[i] = static_cast<double>(c % n) * 8.0;
        tau[i] = 16.0 * static_cast<double>(1 + rng.uniform_index(20));
        ages[i] = tau[i] - slack[i];
      }
      const int got = edf_select(ages, tau);
      EXPECT_TRUE(is_edf_choice(slack, static_cast<std::size_t>(got))) << "n=" << n << " code=" << code;
      // Shifting every age by the same amount keeps the choice.
      for (double& a : ages) a += 64;
      EXPECT_EQ(edf_select(ages, tau), got);
    }
  }
}

TEST(Edf, RejectsMismatchedLengths) {
  const std::vector<double> a{1, 2}, t{1};
  EXPECT_THROW(edf_select(a, t), ShapeError);
}

TEST(Osrp, TwoSensorProbabilities) {
  const std::vector<double> tau{30, 210};
  const auto q = osrp_probs(tau);
  EXPECT_NEAR(q[0], 7.0 / 8.0, 1e-15);
  EXPECT_NEAR(q[1], 1.0 / 8.0, 1e-15);
}

TEST(Osrp, TenSensorThresholdProbabilities) {
  const auto tau = paper_env_config().thresholds();
  const auto q = osrp_probs(tau);
  double inv_sum = 0;
  for (int n = 0; n < 10; ++n) inv_sum += 1.0 / (30 + 20 * n);
  EXPECT_NEAR(q[0], (1.0 / 30) / inv_sum, 1e-15);
  // Exact rational evaluation of (1/30) / sum_n 1/(30 + 20n).
  EXPECT_NEAR(q[0], 0.2822766613880214, 1e-15);
  double total = 0;
  for (std::size_t n = 0; n < q.size(); ++n) {
    total += q[n];
    if (n > 0) {
      EXPECT_LT(q[n], q[n - 1]);
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Osrp, ChiSquaredGoodnessOfFit) {
  const auto tau = paper_env_config().thresholds();
  OsrpScheduler osrp(tau);
  Rng rng(99);
  const Observation obs{std::vector<double>(10, 0.0), std::vector<double>(5, 0.0), 0.0};
  const int draws = 100000;
  std::vector<double> counts(10, 0.0);
  for (int i = 0; i < draws; ++i) counts[osrp.select(obs, rng)] += 1;
  double stat = 0;
  for (int n = 0; n < 10; ++n) {
    const double expected = draws * osrp.probs()[n];
    stat += (counts[n] - expected) * (counts[n] - expected) / expected;
  }
  const double critical = boost::math::quantile(boost::math::chi_squared(9), 0.999);
  EXPECT_NEAR(critical, 27.877, 1e-3);
  EXPECT_LT(stat, critical);
}

TEST(Osrp, ValidatesDistribution) {
  Rng rng(1);
  const std::vector<double> bad_sum{0.5, 0.4}, negative{1.5, -0.5};
  EXPECT_THROW(osrp_select(bad_sum, rng), ConfigError);
  EXPECT_THROW(osrp_select(negative, rng), ConfigError);
  const std::vector<double> zero_tau{30, 0};
  EXPECT_THROW(osrp_probs(zero_tau), ConfigError);
  const std::vector<double> point{0, 1, 0};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(osrp_select(point, rng), 1);
}

TEST(Policy, GreedyAndSampledSelection) {
  EnvConfig env = paper_env_config(3);
  NetShape shape = actor_shape(env, {8, 4, 16});
  Network actor = oracle::random_small_net(shape, 17);
  const Observation obs{{10, 80, 140}, {40, 55, 60, 45, 50}, 12};
  const FeatureScale scale{100, 50};
  const auto probs = forward_actor(actor, featurize(obs, scale));
  Rng rng(3);
  EXPECT_EQ(policy_select(obs, actor, scale, SelectMode::kGreedy, rng), argmax(probs));

  const int draws = 100000;
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < draws; ++i) counts[policy_select(obs, actor, scale, SelectMode::kSample, rng)] += 1;
  for (int n = 0; n < 3; ++n) {
    const double se = std::sqrt(probs[n] * (1 - probs[n]) / draws);
    EXPECT_NEAR(counts[n] / draws, probs[n], 4 * se + 1e-12);
  }
}

TEST(Policy, RejectsSensorCountMismatch) {
  Network actor = init_params(actor_shape(paper_env_config(10)), 1);
  const Observation obs{std::vector<double>(4, 0.0), std::vector<double>(5, 0.0), 0.0};
  Rng rng(0);
  EXPECT_THROW(policy_select(obs, actor, {}, SelectMode::kGreedy, rng), ShapeError);
}

TEST(Policy, ArgmaxBreaksTiesLow) {
  const std::vector<double> v{0.2, 0.4, 0.4};
  EXPECT_EQ(argmax(v), 1);
  EXPECT_EQ(parse_select_mode("sample"), SelectMode::kSample);
  EXPECT_THROW(parse_select_mode("eps"), ConfigError);
}
