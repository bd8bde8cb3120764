#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "aoi/error.hpp"
#include "aoi/rng.hpp"
#include "aoi/traces.hpp"

using namespace aoi;

namespace {

Trace two_step() { return Trace("t", {{0, 100}, {1000, 200}}, 2000); }

}  // namespace

TEST(Traces, ParsesKilobytesPerSecondAsBytesPerMs) {
  std::istringstream in("0,800\n1000,1600\n");
  const Trace t = parse_trace(in, "x");
  ASSERT_EQ(t.samples().size(), 2u);
  EXPECT_EQ(t.samples()[0], (TraceSample{0, 800}));
  EXPECT_EQ(t.samples()[1], (TraceSample{1000, 1600}));
  EXPECT_EQ(t.duration_ms(), 2000);
}

TEST(Traces, HeaderCommentsAndSingleSample) {
  std::istringstream in("# recorded on a train\ntime_ms,throughput_kBps\n# mid comment\n0,42\n");
  const Trace t = parse_trace(in, "x");
  ASSERT_EQ(t.samples().size(), 1u);
  EXPECT_EQ(t.duration_ms(), 1000);
  EXPECT_EQ(t.rate_at(999.5), 42);
}

TEST(Traces, RejectsNonPositiveRateWithLineNumber) {
  std::istringstream in("0,800\n1000,0\n");
  try {
    parse_trace(in, "x");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("non-positive rate at line 2"), std::string::npos);
  }
}

TEST(Traces, RejectsMalformedAndNonMonotoneLines) {
  std::istringstream bad("0,800\nabc\n");
  EXPECT_THROW(parse_trace(bad, "x"), ParseError);
  std::istringstream backwards("0,800\n500,10\n500,20\n");
  try {
    parse_trace(backwards, "x");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(parse_trace(empty, "x"), ParseError);
}

TEST(Traces, StepFunctionPlaybackAndWrap) {
  const Trace t = two_step();
  EXPECT_EQ(t.rate_at(500), 100);
  EXPECT_EQ(t.rate_at(1500), 200);
  EXPECT_EQ(t.rate_at(2500), 100);
  EXPECT_EQ(t.rate_at(1000), 200);
  EXPECT_EQ(t.rate_at(0), 100);
}

TEST(Traces, ConstructorEnforcesInvariants) {
  EXPECT_THROW(Trace("e", {}, 10), ConfigError);
  EXPECT_THROW(Trace("e", {{5, 1}}, 10), ConfigError);
  EXPECT_THROW(Trace("e", {{0, 1}, {0, 2}}, 10), ConfigError);
  EXPECT_THROW(Trace("e", {{0, -1}}, 10), ConfigError);
  EXPECT_THROW(Trace("e", {{0, 1}, {20, 2}}, 10), ConfigError);
}

TEST(Traces, PeriodicityAndPiecewiseConstancyProperty) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Trace t = gen_synthetic(SyntheticKind::kLognormalWalk, {}, 20000, 250, rng.next_u64());
    for (int i = 0; i < 200; ++i) {
      // Integer-millisecond times keep t + duration exact in double precision.
      const double x = std::floor(rng.uniform(0.0, 100000.0));
      EXPECT_EQ(t.rate_at(x), t.rate_at(x + t.duration_ms()));
      const double base = std::floor(x / 250) * 250;
      EXPECT_EQ(t.rate_at(base), t.rate_at(base + 249.9));
    }
  }
}

TEST(Traces, WriteLoadRoundTripProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform_index(30);
    std::vector<TraceSample> samples;
    double time = 0;
    for (std::size_t i = 0; i < n; ++i) {
      samples.push_back({time, rng.uniform(0.5, 5000.0)});
      time += static_cast<double>(1 + rng.uniform_index(2000));
    }
    const double gap = n > 1 ? samples[n - 1].time_ms - samples[n - 2].time_ms : 1000.0;
    const Trace original("rt", samples, samples.back().time_ms + gap);
    std::stringstream buf;
    write_trace(original, buf);
    EXPECT_EQ(parse_trace(buf, "rt"), original) << "trial " << trial;
  }
}

TEST(Traces, ConstantGenerator) {
  SyntheticParams p;
  p.rate = 50;
  const Trace t = gen_synthetic(SyntheticKind::kConstant, p, 10000, 1000, 3);
  ASSERT_EQ(t.samples().size(), 10u);
  for (const auto& s : t.samples()) EXPECT_EQ(s.rate, 50);
  EXPECT_EQ(t.duration_ms(), 10000);
  EXPECT_DOUBLE_EQ(t.mean_rate(), 50);
}

TEST(Traces, GeneratorsAreDeterministicInSeed) {
  for (auto kind : {SyntheticKind::kTwoLevelMarkov, SyntheticKind::kLognormalWalk}) {
    EXPECT_EQ(gen_synthetic(kind, {}, 50000, 100, 9), gen_synthetic(kind, {}, 50000, 100, 9));
    EXPECT_NE(gen_synthetic(kind, {}, 50000, 100, 9), gen_synthetic(kind, {}, 50000, 100, 10));
  }
}

TEST(Traces, TwoLevelMarkovStationaryFraction) {
  SyntheticParams p;
  p.low = 20;
  p.high = 200;
  p.p_switch = 0.1;
  const Trace t = gen_synthetic(SyntheticKind::kTwoLevelMarkov, p, 1e6, 1, 5);
  ASSERT_EQ(t.samples().size(), 1000000u);
  std::size_t high = 0;
  for (const auto& s : t.samples()) high += s.rate == 200 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(high) / 1e6, 0.5, 0.02);
}

TEST(Traces, GeneratorRejectsInvalidParams) {
  SyntheticParams p;
  p.p_switch = 1.5;
  EXPECT_THROW(gen_synthetic(SyntheticKind::kTwoLevelMarkov, p, 100, 1, 0), ConfigError);
  SyntheticParams q;
  q.rate = 0;
  EXPECT_THROW(gen_synthetic(SyntheticKind::kConstant, q, 100, 1, 0), ConfigError);
  EXPECT_THROW(gen_synthetic(SyntheticKind::kConstant, {}, 0, 1, 0), ConfigError);
  EXPECT_THROW(gen_synthetic(SyntheticKind::kConstant, {}, 100, -1, 0), ConfigError);
  EXPECT_THROW(parse_synthetic_kind("sine"), ConfigError);
}

TEST(Traces, LognormalWalkStaysWithinClamp) {
  SyntheticParams p;
  p.mean = 50;
  p.sigma = 0.5;
  p.min_rate = 10;
  p.max_rate = 100;
  const Trace t = gen_synthetic(SyntheticKind::kLognormalWalk, p, 1e5, 10, 1);
  for (const auto& s : t.samples()) {
    EXPECT_GE(s.rate, 10 * (1 - 1e-12));
    EXPECT_LE(s.rate, 100 * (1 + 1e-12));
  }
}
