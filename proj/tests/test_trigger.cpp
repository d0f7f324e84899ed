#include <gtest/gtest.h>

#include "rftrojan/trigger.hpp"
#include "support.hpp"

using namespace rft;
using namespace rft::trigger;

namespace {

TriggerConfig config(std::uint32_t n_set = 1837) {
  TriggerConfig c;
  c.set_pattern = PatternSpec(32, {{1, true}, {0, false}});
  c.n_set = n_set;
  return c;
}

// Feeds an ON/OFF schedule and returns the hammer count at latch.
std::optional<std::uint64_t> drive(TriggerCell &cell, std::uint64_t on, std::uint64_t period, std::uint64_t cycles,
                                   double *peak = nullptr) {
  for (std::uint64_t c = 0; c < cycles; ++c) {
    auto t = cell.observe_cycle(c % period < on ? CycleEvent::hammer_set : CycleEvent::idle);
    if (peak)
      *peak = std::max(*peak, cell.charge_v());
    if (t == Transition::triggered)
      return cell.hammers();
  }
  return std::nullopt;
}

} // namespace

TEST(Pattern, MatchesRequiredBitsOnly) {
  PatternSpec p(32, {{1, true}, {0, false}});
  EXPECT_TRUE(p.matches(0x2));
  EXPECT_TRUE(p.matches(0xfffffffe));
  EXPECT_FALSE(p.matches(0x3));
  EXPECT_FALSE(p.matches(0x0));
  EXPECT_TRUE(match_pattern(p, 0x6));
}

TEST(Pattern, RejectsBitBeyondBus) {
  EXPECT_THROW(PatternSpec(32, {{40, true}}), std::invalid_argument);
  EXPECT_THROW(PatternSpec(32, {{3, true}, {3, false}}), std::invalid_argument);
  EXPECT_FALSE(PatternSpec::problems(32, std::vector<PatternTerm>{{40, true}}).empty());
}

TEST(Pattern, Overlap) {
  PatternSpec a(32, {{1, true}, {0, false}});
  EXPECT_TRUE(a.overlaps(PatternSpec(32, {{1, true}})));
  EXPECT_TRUE(a.overlaps(PatternSpec(32, {{5, true}})));
  EXPECT_FALSE(a.overlaps(PatternSpec(32, {{0, true}})));
}

TEST(Trigger, CalibrationValues) {
  auto c = calibrate(config());
  EXPECT_DOUBLE_EQ(c.delta_per_hammer, 0.5 / 1837);
  EXPECT_DOUBLE_EQ(c.leak_per_idle_cycle, 0.5 / 1837 * (3.0 / 7.0) * 0.95);
  EXPECT_THROW(calibrate(config(0)), std::invalid_argument);
}

TEST(Trigger, LatchesOnExactlyNSet) {
  for (std::uint32_t n : {1u, 2u, 7u, 92u, 1000u, 1836u, 1837u, 1838u, 5000u}) {
    TriggerCell cell(config(n));
    for (std::uint32_t i = 1; i < n; ++i)
      ASSERT_EQ(cell.observe_cycle(CycleEvent::hammer_set), std::nullopt) << "n_set=" << n << " hammer " << i;
    EXPECT_FALSE(cell.latched());
    EXPECT_EQ(cell.observe_cycle(CycleEvent::hammer_set), Transition::triggered) << "n_set=" << n;
    EXPECT_TRUE(cell.latched());
    EXPECT_EQ(cell.hammers(), n);
  }
}

TEST(Trigger, ChargeStaysWithinBounds) {
  TriggerCell cell(config());
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200000; ++i) {
    cell.observe_cycle(rng() % 3 ? CycleEvent::hammer_set : CycleEvent::idle);
    ASSERT_GE(cell.charge_v(), 0.0);
    ASSERT_LE(cell.charge_v(), 1.0 + 1e-12);
  }
}

TEST(Trigger, LatchIsSticky) {
  TriggerCell cell(config(10));
  for (int i = 0; i < 10; ++i)
    cell.observe_cycle(CycleEvent::hammer_set);
  ASSERT_TRUE(cell.latched());
  for (int i = 0; i < 100000; ++i)
    cell.observe_cycle(CycleEvent::idle);
  EXPECT_TRUE(cell.latched());
  EXPECT_EQ(cell.charge_v(), 0.0);
}

TEST(Trigger, CountedResetAfterExactlyNReset) {
  auto c = config();
  c.reset_address = 0x602400;
  c.reset_pattern = PatternSpec(32, {{1, false}, {0, true}});
  TriggerCell cell(c);
  for (int i = 0; i < 1837; ++i)
    cell.observe_cycle(CycleEvent::hammer_set);
  ASSERT_TRUE(cell.latched());
  for (int i = 1; i < 92; ++i) {
    ASSERT_EQ(cell.observe_cycle(CycleEvent::hammer_reset), std::nullopt) << i;
    ASSERT_TRUE(cell.latched());
  }
  EXPECT_EQ(cell.observe_cycle(CycleEvent::hammer_reset), Transition::reset);
  EXPECT_FALSE(cell.latched());
  EXPECT_EQ(cell.charge_v(), 0.0);
  EXPECT_EQ(cell.hammers(), 0u);
}

TEST(Trigger, ImmediateResetAfterOne) {
  auto c = config();
  c.reset_mode = ResetMode::immediate;
  TriggerCell cell(c);
  for (int i = 0; i < 1837; ++i)
    cell.observe_cycle(CycleEvent::hammer_set);
  ASSERT_TRUE(cell.latched());
  EXPECT_EQ(cell.observe_cycle(CycleEvent::hammer_reset), Transition::reset);
  EXPECT_FALSE(cell.latched());
}

TEST(Trigger, ResetOfUnlatchedCellIsSilent) {
  auto c = config();
  c.reset_mode = ResetMode::immediate;
  TriggerCell cell(c);
  for (int i = 0; i < 100; ++i)
    cell.observe_cycle(CycleEvent::hammer_set);
  EXPECT_EQ(cell.observe_cycle(CycleEvent::hammer_reset), std::nullopt);
  EXPECT_EQ(cell.charge_v(), 0.0);
}

// The duty-cycle counts are derived from the calibration; the integer oracle
// recomputes them with exact arithmetic.
TEST(Trigger, DutyCycleMatchesIntegerOracle) {
  for (std::uint64_t on : {20u, 28u, 29u, 30u, 31u, 35u, 50u, 75u, 100u}) {
    TriggerCell cell(config());
    double peak = 0.0;
    auto got = drive(cell, on, 100, 1000000, &peak);
    auto want = test::duty_oracle(static_cast<std::int64_t>(on), 100, 1000000);
    ASSERT_EQ(got.has_value(), want.hammers_to_latch.has_value()) << "on=" << on;
    if (got)
      EXPECT_EQ(static_cast<std::int64_t>(*got), *want.hammers_to_latch) << "on=" << on;
    else
      EXPECT_NEAR(peak / calibrate(config()).delta_per_hammer, want.peak_steps, 1e-6) << "on=" << on;
  }
}

TEST(Trigger, DutyThirtyLatchesLate) {
  TriggerCell cell(config());
  auto got = drive(cell, 30, 100, 1000000);
  ASSERT_TRUE(got);
  EXPECT_GT(*got, 1837u);
  EXPECT_EQ(*got, 36180u);
}

TEST(Trigger, DutyTwentyNeverLatches) {
  TriggerCell cell(config());
  double peak = 0.0;
  EXPECT_FALSE(drive(cell, 20, 100, 1000000, &peak));
  EXPECT_LT(peak, 0.3 * 0.5);
  EXPECT_NEAR(peak, 20 * 0.5 / 1837, 1e-12);
}

TEST(Trigger, LeakRatioSeparatesTwentyAndThirtyPercent) {
  // Per 100-cycle period, net charge is on - (100 - on) * r steps.
  const double r = leak_ratio(0.05);
  EXPECT_GT(30 - 70 * r, 0.0);
  EXPECT_LT(20 - 80 * r, 0.0);
  // The latch boundary sits between 28% and 29%.
  EXPECT_LT(28 - 72 * r, 0.0);
  EXPECT_GT(29 - 71 * r, 0.0);
}
