#include <gtest/gtest.h>

#include "rftrojan/payload.hpp"

using namespace rft;
using namespace rft::payload;

namespace {

trigger::PatternSpec pset() { return trigger::PatternSpec(32, {{1, true}, {0, false}}); }

Attachment bc(BcForce force = BcForce::zeros) {
  return {BcParams{3, 0x3, force}, Control{0x602010, 0x602040, pset()}};
}

Attachment rp(unsigned port = 2) {
  return {RpParams{3, 0x3, port, 4, {Polarity::one_to_zero}}, Control{0x602080, 0, pset()}};
}

Attachment lbl() { return {LblParams{0, 1, 0, false, 4}, Control{0, 0x6020C0, pset()}}; }

} // namespace

TEST(Payload, DormantWhileUnlatched) {
  PayloadSet set({bc(), rp(), lbl()});
  EXPECT_TRUE(set.on_bus_write(false, 0x602010, 0x2, 0).empty());
  EXPECT_TRUE(set.on_bus_write(false, 0x602080, 0x2, 0).empty());
  EXPECT_TRUE(set.on_bus_write(false, 0x6020C0, 0x2, 0).empty());
  for (unsigned port = 0; port < 4; ++port)
    for (unsigned e = 0; e < 256; ++e)
      ASSERT_EQ(set.filter_read(port, e, 0xdeadbeef, 1), 0xdeadbeefu);
}

TEST(Payload, BcForcesZerosAndOnes) {
  PayloadSet set({bc(BcForce::both)});
  regfile::RegisterFile rf;
  rf.write(0, 3, 0x23);
  rf.commit();
  auto acts = set.on_bus_write(true, 0x602010, 0x2, 5);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_FALSE(acts[0].level);
  auto fire = PayloadSet::apply_bc(set.attachments()[0], acts[0], rf);
  EXPECT_EQ(fire.before, 0x23u);
  EXPECT_EQ(fire.after, 0x20u);
  acts = set.on_bus_write(true, 0x602040, 0x2, 6);
  ASSERT_EQ(acts.size(), 1u);
  PayloadSet::apply_bc(set.attachments()[0], acts[0], rf);
  EXPECT_EQ(rf.stored(3), 0x23u);
}

TEST(Payload, BcNeedsPatternAndAddress) {
  PayloadSet set({bc()});
  EXPECT_TRUE(set.on_bus_write(true, 0x602010, 0x3, 0).empty());
  EXPECT_TRUE(set.on_bus_write(true, 0x602014, 0x2, 0).empty());
  // Zeros-only circuit has no force-to-ones transistor.
  EXPECT_TRUE(set.on_bus_write(true, 0x602040, 0x2, 0).empty());
}

TEST(Payload, RpPolarityFollowsPattern) {
  PayloadSet set({rp()});
  auto acts = set.on_bus_write(true, 0x602080, 0x2, 10);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_TRUE(acts[0].level);
  EXPECT_EQ(acts[0].until, 14u);
  EXPECT_EQ(set.filter_read(2, 3, 0x23, 10), 0x20u);
  EXPECT_EQ(set.filter_read(1, 3, 0x23, 10), 0x23u);
  EXPECT_EQ(set.filter_read(2, 4, 0x23, 10), 0x23u);

  PayloadSet other({rp()});
  acts = other.on_bus_write(true, 0x602080, 0x5, 10);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_FALSE(acts[0].level);
  EXPECT_EQ(other.filter_read(2, 3, 0x20, 11), 0x23u);
}

TEST(Payload, WindowExpires) {
  PayloadSet set({rp()});
  set.on_bus_write(true, 0x602080, 0x2, 10);
  for (Cycle c = 10; c < 14; ++c) {
    EXPECT_TRUE(set.window_active(0, c));
    EXPECT_TRUE(set.expire(c).empty());
  }
  EXPECT_FALSE(set.window_active(0, 14));
  EXPECT_EQ(set.expire(14), std::vector<std::size_t>{0});
  EXPECT_EQ(set.filter_read(2, 3, 0x23, 14), 0x23u);
  EXPECT_TRUE(set.expire(15).empty());
}

TEST(Payload, LblAffectsWholeGroupOnOnePort) {
  PayloadSet set({lbl()});
  ASSERT_EQ(set.on_bus_write(true, 0x6020C0, 0x2, 0).size(), 1u);
  for (unsigned port = 0; port < 4; ++port) {
    for (unsigned e = 0; e < 256; ++e) {
      const Word raw = 0xffffffff;
      const Word got = set.filter_read(port, e, raw, 1);
      if (port == 0 && e < 16)
        EXPECT_EQ(raw ^ got, 0x2u) << e;
      else
        EXPECT_EQ(got, raw) << port << "/" << e;
    }
  }
}

TEST(Payload, RejectsInvalidAttachments) {
  auto a = rp(4);
  EXPECT_FALSE(problems(a, {}).empty());
  EXPECT_THROW(PayloadSet({a}), std::invalid_argument);
  auto b = lbl();
  std::get<LblParams>(b.params).group_index = 16;
  EXPECT_FALSE(problems(b, {}).empty());
  auto c = bc();
  std::get<BcParams>(c.params).bit_mask = 0;
  EXPECT_FALSE(problems(c, {}).empty());
  EXPECT_TRUE(problems(bc(), {}).empty());
}

TEST(Overhead, SixRowsBitExact) {
  struct Row {
    Kind kind;
    Polarity pol;
    double s, d, a;
    unsigned wl;
  };
  const Row want[] = {
      {Kind::bc, Polarity::zero_to_one, 0.079, 62.44, 0.056, 24},
      {Kind::bc, Polarity::one_to_zero, 0.083, 8.37, 0.023, 4},
      {Kind::rp, Polarity::zero_to_one, 12.93, 45.38, 0.048, 6},
      {Kind::rp, Polarity::one_to_zero, 33.73, 112.34, 0.064, 15},
      {Kind::lbl, Polarity::zero_to_one, 35.28, 57.54, 0.022, 3},
      {Kind::lbl, Polarity::one_to_zero, 11.26, 24.57, 0.026, 7},
  };
  ASSERT_EQ(table_rows().size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto &r = table_rows()[i];
    EXPECT_EQ(r.kind, want[i].kind);
    EXPECT_EQ(r.polarity, want[i].pol);
    EXPECT_EQ(r.static_power_nW, want[i].s);
    EXPECT_EQ(r.dynamic_power_uW, want[i].d);
    EXPECT_EQ(r.area_um2, want[i].a);
    EXPECT_EQ(r.min_w_over_l, want[i].wl);
    EXPECT_EQ(&table_row(want[i].kind, want[i].pol), &r);
  }
  EXPECT_EQ(table_row(Kind::lbl, Polarity::one_to_zero).use_case, "DoS");
  EXPECT_EQ(table_row(Kind::bc, Polarity::zero_to_one).use_case, "Kernel Leak");
  EXPECT_THROW(table_row(static_cast<Kind>(7), Polarity::zero_to_one), UnknownVariant);
}

TEST(Overhead, ReportListsBuiltPolarities) {
  std::vector<Attachment> as = {bc(BcForce::both), rp(), lbl()};
  auto rows = overhead_report(as);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].polarity, Polarity::zero_to_one);
  EXPECT_EQ(rows[1].polarity, Polarity::one_to_zero);
  EXPECT_EQ(rows[2].kind, Kind::rp);
  EXPECT_EQ(rows[3].kind, Kind::lbl);
  EXPECT_EQ(rows[3].polarity, Polarity::one_to_zero);
}
