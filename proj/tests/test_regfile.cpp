#include <gtest/gtest.h>

#include <map>
#include <random>

#include "rftrojan/regfile.hpp"

using namespace rft;
using namespace rft::regfile;

TEST(RegFile, DefaultGeometry) {
  Geometry g;
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.entries, 256u);
  EXPECT_EQ(g.read_ports, 4u);
  EXPECT_EQ(g.write_ports, 4u);
  EXPECT_EQ(g.word_mask(), 0xffffffffu);
}

TEST(RegFile, RejectsBadGeometry) {
  Geometry g;
  g.cells_per_lbl = 8;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = {};
  g.read_ports = 0;
  EXPECT_THROW(RegisterFile{g}, std::invalid_argument);
}

TEST(RegFile, LblGroup) {
  EXPECT_EQ(lbl_group(0), 0u);
  EXPECT_EQ(lbl_group(15), 0u);
  EXPECT_EQ(lbl_group(16), 1u);
  EXPECT_EQ(lbl_group(255), 15u);
  EXPECT_THROW(lbl_group(256), std::out_of_range);
  for (unsigned g = 0; g < 16; ++g) {
    unsigned members = 0;
    for (unsigned e = 0; e < 256; ++e)
      members += lbl_group(e) == g;
    EXPECT_EQ(members, 16u);
  }
}

TEST(RegFile, SameCycleBypass) {
  RegisterFile rf;
  rf.write(0, 5, 0xabcd);
  EXPECT_EQ(rf.stored(5), 0u);
  for (unsigned p = 0; p < 4; ++p)
    EXPECT_EQ(rf.read(p, 5), 0xabcdu);
  auto done = rf.commit();
  ASSERT_EQ(done.size(), 1u);
  EXPECT_EQ(rf.stored(5), 0xabcdu);
  EXPECT_EQ(rf.cycle(), 1u);
}

TEST(RegFile, WriteConflictOnSameEntry) {
  RegisterFile rf;
  rf.write(0, 7, 1);
  try {
    rf.write(1, 7, 2);
    FAIL() << "expected WriteConflict";
  } catch (const WriteConflict &e) {
    EXPECT_EQ(e.entry(), 7u);
  }
  EXPECT_NO_THROW(rf.write(1, 8, 2));
  rf.commit();
  EXPECT_NO_THROW(rf.write(2, 7, 3));
}

TEST(RegFile, PortAndEntryBounds) {
  RegisterFile rf;
  EXPECT_THROW(rf.write(4, 0, 0), std::out_of_range);
  EXPECT_THROW(rf.write(0, 256, 0), std::out_of_range);
  EXPECT_THROW(rf.read(4, 0), std::out_of_range);
  EXPECT_THROW(rf.read(0, 256), std::out_of_range);
}

TEST(RegFile, ForceBits) {
  RegisterFile rf;
  rf.write(0, 3, 0x23);
  rf.commit();
  rf.force_bits(3, 0x3, false);
  EXPECT_EQ(rf.stored(3), 0x20u);
  rf.force_bits(3, 0x3, true);
  EXPECT_EQ(rf.stored(3), 0x23u);
}

TEST(RegFile, NarrowWordsAreMasked) {
  Geometry g;
  g.word_bits = 8;
  RegisterFile rf(g);
  rf.write(0, 0, 0x1ff);
  rf.commit();
  EXPECT_EQ(rf.stored(0), 0xffu);
}

namespace {

struct FlipPortTwo final : ReadFilter {
  Word filter_read(unsigned port, unsigned, Word raw, Cycle) const override { return port == 2 ? ~raw : raw; }
};

} // namespace

TEST(RegFile, FilterRunsAfterBypass) {
  RegisterFile rf;
  FlipPortTwo f;
  rf.write(0, 1, 0x0f);
  EXPECT_EQ(rf.read(1, 1, &f), 0x0fu);
  EXPECT_EQ(rf.read(2, 1, &f), ~Word{0x0f});
}

// Random traffic against a map model: committed state equals the last write.
TEST(RegFile, MatchesMapModel) {
  RegisterFile rf;
  std::map<unsigned, Word> model;
  std::mt19937_64 rng(11);
  for (int cycle = 0; cycle < 5000; ++cycle) {
    std::map<unsigned, Word> pending;
    for (unsigned port = 0; port < 4; ++port) {
      if (rng() % 2)
        continue;
      const unsigned e = rng() % 256;
      const Word d = static_cast<Word>(rng());
      if (pending.count(e)) {
        EXPECT_THROW(rf.write(port, e, d), WriteConflict);
      } else {
        rf.write(port, e, d);
        pending[e] = d;
      }
    }
    const unsigned probe = rng() % 256;
    const Word expect = pending.count(probe) ? pending[probe] : (model.count(probe) ? model[probe] : 0);
    ASSERT_EQ(rf.read(rng() % 4, probe), expect);
    rf.commit();
    for (auto [e, d] : pending)
      model[e] = d;
  }
  for (unsigned e = 0; e < 256; ++e)
    ASSERT_EQ(rf.stored(e), model.count(e) ? model[e] : 0u);
}
