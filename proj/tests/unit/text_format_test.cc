#include "sfmsemval/text_format.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace sfmsemval {
namespace {

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(FormatDouble(180.35), "180.35");
  EXPECT_EQ(FormatDouble(-0.036), "-0.036");
  EXPECT_EQ(FormatDouble(1.0), "1");
  EXPECT_EQ(FormatDouble(-0.0), "0");
  for (const double v : {0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, M_PI}) {
    double parsed = 0.0;
    ASSERT_TRUE(ParseDouble(FormatDouble(v), &parsed));
    EXPECT_EQ(parsed, v);
  }
}

TEST(FormatCount, ThousandsSeparators) {
  EXPECT_EQ(FormatCount(0), "0");
  EXPECT_EQ(FormatCount(999), "999");
  EXPECT_EQ(FormatCount(1000), "1,000");
  EXPECT_EQ(FormatCount(272017), "272,017");
  EXPECT_EQ(FormatCount(1929064), "1,929,064");
  EXPECT_EQ(FormatCount(-82533), "-82,533");
}

TEST(FormatSignificant, SixDigits) {
  EXPECT_EQ(FormatSignificant(1611163.0 / 272017.0, 6), "5.92302");
  EXPECT_EQ(FormatSignificant(1611163.0 / 1102.0, 6), "1462.04");
  EXPECT_EQ(FormatSignificant(2.5, 6), "2.5");
}

TEST(Parse, RejectsJunk) {
  double d = 0;
  std::int64_t i = 0;
  std::uint64_t u = 0;
  EXPECT_TRUE(ParseDouble("1e-3", &d));
  EXPECT_DOUBLE_EQ(d, 1e-3);
  EXPECT_FALSE(ParseDouble("1.0x", &d));
  EXPECT_FALSE(ParseDouble("", &d));
  EXPECT_TRUE(ParseInt64("-1", &i));
  EXPECT_EQ(i, -1);
  EXPECT_FALSE(ParseInt64("3.5", &i));
  EXPECT_FALSE(ParseUInt64("-1", &u));
  EXPECT_TRUE(ParseUInt64("18446744073709551615", &u));
  EXPECT_EQ(u, std::numeric_limits<std::uint64_t>::max());
}

TEST(SplitWhitespace, CollapsesRuns) {
  const auto tokens = SplitWhitespace("  a \t bb  c ");
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[1], "bb");
  EXPECT_EQ(Trim("  x y \n"), "x y");
}

}  // namespace
}  // namespace sfmsemval
