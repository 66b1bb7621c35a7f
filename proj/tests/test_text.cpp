#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "zosd/stopwords.hpp"
#include "zosd/text.hpp"

using namespace zosd;

TEST(Text, LowercaseAsciiAndBeyond) {
  EXPECT_EQ(to_lower_utf8("Dog"), "dog");
  EXPECT_EQ(to_lower_utf8("ÉCOLE"), "école");
  EXPECT_EQ(to_lower_utf8("ŁÓDŹ"), "łódź");
  EXPECT_EQ(to_lower_utf8("ΣΚΎΛΟΣ"), "σκύλοσ");
  EXPECT_EQ(to_lower_utf8("СОБАКА"), "собака");
  EXPECT_EQ(to_lower_utf8("日本"), "日本");
  EXPECT_EQ(fold_key("Truck"), fold_key("TRUCK"));
}

TEST(Text, InvalidBytesPassThrough) {
  const std::string bad = "A\xff" "B";
  EXPECT_FALSE(is_valid_utf8(bad));
  EXPECT_EQ(to_lower_utf8(bad), "a\xff" "b");
  EXPECT_TRUE(is_valid_utf8("naïve"));
  EXPECT_FALSE(is_valid_utf8("\xc0\xaf"));        // overlong
  EXPECT_FALSE(is_valid_utf8("\xed\xa0\x80"));    // surrogate
}

TEST(Text, Trim) {
  EXPECT_EQ(trim("  cat \t\n"), "cat");
  EXPECT_EQ(trim("   "), "");
  EXPECT_EQ(trim(""), "");
}

TEST(StopWords, EnglishListMembership) {
  const auto& s = StopList::english();
  EXPECT_TRUE(s.contains("the"));
  EXPECT_TRUE(s.contains("The"));
  EXPECT_TRUE(s.contains("OF"));
  EXPECT_FALSE(s.contains("dog"));
  EXPECT_FALSE(s.contains("photo"));
  for (const auto& w : s.words()) EXPECT_EQ(w, to_lower_utf8(w));
}

TEST(StopWords, CustomListsNormalize) {
  StopList s{" Foo ", "", "BAR"};
  EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.contains("foo"));
  EXPECT_TRUE(s.contains("Bar"));
  const std::vector<std::string> words{"x", "Y"};
  StopList r(words);
  EXPECT_TRUE(r.contains("y"));
}
