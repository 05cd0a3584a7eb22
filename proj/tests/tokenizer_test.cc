// Copyright 2026 The climsoup Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "climsoup/tokenizer.h"

#include <gtest/gtest.h>

namespace climsoup {
namespace {

using Tokens = std::vector<std::string>;

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(Tokenize("Clean Energy, NOW!"), (Tokens{"clean", "energy", "now"}));
  EXPECT_EQ(Tokenize("  "), Tokens{});
  EXPECT_EQ(Tokenize("co2_levels 2030"), (Tokens{"co2_levels", "2030"}));
  EXPECT_EQ(Tokenize("don't"), (Tokens{"don", "t"}));
}

TEST(Tokenize, CurlyApostropheSplitsLikeAscii) {
  EXPECT_EQ(Tokenize("don’t"), Tokenize("don't"));
}

TEST(Tokenize, NonAsciiLettersStayInWords) {
  EXPECT_EQ(Tokenize("café jobs"), (Tokens{"café", "jobs"}));
}

TEST(SplitSentences, SplitsAtTerminalPunctuation) {
  EXPECT_EQ(SplitSentences("Gas works. Does wind? Yes!"),
            (Tokens{"Gas works.", "Does wind?", "Yes!"}));
  EXPECT_EQ(SplitSentences("3.5 million jobs"), Tokens{"3.5 million jobs"});
}

TEST(Vocabulary, SpecialsFirst) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.Token(Vocabulary::kPad), "[PAD]");
  EXPECT_EQ(v.Token(Vocabulary::kUnk), "[UNK]");
  EXPECT_EQ(v.Token(Vocabulary::kSep), "[SEP]");
  EXPECT_EQ(v.Id("missing"), Vocabulary::kUnk);
}

TEST(Vocabulary, FrequencyThenLexicographicOrder) {
  Vocabulary v = Vocabulary::Build({"b a c a", "c b d"}, 100, {"energy_jobs"});
  // specials, reserved, then a/b/c tied at 2 and d at 1
  ASSERT_EQ(v.size(), 8u);
  EXPECT_EQ(v.Token(3), "energy_jobs");
  EXPECT_EQ(v.Token(4), "a");
  EXPECT_EQ(v.Token(5), "b");
  EXPECT_EQ(v.Token(6), "c");
  EXPECT_EQ(v.Token(7), "d");
}

TEST(Vocabulary, MaxSizeCapsTheTail) {
  Vocabulary v = Vocabulary::Build({"x x x y y z"}, 5);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_TRUE(v.Contains("x"));
  EXPECT_TRUE(v.Contains("y"));
  EXPECT_FALSE(v.Contains("z"));
}

TEST(Vocabulary, EncodeTruncates) {
  std::string text;
  for (int i = 0; i < 200; ++i) text += "w ";
  Vocabulary v = Vocabulary::Build({"w"}, 10);
  auto ids = v.Encode(text);
  EXPECT_EQ(ids.size(), kMaxSeqLen);
  EXPECT_EQ(ids.front(), v.Id("w"));
  EXPECT_EQ(v.Encode("w unknown"), (std::vector<int>{v.Id("w"), Vocabulary::kUnk}));
}

TEST(Vocabulary, SerializeRoundTrip) {
  Vocabulary v = Vocabulary::Build({"solar wind solar"}, 50, {"t1"});
  Vocabulary back = Vocabulary::Parse(v.Serialize());
  EXPECT_EQ(back.size(), v.size());
  EXPECT_EQ(back.Digest(), v.Digest());
  for (size_t i = 0; i < v.size(); ++i) EXPECT_EQ(back.Token(static_cast<int>(i)), v.Token(static_cast<int>(i)));
}

}  // namespace
}  // namespace climsoup
