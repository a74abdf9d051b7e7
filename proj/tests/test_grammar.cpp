#include <gtest/gtest.h>

#include <map>

#include "oracle.hpp"
#include "rgi/rgi.hpp"

using namespace rgi;

TEST(Random, HashAndSeedSplitConstants) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(split_seed(5, "grammar"), splitmix64(5 ^ fnv1a64("grammar")));
  EXPECT_NE(split_seed(5, "grammar"), split_seed(5, "data"));
}

TEST(Random, GeometricMeanAndSupport) {
  Engine rng(11);
  double sum = 0;
  std::uint64_t min = 100;
  for (int i = 0; i < 10000; ++i) {
    const auto k = geometric(rng, 1.0 / 3.0);
    sum += static_cast<double>(k);
    min = std::min(min, k);
  }
  EXPECT_GE(min, 1u);
  EXPECT_NEAR(sum / 10000, 3.0, 0.15);
}

TEST(Random, SampleDistinctIsSortedAndDistinct) {
  Engine rng(3);
  for (std::uint64_t k : {0u, 1u, 7u, 50u}) {
    const auto s = sample_distinct(rng, 50, k);
    ASSERT_EQ(s.size(), k);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
    for (auto x : s) EXPECT_LT(x, 50u);
  }
}

TEST(Random, SampleDistinctIsUniform) {
  Engine rng(9);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 20000; ++i)
    for (auto x : sample_distinct(rng, 10, 3)) ++hits[x];
  for (int h : hits) EXPECT_NEAR(h / 20000.0, 0.3, 0.02);
}

TEST(Random, ShuffleIsAPermutation) {
  Engine rng(4);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  auto w = v;
  shuffle(w, rng);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Grammar, ExampleGrammarIsValid) {
  const auto g = example_grammar();
  EXPECT_TRUE(validate(g).empty());
  EXPECT_EQ(g.productions.size(), 7u);
  EXPECT_EQ(g.nonterminals[g.start], "C");
}

TEST(Grammar, DeriveWordsCountsByLength) {
  const auto words = derive_words(example_grammar(), 3);
  std::map<std::size_t, int> by_len;
  for (const auto& w : words) ++by_len[w.size()];
  EXPECT_EQ(by_len[1], 1);
  EXPECT_EQ(by_len[2], 3);
  EXPECT_EQ(by_len[3], 7);
  EXPECT_EQ(words.size(), 11u);
}

TEST(Grammar, DeriveWordsMatchesTopDownOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = random_grammar({3, 3, 2.5, 0.4, seed});
    const auto words = derive_words(g, 5);
    EXPECT_EQ(WordSet(words.begin(), words.end()), oracle::language(g, 5)) << "seed " << seed;
  }
}

TEST(Grammar, RandomGrammarInvariants) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto g = random_grammar({4, 1 + seed % 4, 1.0 + static_cast<double>(seed % 5), 0.4, seed});
    EXPECT_TRUE(validate(g).empty()) << "seed " << seed;
    const auto reach = reachable_nonterminals(g);
    EXPECT_TRUE(std::all_of(reach.begin(), reach.end(), [](bool b) { return b; })) << "seed " << seed;
    EXPECT_TRUE(std::any_of(g.productions.begin(), g.productions.end(),
                            [](const Production& p) { return p.is_terminal(); }));
    EXPECT_TRUE(std::is_sorted(g.productions.begin(), g.productions.end()));
  }
}

TEST(Grammar, RandomGrammarIsDeterministic) {
  const GenConfig cfg{4, 3, 3, 0.4, 77};
  EXPECT_EQ(random_grammar(cfg), random_grammar(cfg));
  EXPECT_NE(random_grammar(cfg), random_grammar({4, 3, 3, 0.4, 78}));
}

TEST(Grammar, RejectsBadConfig) {
  EXPECT_THROW(random_grammar({0, 3, 2, 0.4, 0}), std::invalid_argument);
  EXPECT_THROW(random_grammar({4, 0, 2, 0.4, 0}), std::invalid_argument);
  EXPECT_THROW(random_grammar({4, 3, 0.5, 0.4, 0}), std::invalid_argument);
  EXPECT_THROW(random_grammar({4, 3, 2, 1.0, 0}), std::invalid_argument);
}

TEST(Grammar, ValidateReportsProblems) {
  auto g = example_grammar();
  g.productions.push_back(Production::terminal_rule(7, 0));
  EXPECT_FALSE(validate(g).empty());

  g = example_grammar();
  g.productions.erase(std::remove_if(g.productions.begin(), g.productions.end(),
                                     [](const Production& p) { return p.is_terminal(); }),
                      g.productions.end());
  EXPECT_FALSE(validate(g).empty());
}

TEST(Grammar, TextAndWords) {
  const auto g = example_grammar();
  const auto text = to_text(g);
  EXPECT_NE(text.find("start: C"), std::string::npos);
  EXPECT_NE(text.find("C -> A c"), std::string::npos);
  const auto w = parse_word(g.terminals, "abc");
  EXPECT_EQ(w, (Word{0, 1, 2}));
  EXPECT_EQ(render_word(g.terminals, w), "abc");
  EXPECT_THROW(parse_word(g.terminals, "abz"), DataError);
}
