#include <gtest/gtest.h>

#include <map>
#include <set>

#include "oracle.hpp"
#include "rgi/rgi.hpp"

using namespace rgi;

namespace {

const std::vector<std::string> kAbc{"a", "b", "c"};

std::set<std::string> words_of(const std::vector<Example>& xs) {
  std::set<std::string> out;
  for (const auto& e : xs) out.insert(render_word(kAbc, e.word));
  return out;
}

}  // namespace

TEST(Dataset, Positives) {
  const auto d = oracle::worked_dfa();
  EXPECT_EQ(words_of(gen_positives(d, 2, std::nullopt, 1)), (std::set<std::string>{"c", "ac", "bc", "cc"}));
  EXPECT_EQ(words_of(gen_positives(d, 1, std::nullopt, 1)), (std::set<std::string>{"c"}));
  for (const auto& e : gen_positives(d, 2, std::nullopt, 1)) EXPECT_TRUE(e.positive);
}

TEST(Dataset, NonAcceptingPaths) {
  const auto xs = gen_neg_nonaccepting(oracle::worked_dfa(), 2, std::nullopt, 1);
  EXPECT_EQ(words_of(xs), (std::set<std::string>{"a", "b", "aa", "ab", "ba", "bb"}));
  for (const auto& e : xs) EXPECT_EQ(e.category, Category::non_accepting_path);
}

TEST(Dataset, InvalidPostfix) {
  const auto d = oracle::worked_dfa();
  EXPECT_EQ(words_of(gen_neg_invalid_postfix(d, 2, std::nullopt, 1)), (std::set<std::string>{"ca", "cb"}));
  const auto deeper = gen_neg_invalid_postfix(d, 3, std::nullopt, 1);
  EXPECT_EQ(words_of(deeper), (std::set<std::string>{"ca", "cb", "aca", "acb", "bca", "bcb", "cca", "ccb"}));
}

TEST(Dataset, InvalidPostfixMatchesDefinition) {
  // every live-path prefix followed by a letter that leaves the live states
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = random_grammar({3, 3, 2, 0.4, seed});
    const auto d = min_dfa(g);
    const auto live = live_states(d);
    std::set<Word> expected;
    for (const auto& w : oracle::all_words(3, 5)) {
      State s = d.initial;
      bool ok = live[s];
      for (std::size_t i = 0; ok && i + 1 < w.size(); ++i) {
        s = d.next(s, w[i]);
        ok = live[s];
      }
      if (ok && !live[d.next(s, w.back())]) expected.insert(w);
    }
    std::set<Word> got;
    for (const auto& e : gen_neg_invalid_postfix(d, 5, std::nullopt, 1)) got.insert(e.word);
    EXPECT_EQ(got, expected) << "seed " << seed;
  }
}

TEST(Dataset, InvalidInfixWordsAreRejectedAndWellFormed) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = random_grammar({3, 3, 3, 0.4, seed});
    const auto d = min_dfa(g);
    const auto live = live_states(d);
    const auto xs = gen_neg_invalid_infix(d, 6, std::nullopt, 2);
    std::set<Word> postfix;
    for (const auto& e : gen_neg_invalid_postfix(d, 5, std::nullopt, 1)) postfix.insert(e.word);
    for (const auto& e : xs) {
      EXPECT_FALSE(e.positive);
      EXPECT_FALSE(oracle::in_language(g, e.word));
      EXPECT_LE(e.word.size(), 6u);
      // some split is an invalid postfix word followed by a non-empty tail
      // that ends in an accepting state from some live state
      bool found = false;
      for (std::size_t k = 1; k < e.word.size() && !found; ++k) {
        if (!postfix.contains(Word(e.word.begin(), e.word.begin() + k))) continue;
        for (State s = 0; s < d.state_count() && !found; ++s) {
          if (!live[s]) continue;
          State q = s;
          bool ok = true;
          for (std::size_t i = k; i < e.word.size() && ok; ++i) {
            q = d.next(q, e.word[i]);
            ok = live[q];
          }
          found = ok && d.accepting[q];
        }
      }
      EXPECT_TRUE(found) << "seed " << seed;
    }
  }
}

TEST(Dataset, RandomNegatives) {
  const auto d = oracle::worked_dfa();
  const auto xs = gen_neg_random(d, 4, 30, 8);
  EXPECT_EQ(xs.size(), 30u);
  std::set<Word> seen;
  for (const auto& e : xs) {
    EXPECT_FALSE(d.accepts(e.word));
    EXPECT_TRUE(seen.insert(e.word).second);
    EXPECT_GE(e.word.size(), 1u);
    EXPECT_LE(e.word.size(), 4u);
  }
  // only a and b are rejected at length 1
  EXPECT_EQ(gen_neg_random(d, 1, 10, 8).size(), 2u);
}

TEST(Dataset, RandomWordLengthIsUniform) {
  Engine rng(17);
  std::map<std::size_t, int> lengths;
  for (int i = 0; i < 10000; ++i) ++lengths[random_word(rng, 3, 4).size()];
  for (std::size_t len = 1; len <= 4; ++len) EXPECT_NEAR(lengths[len] / 10000.0, 0.25, 0.02);
}

TEST(Dataset, AssembleWorkedExampleDepthTwo) {
  const auto ds = assemble(oracle::worked_dfa(), 2, DatasetCaps::unlimited(), 1);
  EXPECT_EQ(ds.examples.size(), 8u);
  EXPECT_EQ(ds.positives(), 4u);
  EXPECT_EQ(ds.negatives(), 4u);
  const std::set<std::string> candidates{"a", "b", "aa", "ab", "ba", "bb", "ca", "cb"};
  std::set<std::string> seen;
  for (const auto& e : ds.examples) {
    const auto w = render_word(kAbc, e.word);
    EXPECT_TRUE(seen.insert(w).second);
    if (!e.positive) {
      EXPECT_TRUE(candidates.contains(w)) << w;
    }
  }
}

TEST(Dataset, AssembleIsDeterministicAndLabelsAreTrue) {
  const auto g = random_grammar({4, 3, 3, 0.4, 12});
  const auto d = min_dfa(g);
  const auto a = assemble(d, 7, {}, 99);
  EXPECT_EQ(a, assemble(d, 7, {}, 99));
  EXPECT_EQ(a.positives(), a.negatives());
  for (const auto& e : a.examples) EXPECT_EQ(e.positive, oracle::in_language(g, e.word));
}

TEST(Dataset, AssembleTopsUpWithRandomNegatives) {
  // capped structured negatives leave a shortfall that random words fill
  const auto d = oracle::worked_dfa();
  const auto ds = assemble(d, 6, {std::nullopt, Count{1}, Count{1}, Count{1}}, 4);
  EXPECT_EQ(ds.positives(), 120u);
  EXPECT_EQ(ds.negatives(), 120u);
  std::size_t random = 0;
  std::set<Word> seen;
  for (const auto& e : ds.examples) {
    random += e.category == Category::random_negative;
    EXPECT_EQ(e.positive, d.accepts(e.word));
    EXPECT_TRUE(seen.insert(e.word).second);
  }
  EXPECT_GE(random, 117u);
}

TEST(Dataset, AssembleSubsamplesPositivesWhenNegativesRunOut) {
  // words over {a, b} containing an a: the only negatives are b, bb, ...
  Grammar g;
  g.terminals = {"a", "b"};
  g.nonterminals = {"A", "B"};
  g.productions = {Production::terminal_rule(0, 0), Production::chain_rule(0, 0, 0),
                   Production::chain_rule(0, 0, 1), Production::chain_rule(0, 1, 0),
                   Production::terminal_rule(1, 1), Production::chain_rule(1, 1, 1)};
  g.normalize();
  const auto ds = assemble(min_dfa(g), 5, {}, 2);
  EXPECT_EQ(ds.negatives(), 5u);
  EXPECT_EQ(ds.positives(), 5u);
}

TEST(Dataset, AssembleEmptyLanguageThrows) {
  Dfa d(1, 2);
  d.set(0, 0, 0);
  d.set(0, 1, 0);
  EXPECT_THROW(assemble(d, 4, {}, 1), DataError);
}

TEST(Dataset, StratifiedSubsampleSpreadsOverLengths) {
  std::vector<Example> xs;
  for (int i = 0; i < 2; ++i) xs.push_back({Word(1, 0), false, Category::invalid_postfix});
  for (int i = 0; i < 100; ++i) xs.push_back({Word(5, 0), false, Category::invalid_postfix});
  for (int i = 0; i < 100; ++i) xs.push_back({Word(6, 0), false, Category::invalid_postfix});
  Engine rng(1);
  const auto kept = detail::stratified_subsample(xs, 20, rng, detail::example_length);
  std::map<std::size_t, int> by_len;
  for (const auto& e : kept) ++by_len[e.word.size()];
  EXPECT_EQ(kept.size(), 20u);
  EXPECT_EQ(by_len[1], 2);
  EXPECT_EQ(by_len[5] + by_len[6], 18);
  EXPECT_LE(std::abs(by_len[5] - by_len[6]), 1);
}

TEST(Dataset, FilterMaxLen) {
  const auto ds = assemble(oracle::worked_dfa(), 2, DatasetCaps::unlimited(), 1);
  const auto f = filter_max_len(ds, 1);
  EXPECT_EQ(f.depth, 1u);
  ASSERT_EQ(f.examples.size(), 2u);
  EXPECT_EQ(f.positives(), 1u);
  for (const auto& e : f.examples) {
    const auto w = render_word(kAbc, e.word);
    if (e.positive)
      EXPECT_EQ(w, "c");
    else
      EXPECT_TRUE(w == "a" || w == "b");
  }
  EXPECT_THROW(filter_max_len(ds, 3), std::invalid_argument);
  EXPECT_EQ(filter_max_len(ds, 2).examples.size(), ds.examples.size());
}

TEST(Dataset, LabelSoundnessAcrossGrammars) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = random_grammar({1 + seed % 4, 1 + seed % 3, 2, 0.4, seed});
    const auto d = min_dfa(g);
    if (total(count_words(d, 6)) == 0) continue;
    const auto ds = assemble(d, 6, {}, seed);
    for (const auto& e : ds.examples) ASSERT_EQ(d.accepts(e.word), e.positive) << "seed " << seed;
    EXPECT_EQ(ds.positives(), ds.negatives()) << "seed " << seed;
  }
}

TEST(Dataset, DefaultCapsBalanceAtDepthSixteen) {
  const auto ds = assemble(oracle::worked_dfa(), 16, {}, 3);
  EXPECT_LE(std::max(ds.positives(), ds.negatives()) - std::min(ds.positives(), ds.negatives()), 1u);
  EXPECT_EQ(ds.positives(), 2000u);
}
