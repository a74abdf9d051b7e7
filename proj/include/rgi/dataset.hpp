#pragma once

// Labelled example sets drawn from a ground-truth DFA: positives and four kinds
// of negatives, balanced 1:1.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rgi/automata.hpp"
#include "rgi/grammar.hpp"
#include "rgi/random.hpp"

namespace rgi {

/// Listed in de-duplication priority order.
enum class Category { positive, non_accepting_path, invalid_postfix, invalid_infix, random_negative };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::positive: return "positive";
    case Category::non_accepting_path: return "non_accepting_path";
    case Category::invalid_postfix: return "invalid_postfix";
    case Category::invalid_infix: return "invalid_infix";
    case Category::random_negative: return "random_negative";
  }
  return "?";
}

inline Category category_from_string(std::string_view s) {
  for (auto c : {Category::positive, Category::non_accepting_path, Category::invalid_postfix,
                 Category::invalid_infix, Category::random_negative})
    if (to_string(c) == s) return c;
  throw DataError("unknown example category '" + std::string(s) + "'");
}

struct Example {
  Word word;
  bool positive = false;
  Category category = Category::random_negative;

  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::size_t depth = 0;
  std::size_t alphabet_size = 0;
  std::vector<std::string> terminals;
  std::string grammar_id;
  std::uint64_t seed = 0;

  std::size_t positives() const {
    return static_cast<std::size_t>(
        std::count_if(examples.begin(), examples.end(), [](const Example& e) { return e.positive; }));
  }
  std::size_t negatives() const { return examples.size() - positives(); }

  bool operator==(const Dataset&) const = default;
};

/// Per-category sample limits; nullopt means unlimited.
struct DatasetCaps {
  std::optional<Count> positive = 2000;
  std::optional<Count> non_accepting_path = 2000;
  std::optional<Count> invalid_postfix = 2000;
  std::optional<Count> invalid_infix = 2000;

  static DatasetCaps unlimited() { return {std::nullopt, std::nullopt, std::nullopt, std::nullopt}; }
};

namespace detail {

inline std::vector<Example> label(std::vector<PathSpace::Entry> entries, bool positive, Category c) {
  std::vector<Example> out;
  out.reserve(entries.size());
  for (auto& e : entries) out.push_back({std::move(e.word), positive, c});
  return out;
}

inline std::optional<State> live_origin(const Dfa& dfa, const std::vector<bool>& live) {
  return live[dfa.initial] ? std::optional<State>(dfa.initial) : std::nullopt;
}

}  // namespace detail

inline std::vector<Example> gen_positives(const Dfa& dfa, std::size_t d, std::optional<Count> cap,
                                          std::uint64_t seed) {
  const auto y = enumerate_paths(dfa, d, {cap, Count{0}}, seed);
  std::vector<Example> out;
  for (const auto& item : y.accepting) out.push_back({item.word, true, Category::positive});
  return out;
}

inline std::vector<Example> gen_neg_nonaccepting(const Dfa& dfa, std::size_t d, std::optional<Count> cap,
                                                 std::uint64_t seed) {
  const auto y = enumerate_paths(dfa, d, {Count{0}, cap}, seed);
  std::vector<Example> out;
  for (const auto& item : y.rejecting) out.push_back({item.word, false, Category::non_accepting_path});
  return out;
}

/// Path words of length k <= d - 1 over useful transitions from a live
/// initial state, followed by one letter that is not useful where the path
/// ends.
inline std::vector<Example> gen_neg_invalid_postfix(const Dfa& dfa, std::size_t d, std::optional<Count> cap,
                                                    std::uint64_t seed) {
  const auto live = live_states(dfa);
  auto moves = useful_moves(dfa, live);
  const auto marker = static_cast<State>(dfa.state_count());
  moves.emplace_back();
  for (State s = 0; s < dfa.state_count(); ++s) {
    if (!live[s]) continue;
    for (Symbol a = 0; a < dfa.alphabet_size; ++a)
      if (!is_useful(dfa, live, s, a)) moves[s].push_back({a, marker});
  }
  std::vector<bool> final_vertices(moves.size(), false);
  final_vertices[marker] = true;
  Engine rng(split_seed(seed, "invalid-postfix"));
  PathSpace space(std::move(moves), std::move(final_vertices), detail::live_origin(dfa, live), d);
  return detail::label(space.sample(cap, rng), false, Category::invalid_postfix);
}

/// Invalid-postfix words followed by a non-empty word b that labels a path
/// from some live state into an accepting state, total length <= d. The
/// tails b are tracked by a subset construction started from the set of all
/// live states. Every such word is rejected: the invalid letter leaves the
/// DFA in a dead state.
inline std::vector<Example> gen_neg_invalid_infix(const Dfa& dfa, std::size_t d, std::optional<Count> cap,
                                                  std::uint64_t seed) {
  const auto live = live_states(dfa);
  auto moves = useful_moves(dfa, live);
  const std::size_t base = dfa.state_count();
  std::vector<bool> final_vertices(base, false);

  // Tail vertices: base is the fresh non-final tail start, then one vertex per
  // reachable non-empty subset of live states.
  std::map<std::vector<State>, State> index;
  std::vector<std::vector<State>> subsets;
  const auto intern = [&](std::vector<State> subset) {
    auto [it, inserted] = index.try_emplace(subset, static_cast<State>(base + 1 + subsets.size()));
    if (inserted) subsets.push_back(std::move(subset));
    return it->second;
  };
  const auto step = [&](const std::vector<State>& from, Symbol b) {
    std::vector<State> to;
    for (State p : from)
      if (is_useful(dfa, live, p, b)) to.push_back(dfa.next(p, b));
    std::sort(to.begin(), to.end());
    to.erase(std::unique(to.begin(), to.end()), to.end());
    return to;
  };

  std::vector<State> all_live;
  for (State s = 0; s < base; ++s)
    if (live[s]) all_live.push_back(s);

  moves.emplace_back();  // tail start
  final_vertices.push_back(false);
  for (Symbol b = 0; b < dfa.alphabet_size; ++b) {
    auto to = step(all_live, b);
    if (!to.empty()) moves[base].push_back({b, intern(std::move(to))});
  }
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    std::vector<PathSpace::Move> row;
    for (Symbol b = 0; b < dfa.alphabet_size; ++b) {
      auto to = step(subsets[i], b);
      if (!to.empty()) row.push_back({b, intern(std::move(to))});
    }
    moves.push_back(std::move(row));
    const auto& subset = subsets[i];
    final_vertices.push_back(
        std::any_of(subset.begin(), subset.end(), [&](State s) { return dfa.accepting[s]; }));
  }

  const auto tail_start = static_cast<State>(base);
  for (State s = 0; s < base; ++s) {
    if (!live[s]) continue;
    for (Symbol a = 0; a < dfa.alphabet_size; ++a)
      if (!is_useful(dfa, live, s, a)) moves[s].push_back({a, tail_start});
  }

  Engine rng(split_seed(seed, "invalid-infix"));
  PathSpace space(std::move(moves), std::move(final_vertices), detail::live_origin(dfa, live), d);
  return detail::label(space.sample(cap, rng), false, Category::invalid_infix);
}

/// Length uniform on {1..d}, letters uniform on the alphabet.
inline Word random_word(Engine& rng, std::size_t t, std::size_t d) {
  Word w(1 + uniform_below(rng, d));
  for (auto& a : w) a = static_cast<Symbol>(uniform_below(rng, t));
  return w;
}

/// Up to count distinct random words rejected by dfa and absent from exclude.
/// Gives up after 50 * count draws.
inline std::vector<Example> gen_neg_random(const Dfa& dfa, std::size_t d, std::size_t count, std::uint64_t seed,
                                           const std::set<Word>& exclude = {}) {
  std::vector<Example> out;
  if (count == 0 || d == 0 || dfa.alphabet_size == 0) return out;
  Engine rng(split_seed(seed, "random-negative"));
  std::set<Word> chosen;
  const std::size_t budget = 50 * count;
  for (std::size_t attempt = 0; attempt < budget && out.size() < count; ++attempt) {
    Word w = random_word(rng, dfa.alphabet_size, d);
    if (dfa.accepts(w) || exclude.contains(w) || chosen.contains(w)) continue;
    chosen.insert(w);
    out.push_back({std::move(w), false, Category::random_negative});
  }
  return out;
}

namespace detail {

/// Keeps k of the items, chosen uniformly, in their original order.
template <typename T>
std::vector<T> subsample(std::vector<T> items, std::size_t k, Engine& rng) {
  if (items.size() <= k) return items;
  std::vector<T> out;
  out.reserve(k);
  for (auto i : sample_distinct(rng, items.size(), k)) out.push_back(std::move(items[i]));
  return out;
}

/// Keeps k of the items with an equal quota per length: lengths with fewer
/// items than their share keep all of them and the remainder is spread over
/// the others. Within a length the choice is uniform. Original order kept.
template <typename T, typename LengthOf>
std::vector<T> stratified_subsample(std::vector<T> items, std::size_t k, Engine& rng, LengthOf length_of) {
  if (items.size() <= k) return items;
  std::map<std::size_t, std::vector<std::size_t>> by_len;
  for (std::size_t i = 0; i < items.size(); ++i) by_len[length_of(items[i])].push_back(i);

  std::map<std::size_t, std::size_t> quota;
  std::size_t left = k;
  std::vector<std::size_t> open;
  for (const auto& [len, idx] : by_len) open.push_back(len);
  while (left > 0 && !open.empty()) {
    const std::size_t share = std::max<std::size_t>(1, left / open.size());
    std::vector<std::size_t> still;
    for (auto len : open) {
      const std::size_t room = by_len[len].size() - quota[len];
      const std::size_t take = std::min({share, room, left});
      quota[len] += take;
      left -= take;
      if (quota[len] < by_len[len].size()) still.push_back(len);
    }
    open = std::move(still);
  }

  std::vector<std::size_t> keep;
  for (auto& [len, idx] : by_len)
    for (auto j : sample_distinct(rng, idx.size(), quota[len])) keep.push_back(idx[j]);
  std::sort(keep.begin(), keep.end());
  std::vector<T> out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(std::move(items[i]));
  return out;
}

inline std::size_t example_length(const Example& e) { return e.word.size(); }

}  // namespace detail

/// All categories merged and de-duplicated by priority, balanced 1:1 by
/// length-stratified subsampling of the negatives or topping them up with
/// random negatives, then shuffled. If random negatives run out, positives
/// are subsampled instead.
inline Dataset assemble(const Dfa& dfa, std::size_t d, const DatasetCaps& caps, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("assemble: depth must be >= 1");
  auto positives = gen_positives(dfa, d, caps.positive, split_seed(seed, "positive"));
  if (positives.empty()) throw DataError("empty language up to depth " + std::to_string(d));

  std::set<Word> seen;
  for (const auto& e : positives) seen.insert(e.word);
  std::vector<Example> negatives;
  for (auto&& batch : {gen_neg_nonaccepting(dfa, d, caps.non_accepting_path, split_seed(seed, "non-accepting")),
                       gen_neg_invalid_postfix(dfa, d, caps.invalid_postfix, split_seed(seed, "postfix")),
                       gen_neg_invalid_infix(dfa, d, caps.invalid_infix, split_seed(seed, "infix"))}) {
    for (const auto& e : batch)
      if (seen.insert(e.word).second) negatives.push_back(e);
  }

  Engine rng(split_seed(seed, "balance"));
  if (negatives.size() > positives.size()) {
    negatives = detail::stratified_subsample(std::move(negatives), positives.size(), rng, detail::example_length);
  } else if (negatives.size() < positives.size()) {
    auto extra = gen_neg_random(dfa, d, positives.size() - negatives.size(), split_seed(seed, "random"), seen);
    negatives.insert(negatives.end(), extra.begin(), extra.end());
    if (negatives.size() < positives.size())
      positives = detail::stratified_subsample(std::move(positives), negatives.size(), rng, detail::example_length);
  }

  Dataset ds;
  ds.depth = d;
  ds.alphabet_size = dfa.alphabet_size;
  ds.terminals = default_terminals(dfa.alphabet_size);
  ds.seed = seed;
  ds.examples = std::move(positives);
  ds.examples.insert(ds.examples.end(), negatives.begin(), negatives.end());
  Engine shuffler(split_seed(seed, "shuffle"));
  shuffle(ds.examples, shuffler);
  return ds;
}

/// Examples of length <= max_len, re-balanced 1:1 by length-stratified
/// subsampling of the larger class. Relative order is preserved.
inline Dataset filter_max_len(const Dataset& ds, std::size_t max_len) {
  if (max_len < 1 || max_len > ds.depth)
    throw std::invalid_argument("filter_max_len: length must lie in [1, depth]");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    if (ds.examples[i].word.size() > max_len) continue;
    (ds.examples[i].positive ? pos : neg).push_back(i);
  }
  Engine rng(split_seed(ds.seed, "filter-" + std::to_string(max_len)));
  const std::size_t keep = std::min(pos.size(), neg.size());
  const auto len = [&](std::size_t i) { return ds.examples[i].word.size(); };
  pos = detail::stratified_subsample(std::move(pos), keep, rng, len);
  neg = detail::stratified_subsample(std::move(neg), keep, rng, len);
  std::vector<std::size_t> kept(pos);
  kept.insert(kept.end(), neg.begin(), neg.end());
  std::sort(kept.begin(), kept.end());

  Dataset out = ds;
  out.depth = max_len;
  out.examples.clear();
  for (auto i : kept) out.examples.push_back(ds.examples[i]);
  return out;
}

}  // namespace rgi
