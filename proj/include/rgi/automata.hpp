#pragma once

// Finite automata over a dense alphabet {0, ..., t-1}: grammar conversion,
// subset construction, Hopcroft minimization, canonical relabelling, word
// counting, products, and ordered path spaces for example generation.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rgi/grammar.hpp"
#include "rgi/random.hpp"

namespace rgi {

using State = std::uint32_t;
using Count = std::uint64_t;

inline constexpr State kNoState = std::numeric_limits<State>::max();

namespace detail {

inline Count checked_add(Count a, Count b) {
  Count r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("word count overflows 64 bits");
  return r;
}

inline Count checked_mul(Count a, Count b) {
  Count r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("word count overflows 64 bits");
  return r;
}

}  // namespace detail

struct Nfa {
  std::size_t alphabet_size = 0;
  std::vector<std::vector<State>> moves;  ///< [state * t + letter] -> sorted targets
  State initial = 0;
  std::vector<bool> accepting;

  Nfa() = default;
  Nfa(std::size_t states, std::size_t t)
      : alphabet_size(t), moves(states * t), accepting(states, false) {}

  std::size_t state_count() const noexcept { return accepting.size(); }

  void add_transition(State from, Symbol a, State to) {
    auto& row = moves.at(static_cast<std::size_t>(from) * alphabet_size + a);
    const auto it = std::lower_bound(row.begin(), row.end(), to);
    if (it == row.end() || *it != to) row.insert(it, to);
  }

  const std::vector<State>& targets(State s, Symbol a) const {
    return moves[static_cast<std::size_t>(s) * alphabet_size + a];
  }

  bool accepts(const Word& w) const {
    std::vector<State> current{initial};
    for (Symbol a : w) {
      if (a >= alphabet_size) return false;
      std::vector<State> next;
      for (State s : current) {
        const auto& ts = targets(s, a);
        next.insert(next.end(), ts.begin(), ts.end());
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      current = std::move(next);
    }
    return std::any_of(current.begin(), current.end(), [&](State s) { return accepting[s]; });
  }
};

struct Dfa {
  std::size_t alphabet_size = 0;
  std::vector<State> table;  ///< [state * t + letter]; kNoState when undefined
  State initial = 0;
  std::vector<bool> accepting;

  Dfa() = default;
  Dfa(std::size_t states, std::size_t t)
      : alphabet_size(t), table(states * t, kNoState), accepting(states, false) {}

  std::size_t state_count() const noexcept { return accepting.size(); }

  State next(State s, Symbol a) const { return table[static_cast<std::size_t>(s) * alphabet_size + a]; }
  void set(State s, Symbol a, State to) { table.at(static_cast<std::size_t>(s) * alphabet_size + a) = to; }

  bool is_complete() const {
    return std::none_of(table.begin(), table.end(), [](State s) { return s == kNoState; });
  }

  bool accepts(const Word& w) const {
    State s = initial;
    for (Symbol a : w) {
      if (a >= alphabet_size) return false;
      s = next(s, a);
      if (s == kNoState) return false;
    }
    return accepting[s];
  }

  bool operator==(const Dfa&) const = default;
};

/// States are the nonterminals plus a fresh initial state (index n).
/// A -> a gives init -a-> A, A -> B a gives B -a-> A; the start nonterminal
/// is the only accepting state.
inline Nfa grammar_to_nfa(const Grammar& g) {
  check_indices(g);
  const auto init = static_cast<State>(g.n());
  Nfa nfa(g.n() + 1, g.t());
  nfa.initial = init;
  nfa.accepting[g.start] = true;
  for (const auto& p : g.productions) {
    const State from = p.prefix ? *p.prefix : init;
    nfa.add_transition(from, p.terminal, p.lhs);
  }
  return nfa;
}

/// Subset construction over reachable subsets. The empty subset becomes an
/// ordinary (sink) state, so the result is complete.
inline Dfa determinize(const Nfa& nfa) {
  const std::size_t t = nfa.alphabet_size;
  std::map<std::vector<State>, State> index;
  std::vector<std::vector<State>> subsets;
  std::vector<State> transitions;
  std::vector<bool> accepting;

  const auto intern = [&](std::vector<State> subset) {
    auto [it, inserted] = index.try_emplace(subset, static_cast<State>(subsets.size()));
    if (inserted) {
      accepting.push_back(std::any_of(subset.begin(), subset.end(),
                                      [&](State s) { return nfa.accepting[s]; }));
      subsets.push_back(std::move(subset));
      transitions.resize(transitions.size() + t, kNoState);
    }
    return it->second;
  };

  intern({nfa.initial});
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    for (Symbol a = 0; a < t; ++a) {
      std::vector<State> next;
      for (State s : subsets[i]) {
        const auto& ts = nfa.targets(s, a);
        next.insert(next.end(), ts.begin(), ts.end());
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      const State id = intern(std::move(next));
      transitions[i * t + a] = id;
    }
  }

  Dfa dfa;
  dfa.alphabet_size = t;
  dfa.table = std::move(transitions);
  dfa.accepting = std::move(accepting);
  dfa.initial = 0;
  return dfa;
}

/// Adds a single non-accepting sink for every undefined transition. Returns
/// the input unchanged if it is already complete.
inline Dfa make_complete(Dfa dfa) {
  if (dfa.is_complete()) return dfa;
  const auto sink = static_cast<State>(dfa.state_count());
  dfa.accepting.push_back(false);
  dfa.table.resize(dfa.table.size() + dfa.alphabet_size, sink);
  for (auto& s : dfa.table)
    if (s == kNoState) s = sink;
  return dfa;
}

/// Renumbers reachable states in breadth-first order from the initial state,
/// visiting letters in alphabet order. Unreachable states are dropped. Two
/// DFAs related by a state bijection have identical canonical forms.
inline Dfa canonical(const Dfa& dfa) {
  const std::size_t t = dfa.alphabet_size;
  std::vector<State> order{dfa.initial};
  std::vector<State> renumber(dfa.state_count(), kNoState);
  renumber[dfa.initial] = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (Symbol a = 0; a < t; ++a) {
      const State to = dfa.next(order[i], a);
      if (to != kNoState && renumber[to] == kNoState) {
        renumber[to] = static_cast<State>(order.size());
        order.push_back(to);
      }
    }
  }
  Dfa out(order.size(), t);
  out.initial = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.accepting[i] = dfa.accepting[order[i]];
    for (Symbol a = 0; a < t; ++a) {
      const State to = dfa.next(order[i], a);
      out.set(static_cast<State>(i), a, to == kNoState ? kNoState : renumber[to]);
    }
  }
  return out;
}

/// Hopcroft's partition refinement on the reachable part of a complete DFA.
/// The result is minimal, complete, and in canonical numbering.
inline Dfa minimize(const Dfa& input) {
  if (!input.is_complete()) throw std::invalid_argument("minimize: DFA must be complete");
  const Dfa dfa = canonical(input);
  const std::size_t n = dfa.state_count();
  const std::size_t t = dfa.alphabet_size;

  // Inverse transitions in CSR form per letter.
  std::vector<std::vector<std::size_t>> inv_start(t, std::vector<std::size_t>(n + 1, 0));
  std::vector<std::vector<State>> inv_src(t, std::vector<State>(n));
  for (Symbol a = 0; a < t; ++a) {
    auto& start = inv_start[a];
    for (State s = 0; s < n; ++s) ++start[dfa.next(s, a) + 1];
    for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (State s = 0; s < n; ++s) inv_src[a][fill[dfa.next(s, a)]++] = s;
  }

  std::vector<std::vector<State>> blocks;
  std::vector<std::size_t> block_of(n);
  {
    std::vector<State> accept, reject;
    for (State s = 0; s < n; ++s) (dfa.accepting[s] ? accept : reject).push_back(s);
    for (auto* part : {&accept, &reject}) {
      if (part->empty()) continue;
      for (State s : *part) block_of[s] = blocks.size();
      blocks.push_back(std::move(*part));
    }
  }

  std::deque<std::size_t> work;
  std::vector<bool> in_work(blocks.size(), false);
  if (blocks.size() == 2) {
    const std::size_t smaller = blocks[0].size() <= blocks[1].size() ? 0 : 1;
    work.push_back(smaller);
    in_work[smaller] = true;
  }

  std::vector<bool> marked(n, false);
  std::vector<std::size_t> hit_count;
  while (!work.empty()) {
    const std::size_t splitter_id = work.front();
    work.pop_front();
    in_work[splitter_id] = false;
    const std::vector<State> splitter = blocks[splitter_id];

    for (Symbol a = 0; a < t; ++a) {
      std::vector<State> preimage;
      for (State target : splitter)
        for (std::size_t i = inv_start[a][target]; i < inv_start[a][target + 1]; ++i)
          preimage.push_back(inv_src[a][i]);
      if (preimage.empty()) continue;

      hit_count.assign(blocks.size(), 0);
      std::vector<std::size_t> touched;
      for (State s : preimage) {
        marked[s] = true;
        if (hit_count[block_of[s]]++ == 0) touched.push_back(block_of[s]);
      }
      for (std::size_t y : touched) {
        if (hit_count[y] == blocks[y].size()) continue;
        std::vector<State> inside, outside;
        for (State s : blocks[y]) (marked[s] ? inside : outside).push_back(s);
        const std::size_t fresh = blocks.size();
        for (State s : inside) block_of[s] = fresh;
        blocks[y] = std::move(outside);
        blocks.push_back(std::move(inside));
        in_work.push_back(false);
        if (in_work[y]) {
          work.push_back(fresh);
          in_work[fresh] = true;
        } else {
          const std::size_t smaller = blocks[y].size() <= blocks[fresh].size() ? y : fresh;
          work.push_back(smaller);
          in_work[smaller] = true;
        }
      }
      for (State s : preimage) marked[s] = false;
    }
  }

  Dfa quotient(blocks.size(), t);
  quotient.initial = static_cast<State>(block_of[dfa.initial]);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const State rep = blocks[b].front();
    quotient.accepting[b] = dfa.accepting[rep];
    for (Symbol a = 0; a < t; ++a)
      quotient.set(static_cast<State>(b), a, static_cast<State>(block_of[dfa.next(rep, a)]));
  }
  return canonical(quotient);
}

inline Dfa min_dfa(const Grammar& g) { return minimize(determinize(grammar_to_nfa(g))); }

/// True iff some bijection between the reachable states of the two DFAs
/// preserves the initial state, acceptance and every transition.
inline bool is_isomorphic(const Dfa& a, const Dfa& b) {
  if (a.alphabet_size != b.alphabet_size)
    throw std::invalid_argument("is_isomorphic: alphabet mismatch");
  if (a.state_count() != b.state_count()) return false;
  return canonical(a) == canonical(b);
}

/// Number of accepted words of each length 1..d (index 0 is length 1).
inline std::vector<Count> count_words(const Dfa& dfa, std::size_t d) {
  if (d < 1) throw std::invalid_argument("count_words: d must be >= 1");
  if (!dfa.is_complete()) throw std::invalid_argument("count_words: DFA must be complete");
  std::vector<Count> current(dfa.state_count(), 0), next;
  current[dfa.initial] = 1;
  std::vector<Count> out;
  out.reserve(d);
  for (std::size_t len = 1; len <= d; ++len) {
    next.assign(dfa.state_count(), 0);
    for (State s = 0; s < dfa.state_count(); ++s) {
      if (current[s] == 0) continue;
      for (Symbol a = 0; a < dfa.alphabet_size; ++a) {
        auto& slot = next[dfa.next(s, a)];
        slot = detail::checked_add(slot, current[s]);
      }
    }
    current.swap(next);
    Count accepted = 0;
    for (State s = 0; s < dfa.state_count(); ++s)
      if (dfa.accepting[s]) accepted = detail::checked_add(accepted, current[s]);
    out.push_back(accepted);
  }
  return out;
}

/// Reachable part of the synchronous product, accepting L(a) ∩ L(b).
inline Dfa product_intersection(const Dfa& a, const Dfa& b) {
  if (a.alphabet_size != b.alphabet_size)
    throw std::invalid_argument("product_intersection: alphabet mismatch");
  if (!a.is_complete() || !b.is_complete())
    throw std::invalid_argument("product_intersection: DFAs must be complete");
  const std::size_t t = a.alphabet_size;
  std::map<std::pair<State, State>, State> index;
  std::vector<std::pair<State, State>> pairs;
  const auto intern = [&](std::pair<State, State> p) {
    auto [it, inserted] = index.try_emplace(p, static_cast<State>(pairs.size()));
    if (inserted) pairs.push_back(p);
    return it->second;
  };
  intern({a.initial, b.initial});
  std::vector<State> table;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [sa, sb] = pairs[i];
    for (Symbol c = 0; c < t; ++c) table.push_back(intern({a.next(sa, c), b.next(sb, c)}));
  }
  Dfa out;
  out.alphabet_size = t;
  out.table = std::move(table);
  out.initial = 0;
  for (const auto& [sa, sb] : pairs) out.accepting.push_back(a.accepting[sa] && b.accepting[sb]);
  return out;
}

/// States from which some accepting state is reachable.
inline std::vector<bool> live_states(const Dfa& dfa) {
  std::vector<bool> live(dfa.accepting);
  bool changed = true;
  while (changed) {
    changed = false;
    for (State s = 0; s < dfa.state_count(); ++s) {
      if (live[s]) continue;
      for (Symbol a = 0; a < dfa.alphabet_size; ++a) {
        const State to = dfa.next(s, a);
        if (to != kNoState && live[to]) {
          live[s] = true;
          changed = true;
          break;
        }
      }
    }
  }
  return live;
}

/// A letter is useful in a state if it leads to a live state.
inline bool is_useful(const Dfa& dfa, const std::vector<bool>& live, State s, Symbol a) {
  const State to = dfa.next(s, a);
  return to != kNoState && live[to];
}

/// The words spelled by paths of length 1..max_len from an origin vertex to a
/// final vertex in a deterministic move graph (at most one move per vertex and
/// letter). Words are ranked by length, then lexicographically by letter, which
/// is the order a breadth-first search emits them in. Supports counting,
/// unranking, and uniform sampling without enumerating the whole space.
class PathSpace {
 public:
  struct Move {
    Symbol letter;
    State target;
  };

  struct Entry {
    Word word;
    State end;
  };

  PathSpace(std::vector<std::vector<Move>> moves, std::vector<bool> final_vertices,
            std::optional<State> origin, std::size_t max_len)
      : moves_(std::move(moves)), final_(std::move(final_vertices)), origin_(origin),
        max_len_(max_len) {
    for (auto& row : moves_)
      std::sort(row.begin(), row.end(), [](const Move& x, const Move& y) { return x.letter < y.letter; });
    const std::size_t v = moves_.size();
    ways_.assign(max_len_ + 1, std::vector<Count>(v, 0));
    for (State s = 0; s < v; ++s) ways_[0][s] = final_[s] ? 1 : 0;
    for (std::size_t r = 1; r <= max_len_; ++r)
      for (State s = 0; s < v; ++s)
        for (const auto& m : moves_[s]) ways_[r][s] = detail::checked_add(ways_[r][s], ways_[r - 1][m.target]);
    total_ = 0;
    for (std::size_t len = 1; len <= max_len_; ++len) total_ = detail::checked_add(total_, count(len));
  }

  std::size_t max_len() const noexcept { return max_len_; }

  /// Words of exactly this length.
  Count count(std::size_t len) const {
    if (!origin_ || len < 1 || len > max_len_) return 0;
    return ways_[len][*origin_];
  }

  Count size() const noexcept { return total_; }

  Entry at(Count rank) const {
    if (rank >= total_) throw std::out_of_range("PathSpace::at: rank out of range");
    std::size_t len = 1;
    while (rank >= count(len)) rank -= count(len++);
    Entry e{{}, *origin_};
    for (std::size_t remaining = len; remaining > 0; --remaining) {
      for (const auto& m : moves_[e.end]) {
        const Count w = ways_[remaining - 1][m.target];
        if (rank < w) {
          e.word.push_back(m.letter);
          e.end = m.target;
          break;
        }
        rank -= w;
      }
    }
    return e;
  }

  /// Every word when the space holds at most cap of them, otherwise a uniform
  /// sample of exactly cap distinct words. Rank order either way.
  std::vector<Entry> sample(std::optional<Count> cap, Engine& rng) const {
    std::vector<Entry> out;
    if (!cap || total_ <= *cap) {
      out.reserve(total_);
      for (Count r = 0; r < total_; ++r) out.push_back(at(r));
      return out;
    }
    for (Count r : sample_distinct(rng, total_, *cap)) out.push_back(at(r));
    return out;
  }

 private:
  std::vector<std::vector<Move>> moves_;
  std::vector<bool> final_;
  std::optional<State> origin_;
  std::size_t max_len_;
  std::vector<std::vector<Count>> ways_;  ///< ways_[r][s]: words of length r from s to a final vertex
  Count total_ = 0;
};

/// Move graph of useful transitions only.
inline std::vector<std::vector<PathSpace::Move>> useful_moves(const Dfa& dfa, const std::vector<bool>& live) {
  std::vector<std::vector<PathSpace::Move>> moves(dfa.state_count());
  for (State s = 0; s < dfa.state_count(); ++s) {
    if (!live[s]) continue;
    for (Symbol a = 0; a < dfa.alphabet_size; ++a)
      if (is_useful(dfa, live, s, a)) moves[s].push_back({a, dfa.next(s, a)});
  }
  return moves;
}

struct PathCaps {
  std::optional<Count> accepting;
  std::optional<Count> rejecting;
};

struct BfsYield {
  struct Item {
    Word word;
    State end;
    bool accepting;
  };
  std::vector<Item> accepting;  ///< paths ending in an accepting state
  std::vector<Item> rejecting;  ///< paths ending in a live, non-accepting state
};

/// Breadth-first paths of length 1..d from the initial state over useful
/// transitions, split by whether they end in an accepting state. Each list is
/// in BFS order; a list larger than its cap is replaced by a seeded uniform
/// sample of cap paths.
inline BfsYield enumerate_paths(const Dfa& dfa, std::size_t d, const PathCaps& caps, std::uint64_t seed) {
  const auto live = live_states(dfa);
  const std::optional<State> origin =
      live[dfa.initial] ? std::optional<State>(dfa.initial) : std::nullopt;
  std::vector<bool> rejecting(dfa.state_count());
  for (State s = 0; s < dfa.state_count(); ++s) rejecting[s] = live[s] && !dfa.accepting[s];

  BfsYield out;
  Engine rng_acc(split_seed(seed, "bfs-accepting"));
  Engine rng_rej(split_seed(seed, "bfs-rejecting"));
  for (auto& e : PathSpace(useful_moves(dfa, live), dfa.accepting, origin, d).sample(caps.accepting, rng_acc))
    out.accepting.push_back({std::move(e.word), e.end, true});
  for (auto& e : PathSpace(useful_moves(dfa, live), rejecting, origin, d).sample(caps.rejecting, rng_rej))
    out.rejecting.push_back({std::move(e.word), e.end, false});
  return out;
}

}  // namespace rgi
