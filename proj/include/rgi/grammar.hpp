#pragma once

// Left-regular grammars: productions of the form A -> a and A -> B a.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgi/random.hpp"

namespace rgi {

using Symbol = std::uint32_t;
using Word = std::vector<Symbol>;
using WordSet = std::set<Word>;

/// Input error that is not a usage error: an empty language, an infeasible
/// request, a malformed data file.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Production {
  Symbol lhs = 0;
  std::optional<Symbol> prefix;  ///< B in A -> B a; empty for A -> a.
  Symbol terminal = 0;

  static Production terminal_rule(Symbol lhs, Symbol a) { return {lhs, std::nullopt, a}; }
  static Production chain_rule(Symbol lhs, Symbol b, Symbol a) { return {lhs, b, a}; }

  bool is_terminal() const noexcept { return !prefix.has_value(); }

  auto operator<=>(const Production&) const = default;
};

struct Grammar {
  std::vector<std::string> terminals;
  std::vector<std::string> nonterminals;
  std::vector<Production> productions;
  Symbol start = 0;

  std::size_t t() const noexcept { return terminals.size(); }
  std::size_t n() const noexcept { return nonterminals.size(); }

  /// Sorts productions and drops duplicates.
  void normalize() {
    std::sort(productions.begin(), productions.end());
    productions.erase(std::unique(productions.begin(), productions.end()), productions.end());
  }

  bool operator==(const Grammar&) const = default;
};

inline std::string default_terminal_name(std::size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('a' + i));
  return "t" + std::to_string(i);
}

inline std::string default_nonterminal_name(std::size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('A' + i));
  return "N" + std::to_string(i);
}

inline std::vector<std::string> default_terminals(std::size_t t) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < t; ++i) out.push_back(default_terminal_name(i));
  return out;
}

inline std::vector<std::string> default_nonterminals(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(default_nonterminal_name(i));
  return out;
}

struct GenConfig {
  std::size_t t = 4;
  std::size_t n = 3;
  double p_bar = 2.0;  ///< mean productions per nonterminal
  double p_terminal = 0.4;
  std::uint64_t seed = 0;
};

inline void check(const GenConfig& cfg) {
  if (cfg.t < 1) throw std::invalid_argument("GenConfig: t must be >= 1");
  if (cfg.n < 1) throw std::invalid_argument("GenConfig: n must be >= 1");
  if (!(cfg.p_bar >= 1.0)) throw std::invalid_argument("GenConfig: p_bar must be >= 1");
  if (!(cfg.p_terminal > 0.0 && cfg.p_terminal < 1.0))
    throw std::invalid_argument("GenConfig: p_terminal must lie in (0, 1)");
}

/// Nonterminals B with start =>* B w, including start itself. Edges run from
/// the lhs of A -> B a to B.
inline std::vector<bool> reachable_nonterminals(const Grammar& g) {
  std::vector<bool> seen(g.n(), false);
  if (g.start >= g.n()) return seen;
  std::vector<Symbol> stack{g.start};
  seen[g.start] = true;
  while (!stack.empty()) {
    const Symbol a = stack.back();
    stack.pop_back();
    for (const auto& p : g.productions) {
      if (p.lhs == a && p.prefix && *p.prefix < g.n() && !seen[*p.prefix]) {
        seen[*p.prefix] = true;
        stack.push_back(*p.prefix);
      }
    }
  }
  return seen;
}

/// Random ground-truth grammar. Production counts per nonterminal are
/// Geometric(1 / p_bar) on {1, 2, ...}; each production is terminal with
/// probability p_terminal. A terminal production is added if none was drawn,
/// then every unreachable nonterminal (in index order) gets one incoming
/// production from a random reachable nonterminal.
inline Grammar random_grammar(const GenConfig& cfg) {
  check(cfg);
  Engine rng(cfg.seed);
  Grammar g;
  g.terminals = default_terminals(cfg.t);
  g.nonterminals = default_nonterminals(cfg.n);
  const double pi = 1.0 / cfg.p_bar;
  const auto pick_t = [&] { return static_cast<Symbol>(uniform_below(rng, cfg.t)); };
  const auto pick_n = [&] { return static_cast<Symbol>(uniform_below(rng, cfg.n)); };

  for (Symbol a = 0; a < cfg.n; ++a) {
    const std::uint64_t count = geometric(rng, pi);
    for (std::uint64_t k = 0; k < count; ++k) {
      if (uniform01(rng) < cfg.p_terminal) {
        g.productions.push_back(Production::terminal_rule(a, pick_t()));
      } else {
        const Symbol b = pick_n();
        g.productions.push_back(Production::chain_rule(a, b, pick_t()));
      }
    }
  }
  g.start = pick_n();

  if (std::none_of(g.productions.begin(), g.productions.end(),
                   [](const Production& p) { return p.is_terminal(); })) {
    const Symbol a = pick_n();
    g.productions.push_back(Production::terminal_rule(a, pick_t()));
  }

  for (Symbol target = 0; target < cfg.n; ++target) {
    const auto reach = reachable_nonterminals(g);
    if (reach[target]) continue;
    std::vector<Symbol> sources;
    for (Symbol a = 0; a < cfg.n; ++a)
      if (reach[a]) sources.push_back(a);
    const Symbol from = sources[uniform_below(rng, sources.size())];
    g.productions.push_back(Production::chain_rule(from, target, pick_t()));
  }

  g.normalize();
  return g;
}

/// Human-readable list of invariant violations; empty iff the grammar is
/// well formed.
inline std::vector<std::string> validate(const Grammar& g) {
  std::vector<std::string> out;
  if (g.terminals.empty()) out.emplace_back("no terminals");
  if (g.nonterminals.empty()) out.emplace_back("no nonterminals");
  if (std::set(g.terminals.begin(), g.terminals.end()).size() != g.terminals.size())
    out.emplace_back("duplicate terminal name");
  if (std::set(g.nonterminals.begin(), g.nonterminals.end()).size() != g.nonterminals.size())
    out.emplace_back("duplicate nonterminal name");
  if (g.start >= g.n()) out.emplace_back("start out of range");

  bool lhs_bad = false, prefix_bad = false, terminal_bad = false;
  for (const auto& p : g.productions) {
    lhs_bad |= p.lhs >= g.n();
    prefix_bad |= p.prefix && *p.prefix >= g.n();
    terminal_bad |= p.terminal >= g.t();
  }
  if (lhs_bad) out.emplace_back("lhs out of range");
  if (prefix_bad) out.emplace_back("prefix nonterminal out of range");
  if (terminal_bad) out.emplace_back("terminal out of range");

  auto sorted = g.productions;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    out.emplace_back("duplicate production");

  if (std::none_of(g.productions.begin(), g.productions.end(),
                   [](const Production& p) { return p.is_terminal(); }))
    out.emplace_back("no terminal production");
  return out;
}

/// Throws std::invalid_argument unless every index in g is in bounds. Weaker
/// than validate(): production-less grammars pass.
inline void check_indices(const Grammar& g) {
  if (g.n() == 0 || g.start >= g.n()) throw std::invalid_argument("grammar: start out of range");
  for (const auto& p : g.productions) {
    if (p.lhs >= g.n() || (p.prefix && *p.prefix >= g.n()) || p.terminal >= g.t())
      throw std::invalid_argument("grammar: production index out of range");
  }
}

/// All words of length 1..max_len derivable from the start symbol, by dynamic
/// programming over (nonterminal, length). Slow; meant as an oracle.
inline WordSet derive_words(const Grammar& g, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("derive_words: max_len must be >= 1");
  check_indices(g);
  // by_length[l][A]: words of length l + 1 derivable from A
  std::vector<std::vector<WordSet>> by_length(max_len, std::vector<WordSet>(g.n()));
  for (const auto& p : g.productions)
    if (p.is_terminal()) by_length[0][p.lhs].insert(Word{p.terminal});
  for (std::size_t l = 1; l < max_len; ++l) {
    for (const auto& p : g.productions) {
      if (p.is_terminal()) continue;
      for (const auto& w : by_length[l - 1][*p.prefix]) {
        Word ext = w;
        ext.push_back(p.terminal);
        by_length[l][p.lhs].insert(std::move(ext));
      }
    }
  }
  WordSet out;
  for (const auto& level : by_length) out.insert(level[g.start].begin(), level[g.start].end());
  return out;
}

inline std::string to_string(const Grammar& g, const Production& p) {
  std::string s = g.nonterminals.at(p.lhs) + " -> ";
  if (p.prefix) s += g.nonterminals.at(*p.prefix) + " ";
  return s + g.terminals.at(p.terminal);
}

/// One production per line, preceded by the start symbol.
inline std::string to_text(const Grammar& g) {
  std::ostringstream os;
  os << "start: " << g.nonterminals.at(g.start) << "\n";
  for (const auto& p : g.productions) os << to_string(g, p) << "\n";
  return os.str();
}

/// Renders a word by concatenating terminal names.
inline std::string render_word(const std::vector<std::string>& terminals, const Word& w) {
  std::string s;
  for (Symbol a : w) s += terminals.at(a);
  return s;
}

/// Inverse of render_word; requires single-character terminal names.
inline Word parse_word(const std::vector<std::string>& terminals, std::string_view text) {
  Word w;
  for (char c : text) {
    const auto it = std::find(terminals.begin(), terminals.end(), std::string(1, c));
    if (it == terminals.end())
      throw DataError("word '" + std::string(text) + "' uses unknown letter '" + c + "'");
    w.push_back(static_cast<Symbol>(it - terminals.begin()));
  }
  return w;
}

/// The (a|b)*cc* example grammar over {a, b, c} with nonterminals {A, C}.
inline Grammar example_grammar() {
  Grammar g;
  g.terminals = {"a", "b", "c"};
  g.nonterminals = {"A", "C"};
  constexpr Symbol A = 0, C = 1, a = 0, b = 1, c = 2;
  g.productions = {
      Production::terminal_rule(A, a), Production::terminal_rule(A, b),
      Production::chain_rule(A, A, a), Production::chain_rule(A, A, b),
      Production::terminal_rule(C, c), Production::chain_rule(C, A, c),
      Production::chain_rule(C, C, c),
  };
  g.start = C;
  g.normalize();
  return g;
}

}  // namespace rgi
