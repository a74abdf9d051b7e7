#pragma once

// Reading grammars and parse forests out of model parameters, and the
// reverse direction: planting a known grammar into sharp parameters.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgi/grammar.hpp"
#include "rgi/model.hpp"

namespace rgi {

inline constexpr double kDefaultTau = 0.95;

/// Symbol names for an extracted grammar. Empty lists fall back to
/// a, b, c, ... and A, B, C, ...
struct SymbolNames {
  std::vector<std::string> terminals;
  std::vector<std::string> nonterminals;
};

/// Productions whose belief is at least tau. The start symbol is the argmax
/// of the start selector. All n' nonterminals are kept, used or not.
inline Grammar extract_grammar(const ModelParams& p, double tau = kDefaultTau, const SymbolNames& names = {}) {
  check_shape(p);
  Grammar g;
  g.terminals = names.terminals.empty() ? default_terminals(p.t) : names.terminals;
  g.nonterminals = names.nonterminals.empty() ? default_nonterminals(p.n_prime) : names.nonterminals;
  if (g.terminals.size() != p.t || g.nonterminals.size() != p.n_prime)
    throw std::invalid_argument("extract_grammar: symbol names do not match parameter shape");
  for (std::size_t k = 0; k < p.n_prime; ++k)
    for (std::size_t a = 0; a < p.t; ++a)
      if (sigmoid(p.terminal_logits[p.terminal_index(k, a)]) >= tau)
        g.productions.push_back(Production::terminal_rule(static_cast<Symbol>(k), static_cast<Symbol>(a)));
  for (std::size_t k = 0; k < p.n_prime; ++k)
    for (std::size_t j = 0; j < p.n_prime; ++j)
      for (std::size_t a = 0; a < p.t; ++a)
        if (sigmoid(p.chain_logits[p.chain_index(k, j, a)]) >= tau)
          g.productions.push_back(
              Production::chain_rule(static_cast<Symbol>(k), static_cast<Symbol>(j), static_cast<Symbol>(a)));
  g.start = static_cast<Symbol>(start_choice(p));
  g.normalize();
  return g;
}

/// Sharp parameters encoding g: hi logits for its productions and its start
/// symbol, lo everywhere else. Nonterminal i of g occupies row i.
inline ModelParams plant_grammar(const Grammar& g, std::size_t n_prime, double hi = 10.0, double lo = -10.0) {
  check_indices(g);
  if (g.n() > n_prime) throw std::invalid_argument("plant_grammar: grammar has more than n' nonterminals");
  ModelParams p = ModelParams::zeros(n_prime, g.t());
  std::fill(p.terminal_logits.begin(), p.terminal_logits.end(), lo);
  std::fill(p.chain_logits.begin(), p.chain_logits.end(), lo);
  std::fill(p.start_logits.begin(), p.start_logits.end(), lo);
  for (const auto& prod : g.productions) {
    if (prod.is_terminal())
      p.terminal_logits[p.terminal_index(prod.lhs, prod.terminal)] = hi;
    else
      p.chain_logits[p.chain_index(prod.lhs, *prod.prefix, prod.terminal)] = hi;
  }
  p.start_logits[g.start] = hi;
  return p;
}

/// g with fresh unused nonterminals appended up to n_prime; the shape that
/// extract_grammar(plant_grammar(g, n_prime)) returns.
inline Grammar pad_nonterminals(Grammar g, std::size_t n_prime) {
  std::set<std::string> used(g.nonterminals.begin(), g.nonterminals.end());
  for (std::size_t i = 0; g.nonterminals.size() < n_prime; ++i) {
    auto name = default_nonterminal_name(i);
    if (used.insert(name).second) g.nonterminals.push_back(std::move(name));
  }
  return g;
}

/// Packed parse forest: for each prefix length i (0-based position) the
/// nonterminals that root a parse of a_1..a_{i+1}, each with the child roots
/// it can extend. Position 0 roots come from terminal productions.
struct ParseForest {
  struct Root {
    Symbol nonterminal;
    std::vector<Symbol> children;  ///< roots at the previous position; empty at position 0
  };
  Word word;
  std::vector<std::vector<Root>> positions;

  const Root* find(std::size_t position, Symbol k) const {
    for (const auto& r : positions.at(position))
      if (r.nonterminal == k) return &r;
    return nullptr;
  }
};

/// Roots at position 0 are the k with sigmoid(P_T)[k, a_1] >= tau. A_k roots
/// position i + 1 through child A_j when sigmoid(P_N^k)[j, a_{i+1}] >= tau,
/// the belief u_i[j] >= tau, and A_j roots position i.
inline ParseForest parse_forest(const ModelParams& p, const Word& w, double tau = kDefaultTau) {
  const auto trace = forward(p, w);
  ParseForest forest;
  forest.word = w;
  forest.positions.resize(w.size());
  for (std::size_t k = 0; k < p.n_prime; ++k)
    if (sigmoid(p.terminal_logits[p.terminal_index(k, w[0])]) >= tau)
      forest.positions[0].push_back({static_cast<Symbol>(k), {}});
  for (std::size_t i = 1; i < w.size(); ++i) {
    const auto& prev = forest.positions[i - 1];
    for (std::size_t k = 0; k < p.n_prime; ++k) {
      ParseForest::Root root{static_cast<Symbol>(k), {}};
      for (const auto& child : prev) {
        const std::size_t j = child.nonterminal;
        if (sigmoid(p.chain_logits[p.chain_index(k, j, w[i])]) >= tau && trace.beliefs[i - 1][j] >= tau)
          root.children.push_back(child.nonterminal);
      }
      if (!root.children.empty()) forest.positions[i].push_back(std::move(root));
    }
  }
  return forest;
}

/// Number of distinct trees rooted at A_k over the prefix ending at position.
inline Count count_trees(const ParseForest& f, std::size_t position, Symbol k) {
  const auto* root = f.find(position, k);
  if (!root) return 0;
  if (position == 0) return 1;
  Count total = 0;
  for (Symbol j : root->children) total = detail::checked_add(total, count_trees(f, position - 1, j));
  return total;
}

struct ParseNode {
  bool terminal = false;
  Symbol symbol = 0;
  std::size_t first = 1;  ///< 1-based span of the covered prefix
  std::size_t last = 1;
  std::vector<ParseNode> children;  ///< [terminal] for A -> a, [subtree, terminal] for A -> B a

  /// Leaves left to right.
  Word yield() const {
    if (terminal) return {symbol};
    Word out;
    for (const auto& c : children) {
      auto part = c.yield();
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
};

/// Expands up to limit trees rooted at A_k at the given position.
inline std::vector<ParseNode> expand_trees(const ParseForest& f, std::size_t position, Symbol k,
                                           std::size_t limit = 64) {
  std::vector<ParseNode> out;
  const auto* root = f.find(position, k);
  if (!root || limit == 0) return out;
  const ParseNode leaf{true, f.word[position], position + 1, position + 1, {}};
  if (position == 0) {
    out.push_back({false, k, 1, 1, {leaf}});
    return out;
  }
  for (Symbol j : root->children) {
    for (auto& sub : expand_trees(f, position - 1, j, limit - out.size())) {
      out.push_back({false, k, 1, position + 1, {std::move(sub), leaf}});
      if (out.size() == limit) return out;
    }
  }
  return out;
}

}  // namespace rgi
