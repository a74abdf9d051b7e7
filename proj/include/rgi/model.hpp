#pragma once

// The neural acceptor. A word a_1..a_l is parsed left to right:
//
//   u_1     = clamp(sigmoid(P_T) e_{a_1})                     terminal unit
//   u_{i+1} = clamp(sum_j sigmoid(P_N^k)[j, a_{i+1}] u_i[j])  nonterminal unit, entry k
//   o       = softmax(s) . u_l                                start selector
//
// sigmoid(P_T)[k, a] is the belief in A_k -> a, sigmoid(P_N^k)[j, a] the
// belief in A_k -> A_j a. Gradients are written out by hand; clamp passes the
// gradient strictly inside (0, 1) and blocks it elsewhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgi/dataset.hpp"
#include "rgi/grammar.hpp"
#include "rgi/random.hpp"

namespace rgi {

inline double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double clamp01(double x) noexcept { return std::max(0.0, std::min(1.0, x)); }

/// Pre-sigmoid production matrices and start-selector logits.
struct ModelParams {
  std::size_t n_prime = 0;
  std::size_t t = 0;
  std::vector<double> terminal_logits;  ///< [k * t + a]: A_k -> a
  std::vector<double> chain_logits;     ///< [(k * n' + j) * t + a]: A_k -> A_j a
  std::vector<double> start_logits;     ///< [k]

  static ModelParams zeros(std::size_t n_prime, std::size_t t) {
    ModelParams p;
    p.n_prime = n_prime;
    p.t = t;
    p.terminal_logits.assign(n_prime * t, 0.0);
    p.chain_logits.assign(n_prime * n_prime * t, 0.0);
    p.start_logits.assign(n_prime, 0.0);
    return p;
  }

  std::size_t terminal_index(std::size_t k, std::size_t a) const { return k * t + a; }
  std::size_t chain_index(std::size_t k, std::size_t j, std::size_t a) const { return (k * n_prime + j) * t + a; }

  /// n'(n' + 1)t, the number of production entries.
  std::size_t production_entries() const { return n_prime * (n_prime + 1) * t; }

  std::array<std::vector<double>*, 3> arrays() { return {&terminal_logits, &chain_logits, &start_logits}; }
  std::array<const std::vector<double>*, 3> arrays() const {
    return {&terminal_logits, &chain_logits, &start_logits};
  }

  bool operator==(const ModelParams&) const = default;
};

inline void check_shape(const ModelParams& p) {
  if (p.n_prime == 0 || p.t == 0) throw std::invalid_argument("ModelParams: empty dimensions");
  if (p.terminal_logits.size() != p.n_prime * p.t || p.chain_logits.size() != p.n_prime * p.n_prime * p.t ||
      p.start_logits.size() != p.n_prime)
    throw std::invalid_argument("ModelParams: inconsistent dimensions");
}

inline std::vector<double> one_hot(std::size_t t, Symbol a) {
  std::vector<double> v(t, 0.0);
  v.at(a) = 1.0;
  return v;
}

inline std::vector<double> softmax(std::span<const double> s) {
  std::vector<double> out(s.size());
  if (s.empty()) return out;
  const double m = *std::max_element(s.begin(), s.end());
  double z = 0;
  for (std::size_t i = 0; i < s.size(); ++i) z += out[i] = std::exp(s[i] - m);
  for (auto& x : out) x /= z;
  return out;
}

namespace detail {

struct Activations {
  std::vector<double> terminal;  // sigmoid(P_T)
  std::vector<double> chain;     // sigmoid(P_N^k), same layout as the logits
  std::vector<double> start;     // softmax(s)
};

inline Activations activate(const ModelParams& p) {
  Activations act;
  act.terminal.resize(p.terminal_logits.size());
  act.chain.resize(p.chain_logits.size());
  std::transform(p.terminal_logits.begin(), p.terminal_logits.end(), act.terminal.begin(), sigmoid);
  std::transform(p.chain_logits.begin(), p.chain_logits.end(), act.chain.begin(), sigmoid);
  act.start = softmax(p.start_logits);
  return act;
}

}  // namespace detail

/// clamp(sigmoid(P_T) v).
inline std::vector<double> tgu_forward(const ModelParams& p, std::span<const double> v) {
  if (v.size() != p.t) throw std::invalid_argument("tgu_forward: dimension mismatch");
  std::vector<double> u(p.n_prime, 0.0);
  for (std::size_t k = 0; k < p.n_prime; ++k) {
    double z = 0;
    for (std::size_t a = 0; a < p.t; ++a) z += sigmoid(p.terminal_logits[p.terminal_index(k, a)]) * v[a];
    u[k] = clamp01(z);
  }
  return u;
}

/// Entry k: clamp((sigmoid(P_N^k) v) . u).
inline std::vector<double> ngu_forward(const ModelParams& p, std::span<const double> u, std::span<const double> v) {
  if (u.size() != p.n_prime || v.size() != p.t) throw std::invalid_argument("ngu_forward: dimension mismatch");
  std::vector<double> out(p.n_prime, 0.0);
  for (std::size_t k = 0; k < p.n_prime; ++k) {
    double z = 0;
    for (std::size_t j = 0; j < p.n_prime; ++j) {
      double col = 0;
      for (std::size_t a = 0; a < p.t; ++a) col += sigmoid(p.chain_logits[p.chain_index(k, j, a)]) * v[a];
      z += col * u[j];
    }
    out[k] = clamp01(z);
  }
  return out;
}

/// softmax(s) . u.
inline double ssu_forward(const ModelParams& p, std::span<const double> u) {
  if (u.size() != p.n_prime) throw std::invalid_argument("ssu_forward: dimension mismatch");
  const auto w = softmax(p.start_logits);
  double o = 0;
  for (std::size_t k = 0; k < p.n_prime; ++k) o += w[k] * u[k];
  return clamp01(o);
}

struct ForwardTrace {
  std::vector<std::vector<double>> pre_clamp;  ///< z_1..z_l
  std::vector<std::vector<double>> beliefs;    ///< u_1..u_l
  double output = 0;
};

namespace detail {

inline void check_word(const ModelParams& p, const Word& w) {
  if (w.empty()) throw std::invalid_argument("forward: empty word");
  for (Symbol a : w)
    if (a >= p.t) throw std::invalid_argument("forward: letter out of range");
}

inline void forward_into(const ModelParams& p, const Activations& act, const Word& w, ForwardTrace& tr) {
  const std::size_t n = p.n_prime, t = p.t;
  tr.pre_clamp.resize(w.size());
  tr.beliefs.resize(w.size());
  auto& z1 = tr.pre_clamp[0];
  auto& u1 = tr.beliefs[0];
  z1.resize(n);
  u1.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    z1[k] = act.terminal[k * t + w[0]];
    u1[k] = clamp01(z1[k]);
  }
  for (std::size_t i = 1; i < w.size(); ++i) {
    const auto& prev = tr.beliefs[i - 1];
    auto& z = tr.pre_clamp[i];
    auto& u = tr.beliefs[i];
    z.assign(n, 0.0);
    u.resize(n);
    const Symbol a = w[i];
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += act.chain[(k * n + j) * t + a] * prev[j];
      z[k] = acc;
      u[k] = clamp01(acc);
    }
  }
  double o = 0;
  const auto& last = tr.beliefs.back();
  for (std::size_t k = 0; k < n; ++k) o += act.start[k] * last[k];
  tr.output = clamp01(o);  // rounding only: the weights sum to 1
}

}  // namespace detail

inline ForwardTrace forward(const ModelParams& p, const Word& w) {
  check_shape(p);
  detail::check_word(p, w);
  ForwardTrace tr;
  detail::forward_into(p, detail::activate(p), w, tr);
  return tr;
}

/// Mean over all production entries e of 1 - (2e - 1)^2.
inline double sharpening_loss(const ModelParams& p) {
  double sum = 0;
  for (const auto* logits : {&p.terminal_logits, &p.chain_logits})
    for (double x : *logits) {
      const double e = sigmoid(x);
      sum += 1.0 - (2 * e - 1) * (2 * e - 1);
    }
  return sum / static_cast<double>(p.production_entries());
}

/// Mean over all production entries.
inline double usage_loss(const ModelParams& p) {
  double sum = 0;
  for (const auto* logits : {&p.terminal_logits, &p.chain_logits})
    for (double x : *logits) sum += sigmoid(x);
  return sum / static_cast<double>(p.production_entries());
}

inline constexpr double kBceEpsilon = 1e-7;

struct BatchLoss {
  double total = 0;
  double bce = 0;
  double sharpening = 0;
  double usage = 0;
  std::vector<double> outputs;
};

struct LossAndGradient {
  BatchLoss loss;
  ModelParams gradient;
};

/// Total loss BCE + beta S + gamma U and its exact gradient. An empty batch
/// contributes zero cross-entropy.
inline LossAndGradient loss_and_gradient(const ModelParams& p, std::span<const Example> batch, double beta,
                                         double gamma) {
  check_shape(p);
  const std::size_t n = p.n_prime, t = p.t;
  const auto act = detail::activate(p);
  LossAndGradient r;
  r.gradient = ModelParams::zeros(n, t);
  // gradients w.r.t. the sigmoid outputs, converted to logits at the end
  std::vector<double> g_terminal(act.terminal.size(), 0.0), g_chain(act.chain.size(), 0.0);
  auto& g_start = r.gradient.start_logits;

  ForwardTrace tr;
  std::vector<double> g_u(n), g_prev(n), g_z(n);
  const double scale = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  double bce_sum = 0;
  r.loss.outputs.reserve(batch.size());
  for (const auto& ex : batch) {
    detail::check_word(p, ex.word);
    detail::forward_into(p, act, ex.word, tr);
    const double o = tr.output;
    r.loss.outputs.push_back(o);
    const double oc = std::clamp(o, kBceEpsilon, 1.0 - kBceEpsilon);
    const double y = ex.positive ? 1.0 : 0.0;
    bce_sum += -(y * std::log(oc) + (1 - y) * std::log(1 - oc));
    if (o <= kBceEpsilon || o >= 1.0 - kBceEpsilon) continue;
    const double g_o = scale * (-y / oc + (1 - y) / (1 - oc));

    const auto& last = tr.beliefs.back();
    for (std::size_t k = 0; k < n; ++k) {
      g_u[k] = g_o * act.start[k];
      g_start[k] += g_o * act.start[k] * (last[k] - o);
    }
    for (std::size_t i = ex.word.size(); i-- > 1;) {
      const auto& z = tr.pre_clamp[i];
      const auto& prev = tr.beliefs[i - 1];
      const Symbol a = ex.word[i];
      std::fill(g_prev.begin(), g_prev.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        g_z[k] = (z[k] > 0.0 && z[k] < 1.0) ? g_u[k] : 0.0;
        if (g_z[k] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = (k * n + j) * t + a;
          g_chain[idx] += g_z[k] * prev[j];
          g_prev[j] += g_z[k] * act.chain[idx];
        }
      }
      g_u.swap(g_prev);
    }
    const auto& z1 = tr.pre_clamp[0];
    for (std::size_t k = 0; k < n; ++k)
      if (z1[k] > 0.0 && z1[k] < 1.0) g_terminal[k * t + ex.word[0]] += g_u[k];
  }
  r.loss.bce = bce_sum * scale;

  const double entries = static_cast<double>(p.production_entries());
  double sharp = 0, usage = 0;
  const auto finish = [&](const std::vector<double>& e, const std::vector<double>& g_e, std::vector<double>& out) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double c = 2 * e[i] - 1;
      sharp += 1.0 - c * c;
      usage += e[i];
      const double g = g_e[i] + (beta * (-4.0 * c) + gamma) / entries;
      out[i] = g * e[i] * (1 - e[i]);
    }
  };
  finish(act.terminal, g_terminal, r.gradient.terminal_logits);
  finish(act.chain, g_chain, r.gradient.chain_logits);
  r.loss.sharpening = sharp / entries;
  r.loss.usage = usage / entries;
  r.loss.total = r.loss.bce + beta * r.loss.sharpening + gamma * r.loss.usage;
  return r;
}

inline BatchLoss batch_loss(const ModelParams& p, std::span<const Example> batch, double beta, double gamma) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  return loss_and_gradient(p, batch, beta, gamma).loss;
}

inline ModelParams gradients(const ModelParams& p, std::span<const Example> batch, double beta, double gamma) {
  return loss_and_gradient(p, batch, beta, gamma).gradient;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ModelParams& p) {
    return {ModelParams::zeros(p.n_prime, p.t), ModelParams::zeros(p.n_prime, p.t), 0};
  }

  bool operator==(const AdamState&) const = default;
};

/// Adam with bias correction, updating params and state in place.
inline void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
                      const AdamConfig& cfg = {}) {
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const auto ps = params.arrays();
  const auto gs = grads.arrays();
  const auto ms = state.m.arrays();
  const auto vs = state.v.arrays();
  for (std::size_t a = 0; a < ps.size(); ++a) {
    auto& p = *ps[a];
    const auto& g = *gs[a];
    auto& m = *ms[a];
    auto& v = *vs[a];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

struct TrainConfig {
  std::size_t n_prime = 5;
  double lr = 0.005;
  std::size_t batch_size = 80;
  std::size_t max_epochs = 60;
  double beta = 0.05;
  double beta_start_frac = 0.6;
  double gamma = 0.02;
  double tau = 0.95;
  double init_std = 1.0;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::optional<std::size_t> early_stop_epochs;  ///< stop once the grammar is stable this long

  bool operator==(const TrainConfig&) const = default;
};

inline void check(const TrainConfig& cfg) {
  if (cfg.n_prime < 1) throw std::invalid_argument("TrainConfig: n_prime must be >= 1");
  if (!(cfg.lr > 0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(cfg.beta_start_frac >= 0 && cfg.beta_start_frac <= 1))
    throw std::invalid_argument("TrainConfig: beta_start_frac must lie in [0, 1]");
  if (!(cfg.tau > 0 && cfg.tau < 1)) throw std::invalid_argument("TrainConfig: tau must lie in (0, 1)");
  if (cfg.beta < 0 || cfg.gamma < 0) throw std::invalid_argument("TrainConfig: beta and gamma must be >= 0");
}

/// First epoch (0-based) that uses the sharpening weight.
inline std::size_t beta_start_epoch(const TrainConfig& cfg) {
  return static_cast<std::size_t>(std::ceil(cfg.beta_start_frac * static_cast<double>(cfg.max_epochs)));
}

/// Logits drawn from Normal(0, init_std), start logits zero.
inline ModelParams init_params(std::size_t n_prime, std::size_t t, const TrainConfig& cfg) {
  ModelParams p = ModelParams::zeros(n_prime, t);
  Engine rng(split_seed(cfg.seed, "init"));
  for (auto& x : p.terminal_logits) x = cfg.init_std * standard_normal(rng);
  for (auto& x : p.chain_logits) x = cfg.init_std * standard_normal(rng);
  return p;
}

/// argmax of the start logits, first index on ties.
inline std::size_t start_choice(const ModelParams& p) {
  return static_cast<std::size_t>(std::max_element(p.start_logits.begin(), p.start_logits.end()) -
                                  p.start_logits.begin());
}

/// Identifies the grammar readable from the parameters at threshold tau: the
/// indices of entries at or above tau, plus the chosen start.
inline std::string grammar_fingerprint(const ModelParams& p, double tau) {
  std::string s = "s" + std::to_string(start_choice(p)) + ":T";
  for (std::size_t i = 0; i < p.terminal_logits.size(); ++i)
    if (sigmoid(p.terminal_logits[i]) >= tau) s += "," + std::to_string(i);
  s += ":N";
  for (std::size_t i = 0; i < p.chain_logits.size(); ++i)
    if (sigmoid(p.chain_logits[i]) >= tau) s += "," + std::to_string(i);
  return s;
}

/// Fraction of examples classified correctly at threshold 0.5.
inline double accuracy(const ModelParams& p, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  const auto act = detail::activate(p);
  ForwardTrace tr;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    detail::forward_into(p, act, ex.word, tr);
    correct += (tr.output >= 0.5) == ex.positive;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

struct EpochRecord {
  std::size_t epoch = 0;
  double beta = 0;
  double loss = 0;      ///< mean batch loss over the epoch
  double accuracy = 0;  ///< on the full training set after the epoch
  std::string fingerprint;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainState {
  ModelParams params;
  AdamState adam;
  std::size_t epoch = 0;  ///< epochs completed
  std::vector<EpochRecord> history;

  bool operator==(const TrainState&) const = default;
};

inline TrainState initial_state(std::size_t t, const TrainConfig& cfg) {
  TrainState s;
  s.params = init_params(cfg.n_prime, t, cfg);
  s.adam = AdamState::zeros_like(s.params);
  return s;
}

/// Mini-batch training; each epoch reshuffles the examples. Deterministic in
/// (dataset, cfg).
inline TrainState train(const Dataset& ds, const TrainConfig& cfg) {
  check(cfg);
  if (ds.examples.empty()) throw DataError("train: empty dataset");
  TrainState state = initial_state(ds.alphabet_size, cfg);
  Engine rng(split_seed(cfg.seed, "shuffle"));
  std::vector<Example> order = ds.examples;
  const std::size_t beta_from = beta_start_epoch(cfg);
  std::size_t stable = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle(order, rng);
    const double beta = epoch < beta_from ? 0.0 : cfg.beta;
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const Example> batch(order.data() + begin, end - begin);
      auto lg = loss_and_gradient(state.params, batch, beta, cfg.gamma);
      loss_sum += lg.loss.total;
      ++batches;
      adam_step(state.params, lg.gradient, state.adam, cfg.lr, cfg.adam);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.beta = beta;
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.accuracy = accuracy(state.params, ds.examples);
    rec.fingerprint = grammar_fingerprint(state.params, cfg.tau);
    stable = (!state.history.empty() && state.history.back().fingerprint == rec.fingerprint) ? stable + 1 : 1;
    state.history.push_back(std::move(rec));
    state.epoch = epoch + 1;
    // only once sharpening is on, so a stop never leaves a soft grammar
    if (cfg.early_stop_epochs && epoch >= beta_from && stable >= *cfg.early_stop_epochs &&
        state.history.back().accuracy == 1.0)
      break;
  }
  return state;
}

}  // namespace rgi
