#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "rgi/rgi.hpp"

using namespace rgi;

namespace {

ModelParams random_params(Engine& rng, std::size_t n, std::size_t t, double scale) {
  auto p = ModelParams::zeros(n, t);
  for (auto* v : p.arrays())
    for (auto& x : *v) x = scale * standard_normal(rng);
  return p;
}

std::vector<Example> random_batch(Engine& rng, std::size_t t, std::size_t size, std::size_t max_len) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < size; ++i) {
    const bool pos = uniform_below(rng, 2) == 1;
    out.push_back({random_word(rng, t, max_len), pos, pos ? Category::positive : Category::random_negative});
  }
  return out;
}

// no pre-clamp value within margin of 0 or 1
bool away_from_kinks(const ModelParams& p, const std::vector<Example>& batch, double margin) {
  for (const auto& ex : batch)
    for (const auto& z : forward(p, ex.word).pre_clamp)
      for (double x : z)
        if (std::abs(x) < margin || std::abs(x - 1) < margin) return false;
  return true;
}

double max_relative_error(ModelParams p, const std::vector<Example>& batch, double beta, double gamma) {
  const auto g = gradients(p, batch, beta, gamma);
  const double h = 1e-5;
  double worst = 0;
  const auto ga = g.arrays();
  const auto pa = p.arrays();
  for (std::size_t a = 0; a < pa.size(); ++a) {
    for (std::size_t i = 0; i < pa[a]->size(); ++i) {
      double& x = (*pa[a])[i];
      const double saved = x;
      x = saved + h;
      const double up = oracle::model_loss(p, batch, beta, gamma);
      x = saved - h;
      const double down = oracle::model_loss(p, batch, beta, gamma);
      x = saved;
      const double fd = (up - down) / (2 * h);
      const double an = (*ga[a])[i];
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

TEST(Model, ForwardMatchesUnitDefinitions) {
  Engine rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(rng, 4, 3, 1.5);
    const auto w = random_word(rng, 3, 6);
    EXPECT_NEAR(forward(p, w).output, oracle::model_output(p, w), 1e-12);
  }
}

TEST(Model, UnitsComposeToForward) {
  Engine rng(8);
  const auto p = random_params(rng, 3, 2, 1.0);
  const Word w{0, 1, 1};
  auto u = tgu_forward(p, one_hot(2, w[0]));
  for (std::size_t i = 1; i < w.size(); ++i) u = ngu_forward(p, u, one_hot(2, w[i]));
  const auto tr = forward(p, w);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(u[k], tr.beliefs.back()[k]);
  EXPECT_DOUBLE_EQ(ssu_forward(p, u), tr.output);
}

TEST(Model, ForwardRejectsBadInput) {
  const auto p = ModelParams::zeros(2, 2);
  EXPECT_THROW(forward(p, Word{}), std::invalid_argument);
  EXPECT_THROW(forward(p, Word{0, 2}), std::invalid_argument);
}

TEST(Model, LossIdentities) {
  const auto p = ModelParams::zeros(3, 2);
  const std::vector<Example> batch{{{0}, true, Category::positive}, {{1}, false, Category::random_negative}};
  EXPECT_NEAR(batch_loss(p, batch, 0, 0).total, std::log(2.0), 1e-12);
  EXPECT_NEAR(batch_loss(p, batch, 1, 0).total, std::log(2.0) + 1.0, 1e-12);
  EXPECT_NEAR(sharpening_loss(p), 1.0, 1e-15);
  EXPECT_NEAR(usage_loss(p), 0.5, 1e-15);
  EXPECT_THROW(batch_loss(p, {}, 0, 0), std::invalid_argument);
}

TEST(Model, PlantedGrammarHasNearZeroLoss) {
  const auto g = example_grammar();
  const auto p = plant_grammar(g, 5);
  std::vector<Example> batch;
  for (const auto& w : oracle::all_words(3, 4)) batch.push_back({w, oracle::in_language(g, w), Category::positive});
  EXPECT_LT(batch_loss(p, batch, 0, 0).bce, 1e-3);
}

TEST(Model, GradientMatchesFiniteDifferences) {
  Engine rng(1234);
  int draws = 0;
  while (draws < 20) {
    const std::size_t n = 1 + uniform_below(rng, 4), t = 1 + uniform_below(rng, 3);
    const auto p = random_params(rng, n, t, 1.5);
    const auto batch = random_batch(rng, t, 1 + uniform_below(rng, 6), 5);
    if (!away_from_kinks(p, batch, 1e-3)) continue;
    const double beta = 0.5 * uniform01(rng), gamma = 0.5 * uniform01(rng);
    EXPECT_LE(max_relative_error(p, batch, beta, gamma), 1e-4) << "draw " << draws;
    ++draws;
  }
}

TEST(Model, ClampedBeliefsPassNoGradient) {
  // all logits large: every pre-clamp value of a long word exceeds 1
  auto p = ModelParams::zeros(3, 1);
  for (auto& x : p.chain_logits) x = 4;
  for (auto& x : p.terminal_logits) x = 4;
  const std::vector<Example> batch{{{0, 0, 0}, false, Category::random_negative}};
  const auto g = gradients(p, batch, 0, 0);
  for (double x : g.chain_logits) EXPECT_EQ(x, 0.0);
  for (double x : g.terminal_logits) EXPECT_EQ(x, 0.0);
}

TEST(Model, AbsentLetterHasZeroGradient) {
  Engine rng(6);
  const auto p = random_params(rng, 3, 3, 1.0);
  const std::vector<Example> batch{{{0, 1, 0}, true, Category::positive}, {{1, 1}, false, Category::random_negative}};
  const auto g = gradients(p, batch, 0, 0);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(g.terminal_logits[p.terminal_index(k, 2)], 0.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(g.chain_logits[p.chain_index(k, j, 2)], 0.0);
  }
}

TEST(Model, UsageOnlyGradientClosedForm) {
  Engine rng(7);
  const auto p = random_params(rng, 3, 2, 1.0);
  const double gamma = 0.3;
  const auto g = loss_and_gradient(p, {}, 0, gamma).gradient;
  const double n = static_cast<double>(p.production_entries());
  for (std::size_t i = 0; i < p.terminal_logits.size(); ++i) {
    const double s = sigmoid(p.terminal_logits[i]);
    EXPECT_NEAR(g.terminal_logits[i], gamma * s * (1 - s) / n, 1e-15);
  }
  for (std::size_t i = 0; i < p.chain_logits.size(); ++i) {
    const double s = sigmoid(p.chain_logits[i]);
    EXPECT_NEAR(g.chain_logits[i], gamma * s * (1 - s) / n, 1e-15);
  }
  for (double x : g.start_logits) EXPECT_EQ(x, 0.0);
}

TEST(Model, AdamFirstStepMovesByLearningRate) {
  Engine rng(10);
  auto p = random_params(rng, 3, 2, 1.0);
  const auto before = p;
  auto g = random_params(rng, 3, 2, 1.0);
  g.terminal_logits[0] = 0;
  auto state = AdamState::zeros_like(p);
  const double lr = 0.005;
  adam_step(p, g, state, lr, {});
  EXPECT_EQ(state.step, 1u);
  const auto pa = p.arrays();
  const auto ba = before.arrays();
  const auto ga = g.arrays();
  for (std::size_t a = 0; a < pa.size(); ++a)
    for (std::size_t i = 0; i < pa[a]->size(); ++i) {
      const double grad = (*ga[a])[i], delta = (*pa[a])[i] - (*ba[a])[i];
      if (grad == 0) {
        EXPECT_EQ(delta, 0.0);
      } else {
        EXPECT_LT(delta * grad, 0.0);
        EXPECT_NEAR(std::abs(delta), lr, lr * 1e-8 / std::abs(grad) + 1e-12);
      }
    }
}

TEST(Model, SharpeningStepIsMonotone) {
  Engine rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_params(rng, 3, 2, 1.0);
    auto state = AdamState::zeros_like(p);
    const double before = sharpening_loss(p);
    const auto g = loss_and_gradient(p, {}, 0.5, 0).gradient;
    adam_step(p, g, state, 0.01, {});
    EXPECT_LT(sharpening_loss(p), before);
  }
}

TEST(Model, BetaSchedule) {
  TrainConfig cfg;
  EXPECT_EQ(beta_start_epoch(cfg), 36u);
  cfg.max_epochs = 61;
  EXPECT_EQ(beta_start_epoch(cfg), 37u);
}

TEST(Model, InitParams) {
  TrainConfig cfg;
  cfg.seed = 4;
  const auto p = init_params(20, 10, cfg);
  for (double x : p.start_logits) EXPECT_EQ(x, 0.0);
  double sum = 0, sq = 0;
  for (double x : p.chain_logits) {
    sum += x;
    sq += x * x;
  }
  const double m = sum / p.chain_logits.size();
  EXPECT_NEAR(m, 0.0, 0.08);
  EXPECT_NEAR(std::sqrt(sq / p.chain_logits.size() - m * m), 1.0, 0.06);
  EXPECT_EQ(p, init_params(20, 10, cfg));
}

TEST(Model, TrainingIsDeterministicAndRecordsHistory) {
  const auto ds = assemble(oracle::worked_dfa(), 4, {}, 3);
  TrainConfig cfg;
  cfg.max_epochs = 8;
  cfg.seed = 5;
  const auto a = train(ds, cfg);
  EXPECT_EQ(a, train(ds, cfg));
  EXPECT_EQ(a.history.size(), 8u);
  EXPECT_EQ(a.epoch, 8u);
  for (const auto& h : a.history) EXPECT_EQ(h.beta, h.epoch < beta_start_epoch(cfg) ? 0.0 : cfg.beta);
  cfg.max_epochs = 0;
  const auto z = train(ds, cfg);
  EXPECT_EQ(z.params, initial_state(ds.alphabet_size, cfg).params);
  EXPECT_TRUE(z.history.empty());
  EXPECT_THROW(train(Dataset{}, cfg), DataError);
}

TEST(Model, EarlyStopOnlyAfterSharpeningStarts) {
  Grammar ap;
  ap.terminals = {"a", "b"};
  ap.nonterminals = {"A"};
  ap.productions = {Production::terminal_rule(0, 0), Production::chain_rule(0, 0, 0)};
  const auto ds = assemble(min_dfa(ap), 8, {}, 1);
  TrainConfig cfg;
  cfg.max_epochs = 3000;
  cfg.seed = 2;
  cfg.early_stop_epochs = 5;
  const auto s = train(ds, cfg);
  EXPECT_LT(s.epoch, 3000u);
  EXPECT_GE(s.epoch, beta_start_epoch(cfg) + 1);
  EXPECT_EQ(s.history.back().accuracy, 1.0);
}

TEST(Model, LearnsAPlus) {
  // a+ over {a, b}; defaults except the desk epoch budget
  Grammar ap;
  ap.terminals = {"a", "b"};
  ap.nonterminals = {"A"};
  ap.productions = {Production::terminal_rule(0, 0), Production::chain_rule(0, 0, 0)};
  const auto ds = assemble(min_dfa(ap), 8, {}, 1);
  int perfect = 0, exact = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig cfg;
    cfg.max_epochs = kDeskEpochs;
    cfg.seed = split_seed(seed, "train");
    const auto s = train(ds, cfg);
    const bool fits = s.history.back().accuracy == 1.0;
    const bool iso = is_isomorphic(min_dfa(extract_grammar(s.params, cfg.tau, {ap.terminals, {}})), min_dfa(ap));
    perfect += fits;
    exact += iso;
    if (iso) {
      EXPECT_TRUE(fits) << "seed " << seed;
    }
  }
  EXPECT_GE(perfect, 4);
  EXPECT_GE(exact, 4);
}

TEST(Model, AdamSecondStepAndZeroGradient) {
  Engine rng(13);
  auto p = random_params(rng, 2, 2, 1.0);
  const auto g = random_params(rng, 2, 2, 1.0);
  auto state = AdamState::zeros_like(p);
  const auto p0 = p;
  adam_step(p, g, state, 0.01);
  const auto p1 = p;
  adam_step(p, g, state, 0.01);
  EXPECT_EQ(state.step, 2u);
  for (std::size_t i = 0; i < p.chain_logits.size(); ++i) {
    const double first = std::abs(p1.chain_logits[i] - p0.chain_logits[i]);
    EXPECT_LE(std::abs(p.chain_logits[i] - p1.chain_logits[i]), first * 1.01);
  }
  auto q = p;
  auto fresh = AdamState::zeros_like(q);
  adam_step(q, ModelParams::zeros(2, 2), fresh, 0.01);
  EXPECT_EQ(q, p);
}

TEST(Model, BeliefsAndOutputStayInUnitInterval) {
  Engine rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_params(rng, 1 + uniform_below(rng, 5), 1 + uniform_below(rng, 3), 4.0);
    const auto tr = forward(p, random_word(rng, p.t, 8));
    for (const auto& u : tr.beliefs)
      for (double x : u) ASSERT_TRUE(x >= 0 && x <= 1);
    ASSERT_TRUE(tr.output >= 0 && tr.output <= 1);
  }
}
