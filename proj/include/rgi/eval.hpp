#pragma once

// Comparing an induced grammar with the ground truth: exact equivalence via
// minimal-DFA isomorphism, otherwise recall / precision / accuracy over the
// words of length 1..d.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rgi/automata.hpp"
#include "rgi/dataset.hpp"
#include "rgi/extraction.hpp"
#include "rgi/grammar.hpp"
#include "rgi/model.hpp"

namespace rgi {

/// Non-negative rational in lowest terms.
class Ratio {
 public:
  constexpr Ratio() = default;
  constexpr Ratio(Count num, Count den) : num_(num), den_(den) {
    if (den_ == 0) throw std::invalid_argument("Ratio: zero denominator");
    const Count g = std::gcd(num_, den_);
    num_ /= g;
    den_ /= g;
  }

  constexpr Count num() const noexcept { return num_; }
  constexpr Count den() const noexcept { return den_; }
  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  friend constexpr bool operator==(const Ratio&, const Ratio&) = default;
  friend bool operator<=(const Ratio& a, const Ratio& b) {
    return static_cast<unsigned __int128>(a.num_) * b.den_ <= static_cast<unsigned __int128>(b.num_) * a.den_;
  }

 private:
  Count num_ = 0;
  Count den_ = 1;
};

/// num / den, or 1 when den is zero.
inline Ratio ratio_or_one(Count num, Count den) { return den == 0 ? Ratio(1, 1) : Ratio(num, den); }

struct EvalReport {
  bool isomorphic = false;
  Ratio recall{1, 1};
  Ratio precision{1, 1};
  Ratio accuracy{1, 1};
  std::size_t d = 0;
  Count truth_words = 0;    ///< |L_d|
  Count induced_words = 0;  ///< |L'_d|
  Count common_words = 0;   ///< |L_d ∩ L'_d|
  Count union_words = 0;    ///< |L_d ∪ L'_d|
  std::size_t truth_states = 0;
  std::size_t induced_states = 0;

  bool operator==(const EvalReport&) const = default;
};

inline Count total(const std::vector<Count>& per_length) {
  Count s = 0;
  for (Count c : per_length) s = detail::checked_add(s, c);
  return s;
}

/// Compares minimal DFAs. When they are isomorphic every metric is 1;
/// otherwise recall = |∩| / |L_d|, precision = |∩| / |L'_d| and accuracy =
/// |∩| / |∪|, each taken as 1 when its denominator is zero.
inline EvalReport evaluate(const Grammar& truth, const Grammar& induced, std::size_t d) {
  if (d < 1) throw std::invalid_argument("evaluate: d must be >= 1");
  if (truth.terminals != induced.terminals) throw std::invalid_argument("evaluate: alphabet mismatch");
  const Dfa a = min_dfa(truth);
  const Dfa b = min_dfa(induced);
  EvalReport r;
  r.d = d;
  r.truth_states = a.state_count();
  r.induced_states = b.state_count();
  r.isomorphic = is_isomorphic(a, b);
  r.truth_words = total(count_words(a, d));
  r.induced_words = total(count_words(b, d));
  r.common_words = total(count_words(product_intersection(a, b), d));
  r.union_words = r.truth_words + r.induced_words - r.common_words;
  if (!r.isomorphic) {
    r.recall = ratio_or_one(r.common_words, r.truth_words);
    r.precision = ratio_or_one(r.common_words, r.induced_words);
    r.accuracy = ratio_or_one(r.common_words, r.union_words);
  }
  return r;
}

/// One cell of an experiment grid.
struct GridCell {
  std::size_t t = 4;
  std::size_t n = 2;
  double p_bar = 2;
  std::size_t train_len = 10;

  bool operator==(const GridCell&) const = default;
};

struct ExperimentGrid {
  std::vector<std::size_t> t{4};
  std::vector<std::size_t> n{2, 3};
  std::vector<double> p_bar{2, 3};
  std::vector<std::size_t> train_len{10};
  std::size_t depth = 10;  ///< dataset depth and evaluation horizon
  std::size_t runs = 3;
  double p_terminal = 0.4;
  DatasetCaps caps;
  /// Draw a fresh grammar and dataset for every run instead of one per
  /// (t, n, p_bar).
  bool grammar_per_run = false;

  std::vector<GridCell> cells() const {
    std::vector<GridCell> out;
    for (auto ti : t)
      for (auto ni : n)
        for (auto pi : p_bar)
          for (auto li : train_len) out.push_back({ti, ni, pi, li});
    return out;
  }
};

/// Master seed of the desk grid, fixed before any run was inspected.
inline constexpr std::uint64_t kDeskSeed = 1;

/// Epoch budget for desk-scale datasets. They hold tens to hundreds of
/// examples, so an epoch is one or a few Adam steps and the 60-epoch default
/// stops long before the sharpened grammar settles.
inline constexpr std::size_t kDeskEpochs = 40000;

struct RunRecord {
  GridCell cell;
  std::size_t run = 0;
  bool ok = true;
  std::string error;
  EvalReport report;
  std::size_t epochs = 0;
  double seconds = 0;
  Grammar truth;
  Grammar induced;
};

struct CellSummary {
  GridCell cell;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double exact_fraction = 0;
  double mean_recall = 0;
  double mean_precision = 0;
  double mean_accuracy = 0;
  double seconds = 0;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;  ///< (cell, run) order
  std::vector<CellSummary> cells;
  double exact_rate = 0;
  double mean_accuracy = 0;
};

inline std::string cell_key(const GridCell& c) {
  std::string p = std::to_string(c.p_bar);
  p.erase(p.find_last_not_of('0') + 1);
  if (!p.empty() && p.back() == '.') p.pop_back();
  return "t" + std::to_string(c.t) + "_n" + std::to_string(c.n) + "_p" + p + "_L" + std::to_string(c.train_len);
}

inline std::string run_key(const GridCell& c, std::size_t run) { return cell_key(c) + "_r" + std::to_string(run); }

/// Seeds per stage. By default the ground-truth grammar and its dataset
/// depend only on (t, n, p_bar), so every train length and run of a
/// configuration shares them; with per_run they also depend on the run. The
/// training seed depends on train length and run.
struct RunSeeds {
  std::uint64_t grammar;
  std::uint64_t data;
  std::uint64_t train;
};

inline RunSeeds run_seeds(std::uint64_t master, const GridCell& c, std::size_t run, bool per_run = false) {
  GridCell base = c;
  base.train_len = 0;
  const std::string gk = per_run ? run_key(base, run) : cell_key(base);
  return {split_seed(master, "grammar/" + gk), split_seed(master, "data/" + gk),
          split_seed(master, "train/" + run_key(c, run))};
}

/// Generates, trains, extracts and evaluates a single run.
inline RunRecord run_one(const ExperimentGrid& grid, const GridCell& cell, std::size_t run,
                         const TrainConfig& base_cfg, std::uint64_t master_seed) {
  const auto started = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.cell = cell;
  rec.run = run;
  try {
    const auto seeds = run_seeds(master_seed, cell, run, grid.grammar_per_run);
    GenConfig gen{cell.t, cell.n, cell.p_bar, grid.p_terminal, seeds.grammar};
    rec.truth = random_grammar(gen);
    const Dfa dfa = min_dfa(rec.truth);
    Dataset ds = assemble(dfa, grid.depth, grid.caps, seeds.data);
    if (cell.train_len < ds.depth) ds = filter_max_len(ds, cell.train_len);
    if (ds.examples.empty()) throw DataError("empty training set");
    TrainConfig cfg = base_cfg;
    cfg.seed = seeds.train;
    const auto state = train(ds, cfg);
    rec.epochs = state.epoch;
    rec.induced = extract_grammar(state.params, cfg.tau, {rec.truth.terminals, {}});
    rec.report = evaluate(rec.truth, rec.induced, grid.depth);
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

inline ExperimentResult summarize(std::vector<RunRecord> runs) {
  ExperimentResult out;
  out.runs = std::move(runs);
  std::size_t exact = 0;
  double acc = 0;
  for (const auto& r : out.runs) {
    auto it = std::find_if(out.cells.begin(), out.cells.end(), [&](const CellSummary& s) { return s.cell == r.cell; });
    if (it == out.cells.end()) {
      out.cells.push_back({r.cell});
      it = out.cells.end() - 1;
    }
    ++it->runs;
    it->seconds += r.seconds;
    if (!r.ok) {
      ++it->failed;
      continue;
    }
    it->exact_fraction += r.report.isomorphic;
    it->mean_recall += r.report.recall.value();
    it->mean_precision += r.report.precision.value();
    it->mean_accuracy += r.report.accuracy.value();
    exact += r.report.isomorphic;
    acc += r.report.accuracy.value();
  }
  for (auto& s : out.cells) {
    const auto ok = static_cast<double>(s.runs - s.failed);
    if (ok == 0) continue;
    s.exact_fraction /= ok;
    s.mean_recall /= ok;
    s.mean_precision /= ok;
    s.mean_accuracy /= ok;
  }
  // failed runs count as misses in the aggregate
  const auto all = static_cast<double>(out.runs.size());
  if (all > 0) {
    out.exact_rate = static_cast<double>(exact) / all;
    out.mean_accuracy = acc / all;
  }
  return out;
}

struct ExperimentOptions {
  std::size_t jobs = 1;
  /// Returns a previously computed record for (cell, run), if any.
  std::function<std::optional<RunRecord>(const GridCell&, std::size_t)> lookup;
  /// Called with every freshly computed record, possibly from a worker thread.
  std::function<void(const RunRecord&)> on_record;
};

/// Every (cell, run) of the grid. Runs are independent and may execute on
/// several threads; results are merged in (cell, run) order.
inline ExperimentResult run_experiment(const ExperimentGrid& grid, const TrainConfig& cfg, std::uint64_t seed,
                                       const ExperimentOptions& opts = {}) {
  check(cfg);
  struct Task {
    GridCell cell;
    std::size_t run;
  };
  std::vector<Task> tasks;
  for (const auto& c : grid.cells())
    for (std::size_t r = 0; r < grid.runs; ++r) tasks.push_back({c, r});

  std::vector<RunRecord> records(tasks.size());
  std::vector<bool> done(tasks.size(), false);
  if (opts.lookup) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (auto cached = opts.lookup(tasks[i].cell, tasks[i].run)) {
        records[i] = std::move(*cached);
        done[i] = true;
      }
    }
  }

  std::mutex mu;
  std::size_t next = 0;
  const auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        while (next < tasks.size() && done[next]) ++next;
        if (next >= tasks.size()) return;
        i = next++;
      }
      auto rec = run_one(grid, tasks[i].cell, tasks[i].run, cfg, seed);
      if (opts.on_record) {
        std::lock_guard lock(mu);
        opts.on_record(rec);
      }
      records[i] = std::move(rec);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, opts.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return summarize(std::move(records));
}

}  // namespace rgi
