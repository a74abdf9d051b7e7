// rgi: generate grammars and datasets, train the neural acceptor, read back
// grammars and parse forests, evaluate, and run experiment sweeps.
//
// Exit codes: 0 ok, 2 usage or unreadable input, 3 bad data or infeasible.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "rgi/io.hpp"
#include "rgi/rgi.hpp"

namespace fs = std::filesystem;
using rgi::io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { text, json };

struct Common {
  Format format = Format::text;
};

void emit(const Common& c, const Json& j, const std::string& text) {
  if (c.format == Format::json)
    std::cout << rgi::io::dump(j);
  else
    std::cout << text;
}

std::string stem_path(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---- training flags shared by train and sweep -----------------------------

struct TrainFlags {
  std::string config;
  std::optional<std::size_t> n_prime, epochs, batch_size, early_stop;
  std::optional<double> lr, beta, beta_start, gamma, tau, init_std;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "Training configuration JSON (partial; flags override it)");
    cmd->add_option("--n-prime", n_prime, "Hypothesis nonterminals n'");
    cmd->add_option("--epochs", epochs, "Maximum epochs");
    cmd->add_option("--batch-size", batch_size, "Mini-batch size");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--beta", beta, "Sharpening weight");
    cmd->add_option("--beta-start", beta_start, "Fraction of epochs before sharpening switches on");
    cmd->add_option("--gamma", gamma, "Production-use weight");
    cmd->add_option("--tau", tau, "Extraction threshold");
    cmd->add_option("--init-std", init_std, "Standard deviation of the initial logits");
    cmd->add_option("--early-stop", early_stop, "Stop once the grammar is stable for this many epochs");
  }

  rgi::TrainConfig resolve() const {
    rgi::TrainConfig c;
    if (!config.empty()) c = rgi::io::train_config_from_json(rgi::io::parse_json(rgi::io::read_file(config), config));
    if (n_prime) c.n_prime = *n_prime;
    if (epochs) c.max_epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (early_stop) c.early_stop_epochs = *early_stop;
    if (lr) c.lr = *lr;
    if (beta) c.beta = *beta;
    if (beta_start) c.beta_start_frac = *beta_start;
    if (gamma) c.gamma = *gamma;
    if (tau) c.tau = *tau;
    if (init_std) c.init_std = *init_std;
    try {
      rgi::check(c);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

// ---- gen-grammar -----------------------------------------------------------

struct GenGrammarOpts {
  std::size_t t = 0, n = 0;
  double p_bar = 0, p_terminal = 0.4;
  std::uint64_t seed = 0;
  std::string out, dfa_out;
};

int gen_grammar(const Common& c, const GenGrammarOpts& o) {
  rgi::GenConfig gen{o.t, o.n, o.p_bar, o.p_terminal, rgi::split_seed(o.seed, "grammar")};
  try {
    rgi::check(gen);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto g = rgi::random_grammar(gen);
  const auto dfa = rgi::min_dfa(g);
  const auto dfa_path = o.dfa_out.empty() ? stem_path(o.out, ".dfa.json") : o.dfa_out;
  rgi::io::write_file(o.out, rgi::io::dump(rgi::io::to_json(g)));
  rgi::io::write_file(dfa_path, rgi::io::dump(rgi::io::to_json(dfa, g.terminals)));
  Json j = rgi::io::to_json(g);
  j["id"] = rgi::io::grammar_id(g);
  j["dfa_states"] = dfa.state_count();
  emit(c, j, rgi::to_text(g) + "minimal DFA: " + std::to_string(dfa.state_count()) + " states\n");
  return kExitOk;
}

// ---- gen-data ----------------------------------------------------------------

struct GenDataOpts {
  std::string grammar, out;
  std::size_t depth = 10;
  std::uint64_t seed = 0;
  std::optional<rgi::Count> cap;
  bool no_caps = false;
};

int gen_data(const Common& c, const GenDataOpts& o) {
  const auto g = rgi::io::load_grammar(o.grammar);
  if (o.depth < 1) throw UsageError("depth must be >= 1");
  rgi::DatasetCaps caps = o.no_caps ? rgi::DatasetCaps::unlimited() : rgi::DatasetCaps{};
  if (o.cap) caps = {*o.cap, *o.cap, *o.cap, *o.cap};
  auto ds = rgi::assemble(rgi::min_dfa(g), o.depth, caps, rgi::split_seed(o.seed, "data"));
  ds.terminals = g.terminals;
  ds.grammar_id = rgi::io::grammar_id(g);
  rgi::io::write_file(o.out, rgi::io::to_jsonl(ds));

  std::map<std::string, std::size_t> per_category;
  for (const auto& e : ds.examples) ++per_category[std::string(rgi::to_string(e.category))];
  Json j;
  j["schema"] = rgi::io::kSchema;
  j["examples"] = ds.examples.size();
  j["positives"] = ds.positives();
  j["negatives"] = ds.negatives();
  j["categories"] = per_category;
  std::ostringstream text;
  text << ds.examples.size() << " examples (" << ds.positives() << " positive, " << ds.negatives()
       << " negative) at depth " << ds.depth << "\n";
  for (const auto& [k, v] : per_category) text << "  " << k << ": " << v << "\n";
  emit(c, j, text.str());
  return kExitOk;
}

// ---- train -------------------------------------------------------------------

struct TrainOpts {
  std::string data, out, history;
  std::optional<std::size_t> max_len;
  std::uint64_t seed = 0;
  TrainFlags flags;
};

int train_cmd(const Common& c, const TrainOpts& o) {
  auto cfg = o.flags.resolve();
  auto ds = rgi::io::dataset_from_jsonl(rgi::io::read_file(o.data));
  cfg.seed = rgi::split_seed(o.seed, "train");
  if (o.max_len) {
    if (*o.max_len < 1 || *o.max_len > ds.depth)
      throw UsageError("--max-len must lie in [1, " + std::to_string(ds.depth) + "]");
    ds = rgi::filter_max_len(ds, *o.max_len);
  }
  if (ds.examples.empty()) throw rgi::DataError("training set is empty");

  rgi::io::Checkpoint ck;
  ck.state = rgi::train(ds, cfg);
  ck.config = cfg;
  ck.terminals = ds.terminals;
  rgi::io::write_file(o.out, rgi::io::dump(rgi::io::to_json(ck)));
  if (!o.history.empty()) rgi::io::write_file(o.history, rgi::io::history_csv(ck.state.history));

  const double acc = rgi::accuracy(ck.state.params, ds.examples);
  Json j;
  j["schema"] = rgi::io::kSchema;
  j["examples"] = ds.examples.size();
  j["epochs"] = ck.state.epoch;
  j["train_accuracy"] = acc;
  j["final_loss"] = ck.state.history.empty() ? Json(nullptr) : Json(ck.state.history.back().loss);
  std::ostringstream text;
  text << "trained " << ck.state.epoch << " epochs on " << ds.examples.size() << " examples, accuracy " << acc
       << "\n";
  emit(c, j, text.str());
  return kExitOk;
}

// ---- plant / extract / parse ----------------------------------------------

struct PlantOpts {
  std::string grammar, out;
  std::size_t n_prime = 5;
};

int plant_cmd(const Common& c, const PlantOpts& o) {
  const auto g = rgi::io::load_grammar(o.grammar);
  if (g.n() > o.n_prime) throw UsageError("grammar has more nonterminals than --n-prime");
  rgi::io::Checkpoint ck;
  ck.config.n_prime = o.n_prime;
  ck.state.params = rgi::plant_grammar(g, o.n_prime);
  ck.state.adam = rgi::AdamState::zeros_like(ck.state.params);
  ck.terminals = g.terminals;
  ck.nonterminals = rgi::pad_nonterminals(g, o.n_prime).nonterminals;
  rgi::io::write_file(o.out, rgi::io::dump(rgi::io::to_json(ck)));
  Json j;
  j["schema"] = rgi::io::kSchema;
  j["n_prime"] = o.n_prime;
  j["nonterminals"] = ck.nonterminals;
  emit(c, j, "planted " + std::to_string(g.productions.size()) + " productions into n' = " +
                 std::to_string(o.n_prime) + "\n");
  return kExitOk;
}

rgi::SymbolNames checkpoint_names(const rgi::io::Checkpoint& ck) {
  auto names = rgi::io::names_of(ck);
  if (names.nonterminals.empty()) names.nonterminals = rgi::default_nonterminals(ck.state.params.n_prime);
  return names;
}

struct ExtractOpts {
  std::string checkpoint, out;
  std::optional<double> tau;
};

int extract_cmd(const Common& c, const ExtractOpts& o) {
  const auto ck = rgi::io::load_checkpoint(o.checkpoint);
  const double tau = o.tau.value_or(ck.config.tau);
  if (!(tau > 0 && tau < 1)) throw UsageError("--tau must lie in (0, 1)");
  const auto g = rgi::extract_grammar(ck.state.params, tau, checkpoint_names(ck));
  if (!o.out.empty()) rgi::io::write_file(o.out, rgi::io::dump(rgi::io::to_json(g)));
  emit(c, rgi::io::to_json(g), rgi::to_text(g));
  return kExitOk;
}

struct ParseOpts {
  std::string checkpoint, word;
  std::optional<double> tau;
  std::size_t limit = 64;
};

int parse_cmd(const Common& c, const ParseOpts& o) {
  const auto ck = rgi::io::load_checkpoint(o.checkpoint);
  const double tau = o.tau.value_or(ck.config.tau);
  if (!(tau > 0 && tau < 1)) throw UsageError("--tau must lie in (0, 1)");
  const auto names = checkpoint_names(ck);
  const auto w = rgi::parse_word(names.terminals, o.word);
  if (w.empty()) throw rgi::DataError("word must be non-empty");
  const auto& p = ck.state.params;
  const auto forest = rgi::parse_forest(p, w, tau);
  const auto start = static_cast<rgi::Symbol>(rgi::start_choice(p));
  const double out = rgi::forward(p, w).output;

  Json j = rgi::io::forest_to_json(forest, names, start, o.limit);
  j["output"] = out;
  std::ostringstream text;
  const std::size_t last = w.size() - 1;
  text << "word " << o.word << ", o = " << out << ", start " << names.nonterminals.at(start) << "\n";
  if (forest.positions[last].empty()) text << "no parse trees\n";
  for (const auto& root : forest.positions[last]) {
    text << names.nonterminals.at(root.nonterminal) << ": " << rgi::count_trees(forest, last, root.nonterminal)
         << " tree(s)\n";
    for (const auto& tree : rgi::expand_trees(forest, last, root.nonterminal, o.limit))
      text << "  " << rgi::io::tree_to_text(tree, names) << "\n";
  }
  emit(c, j, text.str());
  return kExitOk;
}

// ---- eval --------------------------------------------------------------------

struct EvalOpts {
  std::string truth, induced, checkpoint, out;
  std::size_t depth = 10;
  std::optional<double> tau;
};

std::string report_text(const rgi::EvalReport& r) {
  std::ostringstream os;
  const auto line = [&](const char* name, const rgi::Ratio& x) {
    os << name << x.str() << " (" << x.value() << ")\n";
  };
  os << "isomorphic: " << (r.isomorphic ? "yes" : "no") << "\n";
  line("recall:    ", r.recall);
  line("precision: ", r.precision);
  line("accuracy:  ", r.accuracy);
  os << "words up to length " << r.d << ": truth " << r.truth_words << ", induced " << r.induced_words
     << ", common " << r.common_words << "\n";
  os << "minimal DFA states: truth " << r.truth_states << ", induced " << r.induced_states << "\n";
  return os.str();
}

int eval_cmd(const Common& c, const EvalOpts& o) {
  if (o.induced.empty() == o.checkpoint.empty()) throw UsageError("give exactly one of --induced or --checkpoint");
  if (o.depth < 1) throw UsageError("depth must be >= 1");
  const auto truth = rgi::io::load_grammar(o.truth);
  rgi::Grammar induced;
  if (!o.induced.empty()) {
    induced = rgi::io::load_grammar(o.induced);
  } else {
    const auto ck = rgi::io::load_checkpoint(o.checkpoint);
    induced = rgi::extract_grammar(ck.state.params, o.tau.value_or(ck.config.tau), checkpoint_names(ck));
  }
  if (truth.terminals != induced.terminals) throw rgi::DataError("grammars use different terminal alphabets");
  const auto r = rgi::evaluate(truth, induced, o.depth);
  Json j = rgi::io::to_json(r);
  if (!o.out.empty()) rgi::io::write_file(o.out, rgi::io::dump(j));
  emit(c, j, report_text(r));
  return kExitOk;
}

// ---- sweep -------------------------------------------------------------------

struct SweepOpts {
  std::string grid, out;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool no_timing = false;
  TrainFlags flags;
};

int sweep_cmd(const Common& c, const SweepOpts& o) {
  const auto grid = o.grid.empty() ? rgi::ExperimentGrid{}
                                   : rgi::io::grid_from_json(rgi::io::parse_json(rgi::io::read_file(o.grid), o.grid));
  for (auto L : grid.train_len)
    if (L < 1 || L > grid.depth) throw UsageError("grid train_len must lie in [1, depth]");
  const auto cfg = o.flags.resolve();
  if (o.jobs < 1) throw UsageError("--jobs must be >= 1");

  const fs::path dir(o.out);
  const fs::path runs_dir = dir / "runs";
  fs::create_directories(runs_dir);

  // Earlier reports are reused only when they were produced by the same setup.
  Json manifest;
  manifest["schema"] = rgi::io::kSchema;
  manifest["seed"] = o.seed;
  manifest["grid"] = rgi::io::to_json(grid);
  manifest["train"] = rgi::io::to_json(cfg);
  const auto manifest_path = (dir / "sweep.json").string();
  if (fs::exists(manifest_path)) {
    const auto old = rgi::io::parse_json(rgi::io::read_file(manifest_path), manifest_path);
    if (old != manifest) throw UsageError(o.out + " holds a sweep with different settings");
  } else {
    rgi::io::write_file(manifest_path, rgi::io::dump(manifest));
  }

  const auto run_path = [&](const rgi::GridCell& cell, std::size_t run) {
    return (runs_dir / (rgi::run_key(cell, run) + ".json")).string();
  };
  rgi::ExperimentOptions opts;
  opts.jobs = o.jobs;
  opts.lookup = [&](const rgi::GridCell& cell, std::size_t run) -> std::optional<rgi::RunRecord> {
    const auto path = run_path(cell, run);
    if (!fs::exists(path)) return std::nullopt;
    return rgi::io::run_record_from_json(rgi::io::parse_json(rgi::io::read_file(path), path));
  };
  opts.on_record = [&](const rgi::RunRecord& r) {
    auto rec = r;
    if (o.no_timing) rec.seconds = 0;
    rgi::io::write_file(run_path(rec.cell, rec.run), rgi::io::dump(rgi::io::to_json(rec)));
  };

  auto res = rgi::run_experiment(grid, cfg, o.seed, opts);
  if (o.no_timing) {
    for (auto& r : res.runs) r.seconds = 0;
    for (auto& s : res.cells) s.seconds = 0;
  }
  rgi::io::write_file((dir / "summary.csv").string(), rgi::io::summary_csv(res, !o.no_timing));

  Json j;
  j["schema"] = rgi::io::kSchema;
  j["runs"] = res.runs.size();
  j["exact_rate"] = res.exact_rate;
  j["mean_accuracy"] = res.mean_accuracy;
  j["cells"] = Json::array();
  std::ostringstream text;
  std::size_t failed = 0;
  for (const auto& s : res.cells) {
    failed += s.failed;
    j["cells"].push_back({{"cell", rgi::cell_key(s.cell)},
                          {"runs", s.runs},
                          {"failed", s.failed},
                          {"exact_fraction", s.exact_fraction},
                          {"mean_recall", s.mean_recall},
                          {"mean_precision", s.mean_precision},
                          {"mean_accuracy", s.mean_accuracy}});
    text << rgi::cell_key(s.cell) << ": exact " << s.exact_fraction << ", accuracy " << s.mean_accuracy;
    if (s.failed) text << ", " << s.failed << " failed";
    text << "\n";
  }
  text << "overall: exact " << res.exact_rate << ", mean accuracy " << res.mean_accuracy << " over "
       << res.runs.size() << " runs\n";
  rgi::io::write_file((dir / "summary.json").string(), rgi::io::dump(j));
  emit(c, j, text.str());
  if (failed) std::cerr << "warning: " << failed << " run(s) failed; see " << (dir / "summary.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regular grammar induction with a neural acceptor"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--format", common.format, "Output format for stdout")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"text", Format::text}, {"json", Format::json}}))
      ->default_str("text");

  std::function<int()> action;

  GenGrammarOpts gg;
  auto* cmd = app.add_subcommand("gen-grammar", "Sample a random left-regular grammar");
  cmd->add_option("-t,--terminals", gg.t, "Number of terminals")->required();
  cmd->add_option("-n,--nonterminals", gg.n, "Number of nonterminals")->required();
  cmd->add_option("-p,--p-bar", gg.p_bar, "Mean productions per nonterminal")->required();
  cmd->add_option("--pt", gg.p_terminal, "Probability of a terminal production")->capture_default_str();
  cmd->add_option("--seed", gg.seed, "Master seed")->capture_default_str();
  cmd->add_option("-o,--out", gg.out, "Grammar JSON path")->required();
  cmd->add_option("--dfa", gg.dfa_out, "Minimal DFA JSON path (default <stem>.dfa.json)");
  cmd->callback([&] { action = [&] { return gen_grammar(common, gg); }; });

  GenDataOpts gd;
  cmd = app.add_subcommand("gen-data", "Assemble a labelled dataset from a grammar");
  cmd->add_option("-g,--grammar", gd.grammar, "Grammar JSON")->required();
  cmd->add_option("-d,--depth", gd.depth, "Maximum word length")->capture_default_str();
  cmd->add_option("--seed", gd.seed, "Master seed")->capture_default_str();
  cmd->add_option("--cap", gd.cap, "Limit for every example category (default 2000)");
  cmd->add_flag("--no-caps", gd.no_caps, "No per-category limits");
  cmd->add_option("-o,--out", gd.out, "Dataset JSONL path")->required();
  cmd->callback([&] { action = [&] { return gen_data(common, gd); }; });

  TrainOpts tr;
  cmd = app.add_subcommand("train", "Train the acceptor on a dataset");
  cmd->add_option("--data", tr.data, "Dataset JSONL")->required();
  cmd->add_option("-o,--out", tr.out, "Checkpoint JSON path")->required();
  cmd->add_option("--history", tr.history, "Per-epoch history CSV path");
  cmd->add_option("--max-len", tr.max_len, "Train only on words up to this length");
  cmd->add_option("--seed", tr.seed, "Master seed")->capture_default_str();
  tr.flags.add_to(cmd);
  cmd->callback([&] { action = [&] { return train_cmd(common, tr); }; });

  PlantOpts pl;
  cmd = app.add_subcommand("plant", "Write a checkpoint that encodes a known grammar");
  cmd->add_option("-g,--grammar", pl.grammar, "Grammar JSON")->required();
  cmd->add_option("--n-prime", pl.n_prime, "Hypothesis nonterminals n'")->capture_default_str();
  cmd->add_option("-o,--out", pl.out, "Checkpoint JSON path")->required();
  cmd->callback([&] { action = [&] { return plant_cmd(common, pl); }; });

  ExtractOpts ex;
  cmd = app.add_subcommand("extract", "Read the induced grammar out of a checkpoint");
  cmd->add_option("-c,--checkpoint", ex.checkpoint, "Checkpoint JSON")->required();
  cmd->add_option("--tau", ex.tau, "Threshold (default from the checkpoint config)");
  cmd->add_option("-o,--out", ex.out, "Grammar JSON path");
  cmd->callback([&] { action = [&] { return extract_cmd(common, ex); }; });

  ParseOpts pa;
  cmd = app.add_subcommand("parse", "Parse forest of a word under a checkpoint");
  cmd->add_option("-c,--checkpoint", pa.checkpoint, "Checkpoint JSON")->required();
  cmd->add_option("-w,--word", pa.word, "Word, one character per terminal")->required();
  cmd->add_option("--tau", pa.tau, "Threshold (default from the checkpoint config)");
  cmd->add_option("--limit", pa.limit, "Maximum trees listed per root")->capture_default_str();
  cmd->callback([&] { action = [&] { return parse_cmd(common, pa); }; });

  EvalOpts ev;
  cmd = app.add_subcommand("eval", "Compare an induced grammar with the ground truth");
  cmd->add_option("--truth", ev.truth, "Ground-truth grammar JSON")->required();
  cmd->add_option("--induced", ev.induced, "Induced grammar JSON");
  cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint to extract the induced grammar from");
  cmd->add_option("-d,--depth", ev.depth, "Evaluation horizon")->capture_default_str();
  cmd->add_option("--tau", ev.tau, "Extraction threshold when using --checkpoint");
  cmd->add_option("-o,--out", ev.out, "Report JSON path");
  cmd->callback([&] { action = [&] { return eval_cmd(common, ev); }; });

  SweepOpts sw;
  cmd = app.add_subcommand("sweep", "Run an experiment grid");
  cmd->add_option("--grid", sw.grid, "Grid JSON (default: the desk grid)");
  cmd->add_option("--out", sw.out, "Output directory")->required();
  cmd->add_option("--seed", sw.seed, "Master seed")->capture_default_str();
  cmd->add_option("--jobs", sw.jobs, "Parallel runs")->capture_default_str();
  cmd->add_flag("--no-timing", sw.no_timing, "Write 0 for run times so output bytes are reproducible");
  sw.flags.add_to(cmd);
  cmd->callback([&] { action = [&] { return sweep_cmd(common, sw); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rgi::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
