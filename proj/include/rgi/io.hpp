#pragma once

// File formats. Every JSON document carries "schema": 1. Keys are written in
// a fixed order so identical values produce identical bytes.

#include <cstdint>
#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "rgi/automata.hpp"
#include "rgi/dataset.hpp"
#include "rgi/eval.hpp"
#include "rgi/extraction.hpp"
#include "rgi/grammar.hpp"
#include "rgi/model.hpp"

namespace rgi::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchema = 1;

/// A file that cannot be opened, read or written.
class IoError : public DataError {
 public:
  using DataError::DataError;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw DataError(what + ": " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

namespace detail {

inline void check_schema(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != kSchema)
    throw DataError(what + ": missing or unsupported schema version");
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError(what + ": " + e.what());
  }
}

inline Symbol index_of(const std::vector<std::string>& names, const std::string& name, const std::string& what) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError(what + ": unknown symbol '" + name + "'");
  return static_cast<Symbol>(it - names.begin());
}

}  // namespace detail

// ---- grammar -------------------------------------------------------------

/// Productions are listed sorted by (lhs, nonterminal, terminal) name.
inline Json to_json(const Grammar& g) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<std::pair<Key, Json>> prods;
  for (const auto& p : g.productions) {
    Json pj;
    pj["lhs"] = g.nonterminals.at(p.lhs);
    if (p.prefix) pj["nonterminal"] = g.nonterminals.at(*p.prefix);
    pj["terminal"] = g.terminals.at(p.terminal);
    prods.push_back({{g.nonterminals.at(p.lhs), p.prefix ? g.nonterminals.at(*p.prefix) : "",
                      g.terminals.at(p.terminal)},
                     std::move(pj)});
  }
  std::sort(prods.begin(), prods.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Json j;
  j["schema"] = kSchema;
  j["terminals"] = g.terminals;
  j["nonterminals"] = g.nonterminals;
  j["start"] = g.nonterminals.at(g.start);
  j["productions"] = Json::array();
  for (auto& [key, pj] : prods) j["productions"].push_back(std::move(pj));
  return j;
}

inline Grammar grammar_from_json(const Json& j) {
  const std::string what = "grammar";
  detail::check_schema(j, what);
  return detail::guarded(what, [&] {
    Grammar g;
    g.terminals = j.at("terminals").get<std::vector<std::string>>();
    g.nonterminals = j.at("nonterminals").get<std::vector<std::string>>();
    g.start = detail::index_of(g.nonterminals, j.at("start").get<std::string>(), what);
    for (const auto& pj : j.at("productions")) {
      Production p;
      p.lhs = detail::index_of(g.nonterminals, pj.at("lhs").get<std::string>(), what);
      if (pj.contains("nonterminal"))
        p.prefix = detail::index_of(g.nonterminals, pj.at("nonterminal").get<std::string>(), what);
      p.terminal = detail::index_of(g.terminals, pj.at("terminal").get<std::string>(), what);
      g.productions.push_back(p);
    }
    return g;
  });
}

inline Grammar load_grammar(const std::string& path) {
  return grammar_from_json(parse_json(read_file(path), path));
}

/// Stable 16-hex-digit identifier of a grammar's canonical JSON.
inline std::string grammar_id(const Grammar& g) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(to_json(g).dump());
  return os.str();
}

// ---- DFA -----------------------------------------------------------------

inline Json to_json(const Dfa& dfa, const std::vector<std::string>& alphabet) {
  Json j;
  j["schema"] = kSchema;
  j["alphabet"] = alphabet;
  j["state_count"] = dfa.state_count();
  j["initial"] = dfa.initial;
  Json acc = Json::array();
  for (State s = 0; s < dfa.state_count(); ++s)
    if (dfa.accepting[s]) acc.push_back(s);
  j["accepting"] = std::move(acc);
  j["complete"] = dfa.is_complete();
  Json rows = Json::array();
  for (State s = 0; s < dfa.state_count(); ++s) {
    Json row = Json::array();
    for (Symbol a = 0; a < dfa.alphabet_size; ++a) {
      const State to = dfa.next(s, a);
      if (to == kNoState)
        row.push_back(nullptr);
      else
        row.push_back(to);
    }
    rows.push_back(std::move(row));
  }
  j["transitions"] = std::move(rows);
  return j;
}

inline Dfa dfa_from_json(const Json& j) {
  const std::string what = "dfa";
  detail::check_schema(j, what);
  return detail::guarded(what, [&] {
    const auto alphabet = j.at("alphabet").get<std::vector<std::string>>();
    const auto states = j.at("state_count").get<std::size_t>();
    Dfa dfa(states, alphabet.size());
    dfa.initial = j.at("initial").get<State>();
    if (dfa.initial >= states) throw DataError("dfa: initial state out of range");
    for (const auto& s : j.at("accepting")) dfa.accepting.at(s.get<State>()) = true;
    const auto& rows = j.at("transitions");
    if (rows.size() != states) throw DataError("dfa: transition table has wrong row count");
    for (State s = 0; s < states; ++s) {
      if (rows[s].size() != alphabet.size()) throw DataError("dfa: transition row has wrong length");
      for (Symbol a = 0; a < alphabet.size(); ++a) {
        if (rows[s][a].is_null()) continue;
        const auto to = rows[s][a].get<State>();
        if (to >= states) throw DataError("dfa: transition target out of range");
        dfa.set(s, a, to);
      }
    }
    return dfa;
  });
}

// ---- dataset (JSONL) -----------------------------------------------------

/// Header line, then one {"word", "label", "category"} object per line.
inline std::string to_jsonl(const Dataset& ds) {
  Json header;
  header["schema"] = kSchema;
  header["depth"] = ds.depth;
  header["t"] = ds.alphabet_size;
  header["terminals"] = ds.terminals;
  header["seed"] = ds.seed;
  header["grammar_id"] = ds.grammar_id;
  header["examples"] = ds.examples.size();
  std::string out = header.dump() + "\n";
  for (const auto& e : ds.examples) {
    Json line;
    line["word"] = render_word(ds.terminals, e.word);
    line["label"] = e.positive ? 1 : 0;
    line["category"] = to_string(e.category);
    out += line.dump() + "\n";
  }
  return out;
}

inline Dataset dataset_from_jsonl(const std::string& text) {
  const std::string what = "dataset";
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(what + ": empty file");
  const Json header = parse_json(line, what + " header");
  detail::check_schema(header, what);
  return detail::guarded(what, [&] {
    Dataset ds;
    ds.depth = header.at("depth").get<std::size_t>();
    ds.alphabet_size = header.at("t").get<std::size_t>();
    ds.terminals = header.at("terminals").get<std::vector<std::string>>();
    ds.seed = header.at("seed").get<std::uint64_t>();
    ds.grammar_id = header.at("grammar_id").get<std::string>();
    if (ds.terminals.size() != ds.alphabet_size) throw DataError(what + ": terminal list does not match t");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const Json j = parse_json(line, what + " line " + std::to_string(lineno));
      Example e;
      e.word = parse_word(ds.terminals, j.at("word").get<std::string>());
      e.positive = j.at("label").get<int>() == 1;
      e.category = category_from_string(j.at("category").get<std::string>());
      if (e.word.empty()) throw DataError(what + ": empty word on line " + std::to_string(lineno));
      if (e.positive != (e.category == Category::positive))
        throw DataError(what + ": label and category disagree on line " + std::to_string(lineno));
      ds.examples.push_back(std::move(e));
    }
    return ds;
  });
}

// ---- checkpoint ----------------------------------------------------------

struct Checkpoint {
  TrainState state;
  TrainConfig config;
  std::vector<std::string> terminals;
  std::vector<std::string> nonterminals;  ///< names for extraction; may be empty

  bool operator==(const Checkpoint&) const = default;
};

namespace detail {

inline Json matrices_to_json(const ModelParams& p) {
  Json j;
  Json term = Json::array();
  for (std::size_t k = 0; k < p.n_prime; ++k) {
    Json row = Json::array();
    for (std::size_t a = 0; a < p.t; ++a) row.push_back(p.terminal_logits[p.terminal_index(k, a)]);
    term.push_back(std::move(row));
  }
  Json chain = Json::array();
  for (std::size_t k = 0; k < p.n_prime; ++k) {
    Json mat = Json::array();
    for (std::size_t i = 0; i < p.n_prime; ++i) {
      Json row = Json::array();
      for (std::size_t a = 0; a < p.t; ++a) row.push_back(p.chain_logits[p.chain_index(k, i, a)]);
      mat.push_back(std::move(row));
    }
    chain.push_back(std::move(mat));
  }
  j["terminal_logits"] = std::move(term);
  j["chain_logits"] = std::move(chain);
  j["start_logits"] = p.start_logits;
  return j;
}

inline ModelParams matrices_from_json(const Json& j, std::size_t n_prime, std::size_t t) {
  ModelParams p = ModelParams::zeros(n_prime, t);
  const auto& term = j.at("terminal_logits");
  const auto& chain = j.at("chain_logits");
  if (term.size() != n_prime || chain.size() != n_prime) throw DataError("checkpoint: matrix shape mismatch");
  for (std::size_t k = 0; k < n_prime; ++k) {
    if (term[k].size() != t || chain[k].size() != n_prime) throw DataError("checkpoint: matrix shape mismatch");
    for (std::size_t a = 0; a < t; ++a) p.terminal_logits[p.terminal_index(k, a)] = term[k][a].get<double>();
    for (std::size_t i = 0; i < n_prime; ++i) {
      if (chain[k][i].size() != t) throw DataError("checkpoint: matrix shape mismatch");
      for (std::size_t a = 0; a < t; ++a) p.chain_logits[p.chain_index(k, i, a)] = chain[k][i][a].get<double>();
    }
  }
  p.start_logits = j.at("start_logits").get<std::vector<double>>();
  if (p.start_logits.size() != n_prime) throw DataError("checkpoint: start vector shape mismatch");
  return p;
}

}  // namespace detail

inline Json to_json(const TrainConfig& c) {
  Json j;
  j["n_prime"] = c.n_prime;
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["beta"] = c.beta;
  j["beta_start_frac"] = c.beta_start_frac;
  j["gamma"] = c.gamma;
  j["tau"] = c.tau;
  j["init_std"] = c.init_std;
  j["adam"] = {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}};
  j["seed"] = c.seed;
  if (c.early_stop_epochs)
    j["early_stop_epochs"] = *c.early_stop_epochs;
  else
    j["early_stop_epochs"] = nullptr;
  return j;
}

/// Fields absent from j keep their defaults.
inline TrainConfig train_config_from_json(const Json& j, TrainConfig c = {}) {
  return detail::guarded("train config", [&] {
    if (j.contains("n_prime")) c.n_prime = j.at("n_prime").get<std::size_t>();
    if (j.contains("lr")) c.lr = j.at("lr").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<std::size_t>();
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    if (j.contains("beta_start_frac")) c.beta_start_frac = j.at("beta_start_frac").get<double>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("init_std")) c.init_std = j.at("init_std").get<double>();
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      c.adam.beta1 = a.value("beta1", c.adam.beta1);
      c.adam.beta2 = a.value("beta2", c.adam.beta2);
      c.adam.epsilon = a.value("epsilon", c.adam.epsilon);
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("early_stop_epochs")) {
      const auto& e = j.at("early_stop_epochs");
      c.early_stop_epochs = e.is_null() ? std::nullopt : std::optional<std::size_t>(e.get<std::size_t>());
    }
    return c;
  });
}

inline Json to_json(const Checkpoint& ck) {
  const auto& p = ck.state.params;
  Json j;
  j["schema"] = kSchema;
  j["n_prime"] = p.n_prime;
  j["t"] = p.t;
  j["terminals"] = ck.terminals;
  j["nonterminals"] = ck.nonterminals;
  j["seed"] = ck.config.seed;
  j["epoch"] = ck.state.epoch;
  j["params"] = detail::matrices_to_json(p);
  j["adam"] = {{"step", ck.state.adam.step},
               {"m", detail::matrices_to_json(ck.state.adam.m)},
               {"v", detail::matrices_to_json(ck.state.adam.v)}};
  j["config"] = to_json(ck.config);
  return j;
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  const std::string what = "checkpoint";
  detail::check_schema(j, what);
  return detail::guarded(what, [&] {
    Checkpoint ck;
    const auto n = j.at("n_prime").get<std::size_t>();
    const auto t = j.at("t").get<std::size_t>();
    ck.terminals = j.at("terminals").get<std::vector<std::string>>();
    ck.nonterminals = j.at("nonterminals").get<std::vector<std::string>>();
    if (ck.terminals.size() != t) throw DataError(what + ": terminal list does not match t");
    if (!ck.nonterminals.empty() && ck.nonterminals.size() != n)
      throw DataError(what + ": nonterminal list does not match n_prime");
    ck.state.epoch = j.at("epoch").get<std::size_t>();
    ck.state.params = detail::matrices_from_json(j.at("params"), n, t);
    const auto& adam = j.at("adam");
    ck.state.adam.step = adam.at("step").get<std::uint64_t>();
    ck.state.adam.m = detail::matrices_from_json(adam.at("m"), n, t);
    ck.state.adam.v = detail::matrices_from_json(adam.at("v"), n, t);
    ck.config = train_config_from_json(j.at("config"));
    return ck;
  });
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_json(parse_json(read_file(path), path));
}

inline SymbolNames names_of(const Checkpoint& ck) { return {ck.terminals, ck.nonterminals}; }

// ---- training history (CSV) ----------------------------------------------

inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,beta,loss,accuracy,fingerprint\n";
  os << std::setprecision(17);
  for (const auto& r : history)
    os << r.epoch << "," << r.beta << "," << r.loss << "," << r.accuracy << "," << fnv1a64(r.fingerprint) << "\n";
  return os.str();
}

// ---- evaluation report ---------------------------------------------------

inline Json to_json(const Ratio& r) {
  return Json{{"num", r.num()}, {"den", r.den()}, {"value", r.value()}};
}

inline Ratio ratio_from_json(const Json& j) {
  return Ratio(j.at("num").get<Count>(), j.at("den").get<Count>());
}

inline Json to_json(const EvalReport& r) {
  Json j;
  j["schema"] = kSchema;
  j["isomorphic"] = r.isomorphic;
  j["d"] = r.d;
  j["recall"] = to_json(r.recall);
  j["precision"] = to_json(r.precision);
  j["accuracy"] = to_json(r.accuracy);
  j["counts"] = {{"truth", r.truth_words},
                 {"induced", r.induced_words},
                 {"intersection", r.common_words},
                 {"union", r.union_words}};
  j["states"] = {{"truth", r.truth_states}, {"induced", r.induced_states}};
  return j;
}

inline EvalReport report_from_json(const Json& j) {
  detail::check_schema(j, "report");
  return detail::guarded("report", [&] {
    EvalReport r;
    r.isomorphic = j.at("isomorphic").get<bool>();
    r.d = j.at("d").get<std::size_t>();
    r.recall = ratio_from_json(j.at("recall"));
    r.precision = ratio_from_json(j.at("precision"));
    r.accuracy = ratio_from_json(j.at("accuracy"));
    const auto& c = j.at("counts");
    r.truth_words = c.at("truth").get<Count>();
    r.induced_words = c.at("induced").get<Count>();
    r.common_words = c.at("intersection").get<Count>();
    r.union_words = c.at("union").get<Count>();
    r.truth_states = j.at("states").at("truth").get<std::size_t>();
    r.induced_states = j.at("states").at("induced").get<std::size_t>();
    return r;
  });
}

/// Full record of one sweep run, enough to resume without recomputing.
inline Json to_json(const RunRecord& r) {
  Json j;
  j["schema"] = kSchema;
  j["cell"] = {{"t", r.cell.t}, {"n", r.cell.n}, {"p_bar", r.cell.p_bar}, {"train_len", r.cell.train_len}};
  j["run"] = r.run;
  j["ok"] = r.ok;
  j["error"] = r.error;
  j["epochs"] = r.epochs;
  j["seconds"] = r.seconds;
  if (r.ok) {
    j["report"] = to_json(r.report);
    j["truth"] = to_json(r.truth);
    j["induced"] = to_json(r.induced);
  }
  return j;
}

inline RunRecord run_record_from_json(const Json& j) {
  detail::check_schema(j, "run record");
  return detail::guarded("run record", [&] {
    RunRecord r;
    const auto& c = j.at("cell");
    r.cell = {c.at("t").get<std::size_t>(), c.at("n").get<std::size_t>(), c.at("p_bar").get<double>(),
              c.at("train_len").get<std::size_t>()};
    r.run = j.at("run").get<std::size_t>();
    r.ok = j.at("ok").get<bool>();
    r.error = j.at("error").get<std::string>();
    r.epochs = j.at("epochs").get<std::size_t>();
    r.seconds = j.at("seconds").get<double>();
    if (r.ok) {
      r.report = report_from_json(j.at("report"));
      r.truth = grammar_from_json(j.at("truth"));
      r.induced = grammar_from_json(j.at("induced"));
    }
    return r;
  });
}

inline std::string format_p_bar(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

/// One row per (cell, run). With timing off the seconds column is 0 so that
/// identical seeds give identical bytes.
inline std::string summary_csv(const ExperimentResult& res, bool timing = true) {
  std::ostringstream os;
  os << "t,n,p_bar,train_len,run,isomorphic,recall,precision,accuracy,epochs,seconds,status\n";
  for (const auto& r : res.runs) {
    os << r.cell.t << "," << r.cell.n << "," << format_p_bar(r.cell.p_bar) << "," << r.cell.train_len << "," << r.run
       << ",";
    if (r.ok) {
      os << (r.report.isomorphic ? 1 : 0) << "," << std::setprecision(6) << std::fixed << r.report.recall.value()
         << "," << r.report.precision.value() << "," << r.report.accuracy.value() << std::defaultfloat;
    } else {
      os << ",,,";
    }
    os << "," << r.epochs << ",";
    if (timing)
      os << std::setprecision(3) << std::fixed << r.seconds << std::defaultfloat;
    else
      os << 0;
    os << "," << (r.ok ? "ok" : "failed") << "\n";
  }
  return os.str();
}

// ---- experiment grid -----------------------------------------------------

inline Json to_json(const DatasetCaps& c) {
  const auto put = [](const std::optional<Count>& v) { return v ? Json(*v) : Json(nullptr); };
  return {{"positive", put(c.positive)},
          {"non_accepting_path", put(c.non_accepting_path)},
          {"invalid_postfix", put(c.invalid_postfix)},
          {"invalid_infix", put(c.invalid_infix)}};
}

/// Absent keys keep their defaults; null means unlimited.
inline DatasetCaps caps_from_json(const Json& j, DatasetCaps c = {}) {
  return detail::guarded("dataset caps", [&] {
    const auto get = [&](const char* key, std::optional<Count>& slot) {
      if (!j.contains(key)) return;
      slot = j.at(key).is_null() ? std::nullopt : std::optional<Count>(j.at(key).get<Count>());
    };
    get("positive", c.positive);
    get("non_accepting_path", c.non_accepting_path);
    get("invalid_postfix", c.invalid_postfix);
    get("invalid_infix", c.invalid_infix);
    return c;
  });
}

inline Json to_json(const ExperimentGrid& g) {
  Json j;
  j["schema"] = kSchema;
  j["t"] = g.t;
  j["n"] = g.n;
  j["p_bar"] = g.p_bar;
  j["train_len"] = g.train_len;
  j["depth"] = g.depth;
  j["runs"] = g.runs;
  j["p_terminal"] = g.p_terminal;
  j["caps"] = to_json(g.caps);
  j["grammar_per_run"] = g.grammar_per_run;
  return j;
}

/// Absent keys keep the desk-grid defaults.
inline ExperimentGrid grid_from_json(const Json& j) {
  detail::check_schema(j, "grid");
  return detail::guarded("grid", [&] {
    ExperimentGrid g;
    if (j.contains("t")) g.t = j.at("t").get<std::vector<std::size_t>>();
    if (j.contains("n")) g.n = j.at("n").get<std::vector<std::size_t>>();
    if (j.contains("p_bar")) g.p_bar = j.at("p_bar").get<std::vector<double>>();
    if (j.contains("train_len")) g.train_len = j.at("train_len").get<std::vector<std::size_t>>();
    if (j.contains("depth")) g.depth = j.at("depth").get<std::size_t>();
    if (j.contains("runs")) g.runs = j.at("runs").get<std::size_t>();
    if (j.contains("p_terminal")) g.p_terminal = j.at("p_terminal").get<double>();
    if (j.contains("caps")) g.caps = caps_from_json(j.at("caps"));
    if (j.contains("grammar_per_run")) g.grammar_per_run = j.at("grammar_per_run").get<bool>();
    for (auto L : g.train_len)
      if (L < 1 || L > g.depth) throw DataError("grid: train_len must lie in [1, depth]");
    return g;
  });
}

// ---- parse forest --------------------------------------------------------

inline Json to_json(const ParseNode& node, const SymbolNames& names) {
  Json j;
  j["symbol"] = node.terminal ? names.terminals.at(node.symbol) : names.nonterminals.at(node.symbol);
  j["terminal"] = node.terminal;
  j["span"] = {node.first, node.last};
  if (!node.children.empty()) {
    j["children"] = Json::array();
    for (const auto& c : node.children) j["children"].push_back(to_json(c, names));
  }
  return j;
}

/// All roots of the final position with their expanded trees.
inline Json forest_to_json(const ParseForest& f, const SymbolNames& names, Symbol start, std::size_t limit = 64) {
  Json j;
  j["schema"] = kSchema;
  j["word"] = render_word(names.terminals, f.word);
  j["start"] = names.nonterminals.at(start);
  Json roots = Json::array();
  if (!f.word.empty()) {
    const std::size_t last = f.word.size() - 1;
    for (const auto& r : f.positions[last]) {
      Json rj;
      rj["root"] = names.nonterminals.at(r.nonterminal);
      rj["tree_count"] = count_trees(f, last, r.nonterminal);
      rj["trees"] = Json::array();
      for (const auto& tree : expand_trees(f, last, r.nonterminal, limit)) rj["trees"].push_back(to_json(tree, names));
      roots.push_back(std::move(rj));
    }
  }
  j["roots"] = std::move(roots);
  j["accepted"] = f.find(f.word.size() - 1, start) != nullptr;
  return j;
}

inline std::string tree_to_text(const ParseNode& node, const SymbolNames& names) {
  if (node.terminal) return names.terminals.at(node.symbol);
  std::string s = "(" + names.nonterminals.at(node.symbol);
  for (const auto& c : node.children) s += " " + tree_to_text(c, names);
  return s + ")";
}

}  // namespace rgi::io
