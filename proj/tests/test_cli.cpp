#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "rgi/rgi.hpp"

using namespace rgi;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rgi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    io::write_file(path("worked.json"), io::dump(io::to_json(example_grammar())));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(RGI_CLI) + " " + args + " >" + path("stdout") + " 2>" + path("stderr");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out() const { return io::read_file(path("stdout")); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("gen-grammar -n 2 -p 2 -o " + path("g.json")), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("gen-data -g " + path("missing.json") + " -o " + path("d.jsonl")), 2);
  io::write_file(path("bad.json"), "{\"schema\": 1}");
  EXPECT_EQ(run("gen-data -g " + path("bad.json") + " -o " + path("d.jsonl")), 3);
  EXPECT_EQ(run("train --data " + path("worked.json") + " -o " + path("c.json") + " --lr -1"), 2);
  EXPECT_EQ(run("eval --truth " + path("worked.json")), 2);
}

TEST_F(Cli, PipelineIsByteDeterministic) {
  const auto pipeline = [&](const std::string& tag) {
    EXPECT_EQ(run("gen-grammar -t 3 -n 2 -p 2 --seed 4 -o " + path(tag + "g.json")), 0);
    EXPECT_EQ(run("gen-data -g " + path(tag + "g.json") + " -d 5 --seed 4 -o " + path(tag + "d.jsonl")), 0);
    EXPECT_EQ(run("train --data " + path(tag + "d.jsonl") + " --epochs 3 --seed 4 -o " + path(tag + "c.json") +
                  " --history " + path(tag + "h.csv")),
              0);
    EXPECT_EQ(run("extract -c " + path(tag + "c.json") + " -o " + path(tag + "e.json")), 0);
    EXPECT_EQ(run("eval --truth " + path(tag + "g.json") + " --induced " + path(tag + "e.json") + " -d 5 -o " +
                  path(tag + "r.json")),
              0);
  };
  pipeline("a");
  pipeline("b");
  for (const auto* f : {"g.json", "g.dfa.json", "d.jsonl", "c.json", "h.csv", "e.json", "r.json"})
    EXPECT_EQ(io::read_file(path(std::string("a") + f)), io::read_file(path(std::string("b") + f))) << f;
}

TEST_F(Cli, PlantExtractParseEval) {
  ASSERT_EQ(run("plant -g " + path("worked.json") + " -o " + path("c.json")), 0);
  ASSERT_EQ(run("extract -c " + path("c.json") + " -o " + path("e.json")), 0);
  const auto e = io::load_grammar(path("e.json"));
  EXPECT_EQ(e.productions, example_grammar().productions);
  EXPECT_EQ(e.nonterminals[e.start], "C");

  ASSERT_EQ(run("--format json parse -c " + path("c.json") + " -w abb"), 0);
  const auto forest = io::parse_json(out(), "parse");
  ASSERT_EQ(forest.at("roots").size(), 1u);
  EXPECT_EQ(forest.at("roots")[0].at("root"), "A");
  EXPECT_FALSE(forest.at("accepted").get<bool>());
  EXPECT_EQ(run("parse -c " + path("c.json") + " -w abz"), 3);

  ASSERT_EQ(run("--format json eval --truth " + path("worked.json") + " --checkpoint " + path("c.json")), 0);
  EXPECT_TRUE(io::parse_json(out(), "eval").at("isomorphic").get<bool>());
}

TEST_F(Cli, SweepResumesAndIgnoresJobs) {
  io::write_file(path("grid.json"),
                 R"({"schema": 1, "t": [3], "n": [2], "p_bar": [2], "train_len": [4, 5], "depth": 5, "runs": 2})");
  const std::string common = "sweep --grid " + path("grid.json") + " --epochs 3 --no-timing --seed 2 --out ";
  ASSERT_EQ(run(common + path("s1") + " --jobs 1"), 0);
  ASSERT_EQ(run(common + path("s2") + " --jobs 2"), 0);
  const auto csv = io::read_file(path("s1/summary.csv"));
  EXPECT_EQ(csv, io::read_file(path("s2/summary.csv")));
  EXPECT_EQ(io::read_file(path("s1/summary.json")), io::read_file(path("s2/summary.json")));

  // delete one run; only that run is recomputed
  const auto runs = path("s1/runs");
  std::size_t files = 0;
  for (const auto& f : fs::directory_iterator(runs)) files += f.is_regular_file();
  EXPECT_EQ(files, 4u);
  const auto victim = runs + "/t3_n2_p2_L5_r1.json";
  ASSERT_TRUE(fs::exists(victim));
  const auto kept = runs + "/t3_n2_p2_L4_r0.json";
  const auto stamp = fs::last_write_time(kept);
  const auto before = io::read_file(victim);
  fs::remove(victim);
  ASSERT_EQ(run(common + path("s1")), 0);
  EXPECT_EQ(io::read_file(victim), before);
  EXPECT_EQ(fs::last_write_time(kept), stamp);
  EXPECT_EQ(io::read_file(path("s1/summary.csv")), csv);

  // a different grid in the same directory is refused
  io::write_file(path("grid2.json"), R"({"schema": 1, "t": [3], "n": [3], "depth": 5, "train_len": [5]})");
  EXPECT_EQ(run("sweep --grid " + path("grid2.json") + " --epochs 3 --out " + path("s1")), 2);
}
