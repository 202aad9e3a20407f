#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "manifest.hpp"
#include "swarmtsc/dataset.hpp"
#include "swarmtsc/trajectory_io.hpp"

using namespace swarmtsc;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("swarmtsc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
  }

  static nlohmann::json read_json(const std::string& p) { return nlohmann::json::parse(slurp(p)); }

  // Small trajectory set and dataset shared by several tests.
  void make_dataset() {
    ASSERT_EQ(run({"simulate", "--na", "4", "--nd", "4", "--instances", "12", "--seed", "3", "--out", path("t.swrm"),
                   "-q"}),
              0)
        << err_.str();
    ASSERT_EQ(run({"build-dataset", "--in", path("t.swrm"), "--window", "20", "--noise-factor", "5", "--seed", "1",
                   "--out", path("d.swrm"), "-q"}),
              0)
        << err_.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Cli, SimulateWritesContainerAndManifest) {
  ASSERT_EQ(run({"simulate", "--tactic", "auction+", "--instances", "4", "--seed", "7", "--out", path("a.swrm")}), 0)
      << err_.str();
  const auto batch = load_trajectories(path("a.swrm"));
  ASSERT_EQ(batch.trajectories.size(), 4u);
  for (const auto& t : batch.trajectories) EXPECT_EQ(t.tactic.id(), 3);

  const auto m = read_json(path("a.swrm.manifest.json"));
  EXPECT_EQ(m.at("kind"), "manifest");
  EXPECT_EQ(m.at("status"), "ok");
  EXPECT_EQ(m.at("exit_code"), 0);
  EXPECT_EQ(m.at("command"), "simulate");
  ASSERT_EQ(m.at("outputs").size(), 1u);
  EXPECT_EQ(m.at("outputs")[0].at("sha1"), cli::git_blob_sha1(path("a.swrm")));
  EXPECT_EQ(m.at("outputs")[0].at("bytes"), fs::file_size(path("a.swrm")));
}

TEST_F(Cli, BlobHashMatchesGitForKnownContent) {
  // Reference values from `git hash-object --stdin`.
  EXPECT_EQ(cli::git_blob_sha1_bytes("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(cli::git_blob_sha1_bytes(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_F(Cli, AllTacticsBalanced) {
  ASSERT_EQ(run({"simulate", "--na", "3", "--nd", "3", "--instances", "2", "--out", path("a.swrm"), "-q"}), 0);
  const auto batch = load_trajectories(path("a.swrm"));
  ASSERT_EQ(batch.trajectories.size(), 8u);
  std::array<int, 4> count{};
  for (const auto& t : batch.trajectories) ++count[static_cast<std::size_t>(t.tactic.id())];
  EXPECT_EQ(count, (std::array<int, 4>{2, 2, 2, 2}));
}

TEST_F(Cli, PipelineBuildTrainEvaluate) {
  make_dataset();
  const auto d = load_dataset(path("d.swrm"));
  EXPECT_EQ(d.window, 20u);
  EXPECT_EQ(d.noise_factor, 5.0);
  EXPECT_EQ(d.features.instances, 48u);

  ASSERT_EQ(run({"train", "--model", "fcn", "--output", "mh", "--data", path("d.swrm"), "--epochs", "2", "--out",
                 path("m.swrm"), "-q"}),
            0)
      << err_.str();
  const auto tm = read_json(path("m.swrm.manifest.json"));
  EXPECT_EQ(tm.at("inputs")[0].at("path"), path("d.swrm"));

  ASSERT_EQ(run({"evaluate", "--model-ckpt", path("m.swrm"), "--data", path("d.swrm"), "--split", "test", "--out",
                 path("e.json"), "-q"}),
            0)
      << err_.str();
  const auto e = read_json(path("e.json"));
  const auto& heads = e.at("metrics").at("heads");
  EXPECT_EQ(e.at("metrics").at("count"), d.splits.test.size());
  for (const char* h : {"tactic", "comms", "pronav"}) {
    const double acc = heads.at(h).at("accuracy");
    EXPECT_GE(acc, 0.0);
    EXPECT_LE(acc, 1.0);
  }
}

TEST_F(Cli, EvaluateRewindowsToCheckpointLength) {
  make_dataset();
  ASSERT_EQ(run({"train", "--model", "logreg", "--output", "mc", "--data", path("d.swrm"), "--window", "10",
                 "--epochs", "1", "--out", path("m.swrm"), "-q"}),
            0)
      << err_.str();
  EXPECT_EQ(run({"evaluate", "--model-ckpt", path("m.swrm"), "--data", path("d.swrm"), "--out", path("e.json"), "-q"}),
            0)
      << err_.str();
}

TEST_F(Cli, RerunsAreByteIdentical) {
  make_dataset();
  const auto first_data = slurp(path("d.swrm"));
  make_dataset();
  EXPECT_EQ(slurp(path("d.swrm")), first_data);
  for (const char* name : {"m1.swrm", "m2.swrm"}) {
    ASSERT_EQ(run({"train", "--model", "cnn", "--output", "mh", "--data", path("d.swrm"), "--epochs", "2", "--seed",
                   "4", "--out", path(name), "-q"}),
              0)
        << err_.str();
  }
  EXPECT_EQ(slurp(path("m1.swrm")), slurp(path("m2.swrm")));
  for (const char* name : {"s1.csv", "s2.csv"}) {
    ASSERT_EQ(run({"sweep", "--kind", "noise", "--in", path("t.swrm"), "--models", "logreg-mh", "--factors", "0", "20",
                   "--window", "10", "--epochs", "2", "--out", path(name), "-q"}),
              0)
        << err_.str();
  }
  EXPECT_EQ(slurp(path("s1.csv")), slurp(path("s2.csv")));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"simulate", "--bogus", "1", "--out", path("a.swrm")}), cli::kUsage);
  EXPECT_TRUE(fs::exists(path("a.swrm.manifest.json")));
  EXPECT_EQ(read_json(path("a.swrm.manifest.json")).at("status"), "error");
  EXPECT_EQ(run({}), cli::kUsage);
  EXPECT_EQ(run({"simulate", "--tactic", "zigzag", "--out", path("b.swrm")}), cli::kUsage);
  EXPECT_EQ(run({"build-dataset", "--in", path("x"), "--window", "abc", "--out", path("c.swrm")}), cli::kUsage);
  EXPECT_EQ(run({"simulate", "--instances", "1", "--na", "0", "--out", path("d.swrm")}), cli::kUsage);
}

TEST_F(Cli, DataErrorsExitThree) {
  EXPECT_EQ(run({"build-dataset", "--in", path("missing.swrm"), "--out", path("d.swrm")}), cli::kDataError);
  const auto m = read_json(path("d.swrm.manifest.json"));
  EXPECT_EQ(m.at("status"), "error");
  EXPECT_EQ(m.at("exit_code"), cli::kDataError);
  EXPECT_NE(m.at("error").get<std::string>().find("missing.swrm"), std::string::npos);

  {
    std::ofstream f(path("bad.swrm"), std::ios::binary);
    f.write("SWRM\x09\x00", 6);
  }
  EXPECT_EQ(run({"build-dataset", "--in", path("bad.swrm"), "--out", path("d.swrm")}), cli::kDataError);
  EXPECT_NE(err_.str().find("version"), std::string::npos);

  make_dataset();
  // A dataset is not a trajectory container.
  EXPECT_EQ(run({"build-dataset", "--in", path("d.swrm"), "--out", path("e.swrm")}), cli::kDataError);
}

TEST_F(Cli, DivergenceExitsFour) {
  make_dataset();
  EXPECT_EQ(run({"train", "--model", "fc", "--data", path("d.swrm"), "--lr", "1e30", "--epochs", "5", "--out",
                 path("m.swrm"), "-q"}),
            cli::kDiverged);
  EXPECT_FALSE(fs::exists(path("m.swrm")));
  EXPECT_EQ(read_json(path("m.swrm.manifest.json")).at("exit_code"), cli::kDiverged);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  {
    std::ofstream f(path("run.json"));
    f << R"({"simulate": {"tactic": "greedy", "instances": 3, "seed": 11, "na": 3, "nd": 3}})";
  }
  ASSERT_EQ(run({"--config", path("run.json"), "simulate", "--instances", "2", "--out", path("a.swrm"), "-q"}), 0)
      << err_.str();
  const auto batch = load_trajectories(path("a.swrm"));
  ASSERT_EQ(batch.trajectories.size(), 2u);  // flag beats file
  EXPECT_EQ(batch.trajectories[0].tactic.id(), 0);
  EXPECT_EQ(batch.trajectories[0].n_attackers, 3u);

  const auto m = read_json(path("a.swrm.manifest.json"));
  EXPECT_EQ(m.at("config").at("simulate").at("seed"), "11");
  bool config_listed = false;
  for (const auto& in : m.at("inputs")) config_listed |= in.at("path") == path("run.json");
  EXPECT_TRUE(config_listed);
}

TEST_F(Cli, ManifestReplaysTheRun) {
  ASSERT_EQ(run({"simulate", "--tactic", "auction", "--na", "3", "--nd", "3", "--instances", "2", "--seed", "5",
                 "--out", path("a.swrm"), "-q"}),
            0);
  ASSERT_EQ(run({"--config", path("a.swrm.manifest.json"), "simulate", "--out", path("b.swrm"), "-q"}), 0)
      << err_.str();
  EXPECT_EQ(slurp(path("a.swrm")), slurp(path("b.swrm")));
  EXPECT_EQ(read_json(path("a.swrm.manifest.json")).at("outputs")[0].at("sha1"),
            read_json(path("b.swrm.manifest.json")).at("outputs")[0].at("sha1"));
}

TEST_F(Cli, ExplicitManifestPath) {
  ASSERT_EQ(run({"--manifest", path("custom.json"), "simulate", "--na", "2", "--nd", "2", "--out", path("a.swrm"),
                 "-q"}),
            0);
  EXPECT_TRUE(fs::exists(path("custom.json")));
  EXPECT_FALSE(fs::exists(path("a.swrm.manifest.json")));
}

TEST_F(Cli, CompareTacticsAndPca) {
  ASSERT_EQ(run({"compare-tactics", "--seed", "7", "--na", "3", "--nd", "3", "--out", path("c.csv"), "-q"}), 0);
  const auto csv = slurp(path("c.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "tactic,t,role,index,x,y,vx,vy,target,alive");
  for (const char* t : {"\ngreedy,", "\ngreedy+,", "\nauction,", "\nauction+,"}) EXPECT_NE(csv.find(t), std::string::npos);

  make_dataset();
  ASSERT_EQ(run({"pca", "--data", path("d.swrm"), "--k", "3", "--out", path("p.csv"), "-q"}), 0) << err_.str();
  const auto p = slurp(path("p.csv"));
  EXPECT_EQ(p.substr(0, p.find('\n')), "instance,t,tactic,pc1,pc2,pc3");
  EXPECT_EQ(run({"pca", "--data", path("d.swrm"), "--k", "4", "--out", path("q.csv")}), cli::kUsage);
}
