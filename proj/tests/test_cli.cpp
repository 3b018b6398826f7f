#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "roadsel/dataset_file.hpp"
#include "roadsel/eval.hpp"
#include "roadsel/io.hpp"
#include "roadsel/manifest.hpp"
#include "roadsel/nn/checkpoint.hpp"
#include "roadsel/nn/nn.hpp"

namespace roadsel::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(io::read_file(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("roadsel_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string generate(const std::string& name, int n, int seed) {
    const auto r = call({"generate", "--n", std::to_string(n), "--seed", std::to_string(seed), "--out", path(name)});
    EXPECT_EQ(r.code, 0) << r.err;
    return path(name);
  }

  fs::path dir_;
};

TEST_F(Cli, GenerateIsByteStableAndSummaryMatchesFile) {
  const auto a = generate("a.json", 100, 4);
  const auto r = call({"generate", "--n", "100", "--seed", "4", "--out", path("b.json")});
  EXPECT_EQ(io::read_file(a), io::read_file(path("b.json")));
  const auto ds = data::load_dataset(a);
  ASSERT_EQ(ds.size(), 100u);
  const std::string expect = "generated 100 roads: " + std::to_string(ds.count(Label::kPass)) + " PASS, " +
                             std::to_string(ds.count(Label::kFail)) + " FAIL\n";
  EXPECT_EQ(r.out, expect);
  EXPECT_TRUE(fs::exists(a + ".manifest.json"));
  const auto m = load_manifest(a + ".manifest.json");
  EXPECT_EQ(m.command, "generate");
  EXPECT_EQ(m.seeds["master"], 4);
}

TEST_F(Cli, ValidateReportsInvalidRoads) {
  const auto good = generate("good.json", 20, 1);
  auto r = call({"validate", "--in", good});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("20 roads, 20 valid, 0 invalid"), std::string::npos);

  data::Dataset ds = data::load_dataset(good);
  ds.entries.push_back({geometry::Road("crossing", {{0, 0}, {2, 0}, {2, 2}, {1, 2}, {1, -1}}), json::object()});
  data::save_dataset(path("bad.json"), ds);
  r = call({"validate", "--in", path("bad.json")});
  EXPECT_EQ(r.code, kData);
  EXPECT_NE(r.out.find("crossing: INVALID self_intersection"), std::string::npos) << r.out;
  std::size_t invalid = 0;
  for (const auto& e : ds.entries) invalid += !geometry::validate(e.road).valid;
  EXPECT_NE(r.out.find(std::to_string(invalid) + " invalid"), std::string::npos);
}

TEST_F(Cli, TrainOverfitsAndCheckpointRoundTrips) {
  const auto d = generate("d.json", 64, 2);
  const auto r = call({"train", "--in", d, "--model-out", path("m.json"), "--hidden", "16", "--epochs", "300",
                       "--batch", "16", "--lr", "0.01", "--decimate", "4", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("training accuracy 1\n"), std::string::npos) << r.out;
  EXPECT_EQ(csv(path("m.json.history.csv")).size(), 300u);

  auto ds = data::load_dataset(d);
  for (auto& e : ds.entries) e.road = geometry::decimate(e.road, 4);
  data::save_dataset(path("dec.json"), ds);
  ASSERT_EQ(call({"predict", "--model", path("m.json"), "--in", path("dec.json"), "--out", path("p.csv")}).code, 0);
  const auto model = nn::load_checkpoint(path("m.json"));
  const auto rows = csv(path("p.csv"));
  ASSERT_EQ(rows.size(), ds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = std::stod(rows[i][1]);
    EXPECT_NEAR(p, nn::predict(model, features::extract_sequence(ds.entries[i].road)).probability, 1e-12);
    EXPECT_EQ(rows[i][2], std::string(to_string(*ds.entries[i].road.label())));
  }
}

TEST_F(Cli, TrainRejectsUnlabeledEntries) {
  auto ds = data::load_dataset(generate("d.json", 10, 1));
  ds.entries[2].road.set_label(std::nullopt);
  ds.entries[5].road.set_label(std::nullopt);
  data::save_dataset(path("u.json"), ds);
  const auto r = call({"train", "--in", path("u.json"), "--model-out", path("m.json"), "--model", "tree"});
  EXPECT_EQ(r.code, kData);
  EXPECT_NE(r.err.find("road_00002, road_00005"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("m.json")));
}

TEST_F(Cli, CrossvalFilesAggregateAndAreDeterministic) {
  const auto d = generate("d.json", 120, 5);
  EXPECT_EQ(call({"crossval", "--in", d, "--setup", "3", "--out-dir", path("x")}).code, kUsage);
  for (const char* out : {"cv1", "cv2"}) {
    const auto r = call({"crossval", "--in", d, "--setup", "1", "--model", "logreg", "--k", "4", "--seed", "8",
                         "--out-dir", path(out)});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"result.json", "folds.csv", "metrics.csv"}) {
    EXPECT_EQ(io::read_file(path(std::string("cv1/") + f)), io::read_file(path(std::string("cv2/") + f))) << f;
  }
  const auto rows = csv(path("cv1/folds.csv"));
  ASSERT_EQ(rows.size(), 5u);
  double sum = 0;
  for (int f = 0; f < 4; ++f) sum += std::stod(rows[f][5]);
  EXPECT_DOUBLE_EQ(std::stod(rows[4][5]), sum / 4);
  const auto res = eval::setup_result_from_json(json::parse(io::read_file(path("cv1/result.json"))));
  EXPECT_EQ(res.report.values.accuracy, std::stod(rows[4][5]));
}

TEST_F(Cli, SelectOrdersByFailureLikelihood) {
  const auto train = generate("train.json", 400, 6);
  const auto pool = generate("pool.json", 400, 7);
  ASSERT_EQ(call({"train", "--in", train, "--model-out", path("f.json"), "--model", "forest", "--seed", "1"}).code, 0);
  ASSERT_EQ(call({"select", "--model", path("f.json"), "--in", pool, "--out", path("all.csv"), "--budget", "400"}).code, 0);
  const auto rows = csv(path("all.csv"));
  ASSERT_EQ(rows.size(), 400u);
  std::vector<double> p;
  for (const auto& r : rows) p.push_back(std::stod(r[2]));
  EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));

  const auto ds = data::load_dataset(pool);
  std::map<std::string, Label> label;
  for (const auto& e : ds.entries) label[e.road.id()] = *e.road.label();
  std::size_t top_fail = 0;
  for (int i = 0; i < 40; ++i) top_fail += label[rows[i][1]] == Label::kFail;
  const double base = static_cast<double>(ds.count(Label::kFail)) / 400.0;
  EXPECT_GT(top_fail / 40.0, base);

  ASSERT_EQ(call({"select", "--model", path("f.json"), "--in", pool, "--out", path("t.csv"), "--threshold", "0.3"}).code, 0);
  const auto t = csv(path("t.csv"));
  EXPECT_EQ(t.size(), static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](double v) { return v <= 0.3; })));
  EXPECT_EQ(call({"select", "--model", path("f.json"), "--in", pool, "--out", path("z.csv")}).code, kUsage);
  EXPECT_EQ(call({"select", "--model", path("f.json"), "--in", pool, "--out", path("z.csv"), "--budget", "401"}).code,
            kUsage);
}

TEST_F(Cli, PredictFollowsThresholdAndNeedsModel) {
  const auto d = generate("d.json", 80, 9);
  ASSERT_EQ(call({"train", "--in", d, "--model-out", path("g.json"), "--model", "gnb"}).code, 0);
  ASSERT_EQ(call({"predict", "--model", path("g.json"), "--in", d, "--out", path("p.csv")}).code, 0);
  for (const auto& r : csv(path("p.csv"))) EXPECT_EQ(r[2], std::stod(r[1]) > 0.5 ? "PASS" : "FAIL");
  const auto r = call({"predict", "--model", path("none.json"), "--in", d, "--out", path("q.csv")});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("none.json"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("q.csv")));
}

TEST_F(Cli, ComparePublishedAndIdentical) {
  auto r = call({"compare", "--its-paper", "1", "--scissor-paper", "1", "--label", "A", "--out", path("a.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(io::read_file(path("a.csv")), "label,its4sdc_setup,scissor_setup,accuracy,precision,recall,f1\nA,1,1,0.26,0.23,0.13,0.17\n");
  r = call({"compare", "--its-paper", "2", "--scissor-paper", "2", "--label", "D", "--out", path("d.csv")});
  EXPECT_EQ(io::read_file(path("d.csv")), "label,its4sdc_setup,scissor_setup,accuracy,precision,recall,f1\nD,2,2,0.02,0.03,-0.05,0.00\n");

  const auto d = generate("d.json", 60, 3);
  ASSERT_EQ(call({"crossval", "--in", d, "--model", "tree", "--k", "3", "--out-dir", path("cv")}).code, 0);
  r = call({"compare", "--its", path("cv/result.json"), "--scissor", path("cv/result.json"), "--out", path("z.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv(path("z.csv"))[0], (std::vector<std::string>{"X", "1", "1", "0.00", "0.00", "0.00", "0.00"}));
  EXPECT_EQ(call({"compare", "--its-paper", "1"}).code, kUsage);
  EXPECT_EQ(call({"compare", "--published", "--its-paper", "1"}).code, kUsage);
}

TEST_F(Cli, ReplayReproducesOutputs) {
  const auto d = generate("d.json", 50, 12);
  ASSERT_EQ(call({"crossval", "--in", d, "--model", "forest", "--k", "3", "--seed", "2", "--trees", "5", "--out-dir",
                  path("cv")}).code,
            0);
  const auto before = io::read_file(path("cv/result.json"));
  fs::remove(path("cv/result.json"));
  const auto r = call({"replay", "--manifest", path("cv/manifest.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(io::read_file(path("cv/result.json")), before);

  const auto gen_bytes = io::read_file(d);
  fs::remove(d);
  ASSERT_EQ(call({"replay", "--manifest", d + ".manifest.json"}).code, 0);
  EXPECT_EQ(io::read_file(d), gen_bytes);
}

TEST_F(Cli, MalformedInputLeavesNoOutput) {
  io::write_file_atomic(path("bad.json"), "{\"format_version\": 1, \"entries\": [{\"id\": \"q\", \"points\": [[0,0]]}]}\n");
  const auto r = call({"train", "--in", path("bad.json"), "--model-out", path("m.json"), "--model", "tree"});
  EXPECT_EQ(r.code, kData);
  EXPECT_NE(r.err.find("'q'"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("m.json")));
  EXPECT_FALSE(fs::exists(path("m.json.manifest.json")));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(call({}).code, kUsage);
  EXPECT_EQ(call({"frobnicate"}).code, kUsage);
  EXPECT_EQ(call({"generate"}).code, kUsage);
  const auto d = generate("d.json", 10, 1);
  EXPECT_EQ(call({"train", "--in", d, "--model-out", path("m.json"), "--model", "svm"}).code, kUsage);
  EXPECT_EQ(call({"--threads", "-2", "validate", "--in", d}).code, kUsage);
  EXPECT_EQ(call({"--help"}).code, kOk);
}

TEST_F(Cli, ThreadsFlagDoesNotChangeOutputs) {
  ASSERT_EQ(call({"--threads", "1", "generate", "--n", "60", "--seed", "3", "--out", path("a.json")}).code, 0);
  ASSERT_EQ(call({"--threads", "3", "generate", "--n", "60", "--seed", "3", "--out", path("b.json")}).code, 0);
  EXPECT_EQ(io::read_file(path("a.json")), io::read_file(path("b.json")));
}

}  // namespace
}  // namespace roadsel::cli
