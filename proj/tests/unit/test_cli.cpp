#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("freespec_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Exit status of the CLI run with the given arguments; stdout and stderr
  /// go to files in the scratch directory.
  int run(const std::string& args) {
    const std::string cmd = std::string("\"") + FREESPEC_CLI + "\" " + args + " >\"" + path("stdout").string() +
                            "\" 2>\"" + path("stderr").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }
  std::string q(const std::string& name) const { return "\"" + path(name).string() + "\""; }

  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenIsDeterministic) {
  ASSERT_EQ(run("gen --g 2 --d 3 --seed 7 -o " + q("a.json")), 0);
  ASSERT_EQ(run("gen --g 2 --d 3 --seed 7 -o " + q("b.json")), 0);
  EXPECT_EQ(slurp("a.json"), slurp("b.json"));
  const Json j = Json::parse(slurp("a.json"));
  EXPECT_EQ(j.at("g"), 2);
  EXPECT_EQ(j.at("d"), 3);
  EXPECT_EQ(j.at("irreducible"), true);
  EXPECT_EQ(j.at("bounded"), true);
}

TEST_F(Cli, GenMatchesGoldenPencil) {
  ASSERT_EQ(run("gen --g 2 --d 3 --seed 7 -o " + q("a.json")), 0);
  std::ifstream golden(FREESPEC_TEST_DATA "/pencil_g2_d3_seed7.json");
  EXPECT_EQ(Json::parse(slurp("a.json")).at("items"), Json::parse(golden).at("items"));
}

TEST_F(Cli, SeedFromEnvironment) {
  ASSERT_EQ(run("gen --g 2 --d 3 --seed 7 -o " + q("a.json")), 0);
  ::setenv("FREESPEC_SEED", "7", 1);
  const int code = run("gen --g 2 --d 3 -o " + q("b.json"));
  ::unsetenv("FREESPEC_SEED");
  ASSERT_EQ(code, 0);
  EXPECT_EQ(slurp("a.json"), slurp("b.json"));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("gen --g 2 --d 0"), 64);
  EXPECT_EQ(run("frobnicate"), 64);
  EXPECT_EQ(run("optimize"), 64);
}

TEST_F(Cli, OptimizeDisc) {
  write("l.json", R"({"kind":"rc","level":1,"coeffs":[[[1]],[[0]]]})");
  ASSERT_EQ(run("optimize --pencil disc --functional " + q("l.json") + " -o " + q("out.json")), 0);
  const Json j = Json::parse(slurp("out.json"));
  EXPECT_EQ(j.at("verdict"), "free_extreme");
  EXPECT_EQ(j.at("k"), 1);
  EXPECT_NEAR(j.at("value").get<double>(), -1.0, 1e-7);
  EXPECT_NEAR(j.at("x").at("items")[0][0][0].get<double>(), -1.0, 1e-7);
  EXPECT_NEAR(j.at("x").at("items")[1][0][0].get<double>(), 0.0, 1e-7);
}

TEST_F(Cli, OptimizeIsDeterministic) {
  ASSERT_EQ(run("--seed 3 optimize --pencil simplex --n 2 -o " + q("a.json")), 0);
  ASSERT_EQ(run("--seed 3 optimize --pencil simplex --n 2 -o " + q("b.json")), 0);
  EXPECT_EQ(slurp("a.json"), slurp("b.json"));
}

TEST_F(Cli, OptimizeRefusesUnboundedPencil) {
  write("p.json", R"({"g":1,"d":1,"items":[[[0.7]]]})");
  EXPECT_EQ(run("optimize --pencil " + q("p.json") + " --n 1"), 2);
}

TEST_F(Cli, DilateThenVerify) {
  write("x.json", R"({"g":2,"n":1,"items":[[[0.2]],[[-0.1]]]})");
  ASSERT_EQ(run("dilate --pencil disc --point " + q("x.json") + " -o " + q("cert.json")), 0);
  ASSERT_EQ(run("verify --pencil disc --certificate " + q("cert.json")), 0);
  Json cert = Json::parse(slurp("cert.json"));
  ASSERT_FALSE(cert.at("contractions").empty());
  cert["contractions"][0][0][0] = cert["contractions"][0][0][0].get<double>() * 2.0;
  write("bad.json", cert.dump());
  EXPECT_EQ(run("verify --pencil disc --certificate " + q("bad.json")), 3);
}

TEST_F(Cli, ClassifyPoint) {
  write("x.json", R"({"g":2,"n":1,"items":[[[0.6]],[[0.8]]]})");
  ASSERT_EQ(run("classify --pencil disc --point " + q("x.json") + " -o " + q("c.json")), 0);
  EXPECT_EQ(Json::parse(slurp("c.json")).at("verdict"), "free_extreme");
}

TEST_F(Cli, FitPublishedHistogram) {
  Json h;
  const int counts[] = {2, 1016, 5878, 2145, 34, 1};
  for (int k = 5; k <= 10; ++k) h[std::to_string(k)] = counts[k - 5] / 9076.0;
  write("h.json", Json{{"histogram", h}}.dump());
  ASSERT_EQ(run("fit --model gaussian --input " + q("h.json") + " -o " + q("f.json") + " --plot " + q("plot.csv")), 0);
  const Json j = Json::parse(slurp("f.json"));
  EXPECT_NEAR(j.at("mu").get<double>(), 7.13537, 1e-3);
  EXPECT_NEAR(j.at("sigma").get<double>(), 0.600874, 1e-3);
  EXPECT_TRUE(fs::exists(path("plot.csv")));
}

TEST_F(Cli, CampaignIsReproducible) {
  write("cfg.json", R"({"mode":"fixed_a","pencil":"disc","levels":[1,2],"runs":20,"seed":11})");
  ASSERT_EQ(run("campaign --config " + q("cfg.json") + " --out-dir " + q("one")), 0);
  ASSERT_EQ(run("campaign --config " + q("cfg.json") + " --out-dir " + q("two")), 0);
  const std::string csv = slurp("one/records.csv");
  EXPECT_EQ(csv, slurp("two/records.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 41);
  EXPECT_TRUE(fs::exists(path("one/stats.json")));
  EXPECT_TRUE(fs::exists(path("one/records.jsonl")));
}

TEST_F(Cli, CampaignResumesTruncatedOutput) {
  write("cfg.json", R"({"mode":"fixed_a","pencil":"disc","levels":[1,1],"runs":10,"seed":12})");
  ASSERT_EQ(run("campaign --config " + q("cfg.json") + " --out-dir " + q("full")), 0);
  const std::string full = slurp("full/records.csv");
  fs::create_directories(path("part"));
  write("part/records.csv", full.substr(0, full.size() / 2));
  ASSERT_EQ(run("campaign --resume --config " + q("cfg.json") + " --out-dir " + q("part")), 0);
  EXPECT_EQ(slurp("part/records.csv"), full);
}

TEST_F(Cli, CampaignRejectsMalformedConfig) {
  write("cfg.json", R"({"mode":"fixed_a","pencil":"disc","runz":3})");
  EXPECT_EQ(run("campaign --config " + q("cfg.json") + " --out-dir " + q("out")), 64);
  write("broken.json", "{not json");
  EXPECT_EQ(run("campaign --config " + q("broken.json") + " --out-dir " + q("out")), 64);
}
