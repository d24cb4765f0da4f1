#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "pivotal_cli.hpp"
#include "test_util.hpp"

using namespace pivotal;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation run(std::vector<std::string> args) {
  args.insert(args.begin(), "pivotal");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST(Cli, MetricsOnPath) {
  const Invocation r = run({"metrics", "--graph", "example3b", "--absorbing", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][1], "H");
  EXPECT_EQ(rows[1][1], "4");
  EXPECT_EQ(rows[2][1], "3");
}

TEST(Cli, AvoidInfeasibleIsInf) {
  const Invocation r = run({"avoid", "--graph", "example3b", "--source", "1", "--target", "3", "--avoid",
                     "2", "--output", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(json_to_double(j["H"]), kInfinity);
}

TEST(Cli, TransitViaNode) {
  const Invocation r = run({"avoid", "--graph", "example1", "--source", "1", "--target", "4", "--via", "5",
                     "--output", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("transit"), std::string::npos);
}

TEST(Cli, PivotalityDotBlackForNonPivotal) {
  const Invocation r = run({"pivotality", "--graph", "example3b", "--source", "1", "--target", "2",
                            "--output", "dot"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("graph", 0), 0u);
  std::smatch m;
  EXPECT_TRUE(std::regex_search(r.out, m, std::regex("\"3\" \\[[^\\]]*fillcolor=\"#000000\"")));
  EXPECT_TRUE(std::regex_search(r.out, m, std::regex("\"3\" \\[[^\\]]*ATH=-inf")));
}

TEST(Cli, FatTreeDotHasEveryNode) {
  const Invocation r = run({"pivotality", "--graph", "fat-tree:6", "--source", "h0_0_0", "--target",
                     "h5_2_2", "--metrics", "ath", "--output", "dot"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::regex node_line("^  \"[^\"]+\" \\[", std::regex::multiline);
  const auto count = std::distance(std::sregex_iterator(r.out.begin(), r.out.end(), node_line),
                                   std::sregex_iterator());
  EXPECT_EQ(count, 99);
}

TEST(Cli, FormatsAgree) {
  const std::vector<std::string> base{"pivotality", "--graph", "random:9,0.4,3,undirected",
                                      "--source", "0", "--target", "8"};
  auto with = [&](const std::string& fmt) {
    auto args = base;
    args.insert(args.end(), {"--output", fmt});
    return run(args);
  };
  const Invocation csv = with("csv"), json = with("json"), dot = with("dot");
  ASSERT_EQ(csv.code, 0) << csv.err;
  const auto rows = csv_rows(csv.out);
  const auto j = nlohmann::json::parse(json.out);
  ASSERT_EQ(rows.size(), j["nodes"].size() + 1);
  const auto& header = rows[0];
  const auto ath_col = std::find(header.begin(), header.end(), "ATH") - header.begin();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& node = j["nodes"][i - 1];
    EXPECT_EQ(rows[i][1], node["node"].get<std::string>());
    const double from_json = json_to_double(node["scores"]["ATH"]);
    const std::string cell = rows[i][static_cast<std::size_t>(ath_col)];
    if (std::isinf(from_json)) {
      EXPECT_EQ(cell, "-inf");
    } else {
      EXPECT_NEAR(std::stod(cell), from_json, 1e-5 * std::max(1.0, std::abs(from_json)));
    }
    EXPECT_EQ(rows[i].back(), node["color"].get<std::string>());
    EXPECT_NE(dot.out.find("fillcolor=\"" + node["color"].get<std::string>() + "\""),
              std::string::npos);
  }
}

TEST(Cli, ReadsFilesAndFormats) {
  const auto csv = temp_file("pivotal_cli_path.csv", "a,b,1\nb,c,1\n");
  Invocation r = run({"metrics", "--graph", csv.string(), "--absorbing", "c"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv_rows(r.out)[1][1], "4");
  const auto json = temp_file(
      "pivotal_cli_path.json",
      R"({"directed":false,"nodes":["a","b","c"],"edges":[{"src":"a","dst":"b","affinity":1},{"src":"b","dst":"c","affinity":1}]})");
  r = run({"metrics", "--graph", json.string(), "--absorbing", "c"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv_rows(r.out)[1][1], "4");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"metrics", "--graph", "example1", "--absorbing", "99"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"metrics", "--graph", "example1", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  const auto bad = temp_file("pivotal_cli_bad.csv", "a,b,1\nb,c,notanumber\n");
  const Invocation r = run({"metrics", "--graph", bad.string(), "--absorbing", "c"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(run({"verify", "--graph", "example1", "--mc-samples", "2000"}).code, cli::kExitOk);
}

TEST(Cli, VerifyReportsRngAndSeed) {
  const Invocation r = run({"verify", "--graph", "example3b", "--mc-samples", "1000", "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("suite,graph,check,value,threshold,result,note"), std::string::npos);
  EXPECT_NE(r.out.find(std::string(kRngName)), std::string::npos);
  EXPECT_NE(r.out.find("seed 9"), std::string::npos);
  EXPECT_EQ(r.out.find(",FAIL,"), std::string::npos);
}

TEST(Cli, DeterministicOutputAndOutFile) {
  const std::vector<std::string> args{"verify", "--graph", "random:8,0.4,2", "--mc-samples", "3000"};
  const Invocation a = run(args), b = run(args);
  EXPECT_EQ(a.out, b.out);
  const auto path = std::filesystem::temp_directory_path() / "pivotal_cli_out.csv";
  auto with_out = args;
  with_out.insert(with_out.end(), {"--out", path.string()});
  const Invocation c = run(with_out);
  EXPECT_TRUE(c.out.empty());
  std::ifstream in(path, std::ios::binary);
  const std::string written((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(written, a.out);
}

TEST(Cli, IllConditionedSolveIsFlagged) {
  const auto leaky = temp_file("pivotal_cli_leaky.csv", "a,b,1\nb,a,1\nb,c,1e-14\nc,b,1\n");
  const Invocation csv = run({"metrics", "--graph", leaky.string(), "--directed", "--absorbing", "c"});
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(csv.out.rfind("# warning: ill-conditioned", 0), 0u) << csv.out;
  const Invocation json = run({"metrics", "--graph", leaky.string(), "--directed", "--absorbing",
                               "c", "--output", "json"});
  EXPECT_TRUE(nlohmann::json::parse(json.out).contains("warning"));

  const Invocation clean = run({"metrics", "--graph", "example3b", "--absorbing", "3", "--output",
                                "json"});
  const auto j = nlohmann::json::parse(clean.out);
  EXPECT_FALSE(j.contains("warning"));
  EXPECT_LT(j["condition_estimate"].get<double>(), 1e12);
}
