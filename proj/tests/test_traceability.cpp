#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "model/traceability.hpp"
#include "nn/rng.hpp"

using namespace wad::model;

namespace {

AttentionRecord make_record(int heads, int n, const std::vector<float>& weights,
                            std::vector<std::string> labels = {}) {
  AttentionRecord rec;
  rec.heads = heads;
  rec.n = n;
  rec.weights = weights;
  if (labels.empty())
    for (int i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
  rec.labels = std::move(labels);
  return rec;
}

AttentionRecord random_record(int heads, int n, wad::nn::Rng& rng) {
  std::vector<float> w(static_cast<std::size_t>(heads) * n * n);
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < n; ++i) {
      double sum = 0;
      std::vector<double> row(n);
      for (int j = 0; j < n; ++j) sum += row[j] = rng.uniform() + 1e-3;
      for (int j = 0; j < n; ++j)
        w[(static_cast<std::size_t>(h) * n + i) * n + j] = float(row[j] / sum);
    }
  return make_record(heads, n, w);
}

}  // namespace

TEST_CASE("head average of a single head is the head itself") {
  auto rec = make_record(1, 2, {0.25f, 0.75f, 0.6f, 0.4f});
  auto avg = head_average(rec);
  CHECK(avg[0] == doctest::Approx(0.25));
  CHECK(avg[3] == doctest::Approx(0.4));
}

TEST_CASE("two permutation heads average to uniform") {
  auto rec = make_record(2, 2, {1, 0, 0, 1, 0, 1, 1, 0});
  auto avg = head_average(rec);
  for (double v : avg) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("head-averaged rows stay stochastic") {
  wad::nn::Rng rng(17);
  for (int iter = 0; iter < 50; ++iter) {
    auto rec = random_record(1 + int(rng.below(4)), 1 + int(rng.below(6)), rng);
    auto avg = head_average(rec);
    for (int i = 0; i < rec.n; ++i) {
      double s = 0;
      for (int j = 0; j < rec.n; ++j) s += avg[std::size_t(i) * rec.n + j];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("identity matrix degrees are column means") {
  auto deg = attention_degrees({1, 0, 0, 1}, 2);
  CHECK(deg[0] == doctest::Approx(0.5));
  CHECK(deg[1] == doctest::Approx(0.5));
}

TEST_CASE("published XSS degree vector sums to 1 with argmax at index 1") {
  std::vector<double> degrees{0.0496, 0.7991, 0.0535, 0.0513, 0.0465};
  double sum = 0;
  for (double d : degrees) sum += d;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  auto ranking = rank_descending(degrees);
  CHECK(ranking.front() == 1);
}

TEST_CASE("degrees sum to 1 against a brute-force column-mean oracle") {
  wad::nn::Rng rng(23);
  for (int iter = 0; iter < 200; ++iter) {
    int n = 1 + int(rng.below(8));
    auto rec = random_record(1, n, rng);
    auto avg = head_average(rec);
    auto deg = attention_degrees(avg, n);
    double sum = 0;
    for (int j = 0; j < n; ++j) {
      double col = 0;
      for (int i = 0; i < n; ++i) col += avg[std::size_t(i) * n + j];
      CHECK(deg[j] == doctest::Approx(col / n).epsilon(1e-12));
      sum += deg[j];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("head averaging and degree computation commute (linearity)") {
  wad::nn::Rng rng(29);
  auto rec = random_record(4, 5, rng);
  auto via_avg = attention_degrees(head_average(rec), 5);
  std::vector<double> via_heads(5, 0.0);
  for (int h = 0; h < 4; ++h) {
    AttentionRecord one = rec;
    one.heads = 1;
    one.weights.assign(rec.weights.begin() + std::size_t(h) * 25,
                       rec.weights.begin() + std::size_t(h + 1) * 25);
    auto deg = attention_degrees(head_average(one), 5);
    for (int j = 0; j < 5; ++j) via_heads[j] += deg[j] / 4.0;
  }
  for (int j = 0; j < 5; ++j) CHECK(via_avg[j] == doctest::Approx(via_heads[j]).epsilon(1e-6));
}

TEST_CASE("ranking is a stable descending permutation with index tie-break") {
  std::vector<double> degrees{0.05, 0.80, 0.05, 0.05, 0.05};
  auto r = rank_descending(degrees);
  CHECK(r == std::vector<int>{1, 0, 2, 3, 4});

  std::vector<double> equal(4, 0.25);
  CHECK(rank_descending(equal) == std::vector<int>{0, 1, 2, 3});

  std::vector<double> two{0.1, 0.4, 0.4, 0.1};
  CHECK(rank_descending(two) == std::vector<int>{1, 2, 0, 3});
}

TEST_CASE("permuting the record permutes the degrees identically") {
  wad::nn::Rng rng(31);
  auto rec = random_record(3, 4, rng);
  std::vector<int> perm{2, 0, 3, 1};
  AttentionRecord prec = rec;
  for (int h = 0; h < rec.heads; ++h)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        prec.weights[(std::size_t(h) * 4 + i) * 4 + j] = rec.weight(h, perm[i], perm[j]);
  auto base = attention_degrees(head_average(rec), 4);
  auto permuted = attention_degrees(head_average(prec), 4);
  for (int j = 0; j < 4; ++j) CHECK(permuted[j] == doctest::Approx(base[perm[j]]).epsilon(1e-9));
}

TEST_CASE("heatmap files: CSV with header row/column, JSON round-trip") {
  auto rec = make_record(1, 2, {0.7f, 0.3f, 0.2f, 0.8f}, {"id", "q"});
  auto report = build_trace_report(rec);
  auto dir = std::filesystem::temp_directory_path() / "wad_trace_test";
  std::filesystem::create_directories(dir);
  std::string csv_path = (dir / "heat.csv").string();
  std::string json_path = (dir / "heat.json").string();
  emit_heatmap(report, csv_path, json_path);

  std::ifstream csv(csv_path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);  // header + 2 rows
  CHECK(lines[0] == "param,id,q");
  CHECK(lines[1].rfind("id,", 0) == 0);

  std::ifstream js(json_path);
  nlohmann::json j;
  js >> j;
  auto degrees = j.at("degrees").get<std::vector<double>>();
  REQUIRE(degrees.size() == 2);
  for (int k = 0; k < 2; ++k) CHECK(degrees[k] == doctest::Approx(report.degrees[k]).epsilon(1e-9));
  CHECK(j.at("ranking").get<std::vector<int>>() == report.ranking);
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty record produces an annotated empty report") {
  AttentionRecord rec;
  auto report = build_trace_report(rec);
  CHECK(report.n == 0);
  CHECK(report.degrees.empty());
  auto j = nlohmann::json::parse(trace_report_json(report));
  CHECK(j.contains("note"));
}
