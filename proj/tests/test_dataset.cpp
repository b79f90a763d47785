#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "data/dataset.hpp"
#include "data/synthetic.hpp"
#include "error.hpp"

using namespace wad;
using namespace wad::data;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  auto dir = std::filesystem::temp_directory_path() / "wad_dataset_test";
  std::filesystem::create_directories(dir);
  auto path = dir / name;
  std::ofstream out(path, std::ios::binary);
  out << contents;
  return path;
}

}  // namespace

TEST_CASE("jsonl ingestion with raw request fields") {
  std::string contents =
      R"({"method":"GET","url":"/a","query":"x=1&y=2","label":0})"
      "\n"
      R"({"method":"POST","url":"/b","body":"k=%27v","headers":{"Content-Type":"application/x-www-form-urlencoded"},"label":1})"
      "\n"
      "not json at all\n"
      R"({"method":"GET","url":"/c","query":"q=1"})"
      "\n";
  auto path = temp_file("a.jsonl", contents);
  auto ds = load_dataset(path.string());
  CHECK(ds.size() == 2);           // unlabeled + malformed are skipped
  CHECK(ds.skipped == 2);
  CHECK(ds.records[0].req.url == "get /a");
  CHECK(ds.records[0].req.params.size() == 2);
  CHECK(ds.records[1].label == 1);
  CHECK(ds.records[1].req.params[0].value == "'v");
}

TEST_CASE("jsonl ingestion of already-parsed records round-trips") {
  Record rec;
  rec.req.url = "get /x";
  rec.req.params = {{"a", "1", http::ParamSource::Query}, {"b", "two", http::ParamSource::Body}};
  rec.label = 1;
  rec.gt_param = 1;
  auto path = temp_file("b.jsonl", record_to_json(rec) + "\n");
  auto ds = load_dataset(path.string());
  REQUIRE(ds.size() == 1);
  CHECK(ds.records[0].req.url == "get /x");
  CHECK(ds.records[0].req.params == rec.req.params);
  CHECK(ds.records[0].gt_param == 1);
}

TEST_CASE("raw corpus needs an external label") {
  std::string corpus = "GET /a?x=1 HTTP/1.1\n\n---\nGET /b HTTP/1.1\n\n";
  auto path = temp_file("c.txt", corpus);
  CHECK_THROWS_AS(load_dataset(path.string()), Error);  // all records skipped -> empty

  LoadOptions opt;
  opt.default_label = 0;
  auto ds = load_dataset(path.string(), opt);
  CHECK(ds.size() == 2);
  CHECK(ds.records[0].label == 0);
}

TEST_CASE("raw corpus skips malformed records and counts them") {
  std::string corpus = "GET /a HTTP/1.1\n\n---\nGARBAGE\n---\nGET /c HTTP/1.1\n\n";
  auto path = temp_file("d.txt", corpus);
  LoadOptions opt;
  opt.default_label = 1;
  auto ds = load_dataset(path.string(), opt);
  CHECK(ds.size() == 2);
  CHECK(ds.skipped == 1);
}

TEST_CASE("empty file raises EmptyDataset") {
  auto path = temp_file("e.jsonl", "");
  try {
    load_dataset(path.string());
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("data specs: labels and synthetic scheme") {
  std::string corpus = "GET /a HTTP/1.1\n\n";
  auto path = temp_file("f.txt", corpus);
  auto ds = load_data_spec(path.string() + ":1", {});
  CHECK(ds.size() == 1);
  CHECK(ds.records[0].label == 1);

  auto syn = load_data_spec("synthetic:20:9", {});
  CHECK(syn.size() == 20);
  CHECK(syn.provenance == "synthetic");
}

TEST_CASE("stratified split: 100 records give 70/30 with 35/35 + 15/15") {
  Dataset ds;
  for (int i = 0; i < 100; ++i) {
    Record r;
    r.req.url = "get /r" + std::to_string(i);
    r.label = i % 2;
    ds.records.push_back(r);
  }
  auto [train, test] = split_dataset(ds, 42);
  CHECK(train.size() == 70);
  CHECK(test.size() == 30);
  CHECK(train.count(0) == 35);
  CHECK(train.count(1) == 35);
  CHECK(test.count(0) == 15);
  CHECK(test.count(1) == 15);

  auto [train2, test2] = split_dataset(ds, 42);
  REQUIRE(train2.size() == train.size());
  for (long i = 0; i < train.size(); ++i)
    CHECK(train2.records[i].req.url == train.records[i].req.url);
}

TEST_CASE("split at the published corpus counts lands on 39945/17120") {
  Dataset ds;
  ds.records.reserve(57065);
  for (int i = 0; i < 36000; ++i) ds.records.push_back({{}, 0, -1});
  for (int i = 0; i < 21065; ++i) ds.records.push_back({{}, 1, -1});
  auto [train, test] = split_dataset(ds, 1);
  CHECK(train.size() == 25200 + 14745);
  CHECK(train.size() == 39945);
  CHECK(test.size() == 17120);
}

TEST_CASE("metrics identities") {
  Metrics perfect{10, 0, 10, 0};
  CHECK(perfect.accuracy() == 1.0);
  CHECK(perfect.precision() == 1.0);
  CHECK(perfect.recall() == 1.0);
  CHECK(perfect.f1() == 1.0);

  Metrics m{2, 1, 6, 1};
  CHECK(m.accuracy() == doctest::Approx(0.8));
  CHECK(m.precision() == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall() == doctest::Approx(2.0 / 3.0));
  CHECK(m.f1() == doctest::Approx(2.0 / 3.0));

  Metrics none{0, 0, 5, 0};
  CHECK(none.precision() == 0.0);
  CHECK(none.f1() == 0.0);
}

TEST_CASE("exact dedup collapses reordered duplicates") {
  Dataset ds;
  Record a;
  a.req.url = "get /x";
  a.req.params = {{"k", "1", http::ParamSource::Query}, {"m", "2", http::ParamSource::Query}};
  a.label = 0;
  Record b = a;
  std::swap(b.req.params[0], b.req.params[1]);
  Record c = a;
  c.label = 1;  // different label survives
  ds.records = {a, b, c};
  auto out = dedup_exact(ds);
  CHECK(out.size() == 2);
}

TEST_CASE("synthetic corpus is balanced, deterministic, and ground-truthed") {
  auto ds = generate_synthetic(100, 5);
  CHECK(ds.size() == 100);
  CHECK(ds.count(0) == 50);
  CHECK(ds.count(1) == 50);

  auto ds2 = generate_synthetic(100, 5);
  for (int i = 0; i < 100; ++i) {
    CHECK(ds.records[i].req.url == ds2.records[i].req.url);
    CHECK(ds.records[i].label == ds2.records[i].label);
  }

  bool has_alert = false, has_tautology = false;
  for (const auto& r : ds.records) {
    if (r.label == 1) {
      REQUIRE(r.gt_param >= 0);
      REQUIRE(r.gt_param < int(r.req.params.size()));
    } else {
      CHECK(r.gt_param == -1);
    }
    for (const auto& p : r.req.params) {
      has_alert |= p.value.find("alert(") != std::string::npos;
      has_tautology |= p.value.find("a'='a") != std::string::npos ||
                       p.value.find("a='a") != std::string::npos;
    }
  }
  CHECK(has_alert);
  CHECK(has_tautology);
  CHECK_THROWS_AS(generate_synthetic(5, 1), Error);
}

TEST_CASE("synthetic raw corpus parses back to the same parsed records") {
  auto ds = generate_synthetic(30, 8);
  auto raw = synthetic_raw_corpus(30, 8);
  auto records = http::split_records(raw);
  REQUIRE(records.size() == 30);
  for (int i = 0; i < 30; ++i) {
    auto parsed = http::parse_to_request(records[i]);
    CHECK(parsed.url == ds.records[i].req.url);
    REQUIRE(parsed.params.size() == ds.records[i].req.params.size());
    for (std::size_t j = 0; j < parsed.params.size(); ++j)
      CHECK(parsed.params[j] == ds.records[i].req.params[j]);
  }
}

TEST_CASE("injected parameter carries the decoded attack payload") {
  auto ds = generate_synthetic(200, 13);
  for (const auto& r : ds.records) {
    if (r.label != 1) continue;
    const auto& p = r.req.params[r.gt_param];
    bool attacky = p.value.find("alert") != std::string::npos ||
                   p.value.find("'") != std::string::npos ||
                   p.value.find(";") != std::string::npos ||
                   p.value.find("|") != std::string::npos ||
                   p.value.find("`") != std::string::npos ||
                   p.value.find("&&") != std::string::npos ||
                   p.value.find("../") != std::string::npos ||
                   p.value.find("..") != std::string::npos ||
                   p.value.find("SELECT") != std::string::npos ||
                   p.value.find("DROP") != std::string::npos;
    CHECK(attacky);
  }
}
