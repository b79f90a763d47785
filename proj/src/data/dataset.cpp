#include "data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "data/synthetic.hpp"
#include "error.hpp"
#include "nn/rng.hpp"

namespace wad::data {

namespace {

std::optional<int> label_from_json(const nlohmann::json& j) {
  if (!j.contains("label")) return std::nullopt;
  const auto& l = j.at("label");
  if (l.is_boolean()) return l.get<bool>() ? 1 : 0;
  if (l.is_number_integer()) {
    int v = l.get<int>();
    if (v == 0 || v == 1) return v;
  }
  if (l.is_string()) {
    std::string s = l.get<std::string>();
    if (s == "benign" || s == "0") return 0;
    if (s == "malicious" || s == "1") return 1;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Record> record_from_json(const std::string& line, const LoadOptions& opt) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (!j.is_object()) return std::nullopt;

  Record rec;
  if (j.contains("params")) {
    // already-parsed form
    rec.req.url = j.value("url", "");
    if (rec.req.url.empty()) return std::nullopt;
    for (const auto& p : j.at("params")) {
      http::Parameter param;
      param.key = p.value("key", "");
      param.value = p.value("value", "");
      auto src = http::param_source_from_name(p.value("source", "query"));
      param.source = src.value_or(http::ParamSource::Query);
      if (!param.key.empty()) rec.req.params.push_back(std::move(param));
    }
  } else {
    http::RawRequest raw;
    raw.method = j.value("method", "GET");
    raw.target = j.value("url", "/");
    if (raw.target.empty()) raw.target = "/";
    std::string query = j.value("query", "");
    if (!query.empty()) raw.target += "?" + query;
    raw.version = "HTTP/1.1";
    raw.body = j.value("body", "");
    if (j.contains("headers") && j.at("headers").is_object())
      for (const auto& [name, value] : j.at("headers").items())
        raw.headers.emplace_back(name, value.is_string() ? value.get<std::string>() : value.dump());
    try {
      rec.req = http::build_parsed_request(raw, opt.extract);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  auto label = label_from_json(j);
  if (!label) label = opt.default_label;
  if (!label) return std::nullopt;
  rec.label = *label;
  rec.req.label = *label;
  rec.gt_param = j.value("gt_param", -1);
  return rec;
}

std::string record_to_json(const Record& r) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : r.req.params)
    params.push_back({{"key", p.key}, {"value", p.value}, {"source", http::param_source_name(p.source)}});
  nlohmann::json j{{"url", r.req.url}, {"params", params}};
  if (r.label >= 0) j["label"] = r.label;
  if (r.gt_param >= 0) j["gt_param"] = r.gt_param;
  return j.dump();
}

Dataset load_dataset(const std::string& path, const LoadOptions& opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read dataset: " + path);
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  DataFormat fmt = opt.format;
  if (fmt == DataFormat::Auto) {
    std::size_t first = contents.find_first_not_of(" \t\r\n");
    bool looks_json = first != std::string::npos && contents[first] == '{';
    bool json_ext = path.size() > 6 && (path.rfind(".jsonl") == path.size() - 6 ||
                                        path.rfind(".ndjson") != std::string::npos);
    fmt = (looks_json || json_ext) ? DataFormat::Jsonl : DataFormat::Raw;
  }

  Dataset ds;
  ds.provenance = opt.provenance;
  if (fmt == DataFormat::Jsonl) {
    std::stringstream ss(contents);
    std::string line;
    while (std::getline(ss, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto rec = record_from_json(line, opt);
      if (rec)
        ds.records.push_back(std::move(*rec));
      else
        ++ds.skipped;
    }
  } else {
    for (const auto& raw : http::split_records(contents)) {
      if (!opt.default_label) {
        ++ds.skipped;  // raw records carry no label channel
        continue;
      }
      try {
        Record rec;
        rec.req = http::parse_to_request(raw, opt.extract);
        rec.label = *opt.default_label;
        rec.req.label = rec.label;
        ds.records.push_back(std::move(rec));
      } catch (const Error&) {
        ++ds.skipped;
      }
    }
  }
  if (ds.records.empty())
    fail(ErrorCode::EmptyDataset, "no usable records in " + path +
                                      (ds.skipped ? " (" + std::to_string(ds.skipped) + " skipped)"
                                                  : ""));
  if (opt.dedup) {
    long before = ds.size();
    ds = dedup_exact(ds);
    ds.skipped += before - ds.size();
  }
  return ds;
}

Dataset load_data_spec(const std::string& spec, const http::ExtractOptions& extract) {
  if (spec.rfind("synthetic:", 0) == 0) {
    std::string rest = spec.substr(10);
    std::size_t colon = rest.find(':');
    long n = std::stol(rest.substr(0, colon));
    uint64_t seed = colon == std::string::npos ? 7 : std::stoull(rest.substr(colon + 1));
    return generate_synthetic(n, seed);
  }
  LoadOptions opt;
  opt.extract = extract;
  std::string path = spec;
  std::size_t colon = spec.rfind(':');
  if (colon != std::string::npos && colon + 1 < spec.size()) {
    std::string tail = spec.substr(colon + 1);
    if (tail == "0" || tail == "1" || tail == "benign" || tail == "malicious") {
      opt.default_label = (tail == "1" || tail == "malicious") ? 1 : 0;
      path = spec.substr(0, colon);
    }
  }
  return load_dataset(path, opt);
}

std::vector<http::ParsedRequest> load_requests(const std::string& path,
                                               const http::ExtractOptions& extract,
                                               long* skipped) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read requests: " + path);
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  long skip_count = 0;
  std::vector<http::ParsedRequest> out;

  std::size_t first = contents.find_first_not_of(" \t\r\n");
  bool looks_json = first != std::string::npos && contents[first] == '{';
  if (looks_json) {
    std::stringstream ss(contents);
    std::string line;
    LoadOptions opt;
    opt.extract = extract;
    opt.default_label = 0;  // label irrelevant here
    while (std::getline(ss, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto rec = record_from_json(line, opt);
      if (rec)
        out.push_back(std::move(rec->req));
      else
        ++skip_count;
    }
  } else {
    for (const auto& raw : http::split_records(contents)) {
      try {
        out.push_back(http::parse_to_request(raw, extract));
      } catch (const Error&) {
        ++skip_count;
      }
    }
  }
  if (skipped) *skipped = skip_count;
  return out;
}

void merge_into(Dataset& dst, Dataset&& src) {
  dst.records.insert(dst.records.end(), std::make_move_iterator(src.records.begin()),
                     std::make_move_iterator(src.records.end()));
  dst.skipped += src.skipped;
  if (dst.provenance == "unknown") dst.provenance = src.provenance;
}

Dataset dedup_exact(const Dataset& ds) {
  Dataset out;
  out.provenance = ds.provenance;
  out.skipped = ds.skipped;
  std::map<std::string, bool> seen;
  for (const auto& r : ds.records) {
    std::vector<std::string> parts;
    for (const auto& p : r.req.params)
      parts.push_back(p.key + "\x1f" + p.value + "\x1f" + http::param_source_name(p.source));
    std::sort(parts.begin(), parts.end());
    std::string key = r.req.url + "\x1e" + std::to_string(r.label);
    for (const auto& p : parts) key += "\x1e" + p;
    if (seen.emplace(std::move(key), true).second) out.records.push_back(r);
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, uint64_t seed) {
  if (ds.size() < 10) fail(ErrorCode::ConfigError, "split needs at least 10 records");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    by_class[ds.records[i].label == 1 ? 1 : 0].push_back(i);

  nn::Rng rng(seed);
  Dataset train, test;
  train.provenance = test.provenance = ds.provenance;
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& idx : by_class) {
    rng.shuffle(idx.begin(), idx.end());
    std::size_t n_train = idx.size() * 7 / 10;
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_train ? train_idx : test_idx).push_back(idx[i]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  for (auto i : train_idx) train.records.push_back(ds.records[i]);
  for (auto i : test_idx) test.records.push_back(ds.records[i]);
  return {std::move(train), std::move(test)};
}

std::string metrics_json(const Metrics& m) {
  nlohmann::json j{{"tp", m.tp},
                   {"fp", m.fp},
                   {"tn", m.tn},
                   {"fn", m.fn},
                   {"accuracy", m.accuracy()},
                   {"precision", m.precision()},
                   {"recall", m.recall()},
                   {"f1", m.f1()}};
  return j.dump(2);
}

std::string metrics_text(const Metrics& m) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "accuracy  " << m.accuracy() << "\n"
     << "precision " << m.precision() << "\n"
     << "recall    " << m.recall() << "\n"
     << "f1        " << m.f1() << "\n"
     << "confusion tp=" << m.tp << " fp=" << m.fp << " tn=" << m.tn << " fn=" << m.fn << "\n";
  return os.str();
}

}  // namespace wad::data
