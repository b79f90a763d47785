#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "http/request.hpp"

namespace wad::data {

struct Record {
  http::ParsedRequest req;
  int label = 0;          // 0 benign, 1 malicious
  int gt_param = -1;      // synthetic ground truth: injected parameter index
};

struct Dataset {
  std::vector<Record> records;
  std::string provenance = "unknown";  // csic2010 | srbh2020 | synthetic | unknown
  long skipped = 0;

  long size() const { return static_cast<long>(records.size()); }
  long count(int label) const {
    long c = 0;
    for (const auto& r : records) c += (r.label == label);
    return c;
  }
};

enum class DataFormat { Auto, Raw, Jsonl };

struct LoadOptions {
  DataFormat format = DataFormat::Auto;
  std::optional<int> default_label;  // applied to records without one (raw format)
  http::ExtractOptions extract;
  bool dedup = false;
  std::string provenance = "unknown";
};

// Raw-request corpora ("---"-separated records) or JSON lines with either
// {method,url,query,body,headers,label} or an already-parsed
// {url,params,label} object. Malformed or unlabeled records are skipped and
// counted. Throws EmptyDataset when nothing loads.
Dataset load_dataset(const std::string& path, const LoadOptions& opt = {});

// "path", "path:LABEL" or "synthetic:N[:SEED]".
Dataset load_data_spec(const std::string& spec, const http::ExtractOptions& extract);

// Label-free request stream for detect/explain: raw-request or JSON-lines
// files; malformed records are skipped and counted. An empty file yields an
// empty list (no error).
std::vector<http::ParsedRequest> load_requests(const std::string& path,
                                               const http::ExtractOptions& extract,
                                               long* skipped = nullptr);

void merge_into(Dataset& dst, Dataset&& src);

// Exact-duplicate removal on (url, sorted params, label).
Dataset dedup_exact(const Dataset& ds);

// Stratified 70/30 split, floor(0.7*n) per class, deterministic under seed.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, uint64_t seed);

struct Metrics {
  long tp = 0, fp = 0, tn = 0, fn = 0;

  long total() const { return tp + fp + tn + fn; }
  double accuracy() const { return total() ? double(tp + tn) / double(total()) : 0.0; }
  double precision() const { return tp + fp ? double(tp) / double(tp + fp) : 0.0; }
  double recall() const { return tp + fn ? double(tp) / double(tp + fn) : 0.0; }
  double f1() const {
    double p = precision(), r = recall();
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  void add(int label, int predicted) {
    if (label == 1)
      predicted == 1 ? ++tp : ++fn;
    else
      predicted == 1 ? ++fp : ++tn;
  }
  void merge(const Metrics& o) { tp += o.tp; fp += o.fp; tn += o.tn; fn += o.fn; }
};

std::string metrics_json(const Metrics& m);
std::string metrics_text(const Metrics& m);

// ParsedRequest JSON-lines serialization (the `parse` subcommand's output,
// accepted back by the loader).
std::string record_to_json(const Record& r);
std::optional<Record> record_from_json(const std::string& line, const LoadOptions& opt);

}  // namespace wad::data
