#include "model/traceability.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace wad::model {

std::vector<double> attention_degrees(const std::vector<double>& avg, int n) {
  if (static_cast<std::size_t>(n) * n != avg.size())
    fail(ErrorCode::ShapeMismatch, "attention_degrees: matrix is not n x n");
  std::vector<double> degrees(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) degrees[j] += avg[static_cast<std::size_t>(i) * n + j];
  for (auto& d : degrees) d /= n;
  return degrees;
}

std::vector<int> rank_descending(const std::vector<double>& degrees) {
  std::vector<int> idx(degrees.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return degrees[a] > degrees[b]; });
  return idx;
}

std::string trace_report_json(const TraceReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["labels"] = r.labels;
  j["degrees"] = r.degrees;
  j["ranking"] = r.ranking;
  if (r.n == 0) j["note"] = "request has no payload parameters";
  return j.dump(2);
}

void emit_heatmap(const TraceReport& r, const std::string& csv_path, const std::string& json_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) fail(ErrorCode::IoFailure, "cannot write " + csv_path);
  csv << "param";
  for (const auto& l : r.labels) csv << ',' << l;
  csv << '\n';
  csv.precision(10);
  for (int i = 0; i < r.n; ++i) {
    csv << r.labels[i];
    for (int j = 0; j < r.n; ++j) csv << ',' << r.heatmap[static_cast<std::size_t>(i) * r.n + j];
    csv << '\n';
  }
  if (!csv) fail(ErrorCode::IoFailure, "write failed: " + csv_path);

  std::ofstream js(json_path, std::ios::binary);
  if (!js) fail(ErrorCode::IoFailure, "cannot write " + json_path);
  js << trace_report_json(r) << '\n';
  if (!js) fail(ErrorCode::IoFailure, "write failed: " + json_path);
}

}  // namespace wad::model
