#pragma once

#include <string>
#include <vector>

#include "model/detector.hpp"

namespace wad::model {

// Per-request traceability artifact: head-averaged fusion attention, the
// per-parameter attention degrees, and the descending ranking.
struct TraceReport {
  int n = 0;
  std::vector<std::string> labels;
  std::vector<double> degrees;   // sum to 1 for row-stochastic input
  std::vector<int> ranking;      // parameter indices, highest degree first
  std::vector<double> heatmap;   // [n, n], mean over heads
};

// Elementwise mean of the per-head matrices; rows stay stochastic.
template <class R>
std::vector<double> head_average(const AttentionRecordT<R>& rec) {
  std::vector<double> avg(static_cast<std::size_t>(rec.n) * rec.n, 0.0);
  for (int h = 0; h < rec.heads; ++h)
    for (int i = 0; i < rec.n; ++i)
      for (int j = 0; j < rec.n; ++j)
        avg[static_cast<std::size_t>(i) * rec.n + j] += double(rec.weight(h, i, j));
  for (auto& v : avg) v /= rec.heads;
  return avg;
}

// degree_j = (1/n) * sum_i avg[i][j] — the cumulative attention parameter j
// receives over all queries.
std::vector<double> attention_degrees(const std::vector<double>& avg, int n);

// Stable descending sort; ties keep the lower original index first.
std::vector<int> rank_descending(const std::vector<double>& degrees);

template <class R>
TraceReport build_trace_report(const AttentionRecordT<R>& rec) {
  TraceReport r;
  r.n = rec.n;
  r.labels = rec.labels;
  if (rec.n == 0) return r;
  r.heatmap = head_average(rec);
  r.degrees = attention_degrees(r.heatmap, rec.n);
  r.ranking = rank_descending(r.degrees);
  return r;
}

std::string trace_report_json(const TraceReport& r);

// CSV heatmap (parameter keys as header row/column) plus a JSON sidecar with
// degrees and ranking. Throws IoFailure.
void emit_heatmap(const TraceReport& r, const std::string& csv_path, const std::string& json_path);

}  // namespace wad::model
