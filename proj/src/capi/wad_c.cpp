#include "wad.h"

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "data/dataset.hpp"
#include "data/synthetic.hpp"
#include "error.hpp"
#include "model/checkpoint.hpp"
#include "model/traceability.hpp"
#include "train/trainer.hpp"

using namespace wad;

extern "C" {
struct wad_config {
  model::RunConfig cfg;
};
struct wad_dataset {
  data::Dataset ds;
};
struct wad_model {
  model::LoadedCheckpoint lc;
};
}

namespace {

thread_local std::string g_last_error;

wad_status status_of(const Error& e) {
  switch (e.code()) {
    case ErrorCode::IoFailure:
    case ErrorCode::ChecksumMismatch:
    case ErrorCode::UnknownFormat:
      return WAD_ERR_IO;
    case ErrorCode::ConfigError:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::EmptyDataset:
    case ErrorCode::VocabTooSmall:
      return WAD_ERR_CONFIG;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::NotAProbability:
      return WAD_ERR_NUMERIC;
    case ErrorCode::MalformedRequestLine:
    case ErrorCode::MalformedHeader:
      return WAD_ERR_PARSE;
    default:
      return WAD_ERR_INTERNAL;
  }
}

template <class F>
wad_status guarded(F&& f) {
  try {
    f();
    return WAD_OK;
  } catch (const Error& e) {
    g_last_error = std::string(error_code_name(e.code())) + ": " + e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WAD_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

http::ExtractOptions extract_options(const model::TrainConfig& train) {
  http::ExtractOptions opt;
  opt.header_subset = train.header_subset;
  return opt;
}

std::string detection_json(const model::Prediction& pred, const std::string& url) {
  nlohmann::json j{{"label", pred.predicted == 1 ? "malicious" : "benign"},
                   {"p_malicious", pred.probs[1]},
                   {"url", url}};
  return j.dump();
}

std::string run_stamp(uint64_t seed) {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm_utc);
  return std::string("run-") + buf + "-seed" + std::to_string(seed);
}

}  // namespace

extern "C" {

WAD_API const char* wad_version(void) { return "0.1.0"; }

WAD_API const char* wad_last_error(void) { return g_last_error.c_str(); }

WAD_API void wad_string_free(char* s) { std::free(s); }

WAD_API wad_status wad_config_create(wad_config** out) {
  return guarded([&] { *out = new wad_config(); });
}

WAD_API wad_status wad_config_load(const char* path, wad_config** out) {
  return guarded([&] { *out = new wad_config{model::config_load(path)}; });
}

WAD_API wad_status wad_config_set(wad_config* cfg, const char* key, const char* value) {
  return guarded([&] { model::config_set(cfg->cfg, key, value); });
}

WAD_API wad_status wad_config_dump(const wad_config* cfg, char** json_out) {
  return guarded([&] { *json_out = dup_string(model::config_to_json_text(cfg->cfg)); });
}

WAD_API void wad_config_free(wad_config* cfg) { delete cfg; }

WAD_API wad_status wad_parse_request(const char* raw, size_t len, char** json_out) {
  return guarded([&] {
    auto parsed = http::parse_to_request(std::string(raw, len));
    data::Record rec;
    rec.req = std::move(parsed);
    rec.label = -1;
    *json_out = dup_string(data::record_to_json(rec));
  });
}

WAD_API wad_status wad_parse_file(const char* in_path, const char* out_path, int strict,
                                  long* n_ok, long* n_skipped) {
  return guarded([&] {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, std::string("cannot read ") + in_path);
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (out_path) {
      file_out.open(out_path, std::ios::binary);
      if (!file_out) fail(ErrorCode::IoFailure, std::string("cannot write ") + out_path);
      out = &file_out;
    }
    long ok = 0, skipped = 0;
    for (const auto& raw : http::split_records(contents)) {
      try {
        data::Record rec;
        rec.req = http::parse_to_request(raw);
        rec.label = -1;
        (*out) << data::record_to_json(rec) << "\n";
        ++ok;
      } catch (const Error& e) {
        if (strict)
          fail(e.code(), std::string("malformed record: ") + e.what());
        ++skipped;
        std::cerr << "wad: skipping malformed record: " << e.what() << "\n";
      }
    }
    out->flush();
    if (n_ok) *n_ok = ok;
    if (n_skipped) *n_skipped = skipped;
  });
}

WAD_API wad_status wad_dataset_open(const char* const* specs, int n_specs, wad_dataset** out) {
  return guarded([&] {
    if (n_specs <= 0) fail(ErrorCode::ConfigError, "no data specs given");
    data::Dataset merged;
    for (int i = 0; i < n_specs; ++i)
      data::merge_into(merged, data::load_data_spec(specs[i], {}));
    if (merged.records.empty()) fail(ErrorCode::EmptyDataset, "merged dataset is empty");
    *out = new wad_dataset{std::move(merged)};
  });
}

WAD_API wad_status wad_dataset_synthetic(long n, unsigned long long seed, wad_dataset** out) {
  return guarded([&] { *out = new wad_dataset{data::generate_synthetic(n, seed)}; });
}

WAD_API long wad_dataset_size(const wad_dataset* ds) { return ds ? ds->ds.size() : 0; }

WAD_API long wad_dataset_label_count(const wad_dataset* ds, int label) {
  return ds ? ds->ds.count(label) : 0;
}

WAD_API void wad_dataset_free(wad_dataset* ds) { delete ds; }

WAD_API wad_status wad_train(const wad_config* cfg, const wad_dataset* data, const char* out_dir,
                             const char* resume_checkpoint, char** run_dir_out) {
  return guarded([&] {
    model::RunConfig rc = cfg->cfg;
    rc.model.validate();
    rc.train.validate();
    std::string run_dir = std::string(out_dir) + "/" + run_stamp(rc.train.seed);
    train::run_training(rc, data->ds, run_dir, resume_checkpoint ? resume_checkpoint : "",
                        &std::cerr);
    if (run_dir_out) *run_dir_out = dup_string(run_dir);
  });
}

WAD_API wad_status wad_model_open(const char* checkpoint_dir, wad_model** out) {
  return guarded([&] { *out = new wad_model{model::load_checkpoint(checkpoint_dir)}; });
}

WAD_API void wad_model_free(wad_model* m) { delete m; }

WAD_API wad_status wad_evaluate(const wad_model* m, const wad_dataset* data, int threads,
                                char** metrics_json_out) {
  return guarded([&] {
    auto metrics = train::evaluate_model(m->lc.model, data->ds, threads < 1 ? 1 : threads);
    if (metrics_json_out) *metrics_json_out = dup_string(data::metrics_json(metrics));
  });
}

WAD_API wad_status wad_detect(const wad_model* m, const char* raw_request, size_t len,
                              char** json_out) {
  return guarded([&] {
    auto req = http::parse_to_request(std::string(raw_request, len),
                                      extract_options(m->lc.cfg.train));
    nn::NoGradGuard ng;
    nn::Rng rng(0);
    auto pred = model::forward(req, m->lc.model, rng, false);
    *json_out = dup_string(detection_json(pred, req.url));
  });
}

WAD_API wad_status wad_detect_file(const wad_model* m, const char* in_path, const char* out_path) {
  return guarded([&] {
    long skipped = 0;
    auto requests = data::load_requests(in_path, extract_options(m->lc.cfg.train), &skipped);
    if (skipped) std::cerr << "wad: skipped " << skipped << " malformed record(s)\n";

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (out_path) {
      file_out.open(out_path, std::ios::binary);
      if (!file_out) fail(ErrorCode::IoFailure, std::string("cannot write ") + out_path);
      out = &file_out;
    }
    nn::NoGradGuard ng;
    nn::Rng rng(0);
    for (const auto& req : requests) {
      auto pred = model::forward(req, m->lc.model, rng, false);
      (*out) << detection_json(pred, req.url) << "\n";
    }
    out->flush();
  });
}

WAD_API wad_status wad_explain_file(const wad_model* m, const char* in_path, const char* out_dir) {
  return guarded([&] {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::IoFailure, std::string("cannot create ") + out_dir);

    long skipped = 0;
    auto requests = data::load_requests(in_path, extract_options(m->lc.cfg.train), &skipped);
    if (skipped) std::cerr << "wad: skipped " << skipped << " malformed record(s)\n";

    nn::NoGradGuard ng;
    nn::Rng rng(0);
    int idx = 0;
    for (const auto& req : requests) {
      auto pred = model::forward(req, m->lc.model, rng, false);
      auto report = model::build_trace_report(pred.attention);
      char name[32];
      std::snprintf(name, sizeof name, "request_%03d", idx);
      std::string base = std::string(out_dir) + "/" + name;
      model::emit_heatmap(report, base + "_heatmap.csv", base + "_trace.json");
      std::cerr << "wad: " << name << " url=\"" << req.url << "\" -> "
                << (report.n ? ("top parameter " + report.labels[report.ranking[0]])
                             : std::string("no parameters"))
                << "\n";
      ++idx;
    }
  });
}

WAD_API wad_status wad_ablate(const char* suite, const wad_config* cfg, const wad_dataset* data,
                              const char* out_dir, char** csv_out) {
  return guarded([&] {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::IoFailure, std::string("cannot create ") + out_dir);
    auto rows = train::run_ablation(suite, cfg->cfg, data->ds, &std::cerr);
    std::string csv = train::ablation_csv(rows);
    std::ofstream out(std::string(out_dir) + "/" + suite + ".csv", std::ios::binary);
    if (!out) fail(ErrorCode::IoFailure, "cannot write ablation table");
    out << csv;
    if (csv_out) *csv_out = dup_string(csv);
  });
}

}  // extern "C"
