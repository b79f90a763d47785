// Command-line front end over the wad C API.
//
// Exit codes: 0 success, 1 I/O or internal failure, 2 usage/config errors
// (including malformed records under --strict), 3 numeric failures.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wad.h"

namespace {

int exit_code_of(wad_status s) {
  switch (s) {
    case WAD_OK: return 0;
    case WAD_ERR_IO: return 1;
    case WAD_ERR_CONFIG: return 2;
    case WAD_ERR_NUMERIC: return 3;
    case WAD_ERR_PARSE: return 2;
    case WAD_ERR_INTERNAL: return 1;
  }
  return 1;
}

int report(wad_status s) {
  if (s != WAD_OK) std::fprintf(stderr, "wad: error: %s\n", wad_last_error());
  return exit_code_of(s);
}

struct ConfigHandle {
  wad_config* cfg = nullptr;
  ~ConfigHandle() { wad_config_free(cfg); }
};

struct DatasetHandle {
  wad_dataset* ds = nullptr;
  ~DatasetHandle() { wad_dataset_free(ds); }
};

struct ModelHandle {
  wad_model* m = nullptr;
  ~ModelHandle() { wad_model_free(m); }
};

// --config file, then --set overrides, then --seed/--threads shorthands.
wad_status build_config(ConfigHandle& handle, const std::string& config_path,
                        const std::vector<std::string>& sets, const std::string& seed,
                        int threads) {
  wad_status s = config_path.empty() ? wad_config_create(&handle.cfg)
                                     : wad_config_load(config_path.c_str(), &handle.cfg);
  if (s != WAD_OK) return s;
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "wad: error: --set expects key=value, got \"%s\"\n", kv.c_str());
      return WAD_ERR_CONFIG;
    }
    s = wad_config_set(handle.cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (s != WAD_OK) return s;
  }
  if (!seed.empty()) {
    s = wad_config_set(handle.cfg, "train.seed", seed.c_str());
    if (s != WAD_OK) return s;
  }
  if (threads > 0) {
    s = wad_config_set(handle.cfg, "train.threads", std::to_string(threads).c_str());
    if (s != WAD_OK) return s;
  }
  return WAD_OK;
}

wad_status open_dataset(DatasetHandle& handle, const std::vector<std::string>& specs) {
  std::vector<const char*> ptrs;
  for (const auto& s : specs) ptrs.push_back(s.c_str());
  return wad_dataset_open(ptrs.data(), int(ptrs.size()), &handle.ds);
}

const char* opt_path(const std::string& s) { return s.empty() || s == "-" ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wad — dual-channel web attack detector"};
  app.require_subcommand(1);

  // parse
  std::string parse_input, parse_out;
  bool strict = false;
  auto* cmd_parse = app.add_subcommand("parse", "Parse raw requests into JSON lines");
  cmd_parse->add_option("input", parse_input, "raw-request file")->required();
  cmd_parse->add_option("--out,-o", parse_out, "output path (default stdout)");
  cmd_parse->add_flag("--strict", strict, "fail on the first malformed record");

  // train
  std::string train_config, train_out, train_resume, train_seed;
  std::vector<std::string> train_data, train_sets;
  int train_threads = 0;
  auto* cmd_train = app.add_subcommand("train", "Train a detector and write a checkpoint");
  cmd_train->add_option("--config", train_config, "config JSON");
  cmd_train->add_option("--data", train_data, "dataset spec (path[:label] or synthetic:N[:seed])")
      ->required();
  cmd_train->add_option("--out", train_out, "output directory")->required();
  cmd_train->add_option("--seed", train_seed, "training seed");
  cmd_train->add_option("--threads", train_threads, "evaluation threads");
  cmd_train->add_option("--resume", train_resume, "checkpoint directory to resume from");
  cmd_train->add_option("--set", train_sets, "config override key=value");

  // evaluate
  std::string eval_model, eval_out;
  std::vector<std::string> eval_data;
  int eval_threads = 1;
  auto* cmd_eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on labeled data");
  cmd_eval->add_option("--model", eval_model, "checkpoint directory")->required();
  cmd_eval->add_option("--data", eval_data, "dataset spec")->required();
  cmd_eval->add_option("--threads", eval_threads, "worker threads");
  cmd_eval->add_option("--out,-o", eval_out, "metrics JSON path (default stdout)");

  // detect
  std::string detect_model, detect_input, detect_out;
  auto* cmd_detect = app.add_subcommand("detect", "Classify requests from a file");
  cmd_detect->add_option("--model", detect_model, "checkpoint directory")->required();
  cmd_detect->add_option("input", detect_input, "request file")->required();
  cmd_detect->add_option("--out,-o", detect_out, "output path (default stdout)");

  // explain
  std::string explain_model, explain_input, explain_out;
  auto* cmd_explain = app.add_subcommand("explain", "Write per-request attention reports");
  cmd_explain->add_option("--model", explain_model, "checkpoint directory")->required();
  cmd_explain->add_option("input", explain_input, "request file")->required();
  cmd_explain->add_option("--out", explain_out, "report directory")->required();

  // ablate
  std::string ablate_suite, ablate_config, ablate_out, ablate_seed;
  std::vector<std::string> ablate_data, ablate_sets;
  int ablate_threads = 0;
  auto* cmd_ablate = app.add_subcommand("ablate", "Train and compare model variants");
  cmd_ablate->add_option("suite", ablate_suite, "embedding | channel | payload_order")->required();
  cmd_ablate->add_option("--config", ablate_config, "config JSON");
  cmd_ablate->add_option("--data", ablate_data, "dataset spec")->required();
  cmd_ablate->add_option("--out", ablate_out, "output directory")->required();
  cmd_ablate->add_option("--seed", ablate_seed, "training seed");
  cmd_ablate->add_option("--threads", ablate_threads, "evaluation threads");
  cmd_ablate->add_option("--set", ablate_sets, "config override key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (cmd_parse->parsed()) {
    long ok = 0, skipped = 0;
    wad_status s =
        wad_parse_file(parse_input.c_str(), opt_path(parse_out), strict ? 1 : 0, &ok, &skipped);
    if (s == WAD_OK)
      std::fprintf(stderr, "wad: parsed %ld record(s), skipped %ld\n", ok, skipped);
    return report(s);
  }

  if (cmd_train->parsed()) {
    ConfigHandle cfg;
    wad_status s = build_config(cfg, train_config, train_sets, train_seed, train_threads);
    if (s != WAD_OK) return report(s);
    DatasetHandle ds;
    s = open_dataset(ds, train_data);
    if (s != WAD_OK) return report(s);
    char* run_dir = nullptr;
    s = wad_train(cfg.cfg, ds.ds, train_out.c_str(),
                  train_resume.empty() ? nullptr : train_resume.c_str(), &run_dir);
    if (s == WAD_OK) {
      std::printf("%s\n", run_dir);
      wad_string_free(run_dir);
    }
    return report(s);
  }

  if (cmd_eval->parsed()) {
    ModelHandle m;
    wad_status s = wad_model_open(eval_model.c_str(), &m.m);
    if (s != WAD_OK) return report(s);
    DatasetHandle ds;
    s = open_dataset(ds, eval_data);
    if (s != WAD_OK) return report(s);
    char* json = nullptr;
    s = wad_evaluate(m.m, ds.ds, eval_threads, &json);
    if (s == WAD_OK) {
      if (eval_out.empty() || eval_out == "-") {
        std::printf("%s\n", json);
      } else {
        FILE* f = std::fopen(eval_out.c_str(), "wb");
        if (!f) {
          wad_string_free(json);
          std::fprintf(stderr, "wad: error: cannot write %s\n", eval_out.c_str());
          return 1;
        }
        std::fprintf(f, "%s\n", json);
        std::fclose(f);
      }
      wad_string_free(json);
    }
    return report(s);
  }

  if (cmd_detect->parsed()) {
    ModelHandle m;
    wad_status s = wad_model_open(detect_model.c_str(), &m.m);
    if (s != WAD_OK) return report(s);
    s = wad_detect_file(m.m, detect_input.c_str(), opt_path(detect_out));
    return report(s);
  }

  if (cmd_explain->parsed()) {
    ModelHandle m;
    wad_status s = wad_model_open(explain_model.c_str(), &m.m);
    if (s != WAD_OK) return report(s);
    s = wad_explain_file(m.m, explain_input.c_str(), explain_out.c_str());
    return report(s);
  }

  if (cmd_ablate->parsed()) {
    ConfigHandle cfg;
    wad_status s = build_config(cfg, ablate_config, ablate_sets, ablate_seed, ablate_threads);
    if (s != WAD_OK) return report(s);
    DatasetHandle ds;
    s = open_dataset(ds, ablate_data);
    if (s != WAD_OK) return report(s);
    char* csv = nullptr;
    s = wad_ablate(ablate_suite.c_str(), cfg.cfg, ds.ds, ablate_out.c_str(), &csv);
    if (s == WAD_OK) {
      std::printf("%s", csv);
      wad_string_free(csv);
    }
    return report(s);
  }

  return 2;
}
