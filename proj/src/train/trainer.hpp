#pragma once

#include <iosfwd>
#include <optional>

#include "data/dataset.hpp"
#include "model/checkpoint.hpp"
#include "model/detector.hpp"
#include "nn/optim.hpp"

namespace wad::train {

struct VocabPair {
  tok::Vocab url, param;
};

// Channel vocabularies from the training split, per embedding mode:
// subword (hge/wordpiece), whole-word (word), or specials-only (char).
VocabPair build_vocabs(const data::Dataset& train_set, const model::DetectorConfig& cfg);

struct LossPoint {
  int epoch = 0;
  long step = 0;
  double loss = 0;
  double lr = 0;
};

struct EpochStat {
  int epoch = 0;
  double mean_loss = 0;
  std::optional<data::Metrics> eval;
};

struct TrainResult {
  std::vector<LossPoint> history;
  std::vector<EpochStat> epochs;
  long steps_done = 0;
  long total_steps = 0;
  int epochs_done = 0;
  bool early_stopped = false;
};

// Shuffled mini-batch loop: forward -> cross-entropy -> backward ->
// AdamW step on the warmup/decay schedule. Bit-reproducible under a fixed
// seed (single-threaded). Throws NonFiniteLoss with diagnostics.
TrainResult train_model(model::DetectorModel& m, nn::AdamWT<float>& opt,
                        const data::Dataset& train_set, const model::TrainConfig& cfg,
                        const data::Dataset* eval_set = nullptr,
                        const model::TrainState* resume = nullptr, std::ostream* log = nullptr);

data::Metrics evaluate_model(const model::DetectorModel& m, const data::Dataset& ds,
                             int threads = 1);

// Evaluation with each request's parameter list randomly permuted (seeded);
// probes order sensitivity.
data::Metrics evaluate_model_permuted(const model::DetectorModel& m, const data::Dataset& ds,
                                      uint64_t seed, int threads = 1);

// Fraction of ground-truth-bearing malicious records whose top-ranked
// attention degree points at the injected parameter.
double traceability_accuracy(const model::DetectorModel& m, const data::Dataset& ds,
                             long* evaluated = nullptr);

struct AblationRow {
  std::string variant;
  data::Metrics metrics;
  std::optional<data::Metrics> permuted;
};

// suite: "embedding" {hge,wordpiece,char,word}, "channel"
// {dual,url_only,payload_only}, "payload_order" {set_fusion,flat}. Every
// variant trains under the same seed and budget.
std::vector<AblationRow> run_ablation(const std::string& suite, model::RunConfig base,
                                      const data::Dataset& ds, std::ostream* log = nullptr);

std::string ablation_csv(const std::vector<AblationRow>& rows);

std::string loss_history_csv(const TrainResult& r);

struct TrainRunResult {
  data::Metrics metrics;
  TrainResult train;
  std::string checkpoint_dir;
};

// Full `train` flow: 70/30 split, vocab construction (or resume), training,
// final evaluation; writes checkpoint/, loss.csv and metrics.json under
// out_dir.
TrainRunResult run_training(const model::RunConfig& cfg, const data::Dataset& ds,
                            const std::string& out_dir, const std::string& resume_dir = "",
                            std::ostream* log = nullptr);

}  // namespace wad::train
