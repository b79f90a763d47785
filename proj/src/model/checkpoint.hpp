#pragma once

#include <optional>
#include <string>

#include "model/detector.hpp"
#include "nn/optim.hpp"

namespace wad::model {

struct TrainState {
  long optimizer_step = 0;
  int epochs_done = 0;
  long total_steps = 0;
};

// Checkpoint directory layout:
//   manifest.json   format tag, dtype, tensor table (name/shape/offset/size),
//                   FNV-1a checksum of weights.bin
//   weights.bin     little-endian float32 blob
//   config.json     RunConfig used to build the model
//   url_vocab.txt / param_vocab.txt / char_vocab.json
//   optimizer.bin + train_state.json   present when saved mid-training
void save_checkpoint(const DetectorModel& m, const RunConfig& cfg, const std::string& dir,
                     const nn::AdamWT<float>* opt = nullptr, const TrainState* state = nullptr);

struct LoadedCheckpoint {
  DetectorModel model;
  RunConfig cfg;
};

// Rebuilds the model from config.json + vocabs and restores weights; throws
// ChecksumMismatch when weights.bin does not match the manifest.
LoadedCheckpoint load_checkpoint(const std::string& dir);

std::optional<TrainState> load_train_state(const std::string& dir);
bool load_optimizer_state(const std::string& dir, const DetectorModel& m, nn::AdamWT<float>& opt);

uint64_t fnv1a64(const void* data, std::size_t len);

}  // namespace wad::model
