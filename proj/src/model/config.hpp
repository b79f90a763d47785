#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wad::model {

enum class EmbeddingMode { Hge, WordPiece, Char, Word };
enum class ChannelMode { Dual, UrlOnly, PayloadOnly };
enum class PayloadMode { SetFusion, Flat };

const char* embedding_mode_name(EmbeddingMode m);
const char* channel_mode_name(ChannelMode m);
const char* payload_mode_name(PayloadMode m);
EmbeddingMode embedding_mode_from_name(const std::string& s);
ChannelMode channel_mode_from_name(const std::string& s);
PayloadMode payload_mode_from_name(const std::string& s);

struct EncoderConfig {
  int layers = 2;
  int hidden = 128;
  int heads = 4;
  int intermediate = 512;
  int vocab_target = 5000;
  int max_tokens = 64;
  int max_chars = 256;
};

struct FusionConfig {
  int heads = 4;
  int intermediate = 512;
};

// Desk-scale defaults (2 layers, hidden 128). The full-scale reference shape
// is layers=12, hidden=768, heads=12, intermediate=3072, fusion heads 12 of
// size 64, vocabularies 5000/52000.
struct DetectorConfig {
  EncoderConfig url;
  EncoderConfig param{2, 128, 4, 512, 52000, 128, 512};
  FusionConfig fusion;
  int max_params = 32;
  int char_vocab = 416;
  double dropout = 0.1;
  EmbeddingMode embedding_mode = EmbeddingMode::Hge;
  ChannelMode channel_mode = ChannelMode::Dual;
  PayloadMode payload_mode = PayloadMode::SetFusion;

  int hidden() const { return url.hidden; }
  int gru_hidden() const { return url.hidden / 2; }
  void validate() const;  // throws ConfigError
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double lr = 2e-5;
  double warmup_fraction = 0.01;
  double weight_decay = 0.01;
  uint64_t seed = 42;
  int threads = 1;
  // Early stop: after min_epochs, stop once test F1 reaches target (0 = off).
  double target_f1 = 0.0;
  int min_epochs = 3;
  std::vector<std::string> header_subset = {"User-Agent", "Cookie", "Referer", "Content-Type"};
  void validate() const;
};

struct RunConfig {
  DetectorConfig model;
  TrainConfig train;
};

// Flat dotted-key view used by config files and --set overrides; unknown keys
// throw ConfigError naming the key.
RunConfig config_from_json_text(const std::string& json_text);
RunConfig config_load(const std::string& path);
void config_set(RunConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_json_text(const RunConfig& cfg);

}  // namespace wad::model
