#include "model/config.hpp"

#include <functional>
#include <map>
#include <sstream>

#include <fstream>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace wad::model {

const char* embedding_mode_name(EmbeddingMode m) {
  switch (m) {
    case EmbeddingMode::Hge: return "hge";
    case EmbeddingMode::WordPiece: return "wordpiece";
    case EmbeddingMode::Char: return "char";
    case EmbeddingMode::Word: return "word";
  }
  return "hge";
}

const char* channel_mode_name(ChannelMode m) {
  switch (m) {
    case ChannelMode::Dual: return "dual";
    case ChannelMode::UrlOnly: return "url_only";
    case ChannelMode::PayloadOnly: return "payload_only";
  }
  return "dual";
}

const char* payload_mode_name(PayloadMode m) {
  return m == PayloadMode::Flat ? "flat" : "set_fusion";
}

EmbeddingMode embedding_mode_from_name(const std::string& s) {
  if (s == "hge") return EmbeddingMode::Hge;
  if (s == "wordpiece") return EmbeddingMode::WordPiece;
  if (s == "char") return EmbeddingMode::Char;
  if (s == "word") return EmbeddingMode::Word;
  fail(ErrorCode::ConfigError, "unknown embedding_mode: " + s);
}

ChannelMode channel_mode_from_name(const std::string& s) {
  if (s == "dual") return ChannelMode::Dual;
  if (s == "url_only") return ChannelMode::UrlOnly;
  if (s == "payload_only") return ChannelMode::PayloadOnly;
  fail(ErrorCode::ConfigError, "unknown channel_mode: " + s);
}

PayloadMode payload_mode_from_name(const std::string& s) {
  if (s == "set_fusion") return PayloadMode::SetFusion;
  if (s == "flat") return PayloadMode::Flat;
  fail(ErrorCode::ConfigError, "unknown payload_mode: " + s);
}

void DetectorConfig::validate() const {
  if (url.hidden != param.hidden)
    fail(ErrorCode::ConfigError, "url and param hidden sizes must match (feature concatenation)");
  if (url.hidden % 2 != 0) fail(ErrorCode::ConfigError, "hidden size must be even");
  for (const auto* enc : {&url, &param}) {
    if (enc->layers < 1 || enc->hidden < 2 || enc->heads < 1 || enc->intermediate < 1)
      fail(ErrorCode::ConfigError, "encoder dimensions must be positive");
    if (enc->hidden % enc->heads != 0)
      fail(ErrorCode::ConfigError, "encoder heads must divide hidden size");
    if (enc->max_tokens < 2 || enc->max_chars < 1)
      fail(ErrorCode::ConfigError, "sequence limits must allow at least [CLS]/[SEP]");
    if (enc->vocab_target < 5) fail(ErrorCode::ConfigError, "vocab target too small");
  }
  if (url.hidden % fusion.heads != 0)
    fail(ErrorCode::ConfigError, "fusion heads must divide hidden size");
  if (max_params < 1) fail(ErrorCode::ConfigError, "max_params must be >= 1");
  if (char_vocab != 416) fail(ErrorCode::ConfigError, "char vocab layout is fixed at 416 ids");
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorCode::ConfigError, "dropout must be in [0,1)");
}

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::ConfigError, "train.epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCode::ConfigError, "train.batch_size must be >= 1");
  if (warmup_fraction <= 0.0 || warmup_fraction >= 1.0)
    fail(ErrorCode::ConfigError, "train.warmup_fraction must be in (0,1)");
  if (lr <= 0.0) fail(ErrorCode::ConfigError, "train.lr must be positive");
  if (threads < 1) fail(ErrorCode::ConfigError, "train.threads must be >= 1");
}

namespace {

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigError, "config key " + key + ": expected integer, got \"" + v + "\"");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigError, "config key " + key + ": expected number, got \"" + v + "\"");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigError, "config key " + key + ": expected unsigned, got \"" + v + "\"");
  }
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto enc = [&m](const std::string& prefix, EncoderConfig& (*get)(RunConfig&)) {
      m[prefix + ".layers"] = [get](RunConfig& c, const std::string& k, const std::string& v) {
        get(c).layers = to_int(k, v);
      };
      m[prefix + ".hidden"] = [get](RunConfig& c, const std::string& k, const std::string& v) {
        get(c).hidden = to_int(k, v);
      };
      m[prefix + ".heads"] = [get](RunConfig& c, const std::string& k, const std::string& v) {
        get(c).heads = to_int(k, v);
      };
      m[prefix + ".intermediate"] = [get](RunConfig& c, const std::string& k, const std::string& v) {
        get(c).intermediate = to_int(k, v);
      };
      m[prefix + ".vocab"] = [get](RunConfig& c, const std::string& k, const std::string& v) {
        get(c).vocab_target = to_int(k, v);
      };
      m[prefix + ".max_tokens"] = [get](RunConfig& c, const std::string& k, const std::string& v) {
        get(c).max_tokens = to_int(k, v);
      };
      m[prefix + ".max_chars"] = [get](RunConfig& c, const std::string& k, const std::string& v) {
        get(c).max_chars = to_int(k, v);
      };
    };
    enc("model.url", +[](RunConfig& c) -> EncoderConfig& { return c.model.url; });
    enc("model.param", +[](RunConfig& c) -> EncoderConfig& { return c.model.param; });
    m["model.fusion.heads"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.fusion.heads = to_int(k, v);
    };
    m["model.fusion.intermediate"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.fusion.intermediate = to_int(k, v);
    };
    m["model.max_params"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.max_params = to_int(k, v);
    };
    m["model.char_vocab"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.char_vocab = to_int(k, v);
    };
    m["model.dropout"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.dropout = to_double(k, v);
    };
    m["model.embedding_mode"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.model.embedding_mode = embedding_mode_from_name(v);
    };
    m["model.channel_mode"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.model.channel_mode = channel_mode_from_name(v);
    };
    m["model.payload_mode"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.model.payload_mode = payload_mode_from_name(v);
    };
    m["train.epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.epochs = to_int(k, v);
    };
    m["train.batch_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.batch_size = to_int(k, v);
    };
    m["train.lr"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.lr = to_double(k, v);
    };
    m["train.warmup_fraction"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.warmup_fraction = to_double(k, v);
    };
    m["train.weight_decay"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.weight_decay = to_double(k, v);
    };
    m["train.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.seed = to_u64(k, v);
    };
    m["train.threads"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.threads = to_int(k, v);
    };
    m["train.target_f1"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.target_f1 = to_double(k, v);
    };
    m["train.min_epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.min_epochs = to_int(k, v);
    };
    m["train.headers"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.train.header_subset = split_commas(v);
    };
    return m;
  }();
  return table;
}

std::string scalar_to_string(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "1" : "0";
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  if (j.is_number_unsigned()) return std::to_string(j.get<unsigned long long>());
  if (j.is_number_float()) {
    std::ostringstream os;
    os.precision(17);
    os << j.get<double>();
    return os.str();
  }
  fail(ErrorCode::ConfigError, "config values must be scalars");
}

void walk(const nlohmann::json& j, const std::string& prefix, RunConfig& cfg) {
  if (j.is_object()) {
    for (const auto& [key, val] : j.items()) {
      std::string path = prefix.empty() ? key : prefix + "." + key;
      walk(val, path, cfg);
    }
    return;
  }
  if (j.is_array() && prefix == "train.headers") {
    std::string joined;
    for (const auto& el : j) {
      if (!joined.empty()) joined += ",";
      joined += el.get<std::string>();
    }
    config_set(cfg, prefix, joined);
    return;
  }
  config_set(cfg, prefix, scalar_to_string(j));
}

}  // namespace

void config_set(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end()) fail(ErrorCode::ConfigError, "unknown config key: " + key);
  it->second(cfg, key, value);
}

RunConfig config_from_json_text(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  walk(j, "", cfg);
  return cfg;
}

RunConfig config_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

std::string config_to_json_text(const RunConfig& cfg) {
  auto enc = [](const EncoderConfig& e) {
    return nlohmann::json{{"layers", e.layers},       {"hidden", e.hidden},
                          {"heads", e.heads},         {"intermediate", e.intermediate},
                          {"vocab", e.vocab_target},  {"max_tokens", e.max_tokens},
                          {"max_chars", e.max_chars}};
  };
  nlohmann::json j{
      {"model",
       {{"url", enc(cfg.model.url)},
        {"param", enc(cfg.model.param)},
        {"fusion",
         {{"heads", cfg.model.fusion.heads}, {"intermediate", cfg.model.fusion.intermediate}}},
        {"max_params", cfg.model.max_params},
        {"char_vocab", cfg.model.char_vocab},
        {"dropout", cfg.model.dropout},
        {"embedding_mode", embedding_mode_name(cfg.model.embedding_mode)},
        {"channel_mode", channel_mode_name(cfg.model.channel_mode)},
        {"payload_mode", payload_mode_name(cfg.model.payload_mode)}}},
      {"train",
       {{"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"lr", cfg.train.lr},
        {"warmup_fraction", cfg.train.warmup_fraction},
        {"weight_decay", cfg.train.weight_decay},
        {"seed", cfg.train.seed},
        {"threads", cfg.train.threads},
        {"target_f1", cfg.train.target_f1},
        {"min_epochs", cfg.train.min_epochs},
        {"headers", cfg.train.header_subset}}}};
  return j.dump(2);
}

}  // namespace wad::model
