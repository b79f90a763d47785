#include "model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written little-endian");

namespace wad::model {

namespace fs = std::filesystem;

uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path);
  out.write(contents.data(), std::streamsize(contents.size()));
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void save_checkpoint(const DetectorModel& m, const RunConfig& cfg, const std::string& dir,
                     const nn::AdamWT<float>* opt, const TrainState* state) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir + ": " + ec.message());

  auto named = m.named_params();
  std::string blob;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : named) {
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["offset"] = blob.size();
    entry["size"] = t.size();
    tensors.push_back(entry);
    std::size_t bytes = static_cast<std::size_t>(t.size()) * sizeof(float);
    std::size_t off = blob.size();
    blob.resize(off + bytes);
    std::memcpy(blob.data() + off, t.data(), bytes);
  }
  nlohmann::json manifest{{"format", "wad-checkpoint"},
                          {"version", 1},
                          {"dtype", "f32"},
                          {"checksum", hex64(fnv1a64(blob.data(), blob.size()))},
                          {"tensors", tensors}};
  write_file(dir + "/weights.bin", blob);
  write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
  write_file(dir + "/config.json", config_to_json_text(cfg) + "\n");
  m.url_vocab.save(dir + "/url_vocab.txt");
  m.param_vocab.save(dir + "/param_vocab.txt");
  m.char_vocab.save(dir + "/char_vocab.json");

  if (opt && state) {
    std::string ob;
    for (const auto& slot : opt->slots()) {
      std::size_t mb = slot.m.size() * sizeof(float);
      std::size_t off = ob.size();
      ob.resize(off + 2 * mb);
      std::memcpy(ob.data() + off, slot.m.data(), mb);
      std::memcpy(ob.data() + off + mb, slot.v.data(), mb);
    }
    write_file(dir + "/optimizer.bin", ob);
    nlohmann::json ts{{"optimizer_step", state->optimizer_step},
                      {"epochs_done", state->epochs_done},
                      {"total_steps", state->total_steps},
                      {"optimizer_checksum", hex64(fnv1a64(ob.data(), ob.size()))}};
    write_file(dir + "/train_state.json", ts.dump(2) + "\n");
  }
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  RunConfig cfg = config_load(dir + "/config.json");
  tok::Vocab url_vocab = tok::Vocab::load(dir + "/url_vocab.txt");
  tok::Vocab param_vocab = tok::Vocab::load(dir + "/param_vocab.txt");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir + "/manifest.json"));
  } catch (const std::exception& e) {
    fail(ErrorCode::IoFailure, std::string("bad manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "wad-checkpoint")
    fail(ErrorCode::UnknownFormat, dir + " is not a checkpoint directory");

  std::string blob = read_file(dir + "/weights.bin");
  if (hex64(fnv1a64(blob.data(), blob.size())) != manifest.value("checksum", ""))
    fail(ErrorCode::ChecksumMismatch, "weights.bin does not match manifest checksum");

  LoadedCheckpoint lc{build_detector<float>(cfg.model, std::move(url_vocab),
                                            std::move(param_vocab), 0),
                      cfg};
  lc.model.char_vocab = tok::CharVocab::load(dir + "/char_vocab.json");

  std::unordered_map<std::string, nn::Tensor> by_name;
  for (auto& [name, t] : lc.model.named_params()) by_name.emplace(name, t);
  for (const auto& entry : manifest.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    auto it = by_name.find(name);
    if (it == by_name.end())
      fail(ErrorCode::UnknownFormat, "checkpoint tensor has no slot in model: " + name);
    std::size_t offset = entry.at("offset").get<std::size_t>();
    int64_t size = entry.at("size").get<int64_t>();
    if (size != it->second.size())
      fail(ErrorCode::ShapeMismatch, "checkpoint tensor size mismatch for " + name);
    if (offset + std::size_t(size) * sizeof(float) > blob.size())
      fail(ErrorCode::UnknownFormat, "checkpoint tensor outside blob: " + name);
    std::memcpy(it->second.data(), blob.data() + offset, std::size_t(size) * sizeof(float));
  }
  return lc;
}

std::optional<TrainState> load_train_state(const std::string& dir) {
  if (!fs::exists(dir + "/train_state.json")) return std::nullopt;
  nlohmann::json ts;
  try {
    ts = nlohmann::json::parse(read_file(dir + "/train_state.json"));
  } catch (const std::exception& e) {
    fail(ErrorCode::IoFailure, std::string("bad train_state.json: ") + e.what());
  }
  TrainState out;
  out.optimizer_step = ts.value("optimizer_step", 0L);
  out.epochs_done = ts.value("epochs_done", 0);
  out.total_steps = ts.value("total_steps", 0L);
  return out;
}

bool load_optimizer_state(const std::string& dir, const DetectorModel& m, nn::AdamWT<float>& opt) {
  if (!fs::exists(dir + "/optimizer.bin")) return false;
  std::string ob = read_file(dir + "/optimizer.bin");
  auto params = m.parameters();
  opt.attach(params);
  std::size_t off = 0;
  for (auto& slot : opt.slots()) {
    std::size_t mb = slot.m.size() * sizeof(float);
    if (off + 2 * mb > ob.size())
      fail(ErrorCode::ChecksumMismatch, "optimizer.bin truncated");
    std::memcpy(slot.m.data(), ob.data() + off, mb);
    std::memcpy(slot.v.data(), ob.data() + off + mb, mb);
    off += 2 * mb;
  }
  if (off != ob.size()) fail(ErrorCode::ChecksumMismatch, "optimizer.bin size mismatch");
  return true;
}

}  // namespace wad::model
