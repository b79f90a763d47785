#include "tok/vocab.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace wad::tok {

Vocab Vocab::with_specials() {
  Vocab v;
  v.add(kPad);
  v.add(kUnk);
  v.add(kCls);
  v.add(kSep);
  return v;
}

int Vocab::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  int id = size();
  id_to_token_.push_back(token);
  token_to_id_.emplace(token, id);
  return id;
}

int Vocab::lookup(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? -1 : it->second;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write vocab: " + path);
  for (const auto& t : id_to_token_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read vocab: " + path);
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.add(line);
  }
  if (v.size() < 4 || v.token(0) != kPad || v.token(1) != kUnk || v.token(2) != kCls ||
      v.token(3) != kSep)
    fail(ErrorCode::IoFailure, "vocab file missing special tokens: " + path);
  return v;
}

CharVocab::CharVocab() {
  for (uint32_t cp = 0; cp < 256; ++cp) map_[cp] = static_cast<int>(cp);
  for (uint32_t cp = 0x100; cp <= 0x19D; ++cp) map_[cp] = static_cast<int>(256 + cp - 0x100);
}

int CharVocab::id_of(uint32_t cp) const {
  auto it = map_.find(cp);
  return it == map_.end() ? unk_id() : it->second;
}

void CharVocab::save(const std::string& path) const {
  nlohmann::json map = nlohmann::json::object();
  for (const auto& [cp, id] : map_) map[std::to_string(cp)] = id;
  nlohmann::json j{{"size", kSize}, {"unk_id", unk_id()}, {"pad_id", pad_id()}, {"map", map}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write char vocab: " + path);
  out << j.dump(2) << '\n';
}

CharVocab CharVocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read char vocab: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::IoFailure, std::string("bad char vocab json: ") + e.what());
  }
  CharVocab cv;
  cv.map_.clear();
  for (const auto& [key, val] : j.at("map").items())
    cv.map_[static_cast<uint32_t>(std::stoul(key))] = val.get<int>();
  return cv;
}

}  // namespace wad::tok
