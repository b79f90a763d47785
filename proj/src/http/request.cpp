#include "http/request.hpp"

#include <algorithm>
#include <cctype>

#include "error.hpp"
#include "text/percent.hpp"
#include "text/unicode.hpp"

namespace wad::http {
namespace {

bool iequals(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (text::ascii_lower(a[i]) != text::ascii_lower(b[i])) return false;
  return true;
}

bool icontains(const std::string& haystack, const std::string& needle) {
  std::string h = text::ascii_lower(haystack), n = text::ascii_lower(needle);
  return h.find(n) != std::string::npos;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Absolute-form targets ("http://host/path?q") reduce to origin form.
std::string strip_authority(const std::string& target) {
  std::string lower = text::ascii_lower(target);
  for (const char* scheme : {"http://", "https://"}) {
    if (lower.rfind(scheme, 0) == 0) {
      std::size_t path_start = target.find('/', std::string(scheme).size());
      return path_start == std::string::npos ? std::string("/") : target.substr(path_start);
    }
  }
  return target;
}

struct Line {
  std::string content;  // without terminator or trailing CR
  std::size_t next;     // offset just past the terminator
};

Line next_line(const std::string& raw, std::size_t pos) {
  std::size_t nl = raw.find('\n', pos);
  if (nl == std::string::npos) return {raw.substr(pos), raw.size()};
  std::size_t end = nl;
  if (end > pos && raw[end - 1] == '\r') --end;
  return {raw.substr(pos, end - pos), nl + 1};
}

}  // namespace

const char* param_source_name(ParamSource s) {
  switch (s) {
    case ParamSource::Query: return "query";
    case ParamSource::Body: return "body";
    case ParamSource::Header: return "header";
  }
  return "query";
}

std::optional<ParamSource> param_source_from_name(const std::string& name) {
  if (name == "query") return ParamSource::Query;
  if (name == "body") return ParamSource::Body;
  if (name == "header") return ParamSource::Header;
  return std::nullopt;
}

RawRequest parse_request(const std::string& raw) {
  RawRequest req;
  std::size_t pos = 0;
  Line line = next_line(raw, pos);
  pos = line.next;

  auto fields = split_ws(line.content);
  if (fields.size() < 3)
    fail(ErrorCode::MalformedRequestLine,
         "request line has fewer than 3 fields: \"" + line.content + "\"");
  req.method = fields.front();
  req.version = fields.back();
  std::string target;
  for (std::size_t i = 1; i + 1 < fields.size(); ++i) {
    if (i > 1) target += ' ';
    target += fields[i];
  }
  req.target = strip_authority(target);
  for (char c : req.method)
    if (static_cast<unsigned char>(c) <= 0x20 || static_cast<unsigned char>(c) == 0x7F)
      fail(ErrorCode::MalformedRequestLine, "method contains non-visible characters");
  if (req.target.empty() || (req.target[0] != '/' && req.target != "*"))
    fail(ErrorCode::MalformedRequestLine, "target must start with '/' or be '*': \"" + req.target + "\"");

  while (pos < raw.size()) {
    line = next_line(raw, pos);
    std::size_t line_start = pos;
    pos = line.next;
    if (line.content.empty()) {
      req.body = raw.substr(pos);
      return req;
    }
    std::size_t colon = line.content.find(':');
    if (colon == std::string::npos)
      fail(ErrorCode::MalformedHeader, "header line without ':' at offset " + std::to_string(line_start));
    std::string name = line.content.substr(0, colon);
    for (char c : name)
      if (static_cast<unsigned char>(c) < 0x21 || static_cast<unsigned char>(c) == 0x7F)
        fail(ErrorCode::MalformedHeader, "control character in header name");
    std::size_t vstart = colon + 1;
    while (vstart < line.content.size() && (line.content[vstart] == ' ' || line.content[vstart] == '\t'))
      ++vstart;
    req.headers.emplace_back(name, line.content.substr(vstart));
  }
  return req;
}

std::string normalize_url(const std::string& method, const std::string& path) {
  std::string collapsed;
  collapsed.reserve(path.size());
  for (char c : path) {
    if (c == '/' && !collapsed.empty() && collapsed.back() == '/') continue;
    collapsed.push_back(text::ascii_lower(c));
  }
  if (collapsed.empty()) collapsed = "/";
  return text::ascii_lower(method) + " " + collapsed;
}

namespace {

void split_form(const std::string& data, ParamSource source, std::vector<Parameter>& out) {
  std::size_t i = 0;
  while (i <= data.size()) {
    std::size_t amp = data.find('&', i);
    if (amp == std::string::npos) amp = data.size();
    std::string segment = data.substr(i, amp - i);
    i = amp + 1;
    if (segment.empty()) {
      if (i > data.size()) break;
      continue;
    }
    std::size_t eq = segment.find('=');
    std::string key = eq == std::string::npos ? segment : segment.substr(0, eq);
    std::string value = eq == std::string::npos ? std::string() : segment.substr(eq + 1);
    key = text::decode_value(key);
    value = text::decode_value(value);
    if (!key.empty()) out.push_back({std::move(key), std::move(value), source});
    if (i > data.size()) break;
  }
}

}  // namespace

std::vector<Parameter> extract_parameters(const RawRequest& req, const ExtractOptions& opt) {
  std::vector<Parameter> out;

  std::size_t qmark = req.target.find('?');
  if (qmark != std::string::npos)
    split_form(req.target.substr(qmark + 1), ParamSource::Query, out);

  const std::string* content_type = nullptr;
  for (const auto& [name, value] : req.headers)
    if (iequals(name, "Content-Type")) {
      content_type = &value;
      break;
    }
  bool form_body = false;
  if (!req.body.empty()) {
    if (content_type)
      form_body = icontains(*content_type, "application/x-www-form-urlencoded");
    else
      form_body = true;  // bare body is treated as form data
  }
  if (form_body) split_form(req.body, ParamSource::Body, out);

  for (const auto& [name, value] : req.headers) {
    bool selected = std::any_of(opt.header_subset.begin(), opt.header_subset.end(),
                                [&](const std::string& h) { return iequals(h, name); });
    if (!selected) continue;
    std::string key = text::ascii_lower(name);
    if (key.empty()) continue;
    out.push_back({std::move(key), text::decode_value(value), ParamSource::Header});
  }
  return out;
}

ParsedRequest build_parsed_request(const RawRequest& req, const ExtractOptions& opt) {
  ParsedRequest parsed;
  std::size_t qmark = req.target.find('?');
  std::string path = qmark == std::string::npos ? req.target : req.target.substr(0, qmark);
  parsed.url = normalize_url(req.method, path);
  parsed.params = extract_parameters(req, opt);
  return parsed;
}

ParsedRequest parse_to_request(const std::string& raw, const ExtractOptions& opt) {
  return build_parsed_request(parse_request(raw), opt);
}

std::vector<std::string> split_records(const std::string& file_contents) {
  std::vector<std::string> records;
  std::size_t record_start = 0;
  std::size_t pos = 0;
  auto flush = [&](std::size_t end) {
    std::string rec = file_contents.substr(record_start, end - record_start);
    // the terminator of the record's last line belongs to the framing
    if (!rec.empty() && rec.back() == '\n') {
      rec.pop_back();
      if (!rec.empty() && rec.back() == '\r') rec.pop_back();
    }
    if (rec.find_first_not_of(" \t\r\n") != std::string::npos) records.push_back(std::move(rec));
  };
  while (pos < file_contents.size()) {
    Line line = next_line(file_contents, pos);
    if (line.content == "---") {
      flush(pos);
      record_start = line.next;
    }
    pos = line.next;
  }
  flush(file_contents.size());
  return records;
}

}  // namespace wad::http
