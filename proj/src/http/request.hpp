#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wad::http {

enum class ParamSource { Query, Body, Header };

const char* param_source_name(ParamSource s);
std::optional<ParamSource> param_source_from_name(const std::string& name);

// Fully decoded key-value pair extracted from query string, form body or a
// configured header.
struct Parameter {
  std::string key;
  std::string value;
  ParamSource source = ParamSource::Query;

  bool operator==(const Parameter&) const = default;
};

struct RawRequest {
  std::string method;
  std::string target;   // path plus optional "?query"
  std::string version;
  std::vector<std::pair<std::string, std::string>> headers;  // order preserved
  std::string body;
};

// Model-facing view of a request: a normalized, method-prefixed URL and an
// unordered parameter list.
struct ParsedRequest {
  std::string url;
  std::vector<Parameter> params;
  std::optional<int> label;  // 0 benign, 1 malicious
};

struct ExtractOptions {
  // Headers whose values become parameters (case-insensitive names).
  std::vector<std::string> header_subset = {"User-Agent", "Cookie", "Referer", "Content-Type"};
};

// Splits CRLF- or LF-delimited HTTP/1.1-style text into request line, headers
// and body. Absolute-form targets are reduced to origin form.
// Throws MalformedRequestLine / MalformedHeader.
RawRequest parse_request(const std::string& raw);

// "<method lowercased> <path>" with slash runs collapsed and everything
// lowercased; empty path becomes "/".
std::string normalize_url(const std::string& method, const std::string& path);

std::vector<Parameter> extract_parameters(const RawRequest& req, const ExtractOptions& opt = {});

ParsedRequest build_parsed_request(const RawRequest& req, const ExtractOptions& opt = {});

// Convenience: parse + build in one step.
ParsedRequest parse_to_request(const std::string& raw, const ExtractOptions& opt = {});

// Splits a raw-request corpus (records separated by a line containing only
// "---") into record strings. Empty records are dropped.
std::vector<std::string> split_records(const std::string& file_contents);

}  // namespace wad::http
