#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "error.hpp"
#include "http/request.hpp"
#include "nn/rng.hpp"

using namespace wad::http;
using wad::Error;
using wad::ErrorCode;

TEST_CASE("request line and headers split") {
  auto req = parse_request("GET /a?x=1 HTTP/1.1\r\nHost: h\r\n\r\n");
  CHECK(req.method == "GET");
  CHECK(req.target == "/a?x=1");
  CHECK(req.version == "HTTP/1.1");
  REQUIRE(req.headers.size() == 1);
  CHECK(req.headers[0].first == "Host");
  CHECK(req.headers[0].second == "h");
  CHECK(req.body.empty());
}

TEST_CASE("body follows the blank line") {
  auto req = parse_request(
      "POST /p HTTP/1.1\r\nContent-Type: application/x-www-form-urlencoded\r\n\r\nid=2&b=3");
  CHECK(req.body == "id=2&b=3");
}

TEST_CASE("degenerate input raises MalformedRequestLine") {
  CHECK_THROWS_AS(parse_request("GARBAGE"), Error);
  try {
    parse_request("GARBAGE");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedRequestLine);
  }
}

TEST_CASE("header without colon raises MalformedHeader") {
  try {
    parse_request("GET / HTTP/1.1\r\nBadHeader\r\n\r\n");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedHeader);
  }
}

TEST_CASE("absolute-form target reduces to origin form") {
  auto req = parse_request("GET http://localhost:8080/x?a=1 HTTP/1.1\n\n");
  CHECK(req.target == "/x?a=1");
}

TEST_CASE("LF-only requests parse") {
  auto req = parse_request("GET / HTTP/1.1\nHost: h\n\nbody");
  CHECK(req.headers.size() == 1);
  CHECK(req.body == "body");
}

TEST_CASE("normalize_url collapses slashes and lowercases") {
  CHECK(normalize_url("GET", "//tienda1//publico/index.jsp") == "get /tienda1/publico/index.jsp");
  CHECK(normalize_url("POST", "/A/B") == "post /a/b");
  CHECK(normalize_url("DELETE", "") == "delete /");
}

TEST_CASE("normalize_url is idempotent on its path portion") {
  wad::nn::Rng rng(9);
  const std::string chars = "/aB/c//D1%?_";
  for (int it = 0; it < 500; ++it) {
    std::string path;
    for (uint64_t i = 0, n = rng.below(20); i < n; ++i) path.push_back(chars[rng.below(chars.size())]);
    std::string once = normalize_url("GET", path);
    std::string path_once = once.substr(4);  // strip "get "
    CHECK(normalize_url("GET", path_once) == once);
    CHECK(once.find("//") == std::string::npos);
  }
}

TEST_CASE("query parameters split and decode") {
  auto req = parse_request("GET /s?id=2&name=John%20Smith HTTP/1.1\n\n");
  auto params = extract_parameters(req);
  REQUIRE(params.size() == 2);
  CHECK(params[0] == Parameter{"id", "2", ParamSource::Query});
  CHECK(params[1] == Parameter{"name", "John Smith", ParamSource::Query});
}

TEST_CASE("form body decodes the paper's SQLi sample") {
  auto req = parse_request(
      "POST /p HTTP/1.1\nContent-Type: application/x-www-form-urlencoded\n\nq=%27or+%27a%3D%27a%27");
  auto params = extract_parameters(req);
  REQUIRE(params.size() == 2);  // body param + content-type header param
  CHECK(params[0] == Parameter{"q", "'or 'a='a'", ParamSource::Body});
  CHECK(params[1].key == "content-type");
}

TEST_CASE("segment without '=' becomes key with empty value") {
  auto req = parse_request("GET /s?flag HTTP/1.1\n\n");
  auto params = extract_parameters(req);
  REQUIRE(params.size() == 1);
  CHECK(params[0] == Parameter{"flag", "", ParamSource::Query});
}

TEST_CASE("empty keys are dropped, duplicates kept") {
  auto req = parse_request("GET /s?=v&a=1&a=2 HTTP/1.1\n\n");
  auto params = extract_parameters(req);
  REQUIRE(params.size() == 2);
  CHECK(params[0].value == "1");
  CHECK(params[1].value == "2");
}

TEST_CASE("parameter multiset is invariant under query segment order") {
  auto norm = [](std::vector<Parameter> ps) {
    std::sort(ps.begin(), ps.end(), [](const Parameter& a, const Parameter& b) {
      return std::tie(a.key, a.value) < std::tie(b.key, b.value);
    });
    return ps;
  };
  auto a = extract_parameters(parse_request("GET /s?x=1&y=2&z=3 HTTP/1.1\n\n"));
  auto b = extract_parameters(parse_request("GET /s?z=3&x=1&y=2 HTTP/1.1\n\n"));
  CHECK(norm(a) == norm(b));
}

TEST_CASE("configured header subset becomes parameters") {
  auto req = parse_request(
      "GET / HTTP/1.1\nUser-Agent: Bot%201\nCookie: sid=1\nX-Ignored: zz\n\n");
  auto params = extract_parameters(req);
  REQUIRE(params.size() == 2);
  CHECK(params[0] == Parameter{"user-agent", "Bot 1", ParamSource::Header});
  CHECK(params[1] == Parameter{"cookie", "sid=1", ParamSource::Header});
}

TEST_CASE("build_parsed_request composes url and params") {
  auto p1 = parse_to_request("GET //x?a=1 HTTP/1.1\n\n");
  CHECK(p1.url == "get /x");
  REQUIRE(p1.params.size() == 1);
  CHECK(p1.params[0] == Parameter{"a", "1", ParamSource::Query});

  auto p2 = parse_to_request("POST /p HTTP/1.1\n\nk=v");
  CHECK(p2.url == "post /p");
  REQUIRE(p2.params.size() == 1);
  CHECK(p2.params[0] == Parameter{"k", "v", ParamSource::Body});

  auto p3 = parse_to_request("GET /bare HTTP/1.1\n\n");
  CHECK(p3.url == "get /bare");
  CHECK(p3.params.empty());
}

TEST_CASE("record splitting on --- lines") {
  std::string file =
      "GET /a HTTP/1.1\n\n---\nPOST /b HTTP/1.1\n\nk=v\n---\n\n---\nGET /c HTTP/1.1\n\n";
  auto records = split_records(file);
  REQUIRE(records.size() == 3);
  CHECK(parse_to_request(records[0]).url == "get /a");
  CHECK(parse_to_request(records[1]).params.size() == 1);
  CHECK(parse_to_request(records[2]).url == "get /c");
}
