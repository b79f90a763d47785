#include "data/synthetic.hpp"

#include <array>

#include "error.hpp"
#include "nn/rng.hpp"

namespace wad::data {
namespace {

using nn::Rng;

const std::array<const char*, 12> kPathTemplates{
    "/shop/item/{}/view",    "/shop/search",        "/blog/{}",
    "/blog/{}/comments",     "/account/login",      "/account/profile",
    "/cart/checkout",        "/api/v1/users/{}",    "/api/v1/orders/{}",
    "/static/docs/guide",    "/tienda/publico/productos", "/forum/thread/{}"};
// Templates attackers favor in this corpus; biases the URL channel without
// touching the per-parameter ground truth.
const std::array<int, 4> kAttackBiasedPaths{1, 4, 7, 10};

const std::array<const char*, 16> kKeys{"id",    "name", "q",     "page",    "sort", "lang",
                                        "price", "color", "token", "user",   "email", "category",
                                        "ref",   "session", "qty", "filter"};

const std::array<const char*, 8> kNames{"john", "alice", "bob", "maria",
                                        "carlos", "wei", "anna", "luis"};
const std::array<const char*, 10> kWords{"shoes", "books", "red",   "blue",  "discount",
                                         "guide", "test",  "hello", "promo", "summer sale"};

const std::array<const char*, 5> kXss{
    "<script>alert(1)</script>", "alert('xss')", "<img src=x onerror=alert(1)>",
    "\"><script>alert(document.cookie)</script>", "javascript:alert(1)//"};
const std::array<const char*, 6> kSqli{
    "' or 'a'='a", "1' OR '1'='1' -- ", "' UNION SELECT username,password FROM users--",
    "admin' #", "1; DROP TABLE users--", "or 'a='a'"};
const std::array<const char*, 5> kCmdi{
    "; cat /etc/passwd", "| id", "`whoami`", "&& uname -a", "; ping -c 3 127.0.0.1"};
const std::array<const char*, 4> kTraversal{
    "../../../../etc/passwd", "..%2f..%2f..%2fetc%2fpasswd", "....//....//etc/passwd",
    "../../../windows/system32/config/sam"};

bool unreserved(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '-' || c == '.' || c == '_' || c == '~' || c == '/';
}

std::string percent_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (unreserved(char(c))) {
      out.push_back(char(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

std::string benign_value(Rng& rng) {
  switch (rng.below(8)) {
    case 0: return std::to_string(1 + rng.below(9999));
    case 1: return kNames[rng.below(kNames.size())];
    case 2: return kWords[rng.below(kWords.size())];
    case 3: {
      std::string t;
      for (int i = 0; i < 12; ++i) t.push_back("0123456789abcdef"[rng.below(16)]);
      return t;
    }
    case 4: return std::string(kNames[rng.below(kNames.size())]) + "@example.com";
    case 5: return std::to_string(1 + rng.below(99)) + "." + std::to_string(rng.below(100));
    case 6: return "img/logo" + std::to_string(rng.below(10)) + ".png";
    default: return "2024-0" + std::to_string(1 + rng.below(9)) + "-" + std::to_string(10 + rng.below(18));
  }
}

std::string attack_value(Rng& rng) {
  switch (rng.below(4)) {
    case 0: return kXss[rng.below(kXss.size())];
    case 1: return kSqli[rng.below(kSqli.size())];
    case 2: return kCmdi[rng.below(kCmdi.size())];
    default: return kTraversal[rng.below(kTraversal.size())];
  }
}

std::string instantiate_path(const std::string& tmpl, Rng& rng) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out += std::to_string(1 + rng.below(500));
      ++i;
    } else {
      out.push_back(tmpl[i]);
    }
  }
  return out;
}

struct Sample {
  std::string raw;
  int label;
  int gt_param;
};

Sample make_sample(Rng& rng, bool malicious) {
  int path_idx;
  if (malicious && rng.uniform() < 0.6)
    path_idx = kAttackBiasedPaths[rng.below(kAttackBiasedPaths.size())];
  else
    path_idx = int(rng.below(kPathTemplates.size()));
  std::string path = instantiate_path(kPathTemplates[path_idx], rng);

  int n_params = 2 + int(rng.below(7));  // 2..8
  std::vector<int> key_ids;
  while (static_cast<int>(key_ids.size()) < n_params) {
    int k = int(rng.below(kKeys.size()));
    bool dup = false;
    for (int existing : key_ids) dup |= (existing == k);
    if (!dup) key_ids.push_back(k);
  }
  std::vector<std::pair<std::string, std::string>> params;
  for (int k : key_ids) params.emplace_back(kKeys[k], benign_value(rng));

  int gt = -1;
  if (malicious) {
    gt = int(rng.below(params.size()));
    std::string payload = attack_value(rng);
    // occasionally pre-encode once more; recursive decoding unwraps it
    if (rng.uniform() < 0.2) payload = percent_encode(payload);
    params[gt].second = payload;
  }

  std::string form;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) form += '&';
    form += percent_encode(params[i].first) + "=" + percent_encode(params[i].second);
  }

  bool post = rng.uniform() < 0.4;
  Sample s;
  s.label = malicious ? 1 : 0;
  s.gt_param = gt;
  if (post) {
    s.raw = "POST " + path + " HTTP/1.1\r\nHost: shop.example.com\r\n" +
            "Content-Type: application/x-www-form-urlencoded\r\n\r\n" + form;
  } else {
    s.raw = "GET " + path + "?" + form + " HTTP/1.1\r\nHost: shop.example.com\r\n\r\n";
  }
  return s;
}

std::vector<Sample> make_samples(long n, uint64_t seed) {
  if (n < 10) fail(ErrorCode::ConfigError, "synthetic corpus needs n >= 10");
  Rng rng(seed);
  std::vector<Sample> samples;
  samples.reserve(n);
  long benign = n / 2;
  for (long i = 0; i < n; ++i) samples.push_back(make_sample(rng, i >= benign));
  rng.shuffle(samples.begin(), samples.end());
  return samples;
}

}  // namespace

Dataset generate_synthetic(long n, uint64_t seed) {
  Dataset ds;
  ds.provenance = "synthetic";
  for (auto& s : make_samples(n, seed)) {
    Record rec;
    rec.req = http::parse_to_request(s.raw);
    rec.label = s.label;
    rec.req.label = s.label;
    rec.gt_param = s.gt_param;
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

std::string synthetic_raw_corpus(long n, uint64_t seed) {
  std::string out;
  for (auto& s : make_samples(n, seed)) {
    out += s.raw;
    out += "\n---\n";
  }
  return out;
}

}  // namespace wad::data
