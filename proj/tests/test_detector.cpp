#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "data/synthetic.hpp"
#include "model/detector.hpp"
#include "nn/grad_check.hpp"
#include "train/trainer.hpp"

using namespace wad;
using namespace wad::model;
using nn::Rng;

namespace {

DetectorConfig toy_config(int hidden = 32, int layers = 1) {
  DetectorConfig cfg;
  cfg.url = {layers, hidden, 4, 2 * hidden, 500, 24, 48};
  cfg.param = {layers, hidden, 4, 2 * hidden, 800, 32, 64};
  cfg.fusion = {4, 2 * hidden};
  cfg.dropout = 0.0;
  return cfg;
}

DetectorModel toy_model(uint64_t seed = 7, DetectorConfig cfg = toy_config()) {
  auto ds = data::generate_synthetic(60, 11);
  auto vocabs = train::build_vocabs(ds, cfg);
  return build_detector<float>(cfg, std::move(vocabs.url), std::move(vocabs.param), seed);
}

http::ParsedRequest request_with(std::vector<std::pair<std::string, std::string>> kv,
                                 const std::string& url = "get /shop/search") {
  http::ParsedRequest req;
  req.url = url;
  for (auto& [k, v] : kv) req.params.push_back({k, v, http::ParamSource::Query});
  return req;
}

}  // namespace

TEST_CASE("encode_url emits a hidden-width vector and is deterministic") {
  auto m = toy_model();
  Rng rng(0);
  auto f1 = encode_url(std::string("get /a/b"), m, rng);
  CHECK(f1.shape() == std::vector<int>{32});
  auto f2 = encode_url(std::string("get /a/b"), m, rng);
  for (int j = 0; j < 32; ++j) CHECK(f1.vals()[j] == f2.vals()[j]);
}

TEST_CASE("urls equal after normalization encode identically") {
  auto m = toy_model();
  Rng rng(0);
  auto a = http::parse_to_request("GET /A//B HTTP/1.1\n\n");
  auto b = http::parse_to_request("get /a/b HTTP/1.1\n\n");
  CHECK(a.url == b.url);
  auto fa = encode_url(a.url, m, rng);
  auto fb = encode_url(b.url, m, rng);
  for (int j = 0; j < 32; ++j) CHECK(fa.vals()[j] == fb.vals()[j]);
}

TEST_CASE("encode_param is independent of other parameters") {
  auto m = toy_model();
  Rng rng(0);
  http::Parameter p{"q", "alert('xss')", http::ParamSource::Query};
  auto alone = encode_param(p, m, rng);
  // encode within a multi-parameter forward pass; feature must be unchanged
  auto req = request_with({{"id", "2"}, {"q", "alert('xss')"}, {"page", "1"}});
  std::vector<nn::Tensor> feats;
  for (const auto& param : req.params) feats.push_back(encode_param(param, m, rng));
  for (int j = 0; j < 32; ++j)
    CHECK(alone.vals()[j] == doctest::Approx(feats[1].vals()[j]).epsilon(1e-6));
}

TEST_CASE("single-parameter fusion has attention [[1.0]]") {
  auto m = toy_model();
  Rng rng(0);
  auto f = encode_param({"id", "2", http::ParamSource::Query}, m, rng);
  auto fused = fuse_params<float>({f}, m, rng);
  REQUIRE(fused.record.n == 1);
  for (int h = 0; h < fused.record.heads; ++h)
    CHECK(fused.record.weight(h, 0, 0) == doctest::Approx(1.0));
  CHECK(fused.f_payload.shape() == std::vector<int>{32});
}

TEST_CASE("empty payload falls back to the learned null vector") {
  auto m = toy_model();
  Rng rng(0);
  auto fused = fuse_params<float>({}, m, rng);
  CHECK(fused.record.empty());
  for (int j = 0; j < 32; ++j) CHECK(fused.f_payload.vals()[j] == m.null_payload.vals()[j]);

  auto pred = forward(request_with({}), m, rng);
  CHECK(pred.attention.empty());
  CHECK(pred.probs[0] + pred.probs[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("payload fusion is permutation invariant") {
  auto m = toy_model();
  Rng outer(123);
  for (int iter = 0; iter < 8; ++iter) {
    int n = 2 + int(outer.below(7));
    std::vector<std::pair<std::string, std::string>> kv;
    for (int i = 0; i < n; ++i)
      kv.emplace_back("k" + std::to_string(i), "v" + std::to_string(outer.below(1000)));
    auto req = request_with(kv);
    Rng rng(0);
    auto base = forward(req, m, rng);

    for (int rep = 0; rep < 3; ++rep) {
      auto perm_req = req;
      outer.shuffle(perm_req.params.begin(), perm_req.params.end());
      auto perm = forward(perm_req, m, rng);
      for (int j = 0; j < 32; ++j) {
        double a = base.f_payload.vals()[j], b = perm.f_payload.vals()[j];
        CHECK(std::abs(a - b) / std::max(1.0, std::abs(a) + std::abs(b)) < 1e-5);
      }
      if (std::abs(base.probs[0] - base.probs[1]) > 1e-4)
        CHECK(base.predicted == perm.predicted);
    }
  }
}

TEST_CASE("attention record is conjugated by the parameter permutation") {
  auto m = toy_model();
  Rng rng(0);
  auto req = request_with({{"a", "1"}, {"b", "2"}, {"c", "3"}, {"d", "4"}});
  auto base = forward(req, m, rng);

  std::vector<int> perm{2, 0, 3, 1};
  auto preq = req;
  for (std::size_t i = 0; i < perm.size(); ++i) preq.params[i] = req.params[perm[i]];
  auto permuted = forward(preq, m, rng);
  for (int h = 0; h < base.attention.heads; ++h)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(permuted.attention.weight(h, i, j) ==
              doctest::Approx(base.attention.weight(h, perm[i], perm[j])).epsilon(1e-4));
}

TEST_CASE("classifier fixed points") {
  auto m = toy_model();
  std::fill(m.cls_w.vals().begin(), m.cls_w.vals().end(), 0.0f);
  std::fill(m.cls_b.vals().begin(), m.cls_b.vals().end(), 0.0f);
  Rng rng(0);
  auto pred = forward(request_with({{"id", "2"}}), m, rng);
  CHECK(pred.probs[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(pred.probs[1] == doctest::Approx(0.5).epsilon(1e-6));

  m.cls_b.vals()[1] = 10.0f;
  auto pred2 = forward(request_with({{"id", "2"}}), m, rng);
  CHECK(pred2.predicted == 1);
  CHECK(pred2.probs[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("url_only ignores payloads, payload_only ignores urls") {
  auto cfg = toy_config();
  cfg.channel_mode = ChannelMode::UrlOnly;
  auto ds = data::generate_synthetic(60, 11);
  auto vocabs = train::build_vocabs(ds, cfg);
  auto m = build_detector<float>(cfg, vocabs.url, vocabs.param, 7);
  Rng rng(0);
  auto p1 = forward(request_with({{"id", "2"}}), m, rng);
  auto p2 = forward(request_with({{"q", "alert('xss')"}, {"x", "y"}}), m, rng);
  CHECK(p1.probs[0] == doctest::Approx(p2.probs[0]).epsilon(1e-7));
  for (int j = 0; j < 32; ++j) CHECK(p1.f_payload.vals()[j] == 0.0f);

  cfg.channel_mode = ChannelMode::PayloadOnly;
  auto m2 = build_detector<float>(cfg, vocabs.url, vocabs.param, 7);
  auto q1 = forward(request_with({{"id", "2"}}, "get /a"), m2, rng);
  auto q2 = forward(request_with({{"id", "2"}}, "get /completely/else"), m2, rng);
  CHECK(q1.probs[0] == doctest::Approx(q2.probs[0]).epsilon(1e-7));
  for (int j = 0; j < 32; ++j) CHECK(q1.f_url.vals()[j] == 0.0f);
}

TEST_CASE("flat payload mode skips fusion; single param matches encode_param") {
  auto cfg = toy_config();
  cfg.payload_mode = PayloadMode::Flat;
  auto ds = data::generate_synthetic(60, 11);
  auto vocabs = train::build_vocabs(ds, cfg);
  auto m = build_detector<float>(cfg, vocabs.url, vocabs.param, 7);
  Rng rng(0);
  auto pred = forward(request_with({{"a", "1"}, {"b", "2"}}), m, rng);
  CHECK(pred.attention.empty());
  CHECK(pred.probs[0] + pred.probs[1] == doctest::Approx(1.0).epsilon(1e-6));

  http::Parameter lone{"q", "books", http::ParamSource::Query};
  auto flat_one = encode_flat_payload<float>({lone}, m, rng, false);
  auto enc_one = encode_param(lone, m, rng);
  for (int j = 0; j < 32; ++j)
    CHECK(flat_one.vals()[j] == doctest::Approx(enc_one.vals()[j]).epsilon(1e-6));
}

TEST_CASE("parameter overflow beyond max_params is dropped and counted") {
  auto cfg = toy_config();
  cfg.max_params = 4;
  auto ds = data::generate_synthetic(60, 11);
  auto vocabs = train::build_vocabs(ds, cfg);
  auto m = build_detector<float>(cfg, vocabs.url, vocabs.param, 7);
  Rng rng(0);
  std::vector<std::pair<std::string, std::string>> kv;
  for (int i = 0; i < 9; ++i) kv.emplace_back("k" + std::to_string(i), "v");
  auto pred = forward(request_with(kv), m, rng);
  CHECK(pred.dropped_params == 5);
  CHECK(pred.attention.n == 4);
}

TEST_CASE("end-to-end gradients through the full toy detector") {
  DetectorConfig cfg;
  cfg.url = {1, 8, 2, 16, 150, 12, 20};
  cfg.param = {1, 8, 2, 16, 200, 12, 20};
  cfg.fusion = {2, 16};
  cfg.dropout = 0.0;
  auto ds = data::generate_synthetic(20, 3);
  auto vocabs = train::build_vocabs(ds, cfg);
  auto m = build_detector<double>(cfg, vocabs.url, vocabs.param, 5);

  auto req = request_with({{"id", "2"}, {"q", "alert(1)"}});
  Rng rng(0);
  std::vector<nn::TensorT<double>> inputs;
  for (auto& [name, t] : m.named_params()) inputs.push_back(t);
  auto err = nn::grad_check<double>(
      [&]() {
        Rng r(0);
        auto pred = forward(req, m, r, false);
        return nn::cross_entropy(pred.prob_tensor, 1);
      },
      inputs, 1e-5);
  CHECK(err < 1e-3);
}
