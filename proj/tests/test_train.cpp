#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "data/synthetic.hpp"
#include "model/checkpoint.hpp"
#include "train/trainer.hpp"

using namespace wad;
using namespace wad::model;
using namespace wad::train;

namespace {

RunConfig smoke_config() {
  RunConfig cfg;
  cfg.model.url = {1, 32, 4, 64, 400, 24, 48};
  cfg.model.param = {1, 32, 4, 64, 600, 32, 64};
  cfg.model.fusion = {4, 64};
  cfg.model.dropout = 0.0;
  cfg.train.batch_size = 32;
  cfg.train.lr = 3e-3;
  cfg.train.weight_decay = 0.0;
  cfg.train.seed = 99;
  return cfg;
}

DetectorModel fresh_model(const RunConfig& cfg, const data::Dataset& train_set) {
  auto vocabs = build_vocabs(train_set, cfg.model);
  return build_detector<float>(cfg.model, std::move(vocabs.url), std::move(vocabs.param),
                               cfg.train.seed);
}

}  // namespace

TEST_CASE("a 32-sample batch is overfit to loss < 0.01 within 200 steps") {
  auto ds = data::generate_synthetic(32, 21);
  auto cfg = smoke_config();
  cfg.train.epochs = 200;  // one batch per epoch

  auto m = fresh_model(cfg, ds);
  nn::AdamWT<float> opt(0.9, 0.999, 1e-8, cfg.train.weight_decay);
  auto params = m.parameters();
  opt.attach(params);
  auto res = train_model(m, opt, ds, cfg.train);

  double best = 1e9;
  for (const auto& p : res.history) best = std::min(best, p.loss);
  CHECK(best < 0.01);
  CHECK(res.history.size() == 200);
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
  auto ds = data::generate_synthetic(64, 31);
  auto cfg = smoke_config();
  cfg.train.epochs = 2;

  auto run = [&]() {
    auto m = fresh_model(cfg, ds);
    nn::AdamWT<float> opt(0.9, 0.999, 1e-8, cfg.train.weight_decay);
    auto params = m.parameters();
    opt.attach(params);
    auto res = train_model(m, opt, ds, cfg.train);
    return std::make_pair(m, res);
  };
  auto [m1, r1] = run();
  auto [m2, r2] = run();
  auto p1 = m1.named_params(), p2 = m2.named_params();
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].second.vals() == p2[i].second.vals());
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i)
    CHECK(r1.history[i].loss == r2.history[i].loss);
}

TEST_CASE("sharded evaluation merges to the single-thread counts") {
  auto ds = data::generate_synthetic(150, 41);
  auto cfg = smoke_config();
  auto m = fresh_model(cfg, ds);
  auto a = evaluate_model(m, ds, 1);
  auto b = evaluate_model(m, ds, 3);
  CHECK(a.tp == b.tp);
  CHECK(a.fp == b.fp);
  CHECK(a.tn == b.tn);
  CHECK(a.fn == b.fn);
}

TEST_CASE("run_training writes checkpoint, loss history and metrics; resume continues") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "wad_train_run";
  fs::remove_all(dir);
  auto ds = data::generate_synthetic(80, 51);
  auto cfg = smoke_config();
  cfg.train.epochs = 2;

  auto result = run_training(cfg, ds, dir.string());
  CHECK(fs::exists(dir / "checkpoint" / "weights.bin"));
  CHECK(fs::exists(dir / "checkpoint" / "manifest.json"));
  CHECK(fs::exists(dir / "checkpoint" / "url_vocab.txt"));
  CHECK(fs::exists(dir / "loss.csv"));
  CHECK(fs::exists(dir / "metrics.json"));
  CHECK(result.train.epochs_done == 2);
  long steps_after_2 = result.train.steps_done;
  CHECK(steps_after_2 > 0);

  // resume for two more epochs: the step counter keeps counting
  auto cfg2 = cfg;
  cfg2.train.epochs = 4;
  auto dir2 = fs::temp_directory_path() / "wad_train_run2";
  fs::remove_all(dir2);
  auto resumed = run_training(cfg2, ds, dir2.string(), (dir / "checkpoint").string());
  CHECK(resumed.train.steps_done > steps_after_2);
  auto state = load_train_state(dir2.string() + "/checkpoint");
  REQUIRE(state.has_value());
  CHECK(state->optimizer_step == resumed.train.steps_done);
  CHECK(state->epochs_done == 4);

  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("checkpoints round-trip and detect corruption") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "wad_ckpt_test";
  fs::remove_all(dir);
  auto ds = data::generate_synthetic(40, 61);
  auto cfg = smoke_config();
  auto m = fresh_model(cfg, ds);
  save_checkpoint(m, cfg, dir.string());

  auto loaded = load_checkpoint(dir.string());
  nn::Rng rng(0);
  nn::NoGradGuard ng;
  for (int i = 0; i < 5; ++i) {
    auto a = forward(ds.records[i].req, m, rng);
    auto b = forward(ds.records[i].req, loaded.model, rng);
    CHECK(a.probs[0] == doctest::Approx(b.probs[0]).epsilon(1e-7));
  }

  // flip one byte in the blob
  {
    std::fstream blob(dir / "weights.bin", std::ios::in | std::ios::out | std::ios::binary);
    blob.seekp(100);
    char c;
    blob.seekg(100);
    blob.get(c);
    blob.seekp(100);
    blob.put(char(c ^ 0x5A));
  }
  try {
    load_checkpoint(dir.string());
    FAIL("expected ChecksumMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ChecksumMismatch);
  }
  fs::remove_all(dir);
}

TEST_CASE("ablation suites emit the documented variants") {
  auto ds = data::generate_synthetic(60, 71);
  auto cfg = smoke_config();
  cfg.model.url.layers = 1;
  cfg.model.param.layers = 1;
  cfg.train.epochs = 1;

  auto payload = run_ablation("payload_order", cfg, ds);
  REQUIRE(payload.size() == 2);
  CHECK(payload[0].variant == "set_fusion");
  CHECK(payload[1].variant == "flat");
  CHECK(payload[0].permuted.has_value());

  auto channel = run_ablation("channel", cfg, ds);
  REQUIRE(channel.size() == 3);
  CHECK(channel[0].variant == "dual");

  CHECK_THROWS_AS(run_ablation("nonsense", cfg, ds), Error);

  auto csv = ablation_csv(payload);
  CHECK(csv.find("variant,accuracy,precision,recall,f1,permuted_accuracy,permuted_f1") == 0);
  CHECK(csv.find("set_fusion,") != std::string::npos);
}
