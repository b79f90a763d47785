#include "train/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "model/traceability.hpp"

namespace wad::train {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  // splitmix-style stream separation
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  return z ^ (z >> 27);
}

}  // namespace

VocabPair build_vocabs(const data::Dataset& train_set, const model::DetectorConfig& cfg) {
  VocabPair vp;
  if (cfg.embedding_mode == model::EmbeddingMode::Char) {
    vp.url = tok::Vocab::with_specials();
    vp.param = tok::Vocab::with_specials();
    return vp;
  }
  std::vector<std::string> url_corpus, param_corpus;
  url_corpus.reserve(train_set.records.size());
  for (const auto& r : train_set.records) {
    url_corpus.push_back(r.req.url);
    for (const auto& p : r.req.params) param_corpus.push_back(model::parameter_text(p));
  }
  if (param_corpus.empty()) param_corpus.push_back("");
  if (cfg.embedding_mode == model::EmbeddingMode::Word) {
    vp.url = tok::train_word_vocab(url_corpus, cfg.url.vocab_target);
    vp.param = tok::train_word_vocab(param_corpus, cfg.param.vocab_target);
  } else {
    vp.url = tok::train_wordpiece(url_corpus, cfg.url.vocab_target);
    vp.param = tok::train_wordpiece(param_corpus, cfg.param.vocab_target);
  }
  return vp;
}

TrainResult train_model(model::DetectorModel& m, nn::AdamWT<float>& opt,
                        const data::Dataset& train_set, const model::TrainConfig& cfg,
                        const data::Dataset* eval_set, const model::TrainState* resume,
                        std::ostream* log) {
  cfg.validate();
  if (train_set.records.empty()) fail(ErrorCode::EmptyDataset, "empty training set");

  long n = train_set.size();
  long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  TrainResult res;
  res.total_steps = resume && resume->total_steps > 0 ? resume->total_steps
                                                      : long(cfg.epochs) * steps_per_epoch;
  long global_step = resume ? resume->optimizer_step : 0;
  int start_epoch = resume ? resume->epochs_done : 0;

  auto params = m.parameters();

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    nn::Rng shuffle_rng(mix_seed(cfg.seed, 1000 + epoch));
    nn::Rng dropout_rng(mix_seed(cfg.seed, 2000 + epoch));
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order.begin(), order.end());

    double epoch_loss = 0;
    long epoch_records = 0;
    for (long start = 0; start < n; start += cfg.batch_size) {
      long end = std::min(n, start + long(cfg.batch_size));
      for (auto& p : params) p.zero_grad();
      double batch_loss = 0;
      for (long bi = start; bi < end; ++bi) {
        const auto& rec = train_set.records[order[bi]];
        auto pred = model::forward(rec.req, m, dropout_rng, /*training=*/true);
        auto loss = nn::cross_entropy(pred.prob_tensor, rec.label);
        double lv = loss.item();
        if (!std::isfinite(lv))
          fail(ErrorCode::NonFiniteLoss,
               "non-finite loss at epoch " + std::to_string(epoch + 1) + " step " +
                   std::to_string(global_step) + " url=\"" + rec.req.url + "\"");
        batch_loss += lv;
        loss.backward();
      }
      long batch_n = end - start;
      float inv = 1.0f / float(batch_n);
      for (auto& p : params)
        for (auto& g : p.grad()) g *= inv;
      double lr = nn::lr_at(global_step, res.total_steps, cfg.lr, cfg.warmup_fraction);
      opt.step(params, lr);
      ++global_step;
      double mean_loss = batch_loss / double(batch_n);
      epoch_loss += batch_loss;
      epoch_records += batch_n;
      res.history.push_back({epoch + 1, global_step, mean_loss, lr});
    }

    EpochStat stat;
    stat.epoch = epoch + 1;
    stat.mean_loss = epoch_loss / double(epoch_records);
    if (eval_set) stat.eval = evaluate_model(m, *eval_set, cfg.threads);
    if (log) {
      (*log) << "epoch " << stat.epoch << " loss " << stat.mean_loss;
      if (stat.eval) (*log) << " test_f1 " << stat.eval->f1();
      (*log) << "\n";
    }
    res.epochs.push_back(stat);
    res.epochs_done = epoch + 1;
    res.steps_done = global_step;
    if (cfg.target_f1 > 0 && stat.eval && stat.epoch >= cfg.min_epochs &&
        stat.eval->f1() >= cfg.target_f1) {
      res.early_stopped = true;
      break;
    }
  }
  res.steps_done = global_step;
  return res;
}

namespace {

data::Metrics evaluate_range(const model::DetectorModel& m, const data::Dataset& ds,
                             std::size_t lo, std::size_t hi,
                             const std::vector<std::vector<http::Parameter>>* permuted) {
  nn::NoGradGuard ng;
  nn::Rng rng(0);  // dropout is off outside training; never consumed
  data::Metrics metrics;
  for (std::size_t i = lo; i < hi; ++i) {
    const auto& rec = ds.records[i];
    if (permuted) {
      http::ParsedRequest req = rec.req;
      req.params = (*permuted)[i];
      auto pred = model::forward(req, m, rng, false);
      metrics.add(rec.label, pred.predicted);
    } else {
      auto pred = model::forward(rec.req, m, rng, false);
      metrics.add(rec.label, pred.predicted);
    }
  }
  return metrics;
}

data::Metrics evaluate_impl(const model::DetectorModel& m, const data::Dataset& ds, int threads,
                            const std::vector<std::vector<http::Parameter>>* permuted) {
  std::size_t n = ds.records.size();
  if (threads <= 1 || n < 64) return evaluate_range(m, ds, 0, n, permuted);
  std::size_t t = std::min<std::size_t>(threads, n);
  std::vector<data::Metrics> parts(t);
  std::vector<std::thread> workers;
  std::size_t chunk = (n + t - 1) / t;
  for (std::size_t w = 0; w < t; ++w) {
    std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    workers.emplace_back([&, lo, hi, w]() { parts[w] = evaluate_range(m, ds, lo, hi, permuted); });
  }
  for (auto& th : workers) th.join();
  data::Metrics out;
  for (const auto& p : parts) out.merge(p);  // fixed order, integer counts
  return out;
}

}  // namespace

data::Metrics evaluate_model(const model::DetectorModel& m, const data::Dataset& ds, int threads) {
  return evaluate_impl(m, ds, threads, nullptr);
}

data::Metrics evaluate_model_permuted(const model::DetectorModel& m, const data::Dataset& ds,
                                      uint64_t seed, int threads) {
  std::vector<std::vector<http::Parameter>> permuted(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    permuted[i] = ds.records[i].req.params;
    nn::Rng rng(mix_seed(seed, i));
    rng.shuffle(permuted[i].begin(), permuted[i].end());
  }
  return evaluate_impl(m, ds, threads, &permuted);
}

double traceability_accuracy(const model::DetectorModel& m, const data::Dataset& ds,
                             long* evaluated) {
  nn::NoGradGuard ng;
  nn::Rng rng(0);
  long hits = 0, total = 0;
  for (const auto& rec : ds.records) {
    if (rec.gt_param < 0) continue;
    auto pred = model::forward(rec.req, m, rng, false);
    if (pred.attention.empty()) continue;
    auto report = model::build_trace_report(pred.attention);
    ++total;
    if (!report.ranking.empty() && report.ranking.front() == rec.gt_param) ++hits;
  }
  if (evaluated) *evaluated = total;
  return total ? double(hits) / double(total) : 0.0;
}

std::vector<AblationRow> run_ablation(const std::string& suite, model::RunConfig base,
                                      const data::Dataset& ds, std::ostream* log) {
  struct Variant {
    std::string name;
    std::function<void(model::RunConfig&)> apply;
  };
  std::vector<Variant> variants;
  bool permuted_eval = false;
  if (suite == "embedding") {
    for (const char* mode : {"hge", "wordpiece", "char", "word"})
      variants.push_back({mode, [mode](model::RunConfig& c) {
                            c.model.embedding_mode = model::embedding_mode_from_name(mode);
                          }});
  } else if (suite == "channel") {
    for (const char* mode : {"dual", "url_only", "payload_only"})
      variants.push_back({mode, [mode](model::RunConfig& c) {
                            c.model.channel_mode = model::channel_mode_from_name(mode);
                          }});
  } else if (suite == "payload_order") {
    permuted_eval = true;
    for (const char* mode : {"set_fusion", "flat"})
      variants.push_back({mode, [mode](model::RunConfig& c) {
                            c.model.payload_mode = model::payload_mode_from_name(mode);
                          }});
  } else {
    fail(ErrorCode::ConfigError, "unknown ablation suite: " + suite);
  }

  auto [train_set, test_set] = data::split_dataset(ds, base.train.seed);
  std::vector<AblationRow> rows;
  for (const auto& variant : variants) {
    model::RunConfig cfg = base;
    variant.apply(cfg);
    cfg.model.validate();
    if (log) (*log) << "[ablation " << suite << "] training variant " << variant.name << "\n";

    auto vocabs = build_vocabs(train_set, cfg.model);
    auto m = model::build_detector<float>(cfg.model, std::move(vocabs.url),
                                          std::move(vocabs.param), cfg.train.seed);
    nn::AdamWT<float> opt(0.9, 0.999, 1e-8, cfg.train.weight_decay);
    auto params = m.parameters();
    opt.attach(params);
    train_model(m, opt, train_set, cfg.train, nullptr, nullptr, log);

    AblationRow row;
    row.variant = variant.name;
    row.metrics = evaluate_model(m, test_set, cfg.train.threads);
    if (permuted_eval)
      row.permuted = evaluate_model_permuted(m, test_set, mix_seed(cfg.train.seed, 555),
                                             cfg.train.threads);
    if (log)
      (*log) << "[ablation " << suite << "] " << variant.name << " f1 " << row.metrics.f1()
             << (row.permuted ? " permuted_f1 " + std::to_string(row.permuted->f1()) : "") << "\n";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  bool any_perm = false;
  for (const auto& r : rows) any_perm |= r.permuted.has_value();
  os << "variant,accuracy,precision,recall,f1";
  if (any_perm) os << ",permuted_accuracy,permuted_f1";
  os << "\n";
  for (const auto& r : rows) {
    os << r.variant << ',' << r.metrics.accuracy() << ',' << r.metrics.precision() << ','
       << r.metrics.recall() << ',' << r.metrics.f1();
    if (any_perm) {
      if (r.permuted)
        os << ',' << r.permuted->accuracy() << ',' << r.permuted->f1();
      else
        os << ",,";
    }
    os << "\n";
  }
  return os.str();
}

std::string loss_history_csv(const TrainResult& r) {
  std::ostringstream os;
  os << "epoch,step,loss,lr\n";
  os.precision(8);
  for (const auto& p : r.history)
    os << p.epoch << ',' << p.step << ',' << p.loss << ',' << p.lr << "\n";
  return os.str();
}

TrainRunResult run_training(const model::RunConfig& cfg, const data::Dataset& ds,
                            const std::string& out_dir, const std::string& resume_dir,
                            std::ostream* log) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + out_dir + ": " + ec.message());

  auto [train_set, test_set] = data::split_dataset(ds, cfg.train.seed);
  if (log)
    (*log) << "split: " << train_set.size() << " train / " << test_set.size() << " test\n";

  model::DetectorModel m;
  nn::AdamWT<float> opt(0.9, 0.999, 1e-8, cfg.train.weight_decay);
  model::TrainState state;
  const model::TrainState* resume = nullptr;
  model::RunConfig effective = cfg;

  if (!resume_dir.empty()) {
    auto loaded = model::load_checkpoint(resume_dir);
    m = std::move(loaded.model);
    effective.model = loaded.cfg.model;  // architecture comes from the checkpoint
    auto params = m.parameters();
    opt.attach(params);
    model::load_optimizer_state(resume_dir, m, opt);
    if (auto ts = model::load_train_state(resume_dir)) {
      state = *ts;
      opt.set_step_count(state.optimizer_step);
      resume = &state;
    }
    if (log) (*log) << "resumed from " << resume_dir << " at step " << state.optimizer_step << "\n";
  } else {
    auto vocabs = build_vocabs(train_set, effective.model);
    m = model::build_detector<float>(effective.model, std::move(vocabs.url),
                                     std::move(vocabs.param), effective.train.seed);
    auto params = m.parameters();
    opt.attach(params);
  }

  const data::Dataset* eval_during = effective.train.target_f1 > 0 ? &test_set : nullptr;
  auto result = train_model(m, opt, train_set, effective.train, eval_during, resume, log);

  TrainRunResult out;
  out.train = std::move(result);
  out.metrics = evaluate_model(m, test_set, effective.train.threads);

  model::TrainState final_state;
  final_state.optimizer_step = out.train.steps_done;
  final_state.epochs_done = out.train.epochs_done;
  final_state.total_steps = out.train.total_steps;
  out.checkpoint_dir = out_dir + "/checkpoint";
  model::save_checkpoint(m, effective, out.checkpoint_dir, &opt, &final_state);

  std::ofstream loss_csv(out_dir + "/loss.csv", std::ios::binary);
  if (!loss_csv) fail(ErrorCode::IoFailure, "cannot write " + out_dir + "/loss.csv");
  loss_csv << loss_history_csv(out.train);

  std::ofstream mjson(out_dir + "/metrics.json", std::ios::binary);
  if (!mjson) fail(ErrorCode::IoFailure, "cannot write " + out_dir + "/metrics.json");
  mjson << data::metrics_json(out.metrics) << "\n";

  if (log) (*log) << "final " << out.metrics.f1() << " f1 on held-out test split\n";
  return out;
}

}  // namespace wad::train
