#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pixswap/augment.hpp"
#include "pixswap/errors.hpp"
#include "pixswap/eval.hpp"
#include "pixswap/losses.hpp"
#include "pixswap/model.hpp"
#include "pixswap/parsing.hpp"
#include "pixswap/pixel_sampling.hpp"
#include "pixswap/rng.hpp"

namespace pixswap {

using Scalar = double;

struct AblationConfig {
  bool use_pixel_sampling = false;
  bool use_mse = false;
  bool use_random_erasing = false;

  void validate() const {
    if (use_mse && !use_pixel_sampling) {
      throw ConfigError("the consistency loss needs pixel sampling (no generated twins otherwise)");
    }
  }

  std::string name() const {
    std::string n = "baseline";
    if (use_pixel_sampling) n += "+ps";
    if (use_mse) n += "+mse";
    if (use_random_erasing) n += "+re";
    return n;
  }

  bool operator==(const AblationConfig&) const = default;
};

struct RunConfig {
  AblationConfig ablation;
  PKSpec pk;
  GeoAugConfig geo;
  RandomErasingConfig erasing;
  SamplingConfig sampling;
  LossConfig loss;
  OptimConfig optim;
  std::vector<int> widths{8, 16, 32};
  int embedding_dim = 64;
  double embed_init_scale = 0.1;
  double classifier_init_scale = 4.0;
  long steps = 1000;
  std::uint64_t seed = 0;
  long eval_every = 0;        // 0: evaluate only after the last step
  long checkpoint_every = 0;  // 0: only the final checkpoint

  void validate() const {
    ablation.validate();
    pk.validate();
    geo.validate();
    erasing.validate();
    sampling.validate();
    loss.validate();
    optim.validate();
    if (steps < 0) throw ConfigError("steps must be non-negative");
    if (eval_every < 0 || checkpoint_every < 0) throw ConfigError("cadences must be non-negative");
    net_config(1).validate();
  }

  NetConfig net_config(int num_classes) const {
    NetConfig n;
    n.input_channels = 3;
    n.input_height = geo.target_height;
    n.input_width = geo.target_width;
    n.widths = widths;
    n.embedding_dim = embedding_dim;
    n.embed_init_scale = embed_init_scale;
    n.classifier_init_scale = classifier_init_scale;
    n.num_classes = num_classes;
    return n;
  }

  /// Optimiser settings with the schedule bound to this run's step count.
  OptimConfig bound_optim() const {
    OptimConfig o = optim;
    o.total_steps = steps;
    return o;
  }
};

/// One optimisation step on an already geometrically augmented PK batch.
///
/// With pixel sampling, the generated twins are appended after the initial
/// samples (2B rows); cross-entropy and triplet run over all rows and the
/// consistency term over the B (initial, generated) pairs. Random erasing, when
/// enabled, hits every row independently after sampling.
inline LossReport train_step(TrainState<Scalar>& state, const Batch& batch, const RunConfig& cfg, RngStream& rng) {
  batch.validate();
  const std::size_t B = batch.size();
  std::vector<Image> inputs = batch.images;
  std::vector<int> labels = batch.identities;
  if (cfg.ablation.use_pixel_sampling) {
    Batch generated = generate(batch, cfg.sampling, rng);
    inputs.insert(inputs.end(), std::make_move_iterator(generated.images.begin()),
                  std::make_move_iterator(generated.images.end()));
    labels.insert(labels.end(), batch.identities.begin(), batch.identities.end());
  }
  if (cfg.ablation.use_random_erasing) {
    for (auto& img : inputs) img = random_erase(img, cfg.erasing, rng);
  }

  const auto fwd = forward(state.net, std::span<const Image>(inputs));
  const auto ce = cross_entropy(fwd.logits, labels);
  const auto triplet = batch_hard_triplet(fwd.embeddings, labels, cfg.loss);

  std::optional<MseResult<Scalar>> mse;
  if (cfg.ablation.use_pixel_sampling && cfg.ablation.use_mse) {
    Matrix<Scalar> f(B, fwd.embeddings.cols()), f_prime(B, fwd.embeddings.cols());
    for (std::size_t i = 0; i < B; ++i) {
      std::copy_n(fwd.embeddings.row(i).begin(), f.cols(), f.row(i).begin());
      std::copy_n(fwd.embeddings.row(B + i).begin(), f.cols(), f_prime.row(i).begin());
    }
    mse = mse_consistency(f, f_prime, cfg.loss);
  }

  LossReport report = total_loss(mse ? std::optional<double>(mse->value) : std::nullopt, ce.value, triplet.value);
  report.num_samples = inputs.size();
  report.hardest_positive = triplet.hardest_positive;
  report.hardest_negative = triplet.hardest_negative;
  if (!std::isfinite(report.total)) {
    throw TrainingError("non-finite loss at step " + std::to_string(state.step));
  }

  const auto grads = combine_gradients(mse ? &*mse : nullptr, ce, triplet);
  sgd_step(state, backward(state.net, fwd, grads.embeddings, grads.logits));
  return report;
}

/// Training split held in memory at the network's input size, with identities
/// mapped onto contiguous class indices (sorted identity order).
struct TrainingSet {
  std::vector<Image> images;
  std::vector<SemanticMask> masks;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::vector<std::size_t>> groups;  // positions in `images`, per class

  static TrainingSet load(const Dataset& dataset, const GeoAugConfig& geo) {
    TrainingSet set;
    std::map<std::string, int> classes;
    for (const auto& [identity, indices] : dataset.identity_index()) {
      for (auto i : indices) {
        if (dataset.record(i).split == Split::kTrain) {
          classes.emplace(identity, static_cast<int>(classes.size()));
          break;
        }
      }
    }
    set.groups.resize(classes.size());
    for (const auto& [identity, cls] : classes) set.class_names.push_back(identity);
    for (auto i : dataset.indices(Split::kTrain)) {
      const int cls = classes.at(dataset.record(i).identity);
      set.groups[cls].push_back(set.images.size());
      set.images.push_back(resize_bilinear(dataset.load_image(i), geo.target_height, geo.target_width));
      set.masks.push_back(resize_nearest(dataset.load_mask(i), geo.target_height, geo.target_width));
      set.labels.push_back(cls);
    }
    return set;
  }

  Batch make_batch(const std::vector<std::size_t>& picks, const GeoAugConfig& geo, RngStream& rng) const {
    Batch b;
    for (auto p : picks) {
      auto [img, mask] = geo_augment(images[p], masks[p], geo, rng);
      b.images.push_back(std::move(img));
      b.masks.push_back(std::move(mask));
      b.identities.push_back(labels[p]);
    }
    return b;
  }
};

/// Embeddings for every record of the evaluation splits (rows of other records stay zero).
inline Matrix<Scalar> embed_records(const EmbeddingNet<Scalar>& net, const Dataset& dataset,
                                    const std::vector<std::size_t>& records, std::size_t chunk = 64) {
  const NetConfig& nc = net.config();
  Matrix<Scalar> out(dataset.size(), nc.embedding_dim);
  for (std::size_t start = 0; start < records.size(); start += chunk) {
    std::vector<Image> imgs;
    const std::size_t end = std::min(records.size(), start + chunk);
    for (std::size_t k = start; k < end; ++k) {
      imgs.push_back(resize_bilinear(dataset.load_image(records[k]), nc.input_height, nc.input_width));
    }
    const auto fwd = forward(net, std::span<const Image>(imgs));
    for (std::size_t k = start; k < end; ++k) {
      std::copy_n(fwd.embeddings.row(k - start).begin(), nc.embedding_dim, out.row(records[k]).begin());
    }
  }
  return out;
}

struct ProtocolResults {
  EvalResult cross;
  EvalResult same;
};

inline ProtocolResults evaluate_both(const EmbeddingNet<Scalar>& net, const Dataset& dataset) {
  const Protocol cross = build_protocol(dataset, ProtocolMode::kCrossClothes);
  const Protocol same = build_protocol(dataset, ProtocolMode::kSameClothes);
  std::vector<std::size_t> records = cross.gallery;
  records.insert(records.end(), cross.query.begin(), cross.query.end());
  records.insert(records.end(), same.query.begin(), same.query.end());
  const auto emb = embed_records(net, dataset, records);
  std::vector<std::string> ids;
  for (const auto& r : dataset.records()) ids.push_back(r.identity);
  return {evaluate(emb, ids, cross), evaluate(emb, ids, same)};
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct ExperimentResult {
  std::string variant;
  ProtocolResults eval;
  std::vector<LossReport> losses;

  nlohmann::ordered_json to_json(const RunConfig& cfg) const {
    nlohmann::ordered_json j;
    j["variant"] = variant;
    j["seed"] = cfg.seed;
    j["steps"] = cfg.steps;
    j["pixel_sampling"] = cfg.ablation.use_pixel_sampling;
    j["mse"] = cfg.ablation.use_mse;
    j["random_erasing"] = cfg.ablation.use_random_erasing;
    j["cross_clothes"] = eval.cross.to_json();
    j["same_clothes"] = eval.same.to_json();
    return j;
  }
};

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Observer for per-step progress (step, report); may be empty.
using StepCallback = std::function<void(long, const LossReport&)>;

/// Trains for cfg.steps steps and evaluates both protocols. With a non-empty
/// `out_dir`, writes train_log.csv, checkpoints, and eval/result JSONs there.
inline ExperimentResult run_experiment(const RunConfig& cfg, const Dataset& dataset, const std::filesystem::path& out_dir,
                                       const StepCallback& on_step = {}) {
  cfg.validate();
  const TrainingSet train = TrainingSet::load(dataset, cfg.geo);
  const PKBatchStream sampler(train.groups, cfg.pk);

  RngStream root(cfg.seed);
  RngStream init_rng = root.split(1);
  RngStream batch_rng = root.split(2);
  RngStream geo_rng = root.split(3);
  RngStream step_rng = root.split(4);

  TrainState<Scalar> state(
      EmbeddingNet<Scalar>::kaiming(cfg.net_config(static_cast<int>(train.class_names.size())), init_rng),
      cfg.bound_optim());

  const bool write = !out_dir.empty();
  std::ofstream log;
  if (write) {
    std::filesystem::create_directories(out_dir);
    log.open(out_dir / "train_log.csv", std::ios::binary);
    if (!log) throw IoError("cannot write training log in " + out_dir.string());
    log << "step,lr,mse,ce,triplet,total\n";
  }

  ExperimentResult result;
  result.variant = cfg.ablation.name();
  for (long step = 0; step < cfg.steps; ++step) {
    const double lr = state.learning_rate();
    const Batch batch = train.make_batch(sampler.next(batch_rng), cfg.geo, geo_rng);
    LossReport report = train_step(state, batch, cfg, step_rng);
    if (write) {
      log << step + 1 << ',' << format_double(lr) << ',' << (report.mse ? format_double(*report.mse) : "") << ','
          << format_double(report.ce) << ',' << format_double(report.triplet) << ',' << format_double(report.total)
          << '\n';
    }
    if (on_step) on_step(step + 1, report);
    report.hardest_positive.clear();
    report.hardest_negative.clear();
    result.losses.push_back(std::move(report));

    const long done = step + 1;
    if (write && cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 && done != cfg.steps) {
      save_checkpoint(out_dir / ("checkpoint_step" + std::to_string(done) + ".ckpt"), state.net);
    }
    if (write && cfg.eval_every > 0 && done % cfg.eval_every == 0 && done != cfg.steps) {
      const auto mid = evaluate_both(state.net, dataset);
      nlohmann::ordered_json j;
      j["step"] = done;
      j["cross_clothes"] = mid.cross.to_json();
      j["same_clothes"] = mid.same.to_json();
      write_json(out_dir / ("eval_step" + std::to_string(done) + ".json"), j);
    }
  }

  result.eval = evaluate_both(state.net, dataset);
  if (write) {
    save_checkpoint(out_dir / "checkpoint_final.ckpt", state.net);
    write_json(out_dir / "eval_cross_clothes.json", result.eval.cross.to_json());
    write_json(out_dir / "eval_same_clothes.json", result.eval.same.to_json());
    write_json(out_dir / "result.json", result.to_json(cfg));
  }
  return result;
}

/// Rows of the component ablation, in table order.
inline std::vector<AblationConfig> ablation_rows() {
  return {
      {false, false, false},
      {true, false, false},
      {true, true, false},
      {true, true, true},
  };
}

inline std::string row_directory(const AblationConfig& a) {
  std::string n = a.name();
  for (auto& ch : n) {
    if (ch == '+') ch = '_';
  }
  return n;
}

}  // namespace pixswap
