#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pixswap/losses.hpp"
#include "pixswap/model.hpp"
#include "pixswap/pixel_sampling.hpp"
#include "pixswap/rng.hpp"

namespace pixswap {

/// A tiny random problem for checking the analytic gradient of the full
/// training objective (consistency + cross-entropy + batch-hard triplet) on a
/// 2B batch of initial samples and their pixel-sampled twins.
struct GradCheckCase {
  NetConfig net;
  int identities = 2;
  int instances = 2;
  LossConfig loss;
  bool use_mse = true;
  std::uint64_t seed = 0;
  double epsilon = 1e-4;
};

struct GradCheckReport {
  double max_relative_error = 0;
  std::string worst_parameter;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose +-eps probe crosses a kink
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor). The floor keeps
/// entries that are zero up to rounding from dividing by nothing.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace gradcheck_detail {

struct Problem {
  std::vector<Image> inputs;  // B initial, then B generated
  std::vector<int> labels;
  std::size_t B = 0;
};

// Everything that decides which smooth branch the loss is on.
struct Branch {
  std::vector<bool> relu;
  std::vector<std::size_t> hardest;
  std::vector<bool> hinge;
  std::vector<bool> norm_zero;
  bool operator==(const Branch&) const = default;
};

struct Evaluation {
  double loss = 0;
  Branch branch;
  TotalGradients<double> grads;
  ForwardResult<double> fwd;
};

inline Evaluation evaluate_objective(const EmbeddingNet<double>& net, const Problem& prob, const GradCheckCase& c) {
  Evaluation ev;
  ev.fwd = forward(net, std::span<const Image>(prob.inputs));
  const auto ce = cross_entropy(ev.fwd.logits, prob.labels);
  const auto tri = batch_hard_triplet(ev.fwd.embeddings, prob.labels, c.loss);
  std::optional<MseResult<double>> mse;
  const std::size_t D = ev.fwd.embeddings.cols();
  if (c.use_mse) {
    Matrix<double> f(prob.B, D), fp(prob.B, D);
    for (std::size_t i = 0; i < prob.B; ++i) {
      for (std::size_t d = 0; d < D; ++d) {
        f(i, d) = ev.fwd.embeddings(i, d);
        fp(i, d) = ev.fwd.embeddings(prob.B + i, d);
      }
      double sq = 0;
      for (std::size_t d = 0; d < D; ++d) sq += (f(i, d) - fp(i, d)) * (f(i, d) - fp(i, d));
      ev.branch.norm_zero.push_back(std::sqrt(sq) <= kNormEpsilon);
    }
    mse = mse_consistency(f, fp, c.loss);
  }
  ev.loss = total_loss(mse ? std::optional<double>(mse->value) : std::nullopt, ce.value, tri.value).total;
  for (const auto& blk : ev.fwd.blocks) {
    for (double v : blk.pre) ev.branch.relu.push_back(v > 0.0);
  }
  ev.branch.hardest = tri.hardest_positive;
  ev.branch.hardest.insert(ev.branch.hardest.end(), tri.hardest_negative.begin(), tri.hardest_negative.end());
  for (std::size_t a = 0; a < prob.labels.size(); ++a) {
    double dp = 0, dn = 0;
    for (std::size_t d = 0; d < D; ++d) {
      const double x = ev.fwd.embeddings(a, d);
      dp += (x - ev.fwd.embeddings(tri.hardest_positive[a], d)) * (x - ev.fwd.embeddings(tri.hardest_positive[a], d));
      dn += (x - ev.fwd.embeddings(tri.hardest_negative[a], d)) * (x - ev.fwd.embeddings(tri.hardest_negative[a], d));
    }
    ev.branch.hinge.push_back(c.loss.margin + std::sqrt(dp) - std::sqrt(dn) > 0.0);
  }
  ev.grads = combine_gradients(mse ? &*mse : nullptr, ce, tri);
  return ev;
}

}  // namespace gradcheck_detail

/// Compares every parameter gradient against central differences. Coordinates
/// whose +-eps probes land on a different branch (ReLU pattern, hardest
/// positive/negative, hinge activity, zero consistency norm) are skipped.
inline GradCheckReport check_total_loss_gradients(const GradCheckCase& c) {
  using namespace gradcheck_detail;
  RngStream rng(c.seed);
  NetConfig nc = c.net;
  nc.num_classes = c.identities;
  auto net = EmbeddingNet<double>::kaiming(nc, rng);
  for (auto& p : net.params()) {
    if (p.dims.size() == 1) {
      for (auto& v : p.values) v = rng.normal(0.0, 0.1);
    }
  }

  Batch batch;
  for (int id = 0; id < c.identities; ++id) {
    for (int k = 0; k < c.instances; ++k) {
      Image img(nc.input_channels, nc.input_height, nc.input_width);
      for (auto& v : img.data()) v = static_cast<float>(rng.uniform());
      std::vector<std::uint8_t> labels(img.plane_size());
      for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_index(kNumParts));
      batch.images.push_back(std::move(img));
      batch.masks.emplace_back(nc.input_height, nc.input_width, std::move(labels));
      batch.identities.push_back(id);
    }
  }
  const Batch generated = generate(batch, SamplingConfig{}, rng);

  Problem prob;
  prob.B = batch.size();
  prob.inputs = batch.images;
  prob.inputs.insert(prob.inputs.end(), generated.images.begin(), generated.images.end());
  prob.labels = batch.identities;
  prob.labels.insert(prob.labels.end(), batch.identities.begin(), batch.identities.end());

  const Evaluation base = evaluate_objective(net, prob, c);
  const auto analytic = backward(net, base.fwd, base.grads.embeddings, base.grads.logits);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < net.params().size(); ++pi) {
    auto& values = net.params()[pi].values;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + c.epsilon;
      const Evaluation plus = evaluate_objective(net, prob, c);
      values[j] = saved - c.epsilon;
      const Evaluation minus = evaluate_objective(net, prob, c);
      values[j] = saved;
      if (!(plus.branch == base.branch) || !(minus.branch == base.branch)) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2 * c.epsilon);
      const double err = relative_error(analytic[pi].values[j], numeric);
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = net.params()[pi].name + "[" + std::to_string(j) + "]";
      }
    }
  }
  return report;
}

}  // namespace pixswap
