#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pixswap/errors.hpp"
#include "pixswap/tensor.hpp"

namespace pixswap {

enum class MseMode {
  kL2Norm,     // (1/B) sum_i ||f_i - f'_i||_2, the consistency term as written
  kSquaredL2,  // (1/(B D)) sum_i ||f_i - f'_i||_2^2, a true mean squared error
};

struct LossConfig {
  double margin = 0.3;
  MseMode mse_mode = MseMode::kL2Norm;

  void validate() const {
    if (!(margin >= 0.0)) throw ConfigError("triplet margin must be >= 0");
  }
};

/// Norms below this are treated as zero; the gradient there is the subgradient 0.
inline constexpr double kNormEpsilon = 1e-12;

template <typename T>
struct MseResult {
  T value = 0;
  Matrix<T> grad_f;
  Matrix<T> grad_f_prime;
};

/// Feature-consistency loss between initial embeddings `f` and the embeddings
/// `f_prime` of their generated twins (row i pairs with row i).
template <typename T>
MseResult<T> mse_consistency(const Matrix<T>& f, const Matrix<T>& f_prime, const LossConfig& cfg) {
  if (!f.same_shape(f_prime)) {
    throw ShapeError("consistency loss needs equal shapes, got " + std::to_string(f.rows()) + "x" +
                     std::to_string(f.cols()) + " and " + std::to_string(f_prime.rows()) + "x" +
                     std::to_string(f_prime.cols()));
  }
  const std::size_t B = f.rows(), D = f.cols();
  MseResult<T> out{T{0}, Matrix<T>(B, D), Matrix<T>(B, D)};
  if (B == 0) return out;
  for (std::size_t i = 0; i < B; ++i) {
    T sq = 0;
    for (std::size_t d = 0; d < D; ++d) {
      const T diff = f(i, d) - f_prime(i, d);
      sq += diff * diff;
    }
    if (cfg.mse_mode == MseMode::kL2Norm) {
      const T norm = std::sqrt(sq);
      out.value += norm;
      if (norm > static_cast<T>(kNormEpsilon)) {
        for (std::size_t d = 0; d < D; ++d) {
          const T g = (f(i, d) - f_prime(i, d)) / (norm * static_cast<T>(B));
          out.grad_f(i, d) = g;
          out.grad_f_prime(i, d) = -g;
        }
      }
    } else {
      out.value += sq;
      const T scale = T{2} / static_cast<T>(B * D);
      for (std::size_t d = 0; d < D; ++d) {
        const T g = (f(i, d) - f_prime(i, d)) * scale;
        out.grad_f(i, d) = g;
        out.grad_f_prime(i, d) = -g;
      }
    }
  }
  out.value /= static_cast<T>(cfg.mse_mode == MseMode::kL2Norm ? B : B * D);
  return out;
}

template <typename T>
struct LossGrad {
  T value = 0;
  Matrix<T> grad;
};

/// Mean softmax cross-entropy, log-sum-exp stabilised.
template <typename T>
LossGrad<T> cross_entropy(const Matrix<T>& logits, const std::vector<int>& labels) {
  const std::size_t N = logits.rows(), K = logits.cols();
  if (labels.size() != N) throw ShapeError("cross-entropy needs one label per row");
  LossGrad<T> out{T{0}, Matrix<T>(N, K)};
  if (N == 0) return out;
  for (std::size_t i = 0; i < N; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= K) {
      throw ArgumentError("label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                          " outside 0.." + std::to_string(K - 1));
    }
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, logits(i, k));
    T sum = 0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(logits(i, k) - mx);
    const T lse = mx + std::log(sum);
    out.value += lse - logits(i, labels[i]);
    for (std::size_t k = 0; k < K; ++k) {
      const T p = std::exp(logits(i, k) - lse);
      out.grad(i, k) = (p - (static_cast<int>(k) == labels[i] ? T{1} : T{0})) / static_cast<T>(N);
    }
  }
  out.value /= static_cast<T>(N);
  return out;
}

template <typename T>
struct TripletResult {
  T value = 0;
  Matrix<T> grad;
  std::vector<std::size_t> hardest_positive;
  std::vector<std::size_t> hardest_negative;
};

/// Batch-hard triplet loss with Euclidean distances: mean over anchors of
/// max(margin + max_pos d - min_neg d, 0). Ties go to the lowest index.
template <typename T>
TripletResult<T> batch_hard_triplet(const Matrix<T>& f, const std::vector<int>& labels, const LossConfig& cfg) {
  const std::size_t N = f.rows(), D = f.cols();
  if (labels.size() != N) throw ShapeError("triplet loss needs one label per row");
  TripletResult<T> out{T{0}, Matrix<T>(N, D), std::vector<std::size_t>(N), std::vector<std::size_t>(N)};
  if (N == 0) return out;

  Matrix<T> dist(N, N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      T sq = 0;
      for (std::size_t d = 0; d < D; ++d) {
        const T diff = f(i, d) - f(j, d);
        sq += diff * diff;
      }
      dist(i, j) = dist(j, i) = std::sqrt(sq);
    }
  }

  const T margin = static_cast<T>(cfg.margin);
  const auto add_distance_grad = [&](std::size_t a, std::size_t b, T scale) {
    const T d = dist(a, b);
    if (d <= static_cast<T>(kNormEpsilon)) return;
    for (std::size_t k = 0; k < D; ++k) {
      const T g = scale * (f(a, k) - f(b, k)) / d;
      out.grad(a, k) += g;
      out.grad(b, k) -= g;
    }
  };

  for (std::size_t a = 0; a < N; ++a) {
    std::optional<std::size_t> pos, neg;
    for (std::size_t j = 0; j < N; ++j) {
      if (j == a) continue;
      if (labels[j] == labels[a]) {
        if (!pos || dist(a, j) > dist(a, *pos)) pos = j;
      } else if (!neg || dist(a, j) < dist(a, *neg)) {
        neg = j;
      }
    }
    if (!pos || !neg) {
      throw BatchCompositionError("anchor " + std::to_string(a) + " (identity " + std::to_string(labels[a]) +
                                  ") has no " + (!pos ? "positive" : "negative") + " in the batch");
    }
    out.hardest_positive[a] = *pos;
    out.hardest_negative[a] = *neg;
    const T hinge = margin + dist(a, *pos) - dist(a, *neg);
    if (hinge > T{0}) {
      out.value += hinge;
      const T scale = T{1} / static_cast<T>(N);
      add_distance_grad(a, *pos, scale);
      add_distance_grad(a, *neg, -scale);
    }
  }
  out.value /= static_cast<T>(N);
  return out;
}

/// Per-step loss summary. `mse` is absent when the consistency term is disabled.
struct LossReport {
  std::optional<double> mse;
  double ce = 0;
  double triplet = 0;
  double total = 0;
  std::size_t num_samples = 0;
  std::vector<std::size_t> hardest_positive;
  std::vector<std::size_t> hardest_negative;
};

/// Unweighted sum of the three terms.
inline LossReport total_loss(std::optional<double> mse, double ce, double triplet) {
  LossReport r;
  r.mse = mse;
  r.ce = ce;
  r.triplet = triplet;
  r.total = mse.value_or(0.0) + ce + triplet;
  return r;
}

template <typename T>
struct TotalGradients {
  Matrix<T> embeddings;  // 2B x D (initial rows first, generated rows after)
  Matrix<T> logits;
};

/// Sum of component gradients. The consistency gradient (B rows each side) lands
/// on rows [0, B) for the initial samples and [B, 2B) for their twins.
template <typename T>
TotalGradients<T> combine_gradients(const MseResult<T>* mse, const LossGrad<T>& ce, const TripletResult<T>& triplet) {
  TotalGradients<T> out{triplet.grad, ce.grad};
  if (mse != nullptr) {
    const std::size_t B = mse->grad_f.rows();
    if (2 * B != out.embeddings.rows() || mse->grad_f.cols() != out.embeddings.cols()) {
      throw ShapeError("consistency gradient does not match the 2B embedding batch");
    }
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t d = 0; d < out.embeddings.cols(); ++d) {
        out.embeddings(i, d) += mse->grad_f(i, d);
        out.embeddings(B + i, d) += mse->grad_f_prime(i, d);
      }
    }
  }
  return out;
}

}  // namespace pixswap
