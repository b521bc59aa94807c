#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pixswap/errors.hpp"
#include "pixswap/parsing.hpp"
#include "pixswap/tensor.hpp"

namespace pixswap {

enum class ProtocolMode { kCrossClothes, kSameClothes };

inline std::string_view to_string(ProtocolMode m) {
  return m == ProtocolMode::kCrossClothes ? "cross_clothes" : "same_clothes";
}

/// Query/gallery record indices into a dataset, plus per-record identities.
struct Protocol {
  ProtocolMode mode = ProtocolMode::kCrossClothes;
  std::vector<std::size_t> query;
  std::vector<std::size_t> gallery;
};

/// Selects gallery and the mode's query split, and checks the clothes invariant:
/// cross-clothes queries never share (identity, clothes_id) with the gallery;
/// same-clothes queries always do.
inline Protocol build_protocol(const Dataset& dataset, ProtocolMode mode) {
  Protocol p;
  p.mode = mode;
  p.gallery = dataset.indices(Split::kGallery);
  p.query = dataset.indices(mode == ProtocolMode::kCrossClothes ? Split::kQueryCross : Split::kQuerySame);
  if (p.query.empty()) throw ProtocolError(std::string(to_string(mode)) + " protocol has no query records");
  if (p.gallery.empty()) throw ProtocolError("protocol has no gallery records");

  std::set<std::pair<std::string, std::string>> gallery_outfits;
  for (auto g : p.gallery) gallery_outfits.emplace(dataset.record(g).identity, dataset.record(g).clothes_id);

  std::vector<std::string> offending;
  for (auto q : p.query) {
    const auto& rec = dataset.record(q);
    const bool shared = gallery_outfits.contains({rec.identity, rec.clothes_id});
    if (mode == ProtocolMode::kCrossClothes ? shared : !shared) {
      offending.push_back(rec.image_path + " (" + rec.identity + ", " + rec.clothes_id + ")");
    }
  }
  if (!offending.empty()) {
    std::string msg = mode == ProtocolMode::kCrossClothes
                          ? "cross-clothes queries share clothes with their gallery identity:"
                          : "same-clothes queries without a same-clothes gallery record:";
    for (const auto& o : offending) msg += "\n  " + o;
    throw ProtocolError(msg);
  }
  return p;
}

struct EvalResult {
  ProtocolMode mode = ProtocolMode::kCrossClothes;
  double rank1 = 0, rank5 = 0, rank10 = 0;
  double mAP = 0;
  std::vector<double> average_precision;  // per query, in protocol order
  std::size_t num_query = 0;
  std::size_t num_gallery = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(mode));
    j["rank1"] = rank1;
    j["rank5"] = rank5;
    j["rank10"] = rank10;
    j["mAP"] = mAP;
    j["num_query"] = num_query;
    j["num_gallery"] = num_gallery;
    return j;
  }

  std::string table() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << std::left << std::setw(15) << to_string(mode) << " R1 " << std::setw(6) << 100 * rank1 << " R5 "
       << std::setw(6) << 100 * rank5 << " R10 " << std::setw(6) << 100 * rank10 << " mAP " << std::setw(6)
       << 100 * mAP << " (" << num_query << " queries, " << num_gallery << " gallery)";
    return os.str();
  }
};

/// Ranks the gallery for every query by ascending Euclidean distance (ties by
/// gallery position) with identity-only relevance. `embeddings` and
/// `identities` are indexed by record index.
template <typename T>
EvalResult evaluate(const Matrix<T>& embeddings, const std::vector<std::string>& identities, const Protocol& protocol) {
  if (identities.size() != embeddings.rows()) throw ShapeError("one identity per embedding row required");
  for (auto i : protocol.query) {
    if (i >= embeddings.rows()) throw ShapeError("query index " + std::to_string(i) + " has no embedding");
  }
  for (auto i : protocol.gallery) {
    if (i >= embeddings.rows()) throw ShapeError("gallery index " + std::to_string(i) + " has no embedding");
  }
  const std::size_t G = protocol.gallery.size();
  EvalResult res;
  res.mode = protocol.mode;
  res.num_query = protocol.query.size();
  res.num_gallery = G;
  if (protocol.query.empty()) return res;

  const std::size_t D = embeddings.cols();
  std::vector<double> dist(G);
  std::vector<std::size_t> order(G);
  std::size_t hits1 = 0, hits5 = 0, hits10 = 0;
  for (auto q : protocol.query) {
    for (std::size_t g = 0; g < G; ++g) {
      double sq = 0;
      for (std::size_t d = 0; d < D; ++d) {
        const double diff = static_cast<double>(embeddings(q, d)) - static_cast<double>(embeddings(protocol.gallery[g], d));
        sq += diff * diff;
      }
      dist[g] = std::sqrt(sq);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    std::size_t relevant = 0, first_hit = 0;
    double precision_sum = 0;
    for (std::size_t r = 0; r < G; ++r) {
      if (identities[protocol.gallery[order[r]]] != identities[q]) continue;
      ++relevant;
      if (relevant == 1) first_hit = r + 1;
      precision_sum += static_cast<double>(relevant) / static_cast<double>(r + 1);
    }
    if (relevant == 0) {
      throw EvaluationError("query record " + std::to_string(q) + " (identity " + identities[q] +
                            ") has no relevant gallery record");
    }
    hits1 += first_hit <= 1;
    hits5 += first_hit <= 5;
    hits10 += first_hit <= 10;
    res.average_precision.push_back(precision_sum / static_cast<double>(relevant));
  }
  const double nq = static_cast<double>(protocol.query.size());
  res.rank1 = hits1 / nq;
  res.rank5 = hits5 / nq;
  res.rank10 = hits10 / nq;
  res.mAP = std::accumulate(res.average_precision.begin(), res.average_precision.end(), 0.0) / nq;
  return res;
}

}  // namespace pixswap
