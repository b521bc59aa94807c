#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pixswap/eval.hpp"

using namespace pixswap;

namespace {

Protocol protocol_of(const oracle::RetrievalCase& c) {
  Protocol p;
  p.query = c.query;
  p.gallery = c.gallery;
  return p;
}

SampleRecord rec(const std::string& id, const std::string& clothes, Split split) {
  return {"i.png", "m.png", id, "A", clothes, split};
}

}  // namespace

TEST(Evaluate, PerfectRetrieval) {
  Matrix<double> emb(3, 1);
  emb(0, 0) = 0;
  emb(1, 0) = 5;
  emb(2, 0) = 0.1;
  const auto r = evaluate(emb, {"a", "b", "a"}, Protocol{ProtocolMode::kCrossClothes, {2}, {0, 1}});
  EXPECT_EQ(r.rank1, 1.0);
  EXPECT_EQ(r.mAP, 1.0);
}

TEST(Evaluate, AveragePrecisionRanksOneAndThree) {
  // gallery at distances 1..5 from the query; relevant at positions 1 and 3
  Matrix<double> emb(6, 1);
  for (int g = 0; g < 5; ++g) emb(g, 0) = g + 1;
  emb(5, 0) = 0;
  const auto r = evaluate(emb, {"q", "x", "q", "y", "z", "q"}, Protocol{ProtocolMode::kCrossClothes, {5}, {0, 1, 2, 3, 4}});
  EXPECT_NEAR(r.mAP, 0.833333, 1e-6);
  EXPECT_NEAR(r.average_precision.at(0), 0.5 * (1.0 + 2.0 / 3.0), 1e-15);
}

TEST(Evaluate, TiesGoToLowerGalleryPosition) {
  Matrix<double> emb(3, 1, 1.0);
  emb(2, 0) = 0;
  const auto r = evaluate(emb, {"x", "q", "q"}, Protocol{ProtocolMode::kCrossClothes, {2}, {0, 1}});
  EXPECT_EQ(r.rank1, 0.0);
  EXPECT_DOUBLE_EQ(r.mAP, 0.5);
}

TEST(Evaluate, MatchesBruteForceOracle) {
  RngStream rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = oracle::random_retrieval(rng, 20, trial % 2 == 0);
    const auto got = evaluate(c.embeddings, c.identities, protocol_of(c));
    const auto want = oracle::retrieval(c);
    EXPECT_NEAR(got.rank1, want.rank1, 1e-12);
    EXPECT_NEAR(got.rank5, want.rank5, 1e-12);
    EXPECT_NEAR(got.rank10, want.rank10, 1e-12);
    EXPECT_NEAR(got.mAP, want.mAP, 1e-12);
  }
}

TEST(Evaluate, RanksMonotoneAndBounded) {
  RngStream rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = oracle::random_retrieval(rng, 20, false);
    const auto r = evaluate(c.embeddings, c.identities, protocol_of(c));
    EXPECT_LE(r.rank1, r.rank5);
    EXPECT_LE(r.rank5, r.rank10);
    for (double v : {r.rank1, r.rank5, r.rank10, r.mAP}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (c.gallery.size() <= 10) EXPECT_EQ(r.rank10, 1.0);
  }
}

TEST(Evaluate, InvariantUnderRotationTranslationAndScale) {
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = oracle::random_retrieval(rng, 20, false);
    const auto base = evaluate(c.embeddings, c.identities, protocol_of(c));
    auto moved = c;
    const double theta = rng.uniform(0.0, 6.283185307179586), scale = rng.uniform(0.5, 3.0);
    const double shift = rng.normal();
    for (std::size_t i = 0; i < moved.embeddings.rows(); ++i) {
      auto row = moved.embeddings.row(i);
      if (row.size() >= 2) {
        const double x = row[0], y = row[1];
        row[0] = std::cos(theta) * x - std::sin(theta) * y;
        row[1] = std::sin(theta) * x + std::cos(theta) * y;
      }
      for (auto& v : row) v = scale * v + shift;
    }
    const auto after = evaluate(moved.embeddings, moved.identities, protocol_of(moved));
    EXPECT_NEAR(after.rank1, base.rank1, 1e-12);
    EXPECT_NEAR(after.rank5, base.rank5, 1e-12);
    EXPECT_NEAR(after.mAP, base.mAP, 1e-12);
  }
}

TEST(Evaluate, QueryWithoutRelevantGalleryRecord) {
  Matrix<double> emb(2, 1);
  try {
    evaluate(emb, {"a", "b"}, Protocol{ProtocolMode::kCrossClothes, {1}, {0}});
    FAIL() << "expected an evaluation error";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("query record 1"), std::string::npos);
  }
}

TEST(BuildProtocol, SplitsSelectedByMode) {
  const Dataset ds({rec("a", "a0", Split::kGallery), rec("a", "a0", Split::kQuerySame), rec("a", "a1", Split::kQueryCross),
                    rec("b", "b0", Split::kTrain)},
                   LabelRecombinationTable::lip18(), ".");
  const auto cross = build_protocol(ds, ProtocolMode::kCrossClothes);
  EXPECT_EQ(cross.query, std::vector<std::size_t>{2});
  EXPECT_EQ(cross.gallery, std::vector<std::size_t>{0});
  const auto same = build_protocol(ds, ProtocolMode::kSameClothes);
  EXPECT_EQ(same.query, std::vector<std::size_t>{1});
}

TEST(BuildProtocol, CrossQuerySharingClothesIsProtocolError) {
  const Dataset ds({rec("a", "a0", Split::kGallery), rec("a", "a0", Split::kQueryCross)}, LabelRecombinationTable::lip18(), ".");
  EXPECT_THROW(build_protocol(ds, ProtocolMode::kCrossClothes), ProtocolError);
}

TEST(BuildProtocol, EmptyQuerySplitIsProtocolError) {
  const Dataset ds({rec("a", "a0", Split::kGallery)}, LabelRecombinationTable::lip18(), ".");
  EXPECT_THROW(build_protocol(ds, ProtocolMode::kCrossClothes), ProtocolError);
  EXPECT_THROW(build_protocol(ds, ProtocolMode::kSameClothes), ProtocolError);
}

TEST(BuildProtocol, SameQueryWithoutMatchingClothesIsProtocolError) {
  const Dataset ds({rec("a", "a0", Split::kGallery), rec("a", "a1", Split::kQuerySame)}, LabelRecombinationTable::lip18(), ".");
  EXPECT_THROW(build_protocol(ds, ProtocolMode::kSameClothes), ProtocolError);
}
