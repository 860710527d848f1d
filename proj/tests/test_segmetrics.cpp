#include <gtest/gtest.h>

#include "skinaudit/segmetrics.hpp"
#include "test_support.hpp"

using namespace skinaudit;
using namespace skinaudit::seg;

namespace {

BinaryMask mask_from(std::initializer_list<int> bits, int w, int h) {
  BinaryMask m(w, h);
  std::size_t i = 0;
  for (int b : bits) m.set_at(i++, b != 0);
  return m;
}

ConfusionCounts random_counts(rng::Engine& e) {
  auto draw = [&] { return rng::uniform01(e) < 0.1 ? 0 : rng::uniform_index(e, 1000); };
  ConfusionCounts c{draw(), draw(), draw(), draw()};
  if (c.total() == 0) c.tn = 1;
  return c;
}

}  // namespace

TEST(Confusion, TwoByTwoHandEnumerated) {
  const auto c = confusion(mask_from({1, 1, 0, 0}, 2, 2), mask_from({1, 0, 1, 0}, 2, 2));
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 1u);
}

TEST(Confusion, IdentityAndComplement) {
  auto e = rng::substream(1, 0);
  BinaryMask gt(9, 7), inv(9, 7);
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    gt.set_at(i, rng::uniform01(e) < 0.4);
    inv.set_at(i, !gt.at(i));
  }
  const auto same = confusion(gt, gt);
  EXPECT_EQ(same.fp + same.fn, 0u);
  const auto flip = confusion(gt, inv);
  EXPECT_EQ(flip.tp + flip.tn, 0u);
  EXPECT_EQ(flip.total(), 63u);
}

TEST(Confusion, DimensionMismatchThrows) { EXPECT_THROW(confusion(BinaryMask(2, 2), BinaryMask(2, 3)), Error); }

TEST(Metrics, BalancedTwoByTwo) {
  const auto m = metrics(ConfusionCounts{1, 1, 1, 1});
  EXPECT_EQ(*m.iou, 1.0 / 3.0);
  EXPECT_EQ(*m.dc, 0.5);
  EXPECT_EQ(*m.st, 0.5);
  EXPECT_EQ(*m.sp, 0.5);
  EXPECT_EQ(*m.pa, 0.5);
  EXPECT_EQ(*m.auc, 0.5);
  EXPECT_EQ(*m.ck, 0.0);
  EXPECT_EQ(*m.fpr, 0.5);
  EXPECT_EQ(*m.fnr, 0.5);
}

TEST(Metrics, PerfectPrediction) {
  const auto m = metrics(ConfusionCounts{5, 0, 7, 0});
  for (Metric k : {Metric::IoU, Metric::DC, Metric::ST, Metric::SP, Metric::PA, Metric::AUC, Metric::CK})
    EXPECT_EQ(*m.get(k), 1.0) << to_string(k);
  EXPECT_EQ(*m.fpr, 0.0);
  EXPECT_EQ(*m.fnr, 0.0);
}

TEST(Metrics, AllNegativeGroundTruthAndPrediction) {
  const auto m = metrics(ConfusionCounts{0, 0, 16, 0});
  EXPECT_FALSE(m.st.has_value());
  EXPECT_FALSE(m.fnr.has_value());
  EXPECT_FALSE(m.iou.has_value());
  EXPECT_FALSE(m.dc.has_value());
  EXPECT_FALSE(m.ck.has_value());
  EXPECT_FALSE(m.auc.has_value());
  EXPECT_EQ(*m.sp, 1.0);
  EXPECT_EQ(*m.pa, 1.0);
  EXPECT_EQ(*m.fpr, 0.0);
  const auto d = m.degenerate();
  EXPECT_NE(std::find(d.begin(), d.end(), Metric::IoU), d.end());
  EXPECT_EQ(std::find(d.begin(), d.end(), Metric::SP), d.end());
}

TEST(Metrics, IdentitiesAndRangesOnRandomTables) {
  auto e = rng::substream(2, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto c = random_counts(e);
    const auto m = metrics(c);
    if (m.fnr && m.st) {
      EXPECT_NEAR(*m.fnr, 1 - *m.st, 1e-12);
    }
    if (m.fpr && m.sp) {
      EXPECT_NEAR(*m.fpr, 1 - *m.sp, 1e-12);
    }
    if (m.dc && m.iou) {
      EXPECT_NEAR(*m.dc, 2 * *m.iou / (1 + *m.iou), 1e-12);
    }
    for (Metric k : kAllMetrics) {
      const auto& v = m.get(k);
      if (!v) continue;
      EXPECT_LE(*v, 1.0 + 1e-12);
      EXPECT_GE(*v, k == Metric::CK ? -1.0 - 1e-12 : 0.0);
    }
  }
}

TEST(Metrics, SwappingPolaritySwapsRates) {
  auto e = rng::substream(3, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_counts(e);
    const auto m = metrics(c);
    const auto s = metrics(ConfusionCounts{c.tn, c.fn, c.tp, c.fp});
    EXPECT_EQ(m.st, s.sp);
    EXPECT_EQ(m.sp, s.st);
    EXPECT_EQ(m.fpr, s.fnr);
    EXPECT_EQ(m.fnr, s.fpr);
  }
}

TEST(Metrics, KappaZeroWhenIndependent) {
  // tp*tn == fp*fn, so po == pe.
  EXPECT_NEAR(*metrics(ConfusionCounts{6, 2, 1, 3}).ck, 0.0, 1e-12);
  EXPECT_NEAR(*metrics(ConfusionCounts{2, 4, 6, 3}).ck, 0.0, 1e-12);
}

TEST(RocAuc, PerfectAndInvertedScores) {
  const auto gt = mask_from({1, 1, 0, 0}, 2, 2);
  const std::vector<double> good{0.9, 0.8, 0.2, 0.1}, bad{0.1, 0.2, 0.8, 0.9}, flat{0.5, 0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(*roc_auc(gt, good), 1.0);
  EXPECT_DOUBLE_EQ(*roc_auc(gt, bad), 0.0);
  EXPECT_DOUBLE_EQ(*roc_auc(gt, flat), 0.5);
  EXPECT_FALSE(roc_auc(BinaryMask(2, 2), good).has_value());
}

TEST(RocAuc, MatchesPairCountingOracle) {
  auto e = rng::substream(4, 0);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryMask gt(10, 10);
    std::vector<double> s(100);
    for (std::size_t i = 0; i < 100; ++i) {
      gt.set_at(i, rng::uniform01(e) < 0.3);
      s[i] = static_cast<double>(rng::uniform_index(e, 12));
    }
    double pairs = 0, wins = 0;
    for (std::size_t i = 0; i < 100; ++i)
      for (std::size_t j = 0; j < 100; ++j)
        if (gt.at(i) && !gt.at(j)) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    if (pairs == 0) continue;
    EXPECT_NEAR(*roc_auc(gt, s), wins / pairs, 1e-12);
  }
}

TEST(RocAuc, HardScoresEqualBalancedAccuracy) {
  const auto gt = mask_from({1, 1, 0, 0, 1, 0}, 3, 2);
  const auto pred = mask_from({1, 0, 1, 0, 1, 0}, 3, 2);
  std::vector<double> s;
  for (std::size_t i = 0; i < 6; ++i) s.push_back(pred.at(i) ? 1.0 : 0.0);
  EXPECT_NEAR(*roc_auc(gt, s), *metrics(gt, pred).auc, 1e-12);
}
