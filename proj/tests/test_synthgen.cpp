#include <gtest/gtest.h>

#include "skinaudit/hairmask.hpp"
#include "skinaudit/segmetrics.hpp"
#include "skinaudit/stats.hpp"
#include "skinaudit/synth_export.hpp"
#include "skinaudit/tonedist.hpp"
#include "test_support.hpp"

using namespace skinaudit;
using namespace skinaudit::synth;

namespace {

SynthSpec spec_with(double skin, double lesion, double noise = 0.0, std::uint64_t seed = 1) {
  SynthSpec s;
  s.size = 96;
  s.skin_ita_mean = skin;
  s.lesion_ita_mean = lesion;
  s.ita_noise_sd = noise;
  s.seed = seed;
  return s;
}

double measured_p6(const SynthImage& fx) {
  const auto samples = tone::region_samples(color::ita_map(fx.image), fx.gt);
  return *tone::six_patterns(samples, {})[5].value;
}

}  // namespace

TEST(SynthSpec, Validation) {
  EXPECT_NO_THROW(SynthSpec{}.validate());
  auto s = SynthSpec{};
  s.skin_ita_mean = 90;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.lesion_radius_frac = 0.6;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.count = 0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(ColorForIta, RoundTripsWithinQuantisation) {
  for (double ita = -kMaxAbsIta; ita <= kMaxAbsIta; ita += 2.5) {
    const auto ita_back = color::ita_pixel(color::srgb_to_lab(color_for_ita(ita)));
    ASSERT_TRUE(ita_back.has_value());
    EXPECT_NEAR(*ita_back, ita, 1.0) << ita;
  }
}

TEST(Generate, ZeroContrastGivesZeroP6) {
  for (const auto& fx : generate(spec_with(40, 40))) {
    EXPECT_LT(std::abs(measured_p6(fx)), 0.5);
  }
}

TEST(Generate, FortyDegreeGapRoundTrips) {
  for (const auto& fx : generate(spec_with(40, 0))) {
    EXPECT_NEAR(measured_p6(fx), -40.0, 1.0);
  }
}

TEST(Generate, DeterministicPerSeed) {
  auto s = spec_with(30, -10, 3.0, 7);
  s.count = 3;
  s.hair_strokes = 2;
  const auto a = generate(s), b = generate(s);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].gt, b[i].gt);
  }
  s.seed = 8;
  EXPECT_NE(generate(s)[0].image, a[0].image);
}

TEST(Generate, MeasuredP6IsMonotoneInGap) {
  std::vector<double> gaps, p6;
  for (double gap : {0.0, 5.0, 10.0, 20.0, 40.0}) {
    gaps.push_back(gap);
    p6.push_back(std::abs(measured_p6(generate_one(spec_with(30, 30 - gap), 0))));
  }
  EXPECT_EQ(stats::spearman(gaps, p6), 1.0);
}

TEST(Generate, GtIsACircleOfTheRequestedRadius) {
  auto s = spec_with(40, 0);
  s.size = 200;
  s.lesion_radius_frac = 0.2;
  const auto fx = generate_one(s, 0);
  const double expected = std::numbers::pi * 40.0 * 40.0;
  EXPECT_NEAR(static_cast<double>(fx.gt.count()), expected, 0.01 * expected);
}

TEST(Generate, HairExclusionKeepsSkinMeanStable) {
  auto clean = spec_with(35, 5, 0.0, 3);
  auto hairy = clean;
  hairy.hair_strokes = 5;
  const auto a = generate_one(clean, 0), b = generate_one(hairy, 0);
  ASSERT_GT(b.strokes.count(), 0u);
  const auto hm_a = hair::hair_mask(a.image), hm_b = hair::hair_mask(b.image);
  EXPECT_GT(hm_b.count(), hm_a.count());
  const auto skin_a = tone::region_samples(color::ita_map(a.image, hm_a), a.gt).skin;
  const auto skin_b = tone::region_samples(color::ita_map(b.image, hm_b), b.gt).skin;
  EXPECT_NEAR(tone::mean_ita(skin_a), tone::mean_ita(skin_b), 1.0);
}

TEST(ReferenceSegmenter, HighContrastIsAccurate) {
  const auto fx = generate_one(spec_with(40, 0), 0);
  EXPECT_GT(*seg::metrics(fx.gt, reference_segmenter(fx.image)).iou, 0.9);
}

TEST(ReferenceSegmenter, ZeroContrastIsNearChance) {
  const auto fx = generate_one(spec_with(20, 20, 4.0), 0);
  const auto m = seg::metrics(fx.gt, reference_segmenter(fx.image, 2.0, 5));
  EXPECT_LT(std::abs(*m.ck), 0.1);
  EXPECT_LT(*m.iou, 0.35);
}

TEST(ReferenceSegmenter, NoiselessIsDeterministic) {
  const auto fx = generate_one(spec_with(40, 0), 0);
  EXPECT_EQ(reference_segmenter(fx.image, 0.0, 1), reference_segmenter(fx.image, 0.0, 2));
}

TEST(OtsuThreshold, SeparatesTwoClusters) {
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(20 + (i % 5));
  for (int i = 0; i < 50; ++i) v.push_back(70 + (i % 5));
  const double t = otsu_threshold(v, 20, 74);
  EXPECT_GT(t, 24);
  EXPECT_LE(t, 70);
}

TEST(Export, WritesManifestMasksAndTruth) {
  const auto dir = fixtures::temp_dir("synth_export");
  const auto batch = parse_batch(nlohmann::json::parse(R"({"specs": [
      {"count": 2, "size": 32, "skin_ita_mean": 40, "lesion_ita_mean": 10, "class": "MEL"},
      {"count": 1, "size": 32, "skin_ita_mean": 20, "lesion_ita_mean": 15}], "segmenter_seed": 3})"));
  const auto out = export_batch(batch, dir);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[2].id, "s01_0000");
  const auto manifest = fixtures::read_file(dir / "manifest.csv");
  EXPECT_EQ(manifest.substr(0, manifest.find('\n')), "id,image,gt_mask,pred_mask:reference,class");
  EXPECT_NE(manifest.find("s00_0001,images/s00_0001.png,masks/s00_0001_gt.png,masks/s00_0001_reference.png,MEL"),
            std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "masks/s01_0000_reference.png"));
  EXPECT_NE(fixtures::read_file(dir / "truth.csv").find("s00_0000,40,10,"), std::string::npos);
}

TEST(Export, RejectsInvalidSpec) {
  EXPECT_THROW(parse_batch(nlohmann::json::parse(R"({"lesion_radius_frac": 0})")), Error);
  EXPECT_THROW(parse_batch(nlohmann::json::parse(R"({"count": "many"})")), Error);
}
