#include <gtest/gtest.h>

#include "surgpetl/config.hpp"
#include "surgpetl/model.hpp"
#include "surgpetl/rng.hpp"

using namespace surgpetl;

TEST(Config, ValidStaWindow) {
  ModelConfig cfg;
  cfg.scheme = Scheme::kSta;
  cfg.sta_k_values = {2};
  ClipSpec clip{16, 4, 1.0};
  ValidatedConfig v;
  auto errors = validate_config(cfg, clip, &v);
  ASSERT_TRUE(errors.empty());
  ASSERT_EQ(v.windows.size(), 1u);
  EXPECT_EQ(v.windows[0], 8);  // w = T/k = 16/2
}

TEST(Config, KMustDivideT) {
  ModelConfig cfg;
  cfg.scheme = Scheme::kSta;
  cfg.sta_k_values = {3};
  ClipSpec clip{8, 4, 1.0};
  auto errors = validate_config(cfg, clip);
  ASSERT_FALSE(errors.empty());
  EXPECT_EQ(errors[0].field, "sta_k_values");
}

TEST(Config, SmallestEvenWindowIsValid) {
  // T=8, k=4 -> w=2: pairing degenerates to adjacent frames, still legal
  ModelConfig cfg;
  cfg.scheme = Scheme::kSta;
  cfg.sta_k_values = {4};
  ClipSpec clip{8, 4, 1.0};
  ValidatedConfig v;
  auto errors = validate_config(cfg, clip, &v);
  ASSERT_TRUE(errors.empty());
  EXPECT_EQ(v.windows[0], 2);
}

TEST(Config, OddWindowRejected) {
  ModelConfig cfg;
  cfg.scheme = Scheme::kSta;
  cfg.sta_k_values = {8};  // w = 1
  ClipSpec clip{8, 4, 1.0};
  EXPECT_FALSE(validate_config(cfg, clip).empty());
}

TEST(Config, ValidationIsTotal) {
  // garbage everywhere still yields a structured error list, never a throw
  ModelConfig cfg;
  cfg.scale = "vit-xxl";
  cfg.bottleneck_ratio = -1;
  cfg.num_classes = 0;
  cfg.drop_path_rate = 2.0;
  cfg.patch_size = 13;
  cfg.scheme = Scheme::kSta;
  cfg.sta_k_values = {0, 3, -2};
  ClipSpec clip{0, 0, -1.0};
  auto errors = validate_config(cfg, clip);
  EXPECT_GE(errors.size(), 6u);
}

TEST(Config, FileRoundTripAndUnknownKeys) {
  ModelConfig cfg;
  ClipSpec clip;
  auto errors = load_config_text(
      "scheme=sta\nsta_k_values=2,8\nT=16\nR=4\n# comment\nbottleneck_ratio=0.25\n", cfg, clip);
  EXPECT_TRUE(errors.empty());
  EXPECT_EQ(cfg.scheme, Scheme::kSta);
  ASSERT_EQ(cfg.sta_k_values.size(), 2u);
  EXPECT_EQ(cfg.sta_k_values[1], 8);
  EXPECT_EQ(clip.frames, 16);

  errors = load_config_text("bogus_key=1\n", cfg, clip);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].field, "bogus_key");
}

TEST(Rng, SameSeedSameStream) {
  Rng a(0), b(0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(0, 1), b.uniform(0, 1));
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(0), b(1);
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) any_diff |= (a.uniform(0, 1) != b.uniform(0, 1));
  EXPECT_TRUE(any_diff);
}

TEST(Rng, SeededInitChecksumsMatch) {
  ModelConfig cfg;
  cfg.scale = "micro";
  cfg.scheme = Scheme::kAim;
  cfg.image_size = 16;
  cfg.patch_size = 8;
  cfg.num_classes = 2;
  ClipSpec clip{4, 2, 1.0};
  auto vc = validate_or_throw(cfg, clip);

  auto checksum = [](const Model& m) {
    double acc = 0.0;
    for (const auto& p : m.parameters())
      for (double v : p->value) acc += v;
    return acc;
  };
  Model m1(vc, ModelInit::kPaper, 0), m2(vc, ModelInit::kPaper, 0), m3(vc, ModelInit::kPaper, 1);
  EXPECT_EQ(checksum(m1), checksum(m2));
  EXPECT_NE(checksum(m1), checksum(m3));
}
