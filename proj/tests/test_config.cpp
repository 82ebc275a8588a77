#include <gtest/gtest.h>

#include <algorithm>

#include "cle/config.hpp"

namespace {

using namespace cle;

constexpr const char* kMinimal = "kappa = 3\ngrid = 64x32\ndelta = 1/64\nseed = 9\n";

bool has_error(const ConfigParse& p, const std::string& key, int line) {
  return std::any_of(p.errors.begin(), p.errors.end(), [&](const ConfigError& e) { return e.key == key && e.line == line; });
}

TEST(Config, MinimalFileUsesDefaults) {
  const ConfigParse p = parse_config(kMinimal);
  ASSERT_TRUE(p.ok()) << p.errors.front().to_string();
  const ExperimentConfig& c = *p.config;
  EXPECT_EQ(c.kappa, 3.0);
  EXPECT_EQ(c.width, 64);
  EXPECT_EQ(c.height, 32);
  EXPECT_DOUBLE_EQ(c.delta, 1.0 / 64);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.depth_limit, 2);
  EXPECT_EQ(c.eps, std::vector<double>{0.5});
  EXPECT_EQ(c.scales, (std::vector<double>{8, 16, 32, 64, 128, 256}));
  EXPECT_EQ(c.workers, 1);
  EXPECT_EQ(c.effective_lmax(), 2048);
}

TEST(Config, CommentsBlankLinesAndWhitespace) {
  const ConfigParse p = parse_config("# header\n\n  kappa=10/3   # fraction\ngrid = 8X8\r\ndelta = 0.125\nseed = 18446744073709551615\n");
  ASSERT_TRUE(p.ok());
  EXPECT_DOUBLE_EQ(p.config->kappa, 10.0 / 3.0);
  EXPECT_EQ(p.config->seed, 18446744073709551615ULL);
}

TEST(Config, KappaOutOfRangeNamesLineAndRange) {
  const ConfigParse p = parse_config("grid = 8x8\nkappa = 5\ndelta = 1\nseed = 1\n");
  ASSERT_FALSE(p.ok());
  ASSERT_EQ(p.errors.size(), 1u);
  EXPECT_EQ(p.errors[0].line, 2);
  EXPECT_EQ(p.errors[0].key, "kappa");
  EXPECT_NE(p.errors[0].message.find("(8/3, 4)"), std::string::npos);
  EXPECT_FALSE(parse_config("kappa = 4\ngrid = 8x8\ndelta = 1\nseed = 1\n").ok());
  EXPECT_FALSE(parse_config("kappa = 8/3\ngrid = 8x8\ndelta = 1\nseed = 1\n").ok());
}

TEST(Config, ReportsEveryError) {
  const ConfigParse p = parse_config(
      "kappa = 5\n"
      "colour = red\n"
      "grid = 8by8\n"
      "delta = 0.1\n"
      "delta = 0.2\n"
      "lmax = 7\n"
      "scales = 8, 4\n"
      "eps = 0.5, -1\n"
      "workers = 0\n"
      "no equals sign\n");
  EXPECT_FALSE(p.config.has_value());
  EXPECT_TRUE(has_error(p, "kappa", 1));
  EXPECT_TRUE(has_error(p, "colour", 2));
  EXPECT_TRUE(has_error(p, "grid", 3));
  EXPECT_TRUE(has_error(p, "delta", 5));
  EXPECT_TRUE(has_error(p, "lmax", 6));
  EXPECT_TRUE(has_error(p, "scales", 7));
  EXPECT_TRUE(has_error(p, "eps", 8));
  EXPECT_TRUE(has_error(p, "workers", 9));
  EXPECT_TRUE(has_error(p, "no equals sign", 10));
  EXPECT_TRUE(has_error(p, "seed", 0));
  EXPECT_EQ(p.errors.size(), 10u);
  EXPECT_NE(p.errors[1].to_string().find("line 2"), std::string::npos);
}

TEST(Config, SerializeRoundTrip) {
  ConfigParse p = parse_config(std::string(kMinimal) + "eps = 1, 1.5, 2\nworkers = 3\nout_dir = /tmp/x\nball_radius = 0.25\n");
  ASSERT_TRUE(p.ok());
  const std::string text = serialize_config(*p.config);
  const ConfigParse q = parse_config(text);
  ASSERT_TRUE(q.ok()) << text;
  EXPECT_EQ(*q.config, *p.config);
  EXPECT_EQ(serialize_config(*q.config), text);
}

TEST(Config, HashIgnoresRuntimeKeysOnly) {
  ExperimentConfig a = *parse_config(kMinimal).config;
  ExperimentConfig b = a;
  b.workers = 8;
  b.out_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 10;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = a;
  b.eps = {0.5, 1.0};
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

}  // namespace
