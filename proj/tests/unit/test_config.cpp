#include <gtest/gtest.h>

#include <cmath>

#include "lpld/config.hpp"
#include "lpld/runner.hpp"

using namespace lpld;

TEST(Config, RoundTripDefaults) {
  const ExperimentConfig c;
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, RoundTripCustom) {
  ExperimentConfig c;
  c.experiment = "gibbs";
  c.p = PExponent::infinity();
  c.q = PExponent::finite(1.5);
  c.n_list = {20, 40, 80};
  c.beta = 0.1 + 0.2;  // not exactly representable as a short decimal
  c.epsilon = 1e-3;
  c.budget = 123456;
  c.seed = 18446744073709551615ull;
  c.out_dir = "some dir/with spaces";
  c.k = 4;
  c.measure = "surface";
  c.method = "Direct";
  c.burn_in = 7;
  c.thin = 3;
  const auto text = serialize_config(c);
  EXPECT_EQ(parse_config(text), c);
  EXPECT_NE(text.find("p = inf"), std::string::npos);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
}

TEST(Config, ParsesCommentsAndQuoting) {
  const auto c = parse_config(
      "# experiment file\n"
      "experiment = \"maxent\"   # trailing comment\n"
      "p = 3\n"
      "q = inf\n"
      "n_list = [5, 10,15]\n"
      "out_dir = \"a#b\"\n"
      "\n"
      "beta = 0.75\n");
  EXPECT_EQ(c.experiment, "maxent");
  EXPECT_EQ(c.p.value(), 3.0);
  EXPECT_TRUE(c.q.is_infinite());
  EXPECT_EQ(c.n_list, (std::vector<std::size_t>{5, 10, 15}));
  EXPECT_EQ(c.out_dir, "a#b");
  EXPECT_EQ(c.beta, 0.75);
  EXPECT_TRUE(std::isnan(c.epsilon));
  EXPECT_NEAR(c.effective_epsilon(), 0.0075, 1e-15);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_config("p 2\n"), ConfigError);
  EXPECT_THROW(parse_config("color = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("budget = -5\n"), ConfigError);
  EXPECT_THROW(parse_config("beta = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("n_list = 5\n"), ConfigError);
  EXPECT_THROW(parse_config("p = 0.5\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST(Config, ValidationRules) {
  ExperimentConfig c;
  c.experiment = "rate-curve";
  c.validate();
  c.budget = 999;
  EXPECT_THROW(c.validate(), ConfigError);
  c.budget = 1000;
  c.q = PExponent::finite(2);
  EXPECT_THROW(c.validate(), ConfigError);  // q < p required
  c.q = PExponent::finite(1);
  c.experiment = "launch";
  EXPECT_THROW(c.validate(), ConfigError);
  c.experiment = "pbm";
  c.k = 11;
  EXPECT_THROW(c.validate(), ConfigError);  // k > n
  c.k = 1;
  c.n_list.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c.experiment = "maxent";
  c.validate();  // maxent ignores n_list
  c.experiment = "surface-check";
  c.n_list = {10};
  c.p = PExponent::infinity();
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, InputHashIsGitBlobHash) {
  // git hash-object of the empty blob.
  EXPECT_EQ(detail::sha1_hex(std::string("blob 0") + '\0'), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  ExperimentConfig a, b;
  b.out_dir = "elsewhere";
  EXPECT_EQ(input_hash(a), input_hash(b));
  b.seed = 2;
  EXPECT_NE(input_hash(a), input_hash(b));
}
