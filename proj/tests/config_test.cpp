#include "feta/config.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "feta/errors.h"

namespace feta {
namespace {

TEST(KeyValues, SkipsCommentsAndTrims) {
  const auto kv = parse_key_values("# header\n\n  layers =  2 \nfilter=arma\r\n", "t");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("layers"), "2");
  EXPECT_EQ(kv.at("filter"), "arma");
}

TEST(KeyValues, DuplicateKeyNamesLine) {
  try {
    parse_key_values("a = 1\n\na = 2\n", "run.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:3"), std::string::npos) << e.what();
  }
}

TEST(KeyValues, MissingEqualsRejected) { EXPECT_THROW(parse_key_values("layers 2\n", "t"), ConfigError); }

TEST(RunConfigParse, DefaultsWhenEmpty) {
  const RunConfig c = parse_run_config("");
  const FetaConfig d;
  EXPECT_EQ(c.model.layers, d.layers);
  EXPECT_EQ(c.train.batch_size, 32u);
  EXPECT_EQ(c.out, "feta-run");
}

TEST(RunConfigParse, TypedValues) {
  const RunConfig c = parse_run_config(
      "preset = Synthetic_1\nseed = 9\nlayers = 1\nhidden = 16\nheads = 1\norder = 4\n"
      "filter = static-chebyshev\nlr = 5e-4\nfixed_lambda_max = true\n");
  EXPECT_EQ(c.preset, "Synthetic_1");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.model.order, 4u);
  EXPECT_EQ(c.model.filter, FilterKind::kStaticChebyshev);
  EXPECT_DOUBLE_EQ(c.train.lr, 5e-4);
  EXPECT_TRUE(c.model.fixed_lambda_max);
}

TEST(RunConfigParse, UnknownKeyRejected) {
  EXPECT_THROW(parse_run_config("layres = 2\n"), ConfigError);
}

TEST(RunConfigParse, MalformedValuesRejected) {
  EXPECT_THROW(parse_run_config("layers = two\n"), ConfigError);
  EXPECT_THROW(parse_run_config("layers = -1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("lr = 1e-3x\n"), ConfigError);
  EXPECT_THROW(parse_run_config("fixed_lambda_max = yes\n"), ConfigError);
  EXPECT_THROW(parse_run_config("filter = fourier\n"), ConfigError);
}

TEST(RunConfigFormat, RoundTripsExactly) {
  RunConfig c;
  c.preset = "Synthetic_2";
  c.seed = 123;
  c.data_seed = 4;
  c.model.filter = FilterKind::kArma;
  c.model.pe_mode = PeMode::kKernelDiffusion;
  c.model.pe_beta = 0.1 + 0.2;  // not exactly representable as a short decimal
  c.train.lr = 1.0 / 3.0;
  c.train.time_budget_s = 900;
  const std::string text = format_run_config(c);
  const RunConfig back = parse_run_config(text);
  EXPECT_EQ(format_run_config(back), text);
  EXPECT_EQ(back.model.pe_beta, c.model.pe_beta);
  EXPECT_EQ(back.train.lr, c.train.lr);
  EXPECT_EQ(back.model.filter, FilterKind::kArma);
  EXPECT_EQ(back.model.pe_mode, PeMode::kKernelDiffusion);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1e-300, 3.0, -2.5e17, std::nextafter(1.0, 2.0)}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(ModelConfig, EntriesRoundTrip) {
  FetaConfig c;
  c.heads = 2;
  c.hidden = 8;
  c.in_dim = 3;
  c.out_dim = 2;
  const FetaConfig back = parse_model_config(model_config_entries(c), "t");
  EXPECT_EQ(model_config_entries(back), model_config_entries(c));
}

TEST(ModelConfig, RunKeysAreNotModelKeys) {
  auto kv = model_config_entries(FetaConfig{});
  kv["seed"] = "1";
  EXPECT_THROW(parse_model_config(kv, "t"), ConfigError);
}

TEST(TextFiles, MissingFileIsIoError) {
  EXPECT_THROW(read_text_file("/nonexistent/dir/file.cfg"), IoError);
  EXPECT_THROW(write_text_file("/nonexistent/dir/file.cfg", "x"), IoError);
}

}  // namespace
}  // namespace feta
