#include "doctest.h"
#include "rtgr/config.hpp"

using namespace rtgr;

TEST_CASE("defaults round-trip losslessly") {
  const ExperimentConfig cfg;
  const ExperimentConfig back = ExperimentConfig::parse(cfg.to_string());
  CHECK(back == cfg);
}

TEST_CASE("non-default values round-trip losslessly") {
  ExperimentConfig cfg;
  cfg.data.image_size = 32;
  cfg.data.train_count = 17;
  cfg.data.contrast = 0.123456789012345;
  cfg.model.image_size = 32;
  cfg.model.guide_width = 8;
  cfg.model.variant = {Recurrence::kSgrm, Reference::kHighLow2, 3};
  cfg.model.encoder_channels = {4, 8, 16, 16};
  cfg.model.share_step_params = true;
  cfg.model.init = {InitScheme::kFixedStd, 0.01};
  cfg.train.loss_weights = {1.0, 0.5, 0.25, 0.125};
  cfg.train.augment = false;
  cfg.train.seed = 12345678901234567ull;
  cfg.out_dir = "runs/exp one";

  const ExperimentConfig back = ExperimentConfig::parse(cfg.to_string());
  CHECK(back == cfg);
}

TEST_CASE("unknown keys and sections are rejected with the line number") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[data]\nimage_size = 64\nbogus = 1\n"),
                       doctest::Contains("line 3: unknown key 'data.bogus'"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[nope]\n"),
                       doctest::Contains("unknown section 'nope'"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("image_size = 64\n"),
                       doctest::Contains("before any section"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[data]\nimage_size 64\n"),
                       doctest::Contains("expected key = value"), ConfigError);
}

TEST_CASE("value validation names the key") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[data]\nimage_size = pony\n"),
                       doctest::Contains("'data.image_size' expects a non-negative integer"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[model]\nrecurrence = mystery\n"),
                       doctest::Contains("tgrm|sgrm|rrb"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[model]\nreference = up\n"),
                       doctest::Contains("low|hh|ll|hl2"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[train]\naugment = maybe\n"),
                       doctest::Contains("true or false"), ConfigError);
}

TEST_CASE("cross-field validation") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[data]\nimage_size = 30\n"),
                       doctest::Contains("divisible by 8"), ConfigError);
  // loss_weights must match steps+1.
  CHECK_THROWS_WITH_AS(
      ExperimentConfig::parse("[model]\nsteps = 2\n\n[train]\nloss_weights = 1,1\n"),
      doctest::Contains("steps+1"), ConfigError);
  const auto ok = ExperimentConfig::parse("[model]\nsteps = 2\n\n[train]\nloss_weights = 1,1,1\n");
  CHECK(ok.train.loss_weights.size() == 3);
}

TEST_CASE("comments, blank lines, and empty lists parse") {
  const auto cfg = ExperimentConfig::parse(
      "# experiment\n[data]\nimage_size = 16  # small\n\n[train]\nloss_weights =\n");
  CHECK(cfg.data.image_size == 16);
  CHECK(cfg.train.loss_weights.empty());
  CHECK(cfg.model.image_size == 16);  // mirrored from data
}

TEST_CASE("variant selector serialization keys") {
  const ExperimentConfig cfg;
  const std::string text = cfg.to_string();
  CHECK(text.find("recurrence = tgrm") != std::string::npos);
  CHECK(text.find("reference = low") != std::string::npos);
  CHECK(text.find("steps = ") != std::string::npos);
}
