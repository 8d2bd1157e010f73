#include <doctest.h>

#include "multimix/config.hpp"
#include "multimix/error.hpp"

using namespace multimix;

TEST_CASE("defaults survive an empty file") {
  const auto cfg = parse_config("# nothing here\n\n");
  CHECK(cfg.train.mix_mode == MixMode::multimix);
  CHECK(cfg.train.tuples == 1000);
  CHECK(cfg.train.gamma == 0.5);
  CHECK(cfg.train.mix_probability == 0.5);
  CHECK(cfg.train.alpha.kind == AlphaPolicy::Kind::uniform_range);
  CHECK(cfg.data.synthetic());
}

TEST_CASE("every key is addressable") {
  const auto cfg = parse_config(R"(
epochs = 7
batch_size = 16   # trailing comment
tuples = 33
alpha_policy = fixed
alpha = 1.5
input_alpha_policy = uniform
input_alpha_lo = 0.1
input_alpha_hi = 0.4
mix_mode = manifold
dense = true
distil = yes
gamma = 0.25
mix_probability = 0.75
lr = 0.02
lr_decay = 0.5
lr_milestones = 3,5
momentum = 0.8
weight_decay = 0
seed = 99
mix_layer_index = 1
attention_anchor = cam
attention_nonlinearity = softmax
share_lambda = on
resolution = 4
ema_momentum = 0.9
aug_sigma = 0.1
aug_dropout = 0.2
hidden = 5,6
embed_dim = 3
classes = 4
dim = 3
per_class_train = 10
per_class_test = 5
spread = 0.5
data_seed = 12
)");
  CHECK(cfg.train.epochs == 7);
  CHECK(cfg.train.batch_size == 16);
  CHECK(cfg.train.tuples == 33);
  CHECK(cfg.train.alpha.kind == AlphaPolicy::Kind::fixed);
  CHECK(cfg.train.alpha.value == 1.5);
  REQUIRE(cfg.train.input_alpha);
  CHECK(cfg.train.input_alpha->lo == 0.1);
  CHECK(cfg.train.mix_mode == MixMode::manifold);
  CHECK(cfg.train.dense);
  CHECK(cfg.train.distil);
  CHECK(cfg.train.lr_milestones == std::vector<std::size_t>{3, 5});
  CHECK(cfg.train.seed == 99);
  CHECK(cfg.model.mix_layer_index == 1u);
  CHECK(cfg.train.attention.anchor == AttentionAnchor::cam);
  CHECK(cfg.train.share_lambda_across_positions);
  CHECK(cfg.model.resolution == 4);
  CHECK(cfg.model.hidden == std::vector<Eigen::Index>{5, 6});
  CHECK(cfg.data.classes == 4);
  CHECK(cfg.data.spread == 0.5);

  // The snapshot reproduces every value.
  const auto text = to_text(cfg);
  CHECK(to_text(parse_config(text)) == text);
}

TEST_CASE("snapshot of defaults round-trips") {
  const auto text = to_text(ExperimentConfig{});
  CHECK(to_text(parse_config(text)) == text);
}

TEST_CASE("unknown keys are errors naming the key and line") {
  try {
    parse_config("epochs = 3\nlearning_rate = 0.1\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "learning_rate");
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }
}

TEST_CASE("bad values") {
  CHECK_THROWS_AS(parse_config("epochs = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("mix_mode = cutmix\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("dense = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gamma = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just some words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("batch_size = -3\n"), ConfigError);
}

TEST_CASE("manifest keys are skipped") {
  const auto cfg = parse_config("manifest.duration_seconds = 3.2\nepochs = 2\n");
  CHECK(cfg.train.epochs == 2);
}

TEST_CASE("synthetic data splits share centers") {
  DataConfig dc;
  dc.per_class_train = 50;
  dc.per_class_test = 20;
  const auto splits = load_data(dc);
  CHECK(splits.train.size() == 150);
  CHECK(splits.test.size() == 60);
  CHECK(splits.test.split == Split::test);
  const auto again = load_data(dc);
  CHECK(again.test.inputs == splits.test.inputs);

  const auto model = fit_model_to_data(ModelConfig{}, splits.train, splits.test);
  CHECK(model.input_dim == 2);
  CHECK(model.classes == 3);
}
