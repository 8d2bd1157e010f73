#include <doctest.h>

#include "multimix/data.hpp"
#include "multimix/error.hpp"
#include "multimix/trainer.hpp"
#include "oracles.hpp"

using namespace multimix;

namespace {

bool identical(const ModelParams& a, const ModelParams& b) {
  if (!a.same_shape(b)) return false;
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t t = 0; t < ta.size(); ++t)
    if (!std::equal(ta[t].begin(), ta[t].end(), tb[t].begin())) return false;
  return true;
}

ModelConfig small_model(Eigen::Index r = 1) {
  ModelConfig m;
  m.input_dim = 4;
  m.hidden = {12};
  m.embed_dim = 6;
  m.classes = 3;
  m.resolution = r;
  return m;
}

LabeledBatch small_batch(Rng& rng, Eigen::Index m = 8) {
  return {oracle::random_matrix(4, m, rng), oracle::random_one_hot(3, m, rng)};
}

}  // namespace

TEST_CASE("EMA edge cases and recursion") {
  Rng rng(1);
  const auto student = init_params(small_model(), rng);
  const auto shadow = init_params(small_model(), rng);

  TeacherState copy{shadow, 0.0};
  ema_update(copy, student);
  CHECK(identical(copy.shadow, student));

  TeacherState frozen{shadow, 1.0};
  ema_update(frozen, student);
  CHECK(identical(frozen.shadow, shadow));

  TeacherState half{shadow, 0.5};
  ema_update(half, student);
  ema_update(half, student);
  const double t0 = shadow.classifier(2, 1), s = student.classifier(2, 1);
  const double t1 = 0.5 * t0 + 0.5 * s;
  CHECK(half.shadow.classifier(2, 1) == 0.5 * t1 + 0.5 * s);

  // a fixed point stays put
  TeacherState fixed{student, 0.99};
  ema_update(fixed, student);
  CHECK(identical(fixed.shadow, student));
}

TEST_CASE("views") {
  Rng rng(2);
  const Eigen::MatrixXd x = oracle::random_matrix(4, 5, rng);
  const auto before = rng;
  auto [v, w] = make_views(x, AugmentationConfig{}, rng);
  CHECK(v == x);
  CHECK(w == x);
  CHECK(rng.next_u64() == Rng(before).next_u64());

  AugmentationConfig aug{0.3, 0.2};
  Rng a(3), b(3);
  const auto first = make_views(x, aug, a);
  const auto second = make_views(x, aug, b);
  CHECK(first.first == second.first);
  CHECK(first.second == second.second);
  CHECK(first.first != first.second);

  CHECK_THROWS_AS(make_views(x, AugmentationConfig{-1.0, 0.0}, rng), ParameterError);
  CHECK_THROWS_AS(make_views(x, AugmentationConfig{0.0, 1.0}, rng), ParameterError);
}

TEST_CASE("erm step loss is the batch cross entropy") {
  Rng rng(4);
  const auto model = small_model();
  auto state = TrainState::start(init_params(model, rng), 0.99);
  const auto batch = small_batch(rng);
  const double expected = oracle::cross_entropy_loop(batch.targets, predict_proba(state.student, batch.inputs));
  TrainConfig cfg;
  cfg.mix_mode = MixMode::erm;
  const auto result = train_step(state, batch, model, cfg, 0.1, rng);
  CHECK(result.branch == MixMode::erm);
  CHECK(std::abs(result.loss - expected) < 1e-12);
}

TEST_CASE("multimix with identity interpolation steps exactly like ERM") {
  Rng rng(5);
  const auto model = small_model();
  const auto initial = init_params(model, rng);
  const auto batch = small_batch(rng);

  TrainConfig erm;
  erm.mix_mode = MixMode::erm;
  auto a = TrainState::start(initial, 0.99);
  Rng ra(6);
  const auto la = train_step(a, batch, model, erm, 0.1, ra);

  TrainConfig mm;
  mm.mix_mode = MixMode::multimix;
  mm.mix_probability = 1.0;
  auto b = TrainState::start(initial, 0.99);
  Rng rb(6);
  StepOverrides force;
  force.lambda = InterpolationMatrix::identity(batch.size());
  const auto lb = train_step(b, batch, model, mm, 0.1, rb, &force);
  CHECK(lb.branch == MixMode::multimix);
  CHECK(la.loss == lb.loss);
  CHECK(identical(a.student, b.student));
}

TEST_CASE("gamma = 1 makes the teacher irrelevant") {
  Rng rng(7);
  for (bool dense : {false, true}) {
    CAPTURE(dense);
    const auto model = small_model(dense ? 3 : 1);
    const auto initial = init_params(model, rng);
    TrainConfig cfg;
    cfg.distil = true;
    cfg.gamma = 1.0;
    cfg.dense = dense;
    cfg.tuples = 20;
    cfg.augmentation = {0.1, 0.1};

    auto plain = TrainState::start(initial, 0.9);
    auto perturbed = TrainState::start(initial, 0.9);
    for (auto t : perturbed.teacher.shadow.tensors())
      for (auto& v : t) v += 1.0;

    Rng data(8), ra(9), rb(9);
    for (int step = 0; step < 10; ++step) {
      const auto batch = small_batch(data);
      train_step(plain, batch, model, cfg, 0.05, ra);
      train_step(perturbed, batch, model, cfg, 0.05, rb);
      REQUIRE(identical(plain.student, perturbed.student));
    }
    CHECK(!identical(plain.teacher.shadow, perturbed.teacher.shadow));
  }
}

TEST_CASE("distillation off and gamma = 1 with identity views agree") {
  Rng rng(10);
  const auto model = small_model();
  const auto initial = init_params(model, rng);
  TrainConfig off;
  off.tuples = 16;
  TrainConfig on = off;
  on.distil = true;
  on.gamma = 1.0;
  auto a = TrainState::start(initial, 0.99);
  auto b = TrainState::start(initial, 0.99);
  Rng data(11), ra(12), rb(12);
  for (int step = 0; step < 5; ++step) {
    const auto batch = small_batch(data);
    train_step(a, batch, model, off, 0.05, ra);
    train_step(b, batch, model, on, 0.05, rb);
  }
  CHECK(identical(a.student, b.student));
}

TEST_CASE("mix probability picks the branch") {
  Rng rng(13);
  const auto model = small_model();
  auto state = TrainState::start(init_params(model, rng), 0.99);
  TrainConfig cfg;
  cfg.tuples = 8;
  int multimix = 0;
  const int n = 400;
  for (int i = 0; i < n; ++i)
    multimix += train_step(state, small_batch(rng), model, cfg, 0.0, rng).branch == MixMode::multimix;
  // Binomial(400, 0.5)
  CHECK(std::abs(multimix - 200) < 4 * 10);
}

TEST_CASE("learning rate schedule") {
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.lr_decay = 0.1;
  cfg.lr_milestones = {10, 20};
  CHECK(cfg.lr_at(0) == 0.1);
  CHECK(cfg.lr_at(9) == 0.1);
  CHECK(cfg.lr_at(10) == doctest::Approx(0.01));
  CHECK(cfg.lr_at(25) == doctest::Approx(0.001));
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.mix_probability = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

namespace {

struct Toy {
  Dataset train, test;
};

Toy toy() {
  const auto mixture = make_gaussian_mixture(3, 2, 1.0, 3);
  return {sample_gaussian_mixture(mixture, 40, 1), sample_gaussian_mixture(mixture, 20, 2, Split::test)};
}

TrainConfig quick(MixMode mode) {
  TrainConfig cfg;
  cfg.mix_mode = mode;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  cfg.tuples = 50;
  cfg.lr = 0.01;
  cfg.seed = 4;
  return cfg;
}

ModelConfig toy_model() {
  ModelConfig m;
  m.hidden = {16};
  m.embed_dim = 8;
  return m;
}

}  // namespace

TEST_CASE("fit is deterministic and logs every epoch") {
  const auto data = toy();
  for (auto mode : {MixMode::erm, MixMode::input, MixMode::manifold, MixMode::multimix}) {
    const auto a = fit(data.train, data.test, toy_model(), quick(mode));
    const auto b = fit(data.train, data.test, toy_model(), quick(mode));
    CHECK(a.log.to_csv() == b.log.to_csv());
    CHECK(identical(a.student, b.student));
    const auto rows = a.log.rows();
    REQUIRE(rows.size() == 3);
    CHECK(rows.front().epoch == 1);
    CHECK(rows.back().lr == 0.01);
  }
  const auto csv = fit(data.train, data.test, toy_model(), quick(MixMode::erm)).log.to_csv();
  CHECK(csv.rfind("epoch,train_loss,test_top1_error,lr\n", 0) == 0);
}

TEST_CASE("zero learning rate leaves the model at its initialization") {
  const auto data = toy();
  auto cfg = quick(MixMode::multimix);
  cfg.lr = 0.0;
  const auto result = fit(data.train, data.test, toy_model(), cfg);
  auto model = toy_model();
  Rng init = Rng(cfg.seed).split(0);
  CHECK(identical(result.student, init_params(model, init)));
}

TEST_CASE("on_epoch sees every row") {
  const auto data = toy();
  std::size_t seen = 0;
  fit(data.train, data.test, toy_model(), quick(MixMode::erm), [&](const EpochMetrics& m) {
    CHECK(m.epoch == ++seen);
  });
  CHECK(seen == 3);
}

TEST_CASE("a diverging run raises a numeric error") {
  const auto data = toy();
  auto cfg = quick(MixMode::erm);
  cfg.lr = 1e6;
  cfg.epochs = 20;
  CHECK_THROWS_AS(fit(data.train, data.test, toy_model(), cfg), NumericError);
}
