#include <doctest.h>

#include "multimix/checkpoint.hpp"
#include "multimix/data.hpp"
#include "multimix/error.hpp"
#include "multimix/model.hpp"
#include "oracles.hpp"

using namespace multimix;

namespace {

ModelConfig tiny(Eigen::Index r = 1) {
  ModelConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden = {10, 7};
  cfg.embed_dim = 8;
  cfg.classes = 3;
  cfg.resolution = r;
  return cfg;
}

double max_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("encoder prefixes") {
  Rng rng(1);
  const auto params = init_params(tiny(), rng);
  const Eigen::MatrixXd x = oracle::random_matrix(6, 5, rng);
  CHECK(encode_front(params, x, 0) == x);
  CHECK(encode_front(params, x, params.num_layers()) == encode(params, x).stacked());
  for (std::size_t k = 0; k <= params.num_layers(); ++k)
    CHECK(encode_back(params, encode_front(params, x, k), k).stacked() == encode(params, x).stacked());
}

TEST_CASE("hand-computed forward pass") {
  ModelConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden = {2};
  cfg.embed_dim = 2;
  cfg.classes = 2;
  Rng rng(2);
  auto params = init_params(cfg, rng);
  params.layers[0].weight << 1, -1, 2, 0.5;
  params.layers[0].bias << 0.5, -3;
  params.layers[1].weight << 1, 0, -1, 2;
  params.layers[1].bias << 0, 1;
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  // hidden pre-activation (1 - 2 + 0.5, 2 + 1 - 3) = (-0.5, 0) -> relu (0, 0)
  // output (0, 1) with no activation
  const Eigen::MatrixXd z = embed(params, x);
  CHECK(z(0, 0) == 0.0);
  CHECK(z(1, 0) == 1.0);

  x << 3, 1;
  // pre (2.5, 3.5) -> (2.5, 3.5); out (2.5, -2.5 + 7 + 1) = (2.5, 5.5)
  const Eigen::MatrixXd z2 = embed(params, x);
  CHECK(z2(0, 0) == 2.5);
  CHECK(z2(1, 0) == 5.5);
}

TEST_CASE("classifier") {
  Rng rng(3);
  auto params = init_params(tiny(), rng);
  params.classifier.setZero();
  params.classifier_bias.setZero();
  const auto p = predict_proba(params, oracle::random_matrix(6, 4, rng));
  CHECK((p.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);

  ModelConfig two;
  two.input_dim = 1;
  two.hidden = {};
  two.embed_dim = 1;
  two.classes = 2;
  auto lin = init_params(two, rng);
  lin.classifier << 1, 0;
  lin.classifier_bias.setZero();
  const Eigen::MatrixXd logits_one = Eigen::MatrixXd::Ones(1, 1);
  const auto q = classify(lin, logits_one);
  CHECK(std::abs(q(0, 0) - std::exp(1.0) / (std::exp(1.0) + 1)) < 1e-15);
  CHECK(std::abs(q(1, 0) - 1 / (std::exp(1.0) + 1)) < 1e-15);
}

TEST_CASE("dense classification is per column") {
  Rng rng(4);
  const auto params = init_params(tiny(2), rng);
  const auto dense = encode(params, oracle::random_matrix(6, 3, rng));
  MixOutput out;
  for (const auto& z : dense.positions()) {
    out.embeddings.push_back(z);
    out.targets.push_back(Eigen::MatrixXd::Zero(3, 3));
    out.loss_weights.push_back(Eigen::VectorXd::Ones(3));
  }
  const auto probs = classify(params, out);
  REQUIRE(probs.size() == 2);
  for (std::size_t j = 0; j < 2; ++j)
    for (Eigen::Index k = 0; k < 3; ++k) {
      const Eigen::MatrixXd single = classify(params, Eigen::MatrixXd(dense.positions()[j].col(k)));
      CHECK(max_abs(probs[j].col(k), single) < 1e-15);
    }
}

TEST_CASE("zero weights: bias gradient is mean(P - Y)") {
  Rng rng(5);
  auto params = init_params(tiny(), rng);
  for (auto t : params.tensors()) std::fill(t.begin(), t.end(), 0.0);
  const Eigen::MatrixXd x = oracle::random_matrix(6, 6, rng);
  const Eigen::MatrixXd y = oracle::random_one_hot(3, 6, rng);
  const auto result = forward_backward(params, x, erm_plan(y, 1));
  const Eigen::VectorXd expected = (Eigen::MatrixXd::Constant(3, 6, 1.0 / 3) - y).rowwise().mean();
  CHECK(max_abs(result.grads.classifier_bias, expected) < 1e-15);
  CHECK(result.loss == doctest::Approx(std::log(3.0)));
}

TEST_CASE("ERM loss equals the mini-batch cross entropy") {
  Rng rng(6);
  const auto params = init_params(tiny(), rng);
  const Eigen::MatrixXd x = oracle::random_matrix(6, 9, rng);
  const Eigen::MatrixXd y = oracle::random_one_hot(3, 9, rng);
  CHECK(std::abs(evaluate_loss(params, x, erm_plan(y, 1)) -
                 oracle::cross_entropy_loop(y, predict_proba(params, x))) < 1e-12);
}

namespace {

GradCheckResult check_mode(const MixSpec& spec, Eigen::Index r, double gamma, std::uint64_t seed) {
  Rng rng(seed);
  auto params = init_params(tiny(r), rng);
  // zero biases put dead-input units exactly on the ReLU kink, where central
  // differences are meaningless
  for (auto& layer : params.layers)
    for (auto& b : layer.bias) b = 0.1 * rng.normal();
  const Eigen::MatrixXd x = oracle::random_matrix(6, 4, rng);
  const Eigen::MatrixXd y = oracle::random_one_hot(3, 4, rng);
  ModelParams teacher = params;
  for (auto t : teacher.tensors())
    for (auto& v : t) v += 0.05 * rng.normal();
  const Eigen::MatrixXd xt = x + 0.1 * oracle::random_matrix(6, 4, rng);
  LossSpec loss;
  loss.gamma = gamma;
  const auto draw = draw_mixing(spec, params, 4, rng);
  const auto plan = make_plan(params, x, y, draw, spec, loss, gamma < 1 ? &teacher : nullptr, &xt);
  const auto analytic = forward_backward(params, x, plan);
  return grad_check(params, analytic.grads, [&](const ModelParams& p) { return evaluate_loss(p, x, plan); }, 1e-4);
}

}  // namespace

TEST_CASE("finite-difference gradients in every mode") {
  struct Case {
    const char* name;
    MixMode mode;
    std::optional<std::size_t> site;
    bool dense;
    bool shared;
    Eigen::Index r;
    double gamma;
    AttentionConfig attention;
  };
  const Case cases[] = {
      {"erm", MixMode::erm, {}, false, false, 1, 1.0, {}},
      {"erm dense loss", MixMode::erm, {}, true, false, 4, 1.0, {}},
      {"input", MixMode::input, {}, false, false, 1, 1.0, {}},
      {"manifold hidden", MixMode::manifold, 1, false, false, 1, 1.0, {}},
      {"manifold embedding", MixMode::manifold, {}, false, false, 2, 1.0, {}},
      {"multimix hidden", MixMode::multimix, 2, false, false, 1, 1.0, {}},
      {"multimix embedding", MixMode::multimix, {}, false, false, 4, 1.0, {}},
      {"dense gap", MixMode::multimix, {}, true, false, 4, 1.0, {}},
      {"dense cam softmax", MixMode::multimix, {}, true, false, 4, 1.0,
       {AttentionAnchor::cam, AttentionNonlinearity::softmax}},
      {"dense shared lambda", MixMode::multimix, {}, true, true, 4, 1.0, {}},
      {"dense at hidden site", MixMode::multimix, 1, true, false, 4, 1.0, {}},
      {"dense distil", MixMode::multimix, {}, true, false, 4, 0.5, {}},
      {"multimix distil", MixMode::multimix, {}, false, false, 1, 0.3, {}},
      {"input distil", MixMode::input, {}, false, false, 1, 0.5, {}},
  };
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    CAPTURE(std::string(c.name));
    MixSpec spec;
    spec.mode = c.mode;
    spec.site = c.site;
    spec.tuples = 6;
    spec.dense = c.dense;
    spec.share_lambda_across_positions = c.shared;
    spec.attention = c.attention;
    const auto result = check_mode(spec, c.r, c.gamma, seed++);
    CHECK(result.coordinates > 0);
    INFO("worst tensor " << result.worst_tensor << " index " << result.worst_index);
    CHECK(result.max_relative_error < 1e-4);
  }
}

TEST_CASE("gradient checker") {
  Rng rng(7);
  auto params = init_params(tiny(), rng);
  // quadratic 0.5 |theta|^2 has gradient theta
  const auto quadratic = [](const ModelParams& p) {
    double s = 0.0;
    for (auto t : p.tensors())
      for (double v : t) s += 0.5 * v * v;
    return s;
  };
  const ModelParams grad = params;
  CHECK(grad_check(params, grad, quadratic, 1e-4).max_relative_error < 1e-8);

  ModelParams corrupted = grad;
  corrupted.classifier(0, 0) += 0.5;
  CHECK(grad_check(params, corrupted, quadratic, 1e-4).max_relative_error > 1e-2);
}

TEST_CASE("input gradient matches finite differences") {
  Rng rng(8);
  const auto params = init_params(tiny(), rng);
  const Eigen::MatrixXd x = oracle::random_matrix(6, 3, rng);
  const Eigen::MatrixXd y = oracle::random_one_hot(3, 3, rng);
  const Eigen::MatrixXd g = input_gradient(params, x, y);
  const auto plan = erm_plan(y, 1);
  const double h = 1e-5;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::MatrixXd up = x, down = x;
    up(k) += h;
    down(k) -= h;
    const double numeric = (evaluate_loss(params, up, plan) - evaluate_loss(params, down, plan)) / (2 * h);
    CHECK(relative_error(g(k), numeric) < 1e-5);
  }
}

TEST_CASE("sgd") {
  Rng rng(9);
  const auto start = init_params(tiny(), rng);
  Gradients g = ModelParams::zeros_like(start);
  for (auto t : g.tensors())
    for (auto& v : t) v = rng.normal();

  SUBCASE("plain step") {
    auto p = start;
    auto v = ModelParams::zeros_like(start);
    sgd_step(p, g, v, {0.1, 0.0, 0.0});
    CHECK(max_abs(p.classifier, start.classifier - 0.1 * g.classifier) < 1e-15);
    CHECK(max_abs(p.layers[0].weight, start.layers[0].weight - 0.1 * g.layers[0].weight) < 1e-15);
  }
  SUBCASE("momentum recursion over two steps") {
    auto p = start;
    auto v = ModelParams::zeros_like(start);
    const SgdOptions opts{0.05, 0.9, 1e-3};
    sgd_step(p, g, v, opts);
    sgd_step(p, g, v, opts);
    const double theta0 = start.classifier(1, 2), grad = g.classifier(1, 2);
    const double v1 = grad + 1e-3 * theta0;
    const double theta1 = theta0 - 0.05 * v1;
    const double v2 = 0.9 * v1 + grad + 1e-3 * theta1;
    const double theta2 = theta1 - 0.05 * v2;
    CHECK(std::abs(p.classifier(1, 2) - theta2) < 1e-15);
  }
  SUBCASE("zero learning rate") {
    auto p = start;
    auto v = ModelParams::zeros_like(start);
    sgd_step(p, g, v, {0.0, 0.9, 1e-4});
    for (std::size_t t = 0; t < p.tensors().size(); ++t) {
      const auto a = p.tensors()[t];
      const auto b = start.tensors()[t];
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST_CASE("checkpoint round-trip is exact") {
  Rng rng(11);
  const auto params = init_params(tiny(3), rng);
  const auto text = to_checkpoint_text(params);
  const auto back = parse_checkpoint(text);
  REQUIRE(back.same_shape(params));
  CHECK(back.resolution == 3);
  for (std::size_t t = 0; t < params.tensors().size(); ++t) {
    const auto a = params.tensors()[t];
    const auto b = back.tensors()[t];
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
  CHECK(to_checkpoint_text(back) == text);
  CHECK_THROWS(parse_checkpoint("multimix-checkpoint 99\n"));
  CHECK_THROWS(parse_checkpoint(text.substr(0, text.size() / 2)));
}

TEST_CASE("model config validation") {
  auto cfg = tiny();
  cfg.mix_layer_index = 7;
  CHECK_THROWS(cfg.validate());
  cfg = tiny();
  cfg.classes = 1;
  CHECK_THROWS(cfg.validate());
  CHECK(tiny().mix_site() == 3);
}

TEST_CASE("mix mode names") {
  for (auto m : {MixMode::erm, MixMode::input, MixMode::manifold, MixMode::multimix})
    CHECK(parse_mix_mode(to_string(m)) == m);
  CHECK(!parse_mix_mode("cutmix"));
}
