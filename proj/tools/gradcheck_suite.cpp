#include "cli.hpp"

#include "multimix/data.hpp"

namespace multimix::cli {
namespace {

struct Case {
  const char* name;
  MixMode mode;
  bool dense;
  bool distil;
};

constexpr Case kCases[] = {
    {"erm", MixMode::erm, false, false},
    {"input", MixMode::input, false, false},
    {"manifold", MixMode::manifold, false, false},
    {"multimix", MixMode::multimix, false, false},
    {"dense", MixMode::multimix, true, false},
    {"dense+distil", MixMode::multimix, true, true},
};

}  // namespace

std::vector<GradCheckRow> gradcheck_suite(std::uint64_t seed, bool corrupt) {
  ModelConfig model;
  model.input_dim = 6;
  model.hidden = {10};
  model.embed_dim = 8;
  model.classes = 3;
  model.resolution = 4;
  constexpr Eigen::Index m = 4;

  std::vector<GradCheckRow> rows;
  std::uint64_t index = 0;
  for (const auto& c : kCases) {
    Rng rng(Rng::derive_seed(seed, index++));
    const ModelParams params = init_params(model, rng);
    Eigen::MatrixXd inputs(model.input_dim, m);
    for (Eigen::Index k = 0; k < inputs.size(); ++k) inputs(k) = rng.normal();
    std::vector<int> labels(m);
    for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(model.classes)));
    const Eigen::MatrixXd targets = one_hot(labels, static_cast<int>(model.classes));

    MixSpec spec;
    spec.mode = c.mode;
    spec.tuples = 6;
    spec.dense = c.dense;
    LossSpec loss;
    loss.gamma = c.distil ? 0.5 : 1.0;

    ModelParams teacher = params;
    Eigen::MatrixXd teacher_inputs = inputs;
    if (c.distil) {
      for (auto t : teacher.tensors())
        for (auto& v : t) v += 0.1 * rng.normal();
      for (Eigen::Index k = 0; k < teacher_inputs.size(); ++k) teacher_inputs(k) += 0.1 * rng.normal();
    }

    const MixDraw draw = draw_mixing(spec, params, m, rng);
    const MixPlan plan = make_plan(params, inputs, targets, draw, spec, loss,
                                   c.distil ? &teacher : nullptr, c.distil ? &teacher_inputs : nullptr);
    auto analytic = forward_backward(params, inputs, plan).grads;
    if (corrupt) analytic.classifier_bias(0) += 1e-2;
    const auto result = grad_check(
        params, analytic, [&](const ModelParams& p) { return evaluate_loss(p, inputs, plan); },
        kGradCheckStep, 4000, seed);
    rows.push_back({c.name, result});
  }
  return rows;
}

}  // namespace multimix::cli
