#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "multimix/checkpoint.hpp"
#include "multimix/config.hpp"
#include "multimix/error.hpp"
#include "multimix/eval.hpp"
#include "multimix/geometry.hpp"
#include "multimix/io.hpp"
#include "multimix/mixer.hpp"

namespace multimix::cli {
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

struct DataSource {
  std::string data;
  std::string checkpoint;
};

ExperimentConfig read_experiment(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config", 0, "--config is required");
  auto config = load_config(g.config);
  if (g.seed) config.train.seed = *g.seed;
  // Snapshots must stay valid from any working directory.
  const fs::path base = fs::absolute(fs::path(g.config)).parent_path();
  for (auto* p : {&config.data.train_csv, &config.data.test_csv})
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  return config;
}

fs::path ensure_out(const Globals& g) {
  fs::path out(g.out);
  fs::create_directories(out);
  return out;
}

Dataset evaluation_data(const Globals& g, const DataSource& src) {
  if (!src.data.empty()) return load_csv(src.data);
  if (g.config.empty()) throw ConfigError("--data", 0, "pass --data or --config");
  return load_data(read_experiment(g).data).test;
}

std::uint64_t seed_or(const Globals& g, std::uint64_t fallback) { return g.seed.value_or(fallback); }

void check_data_fits(const ModelParams& params, const Dataset& data) {
  if (data.dim() != params.input_dim())
    throw ShapeError("data has " + std::to_string(data.dim()) + " features, model expects " +
                     std::to_string(params.input_dim()));
  if (data.classes > params.classes())
    throw ShapeError("data has more classes than the model");
}

int cmd_train(const Globals& g, std::ostream& out) {
  const auto started = std::chrono::steady_clock::now();
  const auto config = read_experiment(g);
  const auto splits = load_data(config.data);
  const auto model = fit_model_to_data(config.model, splits.train, splits.test);
  const auto result = fit(splits.train, splits.test, model, config.train);

  const auto dir = ensure_out(g);
  const fs::path checkpoint = dir / "checkpoint.txt";
  const fs::path metrics = dir / "metrics.csv";
  const fs::path manifest = dir / "manifest.txt";
  write_checkpoint(result.student, checkpoint);
  io::write_file_atomic(metrics, result.log.to_csv());

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::string text = to_text(config);
  text += "manifest.seed = " + std::to_string(config.train.seed) + "\n";
  text += "manifest.checkpoint = " + fs::absolute(checkpoint).string() + "\n";
  text += "manifest.metrics = " + fs::absolute(metrics).string() + "\n";
  text += "manifest.duration_seconds = " + io::format_double(seconds) + "\n";
  text += "manifest.version = " MULTIMIX_VERSION "\n";
  io::write_file_atomic(manifest, text);

  const auto rows = result.log.rows();
  if (!rows.empty())
    out << "epochs " << rows.size() << " train_loss " << io::format_double(rows.back().train_loss)
        << " test_top1_error " << io::format_double(rows.back().test_top1_error) << "\n";
  out << "wrote " << checkpoint.string() << ", " << metrics.string() << ", " << manifest.string()
      << "\n";
  return kOk;
}

int cmd_eval(const Globals& g, const DataSource& src, std::ostream& out) {
  const auto params = read_checkpoint(src.checkpoint);
  const auto data = evaluation_data(g, src);
  check_data_fits(params, data);
  const Eigen::MatrixXd targets = one_hot(data.labels, static_cast<int>(params.classes()));
  const Eigen::MatrixXd z = embed(params, data.inputs);

  out << "top1_error " << io::format_double(top1_error(predict_proba(params, data.inputs), targets))
      << "\n";
  try {
    out << "alignment " << io::format_double(alignment(z, data.labels)) << "\n";
  } catch (const UndefinedMetricError& e) {
    out << "alignment undefined (" << e.what() << ")\n";
  }
  try {
    out << "uniformity " << io::format_double(uniformity(z)) << "\n";
  } catch (const UndefinedMetricError& e) {
    out << "uniformity undefined (" << e.what() << ")\n";
  }
  const auto path = ensure_out(g) / "embeddings.csv";
  io::write_file_atomic(path, embeddings_csv(z, data.labels));
  out << "wrote " << path.string() << "\n";
  return kOk;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  for (auto item : io::split(text, ',')) {
    const auto v = io::parse_double(io::trim(item));
    if (!v || *v < 0.0) throw ConfigError("--epsilon", 0, "bad epsilon '" + std::string(item) + "'");
    values.push_back(*v);
  }
  return values;
}

struct AttackFlags {
  std::string epsilons = "0,0.25,0.5,1";
  double step_ratio = 0.5;
  std::size_t iterations = 7;
  bool no_random_start = false;
};

int cmd_attack(const Globals& g, const DataSource& src, const AttackFlags& flags, std::ostream& out) {
  const auto params = read_checkpoint(src.checkpoint);
  const auto data = evaluation_data(g, src);
  check_data_fits(params, data);
  Rng rng(seed_or(g, 0));
  std::vector<AttackReportRow> rows;
  for (double eps : parse_list(flags.epsilons)) {
    AttackConfig pgd;
    pgd.iterations = flags.iterations;
    pgd.step_size = std::max(flags.step_ratio * eps, 1e-12);
    pgd.random_start = !flags.no_random_start;
    rows.push_back(attack_row(params, data, eps, pgd, rng));
    const auto& r = rows.back();
    out << "epsilon " << io::format_double(r.epsilon) << " clean " << io::format_double(r.clean_err)
        << " fgsm " << io::format_double(r.fgsm_err) << " pgd " << io::format_double(r.pgd_err)
        << "\n";
  }
  const auto path = ensure_out(g) / "attack.csv";
  io::write_file_atomic(path, attack_report_csv(rows));
  out << "wrote " << path.string() << "\n";
  return kOk;
}

int cmd_ood(const Globals& g, const DataSource& src, std::optional<double> shift, std::ostream& out) {
  const auto params = read_checkpoint(src.checkpoint);
  const auto id = evaluation_data(g, src);
  check_data_fits(params, id);
  double spread = 1.0;
  if (!g.config.empty()) spread = read_experiment(g).data.spread;
  const double distance = shift.value_or(8.0 * spread);
  const auto ood = gen_ood_shift(id, distance, seed_or(g, 0));

  std::vector<ScoredExample> scores = score_examples(params, id.inputs, true);
  const auto ood_scores = score_examples(params, ood.inputs, false);
  scores.insert(scores.end(), ood_scores.begin(), ood_scores.end());
  const auto m = ood_metrics(scores);

  const auto dir = ensure_out(g);
  write_csv(ood, dir / "ood.csv");
  io::write_file_atomic(dir / "ood_manifest.txt",
                        "ood=1\nshift=" + io::format_double(distance) + "\nseed=" +
                            std::to_string(seed_or(g, 0)) + "\n");
  const std::string metrics = "detection_accuracy,auroc,aupr_id,aupr_ood\n" +
                              io::format_double(m.detection_accuracy) + "," + io::format_double(m.auroc) +
                              "," + io::format_double(m.aupr_id) + "," + io::format_double(m.aupr_ood) +
                              "\n";
  io::write_file_atomic(dir / "ood_metrics.csv", metrics);
  out << "shift " << io::format_double(distance) << "\n"
      << "detection_accuracy " << io::format_double(m.detection_accuracy) << "\n"
      << "auroc " << io::format_double(m.auroc) << "\n"
      << "aupr_id " << io::format_double(m.aupr_id) << "\n"
      << "aupr_ood " << io::format_double(m.aupr_ood) << "\n";
  return kOk;
}

struct SampleFlags {
  std::size_t m = 10;
  std::size_t n = 300;
  std::string policy = "uniform";
  double alpha = 1.0;
  double alpha_lo = 0.5;
  double alpha_hi = 2.0;
};

int cmd_sample(const Globals& g, const SampleFlags& f, std::ostream& out) {
  if (f.m < 2) throw ConfigError("--m", 0, "need at least two batch points");
  if (f.n < 1) throw ConfigError("--n", 0, "need at least one sample");
  if (f.policy != "fixed" && f.policy != "uniform")
    throw ConfigError("--alpha-policy", 0, "expected fixed or uniform");
  AlphaPolicy policy;
  try {
    policy = f.policy == "fixed" ? AlphaPolicy::fixed(f.alpha) : AlphaPolicy::uniform_range(f.alpha_lo, f.alpha_hi);
    policy.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("--alpha", 0, e.what());
  }

  Rng rng(seed_or(g, 0));
  const auto m = static_cast<Eigen::Index>(f.m);
  Eigen::MatrixXd batch(2, m);
  for (Eigen::Index k = 0; k < batch.size(); ++k) batch(k) = rng.normal();

  const auto perm = random_permutation(f.m, rng);
  const auto pair = pairwise_matrix(perm, beta_sample(policy.draw(rng), rng));
  const Eigen::MatrixXd pairs = batch * pair.weights;
  const auto lambda = sample_interpolation_matrix(f.m, f.n, policy, rng);
  const Eigen::MatrixXd hull = batch * lambda.weights;

  std::size_t segment_pass = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
    const double residual = segment_distance({batch(0, i), batch(1, i)}, {batch(0, j), batch(1, j)},
                                             {pairs(0, i), pairs(1, i)});
    segment_pass += residual < 1e-9;
  }
  const auto inside = hull_membership(hull, batch, 1e-9);
  const auto hull_pass = static_cast<std::size_t>(std::count(inside.begin(), inside.end(), true));

  std::string csv = "kind,index,x,y\n";
  const auto emit = [&](const char* kind, const Eigen::MatrixXd& pts) {
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
      csv += std::string(kind) + "," + std::to_string(i) + "," + io::format_double(pts(0, i)) + "," +
             io::format_double(pts(1, i)) + "\n";
  };
  emit("batch", batch);
  emit("pair", pairs);
  emit("hull", hull);
  const auto path = ensure_out(g) / "samples.csv";
  io::write_file_atomic(path, csv);

  out << "hull_membership " << hull_pass << "/" << f.n << "\n"
      << "segment_collinearity " << segment_pass << "/" << f.m << "\n"
      << "wrote " << path.string() << "\n";
  return hull_pass == f.n && segment_pass == f.m ? kOk : kFailure;
}

int cmd_gradcheck(const Globals& g, bool corrupt, std::ostream& out) {
  const auto rows = gradcheck_suite(seed_or(g, 0), corrupt);
  double worst = 0.0;
  for (const auto& row : rows) {
    worst = std::max(worst, row.result.max_relative_error);
    out << row.mode << " max_relative_error " << io::format_double(row.result.max_relative_error)
        << " coordinates " << row.result.coordinates << "\n";
  }
  out << "max_relative_error " << io::format_double(worst) << "\n";
  return worst < kGradCheckTolerance ? kOk : kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MultiMix training and evaluation"};
  app.name("multimix");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "flat key=value config file");
  app.add_option("--seed", g.seed, "overrides the configured seed");
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  app.add_subcommand("train", "train a model from --config");

  DataSource src;
  const auto add_source = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", src.checkpoint, "checkpoint file")->required();
    cmd->add_option("--data", src.data, "dataset CSV; defaults to the config's test split");
  };
  auto* eval = app.add_subcommand("eval", "top-1 error, alignment, uniformity, embeddings CSV");
  add_source(eval);

  AttackFlags attack_flags;
  auto* attack = app.add_subcommand("attack", "FGSM and PGD report");
  add_source(attack);
  attack->add_option("--epsilon", attack_flags.epsilons, "comma-separated radii")->capture_default_str();
  attack->add_option("--step-ratio", attack_flags.step_ratio, "PGD step as a fraction of epsilon")
      ->capture_default_str();
  attack->add_option("--iterations", attack_flags.iterations, "PGD iterations")->capture_default_str();
  attack->add_flag("--no-random-start", attack_flags.no_random_start, "start PGD at the clean input");

  std::optional<double> shift;
  auto* ood = app.add_subcommand("ood", "max-softmax OOD detection against a shifted copy");
  add_source(ood);
  ood->add_option("--shift", shift, "shift distance; default 8 x spread");

  SampleFlags sample_flags;
  auto* sample = app.add_subcommand("sample", "pairwise and convex-hull samples of a 2-D batch");
  sample->add_option("--m", sample_flags.m, "batch size")->capture_default_str();
  sample->add_option("--n", sample_flags.n, "hull samples")->capture_default_str();
  sample->add_option("--alpha-policy", sample_flags.policy, "fixed or uniform")->capture_default_str();
  sample->add_option("--alpha", sample_flags.alpha, "fixed alpha")->capture_default_str();
  sample->add_option("--alpha-lo", sample_flags.alpha_lo)->capture_default_str();
  sample->add_option("--alpha-hi", sample_flags.alpha_hi)->capture_default_str();

  bool corrupt = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every loss mode");
  gradcheck->add_flag("--corrupt", corrupt, "perturb the analytic gradient (negative control)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kConfigError;
  }

  try {
    if (app.got_subcommand("train")) return cmd_train(g, out);
    if (app.got_subcommand(eval)) return cmd_eval(g, src, out);
    if (app.got_subcommand(attack)) return cmd_attack(g, src, attack_flags, out);
    if (app.got_subcommand(ood)) return cmd_ood(g, src, shift, out);
    if (app.got_subcommand(sample)) return cmd_sample(g, sample_flags, out);
    if (app.got_subcommand(gradcheck)) return cmd_gradcheck(g, corrupt, out);
  } catch (const ConfigError& e) {
    err << "config error";
    if (!e.key().empty()) err << " [" << e.key() << "]";
    err << ": " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace multimix::cli
