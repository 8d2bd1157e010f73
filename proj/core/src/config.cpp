#include "multimix/config.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include "multimix/error.hpp"
#include "multimix/io.hpp"

namespace multimix {
namespace {

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  std::string_view name;
  Setter set;
  Getter get;
};

[[noreturn]] void bad_value(std::string_view what) { throw std::invalid_argument(std::string(what)); }

double to_double(std::string_view v) {
  const auto d = io::parse_double(v);
  if (!d) bad_value("expected a number");
  return *d;
}

long long to_int(std::string_view v) {
  const auto i = io::parse_int(v);
  if (!i) bad_value("expected an integer");
  return *i;
}

std::size_t to_count(std::string_view v) {
  const long long i = to_int(v);
  if (i < 0) bad_value("expected a nonnegative integer");
  return static_cast<std::size_t>(i);
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value("expected true or false");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }
std::string from_double(double d) { return io::format_double(d); }

template <typename T>
std::string join(const std::vector<T>& values) {
  if (values.empty()) return "none";
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    out += std::to_string(v);
  }
  return out;
}

template <typename T>
std::vector<T> to_list(std::string_view v) {
  std::vector<T> out;
  if (v == "none" || v.empty()) return out;
  for (auto item : io::split(v, ',')) out.push_back(static_cast<T>(to_count(io::trim(item))));
  return out;
}

std::string_view alpha_kind(const AlphaPolicy& p) {
  return p.kind == AlphaPolicy::Kind::fixed ? "fixed" : "uniform";
}

void set_alpha_kind(AlphaPolicy& p, std::string_view v) {
  if (v == "fixed") p.kind = AlphaPolicy::Kind::fixed;
  else if (v == "uniform") p.kind = AlphaPolicy::Kind::uniform_range;
  else bad_value("expected fixed or uniform");
}

AlphaPolicy& input_alpha(ExperimentConfig& c) {
  if (!c.train.input_alpha) c.train.input_alpha = c.train.alpha;
  return *c.train.input_alpha;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      // data
      {"train_csv", [](auto& c, auto v) { c.data.train_csv = std::string(v); },
       [](const auto& c) { return c.data.train_csv.empty() ? std::string("none") : c.data.train_csv; }},
      {"test_csv", [](auto& c, auto v) { c.data.test_csv = std::string(v); },
       [](const auto& c) { return c.data.test_csv.empty() ? std::string("none") : c.data.test_csv; }},
      {"label_column", [](auto& c, auto v) { c.data.label_column = std::string(v); },
       [](const auto& c) { return c.data.label_column; }},
      {"classes", [](auto& c, auto v) { c.data.classes = static_cast<int>(to_count(v)); },
       [](const auto& c) { return std::to_string(c.data.classes); }},
      {"dim", [](auto& c, auto v) { c.data.dim = static_cast<Eigen::Index>(to_count(v)); },
       [](const auto& c) { return std::to_string(c.data.dim); }},
      {"per_class_train", [](auto& c, auto v) { c.data.per_class_train = to_count(v); },
       [](const auto& c) { return std::to_string(c.data.per_class_train); }},
      {"per_class_test", [](auto& c, auto v) { c.data.per_class_test = to_count(v); },
       [](const auto& c) { return std::to_string(c.data.per_class_test); }},
      {"spread", [](auto& c, auto v) { c.data.spread = to_double(v); },
       [](const auto& c) { return from_double(c.data.spread); }},
      {"data_seed", [](auto& c, auto v) { c.data.data_seed = to_count(v); },
       [](const auto& c) { return std::to_string(c.data.data_seed); }},
      // model
      {"hidden",
       [](auto& c, auto v) { c.model.hidden = to_list<Eigen::Index>(v); },
       [](const auto& c) { return join(c.model.hidden); }},
      {"embed_dim", [](auto& c, auto v) { c.model.embed_dim = static_cast<Eigen::Index>(to_count(v)); },
       [](const auto& c) { return std::to_string(c.model.embed_dim); }},
      {"resolution", [](auto& c, auto v) { c.model.resolution = static_cast<Eigen::Index>(to_count(v)); },
       [](const auto& c) { return std::to_string(c.model.resolution); }},
      {"mix_layer_index",
       [](auto& c, auto v) {
         if (v == "last") c.model.mix_layer_index.reset();
         else c.model.mix_layer_index = to_count(v);
       },
       [](const auto& c) {
         return c.model.mix_layer_index ? std::to_string(*c.model.mix_layer_index) : std::string("last");
       }},
      // training
      {"epochs", [](auto& c, auto v) { c.train.epochs = to_count(v); },
       [](const auto& c) { return std::to_string(c.train.epochs); }},
      {"batch_size", [](auto& c, auto v) { c.train.batch_size = to_count(v); },
       [](const auto& c) { return std::to_string(c.train.batch_size); }},
      {"tuples", [](auto& c, auto v) { c.train.tuples = to_count(v); },
       [](const auto& c) { return std::to_string(c.train.tuples); }},
      {"alpha_policy", [](auto& c, auto v) { set_alpha_kind(c.train.alpha, v); },
       [](const auto& c) { return std::string(alpha_kind(c.train.alpha)); }},
      {"alpha", [](auto& c, auto v) { c.train.alpha.value = to_double(v); },
       [](const auto& c) { return from_double(c.train.alpha.value); }},
      {"alpha_lo", [](auto& c, auto v) { c.train.alpha.lo = to_double(v); },
       [](const auto& c) { return from_double(c.train.alpha.lo); }},
      {"alpha_hi", [](auto& c, auto v) { c.train.alpha.hi = to_double(v); },
       [](const auto& c) { return from_double(c.train.alpha.hi); }},
      {"input_alpha_policy",
       [](auto& c, auto v) {
         if (v == "same") c.train.input_alpha.reset();
         else set_alpha_kind(input_alpha(c), v);
       },
       [](const auto& c) {
         return c.train.input_alpha ? std::string(alpha_kind(*c.train.input_alpha)) : std::string("same");
       }},
      {"input_alpha", [](auto& c, auto v) { input_alpha(c).value = to_double(v); }, {}},
      {"input_alpha_lo", [](auto& c, auto v) { input_alpha(c).lo = to_double(v); }, {}},
      {"input_alpha_hi", [](auto& c, auto v) { input_alpha(c).hi = to_double(v); }, {}},
      {"mix_mode",
       [](auto& c, auto v) {
         const auto mode = parse_mix_mode(v);
         if (!mode) bad_value("expected erm, input, manifold or multimix");
         c.train.mix_mode = *mode;
       },
       [](const auto& c) { return std::string(to_string(c.train.mix_mode)); }},
      {"dense", [](auto& c, auto v) { c.train.dense = to_bool(v); },
       [](const auto& c) { return from_bool(c.train.dense); }},
      {"distil", [](auto& c, auto v) { c.train.distil = to_bool(v); },
       [](const auto& c) { return from_bool(c.train.distil); }},
      {"gamma", [](auto& c, auto v) { c.train.gamma = to_double(v); },
       [](const auto& c) { return from_double(c.train.gamma); }},
      {"mix_probability", [](auto& c, auto v) { c.train.mix_probability = to_double(v); },
       [](const auto& c) { return from_double(c.train.mix_probability); }},
      {"lr", [](auto& c, auto v) { c.train.lr = to_double(v); },
       [](const auto& c) { return from_double(c.train.lr); }},
      {"lr_decay", [](auto& c, auto v) { c.train.lr_decay = to_double(v); },
       [](const auto& c) { return from_double(c.train.lr_decay); }},
      {"lr_milestones", [](auto& c, auto v) { c.train.lr_milestones = to_list<std::size_t>(v); },
       [](const auto& c) { return join(c.train.lr_milestones); }},
      {"momentum", [](auto& c, auto v) { c.train.momentum = to_double(v); },
       [](const auto& c) { return from_double(c.train.momentum); }},
      {"weight_decay", [](auto& c, auto v) { c.train.weight_decay = to_double(v); },
       [](const auto& c) { return from_double(c.train.weight_decay); }},
      {"seed", [](auto& c, auto v) { c.train.seed = to_count(v); },
       [](const auto& c) { return std::to_string(c.train.seed); }},
      {"attention_anchor",
       [](auto& c, auto v) {
         const auto a = parse_anchor(v);
         if (!a) bad_value("expected gap, cam or uniform");
         c.train.attention.anchor = *a;
       },
       [](const auto& c) { return std::string(to_string(c.train.attention.anchor)); }},
      {"attention_nonlinearity",
       [](auto& c, auto v) {
         const auto h = parse_nonlinearity(v);
         if (!h) bad_value("expected softmax or l1_relu");
         c.train.attention.nonlinearity = *h;
       },
       [](const auto& c) { return std::string(to_string(c.train.attention.nonlinearity)); }},
      {"share_lambda", [](auto& c, auto v) { c.train.share_lambda_across_positions = to_bool(v); },
       [](const auto& c) { return from_bool(c.train.share_lambda_across_positions); }},
      {"ema_momentum", [](auto& c, auto v) { c.train.ema_momentum = to_double(v); },
       [](const auto& c) { return from_double(c.train.ema_momentum); }},
      {"aug_sigma", [](auto& c, auto v) { c.train.augmentation.gaussian_sigma = to_double(v); },
       [](const auto& c) { return from_double(c.train.augmentation.gaussian_sigma); }},
      {"aug_dropout", [](auto& c, auto v) { c.train.augmentation.dropout_p = to_double(v); },
       [](const auto& c) { return from_double(c.train.augmentation.dropout_p); }},
  };
  return table;
}

std::string csv_value(std::string_view v) { return v == "none" ? std::string() : std::string(v); }

}  // namespace

void DataConfig::validate() const {
  if (synthetic()) {
    if (classes < 2) throw ConfigError("classes", 0, "need at least two classes");
    if (dim < 1) throw ConfigError("dim", 0, "must be positive");
    if (per_class_train == 0) throw ConfigError("per_class_train", 0, "must be positive");
    if (per_class_test == 0) throw ConfigError("per_class_test", 0, "must be positive");
    if (!(spread > 0.0)) throw ConfigError("spread", 0, "must be positive");
  } else if (test_csv.empty()) {
    throw ConfigError("test_csv", 0, "required when train_csv is set");
  }
}

void ExperimentConfig::validate() const {
  data.validate();
  try {
    train.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("", 0, e.what());
  }
  try {
    ModelConfig probe = model;
    probe.input_dim = std::max<Eigen::Index>(probe.input_dim, 1);
    probe.classes = std::max<Eigen::Index>(probe.classes, 2);
    probe.validate();
  } catch (const Error& e) {
    throw ConfigError("", 0, e.what());
  }
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value,
                   std::size_t line) {
  const auto& table = keys();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
  if (it == table.end()) throw ConfigError(std::string(key), line, "unknown key '" + std::string(key) + "'");
  try {
    if (key == "train_csv" || key == "test_csv") {
      it->set(config, csv_value(value));
    } else {
      it->set(config, value);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key), line,
                      "bad value '" + std::string(value) + "' for key '" + std::string(key) + "': " + e.what());
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  for (auto raw : io::split(text, '\n')) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = io::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(line), line_no, "expected key = value, got '" + std::string(line) + "'");
    const auto key = io::trim(line.substr(0, eq));
    const auto value = io::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", line_no, "missing key");
    if (key.starts_with(kManifestKeyPrefix)) continue;
    apply_setting(config, key, value, line_no);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError("", 0, e.what());
  }
  return parse_config(text);
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& key : keys()) {
    if (!key.get) continue;
    out += std::string(key.name) + " = " + key.get(config) + "\n";
    if (key.name == "input_alpha_policy" && config.train.input_alpha) {
      const auto& a = *config.train.input_alpha;
      out += "input_alpha = " + from_double(a.value) + "\n";
      out += "input_alpha_lo = " + from_double(a.lo) + "\n";
      out += "input_alpha_hi = " + from_double(a.hi) + "\n";
    }
  }
  return out;
}

DataSplits load_data(const DataConfig& config, const std::filesystem::path& base_dir) {
  config.validate();
  if (config.synthetic()) {
    const auto model = make_gaussian_mixture(config.classes, config.dim, config.spread, config.data_seed);
    return {sample_gaussian_mixture(model, config.per_class_train, Rng::derive_seed(config.data_seed, 1)),
            sample_gaussian_mixture(model, config.per_class_test, Rng::derive_seed(config.data_seed, 2),
                                    Split::test)};
  }
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  DataSplits out{load_csv(resolve(config.train_csv), config.label_column),
                 load_csv(resolve(config.test_csv), config.label_column)};
  out.test.split = Split::test;
  return out;
}

ModelConfig fit_model_to_data(ModelConfig model, const Dataset& train, const Dataset& test) {
  if (train.dim() != test.dim()) throw ShapeError("train and test data have different dimensions");
  model.input_dim = train.dim();
  model.classes = std::max(train.classes, test.classes);
  model.validate();
  return model;
}

}  // namespace multimix
