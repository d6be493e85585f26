#include "mkv/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mkv {

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Converge: return "converge";
    case Experiment::RbmSweep: return "rbm-sweep";
    case Experiment::Timing: return "timing";
    case Experiment::Validate: return "validate";
    case Experiment::Chaos: return "chaos";
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::Converge, Experiment::RbmSweep, Experiment::Timing,
                       Experiment::Validate, Experiment::Chaos})
    if (experiment_name(e) == name) return e;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double plain_number(std::string_view s, std::string_view whole) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("not a number: '" + std::string(whole) + "'");
  return v;
}

}  // namespace

double parse_number(std::string_view text) {
  const std::string_view s = trim(text);
  if (const auto caret = s.find('^'); caret != std::string_view::npos) {
    std::string_view base = trim(s.substr(0, caret));
    double sign = 1.0;
    if (!base.empty() && base.front() == '-') {
      sign = -1.0;
      base.remove_prefix(1);
    }
    return sign * std::pow(plain_number(base, text), plain_number(s.substr(caret + 1), text));
  }
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    const double den = plain_number(s.substr(slash + 1), text);
    if (den == 0.0) throw ConfigError("division by zero in '" + std::string(text) + "'");
    return plain_number(s.substr(0, slash), text) / den;
  }
  return plain_number(s, text);
}

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = trim(item);
    if (!t.empty()) items.emplace_back(t);
  }
  return items;
}

std::size_t parse_count(const std::string& value) {
  const double v = parse_number(value);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.007199254740992e15)
    throw ConfigError("not a non-negative integer: '" + value + "'");
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& value) {
  const auto v = trim(value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("not a boolean: '" + value + "'");
}

std::vector<double> number_list(const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<std::size_t> count_list(const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(value)) out.push_back(parse_count(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::pair<double, double> number_pair(const std::string& value) {
  const auto v = number_list(value);
  if (v.size() != 2) throw ConfigError("expected two numbers 'low, high'");
  return {v[0], v[1]};
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using SectionTable = std::map<std::string, Setter>;

const std::map<std::string, SectionTable>& grammar() {
  static const std::map<std::string, SectionTable> table = {
      {"run",
       {
           {"experiment",
            [](auto& c, const auto& v) {
              c.experiment = parse_experiment(trim(v));
              c.experiment_declared = true;
            }},
           {"model", [](auto& c, const auto& v) { c.model_name = std::string(trim(v)); }},
           {"seed", [](auto& c, const auto& v) { c.seed = parse_count(v); }},
           {"particles", [](auto& c, const auto& v) { c.n_particles = parse_count(v); }},
           {"horizon", [](auto& c, const auto& v) { c.horizon = parse_number(v); }},
           {"paths", [](auto& c, const auto& v) { c.paths = parse_count(v); }},
           {"threads", [](auto& c, const auto& v) { c.threads = parse_count(v); }},
           {"deltas", [](auto& c, const auto& v) { c.deltas = number_list(v); }},
           {"out", [](auto& c, const auto& v) { c.out_dir = std::string(trim(v)); }},
       }},
      {"scheme",
       {
           {"name", [](auto& c, const auto& v) { c.scheme = parse_scheme(trim(v)); }},
           {"betas", [](auto& c, const auto& v) { c.betas = number_list(v); }},
           {"batch_sizes", [](auto& c, const auto& v) { c.batch_sizes = count_list(v); }},
           {"exclude_self", [](auto& c, const auto& v) { c.exclude_self = parse_bool(v); }},
           {"summation",
            [](auto& c, const auto& v) {
              const auto s = trim(v);
              if (s == "auto") c.summation = Summation::Auto;
              else if (s == "pairwise") c.summation = Summation::Pairwise;
              else throw ConfigError("summation must be 'auto' or 'pairwise'");
            }},
       }},
      {"reference",
       {
           {"scheme", [](auto& c, const auto& v) { c.reference.scheme = parse_scheme(trim(v)); }},
           {"delta", [](auto& c, const auto& v) { c.reference.delta = parse_number(v); }},
           {"alternative",
            [](auto& c, const auto& v) {
              const auto s = trim(v);
              if (s == "none") c.reference.alternative.reset();
              else c.reference.alternative = parse_scheme(s);
            }},
           {"agreement", [](auto& c, const auto& v) { c.reference.agreement = parse_number(v); }},
       }},
      {"truncation",
       {
           {"enabled", [](auto& c, const auto& v) { c.truncation.enabled = parse_bool(v); }},
           {"K", [](auto& c, const auto& v) { c.truncation.K = parse_number(v); }},
           {"h_scale", [](auto& c, const auto& v) { c.truncation.h_scale = parse_number(v); }},
           {"epsilon", [](auto& c, const auto& v) { c.truncation.epsilon = parse_number(v); }},
       }},
      {"model",
       {
           {"lambda1", [](auto& c, const auto& v) { c.params.lambda1 = parse_number(v); }},
           {"lambda2", [](auto& c, const auto& v) { c.params.lambda2 = parse_number(v); }},
           {"lambda3", [](auto& c, const auto& v) { c.params.lambda3 = parse_number(v); }},
           {"x0", [](auto& c, const auto& v) { c.params.x0 = parse_number(v); }},
       }},
      {"criteria",
       {
           {"slope_min", [](auto& c, const auto& v) { c.criteria.slope_min = parse_number(v); }},
           {"slope_max", [](auto& c, const auto& v) { c.criteria.slope_max = parse_number(v); }},
           {"floor_offset",
            [](auto& c, const auto& v) { c.criteria.floor_offset = parse_number(v); }},
           {"increasing", [](auto& c, const auto& v) { c.criteria.increasing = parse_bool(v); }},
           {"slope_targets",
            [](auto& c, const auto& v) { c.criteria.slope_targets = number_list(v); }},
           {"slope_tolerance",
            [](auto& c, const auto& v) { c.criteria.slope_tolerance = parse_number(v); }},
           {"max_divergence_rate",
            [](auto& c, const auto& v) { c.criteria.max_divergence_rate = parse_number(v); }},
           {"moment_ratio",
            [](auto& c, const auto& v) { c.criteria.moment_ratio = parse_number(v); }},
       }},
      {"timing",
       {
           {"particles", [](auto& c, const auto& v) { c.timing.n_values = count_list(v); }},
           {"delta", [](auto& c, const auto& v) { c.timing.delta = parse_number(v); }},
           {"repetitions", [](auto& c, const auto& v) { c.timing.repetitions = parse_count(v); }},
           {"betas", [](auto& c, const auto& v) { c.timing.betas = number_list(v); }},
           {"full_ratio",
            [](auto& c, const auto& v) {
              std::tie(c.timing.full_ratio_min, c.timing.full_ratio_max) = number_pair(v);
            }},
           {"rbm_ratio",
            [](auto& c, const auto& v) {
              std::tie(c.timing.rbm_ratio_min, c.timing.rbm_ratio_max) = number_pair(v);
            }},
           {"min_speedup", [](auto& c, const auto& v) { c.timing.min_speedup = parse_number(v); }},
       }},
      {"chaos",
       {
           {"particles", [](auto& c, const auto& v) { c.chaos.n_values = count_list(v); }},
           {"delta", [](auto& c, const auto& v) { c.chaos.delta = parse_number(v); }},
       }},
      {"validate",
       {
           {"particles", [](auto& c, const auto& v) { c.validate.n_values = count_list(v); }},
           {"batch_sizes", [](auto& c, const auto& v) { c.validate.batch_sizes = count_list(v); }},
           {"q", [](auto& c, const auto& v) { c.validate.q_values = count_list(v); }},
           {"configurations",
            [](auto& c, const auto& v) { c.validate.configurations = parse_count(v); }},
           {"tolerance", [](auto& c, const auto& v) { c.validate.tolerance = parse_number(v); }},
       }},
  };
  return table;
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field + ": " + message);
}

}  // namespace

TruncationSpec ExperimentConfig::truncation_spec() const {
  if (!truncation.enabled) return TruncationSpec::disabled();
  return default_truncation(params, truncation.h_scale, truncation.epsilon, truncation.K);
}

void ExperimentConfig::check() const {
  const auto models = registered_models();
  require(std::find(models.begin(), models.end(), model_name) != models.end(), "[run] model",
          "'" + model_name + "' is not a registered model");
  require(threads >= 1, "[run] threads", "must be at least 1");
  require(horizon > 0.0, "[run] horizon", "must be positive");
  require(truncation.epsilon > 0.0 && truncation.epsilon <= 0.25, "[truncation] epsilon",
          "must lie in (0, 1/4]");
  require(truncation.h_scale > 0.0, "[truncation] h_scale", "must be positive");
  require(truncation.K >= 0.0, "[truncation] K", "must be non-negative (0 = default)");
  require(criteria.max_divergence_rate >= 0.0, "[criteria] max_divergence_rate",
          "must be non-negative");

  auto check_grid = [&](double delta, const std::string& field) {
    require(delta > 0.0, field, "step sizes must be positive");
    try {
      (void)integer_ratio(horizon, delta, "horizon / delta");
      (void)integer_ratio(delta, reference.delta, "delta / reference delta");
    } catch (const ConfigError& e) {
      throw ConfigError(field + ": " + e.what());
    }
  };

  switch (experiment) {
    case Experiment::Converge:
    case Experiment::RbmSweep: {
      require(paths >= 1, "[run] paths", "must be at least 1");
      require(n_particles >= 2, "[run] particles", "must be at least 2");
      require(!deltas.empty(), "[run] deltas", "must not be empty");
      require(reference.delta > 0.0, "[reference] delta", "must be positive");
      require(!is_rbm(reference.scheme), "[reference] scheme",
              "the reference must use full interaction");
      if (reference.alternative)
        require(!is_rbm(*reference.alternative), "[reference] alternative",
                "the reference must use full interaction");
      for (double d : deltas) check_grid(d, "[run] deltas");
      const auto model = make_model(model_name, params);
      if (is_milstein(scheme) || is_milstein(reference.scheme))
        require(model.supports_milstein(), "[scheme] name",
                "Milstein needs a scalar model with state-only diffusion");
      if (experiment == Experiment::Converge) {
        require(!is_rbm(scheme), "[scheme] name", "converge uses full-interaction schemes");
      } else {
        require(is_rbm(scheme), "[scheme] name", "rbm-sweep needs a random batch scheme");
        require(betas.empty() != batch_sizes.empty(), "[scheme] betas",
                "give exactly one of betas or batch_sizes");
        for (double b : betas) require(b > 0.0 && b <= 1.0, "[scheme] betas", "must lie in (0, 1]");
        for (std::size_t p : batch_sizes) {
          try {
            check_batch_shape(n_particles, p);
          } catch (const ConfigError& e) {
            throw ConfigError(std::string("[scheme] batch_sizes: ") + e.what());
          }
        }
        if (!criteria.slope_targets.empty())
          require(criteria.slope_targets.size() == std::max(betas.size(), batch_sizes.size()),
                  "[criteria] slope_targets", "needs one target per batch rule");
      }
      if (criteria.slope_min && criteria.slope_max)
        require(*criteria.slope_min <= *criteria.slope_max, "[criteria] slope_min",
                "must not exceed slope_max");
      break;
    }
    case Experiment::Timing:
      require(timing.repetitions >= 3, "[timing] repetitions", "must be at least 3");
      require(!timing.n_values.empty(), "[timing] particles", "must not be empty");
      require(timing.delta > 0.0, "[timing] delta", "must be positive");
      try {
        (void)integer_ratio(horizon, timing.delta, "horizon / delta");
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("[timing] delta: ") + e.what());
      }
      for (double b : timing.betas) require(b > 0.0 && b <= 1.0, "[timing] betas", "must lie in (0, 1]");
      for (std::size_t n : timing.n_values) require(n >= 2, "[timing] particles", "must be >= 2");
      break;
    case Experiment::Chaos:
      require(paths >= 1, "[run] paths", "must be at least 1");
      require(chaos.n_values.size() >= 2, "[chaos] particles", "needs at least two values");
      for (std::size_t k = 0; k < chaos.n_values.size(); ++k) {
        require(chaos.n_values[k] >= 2, "[chaos] particles", "must be >= 2");
        if (k > 0)
          require(chaos.n_values[k] > chaos.n_values[k - 1], "[chaos] particles",
                  "must be increasing");
      }
      try {
        (void)integer_ratio(horizon, chaos.delta, "horizon / delta");
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("[chaos] delta: ") + e.what());
      }
      break;
    case Experiment::Validate:
      require(!validate.n_values.empty(), "[validate] particles", "must not be empty");
      require(validate.tolerance > 0.0, "[validate] tolerance", "must be positive");
      require(validate.configurations >= 1, "[validate] configurations", "must be at least 1");
      break;
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin,
                              std::optional<Experiment> experiment) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << origin << ":" << e.line() << ": " << e.message();
    throw ConfigError(os.str());
  }
  ExperimentConfig config;
  const auto& table = grammar();
  for (const auto& [section, body] : tree) {
    const auto s = table.find(section);
    if (s == table.end()) throw ConfigError(origin + ": unknown section [" + section + "]");
    if (!body.data().empty() && body.empty())
      throw ConfigError(origin + ": '" + section + "' must be a [section], not a top-level key");
    for (const auto& [key, node] : body) {
      const auto k = s->second.find(key);
      if (k == s->second.end())
        throw ConfigError(origin + ": unknown key [" + section + "] " + key);
      try {
        k->second(config, node.data());
      } catch (const ConfigError& e) {
        throw ConfigError(origin + ": [" + section + "] " + key + ": " + e.what());
      }
    }
  }
  if (experiment) {
    if (config.experiment_declared && config.experiment != *experiment)
      throw ConfigError(origin + ": [run] experiment is '" +
                        std::string(experiment_name(config.experiment)) + "' but '" +
                        std::string(experiment_name(*experiment)) + "' was requested");
    config.experiment = *experiment;
  }
  try {
    config.check();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<Experiment> experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), experiment);
}

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    if (c == '\r') continue;
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mkv
