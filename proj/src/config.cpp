#include "apm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace apm {

using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg = "invalid config:";
        for (const auto& v : violations) msg += "\n  - " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::vector<double> MeasureConfig::moment_exponents() const {
  if (!exponents.empty()) return exponents;
  std::vector<double> w{-2.0, -1.0, 1.0, 2.0};
  for (double x : {-p, p}) {
    if (std::find(w.begin(), w.end(), x) == w.end()) w.push_back(x);
  }
  return w;
}

namespace {

// Collects violations while walking the document; accessors return nullopt
// after recording a problem so that parsing can continue.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& where, const std::string& what) {
    errors.push_back(where + ": " + what);
  }

  void check_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
      if (!ok.contains(key)) fail(where, "unknown key '" + key + "'");
    }
  }

  std::optional<double> number(const json& obj, const std::string& where,
                               const char* key, bool required) {
    if (!obj.contains(key)) {
      if (required) fail(where, std::string("missing key '") + key + "'");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(where, std::string("'") + key + "' must be a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::size_t> count(const json& obj, const std::string& where,
                                   const char* key, bool required) {
    if (!obj.contains(key)) {
      if (required) fail(where, std::string("missing key '") + key + "'");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      fail(where, std::string("'") + key + "' must be a nonnegative integer");
      return std::nullopt;
    }
    return v.get<std::size_t>();
  }

  std::optional<std::vector<double>> numbers(const json& obj,
                                             const std::string& where,
                                             const char* key, bool required) {
    if (!obj.contains(key)) {
      if (required) fail(where, std::string("missing key '") + key + "'");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_array()) {
      fail(where, std::string("'") + key + "' must be an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) {
        fail(where, std::string("'") + key + "' must be an array of numbers");
        return std::nullopt;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<std::string> text(const json& obj, const std::string& where,
                                  const char* key, bool required) {
    if (!obj.contains(key)) {
      if (required) fail(where, std::string("missing key '") + key + "'");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) {
      fail(where, std::string("'") + key + "' must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }
};

std::optional<DistributionSpec> parse_noise(Reader& rd, const json& obj,
                                            const std::string& where) {
  if (!obj.is_object()) {
    rd.fail(where, "noise entry must be an object");
    return std::nullopt;
  }
  rd.check_keys(obj, where, {"family", "p", "rho", "points", "probs"});
  const auto family = rd.text(obj, where, "family", true);
  if (!family) return std::nullopt;
  try {
    switch (noise_family_from_string(*family)) {
      case NoiseFamily::rademacher:
        return DistributionSpec::rademacher();
      case NoiseFamily::standardized_uniform:
        return DistributionSpec::standardized_uniform();
      case NoiseFamily::standard_normal:
        return DistributionSpec::standard_normal();
      case NoiseFamily::standardized_two_point: {
        const auto p = rd.number(obj, where, "p", true);
        if (!p) return std::nullopt;
        return DistributionSpec::standardized_two_point(*p);
      }
      case NoiseFamily::dyadic_tails: {
        const auto rho = rd.number(obj, where, "rho", true);
        if (!rho) return std::nullopt;
        return DistributionSpec::dyadic_tails(*rho);
      }
      case NoiseFamily::finite_discrete: {
        const auto points = rd.numbers(obj, where, "points", true);
        const auto probs = rd.numbers(obj, where, "probs", true);
        if (!points || !probs) return std::nullopt;
        return DistributionSpec::finite_discrete(*points, *probs);
      }
    }
  } catch (const ModelError& e) {
    rd.fail(where, e.what());
  }
  return std::nullopt;
}

std::optional<BRule> parse_b_rule(Reader& rd, const json& obj,
                                  const std::string& where) {
  if (!obj.is_object()) {
    rd.fail(where, "b_rule must be an object");
    return std::nullopt;
  }
  rd.check_keys(obj, where, {"kind", "values", "c", "p"});
  const auto kind = rd.text(obj, where, "kind", true);
  if (!kind) return std::nullopt;
  BRule rule;
  if (*kind == "zero") {
    rule.kind = BRule::Kind::zero;
  } else if (*kind == "none") {
    rule.kind = BRule::Kind::none;
  } else if (*kind == "explicit_list") {
    rule.kind = BRule::Kind::explicit_list;
    const auto values = rd.numbers(obj, where, "values", true);
    if (!values) return std::nullopt;
    rule.values = *values;
  } else if (*kind == "power_decay") {
    rule.kind = BRule::Kind::power_decay;
    const auto c = rd.number(obj, where, "c", true);
    const auto p = rd.number(obj, where, "p", true);
    if (!c || !p) return std::nullopt;
    rule.c = *c;
    rule.p = *p;
  } else {
    rd.fail(where, "unknown b_rule kind '" + *kind + "'");
    return std::nullopt;
  }
  return rule;
}

void parse_model(Reader& rd, const json& obj, ModelSpec& spec) {
  const std::string where = "model";
  if (!obj.is_object()) {
    rd.fail(where, "must be an object");
    return;
  }
  rd.check_keys(obj, where, {"m", "K", "mu", "beta", "beta_bar", "noise", "b_rule"});
  const auto m = rd.count(obj, where, "m", true);
  const auto K = rd.count(obj, where, "K", true);
  const auto mu = rd.numbers(obj, where, "mu", true);
  const auto beta_bar = rd.numbers(obj, where, "beta_bar", true);
  if (m) spec.m = *m;
  if (K) spec.K = *K;
  if (mu) spec.mu = *mu;
  if (beta_bar) spec.beta_bar = *beta_bar;

  spec.beta.clear();
  if (obj.contains("beta")) {
    const json& rows = obj.at("beta");
    if (!rows.is_array()) {
      rd.fail(where, "'beta' must be an array of loading rows");
    } else {
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string row_where = where + ".beta[" + std::to_string(r) + "]";
        std::vector<double> row;
        bool ok = rows[r].is_array();
        if (ok) {
          for (const auto& x : rows[r]) {
            if (!x.is_number()) ok = false;
            else row.push_back(x.get<double>());
          }
        }
        if (!ok) rd.fail(row_where, "must be an array of numbers");
        spec.beta.push_back(std::move(row));
      }
    }
  } else if (m && K && *K > *m) {
    rd.fail(where, "missing key 'beta' (needed when K > m)");
  }

  spec.noise.clear();
  if (!obj.contains("noise")) {
    rd.fail(where, "missing key 'noise'");
  } else if (const json& noise = obj.at("noise"); noise.is_array()) {
    for (std::size_t i = 0; i < noise.size(); ++i) {
      auto d = parse_noise(rd, noise[i], where + ".noise[" + std::to_string(i) + "]");
      if (d) spec.noise.push_back(*d);
    }
  } else {
    auto d = parse_noise(rd, noise, where + ".noise");
    if (d && K) spec.noise.assign(*K, *d);
  }

  if (obj.contains("b_rule")) {
    if (auto rule = parse_b_rule(rd, obj.at("b_rule"), where + ".b_rule")) {
      spec.b_rule = *rule;
    }
  }
}

void parse_utility(Reader& rd, const json& obj, ExperimentConfig& cfg) {
  const std::string where = "utility";
  if (!obj.is_object()) {
    rd.fail(where, "must be an object");
    return;
  }
  rd.check_keys(obj, where, {"kind", "alpha", "c", "lambda", "kappa", "beta",
                             "xs", "ys", "scale", "growth"});
  const auto kind = rd.text(obj, where, "kind", true);
  if (!kind) return;
  try {
    std::optional<Utility> u;
    if (*kind == "appendix_power") {
      const auto a = rd.number(obj, where, "alpha", true);
      if (a) u = Utility::appendix_power(*a);
    } else if (*kind == "capped_power") {
      const auto a = rd.number(obj, where, "alpha", true);
      const auto c = rd.number(obj, where, "c", true);
      if (a && c) u = Utility::capped_power(*a, *c);
    } else if (*kind == "exponential") {
      const auto l = rd.number(obj, where, "lambda", true);
      if (l) u = Utility::exponential(*l);
    } else if (*kind == "power_penalty") {
      const auto a = rd.number(obj, where, "alpha", true);
      const auto k = rd.number(obj, where, "kappa", true);
      const auto b = rd.number(obj, where, "beta", true);
      if (a && k && b) u = Utility::power_penalty(*a, *k, *b);
    } else if (*kind == "tabulated") {
      const auto xs = rd.numbers(obj, where, "xs", true);
      const auto ys = rd.numbers(obj, where, "ys", true);
      if (xs && ys) u = Utility::tabulated(*xs, *ys);
    } else {
      rd.fail(where, "unknown utility kind '" + *kind + "'");
    }
    if (!u) return;
    if (const auto scale = rd.number(obj, where, "scale", false)) {
      u = u->scaled(*scale);
    }
    if (obj.contains("growth")) {
      const json& g = obj.at("growth");
      const std::string gw = where + ".growth";
      rd.check_keys(g, gw, {"alpha", "beta", "C1", "C2"});
      const auto a = rd.number(g, gw, "alpha", true);
      const auto b = rd.number(g, gw, "beta", true);
      const auto c1 = rd.number(g, gw, "C1", true);
      const auto c2 = rd.number(g, gw, "C2", true);
      if (a && b && c1 && c2) {
        const GrowthBounds bounds{*a, *b, *c1, *c2};
        bounds.validate();
        cfg.growth = certify_growth(*u, bounds);
        // Only a certificate that survives the check is attached.
        if (cfg.growth->overall() == Verdict::holds) u->set_certificate(bounds);
      }
    }
    cfg.utility = *u;
  } catch (const ModelError& e) {
    rd.fail(where, e.what());
  }
}

void parse_solver(Reader& rd, const json& obj, SolverConfig& s) {
  const std::string where = "solver";
  if (!obj.is_object()) {
    rd.fail(where, "must be an object");
    return;
  }
  rd.check_keys(obj, where, {"gradient_tolerance", "max_iterations", "initial_step",
                             "shrink", "armijo", "ladder", "direction_budget"});
  if (auto v = rd.number(obj, where, "gradient_tolerance", false)) s.gradient_tolerance = *v;
  if (auto v = rd.count(obj, where, "max_iterations", false)) s.max_iterations = *v;
  if (auto v = rd.number(obj, where, "initial_step", false)) s.initial_step = *v;
  if (auto v = rd.number(obj, where, "shrink", false)) s.shrink = *v;
  if (auto v = rd.number(obj, where, "armijo", false)) s.armijo = *v;
  if (auto v = rd.count(obj, where, "direction_budget", false)) s.direction_budget = *v;
  if (obj.contains("ladder")) {
    const json& l = obj.at("ladder");
    s.ladder.clear();
    bool ok = l.is_array() && !l.empty();
    if (ok) {
      for (const auto& x : l) {
        if (!x.is_number_integer() || x.get<long long>() < 1) ok = false;
        else s.ladder.push_back(x.get<std::size_t>());
      }
    }
    if (!ok) rd.fail(where, "'ladder' must be a non-empty array of positive integers");
  }
  try {
    s.validate();
  } catch (const ModelError& e) {
    rd.fail(where, e.what());
  }
}

void parse_measure(Reader& rd, const json& obj, MeasureConfig& m) {
  const std::string where = "measure";
  if (!obj.is_object()) {
    rd.fail(where, "must be an object");
    return;
  }
  rd.check_keys(obj, where, {"fallback_alpha", "p", "exponents"});
  if (auto v = rd.number(obj, where, "fallback_alpha", false)) m.fallback_alpha = *v;
  if (auto v = rd.number(obj, where, "p", false)) m.p = *v;
  if (auto v = rd.numbers(obj, where, "exponents", false)) m.exponents = *v;
  if (!(m.fallback_alpha > 0.0 && m.fallback_alpha < 1.0)) {
    rd.fail(where, "'fallback_alpha' must lie in (0, 1)");
  }
  if (!(m.p > 0.0)) rd.fail(where, "'p' must be positive");
}

void parse_scenarios(Reader& rd, const json& obj, ExperimentConfig& cfg) {
  const std::string where = "scenarios";
  if (!obj.is_object()) {
    rd.fail(where, "must be an object");
    return;
  }
  rd.check_keys(obj, where, {"mode", "n", "seed", "cap"});
  ScenarioPolicy& p = cfg.scenarios;
  if (const auto mode = rd.text(obj, where, "mode", true)) {
    if (*mode == "exact") {
      p.mode = ScenarioPolicy::Mode::exact;
    } else if (*mode == "monte_carlo") {
      p.mode = ScenarioPolicy::Mode::monte_carlo;
      if (!obj.contains("n")) rd.fail(where, "monte_carlo mode needs 'n'");
      if (!obj.contains("seed")) rd.fail(where, "monte_carlo mode needs 'seed'");
    } else {
      rd.fail(where, "'mode' must be 'exact' or 'monte_carlo'");
    }
  }
  if (auto v = rd.count(obj, where, "n", false)) {
    if (*v == 0) rd.fail(where, "'n' must be at least 1");
    p.n = *v;
  }
  if (auto v = rd.count(obj, where, "seed", false)) {
    p.seed = static_cast<std::uint64_t>(*v);
    cfg.seed_in_config = true;
  }
  if (auto v = rd.count(obj, where, "cap", false)) p.cap = *v;
}

void parse_diagnostics(Reader& rd, const json& obj, DiagnosticsConfig& d) {
  const std::string where = "diagnostics";
  if (!obj.is_object()) {
    rd.fail(where, "must be an object");
    return;
  }
  rd.check_keys(obj, where, {"deltas", "trials", "strategies", "strategy_norm",
                             "x_grid", "n_grid"});
  if (auto v = rd.numbers(obj, where, "deltas", false)) d.deltas = *v;
  if (auto v = rd.count(obj, where, "trials", false)) d.trials = *v;
  if (auto v = rd.count(obj, where, "strategies", false)) d.strategies = *v;
  if (auto v = rd.number(obj, where, "strategy_norm", false)) d.strategy_norm = *v;
  if (auto v = rd.numbers(obj, where, "x_grid", false)) d.x_grid = *v;
  if (auto v = rd.numbers(obj, where, "n_grid", false)) d.n_grid = *v;
}

json load_json(const std::filesystem::path& path, Reader& rd, const std::string& where) {
  std::ifstream in(path);
  if (!in) {
    rd.fail(where, "cannot read '" + path.string() + "'");
    return json();
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    rd.fail(where, std::string("malformed JSON in '") + path.string() + "': " + e.what());
    return json();
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  Reader rd;
  ExperimentConfig cfg;
  if (!root.is_object()) throw ConfigError({"config root must be an object"});
  rd.check_keys(root, "config", {"model", "utility", "solver", "measure",
                                 "scenarios", "diagnostics", "output"});

  if (!root.contains("model")) {
    rd.fail("config", "missing key 'model'");
  } else if (root.at("model").is_string()) {
    const auto path = base_dir / root.at("model").get<std::string>();
    const json model = load_json(path, rd, "model");
    if (!model.is_null()) parse_model(rd, model, cfg.model);
  } else {
    parse_model(rd, root.at("model"), cfg.model);
  }
  if (root.contains("utility")) parse_utility(rd, root.at("utility"), cfg);
  if (root.contains("solver")) parse_solver(rd, root.at("solver"), cfg.solver);
  if (root.contains("measure")) parse_measure(rd, root.at("measure"), cfg.measure);
  if (root.contains("scenarios")) parse_scenarios(rd, root.at("scenarios"), cfg);
  if (root.contains("diagnostics")) {
    parse_diagnostics(rd, root.at("diagnostics"), cfg.diagnostics);
  }
  if (root.contains("output")) {
    const json& out = root.at("output");
    rd.check_keys(out, "output", {"dir"});
    if (auto dir = rd.text(out, "output", "dir", false)) cfg.out_dir = *dir;
  }

  if (rd.errors.empty()) {
    try {
      const MarketModel model = build_market(cfg.model);
      const bool explicit_ladder =
          root.contains("solver") && root.at("solver").is_object() &&
          root.at("solver").contains("ladder");
      if (!explicit_ladder) {
        // Default levels that fit the model, topped off with K itself.
        std::erase_if(cfg.solver.ladder, [&](std::size_t k) { return k > model.K(); });
        if (cfg.solver.ladder.empty() || cfg.solver.ladder.back() != model.K()) {
          cfg.solver.ladder.push_back(model.K());
        }
      }
      for (std::size_t level : cfg.solver.ladder) {
        if (level > model.K()) {
          rd.fail("solver", "ladder level " + std::to_string(level) +
                                " exceeds K = " + std::to_string(model.K()));
        }
      }
    } catch (const ModelError& e) {
      rd.fail("model", e.what());
    }
  }
  if (!rd.errors.empty()) throw ConfigError(std::move(rd.errors));
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config '" + path.string() + "'"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig cfg = parse_config_text(buffer.str(), path.parent_path());
  cfg.source = path;
  return cfg;
}

}  // namespace apm
