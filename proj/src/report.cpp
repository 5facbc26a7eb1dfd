#include "apm/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>

#include "apm/diagnostics.hpp"
#include "apm/risk_neutral.hpp"

namespace apm {

using nlohmann::ordered_json;

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::check:
      return "check";
    case Command::optimize:
      return "optimize";
    case Command::measure:
      return "measure";
    case Command::report:
      return "report";
  }
  return "unknown";
}

Command command_from_string(std::string_view name) {
  for (auto c : {Command::check, Command::optimize, Command::measure, Command::report}) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

namespace {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(17) << x;
  return out.str();
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) text_ += ',';
      text_ += h;
      first = false;
    }
    text_ += '\n';
  }

  Csv& cell(double x) { return raw(format_number(x)); }
  Csv& cell(std::size_t x) { return raw(std::to_string(x)); }
  Csv& cell(std::string_view s) { return raw(std::string(s)); }
  Csv& cell(bool b) { return raw(b ? "true" : "false"); }
  void end_row() {
    text_ += '\n';
    fresh_ = true;
  }
  [[nodiscard]] std::string str() const { return text_; }

 private:
  Csv& raw(const std::string& s) {
    if (!fresh_) text_ += ',';
    text_ += s;
    fresh_ = false;
    return *this;
  }

  std::string text_;
  bool fresh_ = true;
};

ordered_json vec(std::span<const double> xs) {
  ordered_json a = ordered_json::array();
  for (double x : xs) a.push_back(x);
  return a;
}

ordered_json skipped(std::string_view reason) {
  ordered_json j;
  j["status"] = "skipped";
  j["reason"] = reason;
  return j;
}

ordered_json provenance_json(const ScenarioSet& s) {
  ordered_json j;
  j["kind"] = s.is_exact() ? "exact_enumeration" : "monte_carlo";
  j["n"] = s.size();
  if (!s.is_exact()) j["seed"] = s.provenance().seed;
  return j;
}

ordered_json estimate_json(const Estimate& e) {
  ordered_json j;
  j["value"] = e.value;
  j["standard_error"] = e.standard_error;
  return j;
}

ordered_json check_json(const CheckReport& c, Bundle& bundle) {
  const AssumptionVerdicts v = c.verdicts();
  ordered_json j;
  ordered_json verdicts;
  verdicts["assumption_b"] = to_string(v.assumption_b);
  verdicts["novum_subgauss"] = to_string(v.novum_subgauss);
  verdicts["novum_na"] = to_string(v.novum_na);
  verdicts["relevant_tails"] = to_string(v.relevant_tails);
  verdicts["relevant_ui"] = to_string(v.relevant_ui);
  j["verdicts"] = verdicts;

  Csv vt({"assumption", "verdict"});
  for (const auto& [name, verdict] : verdicts.items()) {
    vt.cell(name).cell(verdict.get<std::string>());
    vt.end_row();
  }
  bundle.tables.emplace_back("verdicts", vt.str());

  ordered_json b;
  b["verdict"] = to_string(c.assumption_b.verdict);
  b["reason"] = c.assumption_b.reason;
  b["partial_sums"] = vec(c.assumption_b.partial_sums);
  b["tail_bound"] = c.assumption_b.tail_bound;
  j["assumption_b"] = b;

  ordered_json na;
  na["arbitrage_free"] = c.no_arbitrage.arbitrage_free();
  na["flagged"] = c.no_arbitrage.flagged;
  Csv nt({"coordinate", "b", "prob_below", "prob_above", "ok"});
  for (const auto& row : c.no_arbitrage.coordinates) {
    nt.cell(row.coordinate).cell(row.b).cell(row.prob_below).cell(row.prob_above).cell(row.ok());
    nt.end_row();
  }
  bundle.tables.emplace_back("no_arbitrage", nt.str());
  j["no_arbitrage"] = na;

  ordered_json sg;
  sg["verdict"] = to_string(c.subgaussian.verdict);
  sg["gamma"] = c.subgaussian.gamma;
  Csv st({"gamma", "sup_exp_moment"});
  for (const auto& row : c.subgaussian.scan) {
    st.cell(row.gamma).cell(row.sup_moment);
    st.end_row();
  }
  bundle.tables.emplace_back("subgaussian", st.str());
  j["novum_subgauss"] = sg;

  ordered_json rel;
  rel["tails"] = to_string(c.relevant.tails);
  rel["first_failing_x"] = c.relevant.first_failing_x;
  rel["uniform_integrability"] = to_string(c.relevant.uniform_integrability);
  Csv tt({"x", "inf_prob_above", "inf_prob_below"});
  for (const auto& row : c.relevant.tail_rows) {
    tt.cell(row.x).cell(row.inf_above).cell(row.inf_below);
    tt.end_row();
  }
  bundle.tables.emplace_back("relevant_tails", tt.str());
  Csv ut({"N", "sup_truncated_second_moment"});
  for (const auto& row : c.relevant.moment_rows) {
    ut.cell(row.N).cell(row.sup_truncated);
    ut.end_row();
  }
  bundle.tables.emplace_back("relevant_ui", ut.str());
  j["relevant"] = rel;
  return j;
}

ordered_json optimization_json(const OptimizationReport& r, Bundle& bundle) {
  ordered_json j;
  j["status"] = "ok";
  j["monotone"] = r.monotone;
  ordered_json levels = ordered_json::array();
  Csv t({"K", "v_K", "value_standard_error", "grad_norm", "diff_norm", "iterations",
         "converged", "unbounded"});
  for (const auto& lr : r.levels) {
    const auto& res = lr.result;
    ordered_json l;
    l["K"] = res.level;
    l["value"] = res.value;
    l["value_standard_error"] = res.value_standard_error;
    l["gradient_norm"] = res.gradient_norm;
    l["diff_norm"] = lr.diff_norm;
    l["iterations"] = res.iterations;
    l["converged"] = res.converged;
    l["phi_star"] = vec(res.phi_star.phi);
    ordered_json ub;
    ub["found"] = res.unbounded.found;
    ub["method"] = res.unbounded.method;
    if (res.unbounded.found) {
      ub["direction"] = vec(res.unbounded.direction);
      ub["witness_values"] = vec(res.unbounded.witness_values);
    }
    l["unbounded"] = ub;
    levels.push_back(l);
    t.cell(res.level).cell(res.value).cell(res.value_standard_error)
        .cell(res.gradient_norm).cell(lr.diff_norm).cell(res.iterations)
        .cell(res.converged).cell(res.unbounded.found);
    t.end_row();
  }
  j["levels"] = levels;
  bundle.tables.emplace_back("optimization", t.str());
  return j;
}

struct MeasureOutput {
  ordered_json json;
  std::optional<TiltedMeasure> measure;
};

MeasureOutput measure_section(const MarketModel& model, const ExperimentConfig& cfg,
                              const ScenarioSet& s,
                              std::span<const FactorStrategy> strategies,
                              const RunOptions& options, Bundle& bundle) {
  MeasureOutput out;
  TiltedMeasure q = build_tilted_measure(model, cfg.measure.fallback_alpha);
  const auto w_list = cfg.measure.moment_exponents();
  const MeasureReport mr = measure_moments(q, s, w_list, options.workers);
  const PricingReport pr = verify_pricing(q, model, strategies, s, options.workers);

  ordered_json& j = out.json;
  j["status"] = "ok";
  j["scenarios"] = provenance_json(s);
  j["fallback_alpha"] = cfg.measure.fallback_alpha;
  ordered_json coords = ordered_json::array();
  Csv ct({"coordinate", "b", "a", "z", "method", "phi_star", "normalizer", "residual"});
  std::size_t index = 1;
  for (const auto& c : q.coordinates()) {
    ordered_json cj;
    cj["coordinate"] = index;
    cj["method"] = to_string(c.method);
    cj["b"] = c.b;
    cj["a"] = c.a;
    cj["z"] = c.z;
    if (c.method == TiltMethod::meggy_fallback) {
      cj["phi_star"] = c.phi_star;
      cj["normalizer"] = c.normalizer;
    }
    cj["residual"] = c.residual;
    coords.push_back(cj);
    ct.cell(index).cell(c.b).cell(c.a).cell(c.z).cell(to_string(c.method))
        .cell(c.phi_star).cell(c.normalizer).cell(c.residual);
    ct.end_row();
    ++index;
  }
  j["coordinates"] = coords;
  bundle.tables.emplace_back("measure", ct.str());

  ordered_json moments = ordered_json::array();
  Csv mt({"w", "density_moment", "density_moment_se", "reciprocal_moment",
          "reciprocal_moment_se", "product_density_moment", "product_reciprocal_moment"});
  for (const auto& row : mr.moments) {
    const double prod = product_moment(q, model, row.w);
    // E[(dP/dQ)^w] = prod_i E[f_i^{-w}].
    const double prod_inv = product_moment(q, model, -row.w);
    ordered_json mj;
    mj["w"] = row.w;
    mj["density_moment"] = estimate_json(row.density_moment);
    mj["reciprocal_moment"] = estimate_json(row.reciprocal_moment);
    mj["product_density_moment"] = prod;
    mj["product_reciprocal_moment"] = prod_inv;
    moments.push_back(mj);
    mt.cell(row.w).cell(row.density_moment.value).cell(row.density_moment.standard_error)
        .cell(row.reciprocal_moment.value).cell(row.reciprocal_moment.standard_error)
        .cell(prod).cell(prod_inv);
    mt.end_row();
  }
  j["moments"] = moments;
  bundle.tables.emplace_back("moments", mt.str());
  j["monte_carlo"] = mr.monte_carlo;
  j["tilt_ratios"] = vec(mr.tilt_ratios);
  j["tilt_energy"] = mr.tilt_energy;
  j["fitted_c"] = mr.fitted_c;

  ordered_json pj;
  pj["max_coordinate_residual"] = q.max_residual();
  ordered_json assets = ordered_json::array();
  for (const auto& e : pr.asset_residuals) assets.push_back(estimate_json(e));
  pj["asset_residuals"] = assets;
  pj["strategies"] = pr.strategy_residuals.size();
  pj["max_abs_residual"] = pr.max_abs_residual;
  pj["max_standard_errors"] = pr.max_standard_errors;
  j["pricing"] = pj;
  out.measure = std::move(q);
  return out;
}

ordered_json diagnostics_section(const MarketModel& model, const ExperimentConfig& cfg,
                                 const ScenarioSet& s, const TiltedMeasure* q,
                                 std::span<const FactorStrategy> strategies,
                                 const OptimizationReport* opt, const RunOptions& options,
                                 Bundle& bundle) {
  ordered_json j;
  j["status"] = "ok";
  j["scenarios"] = provenance_json(s);

  const ExpUIReport ui = exp_ui_bound(model, cfg.diagnostics.deltas, cfg.diagnostics.trials,
                                      options.seed, s, options.workers);
  ordered_json uj;
  uj["fitted_C"] = ui.fitted_C;
  uj["within_bound"] = ui.within_bound;
  uj["monte_carlo"] = ui.monte_carlo;
  Csv et({"delta", "sup_exp_moment", "fitted_C"});
  for (const auto& row : ui.rows) {
    et.cell(row.delta).cell(row.sup_value).cell(row.fitted_C);
    et.end_row();
  }
  bundle.tables.emplace_back("exp_moments", et.str());
  Csv tt({"T", "max_tail_second_moment"});
  ordered_json tails = ordered_json::array();
  for (const auto& row : ui.tails) {
    tt.cell(row.T).cell(row.max_tail);
    tt.end_row();
    tails.push_back({{"T", row.T}, {"max_tail", row.max_tail}});
  }
  bundle.tables.emplace_back("ui_tails", tt.str());
  uj["ui_tails"] = tails;
  j["exp_moment"] = uj;

  if (cfg.growth) {
    ordered_json g;
    g["upper"] = to_string(cfg.growth->upper.verdict);
    g["upper_reason"] = cfg.growth->upper.reason;
    g["lower"] = to_string(cfg.growth->lower.verdict);
    g["lower_reason"] = cfg.growth->lower.reason;
    j["growth"] = g;
  }

  if (q == nullptr) {
    j["holder_chain"] = skipped("no risk-neutral measure");
  } else if (!cfg.utility.certificate()) {
    j["holder_chain"] = skipped("utility has no verified growth certificate");
  } else {
    const HolderReport hr = holder_chain_check(model, *q, cfg.utility, strategies, s,
                                               options.workers);
    ordered_json hj;
    const auto& c = hr.constants;
    hj["alpha"] = c.alpha;
    hj["beta"] = c.beta;
    hj["C1"] = c.C1;
    hj["C2"] = c.C2;
    hj["C_prime"] = c.C_prime;
    hj["C_double_prime"] = c.C_double_prime;
    hj["pricing_residual"] = hr.pricing_residual;
    hj["min_margin"] = hr.min_margin;
    hj["monte_carlo"] = hr.monte_carlo;
    Csv ht({"strategy", "norm", "lhs", "lower_part", "rhs", "margin"});
    std::size_t k = 1;
    for (const auto& row : hr.rows) {
      ht.cell(k++).cell(row.norm).cell(row.lhs).cell(row.lower_part).cell(row.rhs)
          .cell(row.margin);
      ht.end_row();
    }
    bundle.tables.emplace_back("holder_chain", ht.str());
    j["holder_chain"] = hj;

    const double cap = value_cap(c, cfg.utility.value(0.0));
    ordered_json vc;
    vc["cap"] = cap;
    if (opt != nullptr) {
      bool respected = true;
      for (const auto& lr : opt->levels) {
        if (lr.result.converged && lr.result.value > cap) respected = false;
      }
      vc["ladder_within_cap"] = respected;
    }
    j["value_cap"] = vc;
  }
  return j;
}

// Witness strategy for the first coordinate failing its tails: a long
// position when eps - b is never negative, a short one otherwise.
std::vector<double> na_witness(const MarketModel& model, const NoArbitrageReport& na) {
  std::vector<double> w(model.K(), 0.0);
  const std::size_t c = na.flagged.front();
  w[c - 1] = na.coordinates[c - 1].prob_below == 0.0 ? 1.0 : -1.0;
  return w;
}

}  // namespace

RunOutcome run_command(Command cmd, const ExperimentConfig& cfg,
                       const RunOptions& options) {
  RunOutcome out;
  Bundle& bundle = out.bundle;
  ordered_json& root = bundle.report;
  const MarketModel model = build_market(cfg.model);

  ScenarioPolicy policy = cfg.scenarios;
  policy.seed = options.seed;
  if (options.scenarios) {
    policy.mode = ScenarioPolicy::Mode::monte_carlo;
    policy.n = *options.scenarios;
  }

  ordered_json meta;
  meta["command"] = to_string(cmd);
  meta["config"] = cfg.source.filename().string();
  meta["seed"] = options.seed;
  meta["seed_source"] = options.seed_source;
  meta["scenario_mode"] = policy.mode == ScenarioPolicy::Mode::exact ? "exact" : "monte_carlo";
  if (policy.mode == ScenarioPolicy::Mode::monte_carlo) meta["scenario_n"] = policy.n;
  meta["utility"] = cfg.utility.kind_name();
  root["meta"] = meta;

  ordered_json mj;
  mj["m"] = model.m();
  mj["K"] = model.K();
  mj["b"] = vec(model.b());
  mj["M"] = model.M();
  ordered_json noise = ordered_json::array();
  for (std::size_t i = 0; i < model.K(); ++i) noise.push_back(to_string(model.noise(i).family()));
  mj["noise"] = noise;
  root["model"] = mj;

  const CheckReport checks = run_checks(model);
  root["check"] = check_json(checks, bundle);

  ordered_json status;
  if (checks.assumption_b.verdict == Verdict::fails) {
    out.failures.push_back("assumption_b: " + checks.assumption_b.reason);
  }
  if (!checks.no_arbitrage.arbitrage_free()) {
    out.failures.push_back("novum_na: coordinate " +
                           std::to_string(checks.no_arbitrage.flagged.front()) +
                           " has a one-sided eps - b");
    status["witness"] = vec(na_witness(model, checks.no_arbitrage));
  }
  const bool gate_failed = !out.failures.empty();
  const std::string gate_reason = "assumption check failed";

  const bool want_opt = cmd == Command::optimize || cmd == Command::report;
  const bool want_measure = cmd == Command::measure || cmd == Command::report;
  const bool want_diag = cmd == Command::report;

  std::optional<OptimizationReport> opt;
  if (!want_opt) {
    root["optimization"] = skipped("not requested");
  } else if (gate_failed) {
    root["optimization"] = skipped(gate_reason);
  } else {
    SolverConfig solver = cfg.solver;
    solver.workers = options.workers;
    opt = truncation_ladder(model, cfg.utility, solver, policy);
    root["optimization"] = optimization_json(*opt, bundle);
  }

  std::optional<ScenarioSet> full;
  std::vector<FactorStrategy> strategies;
  if ((want_measure || want_diag) && !gate_failed) {
    full = make_scenarios(model, policy, options.workers);
    strategies = random_strategies(model.K(), cfg.diagnostics.strategies,
                                   cfg.diagnostics.strategy_norm, options.seed);
  }

  std::optional<TiltedMeasure> q;
  if (!want_measure) {
    root["measure"] = skipped("not requested");
  } else if (gate_failed) {
    root["measure"] = skipped(gate_reason);
  } else {
    MeasureOutput m = measure_section(model, cfg, *full, strategies, options, bundle);
    root["measure"] = std::move(m.json);
    q = std::move(m.measure);
  }

  if (!want_diag) {
    root["diagnostics"] = skipped("not requested");
  } else if (gate_failed) {
    root["diagnostics"] = skipped(gate_reason);
  } else {
    root["diagnostics"] = diagnostics_section(model, cfg, *full, q ? &*q : nullptr,
                                              strategies, opt ? &*opt : nullptr, options,
                                              bundle);
  }

  out.exit_code = gate_failed ? 2 : 0;
  status["exit_code"] = out.exit_code;
  status["failures"] = out.failures;
  root["status"] = status;
  return out;
}

void emit_report(const Bundle& bundle, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "tables", ec);
  if (ec) throw std::runtime_error("cannot create '" + (dir / "tables").string() + "': " + ec.message());
  auto write = [](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  };
  write(dir / "report.json", bundle.report.dump(2) + "\n");
  for (const auto& [stem, text] : bundle.tables) {
    write(dir / "tables" / (stem + ".csv"), text);
  }
}

}  // namespace apm
