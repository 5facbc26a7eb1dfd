// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "apm/diagnostics.hpp"
#include "apm/numerics.hpp"
#include "apm/optimizer.hpp"
#include "apm/risk_neutral.hpp"
#include "support.hpp"

namespace {

namespace fs = std::filesystem;
using apm::DistributionSpec;
using apm::ScalarLaw;
using apm::Utility;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double psi(double x) { return 0.5 + 1.0 / (1.0 + std::exp(x)); }

double rademacher_g(double a, double b) {
  return 0.5 * ((1 - b) * psi(a * (1 - b)) - (1 + b) * psi(-a * (1 + b)));
}

// ---------------------------------------------------------------------------

Outcome appendix_measure() {
  const auto t0 = Clock::now();
  const auto x = ScalarLaw::discrete({-1.2, 0.8}, {0.5, 0.5});
  const auto opt = apm::optimize_single_asset(x, Utility::appendix_power(0.5));
  const auto w = apm::single_asset_measure(x, 0.5);
  bool bounded = true;
  for (double d : w.density) bounded = bounded && d > 0.0 && d <= w.density_bound + 1e-15;
  const double secs = seconds_since(t0);
  const double err = std::abs(opt.phi_star + 25.0 / 24.0);
  return {err <= 1e-6 && std::abs(w.mean_under_w) <= 1e-9 && bounded && secs < 1.0,
          "|phi* + 25/24| = " + fmt("%.2e", err) + ", |E_W[X]| = " + fmt("%.2e", std::abs(w.mean_under_w)) +
              ", density <= " + fmt("%.4f", w.density_bound) + ", " + fmt("%.3f", secs) + " s"};
}

Outcome tilt_solver() {
  const auto t0 = Clock::now();
  const auto law = DistributionSpec::rademacher().law();
  double worst = 0.0;
  bool zero_ok = true;
  double a_02 = 0.0;
  for (double b : {0.0, 0.1, -0.1, 0.2, -0.2, 0.4, -0.4}) {
    const auto t = apm::solve_tilt(law, b);
    if (!t.converged) return {false, "tilt did not converge at b = " + fmt("%g", b)};
    const double z = 0.5 * (psi(t.a * (1 - b)) + psi(-t.a * (1 + b)));
    worst = std::max(worst, std::abs(rademacher_g(t.a, b)) / z);
    if (b == 0.0) zero_ok = t.a == 0.0;
    if (b == 0.2) a_02 = t.a;
  }
  // Fine scan of the hand-written g for its sign change.
  double scanned = std::nan("");
  double prev = rademacher_g(-5.0, 0.2);
  for (int k = 1; k <= 1'000'000; ++k) {
    const double a = -5.0 + k * 1e-5;
    const double cur = rademacher_g(a, 0.2);
    if ((prev > 0) != (cur > 0)) {
      scanned = a;
      break;
    }
    prev = cur;
  }
  const double secs = seconds_since(t0);
  const bool pass = worst <= 1e-10 && zero_ok && std::abs(a_02 - scanned) <= 1e-3 &&
                    std::abs(a_02 + 0.820) <= 1e-3 && secs < 1.0;
  return {pass, "max |E_Q[eps - b]| = " + fmt("%.2e", worst) + ", a(0.2) = " + fmt("%.6f", a_02) +
                    " vs scan " + fmt("%.5f", scanned) + ", a(0) = 0: " + (zero_ok ? "yes" : "no") + ", " +
                    fmt("%.3f", secs) + " s"};
}

Outcome optimizer_vs_grid() {
  const auto t0 = Clock::now();
  const auto model = apm::market_from_drifts({0.2, 0.1, 0.05}, DistributionSpec::rademacher());
  const auto s = apm::enumerate_scenarios(model);
  const auto u = Utility::appendix_power(0.5);
  const auto r = apm::optimize_truncated(model, u, 3, s, {});
  const double b[3] = {0.2, 0.1, 0.05};
  const double grid = testing_support::grid_max_sqrt_k3(b, 0.01, 3.0);

  testing_support::Gen g(2024);
  double worst_rel = 0.0;
  int checked = 0;
  while (checked < 10) {
    const auto phi = g.vector(3, -2.0, 2.0);
    const double h = 1e-6;
    bool near_kink = false;
    for (std::size_t row = 0; row < s.size(); ++row) {
      if (std::abs(apm::portfolio_value(model, phi, s.row(row))) < 1e3 * h) near_kink = true;
    }
    if (near_kink) continue;
    const auto obj = apm::saa_objective(model, u, s, phi);
    for (std::size_t i = 0; i < 3; ++i) {
      auto up = phi;
      auto dn = phi;
      up[i] += h;
      dn[i] -= h;
      const double fd = (apm::saa_objective(model, u, s, up).value -
                         apm::saa_objective(model, u, s, dn).value) / (2 * h);
      worst_rel = std::max(worst_rel, std::abs(fd - obj.gradient[i]) / std::max(std::abs(fd), 1e-3));
    }
    ++checked;
  }
  const double secs = seconds_since(t0);
  const double gap = std::abs(r.value - grid);
  return {r.converged && gap <= 1e-3 && worst_rel <= 1e-5 && secs < 30.0,
          "value " + fmt("%.8f", r.value) + " vs grid " + fmt("%.8f", grid) + " (gap " + fmt("%.2e", gap) +
              "), gradient rel err " + fmt("%.2e", worst_rel) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome truncation_monotone() {
  const auto t0 = Clock::now();
  std::vector<double> b(8);
  for (int i = 0; i < 8; ++i) b[i] = 0.4 * std::pow(2.0, -(i + 1));
  const auto model = apm::market_from_drifts(b, DistributionSpec::rademacher());
  apm::SolverConfig cfg;
  cfg.ladder = {1, 2, 4, 8};
  const auto report = apm::truncation_ladder(model, Utility::appendix_power(0.5), cfg, {});
  std::vector<double> v;
  bool monotone = true;
  for (const auto& l : report.levels) {
    if (!v.empty() && l.result.value < v.back() - 1e-8) monotone = false;
    v.push_back(l.result.value);
  }
  const double secs = seconds_since(t0);
  const bool shrinking = std::abs(v[3] - v[2]) < std::abs(v[2] - v[1]);
  return {monotone && shrinking && secs < 60.0,
          "v = (" + fmt("%.8f", v[0]) + ", " + fmt("%.8f", v[1]) + ", " + fmt("%.8f", v[2]) + ", " +
              fmt("%.8f", v[3]) + "), |v8 - v4| = " + fmt("%.2e", std::abs(v[3] - v[2])) +
              ", |v4 - v2| = " + fmt("%.2e", std::abs(v[2] - v[1])) + ", " + fmt("%.3f", secs) + " s"};
}

Outcome jensen_zero() {
  apm::BRule zero;
  zero.kind = apm::BRule::Kind::zero;
  double worst_norm = 0.0;
  double worst_gap = 0.0;
  for (const auto& d : {DistributionSpec::rademacher(), DistributionSpec::standardized_two_point(0.3)}) {
    const auto model = apm::market_from_drifts({0.0, 0.0, 0.0, 0.0}, d, zero);
    const auto s = apm::enumerate_scenarios(model);
    for (const auto& u : {Utility::appendix_power(0.5), Utility::exponential(1.0),
                          Utility::power_penalty(0.5, 1.0, 2.0)}) {
      const auto r = apm::optimize_truncated(model, u, 4, s, {});
      worst_norm = std::max(worst_norm, r.phi_star.norm());
      worst_gap = std::max(worst_gap, std::abs(r.value - u.value(0.0)));
    }
  }
  return {worst_norm <= 1e-4 && worst_gap <= 1e-8,
          "max ||phi*|| = " + fmt("%.2e", worst_norm) + ", max |v - u(0)| = " + fmt("%.2e", worst_gap)};
}

Outcome exp_moment_bound() {
  const std::size_t K = 4;
  const auto model = apm::market_from_drifts({0.2, 0.1, 0.05, 0.02}, DistributionSpec::rademacher());
  const auto s = apm::enumerate_scenarios(model);
  const std::vector<double> deltas{1.0};
  const auto report = apm::exp_ui_bound(model, deltas, 100, 99, s);
  const auto phis = apm::random_strategies(K, 100, 1.0, 99);
  double worst_ratio = 0.0;
  double worst_mismatch = 0.0;
  for (std::size_t k = 0; k < phis.size(); ++k) {
    const auto& phi = phis[k].phi;
    const double hand = testing_support::rademacher_expectation(K, [&](const std::vector<double>& e) {
      double z = 0.0;
      for (std::size_t i = 0; i < K; ++i) z += phi[i] * e[i];
      return std::exp(std::abs(z));
    });
    worst_mismatch = std::max(worst_mismatch, std::abs(hand - report.trials[k].value));
    const double n = phis[k].norm();
    worst_ratio = std::max(worst_ratio, hand / (2.0 * std::exp(0.5 * n * n)));
  }
  return {report.trials.size() == 100 && worst_ratio <= 1.0 + 1e-9 && worst_mismatch <= 1e-12,
          "max E / (2 exp(||phi||^2 / 2)) = " + fmt("%.6f", worst_ratio) + ", library vs hand " +
              fmt("%.1e", worst_mismatch)};
}

apm::ModelSpec factor_spec(const DistributionSpec& noise) {
  apm::ModelSpec spec;
  spec.m = 2;
  spec.K = 4;
  spec.mu = {-0.2, -0.1, 0.05, -0.08};
  spec.beta = {{0.5, 0.2}, {-0.3, 0.4}};
  spec.beta_bar = {1.0, 1.0, 0.8, 1.2};
  spec.noise.assign(4, noise);
  return spec;
}

Outcome pricing() {
  const auto exact_model = apm::build_market(factor_spec(DistributionSpec::rademacher()));
  const auto q = apm::build_tilted_measure(exact_model);
  const auto exact = apm::verify_pricing(q, exact_model, {}, apm::enumerate_scenarios(exact_model));

  const auto mc_model = apm::build_market(factor_spec(DistributionSpec::standard_normal()));
  const auto qn = apm::build_tilted_measure(mc_model);
  const auto sample = apm::sample_scenarios(mc_model, 1'000'000, 7, apm::resolve_workers(0));
  const auto mc = apm::verify_pricing(qn, mc_model, {}, sample, apm::resolve_workers(0));
  return {exact.max_abs_residual <= 1e-10 && mc.max_standard_errors <= 5.0,
          "exact max |E_Q[R_i]| = " + fmt("%.2e", exact.max_abs_residual) +
              ", Monte Carlo n = 1e6 max |residual| / SE = " + fmt("%.3f", mc.max_standard_errors)};
}

Outcome holder_chain() {
  auto u = Utility::power_penalty(0.5, 1.0, 2.0);
  u.set_certificate({0.5, 2.0, 1.0, 1.0});
  const double r = std::sqrt(1.5);
  const std::vector<apm::MarketModel> fixtures{
      apm::market_from_drifts({0.2, 0.1, 0.05}, DistributionSpec::rademacher()),
      apm::build_market(factor_spec(DistributionSpec::finite_discrete({-r, 0.0, r}, {1.0 / 3, 1.0 / 3, 1.0 / 3}))),
  };
  double worst = 1e300;
  std::string constants;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const auto& model = fixtures[f];
    const auto q = apm::build_tilted_measure(model);
    const auto s = apm::enumerate_scenarios(model);
    const auto strategies = apm::random_strategies(model.K(), 100, 3.0, 100 + f);
    const auto report = apm::holder_chain_check(model, q, u, strategies, s);
    worst = std::min(worst, report.min_margin);
    constants += (f ? "; " : "") + std::string("C' = ") + fmt("%.6f", report.constants.C_prime) +
                 ", C'' = " + fmt("%.6f", report.constants.C_double_prime);
    if (report.rows.size() != 100) return {false, "wrong row count"};
  }
  return {worst >= -1e-9, "min margin " + fmt("%.4f", worst) + " (" + constants + ")"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + APM_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return files;
}

const fs::path kConfigs = fs::path(APM_SOURCE_DIR) / "configs";

Outcome arbitrage_detection() {
  const auto model = apm::market_from_drifts({-1.0}, DistributionSpec::rademacher());
  const bool flagged = !apm::check_no_arbitrage(model).arbitrage_free();
  const auto unb = apm::detect_unbounded(model, Utility::appendix_power(0.5),
                                         apm::enumerate_scenarios(model), 64);
  const fs::path out = fs::temp_directory_path() / "apm_acceptance_na";
  fs::remove_all(out);
  const int code = run_cli("optimize --config \"" + (kConfigs / "arbitrage.json").string() +
                           "\" --out \"" + out.string() + "\"");
  return {flagged && unb.found && code == 2,
          std::string("check_no_arbitrage flags: ") + (flagged ? "yes" : "no") +
              ", detect_unbounded: " + (unb.found ? unb.method : "none") + ", optimize exit code " +
              std::to_string(code)};
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "apm_acceptance_det";
  fs::remove_all(base);
  const std::string config = "--config \"" + (kConfigs / "demo.json").string() + "\" --seed 11";
  const int c1 = run_cli("report " + config + " --workers 1 --out \"" + (base / "w1").string() + "\"");
  const int c4 = run_cli("report " + config + " --workers 4 --out \"" + (base / "w4").string() + "\"");
  const auto a = tree(base / "w1");
  const auto b = tree(base / "w4");
  return {c1 == 0 && c4 == 0 && !a.empty() && a == b,
          "exit codes " + std::to_string(c1) + "/" + std::to_string(c4) + ", " + std::to_string(a.size()) +
              " files, identical: " + (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"single-asset utility measure", appendix_measure},
      {"logistic tilt solver", tilt_solver},
      {"optimizer vs brute-force grid", optimizer_vs_grid},
      {"truncation ladder monotone", truncation_monotone},
      {"zero drift stays at origin", jensen_zero},
      {"exponential moment bound", exp_moment_bound},
      {"risk-neutral pricing residuals", pricing},
      {"Hoelder chain margins", holder_chain},
      {"no-arbitrage detection and exit code", arbitrage_detection},
      {"byte-identical bundles across workers", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
