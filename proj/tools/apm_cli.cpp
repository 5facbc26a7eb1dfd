#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "apm/config.hpp"
#include "apm/numerics.hpp"
#include "apm/report.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> scenarios;
  std::size_t workers = 1;
};

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(raw, &used);
    if (used != std::string(raw).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("SEED is not an unsigned integer: ") + raw);
  }
}

int run(apm::Command cmd, const Args& args) {
  const apm::ExperimentConfig cfg = apm::parse_config(args.config);
  apm::RunOptions options;
  if (args.seed) {
    options.seed = *args.seed;
    options.seed_source = "cli";
  } else if (auto s = env_seed()) {
    options.seed = *s;
    options.seed_source = "env";
  } else if (cfg.seed_in_config) {
    options.seed = cfg.scenarios.seed;
    options.seed_source = "config";
  }
  options.workers = apm::resolve_workers(args.workers);
  options.scenarios = args.scenarios;

  spdlog::info("{}: config {}, seed {} ({}), {} worker(s)", apm::to_string(cmd),
               args.config, options.seed, options.seed_source, options.workers);
  const apm::RunOutcome outcome = apm::run_command(cmd, cfg, options);
  const std::filesystem::path out = args.out.empty() ? cfg.out_dir : std::filesystem::path(args.out);
  apm::emit_report(outcome.bundle, out);
  spdlog::info("wrote {}", (out / "report.json").string());

  const auto& status = outcome.bundle.report["status"];
  for (const auto& f : outcome.failures) spdlog::error("{}", f);
  std::cout << "status: " << (outcome.exit_code == 0 ? "ok" : "assumption failure") << "\n";
  if (status.contains("witness")) std::cout << "witness: " << status["witness"].dump() << "\n";
  const auto& verdicts = outcome.bundle.report["check"]["verdicts"];
  for (const auto& [name, v] : verdicts.items()) {
    std::cout << name << ": " << v.get<std::string>() << "\n";
  }
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("apm"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Truncated APM market: checks, optimization, risk-neutral measures"};
  app.require_subcommand(1);
  Args args;
  std::optional<apm::Command> chosen;

  const std::pair<apm::Command, const char*> commands[] = {
      {apm::Command::check, "Assumption verdicts only"},
      {apm::Command::optimize, "Truncation ladder of expected-utility problems"},
      {apm::Command::measure, "Tilted risk-neutral measure and its moments"},
      {apm::Command::report, "Full bundle: checks, optimization, measure, diagnostics"},
  };
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(apm::to_string(cmd)), help);
    sub->add_option("--config", args.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", args.out, "Output directory (overrides the config)");
    sub->add_option("--seed", args.seed, "Seed override (beats SEED and the config)");
    sub->add_option("--scenarios", args.scenarios, "Monte Carlo sample size; forces Monte Carlo")
        ->check(CLI::PositiveNumber);
    sub->add_option("--workers", args.workers, "Worker threads, 0 = all cores");
    sub->callback([&chosen, cmd = cmd] { chosen = cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(*chosen, args);
  } catch (const apm::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
}
