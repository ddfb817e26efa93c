#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "afcmem/core.hpp"
#include "scenario.hpp"

namespace {

using afcmem::cli::json;

// Exit codes: 0 success, 2 usage/config/IO problems, 3 numerical failures.
constexpr int kUsage = 2;
constexpr int kNumeric = 3;

struct Common {
  std::string config;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* cfg = cmd->add_option("--config", c.config, "JSON scenario file")->check(CLI::ExistingFile);
  if (config_required) cfg->required();
  cmd->add_option("--out", c.out, "Output directory (default: outputs.dir from the config, else out/<name>)");
  cmd->add_option("--format", c.format, "Table format; only csv is supported");
  cmd->add_option("--seed", c.seed, "RNG seed; overrides the config");
  cmd->add_option("--threads", c.threads, "Worker threads (default: $AFCMEMSIM_THREADS or 1)")
      ->check(CLI::PositiveNumber);
}

unsigned resolve_threads(const std::optional<unsigned>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv("AFCMEMSIM_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    std::size_t used = 0;
    const long v = std::stol(env, &used);
    if (used == std::string(env).size() && v > 0) return static_cast<unsigned>(v);
  } catch (const std::exception&) {
  }
  afcmem::fail(afcmem::ErrorCode::ConfigError, "AFCMEMSIM_THREADS must be a positive integer");
}

int run(const std::string& pipeline, json config, const Common& c, std::filesystem::path base_dir) {
  if (c.format != "csv") afcmem::fail(afcmem::ErrorCode::ConfigError, "--format: only csv is supported");
  afcmem::cli::RunContext ctx;
  ctx.seed = c.seed;
  ctx.threads = resolve_threads(c.threads);
  ctx.base_dir = std::move(base_dir);

  std::filesystem::path out = c.out;
  if (out.empty()) {
    const auto o = config.find("outputs");
    if (o != config.end() && o->is_object() && o->contains("dir") && (*o)["dir"].is_string())
      out = (*o)["dir"].get<std::string>();
    else
      out = std::filesystem::path("out") / config.value("name", pipeline);
  }
  const auto artifacts = afcmem::cli::run_pipeline(pipeline, config, ctx);
  if (c.seed) config["seed"] = *c.seed;
  afcmem::cli::write_artifacts(out, pipeline, config, artifacts);
  for (const auto& [k, v] : artifacts.summary) std::cout << k << " = " << v << '\n';
  std::cout << "outputs = " << out.string() << '\n';
  return 0;
}

std::filesystem::path config_dir(const std::string& path) {
  return std::filesystem::absolute(path).parent_path();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity-enhanced atomic frequency comb memory simulator"};
  app.set_version_flag("--version", AFCMEM_VERSION);
  app.require_subcommand(1);

  std::map<std::string, Common> common;
  std::map<std::string, CLI::App*> commands;
  for (const auto& name : afcmem::cli::pipeline_names()) {
    if (name == "fit") continue;
    auto* cmd = app.add_subcommand(name, "Run the " + name + " pipeline from a JSON config");
    add_common(cmd, common[name], true);
    commands[name] = cmd;
  }

  std::string fit_model, fit_data;
  std::vector<double> fit_guess;
  auto* fit_cmd = app.add_subcommand("fit", "Least-squares fit of a named model to a CSV (x, y[, sigma])");
  add_common(fit_cmd, common["fit"], false);
  fit_cmd->add_option("--model", fit_model, "fano, exp_decay, fringe or gaussian_pulse");
  fit_cmd->add_option("--data", fit_data, "CSV with columns x, y and optionally sigma");
  fit_cmd->add_option("--guess", fit_guess, "Initial parameters, comma separated")->delimiter(',');
  commands["fit"] = fit_cmd;

  std::string scenario;
  Common scenario_common;
  auto* run_cmd = app.add_subcommand("run-scenario", "Run the pipeline named inside a scenario file");
  run_cmd->add_option("scenario", scenario, "JSON scenario file")->required()->check(CLI::ExistingFile);
  add_common(run_cmd, scenario_common, false);
  run_cmd->remove_option(run_cmd->get_option("--config"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (run_cmd->parsed()) {
      const json config = afcmem::cli::load_config(scenario);
      if (!config.is_object() || !config.contains("pipeline") || !config["pipeline"].is_string())
        afcmem::fail(afcmem::ErrorCode::ConfigError, scenario + ": pipeline: required string field is missing");
      return run(config["pipeline"].get<std::string>(), config, scenario_common, config_dir(scenario));
    }
    for (const auto& [name, cmd] : commands) {
      if (!cmd->parsed()) continue;
      const Common& c = common[name];
      json config = json::object();
      std::filesystem::path base = std::filesystem::current_path();
      if (!c.config.empty()) {
        config = afcmem::cli::load_config(c.config);
        base = config_dir(c.config);
      }
      if (name == "fit") {
        if (!fit_model.empty()) config["model"] = fit_model;
        if (!fit_data.empty()) config["data"] = std::filesystem::absolute(fit_data).string();
        if (!fit_guess.empty()) config["guess"] = fit_guess;
      }
      return run(name, config, c, base);
    }
  } catch (const afcmem::Error& e) {
    std::cerr << "error [" << afcmem::to_string(e.code()) << "]: " << e.what() << '\n';
    const auto code = e.code();
    return code == afcmem::ErrorCode::ConfigError || code == afcmem::ErrorCode::IoError ? kUsage : kNumeric;
  } catch (const json::exception& e) {
    std::cerr << "error [ConfigError]: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
