// reflow command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "reflow/reflow.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct StringDeleter {
  void operator()(char* s) const { reflow_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int report(reflow_status status, const std::string& context) {
  std::cerr << "reflow: " << context << ": " << reflow_last_error() << '\n';
  return status == REFLOW_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo engine for reflected stochastic flows"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  auto* run = app.add_subcommand("run", "run an experiment and print its manifest");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  auto* out_opt = run->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  app.add_subcommand("presets", "list coefficient presets");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cerr, std::cerr);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (app.got_subcommand("presets")) {
    char* listing = nullptr;
    if (const auto st = reflow_presets(&listing); st != REFLOW_OK) return report(st, "presets");
    OwnedString owned(listing);
    std::cout << owned.get() << '\n';
    return kExitOk;
  }

  const auto text = slurp(config_path);
  if (!text) {
    std::cerr << "reflow: cannot read " << config_path << '\n';
    return kExitConfig;
  }

  if (app.got_subcommand("validate")) {
    if (const auto st = reflow_validate_config(text->c_str()); st != REFLOW_OK) return report(st, config_path);
    std::cerr << config_path << ": ok\n";
    return kExitOk;
  }

  reflow_run_options opts{};
  opts.output_dir = *out_opt ? out_dir.c_str() : nullptr;
  opts.has_seed = *seed_opt ? 1 : 0;
  opts.seed = seed;
  opts.threads = threads;
  char* manifest = nullptr;
  if (const auto st = reflow_run_experiment(text->c_str(), &opts, &manifest); st != REFLOW_OK) {
    return report(st, config_path);
  }
  OwnedString owned(manifest);
  std::cout << owned.get() << '\n';
  return kExitOk;
}
