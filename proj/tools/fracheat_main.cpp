// Command-line front end: one subcommand per experiment kind, each driven by
// a key = value config file. Every run writes a manifest that reproduces it.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "fracheat/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App *cmd, CommonArgs &args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "master seed (overrides config)")
      ->each([&args](const std::string &) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads,
                  "worker threads (default: FRACHEAT_THREADS or hardware)");
}

int execute(const std::string &kind, const CommonArgs &args) {
  fracheat::ExperimentConfig cfg = fracheat::parse_config_file(args.config_path);
  if (cfg.kind != kind)
    throw fracheat::Error("config kind '" + cfg.kind + "' does not match subcommand '" + kind +
                          "'");
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.threads > 0) cfg.threads = args.threads;

  fracheat::RunResult res = fracheat::run(cfg);
  for (const auto &w : res.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto &[k, v] : res.scalars) std::printf("%s = %.17g\n", k.c_str(), v);
  for (const auto &f : res.files) std::printf("wrote %s\n", f.c_str());
  return 0;
}

void write_error_record(const std::string &out_dir, const std::string &message) {
  if (out_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) return;
  std::ofstream rec(out_dir + "/error.txt", std::ios::trunc);
  rec << "status = error\nmessage = " << message << "\n";
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"fracheat: spectral fractional-sheet and rough heat equation laboratory"};
  app.require_subcommand(1);

  const char *kinds[] = {"sample", "moments", "kernel", "renorm",
                         "levy",   "solve",   "converge", "besov"};
  std::map<std::string, CommonArgs> args;
  for (const char *kind : kinds) {
    auto *cmd = app.add_subcommand(kind, std::string("run a '") + kind + "' experiment");
    add_common(cmd, args[kind]);
  }

  CLI11_PARSE(app, argc, argv);

  for (const char *kind : kinds) {
    if (app.got_subcommand(kind)) {
      try {
        return execute(kind, args[kind]);
      } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        write_error_record(args[kind].out_dir, e.what());
        return 1;
      }
    }
  }
  return 1;
}
