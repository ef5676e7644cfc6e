// Command-line runner: vhj <subcommand> --config <path> [--out <dir>] [--jobs <n>] [--seed <n>]

#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "vhj/runner.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Numerical laboratory for superquadratic viscous Hamilton-Jacobi equations"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t seed = 1;
  bool seed_given = false;
  for (const char *name : {"evolve", "ergodic", "barriers", "converge", "verify", "sweep"}) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--jobs", jobs, "Worker threads for sweep")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed = s, seed_given = true; }, "Random seed for sampling suites");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    vhj::Config cfg = vhj::Config::load(config_path);
    if (!seed_given && cfg.has("seed")) seed = std::uint64_t(cfg.integer("seed"));
    if (out_dir.empty()) {
      const char *root = std::getenv("VHJ_OUTPUT_ROOT");
      const std::string stem = std::filesystem::path(config_path).stem().string();
      out_dir = cfg.has("output.dir") ? cfg.str("output.dir")
                                      : (std::filesystem::path(root ? root : "vhj_out") / (sub + "_" + stem)).string();
    }
    int code = 0;
    if (sub == "sweep") {
      code = vhj::run_sweep(cfg, out_dir, seed, jobs);
    } else {
      const vhj::RunResult r = vhj::run_into(sub, cfg, out_dir, seed);
      code = vhj::exit_code(r);
      for (const auto &[k, v] : r.summary["verdicts"].items())
        std::cout << k << ": " << (v.get<bool>() ? "pass" : "FAIL") << "\n";
    }
    std::cout << "output: " << out_dir << "\n";
    return code;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
