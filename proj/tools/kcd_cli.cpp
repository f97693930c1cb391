#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kcd/cli/experiments.hpp"
#include "kcd/cli/verify.hpp"

namespace fs = std::filesystem;
using namespace kcd;
using namespace kcd::cli;

namespace {

constexpr int kExitFailure = 1;  // verify found a violation
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Flags {
  std::string config;
  std::string out = ".";
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  double perturb_b = 0.0;
};

void write_outputs(const std::vector<OutputFile>& files, const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& f : files) {
    const fs::path p = fs::path(dir) / f.name;
    std::ofstream o(p, std::ios::binary | std::ios::trunc);
    if (!o) throw Error(ErrorKind::Config, "cannot write " + p.string());
    o << f.content;
    if (!o) throw Error(ErrorKind::Config, "failed writing " + p.string());
    std::cout << p.string() << "\n";
  }
}

int run_command(Command cmd, const Flags& fl) {
  const RunOptions run{fl.jobs, fl.seed};
  const Config cfg = effective_config(Config::load(fl.config), run);
  const Report rep = run_experiment(cfg, cmd, run);
  write_outputs(rep.render(parse_format(fl.format), cfg.hash()), fl.out);
  return 0;
}

int run_verify_command(const Flags& fl) {
  const auto results = run_verify(VerifyOptions{fl.perturb_b});
  bool ok = true;
  std::printf("%-40s %-6s %-12s %-10s %s\n", "check", "status", "worst", "tolerance", "seconds");
  for (const auto& r : results) {
    ok = ok && r.pass;
    std::printf("%-40s %-6s %-12.3e %-10.1e %.2f%s%s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.worst,
                r.tolerance, r.seconds, r.note.empty() ? "" : "  ", r.note.c_str());
  }
  std::printf("%s\n", ok ? "all checks passed" : "verification FAILED");
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Krylov counterdiabatic driving: chains, gauge potentials, evolution"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Flags fl;

  auto add_run_flags = [&fl](CLI::App* sub) {
    sub->add_option("--config", fl.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", fl.out, "Output directory")->capture_default_str();
    sub->add_option("--jobs", fl.jobs, "Worker threads for independent points")
        ->check(CLI::Range(1, 256))
        ->capture_default_str();
    sub->add_option("--seed", fl.seed, "Override [experiment] seed");
    sub->add_option("--format", fl.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  };
  CLI::App* lanczos = app.add_subcommand("lanczos", "Lanczos coefficients b_n at each scan point");
  CLI::App* agp = app.add_subcommand("agp", "Gauge-potential coefficients and model-specific decompositions");
  CLI::App* evolve = app.add_subcommand("evolve", "Fidelity with and without a CD term over durations t_f");
  for (CLI::App* s : {lanczos, agp, evolve}) add_run_flags(s);
  CLI::App* verify = app.add_subcommand("verify", "Run the invariant and oracle suite");
  verify->add_option("--inject-fault", fl.perturb_b, "Test hook: relative perturbation applied to one b_n");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*lanczos) return run_command(Command::Lanczos, fl);
    if (*agp) return run_command(Command::Agp, fl);
    if (*evolve) return run_command(Command::Evolve, fl);
    if (*verify) return run_verify_command(fl);
  } catch (const Error& e) {
    std::cerr << "kcd: " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "kcd: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
