// Command-line driver. Exit codes: 0 ok, 1 unexpected, 2 config/domain,
// 3 non-convergence, 4 certificate preconditions failed (reports written).
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sls/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sls: penalized estimation and quadratic-form tail bounds"};
  app.require_subcommand(1, 1);
  // Must precede add_subcommand: subcommands copy this setting when created.
  app.fallthrough();
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = ".";
  app.add_option("--config", config_path, "JSON configuration")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");
  for (const char* name : {"tail", "iid-sandwich", "fit", "certify", "risk", "rate", "tensor"})
    app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::ifstream in(config_path);
    sls::Json cfg;
    try {
      cfg = sls::Json::parse(in);
    } catch (const sls::Json::exception& e) {
      throw sls::ConfigError(config_path + ": " + e.what());
    }
    sls::RunOptions opt;
    if (seed_opt->count() > 0) opt.seed = seed;
    opt.threads = threads;
    opt.outdir = out;
    int rc = sls::run_command(app.get_subcommands().front()->get_name(), cfg, opt);
    if (rc == 4) std::cerr << "certificate preconditions not met; reports written\n";
    return rc;
  } catch (const sls::NonConverged& e) {
    std::cerr << "error: " << e.what() << " (grad norm " << e.grad_norm << ")\n";
    return 3;
  } catch (const sls::CertificateInapplicable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const sls::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sls::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const sls::NoPhaseTransition& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sls::AlphaTooSmall& e) {
    std::cerr << "error: " << e.what() << " (required alpha " << e.required_alpha << ")\n";
    return 2;
  } catch (const sls::Unsupported& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
