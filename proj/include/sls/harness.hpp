#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sls/config.hpp"

namespace sls {

struct CoverageRow {
  double x = 0.0;
  double nominal = 0.0;
  long long violations = 0;
  long long reps = 0;
  double empirical = 0.0;
  double margin3sigma = 0.0;
  bool ok() const { return empirical <= nominal + margin3sigma; }
};
// margin3sigma = 3 sqrt(q(1-q)/reps) with q = min(nominal, 1).
CoverageRow coverage_row(double x, double nominal, long long violations, long long reps);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string outdir = ".";
};

// Monte Carlo replicates are grouped in blocks of this size; block b draws
// from make_stream(seed, b, tag), so totals do not depend on the thread count.
inline constexpr long long kBlock = 10000;

std::string format_double(double v);
std::uint64_t fnv1a64(const std::string& s);
std::string config_hash(const Json& cfg, std::optional<std::uint64_t> seed);

// Runs one subcommand and writes its files under opt.outdir. Returns 0, or 4
// when a certificate's preconditions fail (reports are still written).
int run_command(const std::string& cmd, const Json& cfg, const RunOptions& opt);

// Individual commands.
int cmd_tail(const Json& cfg, const RunOptions& opt);
int cmd_iid_sandwich(const Json& cfg, const RunOptions& opt);
int cmd_fit(const Json& cfg, const RunOptions& opt);
int cmd_certify(const Json& cfg, const RunOptions& opt);
int cmd_risk(const Json& cfg, const RunOptions& opt);
int cmd_rate(const Json& cfg, const RunOptions& opt);
int cmd_tensor(const Json& cfg, const RunOptions& opt);

// Symmetrised Exponential(1) scaled to unit variance.
double unit_laplace(Rng& rng);

}  // namespace sls
