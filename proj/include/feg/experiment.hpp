#pragma once
// Experiment driver.
//
// A single JSON config (versioned schema) selects a problem, a list of
// methods, iteration/trial counts, and which artifacts to emit. Running an
// experiment produces, per method: a trace CSV (k, grad_norm_sq, bound,
// potential, tau, eta), an optional certificate JSON, an optional Monte
// Carlo report for stochastic runs, and one shared summary JSON. All file
// writes go through a temp-file-then-rename so readers never observe a
// partial artifact. Everything is deterministic given the config, so
// serializing and reloading a config reproduces the artifacts byte for byte.

#include "feg/analysis.hpp"
#include "feg/core.hpp"
#include "feg/noise.hpp"
#include "feg/solvers.hpp"
#include "feg/stochastic.hpp"

#include "nlohmann/json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace feg {

// One method to run, with optional per-method parameter overrides. Fields
// that do not apply to the named method are rejected at validation time.
struct MethodSelector {
  std::string name;                  // feg | feg-a | s-feg | eg | eg+ | eag-c | eag-v
  std::optional<double> alpha, beta; // eg+ step sizes (defaults 1/(2L), 1/2)
  std::optional<double> rho;         // feg comonotonicity level override
  std::optional<double> tau_init, eta_init, delta;  // feg-a search parameters
};

struct ExperimentConfig {
  // problem block
  std::string problem = "bilinear";  // bilinear | worst-case | quadratic:<file> | random-nc
  double L = 1.0;                    // scale for bilinear / worst-case
  double R = 1.0;                    // radius parameter for worst-case
  int dim = 4;                       // dimension for random-nc (even)
  std::uint64_t problem_seed = 1;    // generator seed for random-nc
  double problem_rho = -0.1;         // comonotonicity target for random-nc

  std::optional<double> rho;         // method-level override applied to feg
  std::vector<MethodSelector> methods;
  int iters = 50;                    // K
  long trials = 1;                   // > 1 triggers the Monte Carlo report (s-feg)
  std::uint64_t seed = 0;            // noise / default-start seed
  std::optional<double> eps;         // s-feg target accuracy; sets the variance schedule
  std::string output_dir = ".";
  bool emit_trace_csv = true;
  bool emit_certificate_json = true;
  bool emit_summary_json = true;
  bool verify = false;               // run the certificate suite
  std::optional<std::vector<double>> z0;  // explicit start (defaults per problem)
};

// JSON schema (schema_version 1). Loading validates every field and names
// the offending field in the error message.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Checks a config built in code the same way loading does; throws
// std::invalid_argument naming the offending field.
void validate_config(const ExperimentConfig& config);

// Problem/start resolution used by run_experiment, exposed for tests.
ProblemSpec problem_from_config(const ExperimentConfig& config);
Vec default_start(const ProblemSpec& problem, const ExperimentConfig& config);

struct McRow {
  int k = 0;
  double mean = 0.0;
  double sem = 0.0;                  // standard error of the mean
  std::optional<double> bound;
  bool pass = true;                  // mean <= bound + 4 sem (when bound applies)
};

struct MethodResult {
  MethodSelector selector;
  RunHandle run;
  std::vector<std::optional<double>> bounds;      // per k; engaged where a rate bound applies
  std::optional<std::vector<double>> potentials;  // per k; engaged for schedule-driven methods
  std::optional<CertificateReport> cert;          // present when verify
  std::vector<McRow> mc;                          // present when trials > 1 on s-feg
  long mc_trials = 0;
  double bound_ratio_max = 0.0;      // max over k >= 1 of grad_norm_sq / bound
  bool expected_stall = false;       // worst-case instance pinned at grad_norm_sq = 2LR
  std::string note;
};

struct ExperimentSummary {
  ExperimentConfig config;
  ProblemSpec problem;
  Vec start;
  std::vector<MethodResult> methods;
  bool all_certificates_pass = true;
  std::vector<std::string> written_files;
};

// Runs every selected method, writes the requested artifacts atomically
// under config.output_dir, and returns the in-memory results.
ExperimentSummary run_experiment(const ExperimentConfig& config);

// Header exactly "k,grad_norm_sq,bound,potential,tau,eta"; one row per
// iterate; absent values become empty fields; numbers carry 17 significant
// digits so parsing a row reproduces the doubles exactly.
void emit_trace_csv(const Trace& trace,
                    const std::vector<std::optional<double>>& bounds,
                    const std::string& path,
                    const std::vector<double>* potentials = nullptr);

// %#.17g rendering used by every artifact writer.
std::string format_g17(double v);
// Writes text to path via "<path>.tmp" + rename; throws on failure.
void atomic_write_text(const std::string& path, const std::string& text);

nlohmann::json certificate_to_json(const CertificateReport& rep);

// Exit codes: 0 success (all requested certificates pass), 2 when any
// certificate fails, 1 for usage, config, or parameter errors.
int cli_main(const std::vector<std::string>& args);

}  // namespace feg
