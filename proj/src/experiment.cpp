#include "feg/experiment.hpp"

#include "feg/problems.hpp"
#include "feg/rng.hpp"

#include "CLI11.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

namespace feg {

namespace {

using nlohmann::json;

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("config: ") + field +
                                " must be positive and finite");
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  const bool is_quadratic = c.problem.rfind("quadratic:", 0) == 0;
  if (!(c.problem == "bilinear" || c.problem == "worst-case" ||
        c.problem == "random-nc" || is_quadratic))
    throw std::invalid_argument("config: unknown problem label '" + c.problem +
                                "'");
  if (is_quadratic && c.problem.size() == std::strlen("quadratic:"))
    throw std::invalid_argument("config: problem 'quadratic:' needs a file path");
  require_positive(c.L, "problem.L");
  require_positive(c.R, "problem.R");
  if (c.problem == "random-nc") {
    if (c.dim < 2 || c.dim % 2 != 0)
      throw std::invalid_argument("config: problem.dim must be even and at least 2");
    if (!(c.problem_rho < 0.0) || !std::isfinite(c.problem_rho))
      throw std::invalid_argument("config: problem.rho must be negative and finite");
  }
  if (c.methods.empty())
    throw std::invalid_argument("config: methods must be a non-empty list");
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    const MethodSelector& s = c.methods[i];
    const std::string at = "config: methods[" + std::to_string(i) + "]";
    Method m;
    try {
      m = method_from_string(s.name);
    } catch (const std::exception&) {
      throw std::invalid_argument(at + ": unknown method '" + s.name + "'");
    }
    auto reject = [&](const std::optional<double>& v, const char* field) {
      if (v)
        throw std::invalid_argument(at + ": '" + field +
                                    "' does not apply to method '" + s.name + "'");
    };
    if (m != Method::eg_plus) {
      reject(s.alpha, "alpha");
      reject(s.beta, "beta");
    }
    if (m != Method::feg) reject(s.rho, "rho");
    if (m != Method::feg_a) {
      reject(s.tau_init, "tau_init");
      reject(s.eta_init, "eta_init");
      reject(s.delta, "delta");
    }
    if (s.alpha && (!(*s.alpha > 0.0) || !std::isfinite(*s.alpha)))
      throw std::invalid_argument(at + ": alpha must be positive and finite");
    if (s.beta && (!(*s.beta > 0.0) || !(*s.beta <= 1.0)))
      throw std::invalid_argument(at + ": beta must lie in (0, 1]");
    if (s.rho && !std::isfinite(*s.rho))
      throw std::invalid_argument(at + ": rho must be finite");
    if (s.tau_init && (!(*s.tau_init > 0.0) || !std::isfinite(*s.tau_init)))
      throw std::invalid_argument(at + ": tau_init must be positive and finite");
    if (s.eta_init && (!(*s.eta_init > 0.0) || !std::isfinite(*s.eta_init)))
      throw std::invalid_argument(at + ": eta_init must be positive and finite");
    if (s.delta && (!(*s.delta > 0.0) || !(*s.delta < 1.0)))
      throw std::invalid_argument(at + ": delta must lie strictly in (0, 1)");
  }
  if (c.iters < 1) throw std::invalid_argument("config: iters must be at least 1");
  if (c.trials < 1)
    throw std::invalid_argument("config: trials must be at least 1");
  if (c.eps && (!(*c.eps > 0.0) || !std::isfinite(*c.eps)))
    throw std::invalid_argument("config: eps must be positive and finite");
  if (c.rho && !std::isfinite(*c.rho))
    throw std::invalid_argument("config: rho must be finite");
  if (c.output_dir.empty())
    throw std::invalid_argument("config: output_dir must be set");
  if (c.z0) {
    if (c.z0->empty())
      throw std::invalid_argument("config: z0 must be non-empty when given");
    for (double v : *c.z0)
      if (!std::isfinite(v))
        throw std::invalid_argument("config: z0 entries must be finite");
  }
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("config: " + field +
                                " must be a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array())
    throw std::invalid_argument("config: " + field + " rows must be arrays");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw std::invalid_argument("config: " + field +
                                  " rows must all have the same length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw std::invalid_argument("config: " + field +
                                    " entries must be numbers");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
    }
  }
  return M;
}

double json_double(const json& j, const std::string& field) {
  if (!j.is_number())
    throw std::invalid_argument("config: " + field + " must be a number");
  return j.get<double>();
}

}  // namespace

ProblemSpec problem_from_config(const ExperimentConfig& config) {
  if (config.problem == "bilinear") return make_bilinear(config.L);
  if (config.problem == "worst-case")
    return make_worst_case_smooth(config.L, config.R);
  if (config.problem == "random-nc")
    return random_negative_comonotone(config.problem_seed, config.dim,
                                      config.problem_rho);
  if (config.problem.rfind("quadratic:", 0) == 0) {
    const std::string path = config.problem.substr(std::strlen("quadratic:"));
    std::ifstream in(path);
    if (!in)
      throw std::invalid_argument("config: problem file '" + path +
                                  "' cannot be opened");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument("config: problem file '" + path +
                                  "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("A") || !j.contains("B") ||
        !j.contains("C"))
      throw std::invalid_argument("config: problem file '" + path +
                                  "' must hold blocks A, B, C");
    QuadraticMinimax q;
    q.A = matrix_from_json(j["A"], "A");
    q.B = matrix_from_json(j["B"], "B");
    q.C = matrix_from_json(j["C"], "C");
    ProblemSpec p = make_quadratic(q);
    if (j.contains("rho"))
      p.comonotone = json_double(j["rho"], "rho");
    else if (p.matrix)
      p.comonotone = comonotonicity_of_linear(*p.matrix);
    p.label = config.problem;
    return p;
  }
  throw std::invalid_argument("config: unknown problem label '" +
                              config.problem + "'");
}

Vec default_start(const ProblemSpec& problem, const ExperimentConfig& config) {
  const int d = problem.op.dim;
  if (config.z0) {
    if (static_cast<int>(config.z0->size()) != d)
      throw std::invalid_argument(
          "config: z0 has dimension " + std::to_string(config.z0->size()) +
          " but the problem needs " + std::to_string(d));
    Vec z(d);
    for (int i = 0; i < d; ++i) z[i] = (*config.z0)[static_cast<std::size_t>(i)];
    return z;
  }
  if (config.problem == "bilinear") {
    Vec z = Vec::Zero(d);
    z[0] = 1.0;
    return z;
  }
  if (config.problem == "worst-case") return Vec::Zero(d);
  // Seeded unit start for the matrix problems.
  Vec z(d);
  for (int i = 0; i < d; ++i)
    z[i] = gaussian_at(mix_key(config.seed, 0x5742u), i);
  const double n = z.norm();
  if (n == 0.0) {
    z.setZero();
    z[0] = 1.0;
    return z;
  }
  return z / n;
}

std::string format_g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%#.17g", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("atomic_write_text: cannot open '" + tmp +
                               "' for writing");
    out << text;
    out.flush();
    if (!out)
      throw std::runtime_error("atomic_write_text: write to '" + tmp +
                               "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("atomic_write_text: cannot rename '" + tmp +
                             "' to '" + path + "': " + std::strerror(errno));
}

void emit_trace_csv(const Trace& trace,
                    const std::vector<std::optional<double>>& bounds,
                    const std::string& path,
                    const std::vector<double>* potentials) {
  const std::size_t n = trace.iterates.size();
  if (trace.grad_norm_sq.size() != n)
    throw std::invalid_argument(
        "emit_trace_csv: gradient series does not cover the iterates");
  if (!bounds.empty() && bounds.size() != n)
    throw std::invalid_argument("emit_trace_csv: bound series length mismatch");
  if (potentials && potentials->size() != n)
    throw std::invalid_argument(
        "emit_trace_csv: potential series length mismatch");
  std::string text = "k,grad_norm_sq,bound,potential,tau,eta\n";
  for (std::size_t k = 0; k < n; ++k) {
    text += std::to_string(k);
    text += ',';
    text += format_g17(trace.grad_norm_sq[k]);
    text += ',';
    if (k < bounds.size() && bounds[k]) text += format_g17(*bounds[k]);
    text += ',';
    if (potentials) text += format_g17((*potentials)[k]);
    text += ',';
    if (k < trace.step_tau.size()) text += format_g17(trace.step_tau[k]);
    text += ',';
    if (k < trace.step_eta.size()) text += format_g17(trace.step_eta[k]);
    text += '\n';
  }
  atomic_write_text(path, text);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = 1;
  json prob;
  prob["label"] = c.problem;
  prob["L"] = c.L;
  prob["R"] = c.R;
  prob["dim"] = c.dim;
  prob["seed"] = c.problem_seed;
  prob["rho"] = c.problem_rho;
  j["problem"] = prob;
  if (c.rho) j["rho"] = *c.rho;
  json ms = json::array();
  for (const MethodSelector& s : c.methods) {
    json m;
    m["name"] = s.name;
    if (s.alpha) m["alpha"] = *s.alpha;
    if (s.beta) m["beta"] = *s.beta;
    if (s.rho) m["rho"] = *s.rho;
    if (s.tau_init) m["tau_init"] = *s.tau_init;
    if (s.eta_init) m["eta_init"] = *s.eta_init;
    if (s.delta) m["delta"] = *s.delta;
    ms.push_back(m);
  }
  j["methods"] = ms;
  j["iters"] = c.iters;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  if (c.eps) j["eps"] = *c.eps;
  j["output_dir"] = c.output_dir;
  json emit = json::array();
  if (c.emit_trace_csv) emit.push_back("trace_csv");
  if (c.emit_certificate_json) emit.push_back("certificate_json");
  if (c.emit_summary_json) emit.push_back("summary_json");
  j["emit"] = emit;
  j["verify"] = c.verify;
  if (c.z0) j["z0"] = *c.z0;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object())
    throw std::invalid_argument("config: document must be a JSON object");
  static const std::map<std::string, int> top_keys = {
      {"schema_version", 0}, {"problem", 0}, {"rho", 0},   {"methods", 0},
      {"iters", 0},          {"trials", 0},  {"seed", 0},  {"eps", 0},
      {"output_dir", 0},     {"emit", 0},    {"verify", 0}, {"z0", 0}};
  for (const auto& item : j.items())
    if (top_keys.find(item.key()) == top_keys.end())
      throw std::invalid_argument("config: unknown key '" + item.key() + "'");
  if (!j.contains("schema_version"))
    throw std::invalid_argument("config: schema_version is required");
  if (!j["schema_version"].is_number_integer() ||
      j["schema_version"].get<long>() != 1)
    throw std::invalid_argument("config: schema_version must be 1");

  ExperimentConfig c;
  if (j.contains("problem")) {
    const json& p = j["problem"];
    if (p.is_string()) {
      c.problem = p.get<std::string>();
    } else if (p.is_object()) {
      static const std::map<std::string, int> prob_keys = {
          {"label", 0}, {"L", 0}, {"R", 0}, {"dim", 0}, {"seed", 0}, {"rho", 0}};
      for (const auto& item : p.items())
        if (prob_keys.find(item.key()) == prob_keys.end())
          throw std::invalid_argument("config: unknown key 'problem." +
                                      item.key() + "'");
      if (p.contains("label")) {
        if (!p["label"].is_string())
          throw std::invalid_argument("config: problem.label must be a string");
        c.problem = p["label"].get<std::string>();
      }
      if (p.contains("L")) c.L = json_double(p["L"], "problem.L");
      if (p.contains("R")) c.R = json_double(p["R"], "problem.R");
      if (p.contains("dim")) {
        if (!p["dim"].is_number_integer())
          throw std::invalid_argument("config: problem.dim must be an integer");
        c.dim = p["dim"].get<int>();
      }
      if (p.contains("seed")) {
        if (!p["seed"].is_number_integer())
          throw std::invalid_argument("config: problem.seed must be an integer");
        c.problem_seed = p["seed"].get<std::uint64_t>();
      }
      if (p.contains("rho")) c.problem_rho = json_double(p["rho"], "problem.rho");
    } else {
      throw std::invalid_argument("config: problem must be a string or object");
    }
  }
  if (j.contains("rho")) c.rho = json_double(j["rho"], "rho");
  if (j.contains("methods")) {
    if (!j["methods"].is_array())
      throw std::invalid_argument("config: methods must be an array");
    for (std::size_t i = 0; i < j["methods"].size(); ++i) {
      const json& m = j["methods"][i];
      const std::string at = "config: methods[" + std::to_string(i) + "]";
      MethodSelector s;
      if (m.is_string()) {
        s.name = m.get<std::string>();
      } else if (m.is_object()) {
        static const std::map<std::string, int> sel_keys = {
            {"name", 0},     {"alpha", 0},    {"beta", 0}, {"rho", 0},
            {"tau_init", 0}, {"eta_init", 0}, {"delta", 0}};
        for (const auto& item : m.items())
          if (sel_keys.find(item.key()) == sel_keys.end())
            throw std::invalid_argument(at + ": unknown key '" + item.key() +
                                        "'");
        if (!m.contains("name") || !m["name"].is_string())
          throw std::invalid_argument(at + ": name must be a string");
        s.name = m["name"].get<std::string>();
        if (m.contains("alpha")) s.alpha = json_double(m["alpha"], at + ".alpha");
        if (m.contains("beta")) s.beta = json_double(m["beta"], at + ".beta");
        if (m.contains("rho")) s.rho = json_double(m["rho"], at + ".rho");
        if (m.contains("tau_init"))
          s.tau_init = json_double(m["tau_init"], at + ".tau_init");
        if (m.contains("eta_init"))
          s.eta_init = json_double(m["eta_init"], at + ".eta_init");
        if (m.contains("delta")) s.delta = json_double(m["delta"], at + ".delta");
      } else {
        throw std::invalid_argument(at + ": must be a string or object");
      }
      c.methods.push_back(std::move(s));
    }
  }
  if (j.contains("iters")) {
    if (!j["iters"].is_number_integer())
      throw std::invalid_argument("config: iters must be an integer");
    c.iters = j["iters"].get<int>();
  }
  if (j.contains("trials")) {
    if (!j["trials"].is_number_integer())
      throw std::invalid_argument("config: trials must be an integer");
    c.trials = j["trials"].get<long>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw std::invalid_argument("config: seed must be an integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("eps")) c.eps = json_double(j["eps"], "eps");
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string())
      throw std::invalid_argument("config: output_dir must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("emit")) {
    if (!j["emit"].is_array())
      throw std::invalid_argument("config: emit must be an array");
    c.emit_trace_csv = c.emit_certificate_json = c.emit_summary_json = false;
    for (const json& e : j["emit"]) {
      if (!e.is_string())
        throw std::invalid_argument("config: emit entries must be strings");
      const std::string v = e.get<std::string>();
      if (v == "trace_csv")
        c.emit_trace_csv = true;
      else if (v == "certificate_json")
        c.emit_certificate_json = true;
      else if (v == "summary_json")
        c.emit_summary_json = true;
      else
        throw std::invalid_argument("config: emit entry '" + v +
                                    "' is not a known artifact");
    }
  }
  if (j.contains("verify")) {
    if (!j["verify"].is_boolean())
      throw std::invalid_argument("config: verify must be a boolean");
    c.verify = j["verify"].get<bool>();
  }
  if (j.contains("z0")) {
    if (!j["z0"].is_array())
      throw std::invalid_argument("config: z0 must be an array of numbers");
    std::vector<double> z;
    for (const json& e : j["z0"]) {
      if (!e.is_number())
        throw std::invalid_argument("config: z0 entries must be numbers");
      z.push_back(e.get<double>());
    }
    c.z0 = std::move(z);
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: '" + path +
                                "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

namespace {

RunHandle make_run(Method m, const MethodSelector& sel,
                   const ExperimentConfig& cfg, const ProblemSpec& problem,
                   const Vec& z0) {
  switch (m) {
    case Method::feg: {
      ProblemSpec p = problem;
      const double rho_eff =
          sel.rho ? *sel.rho
                  : (cfg.rho ? *cfg.rho
                             : (p.comonotone ? *p.comonotone : 0.0));
      p.comonotone = rho_eff;
      return run_feg(p, z0, cfg.iters);
    }
    case Method::feg_a:
      return run_feg_a(problem, z0, sel.tau_init.value_or(1.0),
                       sel.eta_init.value_or(1.0), sel.delta.value_or(0.1),
                       cfg.iters);
    case Method::s_feg: {
      NoiseModel noise;
      noise.family = NoiseFamily::gaussian_iid;
      noise.schedule = cfg.eps ? schedule_for_epsilon(*cfg.eps, cfg.iters)
                               : VarianceSchedule::zero(cfg.iters);
      noise.seed = cfg.seed;
      return run_sfeg(problem, noise, z0, cfg.iters, 0);
    }
    case Method::eg:
      return run_eg(problem, z0, cfg.iters);
    case Method::eg_plus: {
      if (!problem.lipschitz)
        throw std::invalid_argument(
            "run: method 'eg+' needs the problem's smoothness constant");
      return run_eg_plus(problem, z0, cfg.iters,
                         sel.alpha.value_or(0.5 / *problem.lipschitz),
                         sel.beta.value_or(0.5));
    }
    case Method::eag_c:
      return run_eag(problem, z0, cfg.iters, EagVariant::C);
    case Method::eag_v:
      return run_eag(problem, z0, cfg.iters, EagVariant::V);
  }
  throw std::logic_error("make_run: unhandled method");
}

std::vector<std::optional<double>> bound_series_for(const RunHandle& run) {
  const int K = static_cast<int>(run.trace.iterates.size()) - 1;
  std::vector<std::optional<double>> out(static_cast<std::size_t>(K) + 1);
  const ProblemSpec& p = run.problem;
  if (!p.solution) return out;
  const double D = (run.trace.iterates.front() - *p.solution).norm();
  const bool noisy = run.noise && !run.noise->schedule.all_zero();
  auto fill = [&](auto f) {
    for (int k = 1; k <= K; ++k) out[static_cast<std::size_t>(k)] = f(k);
  };
  switch (run.method) {
    case Method::feg:
      fill([&](int k) { return bound_feg(run.L, run.rho, D, k); });
      break;
    case Method::feg_a:
      if (p.lipschitz && p.comonotone &&
          *p.comonotone > -(1.0 - run.delta) / (2.0 * *p.lipschitz))
        fill([&](int k) {
          return bound_fega(*p.lipschitz, *p.comonotone, run.delta, D, k);
        });
      break;
    case Method::s_feg:
      if (!noisy && p.comonotone && *p.comonotone >= 0.0) {
        const VarianceSchedule sig =
            run.noise ? run.noise->schedule : VarianceSchedule::zero(K);
        fill([&](int k) { return bound_sfeg(run.L, D, sig, k); });
      }
      break;
    case Method::eag_c:
      if (p.comonotone && *p.comonotone >= 0.0)
        fill([&](int k) { return bound_eag_c(run.L, D, k); });
      break;
    case Method::eag_v:
      if (p.comonotone && *p.comonotone >= 0.0)
        fill([&](int k) { return bound_eag_v(run.L, D, k); });
      break;
    default:
      break;  // eg, eg+ publish no rate bound here
  }
  return out;
}

std::optional<std::vector<double>> potential_column(const RunHandle& run) {
  const bool noisy = run.noise && !run.noise->schedule.all_zero();
  if (!(run.method == Method::feg || run.method == Method::feg_a ||
        (run.method == Method::s_feg && !noisy)))
    return std::nullopt;
  auto [sched, lseq] = schedule_of_run(run);
  const int K = static_cast<int>(run.trace.iterates.size()) - 1;
  PotentialLedger led = build_potential_ledger(sched, lseq, K);
  return potential_series(run.trace, led, run.problem);
}

void detect_stall(const ExperimentConfig& cfg, MethodResult& res) {
  if (cfg.problem != "worst-case") return;
  const std::vector<double>& g = res.run.trace.grad_norm_sq;
  if (g.size() < 2) return;
  for (double v : g)
    if (v != g.front()) return;
  const double expected = 2.0 * cfg.L * cfg.R;
  if (std::abs(g.front() - expected) > 1e-9 * (1.0 + expected)) return;
  res.expected_stall = true;
  res.note =
      "expected stall: grad_norm_sq is pinned at 2*L*R = " +
      format_g17(g.front()) +
      "; methods whose iterates stay in the span of observed operator values "
      "cannot progress on this instance";
}

void add_mc_report(MethodResult& res, const ExperimentConfig& cfg,
                   const ProblemSpec& problem, const Vec& z0) {
  const NoiseModel& noise = *res.run.noise;
  const McSeries series =
      mc_grad_series(problem, noise, z0, cfg.iters, cfg.trials);
  const bool have_bound =
      problem.solution && problem.comonotone && *problem.comonotone >= 0.0;
  const double D =
      have_bound ? (z0 - *problem.solution).norm() : 0.0;
  for (int k = 0; k <= cfg.iters; ++k) {
    McRow row;
    row.k = k;
    row.mean = series.mean[static_cast<std::size_t>(k)];
    row.sem = series.sem[static_cast<std::size_t>(k)];
    if (have_bound && k >= 1) {
      row.bound = bound_sfeg(res.run.L, D, noise.schedule, k);
      row.pass = row.mean <= *row.bound + 4.0 * row.sem;
    }
    res.mc.push_back(row);
  }
  res.mc_trials = cfg.trials;
}

json mc_to_json(const MethodResult& res) {
  json j;
  j["trials"] = res.mc_trials;
  json rows = json::array();
  for (const McRow& r : res.mc) {
    json o;
    o["k"] = r.k;
    o["mean_grad_norm_sq"] = r.mean;
    o["stderr"] = r.sem;
    o["bound"] = r.bound ? json(*r.bound) : json(nullptr);
    o["pass"] = r.pass;
    rows.push_back(o);
  }
  j["rows"] = rows;
  return j;
}

json summary_entry(const MethodResult& res, const ExperimentConfig& cfg) {
  const Trace& tr = res.run.trace;
  const int K = static_cast<int>(tr.iterates.size()) - 1;
  json e;
  e["method"] = res.selector.name;
  e["problem"] = cfg.problem;
  e["K"] = K;
  e["final_grad_norm_sq"] = tr.grad_norm_sq.back();
  e["bound_final"] = (K >= 1 && res.bounds[static_cast<std::size_t>(K)])
                         ? json(*res.bounds[static_cast<std::size_t>(K)])
                         : json(nullptr);
  e["bound_ratio_max"] = res.bound_ratio_max;
  e["oracle_calls"] = tr.oracle_calls;
  json certs;
  certs["potential"] =
      cert_status_name(res.cert ? res.cert->potential : CertStatus::skipped);
  certs["bound"] =
      cert_status_name(res.cert ? res.cert->bound : CertStatus::skipped);
  certs["span"] =
      cert_status_name(res.cert ? res.cert->span : CertStatus::skipped);
  e["certificates"] = certs;
  if (res.cert && !res.cert->notes.empty()) e["certificate_notes"] = res.cert->notes;
  if (res.expected_stall) e["expected_stall"] = true;
  if (!res.note.empty()) e["note"] = res.note;
  if (res.mc_trials > 0) e["mc_trials"] = res.mc_trials;
  return e;
}

}  // namespace

json certificate_to_json(const CertificateReport& rep) {
  json j;
  j["potential"] = cert_status_name(rep.potential);
  j["bound"] = cert_status_name(rep.bound);
  j["span"] = cert_status_name(rep.span);
  j["bound_ratio_max"] = rep.bound_ratio_max;
  j["notes"] = rep.notes;
  json steps = json::array();
  for (const StepCertificate& st : rep.steps) {
    json s;
    s["k"] = st.k;
    s["grad_norm_sq"] = st.grad_norm_sq;
    s["bound"] = st.bound ? json(*st.bound) : json(nullptr);
    s["potential"] = st.potential ? json(*st.potential) : json(nullptr);
    s["bound_ok"] = st.bound_ok;
    s["potential_link_ok"] = st.potential_link_ok;
    s["potential_chain_ok"] = st.potential_chain_ok;
    s["local_ok"] = st.local_ok;
    steps.push_back(s);
  }
  j["steps"] = steps;
  return j;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  ExperimentSummary sum;
  sum.config = config;
  sum.problem = problem_from_config(config);
  sum.start = default_start(sum.problem, config);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec)
    throw std::runtime_error("run_experiment: cannot create output directory '" +
                             config.output_dir + "': " + ec.message());

  std::map<std::string, int> name_uses;
  json jruns = json::array();
  for (const MethodSelector& sel : config.methods) {
    const Method m = method_from_string(sel.name);
    MethodResult res;
    res.selector = sel;
    res.run = make_run(m, sel, config, sum.problem, sum.start);
    res.bounds = bound_series_for(res.run);
    res.potentials = potential_column(res.run);
    const Trace& tr = res.run.trace;
    for (std::size_t k = 1; k < res.bounds.size(); ++k) {
      if (!res.bounds[k]) continue;
      const double b = *res.bounds[k];
      if (b > 0.0)
        res.bound_ratio_max =
            std::max(res.bound_ratio_max, tr.grad_norm_sq[k] / b);
      else if (tr.grad_norm_sq[k] > 0.0)
        res.bound_ratio_max = std::numeric_limits<double>::infinity();
    }
    detect_stall(config, res);
    if (config.verify) {
      res.cert = certify_run(res.run);
      if (!res.cert->all_pass()) sum.all_certificates_pass = false;
    }
    if (m == Method::s_feg && config.trials > 1) {
      add_mc_report(res, config, sum.problem, sum.start);
      if (config.verify) {
        for (const McRow& r : res.mc)
          if (!r.pass) {
            sum.all_certificates_pass = false;
            if (!res.note.empty()) res.note += "; ";
            res.note += "monte-carlo mean exceeded its bound at k=" +
                        std::to_string(r.k);
            break;
          }
      }
    }

    std::string stem = sel.name;
    const int uses = ++name_uses[stem];
    if (uses > 1) stem += "_" + std::to_string(uses);
    const std::string base = config.output_dir + "/" + stem;
    if (config.emit_trace_csv) {
      const std::string path = base + ".trace.csv";
      emit_trace_csv(tr, res.bounds, path,
                     res.potentials ? &*res.potentials : nullptr);
      sum.written_files.push_back(path);
    }
    if (config.verify && config.emit_certificate_json && res.cert) {
      const std::string path = base + ".certificates.json";
      atomic_write_text(path, certificate_to_json(*res.cert).dump(2) + "\n");
      sum.written_files.push_back(path);
    }
    if (!res.mc.empty()) {
      const std::string path = base + ".mc.json";
      atomic_write_text(path, mc_to_json(res).dump(2) + "\n");
      sum.written_files.push_back(path);
    }
    jruns.push_back(summary_entry(res, config));
    sum.methods.push_back(std::move(res));
  }

  if (config.emit_summary_json) {
    json top;
    top["schema_version"] = 1;
    top["problem"] = config.problem;
    top["runs"] = jruns;
    top["all_certificates_pass"] = sum.all_certificates_pass;
    const std::string path = config.output_dir + "/summary.json";
    atomic_write_text(path, top.dump(2) + "\n");
    sum.written_files.push_back(path);
  }
  return sum;
}

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{
      "Anchored extragradient benchmark runner with machine-checkable "
      "certificates"};
  std::string config_path, problem, out_dir;
  std::vector<std::string> methods;
  double L = 1.0, rho = 0.0, eps = 0.0, delta = 0.1;
  int iters = 50;
  long trials = 1;
  std::uint64_t seed = 0;
  bool verify = false;

  app.add_option("--config", config_path, "JSON experiment config file");
  app.add_option("--problem", problem,
                 "problem label: bilinear, worst-case, random-nc, "
                 "quadratic:<file>");
  auto* omethod = app.add_option(
      "--method", methods,
      "method to run (repeatable): feg, feg-a, s-feg, eg, eg+, eag-c, eag-v");
  auto* oL = app.add_option("--L", L, "smoothness scale for built-in problems");
  auto* orho =
      app.add_option("--rho", rho, "comonotonicity level passed to feg");
  auto* oiters = app.add_option("--iters", iters, "iteration count K");
  auto* odelta = app.add_option("--delta", delta, "feg-a shrink factor");
  auto* oeps = app.add_option(
      "--eps", eps,
      "s-feg target accuracy (enables the decaying variance schedule)");
  auto* otrials =
      app.add_option("--trials", trials, "Monte Carlo trials for s-feg");
  auto* oseed = app.add_option("--seed", seed, "noise / start seed");
  app.add_option("--out", out_dir, "output directory for artifacts");
  app.add_flag("--verify", verify,
               "run the certificate suite; exit 2 if any certificate fails");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("fegbench");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!problem.empty()) cfg.problem = problem;
    if (omethod->count() > 0) {
      cfg.methods.clear();
      for (const std::string& name : methods) {
        MethodSelector s;
        s.name = name;
        cfg.methods.push_back(std::move(s));
      }
    }
    if (oL->count() > 0) cfg.L = L;
    if (orho->count() > 0) cfg.rho = rho;
    if (oiters->count() > 0) cfg.iters = iters;
    if (odelta->count() > 0)
      for (MethodSelector& s : cfg.methods)
        if (s.name == "feg-a" && !s.delta) s.delta = delta;
    if (oeps->count() > 0) cfg.eps = eps;
    if (otrials->count() > 0) cfg.trials = trials;
    if (oseed->count() > 0) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (verify) cfg.verify = true;

    const ExperimentSummary sum = run_experiment(cfg);
    for (const MethodResult& r : sum.methods) {
      const Trace& tr = r.run.trace;
      std::cout << r.selector.name << ": K="
                << (tr.iterates.size() - 1)
                << " final_grad_norm_sq=" << format_g17(tr.grad_norm_sq.back())
                << " oracle_calls=" << tr.oracle_calls;
      if (r.bound_ratio_max > 0.0)
        std::cout << " bound_ratio_max=" << format_g17(r.bound_ratio_max);
      if (r.cert)
        std::cout << " certificates: potential=" <<
            cert_status_name(r.cert->potential)
                  << " bound=" << cert_status_name(r.cert->bound)
                  << " span=" << cert_status_name(r.cert->span);
      if (!r.note.empty()) std::cout << " [" << r.note << "]";
      std::cout << "\n";
    }
    if (cfg.verify && !sum.all_certificates_pass) {
      std::cerr << "certificate failure: see "
                << cfg.output_dir << "/summary.json\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace feg
