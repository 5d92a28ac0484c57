#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kmsf/montecarlo.hpp"
#include "kmsf/reuse.hpp"
#include "kmsf/sir_analysis.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt12(double v) {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Object view that records which keys were read and rejects the rest.
class Node {
 public:
  Node(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_ + ": expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!allowed.count(it.key())) throw SchemaError(key(it.key()) + ": unknown key");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }

  double number(const std::string& k, std::optional<double> def = std::nullopt) const {
    if (!has(k)) {
      if (def) return *def;
      throw SchemaError(key(k) + ": required");
    }
    const json& v = j_.at(k);
    if (!v.is_number()) throw SchemaError(key(k) + ": expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(key(k) + ": must be finite");
    return d;
  }
  double positive(const std::string& k, std::optional<double> def = std::nullopt) const {
    double d = number(k, def);
    if (!(d > 0.0)) throw SchemaError(key(k) + ": must be > 0");
    return d;
  }
  double nonnegative(const std::string& k, std::optional<double> def = std::nullopt) const {
    double d = number(k, def);
    if (!(d >= 0.0)) throw SchemaError(key(k) + ": must be >= 0");
    return d;
  }
  std::int64_t integer(const std::string& k, std::int64_t lo, std::optional<std::int64_t> def = std::nullopt) const {
    if (!has(k)) {
      if (def) return *def;
      throw SchemaError(key(k) + ": required");
    }
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw SchemaError(key(k) + ": expected an integer");
    auto i = v.get<std::int64_t>();
    if (i < lo) throw SchemaError(key(k) + ": must be >= " + std::to_string(lo));
    return i;
  }
  std::string text(const std::string& k, const std::set<std::string>& choices, std::optional<std::string> def) const {
    if (!has(k)) {
      if (def) return *def;
      throw SchemaError(key(k) + ": required");
    }
    const json& v = j_.at(k);
    if (!v.is_string() || !choices.count(v.get<std::string>())) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      throw SchemaError(key(k) + ": expected one of " + list);
    }
    return v.get<std::string>();
  }

 private:
  const json& j_;
  std::string path_;
};

struct SeriesOptions {
  std::optional<std::int64_t> P = 50;
  double epsilon = 1e-6;
  std::string method = "auto";
};

struct McOptions {
  bool present = false;
  kmsf::McConfig mc;
};

struct ReuseOptions {
  bool present = false;
  std::string scheme = "both";
  double S_t = 2.0;
  double beta = 2.0;
};

struct SweepOptions {
  bool present = false;
  std::string variable;
  double from = 0.0, to = 0.0;
  std::int64_t points = 1;
};

struct Run {
  std::string command;
  std::string metric = "outage";
  kmsf::CellScenario scenario;
  double r = 0.0;
  double T = 1.0;
  int radial_points = 20;
  SeriesOptions series;
  McOptions mc;
  ReuseOptions reuse;
  SweepOptions sweep;
};

kmsf::FadingProfile parse_soi(const json& j) {
  Node n(j, "soi", {"kappa", "mu", "m", "mean"});
  double kappa = n.nonnegative("kappa");
  double mu = n.positive("mu");
  double mean = n.positive("mean", 1.0);
  if (n.has("m") && n.raw("m").is_string()) {
    if (n.raw("m").get<std::string>() != "inf") throw SchemaError("soi.m: expected a number or \"inf\"");
    return kmsf::make_kappa_mu_profile(kappa, mu, mean);
  }
  return kmsf::make_profile(kappa, mu, n.positive("m"), mean);
}

kmsf::FadingProfile parse_interferer(const json& j, const std::string& path) {
  Node n(j, path, {"kappa_i", "mu_i", "m_i", "mean_i"});
  return kmsf::make_profile(n.nonnegative("kappa_i"), n.positive("mu_i"), n.positive("m_i"), n.positive("mean_i", 1.0));
}

const std::set<std::string> kSweepVariables = {"T_dB",      "r_m",      "alpha",     "azimuth_rad",
                                               "soi.kappa", "soi.mu",   "soi.m",     "soi.mean",
                                               "interferers.kappa_i", "interferers.mu_i", "interferers.m_i"};

Run parse_run(const json& j) {
  Node root(j, "", {"command", "metric", "geometry", "soi", "interferers", "T_dB", "series", "mc", "reuse", "sweep"});
  Run run;
  run.command = root.text("command", {"outage", "rate", "typical", "mc-validate", "reuse", "sweep"}, std::nullopt);
  run.metric = root.text("metric", {"outage", "rate"}, "outage");

  if (!root.has("geometry")) throw SchemaError("geometry: required");
  Node g(root.raw("geometry"), "geometry", {"R_m", "tiers", "r_m", "azimuth_rad", "alpha", "radial_points"});
  const double R = g.positive("R_m");
  const auto tiers = g.integer("tiers", 1, 2);
  run.r = g.positive("r_m", R);
  if (run.r > R) throw SchemaError("geometry.r_m: must be <= R_m");
  run.scenario.azimuth = g.number("azimuth_rad", 0.0);
  run.scenario.alpha = g.number("alpha");
  if (!(run.scenario.alpha >= 2.0)) throw SchemaError("geometry.alpha: must be >= 2");
  run.radial_points = static_cast<int>(g.integer("radial_points", 2, 20));
  run.scenario.layout = kmsf::build_hex_layout(R, static_cast<int>(tiers));

  if (!root.has("soi")) throw SchemaError("soi: required");
  run.scenario.soi = parse_soi(root.raw("soi"));

  if (!root.has("interferers")) throw SchemaError("interferers: required");
  const json& ij = root.raw("interferers");
  const auto& L = run.scenario.layout;
  if (ij.is_array()) {
    if (static_cast<std::int64_t>(ij.size()) != tiers)
      throw SchemaError("interferers: expected one block per tier (" + std::to_string(tiers) + ")");
    std::vector<kmsf::FadingProfile> per_tier;
    for (std::size_t t = 0; t < ij.size(); ++t)
      per_tier.push_back(parse_interferer(ij[t], "interferers[" + std::to_string(t) + "]"));
    for (std::size_t i = 1; i < L.bs_positions.size(); ++i) run.scenario.interferers.push_back(per_tier[L.ring[i] - 1]);
  } else {
    auto f = parse_interferer(ij, "interferers");
    run.scenario.interferers.assign(L.interferer_count(), f);
  }

  run.T = db_to_linear(root.number("T_dB", 0.0));

  if (root.has("series")) {
    Node s(root.raw("series"), "series", {"P", "epsilon", "method"});
    if (s.has("P") && s.raw("P").is_string()) {
      if (s.raw("P").get<std::string>() != "auto") throw SchemaError("series.P: expected an integer or \"auto\"");
      run.series.P.reset();
    } else {
      run.series.P = s.integer("P", 0, 50);
    }
    run.series.epsilon = s.positive("epsilon", 1e-6);
    run.series.method = s.text("method", {"auto", "series", "ed", "cf"}, "auto");
  }

  if (root.has("mc")) {
    Node m(root.raw("mc"), "mc", {"seed", "batches", "batch_size", "confidence"});
    run.mc.present = true;
    if (m.has("seed") && !m.raw("seed").is_number_unsigned()) throw SchemaError("mc.seed: expected an unsigned integer");
    run.mc.mc.seed = m.has("seed") ? m.raw("seed").get<std::uint64_t>() : 1;
    run.mc.mc.iterations = m.integer("batches", 2, 10000);
    run.mc.mc.batch_size = m.integer("batch_size", 1, 100);
    double c = m.number("confidence", 0.95);
    if (c != 0.95 && c != 0.99) throw SchemaError("mc.confidence: must be 0.95 or 0.99");
    run.mc.mc.confidence = c;
  }

  if (root.has("reuse")) {
    Node r(root.raw("reuse"), "reuse", {"scheme", "S_t_dB", "beta"});
    run.reuse.present = true;
    run.reuse.scheme = r.text("scheme", {"ffr", "sfr", "both"}, "both");
    run.reuse.S_t = db_to_linear(r.number("S_t_dB", 3.0));
    run.reuse.beta = r.number("beta", 2.0);
    if (!(run.reuse.beta >= 1.0)) throw SchemaError("reuse.beta: must be >= 1");
  }

  if (root.has("sweep")) {
    Node s(root.raw("sweep"), "sweep", {"variable", "from", "to", "points"});
    run.sweep.present = true;
    run.sweep.variable = s.text("variable", kSweepVariables, std::nullopt);
    run.sweep.from = s.number("from");
    run.sweep.to = s.number("to");
    run.sweep.points = s.integer("points", 1);
  }

  const bool needs_rate = run.command == "rate" || run.command == "reuse" ||
                          ((run.command == "typical" || run.command == "sweep") && run.metric == "rate");
  if (needs_rate && run.scenario.soi.mu != std::round(run.scenario.soi.mu))
    throw SchemaError("soi.mu: must be an integer for rate computations");
  if (run.command == "mc-validate" && !run.mc.present) throw SchemaError("mc: required for mc-validate");
  if (run.command == "sweep" && !run.sweep.present) throw SchemaError("sweep: required for the sweep command");
  return run;
}

// Writes value v into a copy of the config at the sweep variable's location.
json with_value(json j, const std::string& variable, double v) {
  if (variable == "T_dB") {
    j["T_dB"] = v;
  } else if (variable == "r_m" || variable == "alpha" || variable == "azimuth_rad") {
    j["geometry"][variable] = v;
  } else if (variable.rfind("soi.", 0) == 0) {
    j["soi"][variable.substr(4)] = v;
  } else {
    const std::string k = variable.substr(std::string("interferers.").size());
    if (j["interferers"].is_array())
      for (auto& b : j["interferers"]) b[k] = v;
    else
      j["interferers"][k] = v;
  }
  return j;
}

std::vector<double> sweep_values(const SweepOptions& s) {
  std::vector<double> v;
  if (s.points == 1) return {s.from};
  for (std::int64_t i = 0; i < s.points; ++i) v.push_back(s.from + (s.to - s.from) * i / (s.points - 1));
  return v;
}

kmsf::SirProblem point_problem(const Run& run) { return kmsf::problem_at(run.scenario, run.r, run.T); }

struct AnalyticValue {
  double value = NAN;
  double bound = NAN;
};

AnalyticValue analytic_outage(const Run& run) {
  auto pr = point_problem(run);
  kmsf::SeriesConfig cfg;
  const auto& s = run.series;
  kmsf::OutageResult r;
  if (s.method == "ed") {
    r = kmsf::outage_ed(pr, cfg);
    return {r.value, NAN};
  }
  if (s.method == "cf") return {kmsf::outage_cf_inversion(pr).value, NAN};
  if (s.method == "series") {
    r = pr.soi.kappa_mu_limit() ? kmsf::outage_soi_kappa_mu(pr, cfg, s.P) : kmsf::outage_series(pr, s.P, cfg, s.epsilon);
    return {r.value, r.error_bound};
  }
  if (s.P)
    r = kmsf::outage_auto(pr, cfg, s.P);
  else
    r = kmsf::outage_auto(pr, cfg, kmsf::auto_terms(pr, s.epsilon, cfg));
  if (r.method == kmsf::OutageMethod::cf_inversion) return {r.value, NAN};
  return {r.value, r.error_bound};
}

AnalyticValue analytic_rate(const Run& run) {
  auto pr = point_problem(run);
  kmsf::SeriesConfig cfg;
  auto P = run.series.P ? *run.series.P : kmsf::mixture_terms(pr.soi, run.series.epsilon, cfg);
  if (pr.soi.kappa_mu_limit()) return {kmsf::rate_kappa_mu(pr, P, cfg), NAN};
  return {kmsf::rate_shadowed(pr, P, cfg), NAN};
}

AnalyticValue analytic_typical(const Run& run) {
  auto grid = kmsf::uniform_radial_grid(run.scenario.layout.R, run.radial_points);
  auto metric = run.metric == "rate" ? kmsf::Metric::rate : kmsf::Metric::outage;
  return {kmsf::typical_user(metric, run.scenario, run.T, grid, {}, run.series.P), NAN};
}

AnalyticValue analytic_metric(const Run& run, const std::string& metric) {
  return metric == "rate" ? analytic_rate(run) : analytic_outage(run);
}

struct Row {
  double x = NAN;
  AnalyticValue a;
  std::optional<kmsf::McEstimate> mc;
  double ffr = NAN, sfr = NAN;
};

void write_csv(const fs::path& path, const std::vector<Row>& rows, bool reuse_table, const std::string& x_name,
               bool with_mc) {
  std::ofstream os(path);
  if (reuse_table) {
    os << x_name << ",ffr_rate,sfr_rate\n";
    for (const auto& r : rows) os << fmt12(r.x) << "," << fmt12(r.ffr) << "," << fmt12(r.sfr) << "\n";
    return;
  }
  os << "swept_value,analytic_value,error_bound";
  if (with_mc) os << ",mc_mean,mc_ci_lo,mc_ci_hi";
  os << "\n";
  for (const auto& r : rows) {
    os << fmt12(r.x) << "," << fmt12(r.a.value) << "," << fmt12(r.a.bound);
    if (with_mc) {
      if (r.mc)
        os << "," << fmt12(r.mc->mean) << "," << fmt12(r.mc->ci_lo) << "," << fmt12(r.mc->ci_hi);
      else
        os << ",,,";
    }
    os << "\n";
  }
}

// Runs f(i) for i in [0, n) on up to `threads` workers; f writes into its own slot.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F f) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(m);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::string sweep_column_name(const std::string& variable) {
  auto dot = variable.rfind('.');
  return dot == std::string::npos ? variable : variable.substr(dot + 1);
}

int execute(const json& config, const fs::path& out_dir, unsigned threads) {
  const Run base = parse_run(config);
  std::vector<double> xs;
  std::vector<Run> runs;
  std::string x_name = "T_dB";
  if (base.sweep.present) {
    x_name = sweep_column_name(base.sweep.variable);
    for (double v : sweep_values(base.sweep)) {
      xs.push_back(v);
      runs.push_back(parse_run(with_value(config, base.sweep.variable, v)));
    }
  } else {
    xs.push_back(config.contains("T_dB") ? config["T_dB"].get<double>() : 0.0);
    runs.push_back(base);
  }

  std::vector<Row> rows(runs.size());
  const bool reuse_table = base.command == "reuse";
  const bool with_mc = base.mc.present && base.command != "reuse";
  // MC batches parallelize internally; sweep points share the pool otherwise.
  const unsigned point_threads = with_mc ? 1u : threads;
  std::optional<kmsf::McEstimate> single_mc;

  parallel_for(runs.size(), point_threads, [&](std::size_t i) {
    const Run& run = runs[i];
    Row& row = rows[i];
    row.x = xs[i];
    if (reuse_table) {
      auto grid = kmsf::uniform_radial_grid(run.scenario.layout.R, run.radial_points);
      const double St = run.reuse.present ? run.reuse.S_t : run.T;
      const double beta = run.reuse.present ? run.reuse.beta : 2.0;
      const std::string scheme = run.reuse.present ? run.reuse.scheme : "both";
      if (scheme != "sfr") row.ffr = kmsf::ffr_rate(run.scenario, St, grid, run.series.P);
      if (scheme != "ffr") row.sfr = kmsf::sfr_rate(run.scenario, St, beta, grid, run.series.P);
      return;
    }
    std::string metric = run.command == "rate" ? "rate" : run.metric;
    if (run.command == "typical")
      row.a = analytic_typical(run);
    else if (run.command == "outage" || run.command == "mc-validate")
      row.a = analytic_outage(run);
    else
      row.a = analytic_metric(run, metric);
    if (with_mc && run.command != "typical") {
      kmsf::McConfig mc = run.mc.mc;
      mc.threads = threads;
      auto pr = point_problem(run);
      row.mc = metric == "rate" ? kmsf::simulate_rate(pr, mc) : kmsf::simulate_outage(pr, mc);
    }
  });

  fs::create_directories(out_dir);
  write_csv(out_dir / "results.csv", rows, reuse_table, reuse_table ? x_name : "", with_mc);
  if (with_mc && rows.size() == 1 && rows[0].mc) {
    std::ofstream os(out_dir / "mc_batches.csv");
    kmsf::write_batch_csv(*rows[0].mc, os);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kappa-mu shadowed SIR analysis"};
  std::string config_path, out_dir = "out";
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--seed", seed, "Monte Carlo seed (overrides mc.seed)");
  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  json config;
  {
    std::ifstream is(config_path);
    if (!is) {
      std::cerr << "error: cannot read " << config_path << "\n";
      return 1;
    }
    try {
      config = json::parse(is);
    } catch (const json::parse_error& e) {
      std::cerr << "schema error: config is not valid JSON: " << e.what() << "\n";
      return 2;
    }
  }
  if (seed && config.is_object()) config["mc"]["seed"] = *seed;

  int code = 0;
  try {
    code = execute(config, out_dir, threads);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const kmsf::InvalidParameter& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const kmsf::NonConvergence& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const kmsf::DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const kmsf::QuadratureFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = {{"config", config},
                   {"version", kVersion},
                   {"compiler", __VERSION__},
                   {"threads", threads},
                   {"wall_time_s", wall},
                   {"outputs", json::array({"results.csv"})}};
  if (fs::exists(fs::path(out_dir) / "mc_batches.csv")) manifest["outputs"].push_back("mc_batches.csv");
  std::ofstream(fs::path(out_dir) / "manifest.json") << manifest.dump(2) << "\n";
  return code;
}
