#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mcdiag/io/chain_file.hpp"
#include "mcdiag/io/plot.hpp"
#include "mcdiag/io/report.hpp"
#include "mcdiag/mcdiag.hpp"

namespace fs = std::filesystem;
using namespace mcdiag;
using io::DiagnosticRecord;
using io::DiagnosticReport;
using io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNonconverged = 2;

struct Options {
  // common
  std::vector<std::string> chain_files;
  std::size_t burnin = 0;
  std::string coords;
  std::uint64_t seed = 1;
  std::string out = ".";
  bool fail_on_nonconverged = false;

  // diagnostics
  std::string diag = "psrf";
  double alpha = 0.05;
  double epsilon = 0.01;
  std::optional<double> cutoff;
  std::optional<std::string> q;  // Raftery-Lewis default 0.025; also fans out geweke/heidel when set
  std::string rule = "fwsr";
  std::size_t min_n = 10000;
  std::optional<std::size_t> check_interval;
  double rl_epsilon = 0.005;
  double rl_s = 0.95;
  double rhat_cutoff = 1.1;
  std::size_t mc_samples = 10000;
  std::size_t grid = 400;
  std::string target;
  std::string critical = "normal";
  bool no_inverse_n = false;
  bool halt_on_stop = false;
  std::size_t threads = 0;

  // simulate
  std::string example;
  std::size_t n_chains = 1;
  std::size_t n = 1000;
  double theta = 0.5;
  double x0 = 0.1;
  std::string init_mode = "same";
  std::size_t n_obs = 200;
  std::string beta = "-0.5,1,-0.75";
  double target_acceptance = 0.4;

  // plot
  std::string kind = "trace";
  std::size_t max_lag = 50;
  std::size_t step = 100;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw DiagnosticError("not a number: '" + s + "'");
  return v;
}

/// "1,3,5-7" -> 0-based {0,2,4,5,6}; empty text means every coordinate.
std::vector<std::size_t> parse_coords(const std::string& text, std::size_t p) {
  std::vector<std::size_t> out;
  if (text.empty()) {
    for (std::size_t j = 0; j < p; ++j) out.push_back(j);
    return out;
  }
  for (const auto& item : split_list(text)) {
    const auto dash = item.find('-');
    const std::size_t lo = std::stoul(item.substr(0, dash));
    const std::size_t hi = dash == std::string::npos ? lo : std::stoul(item.substr(dash + 1));
    if (lo < 1 || hi < lo || hi > p)
      throw DiagnosticError("coordinate list '" + text + "' out of range for p=" + std::to_string(p));
    for (std::size_t j = lo; j <= hi; ++j) out.push_back(j - 1);
  }
  return out;
}

/// "0.1..0.9" (step 0.1), "0.1..0.9:0.2", or "0.025,0.5".
std::vector<double> parse_q_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_double(item));
      continue;
    }
    const double lo = to_double(item.substr(0, dots));
    std::string rest = item.substr(dots + 2);
    double step = 0.1;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      step = to_double(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    const double hi = to_double(rest);
    if (!(step > 0.0) || hi < lo) throw DiagnosticError("bad q range '" + item + "'");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) out.push_back(std::round((lo + step * k) * 1e12) / 1e12);
  }
  for (double q : out)
    if (!(q > 0.0 && q < 1.0)) throw DiagnosticError("q must lie in (0,1)");
  return out;
}

Vector parse_vector(const std::string& text) {
  const auto items = split_list(text);
  Vector v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(items[i]);
  return v;
}

Json vector_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

/// Chains after burn-in removal and coordinate selection, plus input metadata.
struct LoadedChains {
  ChainSet chains;
  std::vector<io::InputFile> inputs;
  std::vector<std::size_t> coords;  // 0-based, relative to the files
};

LoadedChains load_inputs(const Options& opt) {
  if (opt.chain_files.empty()) throw DiagnosticError("no chain files given (--chains)");
  std::vector<Chain> chains;
  std::vector<io::InputFile> inputs;
  for (const auto& f : opt.chain_files) {
    auto c = io::load_chain_file(f);
    inputs.push_back({f, io::file_digest(f), c.size(), c.dim()});
    chains.push_back(opt.burnin ? c.drop_burnin(opt.burnin) : std::move(c));
  }
  ChainSet set(std::move(chains));
  const auto coords = parse_coords(opt.coords, set.dim());
  return {set.select(coords), std::move(inputs), coords};
}

std::optional<TargetModel> builtin_target(const std::string& name) {
  if (name == "sixmodal") return sixmodal_target();
  if (name == "exp1") {
    // Exp(1) on a box wide enough to hold essentially all of its mass
    TargetModel t;
    t.name = "exp1";
    t.dim = 1;
    t.log_f = [](const Vector& v) { return -v(0); };
    t.lower = Vector::Zero(1);
    t.upper = Vector::Constant(1, 50.0);
    return t;
  }
  return std::nullopt;
}

DiagnosticRecord timed(DiagnosticRecord rec, const std::function<void(DiagnosticRecord&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(rec);
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.converged.reset();
    rec.statistics = Json::object();
  }
  rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// Runs work(0..count-1) on a small thread pool; results keep the index order.
std::vector<DiagnosticRecord> run_parallel(std::size_t count, const std::function<DiagnosticRecord(std::size_t)>& work,
                                           std::size_t threads) {
  std::vector<DiagnosticRecord> out(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) out[i] = work(i);
  };
  if (threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

DiagnosticRecord base_record(const std::string& diag, const std::string& target,
                             std::optional<std::size_t> coord = std::nullopt) {
  DiagnosticRecord r;
  r.diagnostic = diag;
  r.target = target;
  r.coord = coord;
  return r;
}

StoppingConfig stopping_config(const Options& opt) {
  StoppingConfig cfg;
  cfg.epsilon = opt.epsilon;
  cfg.alpha = opt.alpha;
  cfg.min_n = opt.min_n;
  cfg.check_interval = opt.check_interval;
  const auto rule = parse_stopping_rule(opt.rule);
  if (!rule) throw DiagnosticError("unknown stopping rule '" + opt.rule + "'");
  cfg.rule = *rule;
  if (opt.critical == "t") cfg.critical = Critical::StudentT;
  else if (opt.critical != "normal") throw DiagnosticError("critical must be 'normal' or 't'");
  cfg.add_inverse_n = !opt.no_inverse_n;
  cfg.validate();
  return cfg;
}

Json verdict_json(const StoppingVerdict& v) {
  Json j;
  j["n"] = v.n;
  j["stop"] = v.stop;
  j["statistic"] = v.statistic;
  j["threshold"] = v.threshold;
  if (v.half_width) j["half_width"] = *v.half_width;
  if (v.ess) j["ess"] = *v.ess;
  if (v.degenerate) j["degenerate"] = true;
  return j;
}

/// One requested diagnostic on one chain (or all chains), coordinate and quantile.
struct TaskSpec {
  std::string diag;
  std::optional<std::size_t> chain;  // empty: multi-chain diagnostic
  std::optional<std::size_t> coord;  // 0-based within the selection; empty: joint
  std::optional<double> q;  // geweke/heidel: run on the indicator of x <= quantile q
};

const std::vector<std::string> kPerChainCoord = {"geweke", "heidel", "raftery", "ess", "hw"};

/// Expands the --diag list over chains, coordinates and q values.
std::vector<TaskSpec> plan_diagnostics(const Options& opt, const LoadedChains& in) {
  const std::size_t m = in.chains.count(), p = in.chains.dim();
  std::vector<TaskSpec> plan;
  for (const auto& diag : split_list(opt.diag)) {
    if (diag == "psrf" || diag == "tool1-marginal") {
      for (std::size_t j = 0; j < p; ++j) plan.push_back({diag, std::nullopt, j});
    } else if (diag == "mpsrf" || diag == "tool1") {
      plan.push_back({diag});
    } else if (diag == "tool2" || diag == "mess") {
      for (std::size_t c = 0; c < m; ++c) plan.push_back({diag, c});
    } else if (std::find(kPerChainCoord.begin(), kPerChainCoord.end(), diag) != kPerChainCoord.end()) {
      std::vector<std::optional<double>> qs{std::nullopt};
      if (diag == "raftery" || ((diag == "geweke" || diag == "heidel") && opt.q)) {
        qs.clear();
        for (double q : parse_q_list(opt.q.value_or("0.025"))) qs.push_back(q);
      }
      for (std::size_t c = 0; c < m; ++c)
        for (std::size_t j = 0; j < p; ++j)
          for (const auto& q : qs) plan.push_back({diag, c, j, q});
    } else {
      plan.push_back({diag});  // reported as an unknown-diagnostic error
    }
  }
  return plan;
}

DiagnosticRecord execute(const TaskSpec& t, const Options& opt, const LoadedChains& in) {
  const auto& chains = in.chains;
  const std::size_t p = chains.dim();
  const std::string target = t.chain ? chains[*t.chain].id() : "all";
  std::optional<std::size_t> file_coord;
  if (t.coord) file_coord = in.coords[*t.coord] + 1;

  return timed(base_record(t.diag, target, file_coord), [&](DiagnosticRecord& r) {
    const auto& d = t.diag;
    if (d == "psrf") {
      r.inputs["cutoff"] = opt.rhat_cutoff;
      const auto res = psrf(chains, *t.coord);
      r.statistics = {{"r_hat", res.r_hat}, {"W", res.within}, {"B_over_n", res.between_n},
                      {"V_hat", res.pooled}, {"m", res.m}, {"n", res.n}};
      r.converged = res.r_hat < opt.rhat_cutoff;
    } else if (d == "mpsrf") {
      r.inputs["cutoff"] = opt.rhat_cutoff;
      const auto res = mpsrf(chains);
      r.statistics = {{"r_hat_p", res.r_hat}, {"lambda1", res.lambda1}, {"m", res.m}, {"n", res.n}};
      r.converged = res.r_hat < opt.rhat_cutoff;
    } else if (d == "tool1") {
      if (p > 2) throw DiagnosticError("joint tool1 supports p <= 2; use tool1-marginal");
      const double cut = opt.cutoff.value_or(p == 2 ? kTool1BivariateCutoff : kTool1MarginalCutoff);
      r.inputs = {{"cutoff", cut}, {"mc_samples", opt.mc_samples}, {"seed", opt.seed}};
      const auto res = tool1(chains, opt.mc_samples, cut, opt.seed);
      Json kl = Json::array();
      for (Eigen::Index i = 0; i < res.kl.values.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < res.kl.values.cols(); ++k) row.push_back(res.kl.values(i, k));
        kl.push_back(row);
      }
      Json clusters = Json::array();
      for (const auto& c : tile_clusters(res.kl, cut).clusters) {
        Json g = Json::array();
        for (auto i : c) g.push_back(i + 1);
        clusters.push_back(g);
      }
      r.statistics = {{"max_symmetric_kl", res.max}, {"kl", kl}, {"clusters", clusters},
                      {"clamped", res.kl.clamped}};
      r.converged = res.pass;
    } else if (d == "tool1-marginal") {
      const double cut = opt.cutoff.value_or(kTool1MarginalCutoff);
      r.inputs = {{"cutoff", cut}, {"mc_samples", opt.mc_samples}, {"seed", opt.seed}};
      const auto res = tool1(chains.select({*t.coord}), opt.mc_samples, cut, derive_seed(opt.seed, 1000 + *t.coord));
      r.statistics = {{"max_symmetric_kl", res.max}, {"clamped", res.kl.clamped}};
      r.converged = res.pass;
    } else if (d == "tool2") {
      if (p > 2) throw DiagnosticError("tool2 supports chains of dimension <= 2, got p=" + std::to_string(p));
      if (opt.target.empty()) throw DiagnosticError("tool2 needs --target (sixmodal or exp1)");
      const auto model = builtin_target(opt.target);
      if (!model) throw DiagnosticError("unknown target '" + opt.target + "'");
      r.inputs = {{"target", opt.target}, {"grid", opt.grid}, {"mc_samples", opt.mc_samples}, {"seed", opt.seed}};
      const auto res = tool2(chains[*t.chain], *model, opt.grid, opt.mc_samples, derive_seed(opt.seed, *t.chain));
      r.statistics = {{"c_hat", res.c_hat}, {"c_star", res.c_star}, {"t2_star", res.t2_star},
                      {"clamped", res.clamped}, {"outside_support", res.outside_support}};
      r.converged = res.captured;
    } else if (d == "mess") {
      const auto& chain = chains[*t.chain];
      r.inputs = {{"alpha", opt.alpha}, {"epsilon", opt.epsilon}};
      const auto cov = multivariate_batch_means(chain);
      const double value = mess(chain, cov);
      const double threshold = mess_threshold(p, opt.alpha, opt.epsilon);
      r.statistics = {{"mess", value}, {"threshold", threshold}, {"batch_size", cov.batch_size}};
      r.converged = value >= threshold;
    } else if (t.chain && t.coord) {
      auto series = apply_function(chains[*t.chain], FunctionSpec::coordinate(*t.coord + 1));
      if (t.q && d != "raftery") {
        const double u = quantile(series, *t.q);
        series = apply_function(chains[*t.chain], FunctionSpec::indicator(u, *t.coord + 1));
        r.inputs["q"] = *t.q;
        r.inputs["threshold"] = u;
      }
      if (d == "geweke") {
        r.inputs.update({{"frac_a", 0.1}, {"frac_b", 0.5}, {"alpha", opt.alpha}});
        const auto g = geweke(series);
        r.statistics = {{"z", g.z}, {"mean_a", g.mean_a}, {"mean_b", g.mean_b}, {"n_a", g.n_a}, {"n_b", g.n_b}};
        r.converged = std::abs(g.z) < dist::z_critical(opt.alpha);
      } else if (d == "heidel") {
        r.inputs["level"] = opt.alpha;
        const auto h = heidelberger_welch(series, opt.alpha);
        r.statistics = {{"discard_fraction", h.discard_fraction}, {"cvm", h.cvm_statistic},
                        {"p_value", h.p_value}, {"start", h.start}};
        r.converged = h.pass;
      } else if (d == "ess") {
        const auto var = batch_means_var(series);
        r.statistics = {{"ess", ess(series, var)}, {"sigma2", var.sigma2}, {"lambda2", var.lambda2},
                        {"batch_size", var.window}};
      } else if (d == "hw") {
        r.inputs = {{"alpha", opt.alpha}, {"epsilon", opt.epsilon}};
        const auto var = batch_means_var(series);
        const auto ci = confidence_interval(series, var, opt.alpha);
        r.statistics = {{"mean", ci.center}, {"half_width", ci.half_width}};
        r.converged = ci.half_width <= opt.epsilon;
      } else {
        r.inputs = {{"q", *t.q}, {"epsilon", opt.rl_epsilon}, {"s", opt.rl_s}};
        const auto rl = raftery_lewis(series, *t.q, opt.rl_epsilon, opt.rl_s);
        r.statistics = {{"k", rl.k}, {"burn_in", rl.burn_in}, {"run_length", rl.run_length},
                        {"n_min", rl.n_min}, {"dependence_factor", rl.dependence_factor},
                        {"alpha01", rl.alpha01}, {"beta10", rl.beta10}, {"k_capped", rl.k_capped}};
        r.converged = series.size() >= rl.burn_in + rl.run_length;
      }
    } else {
      throw DiagnosticError("unknown diagnostic '" + d + "'");
    }
  });
}

std::vector<DiagnosticRecord> run_diagnostics(const Options& opt, const LoadedChains& in) {
  const auto plan = plan_diagnostics(opt, in);
  return run_parallel(plan.size(), [&](std::size_t i) { return execute(plan[i], opt, in); }, opt.threads);
}

int finish(const DiagnosticReport& report, const Options& opt, const std::string& stem) {
  io::write_report(opt.out, stem, report);
  std::cout << report.to_text();
  if (report.any_error()) return kExitError;
  if (opt.fail_on_nonconverged && report.any_nonconverged()) return kExitNonconverged;
  return kExitOk;
}

Json common_settings(const Options& opt, const LoadedChains& in) {
  Json coords = Json::array();
  for (auto j : in.coords) coords.push_back(j + 1);
  return {{"burnin", opt.burnin}, {"coords", coords}, {"seed", opt.seed}, {"alpha", opt.alpha},
          {"epsilon", opt.epsilon}};
}

int cmd_diagnose(const Options& opt) {
  const auto in = load_inputs(opt);
  DiagnosticReport report;
  report.command = "diagnose";
  report.inputs = in.inputs;
  report.settings = common_settings(opt, in);
  report.settings["diag"] = opt.diag;
  report.records = run_diagnostics(opt, in);
  return finish(report, opt, "diagnose");
}

int cmd_stop_check(const Options& opt) {
  const auto in = load_inputs(opt);
  const auto cfg = stopping_config(opt);
  DiagnosticReport report;
  report.command = "stop-check";
  report.inputs = in.inputs;
  report.settings = common_settings(opt, in);
  report.settings.update({{"rule", to_string(cfg.rule)}, {"min_n", cfg.min_n}, {"add_inverse_n", cfg.add_inverse_n}});
  auto work = [&](std::size_t c) {
    return timed(base_record("stop-check", in.chains[c].id()), [&](DiagnosticRecord& r) {
      const auto& chain = in.chains[c];
      r.inputs = {{"rule", to_string(cfg.rule)}, {"epsilon", cfg.epsilon}, {"alpha", cfg.alpha},
                  {"min_n", cfg.min_n}, {"check_interval", cfg.interval_for(chain.size())}};
      const auto run = run_stopping_rule(chain, cfg, opt.halt_on_stop);
      Json traj = Json::array();
      for (const auto& cp : run.trajectory) {
        Json point = {{"n", cp.n}, {"stop", cp.stop}};
        if (!cp.error.empty()) point["error"] = cp.error;
        Json vs = Json::array();
        for (const auto& v : cp.verdicts) vs.push_back(verdict_json(v));
        point["verdicts"] = vs;
        traj.push_back(point);
      }
      if (const auto* stop = run.stopped()) {
        r.statistics["n_star"] = stop->n;
        r.statistics["n_star_with_burnin"] = stop->n + opt.burnin;
        Json means = Json::array();
        const auto prefix = chain.prefix(stop->n);
        for (Eigen::Index j = 0; j < prefix.draws().cols(); ++j) means.push_back(prefix.draws().col(j).mean());
        r.statistics["estimate"] = means;
        r.statistics["verdicts"] = traj[*run.first_stop]["verdicts"];
      } else {
        r.statistics["n_star"] = "not yet";
      }
      r.statistics["trajectory"] = traj;
      r.converged = run.stopped() != nullptr;
    });
  };
  report.records = run_parallel(in.chains.count(), work, opt.threads);
  return finish(report, opt, "stop-check");
}

int cmd_plot(const Options& opt) {
  const auto in = load_inputs(opt);
  const fs::path dir = opt.out;
  std::vector<std::string> written;
  auto emit = [&](const std::string& stem, const io::Plot& plot) {
    io::write_plot(dir, stem, plot);
    written.push_back((dir / (stem + ".svg")).string());
  };
  const auto& kind = opt.kind;
  if (kind == "trace" || kind == "acf" || kind == "running-mean") {
    for (const auto& chain : in.chains)
      for (std::size_t j = 0; j < chain.dim(); ++j) {
        const std::string stem = kind + "_" + chain.id() + "_x" + std::to_string(in.coords[j] + 1);
        if (kind == "trace") emit(stem, io::trace_plot(chain, j));
        else if (kind == "acf") emit(stem, io::acf_plot(chain, j, opt.max_lag));
        else emit(stem, io::running_mean_plot(chain, j));
      }
  } else if (kind == "rhat") {
    for (std::size_t j = 0; j < in.chains.dim(); ++j)
      emit("rhat_x" + std::to_string(in.coords[j] + 1), io::rhat_plot(in.chains, opt.step, j));
    if (in.chains.dim() > 1) emit("rhat_multivariate", io::rhat_plot(in.chains, opt.step, std::nullopt));
  } else if (kind == "tile") {
    const std::size_t p = in.chains.dim();
    if (p > 2) throw DiagnosticError("tile plot uses the joint KL, which supports p <= 2");
    const double cut = opt.cutoff.value_or(p == 2 ? kTool1BivariateCutoff : kTool1MarginalCutoff);
    const auto res = tool1(in.chains, opt.mc_samples, cut, opt.seed);
    emit("tile", io::tile_plot(res.kl, cut));
  } else {
    throw DiagnosticError("unknown plot kind '" + kind + "' (trace, acf, running-mean, rhat, tile)");
  }
  for (const auto& w : written) std::cout << w << "\n";
  return kExitOk;
}

/// Aggregate report: per-variable R-hat, half-width from the first chain, marginal Tool 1,
/// plus MPSRF and mESS per chain.
int cmd_report(const Options& opt) {
  const auto in = load_inputs(opt);
  const auto& chains = in.chains;
  const std::size_t p = chains.dim();
  DiagnosticReport report;
  report.command = "report";
  report.inputs = in.inputs;
  report.settings = common_settings(opt, in);

  Options sub = opt;
  sub.diag = chains.count() >= 2 ? "psrf,hw,tool1-marginal,mess" : "hw,mess";
  if (chains.count() >= 2 && p >= 2) sub.diag += ",mpsrf";
  report.records = run_diagnostics(sub, in);

  std::vector<io::SummaryRow> rows(p);
  for (std::size_t j = 0; j < p; ++j) rows[j].variable = "x" + std::to_string(in.coords[j] + 1);
  for (const auto& r : report.records) {
    if (r.error || !r.coord) continue;
    const auto it = std::find(in.coords.begin(), in.coords.end(), *r.coord - 1);
    auto& row = rows[static_cast<std::size_t>(it - in.coords.begin())];
    if (r.diagnostic == "psrf") row.r_hat = r.statistics["r_hat"].get<double>();
    if (r.diagnostic == "tool1-marginal") row.tool1 = r.statistics["max_symmetric_kl"].get<double>();
    if (r.diagnostic == "hw" && r.target == chains[0].id()) row.half_width = r.statistics["half_width"].get<double>();
  }
  const std::string table = io::format_summary_table(rows);
  io::write_text_file(fs::path(opt.out) / "summary.txt", table);
  io::write_text_file(fs::path(opt.out) / "summary.json", io::summary_table_json(rows).dump(2) + "\n");
  std::cout << table << "\n";
  return finish(report, opt, "report");
}

Json write_chains(const std::vector<SamplerResult>& results, const Options& opt, const std::string& prefix) {
  Json files = Json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& res = results[i];
    const auto chain = opt.burnin ? res.chain.drop_burnin(opt.burnin) : res.chain;
    const fs::path path = fs::path(opt.out) / (prefix + "_" + std::to_string(i + 1) + ".csv");
    io::save_chain_file(path, chain);
    files.push_back({{"file", path.filename().string()}, {"seed", opt.seed}, {"stream", i},
                     {"rows", chain.size()}, {"acceptance_rate", res.acceptance_rate}});
  }
  return files;
}

int cmd_simulate(const Options& opt) {
  if (opt.n_chains < 1) throw DiagnosticError("--chains must be at least 1");
  if (opt.n < 1) throw DiagnosticError("--n must be positive");
  const std::size_t total = opt.n + opt.burnin;
  Json manifest;
  manifest["tool_version"] = io::kToolVersion;
  manifest["example"] = opt.example;
  manifest["seed"] = opt.seed;
  manifest["chains"] = opt.n_chains;
  manifest["n"] = opt.n;
  manifest["burnin"] = opt.burnin;
  std::vector<SamplerResult> results;

  if (opt.example == "exp-indep") {
    for (std::size_t i = 0; i < opt.n_chains; ++i)
      results.push_back(independence_mh_exp({opt.theta, total, opt.x0, opt.seed, i}));
    manifest["theta"] = opt.theta;
    manifest["x0"] = opt.x0;
  } else if (opt.example == "sixmodal") {
    if (opt.init_mode != "same" && opt.init_mode != "distinct")
      throw DiagnosticError("--init-mode must be 'same' or 'distinct'");
    // chains 1..m/2 start at the mode near (0.5, pi/2); with "distinct" the rest start near (-0.5, 3pi/2)
    const double a[2] = {0.5, std::numbers::pi / 2}, b[2] = {-0.5, 3 * std::numbers::pi / 2};
    Json starts = Json::array();
    for (std::size_t i = 0; i < opt.n_chains; ++i) {
      const bool second = opt.init_mode == "distinct" && i >= (opt.n_chains + 1) / 2;
      SixmodalConfig cfg;
      cfg.n = total;
      cfg.x0 = second ? b[0] : a[0];
      cfg.y0 = second ? b[1] : a[1];
      cfg.seed = opt.seed;
      cfg.stream = i;
      starts.push_back({cfg.x0, cfg.y0});
      results.push_back(sixmodal_mwg(cfg));
    }
    manifest["init_mode"] = opt.init_mode;
    manifest["starts"] = starts;
  } else if (opt.example == "logistic-synth") {
    const Vector beta = parse_vector(opt.beta);
    const auto data = synth_logistic_data(opt.n_obs, beta, opt.seed);
    Matrix table(data.design.rows(), data.design.cols() + 1);
    table << data.response, data.design;
    io::save_chain_file(fs::path(opt.out) / "logistic_data.csv", Chain(table, "data"));
    const auto mode = find_logistic_mode(data);
    if (!mode.converged) throw DiagnosticError("posterior mode search did not converge");
    LogisticRwmhConfig cfg;
    cfg.start = mode.point;
    cfg.seed = opt.seed;
    cfg.preconditioner = logistic_preconditioner(data, mode.point);
    cfg.tau = tune_rwmh_scale(data, cfg, opt.target_acceptance);
    cfg.n = total;
    for (std::size_t i = 0; i < opt.n_chains; ++i) {
      cfg.stream = i;
      results.push_back(logistic_rwmh(data, cfg));
    }
    manifest["n_obs"] = opt.n_obs;
    manifest["beta_true"] = vector_json(beta);
    manifest["mode"] = vector_json(mode.point);
    manifest["tau"] = cfg.tau;
    manifest["data_file"] = "logistic_data.csv (columns: y, design)";
  } else {
    throw DiagnosticError("unknown example '" + opt.example + "' (exp-indep, sixmodal, logistic-synth)");
  }
  manifest["files"] = write_chains(results, opt, opt.example);
  io::write_text_file(fs::path(opt.out) / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& f : manifest["files"]) std::cout << (fs::path(opt.out) / f["file"].get<std::string>()).string() << "\n";
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& opt, bool chain_files) {
  if (chain_files) cmd->add_option("--chains", opt.chain_files, "Chain files (CSV, header x1..xp)")->required();
  cmd->add_option("--burnin", opt.burnin, "Iterations dropped from the front of every chain");
  cmd->add_option("--coords", opt.coords, "1-based coordinates, e.g. 1,3-5 (default: all)");
  cmd->add_option("--seed", opt.seed, "Master seed");
  cmd->add_option("--out", opt.out, "Output directory");
  cmd->add_flag("--fail-on-nonconverged", opt.fail_on_nonconverged, "Exit 2 if any verdict is non-converged");
  cmd->add_option("--threads", opt.threads, "Worker threads (0: hardware concurrency)");
}

void add_diag_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--alpha", opt.alpha, "Significance level");
  cmd->add_option("--epsilon", opt.epsilon, "Tolerance for half-width, volume and mESS rules");
  cmd->add_option("--cutoff", opt.cutoff, "Tool 1 KL cutoff (default 0.06 joint bivariate, 0.01 marginal)");
  cmd->add_option("--rhat-cutoff", opt.rhat_cutoff, "R-hat convergence cutoff");
  cmd->add_option("--q", opt.q, "Quantiles, list or range like 0.1..0.9 (Raftery-Lewis; geweke/heidel run on x <= quantile)");
  cmd->add_option("--rl-epsilon", opt.rl_epsilon, "Raftery-Lewis accuracy r");
  cmd->add_option("--rl-s", opt.rl_s, "Raftery-Lewis probability s");
  cmd->add_option("--mc-samples", opt.mc_samples, "Monte Carlo samples for KL estimates");
  cmd->add_option("--grid", opt.grid, "Quadrature nodes per dimension for tool2");
  cmd->add_option("--target", opt.target, "Built-in target for tool2 (sixmodal, exp1)");
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"MCMC convergence diagnostics"};
  app.set_config("--config", "", "TOML/INI file with option values");
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Run a built-in sampler and write chain files");
  simulate->add_option("example", opt.example, "exp-indep, sixmodal or logistic-synth")->required();
  simulate->add_option("--chains", opt.n_chains, "Number of parallel chains");
  simulate->add_option("--n", opt.n, "Iterations kept per chain");
  simulate->add_option("--theta", opt.theta, "Exp(theta) proposal rate (exp-indep)");
  simulate->add_option("--x0", opt.x0, "Starting value (exp-indep)");
  simulate->add_option("--init-mode", opt.init_mode, "same or distinct starting modes (sixmodal)");
  simulate->add_option("--n-obs", opt.n_obs, "Observations (logistic-synth)");
  simulate->add_option("--beta", opt.beta, "True coefficients, intercept first (logistic-synth)");
  simulate->add_option("--target-acceptance", opt.target_acceptance, "Tuning target (logistic-synth)");
  add_common(simulate, opt, false);

  auto* diagnose = app.add_subcommand("diagnose", "Run diagnostics and write a report");
  diagnose->add_option("--diag", opt.diag,
                       "psrf,mpsrf,geweke,heidel,raftery,ess,mess,hw,tool1,tool1-marginal,tool2");
  add_common(diagnose, opt, true);
  add_diag_flags(diagnose, opt);

  auto* stop = app.add_subcommand("stop-check", "Evaluate a stopping rule on growing prefixes");
  stop->add_option("--rule", opt.rule,
                   "fwsr, relative-magnitude, relative-sd, fixed-volume, multivariate-relative-sd, mess");
  stop->add_option("--min-n", opt.min_n, "Minimum iterations before stopping");
  stop->add_option("--check-interval", opt.check_interval, "Prefix increment (default: length/100)");
  stop->add_option("--critical", opt.critical, "normal or t");
  stop->add_flag("--no-inverse-n", opt.no_inverse_n, "Drop the 1/n term from width and volume rules");
  stop->add_flag("--halt-on-stop", opt.halt_on_stop, "End the scan at the first stopping prefix");
  add_common(stop, opt, true);
  add_diag_flags(stop, opt);

  auto* plot = app.add_subcommand("plot", "Write SVG plots and their data");
  plot->add_option("--kind", opt.kind, "trace, acf, running-mean, rhat or tile");
  plot->add_option("--max-lag", opt.max_lag, "Largest ACF lag");
  plot->add_option("--step", opt.step, "R-hat evaluation increment");
  add_common(plot, opt, true);
  add_diag_flags(plot, opt);

  auto* report = app.add_subcommand("report", "Aggregate summary table and report");
  add_common(report, opt, true);
  add_diag_flags(report, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    fs::create_directories(opt.out);
    if (*simulate) return cmd_simulate(opt);
    if (*diagnose) return cmd_diagnose(opt);
    if (*stop) return cmd_stop_check(opt);
    if (*plot) return cmd_plot(opt);
    if (*report) return cmd_report(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
