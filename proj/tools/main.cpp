// qpl: experiment runner for the quasi-periodic operator library.  Every
// subcommand reads a flat key=value RunConfig (defaults < --config file <
// explicit flags), runs one pipeline, and writes CSV/JSON artifacts that embed
// the effective config and a content hash, so a rerun from the echoed config
// reproduces the bytes.
//
// Exit codes: 0 ok, 2 usage, 3 numeric failure, 4 smallness-gate refusal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qpl/arithmetics.hpp"
#include "qpl/cocycle.hpp"
#include "qpl/duality.hpp"
#include "qpl/edl.hpp"
#include "qpl/eigensolver.hpp"
#include "qpl/errors.hpp"
#include "qpl/io.hpp"
#include "qpl/kam.hpp"
#include "qpl/localization.hpp"
#include "qpl/operators.hpp"
#include "qpl/util.hpp"

namespace {

using namespace qpl;
using json = nlohmann::ordered_json;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.str("out-dir", ".")) / name).string();
}

FrequencyVector certified_freq(const RunConfig& cfg) {
  std::vector<double> alpha = parse_number_list(cfg.str("alpha", "golden"));
  return certify_dc(alpha, cfg.num("dc-tau", 1.5), cfg.integer("dc-bound", 512));
}

TruncatedOperator make_operator(const RunConfig& cfg, double theta) {
  std::string kind = cfg.str("kind", "amo");
  double lambda = cfg.num("lambda", 2.0);
  std::vector<double> alpha = parse_number_list(cfg.str("alpha", "golden"));
  int n = static_cast<int>(cfg.integer("n", 40));
  if (kind == "amo") {
    if (alpha.size() != 1) throw InconsistentInput("kind=amo expects a single frequency");
    return build_amo(lambda, alpha[0], theta, n);
  }
  if (kind == "longrange")
    return build_longrange(parse_potential(cfg.str("v", "1:1")), lambda, alpha, theta, n);
  if (kind == "md") return build_md_longrange(lambda, alpha, theta, n);
  if (kind == "md-nn") {
    std::vector<double> thetas(alpha.size(), theta);
    return build_md_schrodinger(lambda, alpha, thetas, n);
  }
  throw InconsistentInput("unknown kind '" + kind + "' (amo, longrange, md, md-nn)");
}

// Schrodinger cocycle family E -> S_E^{coupling * v}
std::function<Cocycle(double)> cocycle_family(const RunConfig& cfg, const FrequencyVector& fr,
                                              double coupling) {
  ScalarPoly vs = parse_potential(cfg.str("v", "1:1")) * coupling;
  return [fr, vs](double e) { return Cocycle::schrodinger(fr, e, vs); };
}

std::vector<double> energy_list(const RunConfig& cfg) {
  if (cfg.has("energies")) return parse_number_list(cfg.str("energies"));
  if (cfg.has("energy")) return {cfg.num_required("energy")};
  throw InconsistentInput("need energy=... or energies=...");
}

std::string join_ints(const std::vector<int>& v, char sep = ';') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  double pos = q * static_cast<double>(xs.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

// ---------------------------------------------------------------- spectrum

void run_spectrum(const RunConfig& cfg) {
  TruncatedOperator h = make_operator(cfg, cfg.num("theta", 0.31));
  EigenDecomposition dec = eigen_all(h);

  CsvTable t;
  t.columns = {"index", "energy"};
  for (std::size_t i = 0; i < dec.values.size(); ++i)
    t.add_row({std::to_string(i), fmt_g17(dec.values[i])});
  write_file(out_path(cfg, "spectrum_values.csv"), render_csv(cfg, t));

  std::vector<double> gammas;
  int localized = 0;
  for (auto& u : dec.vectors) {
    std::vector<double> a(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) a[i] = std::fabs(u[i]);
    DecayFit fit = decay_fit(h.box, a, 1);
    gammas.push_back(fit.gamma);
    if (fit.gamma > 0.05 && fit.r2 > 0.5) ++localized;
  }
  SuleFit sule = sule_fit(h.box, dec, 0.05);
  json r;
  r["size"] = h.size();
  r["sym_defect"] = h.sym_defect();
  r["residual_bound"] = dec.residual_bound;
  r["ortho_defect"] = dec.ortho_defect;
  r["gamma_median"] = quantile(gammas, 0.5);
  r["gamma_q1"] = quantile(gammas, 0.25);
  r["gamma_q3"] = quantile(gammas, 0.75);
  r["localized_fraction"] = static_cast<double>(localized) / static_cast<double>(dec.vectors.size());
  r["sule"] = {{"C", sule.C_sule}, {"gamma", sule.gamma}};
  write_file(out_path(cfg, "spectrum_report.json"), render_json(cfg, r));
}

// ------------------------------------------------- lyapunov / rotation / ac.

void run_lyapunov(const RunConfig& cfg) {
  FrequencyVector fr = certified_freq(cfg);
  auto family = cocycle_family(cfg, fr, cfg.num("coupling", cfg.num("lambda", 2.0)));
  long long iterates = cfg.integer("iterates", 100000);
  int phases = static_cast<int>(cfg.integer("phases", 8));
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));

  CsvTable t;
  t.columns = {"energy", "lyapunov", "stderr", "iterates", "phases"};
  for (double e : energy_list(cfg)) {
    LyapunovEstimate est = lyapunov(family(e), iterates, phases, seed);
    t.add_row({fmt_g17(e), fmt_g17(est.value), fmt_g17(est.stderr_),
               std::to_string(est.iterates), std::to_string(est.phases)});
  }
  write_file(out_path(cfg, "lyapunov.csv"), render_csv(cfg, t));
}

void run_rotation(const RunConfig& cfg) {
  FrequencyVector fr = certified_freq(cfg);
  auto family = cocycle_family(cfg, fr, cfg.num("coupling", cfg.num("lambda", 2.0)));
  long long iterates = cfg.integer("iterates", 1 << 17);
  bool weighted = cfg.flag("weighted", true);

  CsvTable t;
  t.columns = {"energy", "rho"};
  for (double e : energy_list(cfg)) {
    Cocycle c = family(e);
    double rho = weighted ? rotation_number_weighted(c, iterates) : rotation_number(c, iterates);
    t.add_row({fmt_g17(e), fmt_g17(rho)});
  }
  write_file(out_path(cfg, "rotation.csv"), render_csv(cfg, t));
}

void run_acceleration(const RunConfig& cfg) {
  FrequencyVector fr = certified_freq(cfg);
  auto family = cocycle_family(cfg, fr, cfg.num("coupling", cfg.num("lambda", 2.0)));
  double e = cfg.num_required("energy");
  std::vector<double> eps = parse_number_list(cfg.str("epsilons", "0.005,0.01,0.02,0.04"));
  long long iterates = cfg.integer("iterates", 1 << 15);

  auto pts = acceleration_probe(family(e), eps, iterates);
  CsvTable t;
  t.columns = {"epsilon", "lyapunov"};
  for (auto& [x, l] : pts) t.add_row({fmt_g17(x), fmt_g17(l)});
  write_file(out_path(cfg, "acceleration.csv"), render_csv(cfg, t));

  json r;
  r["energy"] = e;
  if (pts.size() >= 2) {
    auto& a = pts.front();
    auto& b = pts.back();
    r["acceleration_estimate"] = (b.second - a.second) / (2.0 * M_PI * (b.first - a.first));
  }
  json grid = json::array();
  for (auto& [x, l] : pts) grid.push_back({{"epsilon", x}, {"lyapunov", l}});
  r["grid"] = std::move(grid);
  write_file(out_path(cfg, "acceleration.json"), render_json(cfg, r));
}

// --------------------------------------------------------------------- edl

void run_edl(const RunConfig& cfg) {
  int theta_grid = static_cast<int>(cfg.integer("theta-grid", 200));
  int win_lo = static_cast<int>(cfg.integer("win-lo", 10));
  int win_hi = static_cast<int>(cfg.integer("win-hi", 40));
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
  auto make_op = [&cfg](double theta) { return make_operator(cfg, theta); };
  EdlProfile prof = edl_profile(make_op, theta_grid, win_lo, win_hi, seed);

  CsvTable t;
  t.columns = {"index", "dist", "k"};
  for (std::size_t i = 0; i < prof.K.size(); ++i)
    t.add_row({std::to_string(i), std::to_string(prof.box.dist_linf(static_cast<int>(i))),
               fmt_g17(prof.K[i])});
  write_file(out_path(cfg, "edl_profile.csv"), render_csv(cfg, t));

  json r;
  r["gamma_hat"] = prof.gamma_hat;
  r["intercept"] = prof.intercept;
  r["ci_lo"] = prof.ci_lo;
  r["ci_hi"] = prof.ci_hi;
  r["win_lo"] = prof.win_lo;
  r["win_hi"] = prof.win_hi;
  r["theta_grid"] = prof.theta_grid;
  r["theta_offset"] = prof.theta_offset;
  r["halfwidth"] = prof.box.halfwidth;
  r["dim"] = prof.box.dim;
  write_file(out_path(cfg, "edl_fit.json"), render_json(cfg, r));
}

// ---------------------------------------------------------------- localize

void run_localize(const RunConfig& cfg) {
  TruncatedOperator h = make_operator(cfg, cfg.num("theta", 0.31));
  EigenDecomposition dec = eigen_all(h);
  if (h.tridiagonal) refine_tridiagonal_tails(h, dec);

  std::size_t idx;
  if (cfg.has("index")) {
    long long want = cfg.integer("index", 0);
    if (want < 0 || want >= static_cast<long long>(dec.values.size()))
      throw InconsistentInput("index out of range");
    idx = static_cast<std::size_t>(want);
  } else if (cfg.has("energy")) {
    double e = cfg.num_required("energy");
    idx = 0;
    for (std::size_t i = 1; i < dec.values.size(); ++i)
      if (std::fabs(dec.values[i] - e) < std::fabs(dec.values[idx] - e)) idx = i;
  } else {
    idx = dec.values.size() / 2;
  }

  std::vector<double> u(dec.vectors[idx].size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::fabs(dec.vectors[idx][i]);

  CsvTable t;
  t.columns = {"index", "dist", "value", "abs"};
  for (std::size_t i = 0; i < u.size(); ++i)
    t.add_row({std::to_string(i), std::to_string(h.box.dist_linf(static_cast<int>(i))),
               fmt_g17(dec.vectors[idx][i]), fmt_g17(u[i])});
  write_file(out_path(cfg, "localize_eigenfunction.csv"), render_csv(cfg, t));

  DecayFit fit = decay_fit(h.box, u, 1);
  double gamma_cert = cfg.num("gamma", 0.85 * fit.gamma);
  GoodCertificate cert = certify_good(h.box, u, gamma_cert, static_cast<int>(cfg.integer("ell-search", 2)));

  json r;
  r["index"] = idx;
  r["energy"] = dec.values[idx];
  r["fit"] = {{"gamma", fit.gamma}, {"intercept", fit.intercept}, {"r2", fit.r2},
              {"center", fit.center}, {"samples", fit.samples}};
  r["certificate"] = {{"gamma", cert.gamma},         {"C", cert.C},
                      {"C_ell", cert.C_ell},         {"ell", cert.ell},
                      {"center", cert.center},       {"fit_residual", cert.fit_residual},
                      {"objective", cert.objective()}};
  write_file(out_path(cfg, "localize_certificate.json"), render_json(cfg, r));
}

// ------------------------------------------------------------ kam / duality

struct KamRun {
  FrequencyVector fr;
  double energy = 0.0;
  double coupling = 1.0;
  KamConfig kc;
  ReductionResult res;
};

KamRun kam_pipeline(const RunConfig& cfg, double default_coupling) {
  KamRun run;
  run.fr = certified_freq(cfg);
  run.coupling = cfg.num("coupling", default_coupling);
  auto family = cocycle_family(cfg, run.fr, run.coupling);

  if (cfg.has("rho-target")) {
    run.energy = rotation_tune(family, cfg.num_required("rho-target"),
                               cfg.num("bracket-lo", -3.0), cfg.num("bracket-hi", 3.0),
                               cfg.integer("tune-iterates", 1 << 17));
  } else if (cfg.has("energy")) {
    run.energy = cfg.num_required("energy");
  } else {
    throw InconsistentInput("need energy=... or rho-target=...");
  }

  KamConfig& kc = run.kc;
  kc.h = cfg.num("radius", 0.15);
  kc.force_gate = cfg.flag("force-gate", false);
  kc.tau_rot = cfg.num("tau-rot", 1.5);
  kc.rot_dc_bound = cfg.integer("rot-dc-bound", 200001);
  kc.target_eps = cfg.num("target-eps", 1e-24);
  kc.max_steps = static_cast<int>(cfg.integer("max-steps", 40));
  std::string kr = cfg.str("kappa-rot", "auto");
  if (kr == "auto") {
    double rho = rotation_number_weighted(family(run.energy), kc.rho_iterates);
    kc.kappa_rot = 0.9 * rot_dc_kappa(rho, run.fr.alpha, kc.tau_rot, kc.rot_dc_bound);
  } else {
    kc.kappa_rot = parse_number(kr);
  }

  double target_h = cfg.num("radius-end", kc.h / 2.0);
  run.res = reduce_to_constant(family(run.energy), target_h, kc.kappa_rot, kc.tau_rot, kc);
  return run;
}

json trace_json(const KamRun& run) {
  const ReductionResult& res = run.res;
  json steps = json::array();
  for (std::size_t i = 0; i < res.reports.size(); ++i) {
    const KamStepReport& rep = res.reports[i];
    json s;
    s["step"] = i + 1;
    s["case"] = rep.tag == KamCase::Resonant ? "resonant" : "nonresonant";
    s["eps"] = rep.eps;
    s["eps_next"] = rep.eps_next;
    s["range"] = rep.range;
    s["gate_ok"] = rep.gate_ok;
    s["gate_bound"] = rep.gate_bound;
    s["slack_quadratic"] = rep.slack_quadratic;
    s["delta_a"] = rep.delta_a;
    s["psl_flip"] = rep.psl_flip;
    if (!rep.resonance.empty()) {
      s["resonance"] = rep.resonance;
      s["gap"] = rep.gap;
      s["threshold"] = rep.threshold;
    }
    steps.push_back(std::move(s));
  }
  const ReductionCertificates& c = res.certs;
  json r;
  r["energy"] = run.energy;
  r["coupling"] = run.coupling;
  r["rho"] = res.rho;
  r["kappa_rot"] = run.kc.kappa_rot;
  r["psl_sign"] = res.psl_sign;
  r["residual_eps"] = res.residual_eps;
  r["steps"] = std::move(steps);
  r["final"] = {{"xi", res.a_final.xi},
                {"sigma", res.a_final.sigma()},
                {"t", res.a_final.su11.t},
                {"nu_abs", std::abs(res.a_final.su11.nu)}};
  r["decomposition"] = {{"ell", res.dec.ell},
                        {"deg_b_tilde", res.dec.deg_b_tilde},
                        {"h_tilde", res.dec.h_tilde},
                        {"norm_b_tilde", res.dec.norm_b_tilde},
                        {"norm_y", res.dec.norm_y},
                        {"nu_abs", std::abs(res.dec.nu)}};
  r["certificates"] = {{"gate_all", c.gate_all},
                       {"contraction_quadratic", c.contraction_quadratic},
                       {"es1_y", c.es1_y},
                       {"es1_nu", c.es1_nu},
                       {"es2", c.es2},
                       {"es3", c.es3},
                       {"eigen_gap", c.eigen_gap},
                       {"conj_residual", c.conj_residual},
                       {"reconstruct_residual", c.reconstruct_residual},
                       {"gap_value", c.gap_value},
                       {"gap_bound", c.gap_bound},
                       {"worst_quadratic_slack", c.worst_quadratic_slack},
                       {"notes", c.notes}};
  return r;
}

void run_kam(const RunConfig& cfg) {
  KamRun run = kam_pipeline(cfg, 1.0);
  write_file(out_path(cfg, "kam_trace.json"), render_json(cfg, trace_json(run)));
}

void run_duality(const RunConfig& cfg) {
  double lambda = cfg.num("lambda", std::exp(4.0));
  if (!(lambda > 0.0)) throw InconsistentInput("lambda must be positive");
  KamRun run = kam_pipeline(cfg, 1.0 / lambda);
  write_file(out_path(cfg, "kam_trace.json"), render_json(cfg, trace_json(run)));

  DualContext ctx{parse_potential(cfg.str("v", "1:1")), lambda, run.fr,
                  run.energy, run.res.rho, run.res.psl_sign};
  DualEigenfunction ef =
      build_dual_eigenfunction(run.res.dec, run.res.a_final, ctx, cfg.num("dual-tol", 1e-6));

  int d = run.fr.dim();
  CsvTable t;
  t.columns = {"site", "re", "im", "abs"};
  int ext = 0;
  for (auto& [k, v] : ef.coefficients.c) {
    for (int i = 0; i < d; ++i) ext = std::max(ext, std::abs(static_cast<int>(k[i])));
    std::string site;
    for (int i = 0; i < d; ++i) site += (i ? ";" : "") + std::to_string(k[i]);
    t.add_row({site, fmt_g17(v.real()), fmt_g17(v.imag()), fmt_g17(std::abs(v))});
  }
  write_file(out_path(cfg, "dual_eigenfunction.csv"), render_csv(cfg, t));

  BoxSpec box{d, ext};
  std::vector<double> u(box.size(), 0.0);
  for (auto& [k, v] : ef.coefficients.c) {
    std::vector<int> site(d);
    for (int i = 0; i < d; ++i) site[i] = static_cast<int>(k[i]);
    u[static_cast<std::size_t>(box.index_of(site))] = std::abs(v);
  }
  DecayFit fit = decay_fit(box, u, 1);
  double gamma_cert = cfg.num("good-gamma", cfg.num("good-gamma-frac", 0.85) * fit.gamma);
  GoodCertificate cert = certify_good(box, u, gamma_cert, static_cast<int>(cfg.integer("ell-search", 2)));

  json r;
  r["energy_dual"] = lambda * run.energy;
  r["phase"] = ef.phase;
  r["residual"] = ef.residual;
  r["ell"] = ef.ell;
  r["c"] = ef.c;
  r["c_ell"] = ef.c_ell;
  r["dist"] = ef.dist;
  r["mass_prenorm"] = ef.mass_prenorm;
  r["norm_b1"] = ef.norm_b1;
  r["mass_bound_ok"] = ef.mass_bound_ok;
  r["diag_near_identity"] = ef.diag_near_identity;
  r["diag_bound"] = ef.diag_bound;
  r["fit"] = {{"gamma", fit.gamma}, {"r2", fit.r2}, {"samples", fit.samples}};
  r["certificate"] = {{"gamma", cert.gamma},   {"C", cert.C},
                      {"C_ell", cert.C_ell},   {"ell", cert.ell},
                      {"center", cert.center}, {"fit_residual", cert.fit_residual}};
  write_file(out_path(cfg, "dual_certificate.json"), render_json(cfg, r));
}

// ---------------------------------------------------------------- criterion

void run_criterion(const RunConfig& cfg) {
  int samples = static_cast<int>(cfg.integer("samples", 100));
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.integer("seed", 1)));
  std::uniform_real_distribution<double> gamma_dist(0.2, 1.5);
  std::uniform_int_distribution<int> site(-6, 6);

  CsvTable t;
  t.columns = {"d",        "gamma",    "p",       "q",           "ell",
               "s_direct", "s_shifted", "s_mixed", "bound_direct", "bound_mixed", "ok"};
  int violations = 0;
  for (int s = 0; s < samples; ++s) {
    int d = cfg.has("d") ? static_cast<int>(cfg.integer("d", 1)) : 1 + static_cast<int>(rng() % 2);
    double gamma = gamma_dist(rng);
    std::vector<int> p(d), q(d), ell(d);
    for (int i = 0; i < d; ++i) {
      p[i] = site(rng);
      q[i] = site(rng);
      ell[i] = site(rng);
    }
    CriterionSums cs = criterion_sums(p, q, ell, gamma);
    bool ok = cs.s_direct <= cs.bound_direct && cs.s_shifted <= cs.bound_direct &&
              cs.s_mixed <= cs.bound_mixed;
    if (!ok) ++violations;
    t.add_row({std::to_string(d), fmt_g17(gamma), join_ints(p), join_ints(q), join_ints(ell),
               fmt_g17(cs.s_direct), fmt_g17(cs.s_shifted), fmt_g17(cs.s_mixed),
               fmt_g17(cs.bound_direct), fmt_g17(cs.bound_mixed), ok ? "1" : "0"});
  }
  write_file(out_path(cfg, "criterion.csv"), render_csv(cfg, t));

  json r;
  r["samples"] = samples;
  r["violations"] = violations;
  write_file(out_path(cfg, "criterion.json"), render_json(cfg, r));
}

// ------------------------------------------------------------------ wiring

struct OptSpec {
  const char* key;
  const char* fallback;  // nullptr = unset unless given
  const char* help;
};

void add_subcommand(CLI::App& app, const char* name, const char* desc,
                    std::vector<OptSpec> raw, std::function<void(const RunConfig&)> runner) {
  raw.push_back({"out-dir", ".", "directory for output artifacts"});
  raw.push_back({"threads", "1", "worker threads"});
  raw.push_back({"seed", "1", "seed for randomized offsets/bootstraps"});

  // later entries override earlier ones (subcommands re-declare shared keys to
  // change their defaults), position keeps the first occurrence
  std::vector<OptSpec> opts;
  for (auto& o : raw) {
    auto it = std::find_if(opts.begin(), opts.end(),
                           [&](const OptSpec& p) { return std::string_view(p.key) == o.key; });
    if (it == opts.end())
      opts.push_back(o);
    else
      *it = o;
  }

  CLI::App* sc = app.add_subcommand(name, desc);
  auto store = std::make_shared<std::map<std::string, std::string>>();
  auto config_path = std::make_shared<std::string>();
  sc->add_option("--config", *config_path, "key=value config file (flags override it)");
  for (auto& o : opts) {
    std::string help = o.help;
    if (o.fallback) help += std::string(" [") + o.fallback + "]";
    sc->add_option("--" + std::string(o.key), (*store)[o.key], help);
  }
  sc->callback([sc, name, opts = std::move(opts), store, config_path,
                runner = std::move(runner)] {
    RunConfig cfg;
    cfg.subcommand = name;
    for (auto& o : opts)
      if (o.fallback) cfg.set(o.key, o.fallback);
    if (!config_path->empty()) merge_kv_file(cfg, *config_path);
    for (auto& o : opts)
      if (sc->count("--" + std::string(o.key)) > 0) cfg.set(o.key, (*store)[o.key]);

    set_default_threads(static_cast<int>(cfg.integer("threads", 1)));
    std::error_code ec;
    std::filesystem::create_directories(cfg.str("out-dir", "."), ec);
    if (ec) throw InconsistentInput("cannot create out-dir '" + cfg.str("out-dir", ".") + "'");
    runner(cfg);
  });
}

const std::vector<OptSpec> kFamilyOpts = {
    {"kind", "amo", "operator family: amo, longrange, md, md-nn"},
    {"lambda", "2", "coupling of the cosine diagonal"},
    {"alpha", "golden", "frequency list (golden, silver, or decimals)"},
    {"theta", "0.31", "phase"},
    {"n", "40", "box halfwidth"},
    {"v", "1:1", "hopping Fourier spec k:coeff,... (longrange only)"},
};

const std::vector<OptSpec> kCocycleOpts = {
    {"lambda", "2", "potential scale (coupling defaults to it)"},
    {"coupling", nullptr, "Schrodinger potential multiplier"},
    {"alpha", "golden", "frequency list"},
    {"v", "1:1", "potential Fourier spec k:coeff,..."},
    {"dc-tau", "1.5", "Diophantine exponent for the frequency certificate"},
    {"dc-bound", "512", "exhaustive certification range"},
};

int run_cli(int argc, char** argv) {
  CLI::App app{"quasi-periodic operator laboratory"};
  app.require_subcommand(1);

  add_subcommand(app, "spectrum", "eigenvalues + localization report of one family member",
                 kFamilyOpts, run_spectrum);

  {
    auto opts = kCocycleOpts;
    opts.push_back({"energy", nullptr, "single energy"});
    opts.push_back({"energies", nullptr, "comma list of energies"});
    opts.push_back({"iterates", "100000", "transfer-matrix iterates"});
    opts.push_back({"phases", "8", "phase samples"});
    add_subcommand(app, "lyapunov", "top Lyapunov exponent over an energy list", opts,
                   run_lyapunov);
  }
  {
    auto opts = kCocycleOpts;
    opts.push_back({"energy", nullptr, "single energy"});
    opts.push_back({"energies", nullptr, "comma list of energies"});
    opts.push_back({"iterates", "131072", "lift iterates"});
    opts.push_back({"weighted", "1", "smooth Birkhoff window (0 = plain average)"});
    add_subcommand(app, "rotation", "fibered rotation number over an energy list", opts,
                   run_rotation);
  }
  {
    auto opts = kCocycleOpts;
    opts.push_back({"energy", nullptr, "energy (required)"});
    opts.push_back({"epsilons", "0.005,0.01,0.02,0.04", "imaginary phase offsets"});
    opts.push_back({"iterates", "32768", "iterates per offset"});
    add_subcommand(app, "acceleration", "complexified Lyapunov exponents on an offset grid", opts,
                   run_acceleration);
  }
  {
    auto opts = kFamilyOpts;
    opts.push_back({"theta-grid", "200", "phase-average grid size"});
    opts.push_back({"win-lo", "10", "fit window lower distance"});
    opts.push_back({"win-hi", "40", "fit window upper distance"});
    add_subcommand(app, "edl", "phase-averaged dynamical-kernel profile and decay fit", opts,
                   run_edl);
  }
  {
    auto opts = kFamilyOpts;
    opts.push_back({"index", nullptr, "eigenvector index (default: middle of the spectrum)"});
    opts.push_back({"energy", nullptr, "pick the eigenvector nearest this energy"});
    opts.push_back({"gamma", nullptr, "certificate rate (default 0.85 * fitted)"});
    opts.push_back({"ell-search", "2", "second-bump search radius"});
    add_subcommand(app, "localize", "envelope certificate for one eigenvector", opts,
                   run_localize);
  }

  std::vector<OptSpec> kam_opts = kCocycleOpts;
  kam_opts.push_back({"energy", nullptr, "cocycle energy"});
  kam_opts.push_back({"rho-target", nullptr, "tune the energy to this rotation number instead"});
  kam_opts.push_back({"bracket-lo", "-3", "tuning bracket, lower energy"});
  kam_opts.push_back({"bracket-hi", "3", "tuning bracket, upper energy"});
  kam_opts.push_back({"tune-iterates", "131072", "rotation-number budget while tuning"});
  kam_opts.push_back({"radius", "0.15", "initial analyticity radius"});
  kam_opts.push_back({"radius-end", nullptr, "final radius (default radius/2)"});
  kam_opts.push_back({"kappa-rot", "auto", "rotation-number DC constant, or 'auto'"});
  kam_opts.push_back({"tau-rot", "1.5", "rotation-number DC exponent"});
  kam_opts.push_back({"rot-dc-bound", "200001", "rotation-number DC certification range"});
  kam_opts.push_back({"force-gate", "0", "proceed past a failed smallness gate"});
  kam_opts.push_back({"target-eps", "1e-24", "stopping tolerance"});
  kam_opts.push_back({"max-steps", "40", "step cap"});
  {
    auto opts = kam_opts;
    opts.push_back({"coupling", "1", "Schrodinger potential multiplier"});
    add_subcommand(app, "kam", "reduce a near-rotation cocycle to a constant", opts, run_kam);
  }
  {
    auto opts = kam_opts;
    opts.push_back({"lambda", "exp(4)", "dual long-range coupling (cocycle side uses v/lambda)"});
    opts.push_back({"dual-tol", "1e-6", "eigenvalue-equation residual tolerance"});
    opts.push_back({"good-gamma", nullptr, "certificate rate (default good-gamma-frac * fitted)"});
    opts.push_back({"good-gamma-frac", "0.85", "certificate rate as a fraction of the fitted rate"});
    opts.push_back({"ell-search", "2", "second-bump search radius"});
    add_subcommand(app, "duality", "reduce, then assemble the dual point eigenfunction", opts,
                   run_duality);
  }
  {
    std::vector<OptSpec> opts = {
        {"samples", "100", "random instances"},
        {"d", nullptr, "fix the dimension (default: mix of 1 and 2)"},
    };
    add_subcommand(app, "criterion", "brute-force the lattice convolution inequalities", opts,
                   run_criterion);
  }

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return static_cast<int>(e.kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
