// fmoyal: command-line front end for kernels, symbols, star products and
// the deformed-oscillator checks.
//
// Exit codes: 0 success, 1 invalid input or I/O failure, 2 numerical
// contract failure (always for hard numeric errors; for soft warnings only
// with --strict).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fmoyal/fmoyal.hpp"

namespace fs = std::filesystem;
using namespace fmoyal;
using io::json;

namespace {

#ifndef FMOYAL_VERSION
#define FMOYAL_VERSION "0.0.0"
#endif

// Flags shared by all subcommands; empty optionals were not given.
struct CommonFlags {
  std::string config_path;
  bool strict = false;
  std::optional<std::size_t> dim;
  std::vector<double> damping;
  std::optional<std::size_t> order;
  std::optional<double> grid_extent;
  std::optional<std::size_t> grid_points;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> provenance;
};

struct Run {
  std::string command;
  std::vector<std::string> args;
  RunConfig cfg;
  bool strict = false;
  json inputs = json::object();
  json results = json::object();
  std::vector<std::string> outputs;
  std::vector<std::string> contract_warnings;

  void write(const fs::path& path, const std::string& text) {
    io::write_text_file(path, text);
    outputs.push_back(path.generic_string());
  }
  void write_json(const fs::path& path, const json& j) { write(path, j.dump(2) + "\n"); }

  void flag(const std::string& what) { contract_warnings.push_back(what); }

  fs::path out_or(const std::string& fallback) const {
    return cfg.out.empty() ? fs::path(fallback) : fs::path(cfg.out);
  }

  /// <out without extension><suffix>.
  fs::path sibling(const fs::path& primary, const std::string& suffix) const {
    fs::path p = primary;
    p.replace_extension();
    return p.string() + suffix;
  }
};

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) {
    cfg.merge(io::parse_json(io::read_text_file(f.config_path), f.config_path), f.config_path);
  }
  if (f.dim) cfg.dim = *f.dim;
  if (!f.damping.empty()) cfg.damping = f.damping;
  if (f.order) cfg.extrapolation_order = *f.order;
  if (f.grid_extent || f.grid_points) {
    const double extent = f.grid_extent.value_or(cfg.grid.q_max());
    const std::size_t points = f.grid_points.value_or(cfg.grid.nq());
    cfg.grid = PhaseGrid::symmetric(extent, points);
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out = *f.out;
  if (f.provenance) cfg.provenance = *f.provenance;
  cfg.validate();
  return cfg;
}

// --- parsing helpers -----------------------------------------------------------

std::vector<double> split_numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    out.push_back(io::parse_double(std::string_view(s).substr(start, end - start), what));
    start = end + 1;
  }
  return out;
}

// "name" or "name:a,b,..."
std::pair<std::string, std::vector<double>> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, {}};
  return {spec.substr(0, colon), split_numbers(spec.substr(colon + 1), spec)};
}

void expect_args(const std::string& spec, const std::vector<double>& args, std::size_t n) {
  if (args.size() != n) {
    throw ValidationError("'" + spec + "' expects " + std::to_string(n) + " numbers");
  }
}

std::size_t level_arg(const std::string& spec, const std::vector<double>& args) {
  expect_args(spec, args, 1);
  if (args[0] < 0 || args[0] != std::floor(args[0])) {
    throw ValidationError("'" + spec + "' needs a non-negative integer level");
  }
  return static_cast<std::size_t>(args[0]);
}

/// vacuum | fock:N | coherent:RE,IM
FockOperator parse_state(const std::string& spec, std::size_t dim) {
  const auto [name, args] = split_spec(spec);
  if (name == "vacuum") return projector(fock_state(0, dim));
  if (name == "fock") return projector(fock_state(level_arg(spec, args), dim));
  if (name == "coherent") {
    expect_args(spec, args, 2);
    return projector(coherent_state({args[0], args[1]}, dim));
  }
  throw ValidationError("unknown state '" + spec + "' (vacuum, fock:N, coherent:RE,IM)");
}

/// identity | number | parity | q | p | projector:N | coherent:RE,IM | displacement:RE,IM
FockOperator parse_operator(const std::string& spec, std::size_t dim) {
  const auto [name, args] = split_spec(spec);
  if (name == "identity") return FockOperator::identity(dim);
  if (name == "number") return number_operator(dim);
  if (name == "parity") return parity_operator(dim);
  if (name == "q") return (annihilator(dim) + creator(dim)) * cd(kInvSqrt2);
  if (name == "p") return (annihilator(dim) - creator(dim)) * cd(0.0, -kInvSqrt2);
  if (name == "projector") return projector(fock_state(level_arg(spec, args), dim));
  if (name == "coherent") {
    expect_args(spec, args, 2);
    return projector(coherent_state({args[0], args[1]}, dim));
  }
  if (name == "displacement") {
    expect_args(spec, args, 2);
    return displacement({args[0], args[1]}, dim);
  }
  throw ValidationError("unknown operator '" + spec + "'");
}

/// coherent:RE,IM (analytic Wigner function) or a SymbolField CSV path.
SymbolField load_symbol(const std::string& spec, const PhaseGrid& grid) {
  const auto colon = spec.find(':');
  if (colon != std::string::npos && spec.substr(0, colon) == "coherent") {
    const auto args = split_numbers(spec.substr(colon + 1), spec);
    expect_args(spec, args, 2);
    const double q0 = kSqrt2 * args[0], p0 = kSqrt2 * args[1];
    return sample_field(grid, [&](double q, double p) {
      return cd(2.0 * std::exp(-(q - q0) * (q - q0) - (p - p0) * (p - p0)));
    });
  }
  if (spec == "one") return sample_field(grid, [](double, double) { return cd(1.0); });
  return io::load_symbol_field(spec);
}

/// Inline JSON object or a path to a JSON file.
NonlinearityFunction parse_nonlinearity(const std::string& text) {
  if (text.empty()) return NonlinearityFunction::identity();
  const bool inline_json = text.front() == '{';
  const std::string body = inline_json ? text : io::read_text_file(text);
  return io::nonlinearity_from_json(io::parse_json(body, inline_json ? "nonlinearity" : text),
                                    "nonlinearity");
}

json point_json(PhasePoint x) { return json{{"q", x.q}, {"p", x.p}}; }

json sample_json(const KernelSample& s) {
  return json{{"x1", point_json(s.x1)},       {"x2", point_json(s.x2)},
              {"x", point_json(s.x_out)},      {"re", s.value.real()},
              {"im", s.value.imag()},          {"err", s.error_estimate},
              {"converged", s.converged},      {"warnings", s.warnings}};
}

json field_summary(const SymbolField& f) {
  json j = io::symbol_sidecar(f);
  j["max_abs"] = f.max_abs();
  j["max_abs_imag"] = f.max_abs_imag();
  return j;
}

json heatmap_plot(const std::string& data, const std::string& title) {
  return json{{"kind", "heatmap"},
              {"title", title},
              {"data", data},
              {"x", {{"column", "q"}, {"label", "q"}}},
              {"y", {{"column", "p"}, {"label", "p"}}},
              {"series", json::array({{{"name", "Re"}, {"column", "re"}},
                                      {{"name", "Im"}, {"column", "im"}}})}};
}

void flag_field_warnings(Run& run, const SymbolField& f) {
  for (const auto& w : f.warnings) {
    if (w.rfind("extrapolation", 0) == 0 || w.rfind("non-finite", 0) == 0) run.flag(w);
  }
}

void save_field(Run& run, const SymbolField& f, const fs::path& csv, const std::string& title) {
  run.write(csv, io::symbol_csv(f));
  run.write_json(io::sidecar_path(csv), io::symbol_sidecar(f));
  run.write_json(run.sibling(csv, ".plot.json"),
                 heatmap_plot(csv.filename().generic_string(), title));
}

// --- subcommands ---------------------------------------------------------------

struct KernelArgs {
  bool analytic = false;
  double q1 = 0, p1 = 0, q2 = 0, p2 = 0, q = 0, p = 0;
  std::string triples;
  std::string nonlinearity;
  std::optional<double> lambda;
  std::optional<double> tau;
  bool report_drift = false;
};

KernelSample evaluate_kernel(const KernelArgs& a, const RunConfig& cfg, const io::Triple& t,
                             std::size_t dim) {
  if (a.analytic) {
    return a.lambda ? lambda_kernel_analytic(*a.lambda, t.x1, t.x2, t.x)
                    : groenewold_analytic(t.x1, t.x2, t.x);
  }
  if (a.tau) return tau_kernel(*a.tau, t.x1, t.x2, t.x, dim, cfg.schedule());
  return kernel_numeric(parse_nonlinearity(a.nonlinearity), t.x1, t.x2, t.x, dim, cfg.schedule());
}

void run_kernel(Run& run, const KernelArgs& a) {
  if (a.analytic && (a.tau || !a.nonlinearity.empty())) {
    throw ValidationError("--analytic takes --lambda only; --tau and --nonlinearity are numeric");
  }
  if (!a.analytic && a.lambda) throw ValidationError("--lambda applies to --analytic kernels");
  run.inputs["mode"] = a.analytic ? "analytic" : (a.tau ? "tau" : "numeric");
  if (a.lambda) run.inputs["lambda"] = *a.lambda;
  if (a.tau) run.inputs["tau"] = *a.tau;
  if (!a.nonlinearity.empty()) {
    run.inputs["nonlinearity"] = io::nonlinearity_to_json(parse_nonlinearity(a.nonlinearity));
  }

  std::vector<io::Triple> triples;
  const bool batch = !a.triples.empty();
  if (batch) {
    run.inputs["triples"] = a.triples;
    triples = io::parse_triples(io::read_text_file(a.triples), a.triples);
  } else {
    triples.push_back({{a.q1, a.p1}, {a.q2, a.p2}, {a.q, a.p}});
  }

  std::vector<KernelSample> samples;
  json drift = json::array();
  for (const auto& t : triples) {
    samples.push_back(evaluate_kernel(a, run.cfg, t, run.cfg.dim));
    const auto& s = samples.back();
    if (!s.converged) run.flag("kernel extrapolation did not converge");
    if (a.report_drift && !a.analytic) {
      const auto s2 = evaluate_kernel(a, run.cfg, t, 2 * run.cfg.dim);
      drift.push_back(std::abs(s2.value - s.value));
    }
  }

  if (batch) {
    const fs::path out = run.out_or("kernels.csv");
    run.write(out, io::kernel_csv(samples));
    run.results["count"] = samples.size();
    if (a.report_drift) run.results["drift_2n"] = drift;
    std::cout << "wrote " << samples.size() << " kernel samples to " << out.generic_string() << "\n";
    return;
  }
  json j = sample_json(samples.front());
  if (a.report_drift && !a.analytic) j["drift_2n"] = drift.front();
  run.results = j;
  if (!run.cfg.out.empty()) run.write_json(run.cfg.out, j);
  std::cout << j.dump(2) << "\n";
}

void run_verify_deformation(Run& run, const std::string& triples_path, std::size_t random_count) {
  std::vector<io::Triple> triples;
  if (!triples_path.empty()) {
    run.inputs["triples"] = triples_path;
    triples = io::parse_triples(io::read_text_file(triples_path), triples_path);
  } else {
    run.inputs["random_triples"] = random_count;
    triples = SeededRng(run.cfg.seed).triples(random_count);
  }
  if (triples.empty()) throw ValidationError("no triples to verify");

  std::vector<DeformationReport> reports;
  std::string csv = "q1,p1,q2,p2,q,p,mu,r_num_re,r_num_im,r_ana,abs_diff,err\n";
  double max_diff_mu4 = 0.0;
  for (const auto& t : triples) {
    reports.push_back(deformation_check(t.x1, t.x2, t.x, run.cfg.dim, run.cfg.schedule()));
    const auto& r = reports.back();
    if (!r.base.converged || !r.squared.converged) {
      run.flag("deformation check: extrapolation did not converge at mu=" + io::format_double(r.mu));
    }
    if (r.mu <= 4.0) max_diff_mu4 = std::max(max_diff_mu4, r.abs_diff);
    for (double v : {t.x1.q, t.x1.p, t.x2.q, t.x2.p, t.x.q, t.x.p, r.mu, r.r_num.real(),
                     r.r_num.imag(), r.r_ana, r.abs_diff}) {
      csv += io::format_double(v) + ',';
    }
    csv += io::format_double(r.error_estimate) + '\n';
  }
  const fs::path out = run.out_or("deformation.csv");
  run.write(out, csv);

  json summary{{"count", reports.size()}, {"max_abs_diff_mu_le_4", max_diff_mu4}};
  if (reports.size() >= 3) {
    const auto fit = fit_quadratic_in_mu(reports);
    summary["fit"] = {{"c0", fit.c0}, {"c1", fit.c1}, {"c2", fit.c2},
                      {"max_residual", fit.max_residual}};
    summary["claimed"] = {{"c0", 1.0 / 16}, {"c1", -2.0 / 16}, {"c2", 1.0 / 16}};
  }
  run.results = summary;
  run.write_json(run.sibling(out, ".summary.json"), summary);
  run.write_json(run.sibling(out, ".plot.json"),
                 json{{"kind", "scatter"},
                      {"title", "number-squared insertion ratio vs mu"},
                      {"data", out.filename().generic_string()},
                      {"x", {{"column", "mu"}, {"label", "mu"}}},
                      {"y", {{"label", "R"}}},
                      {"series", json::array({{{"name", "numeric"}, {"column", "r_num_re"}},
                                              {{"name", "closed form"}, {"column", "r_ana"}}})}});
  std::cout << summary.dump(2) << "\n";
}

void run_wigner(Run& run, const std::string& state) {
  run.inputs["state"] = state;
  const FockOperator rho = parse_state(state, run.cfg.dim);
  const SymbolField w = wigner(rho, run.cfg.grid, run.cfg.schedule());
  flag_field_warnings(run, w);
  const fs::path out = run.out_or("wigner.csv");
  save_field(run, w, out, "Wigner function " + state);
  const std::size_t ci = (run.cfg.grid.nq() - 1) / 2, cj = (run.cfg.grid.np() - 1) / 2;
  run.results = field_summary(w);
  run.results["center"] = point_json(run.cfg.grid.point(ci, cj));
  run.results["value_at_center"] = w.at(ci, cj).real();
  std::cout << run.results.dump(2) << "\n";
}

void run_symbol(Run& run, const std::string& op) {
  run.inputs["operator"] = op;
  const SymbolField s = symbol_of(parse_operator(op, run.cfg.dim), run.cfg.grid, run.cfg.schedule());
  flag_field_warnings(run, s);
  const fs::path out = run.out_or("symbol.csv");
  save_field(run, s, out, "Weyl symbol of " + op);
  run.results = field_summary(s);
  std::cout << run.results.dump(2) << "\n";
}

void run_star(Run& run, const std::string& a, const std::string& b, const std::string& route,
              const std::string& nonlinearity, bool bracket) {
  run.inputs["a"] = a;
  run.inputs["b"] = b;
  run.inputs["route"] = route;
  run.inputs["bracket"] = bracket;
  StarConfig cfg;
  cfg.grid = run.cfg.grid;
  cfg.dim = run.cfg.dim;
  cfg.schedule = run.cfg.schedule();
  if (route == "kernel") {
    cfg.route = StarRoute::kernel_quadrature;
  } else if (route != "operator") {
    throw ValidationError("--route must be 'kernel' or 'operator'");
  }
  if (!nonlinearity.empty()) {
    const auto f = parse_nonlinearity(nonlinearity);
    run.inputs["nonlinearity"] = io::nonlinearity_to_json(f);
    cfg.kernel = StarKernel::deformed(f);
  }
  const SymbolField fa = load_symbol(a, cfg.grid);
  const SymbolField fb = load_symbol(b, fa.grid);
  cfg.grid = fa.grid;
  const SymbolField out_field = bracket ? moyal_bracket(fa, fb, cfg) : star(fa, fb, cfg);
  flag_field_warnings(run, out_field);
  const fs::path out = run.out_or(bracket ? "bracket.csv" : "star.csv");
  save_field(run, out_field, out, bracket ? "Moyal bracket" : "star product");
  run.results = field_summary(out_field);
  std::cout << run.results.dump(2) << "\n";
}

void run_kproduct(Run& run, std::size_t count, std::size_t size, const std::string& nonlinearity) {
  if (count == 0 || size < 2) throw ValidationError("kproduct needs --count >= 1 and --size >= 2");
  run.inputs["count"] = count;
  run.inputs["size"] = size;
  SeededRng rng(run.cfg.seed);
  double assoc = 0.0, unit = 0.0, homo = 0.0;
  std::size_t non_positive = 0;
  for (std::size_t t = 0; t < count; ++t) {
    const KContext ctx = nonlinearity.empty()
                             ? KContext(rng.positive_matrix(size))
                             : k_context_from_f(parse_nonlinearity(nonlinearity), size);
    const auto a = rng.complex_matrix(size), b = rng.complex_matrix(size),
               c = rng.complex_matrix(size);
    const ComplexMatrix abc = k_multiply(k_multiply(a, b, ctx), c, ctx);
    assoc = std::max(assoc, k_associativity_defect(a, b, c, ctx) /
                                std::max(1.0, abc.cwiseAbs().maxCoeff()));
    if (ctx.invertible()) {
      const ComplexMatrix ua = k_multiply(ctx.unit(), a, ctx);
      unit = std::max(unit, (ua - a).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff()));
    }
    if (ctx.positive()) {
      const ComplexMatrix lhs = sqrt_k_transport(k_multiply(a, b, ctx), ctx);
      const ComplexMatrix rhs = sqrt_k_transport(a, ctx) * sqrt_k_transport(b, ctx);
      homo = std::max(homo, (lhs - rhs).cwiseAbs().maxCoeff() /
                                std::max(1.0, rhs.cwiseAbs().maxCoeff()));
    } else {
      ++non_positive;
    }
  }
  run.results = {{"associativity_defect", assoc},
                 {"unit_defect", unit},
                 {"sqrt_homomorphism_defect", homo},
                 {"non_positive_k", non_positive}};
  if (!run.cfg.out.empty()) run.write_json(run.cfg.out, run.results);
  std::cout << run.results.dump(2) << "\n";
}

void run_fosc(Run& run, const std::string& nonlinearity, std::optional<double> omega0,
              double kappa, double a_re, double a_im, double t_max, std::size_t steps) {
  const auto f = parse_nonlinearity(nonlinearity);
  run.inputs["nonlinearity"] = io::nonlinearity_to_json(f);
  const std::size_t dim = run.cfg.dim;
  const auto spectrum = commutator_spectrum(f, dim);
  std::string csv = "n,f,commutator,expected,abs_diff\n";
  double max_diff = 0.0;
  for (std::size_t n = 0; n < spectrum.size(); ++n) {
    const double nd = static_cast<double>(n);
    const double expected = (nd + 1) * f(n + 1) * f(n + 1) - nd * f(n) * f(n);
    const double diff = std::abs(spectrum[n] - expected);
    max_diff = std::max(max_diff, diff / std::max(1.0, std::abs(expected)));
    for (double v : {nd, f(n), spectrum[n], expected}) csv += io::format_double(v) + ',';
    csv += io::format_double(diff) + '\n';
  }
  const fs::path out = run.out_or("fosc.csv");
  run.write(out, csv);
  run.results = {{"interior_levels", spectrum.size()}, {"max_relative_commutator_diff", max_diff}};
  if (f.kind() == NonlinearityFunction::Kind::q_exact ||
      f.kind() == NonlinearityFunction::Kind::q_quadratic) {
    const auto exact = NonlinearityFunction::q_exact(f.lambda());
    const auto quad = NonlinearityFunction::q_quadratic(f.lambda());
    json cmp = json::array();
    for (std::size_t n = 0; n <= 8 && n < dim; ++n) {
      const double ln = f.lambda() * static_cast<double>(n);
      cmp.push_back({{"n", n}, {"diff", std::abs(exact(n) - quad(n))}, {"bound", std::pow(ln, 4)}});
    }
    run.results["q_exact_vs_quadratic"] = cmp;
  }
  if (omega0) {
    if (steps == 0) throw ValidationError("--steps must be positive");
    const AmplitudeState st{{a_re, a_im}, [&](double e) { return *omega0 + kappa * e; }};
    const double r0 = std::abs(st.a0);
    std::string traj = "t,re,im,modulus_drift\n";
    double drift = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = t_max * static_cast<double>(k) / static_cast<double>(steps);
      const cd a = evolve_amplitude(st, t);
      const double d = std::abs(std::abs(a) - r0);
      drift = std::max(drift, d);
      for (double v : {t, a.real(), a.imag()}) traj += io::format_double(v) + ',';
      traj += io::format_double(d) + '\n';
    }
    const fs::path tpath = run.sibling(out, ".amplitude.csv");
    run.write(tpath, traj);
    run.results["amplitude_max_modulus_drift"] = drift;
    run.write_json(run.sibling(out, ".amplitude.plot.json"),
                   json{{"kind", "line"},
                        {"title", "classical amplitude"},
                        {"data", tpath.filename().generic_string()},
                        {"x", {{"column", "t"}, {"label", "t"}}},
                        {"y", {{"label", "amplitude"}}},
                        {"series", json::array({{{"name", "Re a"}, {"column", "re"}},
                                                {{"name", "Im a"}, {"column", "im"}}})}});
  }
  std::cout << run.results.dump(2) << "\n";
}

std::vector<DampingSchedule> parse_schedules(const std::vector<std::string>& specs,
                                             const RunConfig& cfg) {
  std::vector<DampingSchedule> out;
  for (const auto& s : specs) {
    // "eps1,eps2,...[/order]"
    const auto slash = s.find('/');
    const auto eps = split_numbers(s.substr(0, slash), s);
    std::size_t order = std::min(cfg.extrapolation_order, eps.size() - 1);
    if (slash != std::string::npos) {
      const double o = io::parse_double(s.substr(slash + 1), s);
      if (o < 0 || o != std::floor(o)) throw ValidationError("bad order in '" + s + "'");
      order = static_cast<std::size_t>(o);
    }
    out.emplace_back(eps, order);
  }
  if (out.empty()) out.push_back(cfg.schedule());
  return out;
}

void run_convergence(Run& run, const std::string& target, std::vector<std::size_t> dims,
                     const std::vector<std::string>& schedule_specs, const KernelArgs& k,
                     double gamma_re, double gamma_im) {
  run.inputs["target"] = target;
  if (dims.empty()) dims.push_back(run.cfg.dim);
  const auto schedules = parse_schedules(schedule_specs, run.cfg);
  const io::Triple t{{k.q1, k.p1}, {k.q2, k.p2}, {k.q, k.p}};
  SweepTarget fn;
  if (target == "kernel") {
    run.inputs["triple"] = io::triple_to_json(t);
    fn = [&](std::size_t dim, const DampingSchedule& s) {
      const auto r = kernel_numeric(NonlinearityFunction::identity(), t.x1, t.x2, t.x, dim, s);
      return Estimate{r.value, r.error_estimate};
    };
  } else if (target == "parity-trace") {
    run.inputs["gamma"] = {gamma_re, gamma_im};
    fn = [&](std::size_t dim, const DampingSchedule& s) {
      const auto r = damped_trace(times_parity(displacement({gamma_re, gamma_im}, dim)), s);
      return Estimate{r.value, r.error_estimate};
    };
  } else if (target == "deformation") {
    run.inputs["triple"] = io::triple_to_json(t);
    fn = [&](std::size_t dim, const DampingSchedule& s) {
      const auto r = deformation_check(t.x1, t.x2, t.x, dim, s);
      return Estimate{r.r_num, r.error_estimate};
    };
  } else {
    throw ValidationError("--target must be kernel, parity-trace or deformation");
  }
  const SweepReport rep = convergence_sweep(fn, dims, schedules);

  std::string csv = "axis,dim,schedule,re,im,err,successive_diff\n";
  auto rows = [&](const std::vector<SweepRow>& rs, const char* axis) {
    for (const auto& r : rs) {
      csv += std::string(axis) + ',' + std::to_string(r.dim) + ',' +
             std::to_string(r.schedule_index) + ',' + io::format_double(r.estimate.value.real()) +
             ',' + io::format_double(r.estimate.value.imag()) + ',' +
             io::format_double(r.estimate.error_estimate) + ',' +
             (r.successive_difference ? io::format_double(*r.successive_difference) : "") + '\n';
    }
  };
  rows(rep.by_dim, "dim");
  rows(rep.by_schedule, "schedule");
  const fs::path out = run.out_or("convergence.csv");
  run.write(out, csv);
  json sched = json::array();
  for (const auto& s : schedules) {
    sched.push_back({{"damping", s.epsilons()}, {"order", s.extrapolation_order()}});
  }
  run.results = {{"dim_monotone", rep.dim_monotone},
                 {"schedule_monotone", rep.schedule_monotone},
                 {"schedules", sched},
                 {"warnings", rep.warnings}};
  run.write_json(run.sibling(out, ".plot.json"),
                 json{{"kind", "line"},
                      {"title", "convergence of " + target},
                      {"data", out.filename().generic_string()},
                      {"x", {{"column", "dim"}, {"label", "truncation dimension"}}},
                      {"y", {{"column", "successive_diff"}, {"label", "successive difference"}}},
                      {"filter", {{"column", "axis"}, {"equals", "dim"}}},
                      {"series", json::array({{{"name", "re"}, {"column", "re"}}})}});
  std::cout << run.results.dump(2) << "\n";
}

void write_provenance(Run& run, int exit_code, const std::string& error) {
  fs::path path;
  if (!run.cfg.provenance.empty()) {
    path = run.cfg.provenance;
  } else if (!run.cfg.out.empty()) {
    path = run.sibling(run.cfg.out, ".provenance.json");
  } else {
    path = "fmoyal-" + run.command + ".provenance.json";
  }
  json p{{"tool", "fmoyal"},
         {"version", FMOYAL_VERSION},
         {"command", run.command},
         {"arguments", run.args},
         {"config", run.cfg.to_json()},
         {"strict", run.strict},
         {"seed", run.cfg.seed},
         {"inputs", run.inputs},
         {"results", run.results},
         {"outputs", run.outputs},
         {"contract_warnings", run.contract_warnings},
         {"exit_code", exit_code}};
  if (!error.empty()) p["error"] = error;
  io::write_text_file(path, p.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-space star products, Weyl symbols and f-deformed oscillators."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(FMOYAL_VERSION));

  CommonFlags flags;
  app.add_option("--config", flags.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_flag("--strict", flags.strict, "Exit with code 2 on numerical-contract warnings");
  app.add_option("--dim", flags.dim, "Fock-space truncation dimension");
  app.add_option("--damping", flags.damping, "Damping epsilons, strictly decreasing")
      ->delimiter(',');
  app.add_option("--order", flags.order, "Extrapolation order");
  app.add_option("--grid-extent", flags.grid_extent, "Grid covers |q|,|p| <= extent");
  app.add_option("--grid-points", flags.grid_points, "Grid points per axis");
  app.add_option("--seed", flags.seed, "Random seed");
  app.add_option("--out", flags.out, "Primary output file");
  app.add_option("--provenance", flags.provenance, "Provenance record path");

  KernelArgs kargs;
  auto add_triple = [&](CLI::App* sub) {
    sub->add_option("--q1", kargs.q1);
    sub->add_option("--p1", kargs.p1);
    sub->add_option("--q2", kargs.q2);
    sub->add_option("--p2", kargs.p2);
    sub->add_option("--q", kargs.q, "Evaluation point q");
    sub->add_option("--p", kargs.p, "Evaluation point p");
  };

  auto* kernel = app.add_subcommand("kernel", "Evaluate K(x1, x2; x) for one triple or a batch");
  add_triple(kernel);
  kernel->add_flag("--analytic", kargs.analytic, "Closed-form kernel instead of the Fock trace");
  kernel->add_option("--lambda", kargs.lambda, "Deformation parameter for --analytic");
  kernel->add_option("--tau", kargs.tau, "Generating insertion exp(i tau n)");
  kernel->add_option("--nonlinearity", kargs.nonlinearity, "Insertion f(n): inline JSON or file");
  kernel->add_option("--triples", kargs.triples, "JSON file with triples (CSV output)");
  kernel->add_flag("--report-drift", kargs.report_drift, "Also evaluate at 2*dim");

  std::string triples_path;
  std::size_t random_count = 20;
  auto* verify = app.add_subcommand("verify-deformation",
                                    "Number-squared insertion ratio against (mu-1)^2/16");
  verify->add_option("--triples", triples_path, "JSON file with triples");
  verify->add_option("--random", random_count, "Seeded random triples when no file is given");

  std::string state = "vacuum";
  auto* wig = app.add_subcommand("wigner", "Wigner function of a state");
  wig->add_option("--state", state, "vacuum | fock:N | coherent:RE,IM");

  std::string op_spec = "identity";
  auto* sym = app.add_subcommand("symbol", "Weyl symbol of an operator");
  sym->add_option("--operator", op_spec,
                  "identity | number | parity | q | p | projector:N | coherent:RE,IM | "
                  "displacement:RE,IM");

  std::string a_spec, b_spec, route = "operator", star_f;
  bool bracket = false;
  auto* st = app.add_subcommand("star", "Star product or Moyal bracket of two symbols");
  st->add_option("--a", a_spec, "Symbol CSV, coherent:RE,IM or one")->required();
  st->add_option("--b", b_spec, "Symbol CSV, coherent:RE,IM or one")->required();
  st->add_option("--route", route, "operator | kernel");
  st->add_option("--nonlinearity", star_f, "Deformation f(n): inline JSON or file");
  st->add_flag("--bracket", bracket, "Moyal bracket instead of the product");

  std::size_t kcount = 100, ksize = 16;
  std::string kf;
  auto* kp = app.add_subcommand("kproduct", "Seeded checks of the K-deformed matrix product");
  kp->add_option("--count", kcount, "Number of random triples");
  kp->add_option("--size", ksize, "Matrix size");
  kp->add_option("--nonlinearity", kf, "Use K = diag(f) instead of random positive K");

  std::string fosc_f = R"({"kind":"q_exact","lambda":0.1})";
  std::optional<double> omega0;
  double kappa = 0.0, a_re = 1.0, a_im = 0.0, t_max = 10.0;
  std::size_t steps = 100;
  auto* fo = app.add_subcommand("fosc", "f-oscillator commutator and amplitude checks");
  fo->add_option("--nonlinearity", fosc_f, "f(n): inline JSON or file");
  fo->add_option("--omega0", omega0, "chi(E) = omega0 + kappa E; enables amplitude evolution");
  fo->add_option("--kappa", kappa);
  fo->add_option("--a-re", a_re);
  fo->add_option("--a-im", a_im);
  fo->add_option("--t-max", t_max);
  fo->add_option("--steps", steps);

  std::string target = "kernel";
  std::vector<std::size_t> dims;
  std::vector<std::string> schedules;
  double gamma_re = 0.5, gamma_im = 0.0;
  auto* conv = app.add_subcommand("convergence", "Sweep a computation over dims and schedules");
  conv->add_option("--target", target, "kernel | parity-trace | deformation");
  conv->add_option("--dims", dims, "Truncation dimensions")->delimiter(',');
  conv->add_option("--schedule", schedules, "Damping schedule eps1,eps2,...[/order]; repeatable");
  conv->add_option("--gamma-re", gamma_re);
  conv->add_option("--gamma-im", gamma_im);
  add_triple(conv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  for (int i = 1; i < argc; ++i) run.args.emplace_back(argv[i]);
  run.strict = flags.strict;

  int code = 0;
  std::string error;
  bool config_ok = false;
  try {
    run.cfg = resolve_config(flags);
    config_ok = true;
    if (run.command == "kernel") run_kernel(run, kargs);
    else if (run.command == "verify-deformation") run_verify_deformation(run, triples_path, random_count);
    else if (run.command == "wigner") run_wigner(run, state);
    else if (run.command == "symbol") run_symbol(run, op_spec);
    else if (run.command == "star") run_star(run, a_spec, b_spec, route, star_f, bracket);
    else if (run.command == "kproduct") run_kproduct(run, kcount, ksize, kf);
    else if (run.command == "fosc") run_fosc(run, fosc_f, omega0, kappa, a_re, a_im, t_max, steps);
    else if (run.command == "convergence")
      run_convergence(run, target, dims, schedules, kargs, gamma_re, gamma_im);
    if (!run.contract_warnings.empty()) {
      for (const auto& w : run.contract_warnings) std::cerr << "warning: " << w << "\n";
      if (run.strict) code = 2;
    }
  } catch (const NumericError& e) {
    error = e.what();
    code = 2;
  } catch (const Error& e) {
    error = e.what();
    code = 1;
  } catch (const json::exception& e) {
    error = e.what();
    code = 1;
  } catch (const fs::filesystem_error& e) {
    error = e.what();
    code = 1;
  }
  if (!error.empty()) std::cerr << "error: " << error << "\n";
  if (config_ok) {
    try {
      write_provenance(run, code, error);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      if (code == 0) code = 1;
    }
  }
  return code;
}
