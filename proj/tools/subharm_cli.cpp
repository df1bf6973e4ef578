#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "subharm/completeness.hpp"
#include "subharm/limits.hpp"
#include "subharm/potentials.hpp"
#include "subharm/synthesis.hpp"

using namespace subharm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct shared_flags {
  std::size_t phi_grid = 256;
  int t_decades = 2;
  int t_per_decade = 32;
  std::string out = "out";
  std::uint64_t seed = 1;
};

json header(const shared_flags& f, const std::string& command, const std::string& input) {
  return {{"command", command},
          {"input", fs::path(input).filename().string()},
          {"seed", f.seed},
          {"phi_grid", f.phi_grid},
          {"t_decades", f.t_decades},
          {"t_per_decade", f.t_per_decade}};
}

void check_flags(const shared_flags& f) {
  if (f.phi_grid < 256 || (f.phi_grid & (f.phi_grid - 1))) throw input_error("--phi-grid must be a power of two >= 256");
  if (f.t_decades < 2) throw input_error("--t-decades must be at least 2");
  if (f.t_per_decade < 8) throw input_error("--t-per-decade must be at least 8");
}

void write_report(const fs::path& dir, const json& j) {
  std::ofstream out(dir / "report.json");
  if (!out) throw input_error("cannot write " + (dir / "report.json").string());
  out << j.dump(2) << "\n";
}

std::ofstream open_csv(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw input_error("cannot write " + p.string());
  out.precision(12);
  return out;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(x > 0 ? "inf" : (x < 0 ? "-inf" : "nan")); }

// h(phi) = sum a_m cos m phi + b_m sin m phi
std::function<double(double)> target_from_json(const json& j) {
  if (!j.is_object() || !j.contains("a")) throw input_error("target: expected {\"a\": [...], \"b\": [...]}");
  std::vector<double> a, b;
  try {
    a = j.at("a").get<std::vector<double>>();
    if (j.contains("b")) b = j.at("b").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw input_error(std::string("target: ") + e.what());
  }
  return [a, b](double phi) {
    double v = 0;
    for (std::size_t m = 0; m < a.size(); ++m) v += a[m] * std::cos(double(m) * phi);
    for (std::size_t m = 0; m < b.size(); ++m) v += b[m] * std::sin(double(m) * phi);
    return v;
  };
}

int run_analyze(const std::string& input, const shared_flags& f) {
  auto mu = std::make_shared<const mass_distribution>(mass_distribution_from_json(read_json_file(input)));
  if (mu->empty()) throw input_error("zero set is empty");
  fs::path dir(f.out);
  fs::create_directories(dir);
  json rep = header(f, "analyze", input);

  auto eg = exponent_and_genus(*mu);
  auto counting = counting_series(*mu);
  auto po = fit_proximate_order(counting);
  auto u = potential_field(mu, eg.p);

  // growth is read well inside the zero cloud: the truncated product is polynomial beyond it
  double r_hi = mu->max_radius() / 100;
  if (!(r_hi > 0)) throw input_error("zero set has no atom off the origin");
  auto t_grid = decade_grid(r_hi, f.t_decades, f.t_per_decade);
  auto rs = t_grid;
  std::vector<double> M;
  for (double r : rs) M.push_back(std::max(circle_means(u, r, f.phi_grid).M, 1e-300));
  for (std::size_t i = 1; i < M.size(); ++i) M[i] = std::max(M[i], M[i - 1]);
  auto g = growth_scalars(radial_series(rs, M), po);

  rep["growth"] = {{"order", number(g.order)},
                   {"order_slope", number(g.order_slope)},
                   {"type", number(g.type_value)},
                   {"type_kind", g.type_kind == type_class::maximal ? "maximal" : g.type_kind == type_class::minimal ? "minimal" : "normal"},
                   {"convergence_exponent", number(eg.rho_mu)},
                   {"genus", eg.p}};
  rep["proximate_order"] = {{"rho", po.rho}, {"label", po.label}};

  auto jp = open_csv(dir / "jensen_privalov.csv");
  jp << "r,residual,relative\n";
  double worst = 0;
  for (std::size_t i = 0; i < rs.size(); i += std::size_t(f.t_per_decade / 4)) {
    double r = rs[i] * 1.0137;  // off the round radii where lattice-like zero sets put atoms
    double res = jensen_privalov_residual(*mu, eg.p, r, 2048);
    // relative to the circle mean, which grows like N(r)
    double rel = std::abs(res) / std::max(1.0, std::abs(circle_means(u, r, 2048).mean));
    worst = std::max(worst, rel);
    jp << r << "," << res << "," << rel << "\n";
  }
  rep["jensen_privalov_max_relative_residual"] = number(worst);

  auto crg = crg_test(u, po, t_grid, f.phi_grid, 0.05);
  write_direction_csv((dir / "indicator.csv").string(), {{"h", &crg.pair.h}, {"h_lower", &crg.pair.h_lower}});
  rep["crg"] = {{"regular", crg.regular}, {"gap", number(crg.gap)}, {"flagged_directions", crg.pair.flagged.size()}};

  auto sd = open_csv(dir / "sector_density.csv");
  sd << "alpha,beta,upper,lower,exists\n";
  for (int k = 0; k < 8; ++k) {
    double a = two_pi * k / 8 - pi, b = a + two_pi / 8;
    auto d = sector_density(*mu, po, a, b, t_grid);
    sd << a << "," << b << "," << d.upper << "," << d.lower << "," << (d.exists ? 1 : 0) << "\n";
  }
  write_report(dir, rep);
  std::cout << "order " << g.order_slope << " genus " << eg.p << " crg " << (crg.regular ? "true" : "false") << "\n";
  return 0;
}

// Two indicators alternate through a periodic partition; the result is checked against
// h = max(h1, h2) and h_lower = min(h1, h2). The zero set is the discretized Riesz mass.
int run_synth(const std::string& input, const shared_flags& f) {
  json spec = read_json_file(input);
  if (!spec.is_object() || !spec.contains("rho")) throw input_error("synth spec: expected object with \"rho\"");
  double rho;
  try {
    rho = spec.at("rho").get<double>();
  } catch (const json::exception& e) {
    throw input_error(std::string("synth spec: ") + e.what());
  }
  if (!(rho > 0)) throw input_error("synth spec: rho must be positive");
  fs::path dir(f.out);
  json rep = header(f, "synth", input);
  rep["rho"] = rho;

  if (spec.contains("lower")) {
    int level = spec.value("level", 2);
    auto g = direction_function::sample(target_from_json(spec.at("lower")), 1024, rho);
    auto fam = make_lower_indicator_family(g, rho, level);
    auto chk = check_family(fam);
    fs::create_directories(dir);
    rep["lower"] = {{"level", level}, {"K", fam.K}, {"delta", fam.delta}, {"M", fam.M}, {"pin_error", number(chk.pin_error)},
                    {"min_excess", number(chk.min_excess)}, {"bound", number(chk.bound)}, {"submean", chk.submean}};
    write_direction_csv((dir / "lower_target.csv").string(), {{"g", &fam.target}, {"g_n", &fam.g_n}});
    bool ok = chk.pin_error < 1e-9 && chk.min_excess > -1e-9 && chk.submean == 1.0;
    rep["verified"] = ok;
    write_report(dir, rep);
    if (!ok) throw infeasible_error("synth: lower-indicator family fails its checks");
    std::cout << "pin " << chk.pin_error << "\n";
    return 0;
  }

  if (!spec.contains("pair") || !spec.at("pair").is_array() || spec.at("pair").size() != 2)
    throw input_error("synth spec: expected \"pair\" with two targets or \"lower\"");
  auto f1 = target_from_json(spec.at("pair")[0]), f2 = target_from_json(spec.at("pair")[1]);
  auto h1 = direction_function::sample(f1, f.phi_grid, rho), h2 = direction_function::sample(f2, f.phi_grid, rho);
  for (auto* h : {&h1, &h2})
    if (!trig_convexity_check(*h, 1e-9, 4).pass) throw infeasible_error("synth: target is not rho-trigonometrically convex");
  // exact targets in the field: interpolated samples would put kinks of the wrong sign at the nodes
  auto field_of = [rho](std::function<double(double)> h) {
    return plane_field{[h, rho](cplx z) {
      double r = std::abs(z);
      return r == 0 ? 0.0 : std::pow(r, rho) * h(std::arg(z));
    }};
  };
  std::size_t K = std::size_t(std::ceil(std::log(10.0) * (f.t_decades + 2) / 1.1)) + 8;
  auto P = partition_of_unity::periodic(K, 1.1, 0.9);
  std::vector<plane_field> vs;
  for (std::size_t k = 0; k < P.size(); ++k) vs.push_back(field_of(k % 2 ? f2 : f1));
  proximate_order po(rho);
  auto u = glue_asymptotic(vs, P, std::vector<double>(P.size(), 0.0), po);

  double t_hi = std::pow(10.0, f.t_decades + 1);
  auto crg = crg_test(u, po, decade_grid(t_hi, f.t_decades, f.t_per_decade), f.phi_grid, 0.05);
  double e_hi = 0, e_lo = 0, scale = std::max(h1.scale(), h2.scale());
  for (std::size_t i = 0; i < f.phi_grid; ++i) {
    e_hi = std::max(e_hi, std::abs(crg.pair.h[i] - std::max(h1[i], h2[i])));
    e_lo = std::max(e_lo, std::abs(crg.pair.h_lower[i] - std::min(h1[i], h2[i])));
  }
  auto lap = laplacian_check(u, 2, t_hi, 60, 32, rho);
  fs::create_directories(dir);
  write_direction_csv((dir / "achieved.csv").string(), {{"h", &crg.pair.h}, {"h_lower", &crg.pair.h_lower}, {"h1", &h1}, {"h2", &h2}});

  double kappa = std::min(rho - std::floor(rho), std::floor(rho) + 1 - rho);
  if (kappa > 1e-12) {
    auto mu = riesz_atoms(u, 1.0, t_hi, 40 * (f.t_decades + 1), 64);
    auto d = discretize_zeros(mu, rho);
    std::ofstream zs(dir / "zeros.json");
    zs << to_json(d.zeros).dump() << "\n";
    rep["zeros"] = {{"count", d.zeros.size()}, {"cells", d.cells}, {"max_cell_defect", d.max_cell_defect}};
  } else {
    rep["zeros"] = {{"skipped", "integer rho"}};
  }
  // harmonic targets give a finite-difference Laplacian of rounding size on either side of 0
  bool ok = e_hi <= 0.05 * scale && e_lo <= 0.05 * scale && lap.worst >= -1e-6;
  rep["verification"] = {{"h_error", e_hi / scale},        {"h_lower_error", e_lo / scale}, {"crg", crg.regular},
                         {"laplacian_worst", lap.worst}, {"laplacian_worst_at", {lap.worst_at.real(), lap.worst_at.imag()}}};
  rep["verified"] = ok;
  write_report(dir, rep);
  if (!ok) throw numeric_error("synth: achieved field misses the targets by more than 5% or is not subharmonic on the grid");
  std::cout << "h_error " << e_hi / scale << " h_lower_error " << e_lo / scale << "\n";
  return 0;
}

json status_json(const enclosure_status& s) {
  return {{"kind", to_string(s.kind)}, {"value", s.value}, {"margin", s.margin}, {"translation", {s.translation.real(), s.translation.imag()}}};
}

int run_complete(const std::string& input, const shared_flags& f) {
  json spec = read_json_file(input);
  if (!spec.is_object() || !spec.contains("bodies") || !spec.contains("G")) throw input_error("bodies file: expected \"bodies\" and \"G\"");
  std::vector<support_body> bodies;
  for (auto& b : spec.at("bodies")) bodies.push_back(body_from_json(b, f.phi_grid));
  auto G = body_from_json(spec.at("G"), f.phi_grid);
  fs::path dir(f.out);
  json rep = header(f, "complete", input);

  std::size_t nc = spec.value("c_points", std::size_t(21));
  if (nc < 11) throw input_error("bodies file: c_points must be at least 11");
  std::vector<double> cs;
  for (std::size_t i = 0; i < nc; ++i) cs.push_back(double(i) / double(nc - 1));
  auto v = completeness_verdict(bodies, G, bodies.size() == 2 ? cs : std::vector<double>{});
  fs::create_directories(dir);
  json st = json::array();
  for (auto& s : v.bodies) st.push_back(status_json(s));
  rep["statuses"] = st;
  rep["complete"] = v.complete;
  rep["maximal"] = v.maximal;
  rep["extremely_overcomplete"] = v.extremely_overcomplete;
  if (bodies.size() == 2) {
    auto hull = make_body([a = bodies[0].eval, b = bodies[1].eval](double p) { return std::max(a(p), b(p)); }, "hull", f.phi_grid);
    rep["hull"] = status_json(enclosure_classify(hull, G));
    auto mx = open_csv(dir / "mixes.csv");
    mx << "c,kind,value\n";
    for (auto& [c, s] : v.mixes) mx << c << "," << to_string(s.kind) << "," << s.value << "\n";
    auto oc = overcompleteness_test(bodies[0].h, bodies[1].h);
    rep["overcompleteness"] = {{"extremely_overcomplete", oc.extremely_overcomplete}, {"d", oc.d}, {"at_pi", oc.at_pi}, {"tangency", oc.tangency}};
  }
  if (spec.contains("spiral_P")) {
    json sp = json::array();
    for (double P : spec.at("spiral_P").get<std::vector<double>>()) {
      auto r = spiral_spectral_value(P);
      sp.push_back({{"P", P}, {"rho_min", r.rho_min}, {"residual", r.residual}, {"boundary", r.boundary}});
    }
    rep["spiral"] = sp;
  }
  write_report(dir, rep);
  for (auto& s : v.bodies) std::cout << to_string(s.kind) << " ";
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth analysis, synthesis and completeness checks for subharmonic functions"};
  app.require_subcommand(1);
  shared_flags f;
  std::string input;
  auto add_shared = [&](CLI::App* sub) {
    sub->add_option("input", input, "input JSON file")->required();
    sub->add_option("--phi-grid", f.phi_grid, "angular grid size (power of two >= 256)");
    sub->add_option("--t-decades", f.t_decades, "decades in the t window");
    sub->add_option("--t-per-decade", f.t_per_decade, "t samples per decade");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "seed recorded in the report");
  };
  auto* analyze = app.add_subcommand("analyze", "growth, indicators, densities and CRG of a zero set");
  auto* synth = app.add_subcommand("synth", "synthesize a field from target indicators and verify it");
  auto* complete = app.add_subcommand("complete", "completeness verdict for support bodies");
  for (auto* s : {analyze, synth, complete}) add_shared(s);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    check_flags(f);
    if (analyze->parsed()) return run_analyze(input, f);
    if (synth->parsed()) return run_synth(input, f);
    return run_complete(input, f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_of(e);
  }
}
