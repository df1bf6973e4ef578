#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "subharm/core.hpp"

namespace subharm {

// 2pi-periodic function sampled at phi_i = 2 pi i / n.
struct direction_function {
  std::vector<double> v;
  double rho = 1.0;

  direction_function() = default;
  direction_function(std::vector<double> vals, double r) : v(std::move(vals)), rho(r) {
    if (!is_pow2(v.size()) || v.size() < 256) throw input_error("direction function: grid size must be a power of two >= 256");
    if (!(rho > 0)) throw input_error("direction function: rho must be positive");
    for (double x : v)
      if (std::isnan(x) || x == pos_inf) throw input_error("direction function: values must be finite or -inf");
  }
  template <class F>
  static direction_function sample(F&& f, std::size_t n, double rho) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(two_pi * double(i) / double(n));
    return {std::move(v), rho};
  }

  std::size_t size() const { return v.size(); }
  double step() const { return two_pi / double(v.size()); }
  double phi(std::size_t i) const { return two_pi * double(i) / double(v.size()); }
  double operator[](std::size_t i) const { return v[i % v.size()]; }
  double& operator[](std::size_t i) { return v[i % v.size()]; }

  // Linear interpolation in phi.
  double at(double phi) const {
    double x = wrap_angle(phi) / step();
    auto i = std::size_t(std::floor(x));
    double t = x - double(i);
    double a = (*this)[i], b = (*this)[i + 1];
    if (t == 0) return a;
    return a + t * (b - a);
  }
  double scale() const {
    double s = 0;
    for (double x : v)
      if (std::isfinite(x)) s = std::max(s, std::abs(x));
    return s > 0 ? s : 1.0;
  }
  double max() const { return *std::max_element(v.begin(), v.end()); }
  double min() const { return *std::min_element(v.begin(), v.end()); }
};

inline double sup_distance(const direction_function& a, const direction_function& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b.at(a.phi(i))));
  return d;
}

inline void write_direction_csv(const std::string& path, const std::vector<std::pair<std::string, const direction_function*>>& cols) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write " + path);
  out.precision(12);
  out << "phi";
  for (auto& c : cols) out << ',' << c.first;
  out << '\n';
  std::size_t n = cols.front().second->size();
  for (std::size_t i = 0; i < n; ++i) {
    out << cols.front().second->phi(i);
    for (auto& c : cols) out << ',' << (*c.second)[i];
    out << '\n';
  }
}

inline direction_function read_direction_csv(const std::string& path, double rho) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  std::string line;
  std::vector<double> v;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_of("0123456789") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double p, x;
    if (!(ss >> p >> x)) throw input_error("direction csv: bad row '" + line + "'");
    v.push_back(x);
  }
  return {v, rho};
}

// Signed measure on the unit circle: atoms plus a density constant on each grid cell.
struct circle_measure {
  std::vector<std::pair<double, double>> atoms;  // (angle, mass)
  std::vector<double> density;                   // per cell [phi_i, phi_{i+1})

  double cell() const { return two_pi / double(density.size()); }
  double total() const {
    double s = 0;
    for (auto& a : atoms) s += a.second;
    for (double d : density) s += d * cell();
    return s;
  }
  double total_variation() const {
    double s = 0;
    for (auto& a : atoms) s += std::abs(a.second);
    for (double d : density) s += std::abs(d) * cell();
    return s;
  }
  // Cell masses with atoms assigned to the cell that contains them.
  std::vector<double> binned(std::size_t n) const {
    std::vector<double> b(n, 0.0);
    double w = two_pi / double(n);
    for (auto& a : atoms) b[std::size_t(std::floor(wrap_angle(a.first) / w + 1e-9)) % n] += a.second;
    std::size_t k = density.size();
    for (std::size_t i = 0; i < k; ++i) {
      double c0 = cell() * double(i);
      b[std::size_t(std::floor(c0 / w + 1e-9)) % n] += density[i] * cell();
    }
    return b;
  }
};

inline double tv_distance(const circle_measure& a, const circle_measure& b, std::size_t bins) {
  auto x = a.binned(bins), y = b.binned(bins);
  double s = 0;
  for (std::size_t i = 0; i < bins; ++i) s += std::abs(x[i] - y[i]);
  return s;
}

inline nlohmann::json to_json(const circle_measure& s) {
  nlohmann::json a = nlohmann::json::array();
  for (auto& x : s.atoms) a.push_back({x.first, x.second});
  return {{"atoms", a}, {"density", s.density}};
}

inline circle_measure circle_measure_from_json(const nlohmann::json& j) {
  if (!j.contains("atoms") || !j.contains("density")) throw input_error("circle measure: need atoms and density");
  circle_measure s;
  for (auto& a : j["atoms"]) s.atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
  s.density = j["density"].get<std::vector<double>>();
  return s;
}

}  // namespace subharm
