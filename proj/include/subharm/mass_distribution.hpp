#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "subharm/core.hpp"

namespace subharm {

struct atom {
  cplx z;
  double mass;
};

// Finite weighted point set in the punctured plane, kept sorted by modulus.
class mass_distribution {
 public:
  mass_distribution() = default;
  explicit mass_distribution(std::vector<atom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) {
      if (!std::isfinite(a.z.real()) || !std::isfinite(a.z.imag()) || !std::isfinite(a.mass))
        throw input_error("non-finite atom");
      if (a.mass < 0) throw input_error("negative mass");
    }
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const atom& a, const atom& b) { return std::abs(a.z) < std::abs(b.z); });
    radii_.reserve(atoms_.size());
    cum_.reserve(atoms_.size() + 1);
    cum_.push_back(0.0);
    for (const auto& a : atoms_) {
      radii_.push_back(std::abs(a.z));
      cum_.push_back(cum_.back() + a.mass);
    }
  }

  const std::vector<atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double total_mass() const { return cum_.back(); }
  double min_radius() const { return radii_.empty() ? 0.0 : radii_.front(); }
  double max_radius() const { return radii_.empty() ? 0.0 : radii_.back(); }
  bool has_origin_atom() const { return !radii_.empty() && radii_.front() == 0.0; }

  // Mass in the closed disc |z| <= r.
  double count(double r) const {
    auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
    return cum_[std::size_t(it - radii_.begin())];
  }

  // Mass in {r0 < |z| <= r1, arg z in [a, a+w)} with the angle taken mod 2pi.
  double sector_mass(double r0, double r1, double a, double w) const {
    auto lo = std::upper_bound(radii_.begin(), radii_.end(), r0) - radii_.begin();
    auto hi = std::upper_bound(radii_.begin(), radii_.end(), r1) - radii_.begin();
    double s = 0;
    for (auto i = lo; i < hi; ++i) {
      double d = wrap_angle(std::arg(atoms_[std::size_t(i)].z) - a);
      if (d < w) s += atoms_[std::size_t(i)].mass;
    }
    return s;
  }

  // Indices [first, last) of atoms with r0 < |z| <= r1.
  std::pair<std::size_t, std::size_t> annulus(double r0, double r1) const {
    auto lo = std::upper_bound(radii_.begin(), radii_.end(), r0) - radii_.begin();
    auto hi = std::upper_bound(radii_.begin(), radii_.end(), r1) - radii_.begin();
    return {std::size_t(lo), std::size_t(hi)};
  }

 private:
  std::vector<atom> atoms_;
  std::vector<double> radii_;
  std::vector<double> cum_;
};

inline nlohmann::json to_json(const mass_distribution& mu) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : mu.atoms()) arr.push_back({{"re", a.z.real()}, {"im", a.z.imag()}, {"mass", a.mass}});
  return {{"atoms", arr}};
}

inline mass_distribution mass_distribution_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j["atoms"].is_array())
    throw input_error("zero set: expected object with array field \"atoms\"");
  std::vector<atom> v;
  for (const auto& a : j["atoms"]) {
    if (!a.is_object() || !a.contains("re") || !a.contains("im") || !a["re"].is_number() || !a["im"].is_number())
      throw input_error("zero set: atom needs numeric re, im");
    double m = 1.0;
    if (a.contains("mass")) {
      if (!a["mass"].is_number()) throw input_error("zero set: mass must be numeric");
      m = a["mass"].get<double>();
    }
    v.push_back({{a["re"].get<double>(), a["im"].get<double>()}, m});
  }
  return mass_distribution(std::move(v));
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  if (ss.str().find_first_not_of(" \t\r\n") == std::string::npos) throw input_error(path + " is empty");
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

}  // namespace subharm
