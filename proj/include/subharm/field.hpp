#pragma once

#include <fstream>

#include "subharm/core.hpp"

namespace subharm {

// Deterministic evaluator of a scalar field on the plane; -inf is an allowed value.
struct plane_field {
  std::function<double(cplx)> f;
  double operator()(cplx z) const { return f(z); }
};

inline void write_polar_csv(const std::string& path, const plane_field& u, const std::vector<double>& t,
                            const std::vector<double>& phi) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write " + path);
  out.precision(12);
  out << "t,phi,value\n";
  for (double r : t)
    for (double p : phi) out << r << ',' << p << ',' << u(std::polar(r, p)) << '\n';
}

}  // namespace subharm
