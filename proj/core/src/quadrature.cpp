#include "quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include "ldx/errors.hpp"

namespace ldx::detail {

Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs n >= 1");
  const std::vector<double> pos = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> t;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it)
    if (*it > 0.0) t.push_back(-*it);
  if (n % 2 == 1) t.push_back(0.0);
  for (double z : pos)
    if (z > 0.0) t.push_back(z);

  Rule r;
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (double z : t) {
    const double dp = boost::math::legendre_p_prime(n, z);
    r.x.push_back(mid + half * z);
    r.w.push_back(half * 2.0 / ((1.0 - z * z) * dp * dp));
  }
  return r;
}

Rule composite_gauss_legendre(int panels, int n, double a, double b) {
  if (panels < 1) throw ConfigError("composite rule needs at least one panel");
  Rule out;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    Rule r = gauss_legendre(n, a + p * h, a + (p + 1) * h);
    out.x.insert(out.x.end(), r.x.begin(), r.x.end());
    out.w.insert(out.w.end(), r.w.begin(), r.w.end());
  }
  return out;
}

}  // namespace ldx::detail
