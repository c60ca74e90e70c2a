#pragma once

#include <vector>

namespace ldx::detail {

struct Rule {
  std::vector<double> x, w;
};

/// n-point Gauss-Legendre rule on [a, b].
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre: `panels` equal panels on [a, b], n points each.
Rule composite_gauss_legendre(int panels, int n, double a, double b);

}  // namespace ldx::detail
