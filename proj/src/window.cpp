#include "mmcplace/window.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmcplace {

double theta(const WindowObjective& obj, int T) {
  if (T < 1) throw std::invalid_argument("window size must be >= 1");
  return ((obj.gamma + 1.0) * obj.bound.cumulative(T) + obj.sigma) / T;
}

int optimal_window_binary_search(const WindowObjective& obj, int T_max) {
  if (T_max < 1) throw std::invalid_argument("T_max must be >= 1");
  int lo = 1, hi = T_max;
  while (lo < hi) {
    const int T = (lo + hi) / 2;
    const double a = theta(obj, T), b = theta(obj, T + 1);
    if (a < b) hi = T;
    else if (a > b) lo = T + 1;
    else return T;
  }
  return lo;
}

int optimal_window_scan(const WindowObjective& obj, int T_max) {
  if (T_max < 1) throw std::invalid_argument("T_max must be >= 1");
  int best = 1;
  double best_v = theta(obj, 1);
  for (int T = 2; T <= T_max; ++T) {
    const double v = theta(obj, T);
    if (v < best_v) best = T, best_v = v;
  }
  return best;
}

ClosedFormWindow closed_form_T0(double gamma, double sigma, double beta, double alpha) {
  if (!(alpha > 1.0)) throw std::invalid_argument("closed form needs alpha > 1");
  if (!(beta > 0.0)) throw std::invalid_argument("closed form needs beta > 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  if (!(gamma >= 1.0)) throw std::invalid_argument("Gamma must be >= 1");
  ClosedFormWindow out;
  out.T0 = std::pow(sigma / ((gamma + 1.0) * beta * (alpha - 1.0)), 1.0 / alpha);
  const WindowObjective obj{gamma, sigma, ErrorBound::power_law(beta, alpha)};
  const double capped = std::min(out.T0, 1e9);
  const int lo = std::max(1, static_cast<int>(std::floor(capped)));
  const int hi = std::max(1, static_cast<int>(std::ceil(capped)));
  out.T_star = theta(obj, hi) < theta(obj, lo) ? hi : lo;
  return out;
}

double phi_discrete(const WindowObjective& obj, int T) {
  if (T < 1) throw std::invalid_argument("window size must be >= 1");
  const double F = obj.bound.cumulative(T);
  const double dF = obj.bound.cumulative(T + 1) - F;
  return (obj.gamma + 1.0) * T * dF - (obj.gamma + 1.0) * F - obj.sigma;
}

}  // namespace mmcplace
