#pragma once

#include "mmcplace/predictor.hpp"

namespace mmcplace {

/// theta(T) = ((Gamma + 1) F(T) + sigma) / T.
struct WindowObjective {
  double gamma = 1.5;  // competitive-ratio parameter, >= 1
  double sigma = 2.0;  // largest per-slot actual migration cost, >= 0
  ErrorBound bound = ErrorBound::zero();
};

double theta(const WindowObjective& obj, int T);

/// Binary search over {1..T_max} using the sign of theta(T+1) - theta(T).
int optimal_window_binary_search(const WindowObjective& obj, int T_max);

/// Exhaustive argmin of theta over {1..T_max}; lowest T on ties.
int optimal_window_scan(const WindowObjective& obj, int T_max);

struct ClosedFormWindow {
  double T0 = 0.0;
  int T_star = 1;
};

/// Power-law errors: T0 = (sigma / ((Gamma + 1) beta (alpha - 1)))^(1/alpha),
/// T* the better of max(1, floor T0) and ceil T0.
ClosedFormWindow closed_form_T0(double gamma, double sigma, double beta, double alpha);

/// (Gamma + 1) T (F(T+1) - F(T)) - (Gamma + 1) F(T) - sigma.
double phi_discrete(const WindowObjective& obj, int T);

}  // namespace mmcplace
