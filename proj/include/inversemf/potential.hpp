#pragma once

#include "inversemf/geometry.hpp"

namespace imf {

enum class Which { Psi, Phi };

double eval_psi(const EnvPath& path, int k, int s, double x);
double eval_phi(const EnvPath& path, int k, int s, double x);

// Supremum over y in [y0, y1] of a*psi(y) + b*phi(y) on one branch. psi is
// log-affine in (1+cy) and phi is affine in y, so the maximum is at an
// endpoint or at the single critical point when the combination is concave.
double sup_combo(const BranchSpec& br, double y0, double y1, double a, double b);
inline double inf_combo(const BranchSpec& br, double y0, double y1, double a, double b) {
    return -sup_combo(br, y0, y1, -a, -b);
}

// Normalized-coordinate interval of branch s at time k that contains the
// cylinder U^{s w}, where w is given by its x-interval [lo, hi] at time k+1.
inline void branch_y_interval(const BranchSpec& br, double lo, double hi, double& y0, double& y1) {
    y0 = br.ginv_y(lo);
    y1 = br.ginv_y(hi);
}

struct BirkhoffBounds {
    double sup_sum = 0.0;
    double inf_sum = 0.0;
};

// Bounds on S_n f over the geometric cylinder of w: step i contributes the
// sup / inf of f(time offset+i, letter w_i) over U^{w_i .. w_{n-1}}.
BirkhoffBounds birkhoff_bounds(const EnvPath& path, const Word& w, Which which);
// Same for the combination a*Psi + b*Phi; only the sup is exact per step.
double birkhoff_sup_combo(const EnvPath& path, const Word& w, double a, double b);

bool locally_constant(const EnvModel& m, Which which);

// Tail bound K * L * rho^n / (1 - rho) on the oscillation of the potential
// over depth-(n+1) cylinders, where K is the largest y-Lipschitz constant of
// the potential, L bounds the normalized inverse branch derivative and rho
// is the largest branch contraction.
double variation_modulus(const EnvModel& m, int n, Which which = Which::Phi);

// Bound on sup S_n f - inf S_n f over any depth-n cylinder (n * eps(n)).
// Increasing in n.
double birkhoff_gap_bound(const EnvModel& m, int n, Which which = Which::Phi);
inline double distortion_epsilon(const EnvModel& m, int n, Which which = Which::Phi) {
    return n > 0 ? birkhoff_gap_bound(m, n, which) / n : 0.0;
}

}  // namespace imf
