#pragma once

#include <vector>

#include "inversemf/subshift.hpp"

namespace imf {

struct CylinderInterval {
    Word word;
    double lo = 0.0;
    double hi = 1.0;
    double width = 1.0;  // hi - lo without cancellation
    double diam() const { return width; }
};

// Composition of the inverse branches of w applied to z in [0,1], innermost
// (last letter) first. Every branch is increasing, so endpoints map to
// endpoints.
double apply_inverse(const EnvPath& path, const Word& w, double z);

// U^w = g^{w_0} o ... o g^{w_{n-1}} ([0,1]). Throws DepthUnderflow once the
// diameter drops below 1e-300.
CylinderInterval cylinder_interval(const EnvPath& path, const Word& w);

struct Extrema {
    double m = 0.0;  // min of the attractor piece X^w
    double M = 0.0;  // max of X^w
    double certified_error = 0.0;
};

// Leftmost / rightmost continuation points after every (time, letter),
// built backwards from a base time far enough out that the remaining
// contraction is below tol. Extrema of a parent and of its first / last
// child are computed through the same floating point operations, so sums
// of gaps telescope exactly.
class ExtremaCache {
public:
    ExtremaCache(const EnvPath& path, int t0, int max_end, double tol);

    Extrema extrema(const Word& w) const;
    // min / max of X at time t over words whose first letter may follow
    // `prev` at time t-1 (prev = 0: no constraint)
    double min_at(int t, int prev) const;
    double max_at(int t, int prev) const;
    int base_time() const { return base_; }
    double tol() const { return tol_; }
    // error bound for a word ending at time e
    double error_for_end(int e) const;

private:
    void check_time(int t, int prev) const;
    const EnvPath* path_;
    int t0_;
    int max_end_;
    int base_;
    double tol_;
    std::vector<std::vector<double>> min_after_, max_after_;  // index t - t0 - 1
    std::vector<double> log_rho_suffix_;                      // sum_{j>=t} log rho_j up to base
};

Extrema attractor_extrema(const EnvPath& path, const Word& w, double tol);

struct ProjectedPoint {
    double x = 0.0;
    double err = 0.0;
};

// Point coded by an infinite word, given through a finite prefix: the
// midpoint of the prefix cylinder, with half its diameter as error.
ProjectedPoint project(const EnvPath& path, const Word& prefix);

// Largest branch contraction at time t (max |g'| over letters).
double max_contraction_at(const EnvPath& path, int t);

}  // namespace imf
