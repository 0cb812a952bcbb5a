#pragma once

#include <string>
#include <vector>

#include "inversemf/inverse.hpp"
#include "inversemf/thermo.hpp"

namespace imf {

// least-squares slope of y against x
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

// Geometric scale list 2^{log2_max}, 2^{log2_max - step}, ..., 2^{log2_min}.
std::vector<double> scale_range(double log2_max, double log2_min, double log2_step = 1.0);

enum class LqMethod {
    Packing,  // exact max over disjoint closed balls centred on atoms
    Grid,     // cells of side 2r, best of several grid offsets
};

struct LqOptions {
    LqMethod method = LqMethod::Packing;
    int offsets = 4;
    // scales must be at least this multiple of the longest unexpanded interval
    double floor_factor = 1.0;
};

struct LqResult {
    SpectrumCurve tau;
    std::vector<double> scales;
    std::vector<std::vector<double>> log_stat;  // [q][scale]
};

LqResult lq_estimate(const InverseMeasure& nu, const std::vector<double>& q_grid, const std::vector<double>& scales,
                     const LqOptions& opt = {});
std::string to_csv(const LqResult& r);

struct LocalDim {
    double x = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double slope = 0.0;  // fit over the whole tail
};

// Slopes of log nu(B(x, r)) against log r on sliding windows of `window`
// consecutive scales within the smaller half of the scale list.
std::vector<LocalDim> local_dims(const InverseMeasure& nu, const std::vector<double>& xs, const std::vector<double>& scales,
                                 int window = 3);
std::string to_csv(const std::vector<LocalDim>& v, const std::string& tag);

struct AlphaValue {
    double alpha = 0.0;      // sup S Psi / log |I^v|
    double surrogate = 0.0;  // sup S Psi / sup S Phi
    double log_length = 0.0;
};

AlphaValue alpha_of(const MassFn& mass, const EnvPath& path, const Word& v);

// Word x|n of the I-partition containing x, with the interval chain.
struct Location {
    Word word;
    std::vector<double> lo, hi;  // I^{x|j} for j = 0..n
    // atoms bounding I^{x|j} (NaN where the bound is 0 or 1)
    std::vector<double> left_atom, right_atom;
    // distance from x to the nearest sibling boundary inside I^{x|j}
    // (NaN when x|j has a single child)
    std::vector<double> nearest_internal;
};

Location locate(const MassFn& mass, const EnvPath& path, int offset, double x, int n, double collision_tol = 1e-14);

struct ApproxDegree {
    std::vector<int> n;
    std::vector<double> xi;      // sup over next-level atoms of log|x - x^{vs}| / log l^v
    std::vector<double> xi_hat;  // log dist(x, atoms of generation <= n) / log |I^{x|n}|
    double xi_tail = 0.0;        // max of xi over [n/2, n]
    double xi_hat_tail = 0.0;    // min of xi_hat over [n/2, n]
};

ApproxDegree approx_degree(const MassFn& mass, const EnvPath& path, int offset, double x, int n_max, double collision_tol = 1e-14);

struct UbiquityBall {
    Word word;
    double center = 0.0;
    double radius = 0.0;
    double ratio = 0.0;
};

// Words v of length n whose ratio sup S Psi / sup S Phi is within eps of d,
// each giving the ball around its designated atom with radius (l^v)^xi.
std::vector<UbiquityBall> ubiquity_sample(const MassFn& mass, const EnvPath& path, int offset, double d, double xi, int n,
                                          double eps = -1.0, int lookahead = 3);

struct BoxDimension {
    double dimension = 0.0;
    std::vector<double> scales;
    std::vector<double> counts;
};

BoxDimension box_dimension(const EnvPath& path, int offset, int depth, const std::vector<double>& scales);

// mu-typical points of nu-space: descend the cylinders choosing children in
// proportion to their mass, then a uniform point of the final interval.
std::vector<double> sample_points(const MassFn& mass, const EnvPath& path, int offset, int count, int depth,
                                  const std::string& stream);

// alpha at the first depth where |I^{x|n}| <= r
AlphaValue alpha_at_point(const MassFn& mass, const EnvPath& path, int offset, double x, double r, int max_depth = 200);

}  // namespace imf
