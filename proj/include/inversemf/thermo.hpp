#pragma once

#include <string>
#include <vector>

#include "inversemf/potential.hpp"

namespace imf {

enum class Combo { QPsiMinusTPhi, QPhiMinusTPsi, TPsi, PhiOnly };

struct Coeffs {
    double a_psi = 0.0;
    double b_phi = 0.0;
};
Coeffs combo_coeffs(Combo c, double q, double t);

// Finite-depth pressure (1/n) log sum_v exp(sup S_n(a Psi + b Phi)) over the
// admissible words of length n at `offset`. Locally constant models use a
// transfer-matrix product; otherwise the suffix tree of the words is built
// once and re-evaluated for each (a, b).
class PressureEvaluator {
public:
    PressureEvaluator(const EnvPath& path, int offset, int n, double node_cap = 1e8);

    double operator()(double a, double b) const;
    double eval(Combo c, double q, double t) const;
    int n() const { return n_; }
    int offset() const { return offset_; }
    bool transfer() const { return transfer_; }
    const EnvPath& path() const { return *path_; }

private:
    double eval_transfer(double a, double b) const;
    double eval_tree(double a, double b) const;

    struct Node {
        int parent;
        const BranchSpec* br;
        double y0, y1;
        double psi0, psi1, phi0, phi1;
    };

    const EnvPath* path_;
    int offset_;
    int n_;
    bool transfer_;
    // transfer data: per step, per letter
    std::vector<std::vector<double>> psi_, phi_;
    std::vector<const BinMatrix*> adm_;
    // tree data: levels stored contiguously, level j holds suffixes of length j
    std::vector<Node> nodes_;
    std::vector<std::size_t> level_start_;
};

struct PressureEstimate {
    double value = 0.0;
    int n = 0;
    int offset = 0;
    double q_psi = 0.0;  // coefficient of Psi in the combination
    double t_phi = 0.0;  // coefficient of Phi
    double cauchy_gap = 0.0;  // |value - estimate at depth n/2|
};

PressureEstimate pressure(const EnvPath& path, int offset, int n, double q, double t, Combo combo);

// calT(q): P(q Psi - t Phi) = 0; T(q): P(q Phi - t Psi) = 0; Bowen: P(t Psi) = 0.
enum class RootKind { CalT, T, Bowen };

struct RootResult {
    double root = 0.0;
    double residual = 0.0;  // pressure at the returned root
    int evaluations = 0;
};

// Bracket by doubling from [-1, 1], then bisect to width tol * 1e-3.
// Throws BracketFailure once |t| would exceed 1e3.
RootResult pressure_root(const PressureEvaluator& P, double q, RootKind kind, double tol = 1e-9);
double pressure_root(const EnvPath& path, double q, RootKind kind, int n, double tol = 1e-9, int offset = 0);

struct NormalizeOptions {
    int n = 16;
    int offset = 0;
    int horizon = -1;  // default: offset + n
    std::string stream = "main";
    // number of sampled paths the pressure is averaged over; with 1 the
    // shifted potential has pressure exactly 0 on the main path
    int samples = 1;
};

struct NormalizeResult {
    EnvModel model;
    double shift = 0.0;  // subtracted from every phi value
};

// Shifts phi by its estimated pressure. Requires a valid model and throws
// NormalizationBreaksAssumption if the shifted phi no longer has negative mean.
NormalizeResult normalize_phi(const EnvModel& m, const NormalizeOptions& opt = {});

struct SpectrumCurve {
    std::string kind;
    int depth = 0;
    std::string model_hash;
    std::vector<double> x;
    std::vector<double> value;
    std::vector<int> edge;  // 1 where the value comes from the grid boundary
};

std::string to_csv(const SpectrumCurve& c);

std::vector<double> make_grid(double lo, double hi, double step);

// Roots on a q grid, parallel over grid points.
SpectrumCurve root_curve(const PressureEvaluator& P, RootKind kind, const std::vector<double>& q_grid, double tol = 1e-9);

// f*(d) = min over the grid of (d q - f(q)); edge = 1 when the minimum sits
// at the first or last grid point.
SpectrumCurve legendre(const SpectrumCurve& f, const std::vector<double>& d_grid);

struct DualityReport {
    std::vector<double> d, lhs, rhs, diff;
    std::vector<int> excluded;
    double max_discrepancy = 0.0;
    int evaluated = 0;
    bool degenerate = false;
};

// Compares calT*(d) with d * T*(1/d) on d > 0, skipping points where either
// transform sits on the grid boundary. A linear calT is checked only at its
// slope.
DualityReport duality_check(const SpectrumCurve& T_curve, const SpectrumCurve& calT_curve, const std::vector<double>& d_grid);
std::string to_csv(const DualityReport& r);

struct LowerSpectrum {
    double t0 = 0.0;
    double d_star = 0.0;  // left derivative of calT at t0
    double continuity_gap = 0.0;
    SpectrumCurve curve;
};

// Legendre transform of min(calT, 0): t0 d on [0, d_star], calT* beyond.
LowerSpectrum predicted_lower_spectrum(const PressureEvaluator& P, const SpectrumCurve& calT, double t0,
                                       const std::vector<double>& d_grid, double tol = 1e-9);

}  // namespace imf
