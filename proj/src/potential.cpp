#include "inversemf/potential.hpp"

#include <algorithm>
#include <cmath>

#include "inversemf/errors.hpp"

namespace imf {

double eval_psi(const EnvPath& path, int k, int s, double x) { return path.branch(k, s).psi(x); }

double eval_phi(const EnvPath& path, int k, int s, double x) {
    const BranchSpec& br = path.branch(k, s);
    return br.phi_y(br.to_y(x));
}

double sup_combo(const BranchSpec& br, double y0, double y1, double a, double b) {
    auto f = [&](double y) {
        double v = 0.0;
        if (a != 0.0) v += a * br.psi_y(y);
        if (b != 0.0) v += b * br.phi_y(y);
        return v;
    };
    double best = std::max(f(y0), f(y1));
    // interior critical point: 2ac/(1+cy) + b*slope = 0, a local max when a > 0
    if (br.map == MapKind::Moebius && br.c != 0.0 && a > 0.0 && br.phi.kind == ProfileKind::Lipschitz &&
        b * br.phi.slope != 0.0) {
        const double bs = b * br.phi.slope;
        const double one_cy = -2.0 * a * br.c / bs;
        const double y = (one_cy - 1.0) / br.c;
        if (y > y0 && y < y1) best = std::max(best, f(y));
    }
    return best;
}

namespace {

template <class StepFn>
void walk_steps(const EnvPath& path, const Word& w, StepFn&& step) {
    // suffix cylinders from the back: U^{w_i..w_{n-1}} = g^{w_i}(U^{w_{i+1}..})
    double lo = 0.0, hi = 1.0;
    for (std::size_t i = w.letters.size(); i-- > 0;) {
        const BranchSpec& br = path.branch(w.offset + static_cast<int>(i), w.letters[i]);
        double y0, y1;
        branch_y_interval(br, lo, hi, y0, y1);
        step(br, y0, y1);
        lo = br.a + br.width() * y0;
        hi = br.a + br.width() * y1;
    }
}

}  // namespace

BirkhoffBounds birkhoff_bounds(const EnvPath& path, const Word& w, Which which) {
    std::string why;
    if (!is_admissible(path, w, &why)) fail(ErrorKind::InvalidArgument, "word " + to_string(w) + " not admissible: " + why);
    const double a = which == Which::Psi ? 1.0 : 0.0;
    const double b = which == Which::Phi ? 1.0 : 0.0;
    BirkhoffBounds out;
    walk_steps(path, w, [&](const BranchSpec& br, double y0, double y1) {
        out.sup_sum += sup_combo(br, y0, y1, a, b);
        out.inf_sum += inf_combo(br, y0, y1, a, b);
    });
    return out;
}

double birkhoff_sup_combo(const EnvPath& path, const Word& w, double a, double b) {
    double s = 0.0;
    walk_steps(path, w, [&](const BranchSpec& br, double y0, double y1) { s += sup_combo(br, y0, y1, a, b); });
    return s;
}

bool locally_constant(const EnvModel& m, Which which) {
    for (const auto& st : m.states)
        for (const auto& br : st.branches) {
            if (which == Which::Psi && !br.locally_constant_psi()) return false;
            if (which == Which::Phi && !br.locally_constant_phi()) return false;
        }
    return true;
}

namespace {

struct ModulusConstants {
    double K = 0.0;    // y-Lipschitz constant of the potential
    double L = 1.0;    // bound on the normalized inverse derivative
    double rho = 0.0;  // largest contraction
};

ModulusConstants modulus_constants(const EnvModel& m, Which which) {
    ModulusConstants mc;
    for (const auto& st : m.states)
        for (const auto& br : st.branches) {
            mc.rho = std::max(mc.rho, br.max_contraction());
            if (br.map == MapKind::Moebius) mc.L = std::max(mc.L, std::max(1.0 + br.c, 1.0 / (1.0 + br.c)));
            if (which == Which::Phi && br.phi.kind == ProfileKind::Lipschitz)
                mc.K = std::max(mc.K, std::abs(br.phi.slope));
            if (which == Which::Psi && br.map == MapKind::Moebius)
                mc.K = std::max(mc.K, 2.0 * std::abs(br.c) / (1.0 - std::abs(br.c)));
        }
    return mc;
}

}  // namespace

double variation_modulus(const EnvModel& m, int n, Which which) {
    if (n < 0) fail(ErrorKind::InvalidArgument, "variation_modulus needs n >= 0");
    ModulusConstants mc = modulus_constants(m, which);
    if (mc.K == 0.0) return 0.0;
    if (!(mc.rho < 1.0)) fail(ErrorKind::InvalidModel, "branches must contract for a geometric modulus");
    return mc.K * mc.L * std::pow(mc.rho, n) / (1.0 - mc.rho);
}

double birkhoff_gap_bound(const EnvModel& m, int n, Which which) {
    ModulusConstants mc = modulus_constants(m, which);
    if (mc.K == 0.0) return 0.0;
    // step i of a depth-n word varies over y-width <= min(1, L rho^{n-1-i})
    double s = 0.0, r = 1.0;
    for (int j = 0; j < n; ++j) {
        s += mc.K * std::min(1.0, mc.L * r);
        r *= mc.rho;
    }
    return s;
}

}  // namespace imf
