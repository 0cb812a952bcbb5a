#include "inversemf/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "inversemf/errors.hpp"
#include "inversemf/format.hpp"
#include "inversemf/parallel.hpp"

namespace imf {

Coeffs combo_coeffs(Combo c, double q, double t) {
    switch (c) {
        case Combo::QPsiMinusTPhi: return {q, -t};
        case Combo::QPhiMinusTPsi: return {-t, q};
        case Combo::TPsi: return {t, 0.0};
        case Combo::PhiOnly: return {0.0, 1.0};
    }
    return {};
}

namespace {

double suffix_node_count(const EnvPath& path, int offset, int n) {
    // sum over j of the number of admissible words of length j ending at offset+n
    double total = 0.0;
    std::vector<double> u(static_cast<std::size_t>(path.alphabet(offset + n - 1)), 1.0);
    total += static_cast<double>(u.size());
    for (int t = offset + n - 2; t >= offset; --t) {
        const auto& a = path.adm(t);
        std::vector<double> v(a.size(), 0.0);
        for (std::size_t s = 0; s < a.size(); ++s)
            for (std::size_t s2 = 0; s2 < a[s].size(); ++s2)
                if (a[s][s2]) v[s] += u[s2];
        u.swap(v);
        for (double x : u) total += x;
    }
    return total;
}

}  // namespace

PressureEvaluator::PressureEvaluator(const EnvPath& path, int offset, int n, double node_cap)
    : path_(&path), offset_(offset), n_(n) {
    if (n < 1) fail(ErrorKind::InvalidArgument, "pressure depth must be positive");
    path.require_horizon(offset + n, "pressure");
    transfer_ = locally_constant(*path.model, Which::Psi) && locally_constant(*path.model, Which::Phi);
    if (transfer_) {
        psi_.resize(static_cast<std::size_t>(n));
        phi_.resize(static_cast<std::size_t>(n));
        adm_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int t = offset + i;
            for (const auto& br : path.at(t).branches) {
                psi_[i].push_back(br.psi_y(0.0));
                phi_[i].push_back(br.phi_y(0.0));
            }
            adm_[i] = (i + 1 < n) ? &path.adm(t) : nullptr;
        }
        return;
    }
    const double count = suffix_node_count(path, offset, n);
    if (count > node_cap)
        fail(ErrorKind::ResourceGuard, "pressure enumeration needs " + fmt_double(count) + " cylinders, cap " + fmt_double(node_cap));
    nodes_.reserve(static_cast<std::size_t>(count));
    level_start_.push_back(0);
    std::vector<double> plo{0.0}, phi_x{1.0}, nlo, nhi;
    std::vector<int> pletter{0}, nletter;
    // level j occupies [level_start_[j-1], level_start_[j]); the root is index -1
    for (int j = 1; j <= n; ++j) {
        const int t = offset + n - j;
        const std::size_t prev_start = j == 1 ? 0 : level_start_[static_cast<std::size_t>(j) - 2];
        const std::size_t prev_count = pletter.size();
        nlo.clear();
        nhi.clear();
        nletter.clear();
        for (std::size_t p = 0; p < prev_count; ++p) {
            for (int s = 1; s <= path.alphabet(t); ++s) {
                if (j > 1 && !path.allowed(t, s, pletter[p])) continue;
                const BranchSpec& br = path.branch(t, s);
                Node nd;
                nd.parent = j == 1 ? -1 : static_cast<int>(prev_start + p);
                nd.br = &br;
                branch_y_interval(br, plo[p], phi_x[p], nd.y0, nd.y1);
                nd.psi0 = br.psi_y(nd.y0);
                nd.psi1 = br.psi_y(nd.y1);
                nd.phi0 = br.phi_y(nd.y0);
                nd.phi1 = br.phi_y(nd.y1);
                nodes_.push_back(nd);
                nlo.push_back(br.a + br.width() * nd.y0);
                nhi.push_back(br.a + br.width() * nd.y1);
                nletter.push_back(s);
            }
        }
        level_start_.push_back(nodes_.size());
        plo.swap(nlo);
        phi_x.swap(nhi);
        pletter.swap(nletter);
    }
}

double PressureEvaluator::operator()(double a, double b) const { return transfer_ ? eval_transfer(a, b) : eval_tree(a, b); }

double PressureEvaluator::eval(Combo c, double q, double t) const {
    Coeffs k = combo_coeffs(c, q, t);
    return (*this)(k.a_psi, k.b_phi);
}

double PressureEvaluator::eval_transfer(double a, double b) const {
    // u_i[s] = sum over admissible continuations of exp(weights), scaled by exp(-log_scale)
    double log_scale = 0.0;
    std::vector<double> u, v;
    for (int i = n_ - 1; i >= 0; --i) {
        const auto& ps = psi_[i];
        const auto& ph = phi_[i];
        const std::size_t l = ps.size();
        std::vector<double> e(l);
        double emax = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < l; ++s) {
            e[s] = (a != 0.0 ? a * ps[s] : 0.0) + (b != 0.0 ? b * ph[s] : 0.0);
            emax = std::max(emax, e[s]);
        }
        v.assign(l, 0.0);
        double vmax = 0.0;
        for (std::size_t s = 0; s < l; ++s) {
            double acc;
            if (i == n_ - 1) {
                acc = 1.0;
            } else {
                acc = 0.0;
                const auto& row = (*adm_[i])[s];
                for (std::size_t s2 = 0; s2 < row.size(); ++s2)
                    if (row[s2]) acc += u[s2];
            }
            v[s] = std::exp(e[s] - emax) * acc;
            vmax = std::max(vmax, v[s]);
        }
        for (double& x : v) x /= vmax;
        log_scale += emax + std::log(vmax);
        u.swap(v);
    }
    double total = 0.0;
    for (double x : u) total += x;
    return (log_scale + std::log(total)) / n_;
}

double PressureEvaluator::eval_tree(double a, double b) const {
    std::vector<double> cum(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& nd = nodes_[i];
        double f = std::max(a * nd.psi0 + b * nd.phi0, a * nd.psi1 + b * nd.phi1);
        const BranchSpec& br = *nd.br;
        if (a > 0.0 && br.map == MapKind::Moebius && br.c != 0.0 && br.phi.kind == ProfileKind::Lipschitz &&
            b * br.phi.slope != 0.0)
            f = std::max(f, sup_combo(br, nd.y0, nd.y1, a, b));
        cum[i] = (nd.parent >= 0 ? cum[static_cast<std::size_t>(nd.parent)] : 0.0) + f;
    }
    const std::size_t lo = level_start_[static_cast<std::size_t>(n_) - 1], hi = level_start_[static_cast<std::size_t>(n_)];
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i < hi; ++i) mx = std::max(mx, cum[i]);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += std::exp(cum[i] - mx);
    return (mx + std::log(s)) / n_;
}

PressureEstimate pressure(const EnvPath& path, int offset, int n, double q, double t, Combo combo) {
    if (n < 4) fail(ErrorKind::InvalidArgument, "pressure needs n >= 4");
    PressureEvaluator P(path, offset, n);
    const Coeffs c = combo_coeffs(combo, q, t);
    PressureEstimate e;
    e.value = P.eval(combo, q, t);
    e.n = n;
    e.offset = offset;
    e.q_psi = c.a_psi;
    e.t_phi = c.b_phi;
    e.cauchy_gap = std::abs(e.value - PressureEvaluator(path, offset, n / 2).eval(combo, q, t));
    return e;
}

RootResult pressure_root(const PressureEvaluator& P, double q, RootKind kind, double tol) {
    RootResult res;
    // g is increasing in t for every kind
    auto g = [&](double t) {
        ++res.evaluations;
        switch (kind) {
            case RootKind::CalT: return P.eval(Combo::QPsiMinusTPhi, q, t);
            case RootKind::T: return P.eval(Combo::QPhiMinusTPsi, q, t);
            case RootKind::Bowen: return -P.eval(Combo::TPsi, 0.0, t);
        }
        return 0.0;
    };
    double lo = -1.0, hi = 1.0;
    double glo = g(lo), ghi = g(hi);
    while (glo > 0.0) {
        hi = lo;
        ghi = glo;
        lo *= 2.0;
        if (std::abs(lo) > 1e3) fail(ErrorKind::BracketFailure, "no sign change for t >= -1e3 at q = " + fmt_double(q));
        glo = g(lo);
    }
    while (ghi < 0.0) {
        lo = hi;
        glo = ghi;
        hi *= 2.0;
        if (std::abs(hi) > 1e3) fail(ErrorKind::BracketFailure, "no sign change for t <= 1e3 at q = " + fmt_double(q));
        ghi = g(hi);
    }
    if (!std::isfinite(glo) || !std::isfinite(ghi)) fail(ErrorKind::BracketFailure, "pressure not finite on the bracket");
    const double width = tol * 1e-3;
    double mid = 0.5 * (lo + hi), gm = 0.0;
    for (int it = 0; it < 200 && hi - lo > width; ++it) {
        mid = 0.5 * (lo + hi);
        gm = g(mid);
        if (gm == 0.0) {
            lo = hi = mid;
            break;
        }
        if (gm < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    res.root = 0.5 * (lo + hi);
    res.residual = g(res.root);
    if (kind == RootKind::Bowen) res.residual = -res.residual;
    return res;
}

double pressure_root(const EnvPath& path, double q, RootKind kind, int n, double tol, int offset) {
    PressureEvaluator P(path, offset, n);
    return pressure_root(P, q, kind, tol).root;
}

NormalizeResult normalize_phi(const EnvModel& m, const NormalizeOptions& opt) {
    require_valid(m);
    auto shared = std::make_shared<EnvModel>(m);
    const int horizon = opt.horizon >= 0 ? opt.horizon : opt.offset + opt.n;
    double total = 0.0;
    const int samples = std::max(1, opt.samples);
    for (int i = 0; i < samples; ++i) {
        const std::string label = i == 0 ? opt.stream : opt.stream + "/" + std::to_string(i);
        EnvPath path = sample_path(shared, horizon, label);
        PressureEvaluator P(path, opt.offset, opt.n);
        total += P(0.0, 1.0);
    }
    NormalizeResult out;
    out.shift = total / samples;
    out.model = m;
    for (auto& st : out.model.states)
        for (auto& br : st.branches) br.phi.value -= out.shift;
    ValidationReport rep = validate_model(out.model);
    if (!(rep.c_phi > 0.0))
        fail(ErrorKind::NormalizationBreaksAssumption,
             "phi shifted by " + fmt_double(-out.shift) + " has c_phi = " + fmt_double(rep.c_phi));
    return out;
}

std::string to_csv(const SpectrumCurve& c) {
    std::ostringstream os;
    os << "# kind,depth,model_hash\n";
    os << "# " << c.kind << "," << c.depth << "," << c.model_hash << "\n";
    os << "x,value,edge_flag\n";
    for (std::size_t i = 0; i < c.x.size(); ++i)
        os << fmt_double(c.x[i]) << "," << fmt_double(c.value[i]) << "," << (i < c.edge.size() ? c.edge[i] : 0) << "\n";
    return os.str();
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) fail(ErrorKind::InvalidArgument, "bad grid specification");
    std::vector<double> g;
    const long n = std::lround(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
    return g;
}

SpectrumCurve root_curve(const PressureEvaluator& P, RootKind kind, const std::vector<double>& q_grid, double tol) {
    SpectrumCurve c;
    c.kind = kind == RootKind::CalT ? "calT" : kind == RootKind::T ? "T" : "bowen";
    c.depth = P.n();
    c.model_hash = model_hash(*P.path().model);
    c.x = q_grid;
    c.value.assign(q_grid.size(), 0.0);
    c.edge.assign(q_grid.size(), 0);
    parallel_for(q_grid.size(), [&](std::size_t i) { c.value[i] = pressure_root(P, q_grid[i], kind, tol).root; });
    return c;
}

SpectrumCurve legendre(const SpectrumCurve& f, const std::vector<double>& d_grid) {
    if (f.x.empty()) fail(ErrorKind::InvalidArgument, "legendre of an empty curve");
    SpectrumCurve out;
    out.kind = f.kind + "_legendre";
    out.depth = f.depth;
    out.model_hash = f.model_hash;
    out.x = d_grid;
    for (double d : d_grid) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < f.x.size(); ++i) {
            double v = d * f.x[i] - f.value[i];
            if (v < best) {
                best = v;
                arg = i;
            }
        }
        out.value.push_back(best);
        out.edge.push_back(arg == 0 || arg + 1 == f.x.size() ? 1 : 0);
    }
    return out;
}

DualityReport duality_check(const SpectrumCurve& T_curve, const SpectrumCurve& calT_curve, const std::vector<double>& d_grid) {
    DualityReport r;
    // slope range of calT decides whether the curve is affine
    double smin = std::numeric_limits<double>::infinity(), smax = -smin, ssum = 0.0;
    for (std::size_t i = 0; i + 1 < calT_curve.x.size(); ++i) {
        double s = (calT_curve.value[i + 1] - calT_curve.value[i]) / (calT_curve.x[i + 1] - calT_curve.x[i]);
        smin = std::min(smin, s);
        smax = std::max(smax, s);
        ssum += s;
    }
    std::vector<double> ds;
    if (calT_curve.x.size() >= 2 && smax - smin < 1e-6) {
        r.degenerate = true;
        ds.push_back(ssum / static_cast<double>(calT_curve.x.size() - 1));
    } else {
        for (double d : d_grid)
            if (d > 0.0) ds.push_back(d);
    }
    std::vector<double> inv;
    for (double d : ds) inv.push_back(1.0 / d);
    SpectrumCurve L1 = legendre(calT_curve, ds);
    SpectrumCurve L2 = legendre(T_curve, inv);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double lhs = L1.value[i], rhs = ds[i] * L2.value[i];
        const bool excl = !r.degenerate && (L1.edge[i] || L2.edge[i]);
        r.d.push_back(ds[i]);
        r.lhs.push_back(lhs);
        r.rhs.push_back(rhs);
        r.diff.push_back(std::abs(lhs - rhs));
        r.excluded.push_back(excl ? 1 : 0);
        if (!excl) {
            ++r.evaluated;
            r.max_discrepancy = std::max(r.max_discrepancy, std::abs(lhs - rhs));
        }
    }
    return r;
}

std::string to_csv(const DualityReport& r) {
    std::ostringstream os;
    os << "d,calT_legendre,d_times_T_legendre_at_inverse,abs_diff,excluded\n";
    for (std::size_t i = 0; i < r.d.size(); ++i)
        os << fmt_double(r.d[i]) << "," << fmt_double(r.lhs[i]) << "," << fmt_double(r.rhs[i]) << "," << fmt_double(r.diff[i])
           << "," << r.excluded[i] << "\n";
    return os.str();
}

LowerSpectrum predicted_lower_spectrum(const PressureEvaluator& P, const SpectrumCurve& calT, double t0,
                                       const std::vector<double>& d_grid, double tol) {
    LowerSpectrum out;
    out.t0 = t0;
    const double h = 1e-4;
    const double left = pressure_root(P, t0 - h, RootKind::CalT, tol).root;
    const double at = pressure_root(P, t0, RootKind::CalT, tol).root;
    out.d_star = (at - left) / h;
    SpectrumCurve L = legendre(calT, d_grid);
    SpectrumCurve at_star = legendre(calT, {out.d_star});
    out.continuity_gap = std::abs(t0 * out.d_star - at_star.value[0]);
    out.curve.kind = "lower_spectrum_predicted";
    out.curve.depth = calT.depth;
    out.curve.model_hash = calT.model_hash;
    out.curve.x = d_grid;
    for (std::size_t i = 0; i < d_grid.size(); ++i) {
        const double d = d_grid[i];
        if (d <= out.d_star) {
            out.curve.value.push_back(t0 * d);
            out.curve.edge.push_back(0);
        } else {
            out.curve.value.push_back(L.value[i]);
            out.curve.edge.push_back(L.edge[i]);
        }
    }
    return out;
}

}  // namespace imf
