#include "inversemf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "inversemf/errors.hpp"
#include "inversemf/format.hpp"
#include "inversemf/parallel.hpp"
#include "inversemf/rng.hpp"

namespace imf {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

std::vector<double> scale_range(double log2_max, double log2_min, double log2_step) {
    if (!(log2_step > 0.0) || log2_min > log2_max) fail(ErrorKind::InvalidArgument, "bad scale range");
    std::vector<double> out;
    const long n = std::lround(std::floor((log2_max - log2_min) / log2_step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(std::exp2(log2_max - static_cast<double>(i) * log2_step));
    return out;
}

namespace {

void log_stat_packing(const std::vector<double>& pos, const std::vector<double>& w, const std::vector<long double>& prefix,
                        double r, const std::vector<double>& qs, std::vector<double>& out) {
    const std::size_t n = pos.size();
    std::vector<double> logb(n);
    std::vector<std::size_t> pred(n);
    std::size_t lo = 0, hi = 0, pl = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (pos[lo] < pos[i] - r) ++lo;
        if (hi < i) hi = i;
        while (hi + 1 < n && pos[hi + 1] <= pos[i] + r) ++hi;
        double b;
        if (hi + 1 - lo <= 32) {
            b = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) b += w[j];
        } else {
            b = static_cast<double>(prefix[hi + 1] - prefix[lo]);
        }
        logb[i] = std::log(std::max(b, w[i]));
        // closed balls of radius r are disjoint iff the centres are more than 2r apart
        while (pos[pl] < pos[i] - 2.0 * r) ++pl;
        pred[i] = pl;
    }
    std::vector<double> dp(n + 1);
    for (std::size_t k = 0; k < qs.size(); ++k) {
        const double q = qs[k];
        double shift = -std::numeric_limits<double>::infinity();
        for (double lb : logb) shift = std::max(shift, q * lb);
        dp[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) dp[i + 1] = std::max(dp[i], std::exp(q * logb[i] - shift) + dp[pred[i]]);
        out[k] = shift + std::log(dp[n]);
    }
}

void log_stat_grid(const std::vector<double>& pos, const std::vector<double>& w, double r, int offsets,
                   const std::vector<double>& qs, std::vector<double>& out) {
    const double side = 2.0 * r;
    std::fill(out.begin(), out.end(), -std::numeric_limits<double>::infinity());
    for (int o = 0; o < offsets; ++o) {
        const double shift0 = side * o / offsets;
        std::vector<double> cells;
        long cur = std::numeric_limits<long>::min();
        for (std::size_t i = 0; i < pos.size(); ++i) {
            long c = static_cast<long>(std::floor((pos[i] + shift0) / side));
            if (c != cur) {
                cells.push_back(0.0);
                cur = c;
            }
            cells.back() += w[i];
        }
        for (std::size_t k = 0; k < qs.size(); ++k) {
            double mx = -std::numeric_limits<double>::infinity();
            for (double m : cells) mx = std::max(mx, qs[k] * std::log(m));
            double s = 0.0;
            for (double m : cells) s += std::exp(qs[k] * std::log(m) - mx);
            out[k] = std::max(out[k], mx + std::log(s));
        }
    }
}

}  // namespace

LqResult lq_estimate(const InverseMeasure& nu, const std::vector<double>& q_grid, const std::vector<double>& scales,
                     const LqOptions& opt) {
    if (scales.size() < 2) fail(ErrorKind::InvalidArgument, "lq_estimate needs at least two scales");
    if (nu.size() == 0) fail(ErrorKind::InvalidArgument, "lq_estimate needs a non-empty atom list");
    for (double r : scales)
        if (r < opt.floor_factor * nu.max_leaf_length())
            fail(ErrorKind::ScaleBelowFloor, "scale " + fmt_double(r) + " is below the truncation floor " +
                                                 fmt_double(opt.floor_factor * nu.max_leaf_length()));
    const auto& pos = nu.positions();
    const auto& w = nu.weights();
    std::vector<long double> prefix(pos.size() + 1, 0.0L);
    for (std::size_t i = 0; i < pos.size(); ++i) prefix[i + 1] = prefix[i] + static_cast<long double>(w[i]);

    LqResult res;
    res.scales = scales;
    std::vector<std::vector<double>> by_scale(scales.size(), std::vector<double>(q_grid.size()));
    parallel_for(scales.size(), [&](std::size_t j) {
        if (opt.method == LqMethod::Packing)
            log_stat_packing(pos, w, prefix, scales[j], q_grid, by_scale[j]);
        else
            log_stat_grid(pos, w, scales[j], opt.offsets, q_grid, by_scale[j]);
    });
    std::vector<double> lr;
    for (double r : scales) lr.push_back(std::log(r));
    res.tau.kind = opt.method == LqMethod::Packing ? "tau_hat_packing" : "tau_hat_grid";
    res.tau.x = q_grid;
    res.log_stat.assign(q_grid.size(), std::vector<double>(scales.size()));
    for (std::size_t k = 0; k < q_grid.size(); ++k) {
        for (std::size_t j = 0; j < scales.size(); ++j) res.log_stat[k][j] = by_scale[j][k];
        res.tau.value.push_back(ls_slope(lr, res.log_stat[k]));
        res.tau.edge.push_back(0);
    }
    return res;
}

std::string to_csv(const LqResult& r) {
    std::ostringstream os;
    os << "q,tau_hat";
    for (double s : r.scales) os << ",log_stat_r=" << fmt_double(s);
    os << "\n";
    for (std::size_t k = 0; k < r.tau.x.size(); ++k) {
        os << fmt_double(r.tau.x[k]) << "," << fmt_double(r.tau.value[k]);
        for (double v : r.log_stat[k]) os << "," << fmt_double(v);
        os << "\n";
    }
    return os.str();
}

std::vector<LocalDim> local_dims(const InverseMeasure& nu, const std::vector<double>& xs, const std::vector<double>& scales,
                                 int window) {
    std::vector<double> sc = scales;
    std::sort(sc.begin(), sc.end(), std::greater<double>());
    const std::size_t K = sc.size();
    if (K < 2) fail(ErrorKind::InvalidArgument, "local_dims needs at least two scales");
    const std::size_t start = K / 2;
    const std::size_t tail = K - start;
    const std::size_t win = std::min<std::size_t>(std::max(window, 2), tail);
    std::vector<LocalDim> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
        LocalDim d;
        d.x = xs[i];
        std::vector<double> lr, lm;
        for (std::size_t j = start; j < K; ++j) {
            lr.push_back(std::log(sc[j]));
            const double m = nu.ball(xs[i], sc[j]);
            lm.push_back(m > 0.0 ? std::log(m) : -std::numeric_limits<double>::infinity());
        }
        d.slope = ls_slope(lr, lm);
        d.lower = std::numeric_limits<double>::infinity();
        d.upper = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a + win <= tail; ++a) {
            std::vector<double> x(lr.begin() + static_cast<std::ptrdiff_t>(a), lr.begin() + static_cast<std::ptrdiff_t>(a + win));
            std::vector<double> y(lm.begin() + static_cast<std::ptrdiff_t>(a), lm.begin() + static_cast<std::ptrdiff_t>(a + win));
            double s = ls_slope(x, y);
            if (std::isnan(s)) s = std::numeric_limits<double>::infinity();
            d.lower = std::min(d.lower, s);
            d.upper = std::max(d.upper, s);
        }
        out[i] = d;
    });
    return out;
}

std::string to_csv(const std::vector<LocalDim>& v, const std::string& tag) {
    std::ostringstream os;
    os << "tag,x,lower,upper,slope\n";
    for (const auto& d : v)
        os << tag << "," << fmt_double(d.x) << "," << fmt_double(d.lower) << "," << fmt_double(d.upper) << "," << fmt_double(d.slope)
           << "\n";
    return os.str();
}

AlphaValue alpha_of(const MassFn& mass, const EnvPath& path, const Word& v) {
    if (v.empty()) fail(ErrorKind::InvalidArgument, "alpha_of needs a non-empty word");
    AlphaValue a;
    const double psi = birkhoff_bounds(path, v, Which::Psi).sup_sum;
    const double phi = birkhoff_bounds(path, v, Which::Phi).sup_sum;
    a.log_length = std::log(mass(v));
    a.alpha = psi / a.log_length;
    a.surrogate = psi / phi;
    return a;
}

Location locate(const MassFn& mass, const EnvPath& path, int offset, double x, int n, double collision_tol) {
    if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::InvalidArgument, "point outside [0,1]");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Location loc;
    loc.word.offset = offset;
    loc.lo.push_back(0.0);
    loc.hi.push_back(1.0);
    loc.left_atom.push_back(nan);
    loc.right_atom.push_back(nan);
    for (int j = 0; j < n; ++j) {
        const int t = offset + j;
        const std::vector<int> kids = next_letters(path, t, loc.word.empty() ? 0 : loc.word.last());
        std::vector<double> b{loc.lo.back()};
        for (int s : kids) b.push_back(b.back() + mass(loc.word.child(s)));
        b.back() = loc.hi.back();
        double nearest = nan;
        for (std::size_t i = 1; i + 1 < b.size(); ++i) {
            const double dist = std::abs(x - b[i]);
            if (dist <= collision_tol)
                fail(ErrorKind::AtomCollision, "point " + fmt_double(x) + " sits on an atom of generation " + std::to_string(j));
            if (std::isnan(nearest) || dist < nearest) nearest = dist;
        }
        loc.nearest_internal.push_back(nearest);
        std::size_t pick = kids.size() - 1;
        for (std::size_t i = 0; i + 1 < kids.size(); ++i)
            if (x < b[i + 1]) {
                pick = i;
                break;
            }
        loc.word.letters.push_back(kids[pick]);
        loc.lo.push_back(b[pick]);
        loc.hi.push_back(b[pick + 1]);
        loc.left_atom.push_back(pick > 0 ? b[pick] : loc.left_atom.back());
        loc.right_atom.push_back(pick + 1 < kids.size() ? b[pick + 1] : loc.right_atom.back());
    }
    return loc;
}

ApproxDegree approx_degree(const MassFn& mass, const EnvPath& path, int offset, double x, int n_max, double collision_tol) {
    if (n_max < 1) fail(ErrorKind::InvalidArgument, "approx_degree needs n >= 1");
    Location loc = locate(mass, path, offset, x, n_max + 1, collision_tol);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ApproxDegree out;
    for (int j = 1; j <= n_max; ++j) {
        const double len = loc.hi[j] - loc.lo[j];
        out.n.push_back(j);
        const double ni = loc.nearest_internal[static_cast<std::size_t>(j)];
        out.xi.push_back(std::isnan(ni) || 2.0 * len >= 1.0 ? nan : std::log(ni) / std::log(2.0 * len));
        double dist = nan;
        for (double a : {loc.left_atom[j + 1], loc.right_atom[j + 1]})
            if (!std::isnan(a)) dist = std::isnan(dist) ? std::abs(x - a) : std::min(dist, std::abs(x - a));
        out.xi_hat.push_back(std::isnan(dist) || len >= 1.0 ? nan : std::log(dist) / std::log(len));
    }
    out.xi_tail = -std::numeric_limits<double>::infinity();
    out.xi_hat_tail = std::numeric_limits<double>::infinity();
    for (int j = std::max(1, n_max / 2); j <= n_max; ++j) {
        const double a = out.xi[static_cast<std::size_t>(j - 1)], b = out.xi_hat[static_cast<std::size_t>(j - 1)];
        if (!std::isnan(a)) out.xi_tail = std::max(out.xi_tail, a);
        if (!std::isnan(b)) out.xi_hat_tail = std::min(out.xi_hat_tail, b);
    }
    return out;
}

std::vector<UbiquityBall> ubiquity_sample(const MassFn& mass, const EnvPath& path, int offset, double d, double xi, int n,
                                          double eps, int lookahead) {
    if (n < 1) fail(ErrorKind::InvalidArgument, "ubiquity_sample needs n >= 1");
    if (eps < 0.0) eps = 4.0 / std::sqrt(static_cast<double>(n));
    std::vector<Word> chosen;
    std::vector<double> ratios;
    WordCursor cur(path, offset, n);
    while (cur.next()) {
        const Word& v = cur.word();
        const double ratio = birkhoff_bounds(path, v, Which::Psi).sup_sum / birkhoff_bounds(path, v, Which::Phi).sup_sum;
        if (std::abs(ratio - d) <= eps) {
            chosen.push_back(v);
            ratios.push_back(ratio);
        }
    }
    if (chosen.empty()) fail(ErrorKind::EmptySelection, "no word of length " + std::to_string(n) + " has ratio within " + fmt_double(eps) + " of " + fmt_double(d));
    std::vector<UbiquityBall> out(chosen.size());
    parallel_for(chosen.size(), [&](std::size_t i) {
        UbiquityBall b;
        b.word = chosen[i];
        b.ratio = ratios[i];
        b.center = designated_atom(mass, path, chosen[i], lookahead).position;
        b.radius = std::pow(2.0 * mass(chosen[i]), xi);
        out[i] = b;
    });
    return out;
}

BoxDimension box_dimension(const EnvPath& path, int offset, int depth, const std::vector<double>& scales) {
    if (scales.size() < 2) fail(ErrorKind::InvalidArgument, "box_dimension needs at least two scales");
    std::vector<std::pair<double, double>> cyl;
    double max_diam = 0.0;
    WordCursor cur(path, offset, depth);
    while (cur.next()) {
        CylinderInterval c = cylinder_interval(path, cur.word());
        cyl.emplace_back(c.lo, c.hi);
        max_diam = std::max(max_diam, c.diam());
    }
    const double rmin = *std::min_element(scales.begin(), scales.end());
    if (!(max_diam < rmin))
        fail(ErrorKind::ScaleBelowFloor, "depth-" + std::to_string(depth) + " cylinders (diameter " + fmt_double(max_diam) +
                                             ") are not finer than the smallest scale " + fmt_double(rmin));
    BoxDimension out;
    out.scales = scales;
    std::vector<double> lx, ly;
    for (double r : scales) {
        long last = std::numeric_limits<long>::min();
        double count = 0.0;
        for (const auto& [lo, hi] : cyl) {
            long c0 = static_cast<long>(std::floor(lo / r));
            long c1 = std::max(c0, static_cast<long>(std::ceil(hi / r)) - 1);
            long from = std::max(c0, last + 1);
            if (c1 >= from) count += static_cast<double>(c1 - from + 1);
            last = std::max(last, c1);
        }
        out.counts.push_back(count);
        lx.push_back(-std::log(r));
        ly.push_back(std::log(count));
    }
    out.dimension = ls_slope(lx, ly);
    return out;
}

std::vector<double> sample_points(const MassFn& mass, const EnvPath& path, int offset, int count, int depth,
                                  const std::string& stream) {
    Stream rng(path.seed, stream);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Word v;
        v.offset = offset;
        double lo = 0.0, len = 1.0;
        for (int j = 0; j < depth; ++j) {
            const std::vector<int> kids = next_letters(path, offset + j, v.empty() ? 0 : v.last());
            const double u = rng.uniform() * len;
            double acc = 0.0;
            std::size_t pick = kids.size() - 1;
            std::vector<double> m;
            for (int s : kids) m.push_back(mass(v.child(s)));
            for (std::size_t i = 0; i < kids.size(); ++i) {
                if (u < acc + m[i] || i + 1 == kids.size()) {
                    pick = i;
                    break;
                }
                acc += m[i];
            }
            lo += acc;
            len = m[pick];
            v.letters.push_back(kids[pick]);
        }
        out.push_back(lo + rng.uniform() * len);
    }
    return out;
}

AlphaValue alpha_at_point(const MassFn& mass, const EnvPath& path, int offset, double x, double r, int max_depth) {
    Word v;
    v.offset = offset;
    double lo = 0.0, hi = 1.0;
    for (int j = 0; j < max_depth && hi - lo > r; ++j) {
        const std::vector<int> kids = next_letters(path, offset + j, v.empty() ? 0 : v.last());
        double acc = lo;
        std::size_t pick = kids.size() - 1;
        double m_pick = 0.0;
        for (std::size_t i = 0; i < kids.size(); ++i) {
            const double m = mass(v.child(kids[i]));
            if (x < acc + m || i + 1 == kids.size()) {
                pick = i;
                m_pick = m;
                break;
            }
            acc += m;
        }
        v.letters.push_back(kids[pick]);
        lo = acc;
        hi = acc + m_pick;
    }
    return alpha_of(mass, path, v);
}

}  // namespace imf
