#include "inversemf/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "inversemf/errors.hpp"

namespace imf {

double apply_inverse(const EnvPath& path, const Word& w, double z) {
    for (std::size_t i = w.letters.size(); i-- > 0;)
        z = path.branch(w.offset + static_cast<int>(i), w.letters[i]).ginv(z);
    return z;
}

CylinderInterval cylinder_interval(const EnvPath& path, const Word& w) {
    std::string why;
    if (!is_admissible(path, w, &why)) fail(ErrorKind::InvalidArgument, "word " + to_string(w) + " not admissible: " + why);
    CylinderInterval c;
    c.word = w;
    // carry the width alongside lo so deep cylinders away from 0 keep it
    double lo = 0.0, width = 1.0;
    for (std::size_t i = w.letters.size(); i-- > 0;) {
        const BranchSpec& br = path.branch(w.offset + static_cast<int>(i), w.letters[i]);
        double dy = width;
        if (br.map == MapKind::Moebius)
            dy = width * (1.0 + br.c) / ((1.0 + br.c - br.c * lo) * (1.0 + br.c - br.c * (lo + width)));
        lo = br.ginv(lo);
        width = br.width() * dy;
    }
    c.lo = lo;
    c.hi = apply_inverse(path, w, 1.0);
    c.width = width;
    if (!(width >= 1e-300))
        fail(ErrorKind::DepthUnderflow, "cylinder " + to_string(w) + " is narrower than 1e-300");
    return c;
}

double max_contraction_at(const EnvPath& path, int t) {
    double r = 0.0;
    for (const auto& br : path.at(t).branches) r = std::max(r, br.max_contraction());
    return r;
}

ExtremaCache::ExtremaCache(const EnvPath& path, int t0, int max_end, double tol)
    : path_(&path), t0_(t0), max_end_(std::max(max_end, t0 + 1)), tol_(tol) {
    if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "extrema tolerance must be positive");
    // extend until the contraction accumulated from max_end on drops below tol
    double log_err = 0.0;
    int t = max_end_;
    const double log_tol = std::log(tol);
    for (;; ++t) {
        path.require_horizon(t, "attractor extrema");
        log_err += std::log(max_contraction_at(path, t));
        if (log_err <= log_tol) break;
        if (t - max_end_ > 100000) fail(ErrorKind::NonConvergence, "branches do not contract along the path");
    }
    base_ = t;
    const int len = base_ - t0_;
    min_after_.resize(static_cast<std::size_t>(len));
    max_after_.resize(static_cast<std::size_t>(len));
    log_rho_suffix_.assign(static_cast<std::size_t>(len) + 2, 0.0);
    for (int u = base_; u > t0_; --u) {
        log_rho_suffix_[u - t0_] = log_rho_suffix_[u - t0_ + 1] + std::log(max_contraction_at(path, u));
    }
    for (int u = base_; u > t0_; --u) {
        const auto& a = path.adm(u - 1);
        auto& mn = min_after_[u - t0_ - 1];
        auto& mx = max_after_[u - t0_ - 1];
        mn.resize(a.size());
        mx.resize(a.size());
        for (std::size_t s = 0; s < a.size(); ++s) {
            int first = 0, last = 0;
            for (std::size_t j = 0; j < a[s].size(); ++j)
                if (a[s][j]) {
                    if (!first) first = static_cast<int>(j) + 1;
                    last = static_cast<int>(j) + 1;
                }
            if (u == base_) {
                mn[s] = path.branch(u, first).ginv(0.0);
                mx[s] = path.branch(u, last).ginv(1.0);
            } else {
                mn[s] = path.branch(u, first).ginv(min_after_[u - t0_][first - 1]);
                mx[s] = path.branch(u, last).ginv(max_after_[u - t0_][last - 1]);
            }
        }
    }
}

void ExtremaCache::check_time(int t, int prev) const {
    const bool ok = prev == 0 ? (t >= t0_ && t < base_) : (t > t0_ && t <= base_);
    if (!ok) fail(ErrorKind::HorizonTooShort, "extrema cache does not cover time " + std::to_string(t));
}

double ExtremaCache::min_at(int t, int prev) const {
    check_time(t, prev);
    if (prev == 0) return path_->branch(t, 1).ginv(min_after_[t - t0_][0]);
    return min_after_[t - t0_ - 1][prev - 1];
}

double ExtremaCache::max_at(int t, int prev) const {
    check_time(t, prev);
    if (prev == 0) {
        const int l = path_->alphabet(t);
        return path_->branch(t, l).ginv(max_after_[t - t0_][l - 1]);
    }
    return max_after_[t - t0_ - 1][prev - 1];
}

double ExtremaCache::error_for_end(int e) const {
    if (e <= t0_) e = t0_ + 1;
    if (e > base_) return 1.0;
    return std::min(1.0, std::exp(log_rho_suffix_[e - t0_]));
}

Extrema ExtremaCache::extrema(const Word& w) const {
    if (w.offset < t0_) fail(ErrorKind::InvalidArgument, "word starts before the extrema cache");
    Extrema e;
    if (w.empty()) {
        e.m = min_at(w.offset, 0);
        e.M = max_at(w.offset, 0);
        e.certified_error = error_for_end(w.offset + 1);
        return e;
    }
    const int end = w.end_time();
    if (end > base_) fail(ErrorKind::HorizonTooShort, "word " + to_string(w) + " ends beyond the extrema cache");
    e.m = apply_inverse(*path_, w, min_at(end, w.last()));
    e.M = apply_inverse(*path_, w, max_at(end, w.last()));
    e.certified_error = error_for_end(end);
    return e;
}

Extrema attractor_extrema(const EnvPath& path, const Word& w, double tol) {
    std::string why;
    if (!is_admissible(path, w, &why)) fail(ErrorKind::InvalidArgument, "word " + to_string(w) + " not admissible: " + why);
    ExtremaCache cache(path, w.offset, w.end_time(), tol);
    return cache.extrema(w);
}

ProjectedPoint project(const EnvPath& path, const Word& prefix) {
    CylinderInterval c = cylinder_interval(path, prefix);
    return {0.5 * (c.lo + c.hi), 0.5 * c.diam()};
}

}  // namespace imf
