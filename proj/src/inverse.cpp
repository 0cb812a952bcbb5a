#include "inversemf/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "inversemf/errors.hpp"
#include "inversemf/format.hpp"

namespace imf {

MassFn mass_fn(const MeasureTable& t) {
    return [&t](const Word& w) { return t.mass(w); };
}

MassFn mass_fn(const GibbsFamily& f) {
    return [&f](const Word& w) { return f.mass(w); };
}

double AtomList::total() const {
    double s = left_mass + right_mass + residual;
    for (const auto& a : atoms) s += a.weight;
    return s;
}

std::vector<IntervalRecord> interval_table(const MeasureTable& t) {
    check_positive(t);
    std::vector<IntervalRecord> out;
    out.reserve(t.words.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < t.words.size(); ++i) {
        IntervalRecord r;
        r.word = t.words[i];
        r.lo = acc;
        acc += t.masses[i];
        r.hi = acc;
        out.push_back(std::move(r));
    }
    return out;
}

IntervalRecord interval_of(const MassFn& mass, const EnvPath& path, const Word& v) {
    IntervalRecord r;
    r.word = v;
    Word pre;
    pre.offset = v.offset;
    double lo = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        const int t = v.offset + static_cast<int>(j);
        for (int s : next_letters(path, t, pre.empty() ? 0 : pre.last())) {
            if (s >= v.letters[j]) break;
            lo += mass(pre.child(s));
        }
        pre.letters.push_back(v.letters[j]);
    }
    r.lo = lo;
    r.hi = lo + mass(v);
    return r;
}

SuffixSets suffix_sets(const EnvPath& path, const Word& v, int k) {
    if (k < 1) fail(ErrorKind::InvalidArgument, "suffix length must be positive");
    SuffixSets out;
    const int t = v.end_time();
    path.require_horizon(t + k, "suffix_sets");
    WordCursor cur(path, t, k);
    while (cur.next()) {
        const Word& w = cur.word();
        if (!v.empty() && !path.allowed(t - 1, v.last(), w.letters[0])) continue;
        out.S.push_back(w);
    }
    for (std::size_t i = 0; i + 1 < out.S.size(); ++i) out.S_prime.emplace_back(out.S[i], out.S[i + 1]);
    return out;
}

namespace {

struct AtomBuilder {
    const EnvPath& path;
    const MassFn& mass;
    const ExtremaCache& cache;
    int min_depth;
    double floor;
    int max_depth;
    double pos_err_base;
    AtomList& out;

    void expand(Word& v, double lo_v) {
        const int t = v.end_time();
        const std::vector<int> kids = next_letters(path, t, v.empty() ? 0 : v.last());
        std::vector<double> m(kids.size());
        std::vector<Extrema> e(kids.size());
        std::vector<double> lo(kids.size());
        double acc = lo_v;
        for (std::size_t i = 0; i < kids.size(); ++i) {
            v.letters.push_back(kids[i]);
            m[i] = mass(v);
            e[i] = cache.extrema(v);
            v.letters.pop_back();
            lo[i] = acc;
            acc += m[i];
        }
        const double err = pos_err_base + 4e-16 * static_cast<double>(v.size() + 1);
        for (std::size_t i = 0; i + 1 < kids.size(); ++i) {
            Atom a;
            a.parent = v;
            a.s = kids[i];
            a.s_next = kids[i + 1];
            a.position = lo[i] + m[i];
            a.weight = std::max(0.0, e[i + 1].m - e[i].M);
            a.position_err = err;
            out.atoms.push_back(std::move(a));
        }
        for (std::size_t i = 0; i < kids.size(); ++i) {
            const int len = static_cast<int>(v.size()) + 1;
            const bool go = len < min_depth || (len < max_depth && m[i] >= floor);
            if (go) {
                v.letters.push_back(kids[i]);
                expand(v, lo[i]);
                v.letters.pop_back();
            } else {
                out.residual += e[i].M - e[i].m;
                out.max_leaf_length = std::max(out.max_leaf_length, m[i]);
            }
        }
    }
};

AtomList build_atoms(const EnvPath& path, int offset, const MassFn& mass, int min_depth, double floor, int max_depth, double tol,
                     double pos_err_base) {
    if (min_depth < 1) fail(ErrorKind::InvalidArgument, "atom generation depth must be positive");
    AtomList out;
    out.offset = offset;
    out.gen_depth = min_depth;
    out.mass_floor = floor;
    out.max_depth = std::max(min_depth, max_depth);
    ExtremaCache cache(path, offset, offset + out.max_depth, tol);
    Word root;
    root.offset = offset;
    const Extrema top = cache.extrema(root);
    out.left_mass = top.m;
    out.right_mass = 1.0 - top.M;
    out.extrema_error = cache.error_for_end(offset + 1);
    AtomBuilder b{path, mass, cache, min_depth, floor, out.max_depth, pos_err_base, out};
    b.expand(root, 0.0);
    return out;
}

}  // namespace

AtomList atoms(const MeasureTable& t, const EnvPath& path, int gen_depth, double tol) {
    if (t.depth < gen_depth) fail(ErrorKind::InvalidArgument, "measure table is shallower than the generation depth");
    check_positive(t);
    MassFn mf = mass_fn(t);
    return build_atoms(path, t.offset, mf, gen_depth, INFINITY, gen_depth, tol, t.residual);
}

AtomList atoms_adaptive(const GibbsFamily& fam, int offset, const AtomOptions& opt) {
    MassFn mf = mass_fn(fam);
    return build_atoms(fam.path(), offset, mf, opt.min_depth, opt.mass_floor, opt.max_depth, opt.tol, fam.residual());
}

std::string to_csv(const AtomList& a) {
    std::ostringstream os;
    os << "# gen_depth,mass_floor,max_depth,residual,left_mass,right_mass\n";
    os << "# " << a.gen_depth << "," << fmt_double(a.mass_floor) << "," << a.max_depth << "," << fmt_double(a.residual) << ","
       << fmt_double(a.left_mass) << "," << fmt_double(a.right_mass) << "\n";
    os << "word,s,position,weight,position_err\n";
    for (const auto& x : a.atoms)
        os << to_string(x.parent) << "," << x.s << "," << fmt_double(x.position) << "," << fmt_double(x.weight) << ","
           << fmt_double(x.position_err) << "\n";
    return os.str();
}

GapReport gap_scan(const EnvPath& path, int offset, int k_max, double tol) {
    if (k_max < 1) fail(ErrorKind::InvalidArgument, "gap scan depth must be positive");
    ExtremaCache cache(path, offset, offset + 1 + k_max, tol);
    GapReport rep;
    rep.g_hat = INFINITY;
    for (int v = 1; v <= path.alphabet(offset); ++v) {
        Word wv;
        wv.offset = offset;
        wv.letters = {v};
        double g = 0.0;
        for (int k = 1; k <= k_max; ++k) {
            SuffixSets ss = suffix_sets(path, wv, k);
            for (const auto& [w, wn] : ss.S_prime) {
                Word a = wv, b = wv;
                a.letters.insert(a.letters.end(), w.letters.begin(), w.letters.end());
                b.letters.insert(b.letters.end(), wn.letters.begin(), wn.letters.end());
                g = std::max(g, cache.extrema(b).m - cache.extrema(a).M);
            }
        }
        rep.per_letter.push_back(g);
        rep.g_hat = std::min(rep.g_hat, g);
    }
    return rep;
}

Atom designated_atom(const MassFn& mass, const EnvPath& path, const Word& v, int lookahead, double tol) {
    if (lookahead < 1) fail(ErrorKind::InvalidArgument, "lookahead must be positive");
    ExtremaCache cache(path, v.offset, v.end_time() + lookahead, tol);
    const IntervalRecord iv = interval_of(mass, path, v);
    Atom best;
    bool found = false;
    // depth-first over continuations u of length < lookahead, keeping the
    // left end of I^{vu}
    std::function<void(Word&, double, int)> visit = [&](Word& u, double lo_u, int left) {
        const std::vector<int> kids = next_letters(path, u.end_time(), u.last());
        std::vector<double> m(kids.size());
        std::vector<Extrema> e(kids.size());
        for (std::size_t i = 0; i < kids.size(); ++i) {
            u.letters.push_back(kids[i]);
            m[i] = mass(u);
            e[i] = cache.extrema(u);
            u.letters.pop_back();
        }
        double acc = lo_u;
        for (std::size_t i = 0; i + 1 < kids.size(); ++i) {
            acc += m[i];
            const double w = e[i + 1].m - e[i].M;
            if (!found || w > best.weight || (w == best.weight && acc < best.position)) {
                best.parent = u;
                best.s = kids[i];
                best.s_next = kids[i + 1];
                best.position = acc;
                best.weight = w;
                best.position_err = 4e-16 * static_cast<double>(u.size() + 1);
                found = true;
            }
        }
        if (left > 1) {
            double lo = lo_u;
            for (std::size_t i = 0; i < kids.size(); ++i) {
                u.letters.push_back(kids[i]);
                visit(u, lo, left - 1);
                u.letters.pop_back();
                lo += m[i];
            }
        }
    };
    Word u = v;
    if (u.empty()) fail(ErrorKind::InvalidArgument, "designated atom needs a non-empty word");
    visit(u, iv.lo, lookahead);
    if (!found || !(best.weight > 0.0))
        fail(ErrorKind::NoAtomFound, "no atom of positive weight within lookahead " + std::to_string(lookahead) + " of " + to_string(v));
    return best;
}

InverseMeasure::InverseMeasure(const AtomList& a) : residual_(a.residual), max_leaf_(a.max_leaf_length) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(a.atoms.size() + 2);
    if (a.left_mass > 0.0) pts.emplace_back(0.0, a.left_mass);
    for (const auto& x : a.atoms)
        if (x.weight > 0.0) pts.emplace_back(x.position, x.weight);
    if (a.right_mass > 0.0) pts.emplace_back(1.0, a.right_mass);
    std::stable_sort(pts.begin(), pts.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    pos_.reserve(pts.size());
    w_.reserve(pts.size());
    prefix_.assign(pts.size() + 1, 0.0L);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pos_.push_back(pts[i].first);
        w_.push_back(pts[i].second);
        prefix_[i + 1] = prefix_[i] + static_cast<long double>(pts[i].second);
    }
}

double InverseMeasure::mass_closed(double a, double b) const {
    auto lo = static_cast<std::size_t>(std::lower_bound(pos_.begin(), pos_.end(), a) - pos_.begin());
    auto hi = static_cast<std::size_t>(std::upper_bound(pos_.begin(), pos_.end(), b) - pos_.begin());
    if (hi <= lo) return 0.0;
    if (hi - lo <= 32) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += w_[i];
        return s;
    }
    return static_cast<double>(prefix_[hi] - prefix_[lo]);
}

}  // namespace imf
