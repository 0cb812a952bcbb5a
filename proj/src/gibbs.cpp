#include "inversemf/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inversemf/errors.hpp"
#include "inversemf/format.hpp"
#include "inversemf/rng.hpp"

namespace imf {

FunctionTable FunctionTable::zeros(const EnvPath& path, int offset, int depth) {
    if (depth < 1) fail(ErrorKind::InvalidArgument, "table depth must be positive");
    path.require_horizon(offset + depth - 1, "function table");
    FunctionTable t;
    t.offset = offset;
    t.depth = depth;
    t.radix.resize(static_cast<std::size_t>(depth));
    t.stride.resize(static_cast<std::size_t>(depth));
    std::size_t size = 1;
    for (int i = depth - 1; i >= 0; --i) {
        t.radix[i] = path.alphabet(offset + i);
        t.stride[i] = size;
        size *= static_cast<std::size_t>(t.radix[i]);
    }
    t.values.assign(size, 0.0);
    return t;
}

std::size_t FunctionTable::index(const int* letters, int len) const {
    std::size_t idx = 0;
    for (int i = 0; i < len; ++i) idx += static_cast<std::size_t>(letters[i] - 1) * stride[i];
    return idx;
}

void FunctionTable::decode(std::size_t idx, int* letters) const {
    for (int i = 0; i < depth; ++i) {
        letters[i] = static_cast<int>(idx / stride[i]) + 1;
        idx %= stride[i];
    }
}

bool dense_admissible(const EnvPath& path, int t, const int* letters, int len) {
    for (int i = 1; i < len; ++i)
        if (!path.allowed(t + i - 1, letters[i - 1], letters[i])) return false;
    return true;
}

double phi_bar(const EnvPath& path, int t, const int* letters, int len) {
    const BranchSpec& br = path.branch(t, letters[0]);
    if (br.locally_constant_phi()) return br.phi.value;
    double lo = 0.0, hi = 1.0;
    for (int i = len - 1; i >= 1; --i) {
        const BranchSpec& b = path.branch(t + i, letters[i]);
        lo = b.ginv(lo);
        hi = b.ginv(hi);
    }
    return std::max(br.phi_y(br.ginv_y(lo)), br.phi_y(br.ginv_y(hi)));
}

FunctionTable rpf_apply(const EnvPath& path, int offset, const FunctionTable& h) {
    if (h.offset != offset) fail(ErrorKind::InvalidArgument, "rpf_apply: table offset does not match");
    const int m = h.depth;
    path.require_horizon(offset + m + 1, "rpf_apply");
    FunctionTable out = FunctionTable::zeros(path, offset + 1, m);
    std::vector<int> v(static_cast<std::size_t>(m)), sv(static_cast<std::size_t>(m) + 1);
    for (std::size_t idx = 0; idx < out.values.size(); ++idx) {
        out.decode(idx, v.data());
        if (!dense_admissible(path, offset + 1, v.data(), m)) continue;
        double acc = 0.0;
        for (int s = 1; s <= path.alphabet(offset); ++s) {
            if (!path.allowed(offset, s, v[0])) continue;
            sv[0] = s;
            std::copy(v.begin(), v.end(), sv.begin() + 1);
            acc += std::exp(phi_bar(path, offset, sv.data(), m + 1)) * h.values[h.index(sv.data(), m)];
        }
        out.values[idx] = acc;
    }
    return out;
}

namespace {

// mu_t from mu_{t+1}, unnormalized
FunctionTable pull_back(const EnvPath& path, int t, const FunctionTable& next, bool phi_const) {
    const int m = next.depth;
    FunctionTable out = FunctionTable::zeros(path, t, m);
    std::vector<int> w(static_cast<std::size_t>(m) + 1);
    for (std::size_t idx = 0; idx < out.values.size(); ++idx) {
        out.decode(idx, w.data());
        if (!dense_admissible(path, t, w.data(), m)) continue;
        const int last_t = t + m;
        double acc = 0.0;
        for (int u = 1; u <= path.alphabet(last_t); ++u) {
            if (!path.allowed(last_t - 1, w[m - 1], u)) continue;
            w[m] = u;
            const double nv = next.values[next.index(w.data() + 1, m)];
            if (nv == 0.0) continue;
            acc += (phi_const ? 1.0 : std::exp(phi_bar(path, t, w.data(), m + 1))) * nv;
        }
        if (phi_const) acc *= std::exp(path.branch(t, w[0]).phi.value);
        out.values[idx] = acc;
    }
    return out;
}

FunctionTable initial_table(const EnvPath& path, int t, int m, bool skewed) {
    FunctionTable tab = FunctionTable::zeros(path, t, m);
    std::vector<int> w(static_cast<std::size_t>(m));
    double total = 0.0;
    for (std::size_t idx = 0; idx < tab.values.size(); ++idx) {
        tab.decode(idx, w.data());
        if (!dense_admissible(path, t, w.data(), m)) continue;
        tab.values[idx] = skewed ? std::pow(0.5, static_cast<double>(w[0] - 1)) * (1.0 + static_cast<double>(idx % 7)) : 1.0;
        total += tab.values[idx];
    }
    for (double& x : tab.values) x /= total;
    return tab;
}

double normalize(FunctionTable& t) {
    double s = 0.0;
    for (double x : t.values) s += x;
    if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorKind::NonConvergence, "transfer operator produced zero mass");
    for (double& x : t.values) x /= s;
    return s;
}

}  // namespace

GibbsFamily::GibbsFamily(const EnvPath& path, int offset, int iters, const RpfOptions& opt)
    : path_(&path), offset_(offset), chain_depth_(opt.chain_depth) {
    if (iters < 1) fail(ErrorKind::InvalidArgument, "rpf needs at least one iteration");
    phi_const_ = locally_constant(*path.model, Which::Phi);
    int lmax = 1;
    for (const auto& st : path.model->states) lmax = std::max(lmax, st.alphabet_size());
    if (opt.window > 0) {
        m_ = opt.window;
    } else {
        m_ = 1;
        double size = lmax;
        while (m_ < 12 && size * lmax <= static_cast<double>(opt.max_table)) {
            size *= lmax;
            ++m_;
        }
    }
    const int H = offset + std::max(chain_depth_, opt.lambda_steps) + iters;
    path.require_horizon(H + m_ - 1, "rpf_measure");

    log_lambda_.assign(static_cast<std::size_t>(H - offset), 0.0);
    tables_.resize(static_cast<std::size_t>(chain_depth_) + 1);
    FunctionTable cur = initial_table(path, H, m_, false);
    FunctionTable alt = initial_table(path, H, m_, true);
    for (int t = H - 1; t >= offset; --t) {
        FunctionTable nxt = pull_back(path, t, cur, phi_const_);
        log_lambda_[t - offset] = std::log(normalize(nxt));
        cur = std::move(nxt);
        FunctionTable nalt = pull_back(path, t, alt, phi_const_);
        normalize(nalt);
        alt = std::move(nalt);
        if (t - offset <= chain_depth_) tables_[t - offset] = cur;
    }
    for (std::size_t i = 0; i < cur.values.size(); ++i) alignment_ += std::abs(cur.values[i] - alt.values[i]);

    // the dual relation against the forward operator, on a few test functions
    Stream rng(path.seed, "rpf/test-functions");
    const FunctionTable& mu0 = tables_[0];
    const FunctionTable& mu1 = tables_[1 <= chain_depth_ ? 1 : 0];
    if (chain_depth_ >= 1) {
        for (int trial = 0; trial < 3; ++trial) {
            FunctionTable h = FunctionTable::zeros(path, offset, m_);
            for (std::size_t i = 0; i < h.values.size(); ++i)
                h.values[i] = trial == 0 ? 1.0 : trial == 1 ? static_cast<double>(i % 2) : rng.uniform();
            FunctionTable Lh = rpf_apply(path, offset, h);
            double lhs = 0.0, rhs = 0.0;
            for (std::size_t i = 0; i < Lh.values.size(); ++i) lhs += mu1.values[i] * Lh.values[i];
            for (std::size_t i = 0; i < h.values.size(); ++i) rhs += h.values[i] * mu0.values[i];
            rhs *= std::exp(log_lambda_[0]);
            duality_ = std::max(duality_, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300));
        }
    }
    residual_ = std::max(alignment_, duality_);
    if (residual_ > opt.residual_bound)
        fail(ErrorKind::NonConvergence, "rpf residual " + fmt_double(residual_) + " exceeds " + fmt_double(opt.residual_bound));
}

const FunctionTable& GibbsFamily::table(int t) const {
    if (t < offset_ || t > last_time())
        fail(ErrorKind::HorizonTooShort, "no conformal table at time " + std::to_string(t) + "; raise chain_depth");
    return tables_[static_cast<std::size_t>(t - offset_)];
}

double GibbsFamily::log_lambda(int t) const {
    if (t < offset_ || t - offset_ >= static_cast<int>(log_lambda_.size()))
        fail(ErrorKind::HorizonTooShort, "no normalizer at time " + std::to_string(t));
    return log_lambda_[static_cast<std::size_t>(t - offset_)];
}

double GibbsFamily::log_block(int t, const int* letters, int len) const {
    if (len == 0) return 0.0;
    const FunctionTable& tab = table(t);
    const std::size_t idx = tab.index(letters, len);
    const std::size_t blk = tab.block(len);
    double s = 0.0;
    for (std::size_t i = idx; i < idx + blk; ++i) s += tab.values[i];
    return std::log(s);
}

double GibbsFamily::step_term(int t, const int* letters) const {
    return phi_bar(*path_, t, letters, m_ + 1) - log_lambda(t);
}

double GibbsFamily::log_mass(const Word& w) const {
    const int L = static_cast<int>(w.size());
    const int k = w.offset;
    if (!dense_admissible(*path_, k, w.letters.data(), L)) return -INFINITY;
    if (L <= m_) return log_block(k, w.letters.data(), L);
    double s = 0.0;
    for (int i = 0; i + m_ < L; ++i) s += step_term(k + i, w.letters.data() + i);
    return s + log_block(k + L - m_, w.letters.data() + (L - m_), m_);
}

double GibbsFamily::mass(const Word& w) const { return std::exp(log_mass(w)); }

double GibbsFamily::min_follower_mass(int t) const {
    const FunctionTable& tab = table(t);
    double best = INFINITY;
    for (int s = 1; s <= path_->alphabet(t - 1); ++s) {
        double acc = 0.0;
        for (int u = 1; u <= path_->alphabet(t); ++u) {
            if (!path_->allowed(t - 1, s, u)) continue;
            const std::size_t idx = tab.index(&u, 1);
            for (std::size_t i = idx; i < idx + tab.block(1); ++i) acc += tab.values[i];
        }
        best = std::min(best, acc);
    }
    return best;
}

double MeasureTable::mass(const Word& prefix) const {
    const std::size_t p = prefix.size();
    if (p > static_cast<std::size_t>(depth)) fail(ErrorKind::InvalidArgument, "prefix longer than the table depth");
    auto cmp_lt = [&](const Word& w, const Word& pre) {
        return std::lexicographical_compare(w.letters.begin(), w.letters.begin() + static_cast<std::ptrdiff_t>(p), pre.letters.begin(),
                                            pre.letters.end());
    };
    auto cmp_gt = [&](const Word& pre, const Word& w) {
        return std::lexicographical_compare(pre.letters.begin(), pre.letters.end(), w.letters.begin(),
                                            w.letters.begin() + static_cast<std::ptrdiff_t>(p));
    };
    auto lo = std::lower_bound(words.begin(), words.end(), prefix, cmp_lt);
    auto hi = std::upper_bound(lo, words.end(), prefix, cmp_gt);
    double s = 0.0;
    for (auto it = lo; it != hi; ++it) s += masses[static_cast<std::size_t>(it - words.begin())];
    return s;
}

double MeasureTable::total() const {
    double s = 0.0;
    for (double x : masses) s += x;
    return s;
}

MeasureTable materialize(const GibbsFamily& fam, int offset, int depth) {
    MeasureTable t;
    t.offset = offset;
    t.depth = depth;
    t.residual = fam.residual();
    WordCursor cur(fam.path(), offset, depth);
    while (cur.next()) {
        t.words.push_back(cur.word());
        t.masses.push_back(fam.mass(cur.word()));
    }
    return t;
}

void check_positive(const MeasureTable& t) {
    for (std::size_t i = 0; i < t.masses.size(); ++i)
        if (!(t.masses[i] > 0.0) || !std::isfinite(t.masses[i]))
            fail(ErrorKind::InvalidArgument, "cylinder " + to_string(t.words[i]) + " has non-positive mass " + fmt_double(t.masses[i]));
}

std::string to_csv(const MeasureTable& t) {
    std::ostringstream os;
    os << "# depth,offset,residual\n";
    os << "# " << t.depth << "," << t.offset << "," << fmt_double(t.residual) << "\n";
    os << "word,mass\n";
    for (std::size_t i = 0; i < t.words.size(); ++i) os << to_string(t.words[i]) << "," << fmt_double(t.masses[i]) << "\n";
    return os.str();
}

double RpfResult::mean_log_lambda(int k) const {
    if (k < 1 || k > static_cast<int>(log_lambdas.size())) fail(ErrorKind::InvalidArgument, "mean_log_lambda: bad k");
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += log_lambdas[static_cast<std::size_t>(i)];
    return s / k;
}

RpfResult rpf_measure(const EnvPath& path, int offset, int depth, int iters, const RpfOptions& opt) {
    RpfOptions o = opt;
    o.chain_depth = std::max(o.chain_depth, depth);
    auto fam = std::make_shared<GibbsFamily>(path, offset, iters, o);
    RpfResult r;
    r.log_lambdas = fam->log_lambdas();
    r.residual = fam->residual();
    r.table = materialize(*fam, offset, depth);
    r.family = fam;
    return r;
}

bool GibbsReport::all_within() const {
    return std::all_of(rows.begin(), rows.end(), [](const GibbsRow& r) { return r.within; });
}

bool GibbsReport::defect_nonincreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].defect > rows[i - 1].defect + 1e-12) return false;
    return true;
}

GibbsReport gibbs_diagnostic(const GibbsFamily& fam, int offset, const std::vector<int>& ns) {
    const EnvPath& path = fam.path();
    const EnvModel& model = *path.model;
    GibbsReport rep;
    for (int n : ns) {
        GibbsRow row;
        row.n = n;
        WordCursor cur(path, offset, n);
        while (cur.next()) {
            const Word& w = cur.word();
            const double lm = fam.log_mass(w);
            const double s = birkhoff_bounds(path, w, Which::Phi).sup_sum;
            row.defect = std::max(row.defect, std::abs(lm - s) / n);
            row.max_mass = std::max(row.max_mass, std::exp(lm));
        }
        double lam = 0.0;
        for (int i = 0; i < n; ++i) lam += fam.log_lambda(offset + i);
        const double gap = birkhoff_gap_bound(model, n, Which::Phi) + n * variation_modulus(model, fam.window(), Which::Phi);
        row.lambda_term = std::abs(lam) / n;
        row.follower_term = std::abs(std::log(fam.min_follower_mass(offset + n))) / n;
        row.epsilon = gap / n;
        row.allowance = row.lambda_term + row.follower_term + row.epsilon + 1e-12;
        row.within = row.defect <= row.allowance;
        rep.rows.push_back(row);
    }
    return rep;
}

std::string to_csv(const GibbsReport& r) {
    std::ostringstream os;
    os << "n,defect,allowance,epsilon,lambda_term,follower_term,max_mass,within\n";
    for (const auto& x : r.rows)
        os << x.n << "," << fmt_double(x.defect) << "," << fmt_double(x.allowance) << "," << fmt_double(x.epsilon) << ","
           << fmt_double(x.lambda_term) << "," << fmt_double(x.follower_term) << "," << fmt_double(x.max_mass) << ","
           << (x.within ? 1 : 0) << "\n";
    return os.str();
}

}  // namespace imf
