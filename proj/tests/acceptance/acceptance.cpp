// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"

#include "inversemf/analysis.hpp"
#include "inversemf/errors.hpp"
#include "inversemf/format.hpp"
#include "inversemf/gibbs.hpp"
#include "inversemf/inverse.hpp"
#include "inversemf/report.hpp"
#include "inversemf/rng.hpp"
#include "inversemf/thermo.hpp"

using namespace imf;
namespace fs = std::filesystem;

namespace {

using clk = std::chrono::steady_clock;
double since(clk::time_point t) { return std::chrono::duration<double>(clk::now() - t).count(); }

const std::vector<std::string> kMoran = {"bernoulli2", "moran_a", "moran_b"};
const std::vector<std::string> kClosedForm = {"bernoulli2", "moran_a", "moran_b", "bernoulli_sym", "cantor3"};
const std::vector<std::string> kRandom = {"random2", "random2b"};
const std::vector<std::string> kValid = {"bernoulli2", "moran_a", "moran_b", "bernoulli_sym", "cantor3",
                                         "golden_mean", "moebius", "random2", "random2b"};

// Normalized model with the path used by every criterion that needs one.
// Locally constant potentials are normalized at depth 2048 (cheap on the
// transfer-matrix path); the others at depth 16.
struct Prepared {
    std::shared_ptr<const EnvModel> model;
    EnvPath path;
    int depth = 16;
    bool locally_constant = true;
};

Prepared prepare(const std::string& name) {
    auto raw = fx::model(name);
    Prepared p;
    {
        EnvPath probe = sample_path(raw, 16);
        p.locally_constant = PressureEvaluator(probe, 0, 16).transfer();
    }
    p.depth = p.locally_constant ? 2048 : 16;
    const int horizon = report_horizon(*raw, AnalysisConfig{}) + p.depth;
    NormalizeOptions no;
    no.n = p.depth;
    no.horizon = horizon;
    p.model = std::make_shared<const EnvModel>(normalize_phi(*raw, no).model);
    p.path = sample_path(p.model, horizon);
    return p;
}

struct Moran {
    std::vector<double> r, p;
};

Moran moran_of(const std::string& name) {
    auto j = nlohmann::json::parse(std::ifstream(fx::model_file(name)));
    Moran m;
    for (const auto& b : j["states"][0]["branches"]) {
        m.r.push_back(b["b"].get<double>() - b["a"].get<double>());
        m.p.push_back(std::exp(b["phi"]["value"].get<double>()));
    }
    return m;
}

struct Line {
    bool pass;
    std::string detail;
};

std::string g(double x) {
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}

// 1. Moran roots against scalar bisection
Line moran_roots() {
    double worst = 0.0, slowest = 0.0;
    for (const auto& name : kMoran) {
        auto t = clk::now();
        const Moran m = moran_of(name);
        EnvPath path = fx::path(name, 64);
        PressureEvaluator P(path, 0, 16);
        worst = std::max(worst, std::abs(pressure_root(P, 0.0, RootKind::Bowen).root - oracle::moran_bowen(m.r)));
        for (double q : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
            worst = std::max(worst, std::abs(pressure_root(P, q, RootKind::T).root - oracle::moran_T(m.r, m.p, q)));
            worst = std::max(worst, std::abs(pressure_root(P, q, RootKind::CalT).root - oracle::moran_calT(m.r, m.p, q)));
        }
        slowest = std::max(slowest, since(t));
    }
    return {worst <= 1e-6 && slowest <= 10.0, "max error " + g(worst) + " (tol 1e-06), slowest model " + g(slowest) + " s (limit 10)"};
}

// 2. calT(t0) = 0 and calT(0) = -1 at the normalization depth
Line pinned_identities(const std::vector<Prepared>& ps) {
    double worst = 0.0;
    for (const auto& p : ps) {
        PressureEvaluator P(p.path, 0, p.depth);
        const double t0 = pressure_root(P, 0.0, RootKind::Bowen).root;
        worst = std::max(worst, std::abs(pressure_root(P, t0, RootKind::CalT).root));
        worst = std::max(worst, std::abs(pressure_root(P, 0.0, RootKind::CalT).root + 1.0));
    }
    return {worst <= 1e-6, "max error " + g(worst) + " over " + std::to_string(ps.size()) + " models (tol 1e-06)"};
}

// 3. calT*(d) = d T*(1/d) on 10 interior d
double duality_on(const std::string& name, int& evaluated) {
    auto m = fx::model(name);
    EnvPath path = sample_path(m, 64);
    PressureEvaluator P(path, 0, 16);
    const std::vector<double> qg = make_grid(-8.0, 8.0, 0.01);
    SpectrumCurve calT = root_curve(P, RootKind::CalT, qg);
    SpectrumCurve T = root_curve(P, RootKind::T, qg);
    // slopes of calT at q = +-4 bound the d range whose minimizers stay well
    // inside both grids
    auto slope = [&](double q) {
        const double h = 1e-3;
        return (pressure_root(P, q + h, RootKind::CalT).root - pressure_root(P, q - h, RootKind::CalT).root) / (2 * h);
    };
    const double lo = slope(4.0), hi = slope(-4.0);
    std::vector<double> d;
    for (int i = 1; i <= 10; ++i) d.push_back(lo + (hi - lo) * i / 11.0);
    DualityReport r = duality_check(T, calT, d);
    evaluated = r.evaluated;
    return r.max_discrepancy;
}

Line duality() {
    auto t = clk::now();
    double worst_cf = 0.0, worst_rand = 0.0;
    int short_count = 0;
    for (const auto& name : kMoran) {
        int ev = 0;
        worst_cf = std::max(worst_cf, duality_on(name, ev));
        if (ev < 10) ++short_count;
    }
    for (const auto& name : kRandom) {
        int ev = 0;
        worst_rand = std::max(worst_rand, duality_on(name, ev));
        if (ev < 10) ++short_count;
    }
    const double secs = since(t);
    return {worst_cf <= 5e-3 && worst_rand <= 2e-2 && short_count == 0 && secs <= 60.0,
            "closed-form " + g(worst_cf) + " (tol 0.005), random " + g(worst_rand) + " (tol 0.02), " + std::to_string(short_count) +
                " models with fewer than 10 points, " + g(secs) + " s (limit 60)"};
}

// 4. boundary masses + atoms + residual = 1
Line conservation(const std::vector<Prepared>& ps) {
    double worst = 0.0;
    for (const auto& p : ps) {
        RpfOptions ro;
        ro.chain_depth = 14;
        ro.residual_bound = 1e-6;
        GibbsFamily fam(p.path, 0, 60, ro);
        for (int gd = 4; gd <= 10; ++gd) {
            AtomOptions ao;
            ao.min_depth = gd;
            ao.max_depth = gd;
            worst = std::max(worst, std::abs(atoms_adaptive(fam, 0, ao).total() - 1.0));
        }
    }
    return {worst <= 1e-10, "max |total - 1| " + g(worst) + " at generation depths 4..10 (tol 1e-10)"};
}

// 5. weak Gibbs bounds and monotone defect
Line weak_gibbs(const std::vector<Prepared>& ps, const std::vector<std::string>& names) {
    std::string outside, rising;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        RpfOptions ro;
        ro.chain_depth = 14;
        ro.residual_bound = 1e-6;
        GibbsFamily fam(ps[i].path, 0, 60, ro);
        GibbsReport r = gibbs_diagnostic(fam, 0, {6, 8, 10, 12});
        if (!r.all_within()) outside += " " + names[i];
        if (!r.defect_nonincreasing()) rising += " " + names[i];
    }
    return {outside.empty() && rising.empty(),
            "outside allowance:" + (outside.empty() ? std::string(" none") : outside) +
                "; defect rising:" + (rising.empty() ? std::string(" none") : rising)};
}

// 6. eigen-defect residual and normalizer average
Line rpf_fidelity(const std::vector<Prepared>& ps, const std::vector<std::string>& names) {
    double worst_res = 0.0, worst_lam = 0.0;
    std::string at;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Prepared& p = ps[i];
        RpfOptions ro;
        ro.chain_depth = 8;
        ro.lambda_steps = p.depth;
        ro.residual_bound = 1e-6;
        GibbsFamily fam(p.path, 0, 60, ro);
        if (p.locally_constant) worst_res = std::max(worst_res, fam.residual());
        double s = 0.0;
        for (int i = 0; i < p.depth; ++i) s += fam.log_lambda(i);
        if (std::abs(s / p.depth) > worst_lam) {
            worst_lam = std::abs(s / p.depth);
            at = names[i] + " over " + std::to_string(p.depth) + " steps";
        }
    }
    return {worst_res <= 1e-10 && worst_lam <= 1e-3,
            "residual " + g(worst_res) + " (tol 1e-10), |mean log lambda| " + g(worst_lam) + " on " + at + " (tol 0.001)"};
}

// Shared bernoulli-2 pipeline for criteria 7, 9-12.
struct Bern {
    std::shared_ptr<const EnvModel> model;
    EnvPath path;
    std::shared_ptr<GibbsFamily> fam;
    AtomList atoms;
    std::unique_ptr<InverseMeasure> nu;
    MassFn mass;
    double build_s = 0.0;
};

Bern bernoulli() {
    auto t = clk::now();
    Bern b;
    const AnalysisConfig cfg;
    auto raw = fx::model("bernoulli2");
    const int horizon = report_horizon(*raw, cfg);
    NormalizeOptions no;
    no.horizon = horizon;
    b.model = std::make_shared<const EnvModel>(normalize_phi(*raw, no).model);
    b.path = sample_path(b.model, horizon);
    RpfOptions ro;
    ro.chain_depth = cfg.max_atom_depth + 2;
    ro.residual_bound = 1e-6;
    b.fam = std::make_shared<GibbsFamily>(b.path, 0, cfg.rpf_iters, ro);
    AtomOptions ao;
    ao.min_depth = 14;
    ao.mass_floor = std::exp2(cfg.mass_floor_log2);
    ao.max_depth = cfg.max_atom_depth;
    b.atoms = atoms_adaptive(*b.fam, 0, ao);
    b.nu = std::make_unique<InverseMeasure>(b.atoms);
    b.mass = mass_fn(*b.fam);
    b.build_s = since(t);
    return b;
}

// 7. L^q spectrum of the atoms against min(calT, 0)
Line tau_hat(const Bern& b) {
    auto t = clk::now();
    const std::vector<double> qg = make_grid(-2.0, 2.0, 0.25);
    LqResult lq = lq_estimate(*b.nu, qg, scale_range(-6, -12));
    PressureEvaluator P(b.path, 0, 16);
    double worst = 0.0, worst_q = 0.0, clamp = 0.0;
    for (std::size_t i = 0; i < qg.size(); ++i) {
        const double pred = std::min(pressure_root(P, qg[i], RootKind::CalT).root, 0.0);
        const double dev = std::abs(lq.tau.value[i] - pred);
        if (dev > worst) {
            worst = dev;
            worst_q = qg[i];
        }
        if (qg[i] >= 1.0 && std::fmod(qg[i], 0.5) == 0.0) clamp = std::max(clamp, std::abs(lq.tau.value[i]));
    }
    const double secs = since(t) + b.build_s;
    return {worst <= 0.15 && clamp <= 0.05 && secs <= 300.0,
            "sup deviation " + g(worst) + " at q=" + g(worst_q) + " (tol 0.15), max |tau_hat| on {1,1.5,2} " + g(clamp) +
                " (tol 0.05), " + g(secs) + " s (limit 300)"};
}

// 8. box dimension against the Bowen root
Line box_dim() {
    double worst = 0.0;
    std::string at;
    const AnalysisConfig cfg;
    for (const auto& name : kClosedForm) {
        auto m = fx::model(name);
        EnvPath path = sample_path(m, 80);
        PressureEvaluator P(path, 0, 16);
        const double t0 = pressure_root(P, 0.0, RootKind::Bowen).root;
        const double rho = [&] {
            double r = 0;
            for (const auto& s : m->states)
                for (const auto& br : s.branches) r = std::max(r, br.b - br.a);
            return r;
        }();
        const int depth = static_cast<int>(std::ceil(std::log(std::exp2(cfg.box_scales.log2_min) / 2) / std::log(rho))) + 1;
        EnvPath deep = sample_path(m, depth + 8);
        const double dev = std::abs(box_dimension(deep, 0, depth, cfg.box_scales.values()).dimension - t0);
        if (dev > worst) {
            worst = dev;
            at = name;
        }
    }
    return {worst <= 0.05, "max |box - t0| " + g(worst) + (at.empty() ? "" : " on " + at) + " (tol 0.05)"};
}

// 9. lower local dimension at the heaviest atoms
Line atom_dims(const Bern& b) {
    std::vector<std::size_t> idx(b.nu->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return b.nu->weights()[x] > b.nu->weights()[y]; });
    std::vector<double> xs;
    for (std::size_t i = 0; i < 50 && i < idx.size(); ++i) xs.push_back(b.nu->positions()[idx[i]]);
    double worst = 0.0;
    for (const auto& d : local_dims(*b.nu, xs, scale_range(-8, -18))) worst = std::max(worst, d.lower);
    return {xs.size() == 50 && worst <= 0.05, "max lower dim " + g(worst) + " over " + std::to_string(xs.size()) + " atoms (tol 0.05)"};
}

// 10. lower dim <= alpha + 0.1 at typical points
Line sandwich(const Bern& b) {
    const std::vector<double> sc = scale_range(-8, -18);
    std::vector<double> xs = sample_points(b.mass, b.path, 0, 200, 40, "acceptance/typical");
    std::vector<LocalDim> ld = local_dims(*b.nu, xs, sc);
    int viol = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (ld[i].lower > alpha_at_point(b.mass, b.path, 0, xs[i], sc.back()).alpha + 0.1) ++viol;
    const double rate = static_cast<double>(viol) / static_cast<double>(xs.size());
    return {rate <= 0.02, std::to_string(viol) + "/" + std::to_string(xs.size()) + " violations, rate " + g(rate) + " (limit 0.02)"};
}

// 11. points of sampled ubiquity balls have lower dim <= d/xi + 0.15.
// The dominant branch is the heavier one (mass 2/3, length 1/4).
Line ubiquity(const Bern& b) {
    const double d = std::log(4.0) / std::log(1.5);
    const std::vector<double> sc = scale_range(-8, -18);
    int viol = 0, total = 0;
    std::string per;
    for (double xi : {1.0, 1.5, 2.0}) {
        std::vector<UbiquityBall> balls = ubiquity_sample(b.mass, b.path, 0, d, xi, 12);
        if (balls.empty()) {
            per += " xi=" + g(xi) + ":no balls";
            total += 100;
            viol += 100;
            continue;
        }
        Stream rng(b.model->seed, "acceptance/ubiquity/" + g(xi));
        std::vector<double> xs;
        for (int i = 0; i < 100; ++i) {
            const UbiquityBall& ball = balls[static_cast<std::size_t>(i) % balls.size()];
            xs.push_back(std::clamp(ball.center + ball.radius * (2.0 * rng.uniform() - 1.0), 0.0, 1.0));
        }
        int v = 0;
        for (const auto& ldim : local_dims(*b.nu, xs, sc))
            if (ldim.lower > d / xi + 0.15) ++v;
        per += " xi=" + g(xi) + ":" + std::to_string(v);
        viol += v;
        total += 100;
    }
    const double rate = static_cast<double>(viol) / total;
    return {rate <= 0.05, "d=" + g(d) + ", violations" + per + ", rate " + g(rate) + " (limit 0.05)"};
}

// 12. tail-window approximation degree near 1 at depth 14
Line xi_hat(const Bern& b) {
    std::vector<double> xs = sample_points(b.mass, b.path, 0, 200, 40, "acceptance/xi");
    int inside = 0, total = 0;
    for (double x : xs) {
        try {
            const ApproxDegree a = approx_degree(b.mass, b.path, 0, x, 14);
            ++total;
            if (a.xi_hat_tail >= 0.85 && a.xi_hat_tail <= 1.15) ++inside;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::AtomCollision) throw;
        }
    }
    const double frac = total ? static_cast<double>(inside) / total : 0.0;
    return {total >= 190 && frac >= 0.9,
            std::to_string(inside) + "/" + std::to_string(total) + " in [0.85, 1.15], fraction " + g(frac) + " (need 0.9)"};
}

// 13. report output identical across thread counts
std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

Line determinism() {
    const fs::path base = fs::temp_directory_path() / "inversemf_acceptance";
    fs::remove_all(base);
    std::vector<std::string> failures;
    for (const std::string name : {"bernoulli2", "random2b"}) {
        std::vector<fs::path> dirs;
        for (int th : {1, 4, 8}) {
            const fs::path dir = base / (name + "_" + std::to_string(th));
            dirs.push_back(dir);
            const std::string cmd = std::string(IMF_CLI) + " --threads " + std::to_string(th) + " report " + fx::model_file(name) +
                                    " --out-dir " + dir.string() + " >/dev/null 2>&1";
            const int st = std::system(cmd.c_str());
            // exit 5 only reports failed checks; the bundle is written either way
            const int code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
            if (code != 0 && code != 5) failures.push_back(name + " exit " + std::to_string(code));
        }
        for (const auto& e : fs::directory_iterator(dirs[0])) {
            const std::string file = e.path().filename().string();
            if (file == "manifest.json") continue;  // records runtimes and the thread count
            const std::string ref = slurp(e.path());
            for (std::size_t k = 1; k < dirs.size(); ++k)
                if (slurp(dirs[k] / file) != ref) failures.push_back(name + "/" + file);
        }
    }
    fs::remove_all(base);
    std::string detail = "bundles for bernoulli2 and random2b at threads 1, 4, 8: ";
    if (failures.empty()) return {true, detail + "identical"};
    for (const auto& f : failures) detail += f + " ";
    return {false, detail + "differ"};
}

}  // namespace

int main() {
    int failed = 0;
    auto emit = [&](int k, const char* title, const std::function<Line()>& fn) {
        const auto t = clk::now();
        Line l;
        try {
            l = fn();
        } catch (const std::exception& e) {
            l = {false, std::string("error: ") + e.what()};
        }
        if (!l.pass) ++failed;
        std::cout << (l.pass ? "PASS" : "FAIL") << " criterion " << k << " " << title << ": " << l.detail << " [" << g(since(t))
                  << " s]" << std::endl;
    };

    emit(1, "moran roots", moran_roots);
    std::vector<Prepared> prepared;
    for (const auto& name : kValid) prepared.push_back(prepare(name));
    emit(2, "pinned identities", [&] { return pinned_identities(prepared); });
    emit(3, "duality", duality);
    emit(4, "conservation", [&] { return conservation(prepared); });
    emit(5, "weak gibbs", [&] { return weak_gibbs(prepared, kValid); });
    emit(6, "rpf fidelity", [&] { return rpf_fidelity(prepared, kValid); });
    Bern b = bernoulli();
    emit(7, "tau_hat", [&] { return tau_hat(b); });
    emit(8, "box dimension", box_dim);
    emit(9, "atom local dimension", [&] { return atom_dims(b); });
    emit(10, "sandwich", [&] { return sandwich(b); });
    emit(11, "ubiquity", [&] { return ubiquity(b); });
    emit(12, "xi_hat concentration", [&] { return xi_hat(b); });
    emit(13, "determinism", determinism);
    std::cout << (13 - failed) << "/13 criteria pass" << std::endl;
    return failed ? 1 : 0;
}
