#include "inversemf/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "inversemf/errors.hpp"
#include "inversemf/format.hpp"
#include "inversemf/parallel.hpp"
#include "inversemf/rng.hpp"
#include "inversemf/subshift.hpp"

namespace imf {

using nlohmann::json;

namespace {

GridSpec grid_from(const json& j, GridSpec def) {
    def.min = j.value("min", def.min);
    def.max = j.value("max", def.max);
    def.step = j.value("step", def.step);
    return def;
}

ScaleSpec scales_from(const json& j, ScaleSpec def) {
    def.log2_max = j.value("log2_max", def.log2_max);
    def.log2_min = j.value("log2_min", def.log2_min);
    def.log2_step = j.value("log2_step", def.log2_step);
    return def;
}

json grid_json(const GridSpec& g) { return {{"min", g.min}, {"max", g.max}, {"step", g.step}}; }
json scales_json(const ScaleSpec& s) { return {{"log2_max", s.log2_max}, {"log2_min", s.log2_min}, {"log2_step", s.log2_step}}; }

}  // namespace

AnalysisConfig AnalysisConfig::from_json(const json& j) {
    AnalysisConfig c;
    if (!j.is_object()) fail(ErrorKind::Structural, "config must be a JSON object");
    try {
        c.stream = j.value("stream", c.stream);
        c.pressure_depth = j.value("pressure_depth", c.pressure_depth);
        c.normalize_samples = j.value("normalize_samples", c.normalize_samples);
        c.root_tol = j.value("root_tol", c.root_tol);
        if (j.contains("q_grid")) c.q_grid = grid_from(j["q_grid"], c.q_grid);
        if (j.contains("tau_q_grid")) c.tau_q_grid = grid_from(j["tau_q_grid"], c.tau_q_grid);
        if (j.contains("d_grid")) c.d_grid = grid_from(j["d_grid"], c.d_grid);
        if (j.contains("scales")) c.scales = scales_from(j["scales"], c.scales);
        if (j.contains("local_scales")) c.local_scales = scales_from(j["local_scales"], c.local_scales);
        if (j.contains("box_scales")) c.box_scales = scales_from(j["box_scales"], c.box_scales);
        c.local_window = j.value("local_window", c.local_window);
        c.gen_depth = j.value("gen_depth", c.gen_depth);
        c.mass_floor_log2 = j.value("mass_floor_log2", c.mass_floor_log2);
        c.max_atom_depth = j.value("max_atom_depth", c.max_atom_depth);
        c.atoms_csv_generations = j.value("atoms_csv_generations", c.atoms_csv_generations);
        c.rpf_iters = j.value("rpf_iters", c.rpf_iters);
        c.rpf_window = j.value("rpf_window", c.rpf_window);
        c.measure_depth = j.value("measure_depth", c.measure_depth);
        c.gibbs_depths = j.value("gibbs_depths", c.gibbs_depths);
        if (j.contains("samples")) {
            const json& s = j["samples"];
            c.typical_samples = s.value("typical", c.typical_samples);
            c.top_atoms = s.value("top_atoms", c.top_atoms);
            c.xi_samples = s.value("xi", c.xi_samples);
            c.xi_depth = s.value("xi_depth", c.xi_depth);
        }
        c.memory_cap = j.value("memory_cap", c.memory_cap);
        if (j.contains("tolerances")) {
            const json& t = j["tolerances"];
            c.tol_identity = t.value("identity", c.tol_identity);
            c.tol_duality = t.value("duality", c.tol_duality);
            c.tol_conservation = t.value("conservation", c.tol_conservation);
            c.tol_rpf_residual = t.value("rpf_residual", c.tol_rpf_residual);
            c.tol_lambda_mean = t.value("lambda_mean", c.tol_lambda_mean);
            c.tol_tau = t.value("tau", c.tol_tau);
            c.tol_atom_dim = t.value("atom_dim", c.tol_atom_dim);
            c.tol_box = t.value("box", c.tol_box);
            c.tol_continuity = t.value("continuity", c.tol_continuity);
            c.tol_sandwich = t.value("sandwich", c.tol_sandwich);
            c.sandwich_violation_rate = t.value("sandwich_violation_rate", c.sandwich_violation_rate);
        }
        c.informational = j.value("informational", c.informational);
    } catch (const json::exception& e) {
        fail(ErrorKind::Structural, std::string("bad config value: ") + e.what());
    }
    return c;
}

json AnalysisConfig::to_json() const {
    json j;
    j["stream"] = stream;
    j["pressure_depth"] = pressure_depth;
    j["normalize_samples"] = normalize_samples;
    j["root_tol"] = root_tol;
    j["q_grid"] = grid_json(q_grid);
    j["tau_q_grid"] = grid_json(tau_q_grid);
    j["d_grid"] = grid_json(d_grid);
    j["scales"] = scales_json(scales);
    j["local_scales"] = scales_json(local_scales);
    j["box_scales"] = scales_json(box_scales);
    j["local_window"] = local_window;
    j["gen_depth"] = gen_depth;
    j["mass_floor_log2"] = mass_floor_log2;
    j["max_atom_depth"] = max_atom_depth;
    j["atoms_csv_generations"] = atoms_csv_generations;
    j["rpf_iters"] = rpf_iters;
    j["rpf_window"] = rpf_window;
    j["measure_depth"] = measure_depth;
    j["gibbs_depths"] = gibbs_depths;
    j["samples"] = {{"typical", typical_samples}, {"top_atoms", top_atoms}, {"xi", xi_samples}, {"xi_depth", xi_depth}};
    j["memory_cap"] = memory_cap;
    j["tolerances"] = {{"identity", tol_identity},
                       {"duality", tol_duality},
                       {"conservation", tol_conservation},
                       {"rpf_residual", tol_rpf_residual},
                       {"lambda_mean", tol_lambda_mean},
                       {"tau", tol_tau},
                       {"atom_dim", tol_atom_dim},
                       {"box", tol_box},
                       {"continuity", tol_continuity},
                       {"sandwich", tol_sandwich},
                       {"sandwich_violation_rate", sandwich_violation_rate}};
    j["informational"] = informational;
    return j;
}

AnalysisConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Structural, path + ": malformed JSON: " + e.what());
    }
    return AnalysisConfig::from_json(j);
}

bool ReportResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ReportCheck& c) { return c.pass || c.informational; });
}

namespace {

double max_contraction_model(const EnvModel& m) {
    double r = 0.0;
    for (const auto& st : m.states)
        for (const auto& br : st.branches) r = std::max(r, br.max_contraction());
    return r;
}

int box_depth(const EnvModel& m, const AnalysisConfig& cfg) {
    const double rho = max_contraction_model(m);
    const double rmin = std::exp2(cfg.box_scales.log2_min);
    return static_cast<int>(std::ceil(std::log(rmin / 2.0) / std::log(rho))) + 1;
}

}  // namespace

int report_horizon(const EnvModel& model, const AnalysisConfig& cfg) {
    const double rho = max_contraction_model(model);
    const int ext = static_cast<int>(std::ceil(std::log(1e-15) / std::log(rho))) + 2;
    int need = std::max({cfg.pressure_depth, cfg.max_atom_depth + 2, cfg.xi_depth + 2, box_depth(model, cfg), cfg.measure_depth,
                         *std::max_element(cfg.gibbs_depths.begin(), cfg.gibbs_depths.end()) + 1});
    return need + cfg.rpf_iters + 16 + ext + 8;
}

ReportResult spectrum_report(const EnvModel& model_in, const AnalysisConfig& cfg, const std::string& out_dir) {
    using clock = std::chrono::steady_clock;
    ReportResult res;
    json runtimes = json::object();
    auto t_start = clock::now();
    auto stage = [&](const std::string& name, auto&& fn) {
        auto t0 = clock::now();
        fn();
        runtimes[name] = std::chrono::duration<double>(clock::now() - t0).count();
    };

    std::filesystem::create_directories(out_dir);
    auto write = [&](const std::string& name, const std::string& text) {
        write_text_file((std::filesystem::path(out_dir) / name).string(), text);
        res.files.push_back(name);
    };
    auto add = [&](const std::string& name, double value, double tol, bool pass) {
        ReportCheck c;
        c.name = name;
        c.value = value;
        c.tolerance = tol;
        c.pass = pass;
        c.informational = std::find(cfg.informational.begin(), cfg.informational.end(), name) != cfg.informational.end();
        res.checks.push_back(c);
    };

    const int horizon = report_horizon(model_in, cfg);

    // normalization on the analysis path
    NormalizeOptions nopt;
    nopt.n = cfg.pressure_depth;
    nopt.horizon = horizon;
    nopt.stream = cfg.stream;
    nopt.samples = cfg.normalize_samples;
    NormalizeResult norm;
    stage("normalize", [&] { norm = normalize_phi(model_in, nopt); });
    auto model = std::make_shared<const EnvModel>(norm.model);
    EnvPath path = sample_path(model, horizon, cfg.stream);
    const std::string mhash = model_hash(model_in);

    // thermodynamic curves
    const std::vector<double> qg = cfg.q_grid.values();
    const std::vector<double> dg = cfg.d_grid.values();
    const std::vector<double> tq = cfg.tau_q_grid.values();
    std::unique_ptr<PressureEvaluator> P;
    SpectrumCurve calT, T;
    double t0 = 0.0, calT0 = 0.0, calT_t0 = 0.0, inv_err = 0.0;
    stage("pressure", [&] {
        P = std::make_unique<PressureEvaluator>(path, 0, cfg.pressure_depth, cfg.memory_cap);
        calT = root_curve(*P, RootKind::CalT, qg, cfg.root_tol);
        T = root_curve(*P, RootKind::T, qg, cfg.root_tol);
        calT.model_hash = T.model_hash = mhash;
        t0 = pressure_root(*P, 0.0, RootKind::Bowen, cfg.root_tol).root;
        calT0 = pressure_root(*P, 0.0, RootKind::CalT, cfg.root_tol).root;
        calT_t0 = pressure_root(*P, t0, RootKind::CalT, cfg.root_tol).root;
        for (double q : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
            const double c = pressure_root(*P, q, RootKind::CalT, cfg.root_tol).root;
            inv_err = std::max(inv_err, std::abs(pressure_root(*P, -c, RootKind::T, cfg.root_tol).root + q));
        }
    });
    write("calT.csv", to_csv(calT));
    write("T.csv", to_csv(T));
    add("calT_at_t0_is_zero", std::abs(calT_t0), cfg.tol_identity, std::abs(calT_t0) <= cfg.tol_identity);
    add("calT_at_0_is_minus_one", std::abs(calT0 + 1.0), cfg.tol_identity, std::abs(calT0 + 1.0) <= cfg.tol_identity);
    add("T_inverts_calT", inv_err, cfg.tol_identity, inv_err <= cfg.tol_identity);
    {
        double worst_inc = INFINITY, worst_curv = -INFINITY;
        for (const SpectrumCurve* c : {&calT, &T}) {
            for (std::size_t i = 0; i + 1 < c->x.size(); ++i) worst_inc = std::min(worst_inc, c->value[i + 1] - c->value[i]);
            for (std::size_t i = 1; i + 1 < c->x.size(); ++i)
                worst_curv = std::max(worst_curv, c->value[i + 1] - 2.0 * c->value[i] + c->value[i - 1]);
        }
        add("curves_increasing", worst_inc, 0.0, worst_inc > 0.0);
        add("curves_concave", worst_curv, 1e-8, worst_curv <= 1e-8);
    }

    SpectrumCurve Lc = legendre(calT, dg), LT = legendre(T, dg);
    Lc.model_hash = LT.model_hash = mhash;
    write("calT_legendre.csv", to_csv(Lc));
    write("T_legendre.csv", to_csv(LT));
    DualityReport dual = duality_check(T, calT, dg);
    write("duality.csv", to_csv(dual));
    add("duality", dual.max_discrepancy, cfg.tol_duality, dual.evaluated > 0 && dual.max_discrepancy <= cfg.tol_duality);

    SpectrumCurve pred;
    pred.kind = "tau_predicted";
    pred.depth = cfg.pressure_depth;
    pred.model_hash = mhash;
    for (double q : tq) {
        pred.x.push_back(q);
        pred.value.push_back(std::min(pressure_root(*P, q, RootKind::CalT, cfg.root_tol).root, 0.0));
        pred.edge.push_back(0);
    }
    write("tau_predicted.csv", to_csv(pred));
    LowerSpectrum lower = predicted_lower_spectrum(*P, calT, t0, dg, cfg.root_tol);
    lower.curve.model_hash = mhash;
    write("lower_spectrum_predicted.csv", to_csv(lower.curve));
    add("lower_spectrum_continuity", lower.continuity_gap, cfg.tol_continuity, lower.continuity_gap <= cfg.tol_continuity);

    // conformal measure
    RpfOptions ro;
    ro.window = cfg.rpf_window;
    ro.chain_depth = std::max({cfg.max_atom_depth + 2, cfg.measure_depth, cfg.xi_depth + 2,
                               *std::max_element(cfg.gibbs_depths.begin(), cfg.gibbs_depths.end()) + 1});
    ro.lambda_steps = cfg.pressure_depth;
    ro.residual_bound = std::max(cfg.tol_rpf_residual, 1e-6);
    std::shared_ptr<GibbsFamily> fam;
    stage("rpf", [&] { fam = std::make_shared<GibbsFamily>(path, 0, cfg.rpf_iters, ro); });
    const double residual = fam->residual();
    add("rpf_residual", residual, cfg.tol_rpf_residual, residual <= cfg.tol_rpf_residual);
    double lam = 0.0;
    for (int i = 0; i < cfg.pressure_depth; ++i) lam += fam->log_lambda(i);
    lam /= cfg.pressure_depth;
    add("lambda_mean", std::abs(lam), cfg.tol_lambda_mean, std::abs(lam) <= cfg.tol_lambda_mean);

    for (int n : cfg.gibbs_depths)
        if (static_cast<double>(count_words(path, 0, n)) > cfg.memory_cap)
            fail(ErrorKind::ResourceGuard, "gibbs diagnostic at depth " + std::to_string(n) + " exceeds the memory cap");
    GibbsReport gib;
    stage("gibbs", [&] { gib = gibbs_diagnostic(*fam, 0, cfg.gibbs_depths); });
    write("gibbs.csv", to_csv(gib));
    add("gibbs_within_allowance", gib.all_within() ? 1.0 : 0.0, 1.0, gib.all_within());
    add("gibbs_defect_nonincreasing", gib.defect_nonincreasing() ? 1.0 : 0.0, 1.0, gib.defect_nonincreasing());

    if (static_cast<double>(count_words(path, 0, cfg.measure_depth)) > cfg.memory_cap)
        fail(ErrorKind::ResourceGuard, "measure table exceeds the memory cap");
    write("measure.csv", to_csv(materialize(*fam, 0, cfg.measure_depth)));

    // inverse measure
    AtomOptions ao;
    ao.min_depth = cfg.gen_depth;
    ao.mass_floor = std::exp2(cfg.mass_floor_log2);
    ao.max_depth = cfg.max_atom_depth;
    if (static_cast<double>(count_words(path, 0, cfg.gen_depth)) > cfg.memory_cap)
        fail(ErrorKind::ResourceGuard, "atom enumeration exceeds the memory cap");
    AtomList al;
    stage("atoms", [&] { al = atoms_adaptive(*fam, 0, ao); });
    {
        AtomList shallow = al;
        shallow.atoms.clear();
        for (const auto& a : al.atoms)
            if (a.generation() < cfg.atoms_csv_generations) shallow.atoms.push_back(a);
        write("atoms.csv", to_csv(shallow));
    }
    const double cons = std::abs(al.total() - 1.0);
    add("conservation", cons, cfg.tol_conservation, cons <= cfg.tol_conservation);
    InverseMeasure nu(al);

    LqResult lq;
    stage("lq", [&] { lq = lq_estimate(nu, tq, cfg.scales.values()); });
    lq.tau.model_hash = mhash;
    write("tau_hat.csv", to_csv(lq));
    {
        std::ostringstream os;
        os << "q,tau_hat,tau_predicted,abs_dev\n";
        double worst = 0.0;
        for (std::size_t i = 0; i < tq.size(); ++i) {
            const double dev = std::abs(lq.tau.value[i] - pred.value[i]);
            worst = std::max(worst, dev);
            os << fmt_double(tq[i]) << "," << fmt_double(lq.tau.value[i]) << "," << fmt_double(pred.value[i]) << "," << fmt_double(dev)
               << "\n";
        }
        write("tau_deviation.csv", os.str());
        add("tau_deviation", worst, cfg.tol_tau, worst <= cfg.tol_tau);
    }

    // local dimensions: heaviest atoms and typical points
    const std::vector<double> lsc = cfg.local_scales.values();
    std::vector<double> top;
    {
        std::vector<std::size_t> idx(nu.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return nu.weights()[a] > nu.weights()[b]; });
        for (std::size_t i = 0; i < idx.size() && static_cast<int>(i) < cfg.top_atoms; ++i) top.push_back(nu.positions()[idx[i]]);
    }
    MassFn mf = mass_fn(*fam);
    std::vector<LocalDim> atom_dims, typ_dims;
    std::vector<double> typ;
    std::vector<AlphaValue> alphas;
    stage("local_dims", [&] {
        atom_dims = local_dims(nu, top, lsc, cfg.local_window);
        typ = sample_points(mf, path, 0, cfg.typical_samples, 40, cfg.stream + "/typical");
        typ_dims = local_dims(nu, typ, lsc, cfg.local_window);
        alphas.resize(typ.size());
        const double rmin = *std::min_element(lsc.begin(), lsc.end());
        parallel_for(typ.size(), [&](std::size_t i) { alphas[i] = alpha_at_point(mf, path, 0, typ[i], rmin); });
    });
    {
        std::string text = to_csv(atom_dims, "atom");
        std::string t2 = to_csv(typ_dims, "typical");
        text += t2.substr(t2.find('\n') + 1);
        write("local_dims.csv", text);
        double worst = 0.0;
        for (const auto& d : atom_dims) worst = std::max(worst, d.lower);
        add("atom_lower_dims", worst, cfg.tol_atom_dim, worst <= cfg.tol_atom_dim);
        int viol = 0;
        for (std::size_t i = 0; i < typ.size(); ++i)
            if (typ_dims[i].lower > alphas[i].alpha + cfg.tol_sandwich) ++viol;
        const double rate = typ.empty() ? 0.0 : static_cast<double>(viol) / static_cast<double>(typ.size());
        add("sandwich_violation_rate", rate, cfg.sandwich_violation_rate, rate <= cfg.sandwich_violation_rate);
    }

    // approximation degrees
    {
        std::vector<double> xs = sample_points(mf, path, 0, cfg.xi_samples, 40, cfg.stream + "/xi");
        std::vector<ApproxDegree> ad(xs.size());
        std::vector<int> ok(xs.size(), 0);
        stage("approx_degree", [&] {
            parallel_for(xs.size(), [&](std::size_t i) {
                try {
                    ad[i] = approx_degree(mf, path, 0, xs[i], cfg.xi_depth);
                    ok[i] = 1;
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::AtomCollision) throw;
                }
            });
        });
        std::ostringstream os;
        os << "x,xi_tail,xi_hat_tail\n";
        int inside = 0, total = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!ok[i]) continue;
            ++total;
            if (ad[i].xi_hat_tail >= 0.85 && ad[i].xi_hat_tail <= 1.15) ++inside;
            os << fmt_double(xs[i]) << "," << fmt_double(ad[i].xi_tail) << "," << fmt_double(ad[i].xi_hat_tail) << "\n";
        }
        write("approx_degree.csv", os.str());
        const double frac = total ? static_cast<double>(inside) / total : 0.0;
        add("xi_hat_near_one", frac, 0.9, frac >= 0.9);
    }

    // box dimension of the attractor against the Bowen root
    {
        const int bd = box_depth(*model, cfg);
        if (static_cast<double>(count_words(path, 0, bd)) > cfg.memory_cap)
            fail(ErrorKind::ResourceGuard, "box counting at depth " + std::to_string(bd) + " exceeds the memory cap");
        BoxDimension box;
        stage("box", [&] { box = box_dimension(path, 0, bd, cfg.box_scales.values()); });
        std::ostringstream os;
        os << "# depth\n# " << bd << "\nscale,count\n";
        for (std::size_t i = 0; i < box.scales.size(); ++i) os << fmt_double(box.scales[i]) << "," << fmt_double(box.counts[i]) << "\n";
        write("box.csv", os.str());
        add("box_dimension", std::abs(box.dimension - t0), cfg.tol_box, std::abs(box.dimension - t0) <= cfg.tol_box);
        res.summary["box_dimension"] = box.dimension;
    }

    res.summary["version"] = kVersion;
    res.summary["model_hash"] = mhash;
    res.summary["seed"] = model_in.seed;
    res.summary["phi_shift"] = norm.shift;
    {
        // mixing is only certified on the sampled prefix
        const int cap = std::min(64, horizon);
        res.summary["mixing_prefix"] = cap;
        try {
            res.summary["mixing_time"] = mixing_time(path, 0, cap);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotMixingWithinCap) throw;
            res.summary["mixing_time"] = nullptr;
        }
    }
    res.summary["phi_pressure_cauchy_gap"] = pressure(path, 0, cfg.pressure_depth, 0.0, 0.0, Combo::PhiOnly).cauchy_gap;
    res.summary["t0"] = t0;
    res.summary["calT_at_0"] = calT0;
    res.summary["d_star"] = lower.d_star;
    res.summary["rpf_residual"] = residual;
    res.summary["mean_log_lambda"] = lam;
    res.summary["atoms"] = al.atoms.size();
    res.summary["atom_residual"] = al.residual;
    json checks = json::array();
    for (const auto& c : res.checks)
        checks.push_back({{"name", c.name},
                          {"value", fmt_double(c.value)},
                          {"tolerance", fmt_double(c.tolerance)},
                          {"pass", c.pass},
                          {"informational", c.informational}});
    res.summary["checks"] = checks;
    res.summary["passed"] = res.passed();
    res.summary["config"] = cfg.to_json();
    write("summary.json", res.summary.dump(2) + "\n");

    json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = model_in.seed;
    manifest["model_hash"] = mhash;
    manifest["config_hash"] = hex64(fnv1a64(cfg.to_json().dump()));
    manifest["threads"] = thread_count();
    json files = json::array();
    for (const auto& f : res.files) {
        files.push_back({{"name", f}, {"fnv1a64", hex64(fnv1a64(read_text_file((std::filesystem::path(out_dir) / f).string())))}});
    }
    manifest["files"] = files;
    runtimes["total"] = std::chrono::duration<double>(clock::now() - t_start).count();
    manifest["runtimes_s"] = runtimes;
    write_text_file((std::filesystem::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    res.files.push_back("manifest.json");
    return res;
}

}  // namespace imf
