// inversemf command-line front end.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "inversemf/analysis.hpp"
#include "inversemf/env.hpp"
#include "inversemf/errors.hpp"
#include "inversemf/format.hpp"
#include "inversemf/gibbs.hpp"
#include "inversemf/inverse.hpp"
#include "inversemf/parallel.hpp"
#include "inversemf/report.hpp"
#include "inversemf/thermo.hpp"

using namespace imf;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInvariant = 2, kStructural = 3, kBracket = 4, kAcceptance = 5, kResource = 6 };

int exit_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::Structural:
        case ErrorKind::Io:
        case ErrorKind::InvalidArgument:
            return kStructural;
        case ErrorKind::BracketFailure:
            return kBracket;
        case ErrorKind::ResourceGuard:
            return kResource;
        default:
            return kInvariant;
    }
}

struct Globals {
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string format = "csv";
};

EnvModel load(const std::string& file, const Globals& g) {
    EnvModel m = load_model(file);
    if (g.seed) m.seed = *g.seed;
    return m;
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty())
        std::cout << text;
    else
        write_text_file(out, text);
}

std::shared_ptr<const EnvModel> prepared(const EnvModel& m, bool raw, int depth, int horizon, const std::string& stream) {
    if (raw) return std::make_shared<const EnvModel>(m);
    NormalizeOptions no;
    no.n = depth;
    no.horizon = horizon;
    no.stream = stream;
    return std::make_shared<const EnvModel>(normalize_phi(m, no).model);
}

RootKind parse_kind(const std::string& s) {
    if (s == "bowen") return RootKind::Bowen;
    if (s == "calT") return RootKind::CalT;
    if (s == "T") return RootKind::T;
    fail(ErrorKind::InvalidArgument, "unknown combo '" + s + "' (expected bowen, calT or T)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"inversemf: multifractal analysis of inverse measures on random Cantor repellers"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "override the model seed");
    app.add_option("--threads", g.threads, "worker threads (fallback: INVERSEMF_THREADS)");
    app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));

    std::string model_file, config_file, out, out_dir, stream = "main";
    int depth = 16, horizon = 0, iters = 60, gen_depth = 10, count = 0;
    double q = 0.0, tol = 1e-9, floor_log2 = 0.0, qmin = -8, qmax = 8, qstep = 0.01;
    bool raw = false;

    auto* validate = app.add_subcommand("validate", "check model invariants");
    validate->add_option("model", model_file)->required();

    auto* sp = app.add_subcommand("sample-path", "sample an environment path");
    sp->add_option("model", model_file)->required();
    sp->add_option("--horizon", horizon, "path length")->required();
    sp->add_option("--stream", stream);
    sp->add_option("--out", out);

    auto* pr = app.add_subcommand("pressure", "pressure roots and curves");
    pr->add_option("model", model_file)->required();
    pr->add_option("--combo", stream, "bowen, calT or T")->default_val("bowen");
    pr->add_option("--q", q);
    pr->add_option("--depth", depth);
    pr->add_option("--tol", tol);
    pr->add_option("--out", out, "write the root curve over the q grid as CSV");
    pr->add_option("--q-min", qmin);
    pr->add_option("--q-max", qmax);
    pr->add_option("--q-step", qstep);
    pr->add_flag("--raw", raw, "skip normalization of phi");

    auto* me = app.add_subcommand("measure", "conformal measure of cylinders");
    me->add_option("model", model_file)->required();
    me->add_option("--depth", depth)->default_val(8);
    me->add_option("--iters", iters);
    me->add_option("--out", out);
    me->add_flag("--raw", raw);

    auto* at = app.add_subcommand("atoms", "atoms of the inverse measure");
    at->add_option("model", model_file)->required();
    at->add_option("--gen-depth", gen_depth);
    at->add_option("--floor-log2", floor_log2, "expand deeper while the cylinder mass is at least 2^floor");
    at->add_option("--iters", iters);
    at->add_option("--out", out);
    at->add_flag("--raw", raw);

    auto* spectrum_cmd = app.add_subcommand("spectrum", "calT, T and their Legendre transforms");
    spectrum_cmd->add_option("model", model_file)->required();
    spectrum_cmd->add_option("--config", config_file);
    spectrum_cmd->add_option("--out-dir", out_dir)->required();

    auto* an = app.add_subcommand("analyze", "L^q spectrum estimate of the inverse measure");
    an->add_option("model", model_file)->required();
    an->add_option("--config", config_file);
    an->add_option("--count", count, "also estimate local dimensions at this many typical points");
    an->add_option("--out", out);

    auto* rep = app.add_subcommand("report", "full pipeline with checks");
    rep->add_option("model", model_file)->required();
    rep->add_option("config", config_file);
    rep->add_option("--out-dir", out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kStructural;
    }
    if (*seed_opt) g.seed = seed_value;
    if (g.threads > 0) set_threads(g.threads);

    std::string stage = "setup";
    try {
        stage = "load";
        if (validate->parsed()) {
            EnvModel m = load(model_file, g);
            stage = "validate";
            ValidationReport r = validate_model(m);
            std::cout << r.to_json().dump(2) << "\n";
            return r.ok() ? kOk : kInvariant;
        }
        if (sp->parsed()) {
            EnvModel m = load(model_file, g);
            EnvPath p = sample_path(std::make_shared<const EnvModel>(m), horizon, stream);
            if (g.format == "json") {
                emit(path_to_json(p).dump(2) + "\n", out);
            } else {
                std::ostringstream os;
                os << "t,state,alphabet\n";
                for (int t = 0; t < p.horizon(); ++t) os << t << "," << p.state_at(t) << "," << p.alphabet(t) << "\n";
                emit(os.str(), out);
            }
            return kOk;
        }
        if (pr->parsed()) {
            EnvModel m = load(model_file, g);
            const RootKind kind = parse_kind(stream);
            stage = "normalize";
            auto pm = prepared(m, raw, depth, depth, "main");
            EnvPath p = sample_path(pm, depth, "main");
            stage = "pressure";
            PressureEvaluator P(p, 0, depth);
            RootResult r = pressure_root(P, q, kind, tol);
            if (!out.empty()) {
                SpectrumCurve c = root_curve(P, kind, make_grid(qmin, qmax, qstep), tol);
                c.model_hash = model_hash(m);
                write_text_file(out, to_csv(c));
            }
            if (g.format == "json")
                std::cout << json{{"combo", stream}, {"q", q}, {"root", r.root}, {"residual", r.residual}}.dump() << "\n";
            else
                std::cout << fmt_double(r.root) << "\n";
            return kOk;
        }
        if (me->parsed()) {
            EnvModel m = load(model_file, g);
            stage = "normalize";
            auto pm = prepared(m, raw, 16, 16, "main");
            EnvPath p = sample_path(pm, depth + iters + 64, "main");
            stage = "rpf";
            RpfOptions ro;
            ro.chain_depth = depth;
            RpfResult r = rpf_measure(p, 0, depth, iters, ro);
            emit(to_csv(r.table), out);
            return kOk;
        }
        if (at->parsed()) {
            EnvModel m = load(model_file, g);
            stage = "normalize";
            auto pm = prepared(m, raw, 16, 16, "main");
            AtomOptions ao;
            ao.min_depth = gen_depth;
            ao.mass_floor = floor_log2 < 0 ? std::exp2(floor_log2) : INFINITY;
            ao.max_depth = std::max(gen_depth, 64);
            EnvPath p = sample_path(pm, ao.max_depth + iters + 200, "main");
            stage = "rpf";
            RpfOptions ro;
            ro.chain_depth = ao.max_depth + 2;
            GibbsFamily fam(p, 0, iters, ro);
            stage = "atoms";
            emit(to_csv(atoms_adaptive(fam, 0, ao)), out);
            return kOk;
        }
        if (spectrum_cmd->parsed() || an->parsed()) {
            EnvModel m = load(model_file, g);
            AnalysisConfig cfg = config_file.empty() ? AnalysisConfig{} : load_config(config_file);
            stage = "normalize";
            NormalizeOptions no;
            no.n = cfg.pressure_depth;
            no.horizon = report_horizon(m, cfg);
            no.stream = cfg.stream;
            auto pm = std::make_shared<const EnvModel>(normalize_phi(m, no).model);
            EnvPath p = sample_path(pm, no.horizon, cfg.stream);
            if (spectrum_cmd->parsed()) {
                stage = "pressure";
                PressureEvaluator P(p, 0, cfg.pressure_depth, cfg.memory_cap);
                const auto qg = cfg.q_grid.values();
                const auto dg = cfg.d_grid.values();
                SpectrumCurve c = root_curve(P, RootKind::CalT, qg, cfg.root_tol);
                SpectrumCurve T = root_curve(P, RootKind::T, qg, cfg.root_tol);
                c.model_hash = T.model_hash = model_hash(m);
                std::filesystem::create_directories(out_dir);
                auto path_of = [&](const char* n) { return (std::filesystem::path(out_dir) / n).string(); };
                write_text_file(path_of("calT.csv"), to_csv(c));
                write_text_file(path_of("T.csv"), to_csv(T));
                write_text_file(path_of("calT_legendre.csv"), to_csv(legendre(c, dg)));
                write_text_file(path_of("T_legendre.csv"), to_csv(legendre(T, dg)));
                write_text_file(path_of("duality.csv"), to_csv(duality_check(T, c, dg)));
                return kOk;
            }
            stage = "rpf";
            RpfOptions ro;
            ro.chain_depth = cfg.max_atom_depth + 2;
            ro.lambda_steps = cfg.pressure_depth;
            GibbsFamily fam(p, 0, cfg.rpf_iters, ro);
            stage = "atoms";
            AtomOptions ao;
            ao.min_depth = cfg.gen_depth;
            ao.mass_floor = std::exp2(cfg.mass_floor_log2);
            ao.max_depth = cfg.max_atom_depth;
            InverseMeasure nu(atoms_adaptive(fam, 0, ao));
            stage = "lq";
            LqResult lq = lq_estimate(nu, cfg.tau_q_grid.values(), cfg.scales.values());
            lq.tau.model_hash = model_hash(m);
            std::string text = to_csv(lq);
            if (count > 0) {
                stage = "local_dims";
                auto xs = sample_points(mass_fn(fam), p, 0, count, 40, cfg.stream + "/typical");
                std::string t2 = to_csv(local_dims(nu, xs, cfg.local_scales.values(), cfg.local_window), "typical");
                text += "\n" + t2;
            }
            emit(text, out);
            return kOk;
        }
        if (rep->parsed()) {
            EnvModel m = load(model_file, g);
            AnalysisConfig cfg = config_file.empty() ? AnalysisConfig{} : load_config(config_file);
            stage = "report";
            ReportResult r = spectrum_report(m, cfg, out_dir);
            int failed = 0;
            for (const auto& c : r.checks) {
                const char* tag = c.pass ? "PASS" : (c.informational ? "INFO" : "FAIL");
                if (!c.pass && !c.informational) ++failed;
                std::cout << tag << " " << c.name << " value=" << fmt_double(c.value) << " tol=" << fmt_double(c.tolerance) << "\n";
            }
            std::cout << r.files.size() << " files written to " << out_dir << "\n";
            return failed ? kAcceptance : kOk;
        }
    } catch (const Error& e) {
        std::cerr << "inversemf: " << stage << ": " << e.what() << "\n";
        return exit_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "inversemf: " << stage << ": " << e.what() << "\n";
        return kStructural;
    }
    return kOk;
}
