#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "inversemf/analysis.hpp"

namespace imf {

inline constexpr const char* kVersion = "1.0.0";

struct GridSpec {
    double min = 0.0, max = 0.0, step = 1.0;
    std::vector<double> values() const { return make_grid(min, max, step); }
};

struct ScaleSpec {
    double log2_max = -6.0, log2_min = -12.0, log2_step = 1.0;
    std::vector<double> values() const { return scale_range(log2_max, log2_min, log2_step); }
};

struct AnalysisConfig {
    std::string stream = "main";
    int pressure_depth = 16;
    int normalize_samples = 1;
    double root_tol = 1e-9;
    GridSpec q_grid{-8.0, 8.0, 0.01};
    GridSpec tau_q_grid{-2.0, 2.0, 0.25};
    GridSpec d_grid{0.05, 6.0, 0.01};
    ScaleSpec scales{-6.0, -12.0, 1.0};
    ScaleSpec local_scales{-8.0, -18.0, 1.0};
    int local_window = 3;
    int gen_depth = 14;
    double mass_floor_log2 = -18.0;
    int max_atom_depth = 64;
    int atoms_csv_generations = 8;
    int rpf_iters = 60;
    int rpf_window = 0;
    int measure_depth = 8;
    std::vector<int> gibbs_depths{6, 8, 10, 12};
    ScaleSpec box_scales{-4.0, -14.0, 1.0};
    int typical_samples = 200;
    int top_atoms = 50;
    int xi_samples = 200;
    int xi_depth = 28;
    double memory_cap = 1e8;
    // check tolerances
    double tol_identity = 1e-6;
    double tol_duality = 5e-3;
    double tol_conservation = 1e-10;
    double tol_rpf_residual = 1e-10;
    double tol_lambda_mean = 1e-3;
    double tol_tau = 0.2;
    double tol_atom_dim = 0.05;
    double tol_box = 0.05;
    double tol_continuity = 1e-3;
    double tol_sandwich = 0.1;
    double sandwich_violation_rate = 0.02;
    std::vector<std::string> informational;

    static AnalysisConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

AnalysisConfig load_config(const std::string& path);

struct ReportCheck {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool informational = false;
};

struct ReportResult {
    std::vector<ReportCheck> checks;
    std::vector<std::string> files;
    nlohmann::json summary;
    bool passed() const;
};

// Runs the full pipeline on the model and writes the CSV bundle, summary.json
// and manifest.json into out_dir. Everything except the runtimes recorded
// in manifest.json is independent of the thread count.
ReportResult spectrum_report(const EnvModel& model, const AnalysisConfig& cfg, const std::string& out_dir);

// horizon needed by the report pipeline
int report_horizon(const EnvModel& model, const AnalysisConfig& cfg);

}  // namespace imf
