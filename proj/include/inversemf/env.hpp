#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace imf {

using BinMatrix = std::vector<std::vector<std::uint8_t>>;

enum class MapKind { Affine, Moebius };
enum class ProfileKind { Constant, Lipschitz };

// Potential on one branch, as a function of the normalized coordinate
// y = (x - a) / (b - a) in [0, 1].
struct PotentialProfile {
    ProfileKind kind = ProfileKind::Constant;
    double value = 0.0;
    double slope = 0.0;

    double at(double y) const { return kind == ProfileKind::Constant ? value : value + slope * y; }
};

// One branch of the expanding map. T sends [a, b] onto [0, 1]; in normalized
// coordinates it is the identity (affine) or y(1+c)/(1+cy) (Moebius, |c| < 1).
struct BranchSpec {
    double a = 0.0;
    double b = 1.0;
    MapKind map = MapKind::Affine;
    double c = 0.0;
    PotentialProfile phi;

    double width() const { return b - a; }
    double to_y(double x) const { return (x - a) / (b - a); }
    // normalized inverse branch [0,1] -> [0,1]
    double ginv_y(double z) const;
    // inverse branch [0,1] -> [a,b]
    double ginv(double z) const { return a + (b - a) * ginv_y(z); }
    // -log |T'| at normalized coordinate y
    double psi_y(double y) const;
    double psi(double x) const { return psi_y(to_y(x)); }
    double phi_y(double y) const { return phi.at(y); }
    // max of |d ginv/dz| over [0,1]
    double max_contraction() const;
    bool locally_constant_psi() const { return map == MapKind::Affine || c == 0.0; }
    bool locally_constant_phi() const { return phi.kind == ProfileKind::Constant || phi.slope == 0.0; }
};

struct EnvState {
    int id = 0;
    std::vector<BranchSpec> branches;
    int alphabet_size() const { return static_cast<int>(branches.size()); }
};

struct EnvModel {
    std::string format = "inversemf/1";
    std::vector<EnvState> states;
    std::vector<std::vector<double>> transition;
    std::map<std::pair<int, int>, BinMatrix> admissibility;
    std::uint64_t seed = 0;
    double derivative_bound = 50.0;

    int num_states() const { return static_cast<int>(states.size()); }
    const BinMatrix& adm(int k, int k2) const;
    bool has_edge(int k, int k2) const { return transition[k][k2] > 0.0; }
};

// Structural problems (shape, missing keys, zero rows) throw Error(Structural).
EnvModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const EnvModel& m);
EnvModel load_model(const std::string& path);
// 64-bit FNV-1a of the canonical JSON serialization, as 16 hex digits.
std::string model_hash(const EnvModel& m);

std::vector<double> stationary_distribution(const EnvModel& m);
bool is_primitive(const std::vector<std::vector<double>>& q);

enum class CheckStatus { Pass, Warn, Fail };

struct Check {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    std::string detail;
};

struct ValidationReport {
    std::vector<Check> checks;
    double c_psi = 0.0;
    double c_phi = 0.0;
    std::vector<double> stationary;

    bool ok() const;
    bool has_warnings() const;
    nlohmann::json to_json() const;
};

// Checks the standing assumptions. Structural errors throw; invariant
// violations are reported, not thrown.
ValidationReport validate_model(const EnvModel& m);
// Throws Error(InvalidModel) listing the failed checks.
void require_valid(const EnvModel& m);

struct EnvPath {
    std::shared_ptr<const EnvModel> model;
    std::vector<int> states;
    std::uint64_t seed = 0;
    std::string stream_label;
    int offset = 0;  // shifts applied relative to the sampled path

    int horizon() const { return static_cast<int>(states.size()) - 1; }
    int state_at(int k) const { return states.at(static_cast<std::size_t>(k)); }
    const EnvState& at(int k) const { return model->states[static_cast<std::size_t>(state_at(k))]; }
    int alphabet(int k) const { return at(k).alphabet_size(); }
    const BranchSpec& branch(int k, int s) const { return at(k).branches[static_cast<std::size_t>(s - 1)]; }
    // admissibility from letters at time k to letters at time k+1
    const BinMatrix& adm(int k) const { return model->adm(state_at(k), state_at(k + 1)); }
    bool allowed(int k, int s, int s2) const { return adm(k)[s - 1][s2 - 1] != 0; }
    void require_horizon(int k, const char* what) const;
};

// States 0..horizon, started from the stationary law of Q. The model must
// pass validation.
EnvPath sample_path(std::shared_ptr<const EnvModel> model, int horizon, const std::string& stream_label = "main");
EnvPath shift_path(const EnvPath& path, int k);

nlohmann::json path_to_json(const EnvPath& p);

}  // namespace imf
