#pragma once

#include <json.hpp>

#include <memory>
#include <string>

#include "inversemf/env.hpp"

namespace fx {

inline std::string model_file(const std::string& name) { return std::string(IMF_MODELS_DIR) + "/" + name + ".json"; }

inline std::shared_ptr<const imf::EnvModel> model(const std::string& name) {
    return std::make_shared<const imf::EnvModel>(imf::load_model(model_file(name)));
}

inline std::shared_ptr<const imf::EnvModel> from_json(const nlohmann::json& j) {
    return std::make_shared<const imf::EnvModel>(imf::model_from_json(j));
}

inline imf::EnvPath path(const std::string& name, int horizon) { return imf::sample_path(model(name), horizon); }
inline imf::EnvPath path(std::shared_ptr<const imf::EnvModel> m, int horizon) { return imf::sample_path(m, horizon); }

// one state with affine branches [a_i, b_i], constant phi_i and admissibility A
inline nlohmann::json one_state(const std::vector<std::array<double, 3>>& br, const std::vector<std::vector<int>>& A = {}) {
    nlohmann::json bs = nlohmann::json::array();
    for (const auto& b : br) bs.push_back({{"a", b[0]}, {"b", b[1]}, {"phi", {{"kind", "constant"}, {"value", b[2]}}}});
    std::vector<std::vector<int>> adm = A;
    if (adm.empty()) adm.assign(br.size(), std::vector<int>(br.size(), 1));
    return {{"format", "inversemf/1"},
            {"seed", 1},
            {"states", {{{"id", 0}, {"branches", bs}}}},
            {"transition", {{1.0}}},
            {"admissibility", {{"0->0", adm}}}};
}

}  // namespace fx
