// instance_io.hpp
//
// Instance files: JSON object {"X":int,"G":int,"H":int,"mu":[[[...]]]}
// with mu indexed [x][g][h]. Ragged or out-of-range input is rejected
// with a descriptive config error.
#pragma once
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtbai/errors.hpp"
#include "mtbai/model.hpp"

namespace mtbai {

inline ModelTensor model_from_json(const nlohmann::json& j, const std::string& where = "instance") {
    if (!j.is_object())
        throw config_error(where + ": expected a JSON object");
    for (const auto& [key, _] : j.items())
        if (key != "X" && key != "G" && key != "H" && key != "mu")
            throw config_error(where + ": unknown key \"" + key + "\"");
    for (const char* key : {"X", "G", "H", "mu"})
        if (!j.contains(key))
            throw config_error(where + ": missing key \"" + std::string(key) + "\"");
    if (!j["X"].is_number_integer() || !j["G"].is_number_integer() || !j["H"].is_number_integer())
        throw config_error(where + ": X, G, H must be integers");
    const int X = j["X"].get<int>(), G = j["G"].get<int>(), H = j["H"].get<int>();
    if (X < 1 || G < 1 || H < 1)
        throw config_error(where + ": X, G, H must be >= 1");

    const auto& mu = j["mu"];
    if (!mu.is_array() || static_cast<int>(mu.size()) != X)
        throw config_error(where + ": mu must be an array of X=" + std::to_string(X) + " tasks");
    std::vector<double> means;
    means.reserve(static_cast<size_t>(X) * G * H);
    for (int x = 0; x < X; ++x) {
        const auto& mx = mu[x];
        if (!mx.is_array() || static_cast<int>(mx.size()) != G)
            throw config_error(where + ": mu[" + std::to_string(x) + "] is ragged (expected G=" +
                               std::to_string(G) + " rows)");
        for (int g = 0; g < G; ++g) {
            const auto& mg = mx[g];
            if (!mg.is_array() || static_cast<int>(mg.size()) != H)
                throw config_error(where + ": mu[" + std::to_string(x) + "][" + std::to_string(g) +
                                   "] is ragged (expected H=" + std::to_string(H) + " entries)");
            for (int h = 0; h < H; ++h) {
                if (!mg[h].is_number())
                    throw config_error(where + ": mu entries must be numbers");
                const double v = mg[h].get<double>();
                if (!(v >= 0.0 && v <= 1.0))
                    throw config_error(where + ": mu[" + std::to_string(x) + "][" + std::to_string(g) +
                                       "][" + std::to_string(h) + "] = " + std::to_string(v) +
                                       " outside [0,1]");
                means.push_back(v);
            }
        }
    }
    return ModelTensor(X, G, H, std::move(means));
}

inline ModelTensor load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open instance file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("instance file " + path + ": " + e.what());
    }
    return model_from_json(j, path);
}

inline nlohmann::json model_to_json(const ModelTensor& m) {
    nlohmann::json mu = nlohmann::json::array();
    for (int x = 0; x < m.tasks(); ++x) {
        nlohmann::json mx = nlohmann::json::array();
        for (int g = 0; g < m.representations(); ++g) {
            nlohmann::json mg = nlohmann::json::array();
            for (int h = 0; h < m.predictors(); ++h) mg.push_back(m.mean(x, g, h));
            mx.push_back(std::move(mg));
        }
        mu.push_back(std::move(mx));
    }
    return {{"X", m.tasks()}, {"G", m.representations()}, {"H", m.predictors()}, {"mu", std::move(mu)}};
}

} // namespace mtbai
