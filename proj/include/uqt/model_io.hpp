#pragma once

#include <filesystem>

#include <json.hpp>

#include "uqt/neural.hpp"
#include "uqt/regressors.hpp"

namespace uqt {

// Self-describing JSON dumps; see README "Model dump format".
nlohmann::json to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MLPModel& model);
MLPModel mlp_from_json(const nlohmann::json& doc);

void save_model(const EnsembleModel& model, const std::filesystem::path& path);
void save_model(const MLPModel& model, const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);
MLPModel load_mlp(const std::filesystem::path& path);

}  // namespace uqt
