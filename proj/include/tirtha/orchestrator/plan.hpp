#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirtha/domain/types.hpp"

namespace tirtha::orchestrator {

/// Reconstruction nodes in execution order.
inline constexpr std::array<std::string_view, 15> kStageNames = {
    "CameraInit",         "FeatureExtraction", "ImageMatching",     "FeatureMatching", "StructureFromMotion",
    "SfMTransform",       "PrepareDenseScene", "DepthMapEstimation", "DepthMapFilter", "Meshing",
    "MeshFiltering",      "MeshDecimate",      "MeshDenoising",     "MeshResampling",  "Texturing"};

enum class StageGroup { FeaturesAndMatching, DepthAndMeshing, MeshProcessing };

StageGroup group_of(std::string_view stage);
bool is_stage_name(std::string_view name);

struct StageSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  bool enabled = true;
};

struct StagePlan {
  std::vector<StageSpec> stages;

  bool contains(std::string_view name) const;
  const StageSpec* find(std::string_view name) const;
  std::vector<std::string> names() const;
  nlohmann::json to_json() const;
  static StagePlan from_json(const nlohmann::json& doc);
};

/// Stock parameters overridden by the site's options. MeshDenoising and
/// MeshResampling appear only when the site enables them.
StagePlan plan_stages(const SiteRecord& site);

}  // namespace tirtha::orchestrator
