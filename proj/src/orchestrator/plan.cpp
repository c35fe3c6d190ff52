#include "tirtha/orchestrator/plan.hpp"

#include <algorithm>

#include "tirtha/common/error.hpp"

namespace tirtha::orchestrator {

StageGroup group_of(std::string_view stage) {
  auto it = std::find(kStageNames.begin(), kStageNames.end(), stage);
  auto pos = it - kStageNames.begin();
  if (pos <= 5) return StageGroup::FeaturesAndMatching;
  if (pos <= 9) return StageGroup::DepthAndMeshing;
  return StageGroup::MeshProcessing;
}

bool is_stage_name(std::string_view name) {
  return std::find(kStageNames.begin(), kStageNames.end(), name) != kStageNames.end();
}

bool StagePlan::contains(std::string_view name) const { return find(name) != nullptr; }

const StageSpec* StagePlan::find(std::string_view name) const {
  for (const auto& s : stages)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<std::string> StagePlan::names() const {
  std::vector<std::string> out;
  for (const auto& s : stages) out.push_back(s.name);
  return out;
}

nlohmann::json StagePlan::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : stages) out.push_back({{"name", s.name}, {"params", s.params}, {"enabled", s.enabled}});
  return out;
}

StagePlan StagePlan::from_json(const nlohmann::json& doc) {
  StagePlan plan;
  for (const auto& s : doc) {
    StageSpec spec;
    spec.name = s.at("name").get<std::string>();
    if (!is_stage_name(spec.name)) throw Error(ErrorCode::Validation, "unknown stage '" + spec.name + "'");
    spec.params = s.value("params", nlohmann::json::object());
    spec.enabled = s.value("enabled", true);
    plan.stages.push_back(std::move(spec));
  }
  return plan;
}

StagePlan plan_stages(const SiteRecord& site) {
  const ReconOptions& o = site.recon_options;
  StagePlan plan;
  for (std::string_view name : kStageNames) {
    StageSpec spec;
    spec.name = std::string(name);
    if (name == "SfMTransform") {
      if (o.orientation_override) {
        const auto& r = *o.orientation_override;
        spec.params = {{"method", "manual"}, {"manualTransform", {{"rotation", {r[0], r[1], r[2]}}}}};
      } else if (o.center_image) {
        spec.params = {{"method", "from_single_camera"}, {"centerImage", o.center_image->value}};
      } else {
        spec.params = {{"method", "auto_from_cameras"}};
      }
    } else if (name == "Meshing") {
      spec.params = {{"estimateSpaceMinObservationAngle", o.min_observation_angle}};
    } else if (name == "MeshFiltering") {
      spec.params = {{"keepLargestMeshOnly", 1}};
    } else if (name == "MeshDecimate") {
      spec.params = {{"simplificationFactor", o.simplification_factor}};
    } else if (name == "MeshDenoising") {
      if (!o.denoise) continue;
      spec.params = {{"lmd", o.denoise_lmd}, {"eta", o.denoise_eta}};
    } else if (name == "MeshResampling") {
      if (!o.resample) continue;
      spec.params = {{"simplificationFactor", o.simplification_factor}};
    } else if (name == "Texturing") {
      spec.params = {{"textureSide", o.texture_side}};
    }
    plan.stages.push_back(std::move(spec));
  }
  return plan;
}

}  // namespace tirtha::orchestrator
