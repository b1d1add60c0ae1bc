#pragma once

// nlohmann::json conversions for configuration types.

#include <nlohmann/json.hpp>

#include "advregions/attack.hpp"
#include "advregions/classifier.hpp"
#include "advregions/data.hpp"
#include "advregions/neutralization.hpp"
#include "advregions/segregation.hpp"

namespace advregions {

void to_json(nlohmann::json& j, const PairSpec& p);
void from_json(const nlohmann::json& j, PairSpec& p);

void to_json(nlohmann::json& j, const ConvBlockConfig& c);
void from_json(const nlohmann::json& j, ConvBlockConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const InputShape& s);
void from_json(const nlohmann::json& j, InputShape& s);

void to_json(nlohmann::json& j, const AttackConfig& c);
void from_json(const nlohmann::json& j, AttackConfig& c);

// Thresholds serialise as "q0.85" (quantile) or a bare number (absolute).
void to_json(nlohmann::json& j, const Threshold& t);
void from_json(const nlohmann::json& j, Threshold& t);

void to_json(nlohmann::json& j, const ScoreQuad& s);
void from_json(const nlohmann::json& j, ScoreQuad& s);

}  // namespace advregions
