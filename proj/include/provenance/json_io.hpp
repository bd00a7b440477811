#pragma once

#include <nlohmann/json.hpp>

#include <string>

#include "provenance/domain.hpp"
#include "provenance/evaluation.hpp"
#include "provenance/factcheck.hpp"

namespace provenance {

using json = nlohmann::json;

/// Rounds to 9 significant digits; every score leaves the engine this way.
double round_sig9(double value);

json to_json(const PipelineConfig& config);

/// Applies a partial configuration object on top of `base`. Unknown keys and
/// wrongly typed values raise ValidationError naming the key. The result is
/// validated.
PipelineConfig apply_overrides(PipelineConfig base, const json& partial);

json to_json(const FactualityReport& report, bool include_timing = true);
json to_json(const EvalReport& report);
json to_json(const EvalRecord& record);

/// Throws ValidationError naming the missing or malformed field.
EvalRecord record_from_json(const json& object);

}  // namespace provenance
