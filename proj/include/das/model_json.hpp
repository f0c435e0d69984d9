#pragma once

#include <string>

#include "das/causal.hpp"

namespace das {

// Human-readable JSON for model structure: variables (id, kind, domain),
// parent lists, and finite-domain mechanism tables. Mechanisms whose variable
// and parents are all finite serialize as explicit tables and reload as
// callable lookups; vector-valued mechanisms serialize as "opaque" (their
// parameters live in matrix archives) and reload as mechanisms that refuse
// to run. docs/model-schema.md documents the schema.
std::string model_to_json(const CausalModel& model);
CausalModel model_from_json(const std::string& text);

void save_model_json(const std::string& path, const CausalModel& model);
CausalModel load_model_json(const std::string& path);

}  // namespace das
