#pragma once

#include <string>
#include <vector>

#include "das/causal.hpp"
#include "das/mlp.hpp"

namespace das {

// JSON Lines formats:
//   counterfactual: {"base": [...], "sources": [[...]], "targets": [["left_eq"]], "gold": 1}
//   labeled:        {"inputs": [...], "label": 1}
// All entries are domain indices.

void write_counterfactuals(const std::string& path,
                           const std::vector<CounterfactualExample>& data);
// When `audit_against` is non-null, every gold label is recomputed through
// the model and mismatches are rejected.
std::vector<CounterfactualExample> read_counterfactuals(const std::string& path,
                                                        const CausalModel* audit_against);

void write_labeled(const std::string& path, const std::vector<LabeledExample>& data);
std::vector<LabeledExample> read_labeled(const std::string& path);

// FNV-1a over the file bytes; recorded in dataset manifests.
std::uint64_t content_hash(const std::string& path);

}  // namespace das
