#include "hallucmap/labels.hpp"

#include "hallucmap/error.hpp"

namespace hallucmap {

std::string_view to_string(HallucinationType type) {
  switch (type) {
    case HallucinationType::kFabrication: return "fabrication";
    case HallucinationType::kFactualContradiction: return "factual_contradiction";
    case HallucinationType::kMisinterpretation: return "misinterpretation";
    case HallucinationType::kContextInconsistency: return "context_inconsistency";
    case HallucinationType::kLogicalInconsistency: return "logical_inconsistency";
  }
  return "unknown";
}

HallucinationType parse_hallucination_type(std::string_view name) {
  for (auto type : kAllHallucinationTypes) {
    if (to_string(type) == name) return type;
  }
  throw ParseError("unknown hallucination type '" + std::string(name) + "'");
}

std::string GroupLabel::name() const {
  switch (kind_) {
    case Kind::kGroundTruth: return "ground_truth";
    case Kind::kModelCorrect: return "model_correct";
    case Kind::kHallucinated: return "hallucinated_" + std::string(to_string(*type_));
  }
  return "unknown";
}

GroupLabel parse_group_label(std::string_view name) {
  if (name == "ground_truth") return GroupLabel::ground_truth();
  if (name == "model_correct") return GroupLabel::model_correct();
  constexpr std::string_view prefix = "hallucinated_";
  if (name.starts_with(prefix)) {
    return GroupLabel::hallucinated(parse_hallucination_type(name.substr(prefix.size())));
  }
  throw ParseError("unknown group label '" + std::string(name) + "'");
}

}  // namespace hallucmap
