#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace hallucmap {

enum class HallucinationType {
  kFabrication,
  kFactualContradiction,
  kMisinterpretation,
  kContextInconsistency,
  kLogicalInconsistency,
};

inline constexpr std::array<HallucinationType, 5> kAllHallucinationTypes = {
    HallucinationType::kFabrication, HallucinationType::kFactualContradiction,
    HallucinationType::kMisinterpretation, HallucinationType::kContextInconsistency,
    HallucinationType::kLogicalInconsistency};

/// Lowercase snake-case name, e.g. "factual_contradiction".
std::string_view to_string(HallucinationType type);

/// Inverse of to_string. Throws ParseError for anything outside the closed set.
HallucinationType parse_hallucination_type(std::string_view name);

/// Provenance group of one answer text: the dataset reference, a correct
/// model answer, or a hallucinated model answer of a given type.
class GroupLabel {
 public:
  enum class Kind { kGroundTruth, kModelCorrect, kHallucinated };

  static GroupLabel ground_truth() { return GroupLabel(Kind::kGroundTruth, std::nullopt); }
  static GroupLabel model_correct() { return GroupLabel(Kind::kModelCorrect, std::nullopt); }
  static GroupLabel hallucinated(HallucinationType type) { return GroupLabel(Kind::kHallucinated, type); }

  Kind kind() const { return kind_; }
  bool is_hallucinated() const { return kind_ == Kind::kHallucinated; }
  /// Only meaningful when is_hallucinated().
  HallucinationType type() const { return *type_; }

  /// Canonical name: "ground_truth", "model_correct" or "hallucinated_<type>".
  std::string name() const;

  /// Labels order lexicographically by canonical name.
  friend std::strong_ordering operator<=>(const GroupLabel& a, const GroupLabel& b) {
    return a.name() <=> b.name();
  }
  friend bool operator==(const GroupLabel& a, const GroupLabel& b) {
    return a.kind_ == b.kind_ && a.type_ == b.type_;
  }

 private:
  GroupLabel(Kind kind, std::optional<HallucinationType> type) : kind_(kind), type_(type) {}

  Kind kind_;
  std::optional<HallucinationType> type_;
};

/// Inverse of GroupLabel::name(). Throws ParseError on unknown names.
GroupLabel parse_group_label(std::string_view name);

}  // namespace hallucmap
