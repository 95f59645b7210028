#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mcod {

// Main cause-of-death categories in model order. HYP sits last and is the
// fixed reference category for all log-ratios.
enum class MainCause : int { ABO = 0, EMB, HEM, SEP, DIR, IND, HYP };

inline constexpr int kNumMainCauses = 7;
inline constexpr int kReferenceCause = 6;  // HYP

// Estimated subcategories: hemorrhage and sepsis split by timing of death,
// other-direct into four named causes. The *_unknown sentinels mark deaths
// whose main cause is known but carry no subcategory information; they are
// never estimated.
enum class SubCause : int {
  HEM_ante = 0,
  HEM_intra,
  HEM_post,
  SEP_ante,
  SEP_intra,
  SEP_post,
  DIR_obs,
  DIR_ane,
  DIR_obt,
  DIR_oth,
  HEM_unknown_timing,
  SEP_unknown_timing,
  DIR_unknown_sub,
};

inline constexpr int kNumSubCauses = 10;  // estimated subcategories only

inline constexpr std::array<std::string_view, kNumMainCauses> kMainCauseNames = {
    "ABO", "EMB", "HEM", "SEP", "DIR", "IND", "HYP"};

inline constexpr std::array<std::string_view, 13> kSubCauseNames = {
    "HEM_ante", "HEM_intra", "HEM_post",  "SEP_ante",
    "SEP_intra", "SEP_post", "DIR_obs",   "DIR_ane",
    "DIR_obt",  "DIR_oth",   "HEM_unknown_timing",
    "SEP_unknown_timing", "DIR_unknown_sub"};

inline std::string_view to_string(MainCause c) {
  return kMainCauseNames[static_cast<int>(c)];
}

inline std::string_view to_string(SubCause c) {
  return kSubCauseNames[static_cast<int>(c)];
}

inline std::optional<MainCause> main_cause_from_string(std::string_view s) {
  for (int i = 0; i < kNumMainCauses; ++i)
    if (kMainCauseNames[i] == s) return static_cast<MainCause>(i);
  return std::nullopt;
}

inline std::optional<SubCause> sub_cause_from_string(std::string_view s) {
  for (int i = 0; i < static_cast<int>(kSubCauseNames.size()); ++i)
    if (kSubCauseNames[i] == s) return static_cast<SubCause>(i);
  return std::nullopt;
}

inline bool is_sentinel(SubCause c) {
  return static_cast<int>(c) >= kNumSubCauses;
}

inline MainCause main_of(SubCause c) {
  switch (c) {
    case SubCause::HEM_ante:
    case SubCause::HEM_intra:
    case SubCause::HEM_post:
    case SubCause::HEM_unknown_timing:
      return MainCause::HEM;
    case SubCause::SEP_ante:
    case SubCause::SEP_intra:
    case SubCause::SEP_post:
    case SubCause::SEP_unknown_timing:
      return MainCause::SEP;
    default:
      return MainCause::DIR;
  }
}

// [first, last) range of estimated subcategory indices for a main cause,
// or {0, 0} if the cause has no subcategories.
inline std::pair<int, int> sub_range(MainCause c) {
  switch (c) {
    case MainCause::HEM: return {0, 3};
    case MainCause::SEP: return {3, 6};
    case MainCause::DIR: return {6, 10};
    default: return {0, 0};
  }
}

inline bool has_sub_causes(MainCause c) {
  auto [a, b] = sub_range(c);
  return b > a;
}

}  // namespace mcod
