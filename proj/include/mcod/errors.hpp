#pragma once

#include <stdexcept>
#include <string>

namespace mcod {

// Every throwing path in the library uses an Error with a stable machine
// code; the CLI serializes these to JSON on exit.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline Error duplicate_code(const std::string& code) {
  return Error("DuplicateCode", "duplicate ICD-10 code in cause map: " + code);
}

inline Error unknown_category_label(const std::string& row) {
  return Error("UnknownCategoryLabel", "unknown category label in row: " + row);
}

inline Error missing_envelope(const std::string& country, int year) {
  return Error("MissingEnvelope", "no envelope estimate for " + country + " in " +
                                      std::to_string(year));
}

inline Error bad_schema(const std::string& path, const std::string& detail) {
  return Error("BadSchema", path + ": " + detail);
}

inline Error insufficient_draws(const std::string& detail) {
  return Error("InsufficientDraws", detail);
}

inline Error all_inits_failed() {
  return Error("AllInitsFailed",
               "log density not finite at any of 100 randomized initial points");
}

inline Error missing_country_year(const std::string& detail) {
  return Error("MissingCountryYear", detail);
}

inline Error empty_after_exclusion(const std::string& detail) {
  return Error("EmptyAfterExclusion", detail);
}

inline Error domain_error(const std::string& detail) {
  return Error("DomainError", detail);
}

}  // namespace mcod
