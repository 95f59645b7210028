#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace mcod {

// Provenance record for a CLI run. The hash of the serialized manifest is
// stamped into every output file's comment header so results can be traced
// back to their inputs and configuration.
struct RunManifest {
  std::string command;
  std::vector<std::string> input_paths;
  std::map<std::string, std::string> config;  // flattened key=value settings
  std::uint64_t seed = 0;
  std::string timestamp;  // ISO 8601 UTC

  static std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  // Canonical serialization; the timestamp is excluded so reruns with the
  // same inputs and config hash identically.
  std::string canonical() const {
    std::ostringstream os;
    os << "command=" << command << '\n';
    for (const auto& p : input_paths) os << "input=" << p << '\n';
    for (const auto& [k, v] : config) os << k << '=' << v << '\n';
    os << "seed=" << seed << '\n';
    return os.str();
  }

  std::string hash() const {
    // FNV-1a 64-bit over the canonical form.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }

  std::string comment() const { return "manifest-hash " + hash(); }
};

}  // namespace mcod
