#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace advsmooth {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // measured values against their thresholds
  double seconds = 0.0;
  double time_limit = 0.0;
  bool within_time() const { return seconds < time_limit; }
};

struct CheckInfo {
  std::string name;
  std::string summary;
  double time_limit;  // seconds
  std::function<CheckResult(std::uint64_t seed)> run;
};

/// Named lemma and property checks over the attack, probe and entropy code.
const std::vector<CheckInfo>& lemma_checks();

/// Runs the named checks (all when `names` is empty) in registry order.
/// Unknown names raise ConfigError. A check passes only if its property
/// holds and it finishes within its time limit.
std::vector<CheckResult> run_lemma_checks(const std::vector<std::string>& names, std::uint64_t seed,
                                          std::ostream* progress = nullptr);

/// One line: "[PASS] name (1.23 s): detail".
std::string format_check(const CheckResult& r);

}  // namespace advsmooth
