#pragma once

#include <string>
#include <vector>

namespace hmpc {

/// One evaluated inequality: `value` compared against `threshold`.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

struct ValidationReport {
  std::vector<Check> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  void add(std::string name, double value, double threshold, bool pass, std::string note = {}) {
    checks.push_back({std::move(name), value, threshold, pass, std::move(note)});
  }
};

}  // namespace hmpc
