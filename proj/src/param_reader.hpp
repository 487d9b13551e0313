#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "hpd/error.hpp"

namespace hpd::detail {

// Reads hyperparameters out of a JSON object and rejects unknown keys.
class ParamReader {
 public:
  ParamReader(const nlohmann::json& j, std::string model)
      : j_(j), model_(std::move(model)) {
    if (!j_.is_null() && !j_.is_object()) {
      throw ConfigError(model_ + ": hyperparameters must be a JSON object");
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (j_.is_null() || !j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(model_ + ": bad value for '" + key +
                        "': " + j_.at(key).dump());
    }
  }

  bool has(const std::string& key) const {
    return !j_.is_null() && j_.contains(key);
  }
  const nlohmann::json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  // Call after all get()s.
  void finish() const {
    if (j_.is_null()) return;
    for (const auto& [key, _] : j_.items()) {
      if (!used_.contains(key)) {
        throw ConfigError(model_ + ": unknown hyperparameter '" + key + "'");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string model_;
  std::set<std::string> used_;
};

}  // namespace hpd::detail
