#pragma once
// Strict field readers for JSON configuration objects.

#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace hyres::detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw std::invalid_argument(where + "." + it.key() + ": unknown field");
}

/// Reads `key` into `out` when present; absent keys keep the default.
template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(where + "." + key + ": " + e.what());
  }
}

}  // namespace hyres::detail
