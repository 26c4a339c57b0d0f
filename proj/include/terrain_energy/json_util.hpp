#ifndef TERRAIN_ENERGY_JSON_UTIL_HPP
#define TERRAIN_ENERGY_JSON_UTIL_HPP

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "terrain_energy/errors.hpp"

namespace terrain_energy {

/// Throws ValidationError unless `doc` is an object whose keys are all in `allowed`.
inline void require_known_keys(const nlohmann::json& doc,
                               std::initializer_list<std::string_view> allowed,
                               std::string_view context) {
  if (!doc.is_object()) throw ValidationError(std::string(context) + " must be a JSON object");
  for (const auto& item : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ValidationError("unknown key '" + item.key() + "' in " + std::string(context));
    }
  }
}

/// Reads doc[key] into `out` when present.
template <typename T>
void read_optional(const nlohmann::json& doc, const char* key, T& out, std::string_view context) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string(context) + "." + key + ": " + e.what());
  }
}

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_JSON_UTIL_HPP
