#pragma once

#include <array>
#include <string>

#include "ea/util.hpp"

namespace ea {

enum class EntityType { PER, LOC, ORG };

constexpr std::array<EntityType, 3> kEntityTypes = {EntityType::PER, EntityType::LOC, EntityType::ORG};

inline const char* to_string(EntityType t) {
  switch (t) {
    case EntityType::PER: return "PER";
    case EntityType::LOC: return "LOC";
    case EntityType::ORG: return "ORG";
  }
  return "PER";
}

inline EntityType entity_type_from(const std::string& s) {
  if (s == "PER") return EntityType::PER;
  if (s == "LOC") return EntityType::LOC;
  if (s == "ORG") return EntityType::ORG;
  fail("unknown entity type: " + s);
}

// Nationalities are open-ended identifiers; OTHER is the classifier fallback.
using Nationality = std::string;
inline const Nationality kOther = "OTHER";

}  // namespace ea
