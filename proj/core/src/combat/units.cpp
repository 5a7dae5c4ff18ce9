#include "hillfight/combat/units.hpp"

#include <stdexcept>

namespace hf::combat {
namespace {

std::size_t slot(Archetype archetype, bool sieged) {
  if (archetype == Archetype::SiegeTank) return sieged ? 4 : 3;
  if (sieged) throw std::invalid_argument("only siege tanks have a siege mode");
  return static_cast<std::size_t>(archetype);
}

}  // namespace

UnitCatalog UnitCatalog::defaults() {
  UnitCatalog c;
  c.specs_[0] = UnitSpec{Archetype::Marine, false, 6, 9, 6, 6, kNoAttribute, kNoAttribute, 45, 8, 1.0, 0.0, 1};
  c.specs_[1] = UnitSpec{Archetype::Marauder, false, 7, 9, 10, 30, kMachinery, kHeavyArmor, 125, 12, 0.9, 0.0, 2};
  c.specs_[2] = UnitSpec{
      Archetype::Tank, false, 8, 9, 15, 25, kHeavyArmor, static_cast<AttributeSet>(kMachinery | kHeavyArmor),
      160, 15, 0.8, 0.0, 3};
  // Tank mode of the siege tank fights like a general tank.
  c.specs_[3] = UnitSpec{Archetype::SiegeTank, false, 8, 9, 15, 25, kHeavyArmor,
                         static_cast<AttributeSet>(kMachinery | kHeavyArmor), 175, 25, 0.8, 0.0, 3};
  c.specs_[4] = UnitSpec{Archetype::SiegeTank, true, 17, 9, 5, 10, kHeavyArmor,
                         static_cast<AttributeSet>(kMachinery | kHeavyArmor), 175, 25, 0.0, 1.25, 3};
  return c;
}

const UnitSpec& UnitCatalog::get(Archetype archetype, bool sieged) const { return specs_[slot(archetype, sieged)]; }

UnitSpec& UnitCatalog::mutable_spec(Archetype archetype, bool sieged) { return specs_[slot(archetype, sieged)]; }

double damage(const UnitSpec& attacker, AttributeSet target_attributes) {
  return (attacker.enhanced_vs & target_attributes) != 0 ? attacker.enhanced_fire : attacker.base_fire;
}

double hit_probability(int attacker_elevation, int target_elevation) {
  return attacker_elevation >= target_elevation ? 1.0 : 0.5;
}

std::size_t entity_type_index(Archetype archetype, bool sieged) { return slot(archetype, sieged); }

std::size_t entity_type_index(BuildingKind kind) { return 5 + static_cast<std::size_t>(kind); }

std::string_view to_string(Archetype archetype) {
  switch (archetype) {
    case Archetype::Marine: return "marine";
    case Archetype::Marauder: return "marauder";
    case Archetype::Tank: return "tank";
    case Archetype::SiegeTank: return "siege_tank";
  }
  return "?";
}

std::string_view to_string(BuildingKind kind) {
  switch (kind) {
    case BuildingKind::Tree: return "tree";
    case BuildingKind::Stone: return "stone";
    case BuildingKind::Structure: return "structure";
  }
  return "?";
}

std::optional<Archetype> parse_archetype(std::string_view name) {
  if (name == "marine") return Archetype::Marine;
  if (name == "marauder") return Archetype::Marauder;
  if (name == "tank") return Archetype::Tank;
  if (name == "siege_tank") return Archetype::SiegeTank;
  return std::nullopt;
}

std::optional<BuildingKind> parse_building_kind(std::string_view name) {
  if (name == "tree") return BuildingKind::Tree;
  if (name == "stone") return BuildingKind::Stone;
  if (name == "structure") return BuildingKind::Structure;
  return std::nullopt;
}

}  // namespace hf::combat
