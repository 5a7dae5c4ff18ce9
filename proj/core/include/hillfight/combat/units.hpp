#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hf::combat {

enum class Archetype : std::uint8_t { Marine, Marauder, Tank, SiegeTank };

inline constexpr std::size_t kArchetypeCount = 4;

/// Entity classes of the observation one-hot: four unit classes with the
/// siege tank split by mode, plus three neutral building kinds.
inline constexpr std::size_t kEntityTypeCount = 8;

enum class BuildingKind : std::uint8_t { Tree, Stone, Structure };

/// Bitmask over unit attributes.
enum Attribute : std::uint8_t {
  kNoAttribute = 0,
  kMachinery = 1u << 0,
  kHeavyArmor = 1u << 1,
};
using AttributeSet = std::uint8_t;

/// Effective stat block of a unit in a given mode.
struct UnitSpec {
  Archetype archetype = Archetype::Marine;
  bool sieged = false;
  double shooting_range = 0.0;  // cells
  double sight_range = 0.0;     // cells
  double base_fire = 0.0;
  double enhanced_fire = 0.0;
  AttributeSet enhanced_vs = kNoAttribute;
  AttributeSet attributes = kNoAttribute;
  double max_health = 0.0;
  int cooldown_ticks = 1;
  double move_step = 0.0;  // cells per tick
  double splash_radius = 0.0;
  int supply = 1;
};

/// Stat tables for every archetype and mode. Ranges and fire power are
/// fixed by the unit table; health, cooldown and speed are tunable.
class UnitCatalog {
 public:
  static UnitCatalog defaults();

  const UnitSpec& get(Archetype archetype, bool sieged = false) const;
  UnitSpec& mutable_spec(Archetype archetype, bool sieged = false);

 private:
  // Marine, Marauder, Tank, SiegeTank (tank mode), SiegeTank (siege mode)
  std::array<UnitSpec, 5> specs_{};
};

/// Damage dealt by one successful hit: enhanced fire when the target
/// carries any attribute the attacker is enhanced against.
double damage(const UnitSpec& attacker, AttributeSet target_attributes);

/// 1.0 when the attacker stands at least as high as the target, else 0.5.
double hit_probability(int attacker_elevation, int target_elevation);

/// Observation one-hot slot in [0, kEntityTypeCount).
std::size_t entity_type_index(Archetype archetype, bool sieged);
std::size_t entity_type_index(BuildingKind kind);

std::string_view to_string(Archetype archetype);
std::string_view to_string(BuildingKind kind);
std::optional<Archetype> parse_archetype(std::string_view name);
std::optional<BuildingKind> parse_building_kind(std::string_view name);

}  // namespace hf::combat
