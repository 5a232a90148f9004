#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "covrl/level.hpp"

namespace covrl {

enum class Attribute : uint8_t { IsOpen, IsPressed };

std::string to_string(Attribute a);

inline Attribute attribute_of(EntityKind kind) {
    return kind == EntityKind::Door ? Attribute::IsOpen : Attribute::IsPressed;
}

// One (entity, attribute, value) triple as seen by an agent.
struct Fact {
    std::string entity_id;
    Attribute attribute = Attribute::IsPressed;
    bool value = false;

    bool operator==(const Fact&) const = default;
    auto operator<=>(const Fact&) const = default;
};

struct Observation {
    std::string agent_id;
    Pos position;
    uint64_t tick = 0;
    std::vector<Fact> facts;  // sorted by entity id
};

struct AgentBody {
    std::string agent_id;
    Pos position;
    int health = 100;
    bool alive = true;
};

struct ToggleEvent {
    std::string button_id;
    bool button_was = false;
    bool button_now = false;
    std::vector<std::pair<std::string, bool>> doors_now;  // affected doors, post value
    uint64_t tick = 0;
};

enum class ActionKind : uint8_t { Interact, Traverse };

struct Action {
    ActionKind kind = ActionKind::Interact;
    std::string target;

    bool operator==(const Action&) const = default;
    auto operator<=>(const Action&) const = default;  // (kind, target) order
};

std::string to_string(const Action& a);

enum class Outcome : uint8_t { Completed, Unreachable, BudgetExhausted, AgentDied };

std::string to_string(Outcome o);

struct ActionOutcome {
    Outcome outcome = Outcome::Completed;
    int ticks = 0;
    std::optional<ToggleEvent> toggle;
};

constexpr int kMaxHealth = 100;
constexpr int kFireDamage = 20;  // per tick standing on a Fire tile
constexpr int kDefaultObservationRadius = 5;

class WorldState {
public:
    explicit WorldState(const LevelSpec& level);

    const LevelSpec& level() const { return *level_; }
    uint64_t tick() const { return tick_; }
    // Bumped on every toggle; lets callers cache paths between door changes.
    uint64_t doors_version() const { return doors_version_; }

    bool entity_value(const std::string& id) const;
    const std::unordered_map<std::string, bool>& entity_values() const { return entity_values_; }

    AgentBody& agent(const std::string& id);
    const AgentBody& agent(const std::string& id) const;
    bool has_agent(const std::string& id) const { return agents_.count(id) > 0; }
    void add_agent(const std::string& id, Pos spawn);
    std::vector<std::string> agent_ids() const;  // insertion order

    // Passable for movement: non-Wall and not a closed door tile.
    bool passable(Pos p) const;
    // True when p holds a door entity that is currently closed.
    bool closed_door_at(Pos p) const;

    ToggleEvent toggle_button(const std::string& button_id);

    // Moves one agent one tile (must be 4-adjacent and passable), then applies
    // fire damage for the tick it just spent. Does not advance the world tick;
    // used by the orchestrator for passive agents within a tick.
    void step_agent(const std::string& id, Pos to);
    void apply_tile_damage(AgentBody& body);

    void advance_tick() { ++tick_; }

private:
    const LevelSpec* level_;
    std::unordered_map<std::string, bool> entity_values_;
    std::unordered_map<std::string, AgentBody> agents_;
    std::vector<std::string> agent_order_;
    std::unordered_map<int, int> door_tile_index_;  // packed pos -> entity index
    uint64_t tick_ = 0;
    uint64_t doors_version_ = 0;

    int pack(Pos p) const { return p.y * level_->grid.width() + p.x; }
};

WorldState init_world(const LevelSpec& level);
WorldState init_world(LevelSpec&&) = delete;  // the level must outlive the world

// Chebyshev-radius filter plus Bresenham line of sight; Wall tiles and closed
// door tiles between the agent and the entity block sight.
Observation observe(const WorldState& world, const std::string& agent_id, int radius);

bool line_of_sight(const WorldState& world, Pos from, Pos to);

// BFS over passable tiles, 4-neighbor, ties broken by N,E,S,W expansion
// order. Returns the sequence of positions stepped onto (empty when from==to),
// or nullopt when disconnected.
std::optional<std::vector<Pos>> shortest_path(const WorldState& world, Pos from, Pos to);

// Same BFS but to the nearest of a goal set; used for entity-adjacent moves.
std::optional<std::vector<Pos>> shortest_path_to_any(const WorldState& world, Pos from,
                                                     const std::vector<Pos>& goals);

// Invoked once per consumed tick, after the acting agent's sub-step for that
// tick; carries the toggle event when one fired on that tick.
using TickHook = std::function<void(const std::optional<ToggleEvent>&)>;

ActionOutcome execute_action(WorldState& world, const std::string& agent_id, const Action& action,
                             int max_cycles, const TickHook& on_tick = nullptr);

// Walks toward a single tile (exploration fallback); Completed on arrival.
ActionOutcome walk_toward(WorldState& world, const std::string& agent_id, Pos target,
                          int max_cycles, const TickHook& on_tick = nullptr);

}  // namespace covrl
