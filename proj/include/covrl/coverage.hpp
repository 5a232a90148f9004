#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "covrl/world.hpp"

namespace covrl {

using EntityGoal = std::tuple<std::string, Attribute, bool>;
using ConnectionGoal = std::pair<std::string, std::string>;  // (button, door)

struct EntityGoalSet {
    std::set<EntityGoal> goals;
    std::set<EntityGoal> covered;
};

struct ConnectionGoalSet {
    std::set<ConnectionGoal> goals;
    std::set<ConnectionGoal> covered;
    // Open attribution windows: (button, door) -> door value the toggle
    // produced. A window closes when the door is toggled again.
    std::map<ConnectionGoal, bool> pending;
};

// Per-walkable-tile visit counts, per agent and aggregated.
class SpatialGrid {
public:
    SpatialGrid() = default;
    explicit SpatialGrid(const TileGrid& grid);

    void record_visit(const std::string& agent_id, Pos p);
    uint64_t count_at(Pos p) const;  // aggregate
    uint64_t count_for(const std::string& agent_id, Pos p) const;
    uint64_t total_visits() const { return total_; }
    int visited_tiles() const;
    int walkable_tiles() const { return walkable_; }
    double coverage_pct() const;
    int width() const { return width_; }
    int height() const { return height_; }
    bool walkable_at(Pos p) const;

    std::string to_csv() const;  // "x,y,count" rows over walkable tiles
    std::string to_pgm() const;  // P2 grayscale, log-scaled, darker = less explored

private:
    int width_ = 0;
    int height_ = 0;
    int walkable_ = 0;
    uint64_t total_ = 0;
    std::vector<uint8_t> walkable_mask_;
    std::vector<uint64_t> aggregate_;
    std::map<std::string, std::vector<uint64_t>> per_agent_;

    size_t idx(Pos p) const { return static_cast<size_t>(p.y) * width_ + p.x; }
};

struct CoverageLedgers {
    EntityGoalSet entity;
    ConnectionGoalSet connection;
    SpatialGrid spatial;
};

// Entity goals are every entity x its attribute x {true,false}; connection
// goals are one pair per (button, connected door).
CoverageLedgers coverable_goals(const LevelSpec& level);

// One tick of coverage bookkeeping. The toggle event (when present) is
// processed first so a same-tick observation of the flipped door counts.
// All inputs must come from the same tick.
void record_tick(CoverageLedgers& ledgers, const std::vector<Observation>& observations,
                 const std::optional<ToggleEvent>& toggle_event);

double entity_coverage(const EntityGoalSet& s);          // percent; 100 when goals empty
double connection_coverage(const ConnectionGoalSet& s);  // percent; 100 when goals empty

bool full_coverage(const CoverageLedgers& ledgers);  // entity and connection goals

struct SpatialReport {
    double coverage_pct = 0.0;
    std::string csv;
    std::string pgm;
};

SpatialReport spatial_report(const SpatialGrid& grid);

}  // namespace covrl
