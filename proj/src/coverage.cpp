#include "covrl/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace covrl {

SpatialGrid::SpatialGrid(const TileGrid& grid)
    : width_(grid.width()),
      height_(grid.height()),
      walkable_mask_(static_cast<size_t>(grid.width()) * grid.height(), 0),
      aggregate_(static_cast<size_t>(grid.width()) * grid.height(), 0) {
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            if (grid.is_walkable({x, y})) {
                walkable_mask_[idx({x, y})] = 1;
                ++walkable_;
            }
}

bool SpatialGrid::walkable_at(Pos p) const {
    return p.x >= 0 && p.x < width_ && p.y >= 0 && p.y < height_ && walkable_mask_[idx(p)];
}

void SpatialGrid::record_visit(const std::string& agent_id, Pos p) {
    if (!walkable_at(p)) throw std::invalid_argument("visit recorded off the walkable grid");
    ++aggregate_[idx(p)];
    ++total_;
    auto& counts = per_agent_[agent_id];
    if (counts.empty()) counts.resize(aggregate_.size(), 0);
    ++counts[idx(p)];
}

uint64_t SpatialGrid::count_at(Pos p) const { return walkable_at(p) ? aggregate_[idx(p)] : 0; }

uint64_t SpatialGrid::count_for(const std::string& agent_id, Pos p) const {
    auto it = per_agent_.find(agent_id);
    if (it == per_agent_.end() || !walkable_at(p)) return 0;
    return it->second[idx(p)];
}

int SpatialGrid::visited_tiles() const {
    int n = 0;
    for (size_t i = 0; i < aggregate_.size(); ++i)
        if (walkable_mask_[i] && aggregate_[i] > 0) ++n;
    return n;
}

double SpatialGrid::coverage_pct() const {
    if (walkable_ == 0) return 100.0;
    return 100.0 * visited_tiles() / walkable_;
}

std::string SpatialGrid::to_csv() const {
    std::ostringstream out;
    out << "x,y,count\n";
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            if (walkable_mask_[idx({x, y})])
                out << x << "," << y << "," << aggregate_[idx({x, y})] << "\n";
    return out.str();
}

std::string SpatialGrid::to_pgm() const {
    uint64_t max_count = 0;
    for (size_t i = 0; i < aggregate_.size(); ++i)
        max_count = std::max(max_count, aggregate_[i]);
    const double denom = max_count > 0 ? std::log1p(static_cast<double>(max_count)) : 1.0;

    std::ostringstream out;
    out << "P2\n" << width_ << " " << height_ << "\n255\n";
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            uint64_t c = aggregate_[idx({x, y})];
            int v = c == 0 ? 0
                           : static_cast<int>(std::lround(
                                 255.0 * std::log1p(static_cast<double>(c)) / denom));
            out << (x ? " " : "") << v;
        }
        out << "\n";
    }
    return out.str();
}

CoverageLedgers coverable_goals(const LevelSpec& level) {
    CoverageLedgers ledgers;
    for (const auto& e : level.entities) {
        Attribute attr = attribute_of(e.kind);
        ledgers.entity.goals.insert({e.id, attr, false});
        ledgers.entity.goals.insert({e.id, attr, true});
    }
    for (const auto& c : level.connections)
        for (const auto& d : c.door_ids) ledgers.connection.goals.insert({c.button_id, d});
    ledgers.spatial = SpatialGrid(level.grid);
    return ledgers;
}

void record_tick(CoverageLedgers& ledgers, const std::vector<Observation>& observations,
                 const std::optional<ToggleEvent>& toggle_event) {
    if (!observations.empty()) {
        uint64_t tick = observations.front().tick;
        for (const auto& obs : observations)
            if (obs.tick != tick)
                throw std::invalid_argument("record_tick inputs from different ticks");
        if (toggle_event && toggle_event->tick != tick)
            throw std::invalid_argument("record_tick toggle event from a different tick");
    }

    // Toggle first: it closes stale windows on the affected doors and opens
    // fresh ones, so a same-tick observation of the new value counts.
    if (toggle_event) {
        for (const auto& [door_id, now] : toggle_event->doors_now) {
            for (auto it = ledgers.connection.pending.begin();
                 it != ledgers.connection.pending.end();) {
                if (it->first.second == door_id)
                    it = ledgers.connection.pending.erase(it);
                else
                    ++it;
            }
            ConnectionGoal pair{toggle_event->button_id, door_id};
            if (ledgers.connection.goals.count(pair) && !ledgers.connection.covered.count(pair))
                ledgers.connection.pending[pair] = now;
        }
    }

    for (const auto& obs : observations) {
        for (const auto& fact : obs.facts) {
            EntityGoal goal{fact.entity_id, fact.attribute, fact.value};
            if (ledgers.entity.goals.count(goal)) ledgers.entity.covered.insert(goal);
            if (fact.attribute == Attribute::IsOpen) {
                for (auto it = ledgers.connection.pending.begin();
                     it != ledgers.connection.pending.end();) {
                    if (it->first.second == fact.entity_id && it->second == fact.value) {
                        ledgers.connection.covered.insert(it->first);
                        it = ledgers.connection.pending.erase(it);
                    } else {
                        ++it;
                    }
                }
            }
        }
        ledgers.spatial.record_visit(obs.agent_id, obs.position);
    }
}

double entity_coverage(const EntityGoalSet& s) {
    if (s.goals.empty()) return 100.0;
    return 100.0 * static_cast<double>(s.covered.size()) / static_cast<double>(s.goals.size());
}

double connection_coverage(const ConnectionGoalSet& s) {
    if (s.goals.empty()) return 100.0;
    return 100.0 * static_cast<double>(s.covered.size()) / static_cast<double>(s.goals.size());
}

bool full_coverage(const CoverageLedgers& ledgers) {
    return ledgers.entity.covered.size() == ledgers.entity.goals.size() &&
           ledgers.connection.covered.size() == ledgers.connection.goals.size();
}

SpatialReport spatial_report(const SpatialGrid& grid) {
    return {grid.coverage_pct(), grid.to_csv(), grid.to_pgm()};
}

}  // namespace covrl
