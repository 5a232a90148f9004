#include "covrl/world.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace covrl {

std::string to_string(Attribute a) {
    return a == Attribute::IsOpen ? "isOpen" : "isPressed";
}

std::string to_string(const Action& a) {
    return (a.kind == ActionKind::Interact ? "interact:" : "traverse:") + a.target;
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Completed: return "Completed";
        case Outcome::Unreachable: return "Unreachable";
        case Outcome::BudgetExhausted: return "BudgetExhausted";
        case Outcome::AgentDied: return "AgentDied";
    }
    return "Completed";
}

WorldState::WorldState(const LevelSpec& level) : level_(&level) {
    for (const auto& e : level.entities) {
        entity_values_[e.id] = e.initial_value;
        if (e.kind == EntityKind::Door)
            door_tile_index_[pack(e.position)] = level.entity_index(e.id);
    }
}

bool WorldState::entity_value(const std::string& id) const {
    auto it = entity_values_.find(id);
    if (it == entity_values_.end())
        throw std::invalid_argument("unknown entity '" + id + "'");
    return it->second;
}

AgentBody& WorldState::agent(const std::string& id) {
    auto it = agents_.find(id);
    if (it == agents_.end()) throw std::invalid_argument("unknown agent '" + id + "'");
    return it->second;
}

const AgentBody& WorldState::agent(const std::string& id) const {
    auto it = agents_.find(id);
    if (it == agents_.end()) throw std::invalid_argument("unknown agent '" + id + "'");
    return it->second;
}

void WorldState::add_agent(const std::string& id, Pos spawn) {
    if (agents_.count(id)) throw std::invalid_argument("duplicate agent '" + id + "'");
    if (!level_->grid.in_bounds(spawn) || level_->grid.at(spawn) == Tile::Wall)
        throw std::invalid_argument("spawn for '" + id + "' is on a Wall tile");
    if (closed_door_at(spawn))
        throw std::invalid_argument("spawn for '" + id + "' is occupied by a closed door");
    agents_[id] = AgentBody{id, spawn, kMaxHealth, true};
    agent_order_.push_back(id);
}

std::vector<std::string> WorldState::agent_ids() const { return agent_order_; }

bool WorldState::closed_door_at(Pos p) const {
    if (!level_->grid.in_bounds(p)) return false;
    auto it = door_tile_index_.find(pack(p));
    if (it == door_tile_index_.end()) return false;
    return !entity_values_.at(level_->entities[it->second].id);
}

bool WorldState::passable(Pos p) const {
    return level_->grid.is_walkable(p) && !closed_door_at(p);
}

ToggleEvent WorldState::toggle_button(const std::string& button_id) {
    const Entity* e = level_->find_entity(button_id);
    if (!e) throw std::invalid_argument("unknown entity '" + button_id + "'");
    if (e->kind != EntityKind::Button)
        throw std::invalid_argument("'" + button_id + "' is not a button");

    ToggleEvent ev;
    ev.button_id = button_id;
    ev.tick = tick_;
    ev.button_was = entity_values_[button_id];
    ev.button_now = !ev.button_was;
    entity_values_[button_id] = ev.button_now;
    for (const auto& door_id : level_->doors_toggled_by(button_id)) {
        bool now = !entity_values_.at(door_id);
        entity_values_[door_id] = now;
        ev.doors_now.emplace_back(door_id, now);
    }
    if (!ev.doors_now.empty()) ++doors_version_;
    return ev;
}

void WorldState::apply_tile_damage(AgentBody& body) {
    if (!body.alive) return;
    if (level_->grid.at(body.position) == Tile::Fire) {
        body.health = std::max(0, body.health - kFireDamage);
        if (body.health == 0) body.alive = false;
    }
}

void WorldState::step_agent(const std::string& id, Pos to) {
    AgentBody& body = agent(id);
    if (!body.alive) throw std::logic_error("agent '" + id + "' is dead");
    int manhattan = std::abs(to.x - body.position.x) + std::abs(to.y - body.position.y);
    if (manhattan != 1) throw std::logic_error("step must be 4-adjacent");
    if (!passable(to)) throw std::logic_error("step onto impassable tile");
    body.position = to;
    apply_tile_damage(body);
}

WorldState init_world(const LevelSpec& level) {
    WorldState world(level);
    world.add_agent("active", level.active_spawn);
    for (size_t i = 0; i < level.passive_spawns.size(); ++i)
        world.add_agent("passive" + std::to_string(i + 1), level.passive_spawns[i]);
    return world;
}

bool line_of_sight(const WorldState& world, Pos from, Pos to) {
    // Bresenham; only cells strictly between the endpoints can block.
    int x = from.x, y = from.y;
    const int dx = std::abs(to.x - x), sx = x < to.x ? 1 : -1;
    const int dy = -std::abs(to.y - y), sy = y < to.y ? 1 : -1;
    int err = dx + dy;
    while (true) {
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
        if (x == to.x && y == to.y) return true;
        Pos p{x, y};
        if (world.level().grid.is_wall(p) || world.closed_door_at(p)) return false;
    }
}

Observation observe(const WorldState& world, const std::string& agent_id, int radius) {
    const AgentBody& body = world.agent(agent_id);
    if (!body.alive) throw std::invalid_argument("agent '" + agent_id + "' is dead");
    if (radius < 0) throw std::invalid_argument("radius must be non-negative");

    Observation obs;
    obs.agent_id = agent_id;
    obs.position = body.position;
    obs.tick = world.tick();
    if (radius > 0) {
        for (const auto& e : world.level().entities) {
            if (chebyshev(body.position, e.position) > radius) continue;
            if (!line_of_sight(world, body.position, e.position)) continue;
            obs.facts.push_back(
                {e.id, attribute_of(e.kind), world.entity_value(e.id)});
        }
        std::sort(obs.facts.begin(), obs.facts.end());
    }
    return obs;
}

namespace {

// BFS with fixed N,E,S,W expansion; first goal dequeued wins.
std::optional<std::vector<Pos>> bfs_path(const WorldState& world, Pos from,
                                         const std::vector<Pos>& goals) {
    const TileGrid& g = world.level().grid;
    if (!g.in_bounds(from)) throw std::invalid_argument("path endpoint outside the grid");
    for (Pos p : goals)
        if (!g.in_bounds(p)) throw std::invalid_argument("path endpoint outside the grid");

    auto pack = [&](Pos p) { return p.y * g.width() + p.x; };
    std::vector<uint8_t> is_goal(static_cast<size_t>(g.width()) * g.height(), 0);
    for (Pos p : goals) is_goal[pack(p)] = 1;
    if (is_goal[pack(from)]) return std::vector<Pos>{};

    std::vector<int> parent(static_cast<size_t>(g.width()) * g.height(), -1);
    std::deque<Pos> queue{from};
    parent[pack(from)] = pack(from);
    while (!queue.empty()) {
        Pos p = queue.front();
        queue.pop_front();
        const Pos nbrs[4] = {{p.x, p.y - 1}, {p.x + 1, p.y}, {p.x, p.y + 1}, {p.x - 1, p.y}};
        for (Pos n : nbrs) {
            if (!g.in_bounds(n) || !world.passable(n) || parent[pack(n)] != -1) continue;
            parent[pack(n)] = pack(p);
            if (is_goal[pack(n)]) {
                std::vector<Pos> path;
                Pos cur = n;
                while (!(cur == from)) {
                    path.push_back(cur);
                    int pp = parent[pack(cur)];
                    cur = {pp % g.width(), pp / g.width()};
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            queue.push_back(n);
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::vector<Pos>> shortest_path(const WorldState& world, Pos from, Pos to) {
    return bfs_path(world, from, {to});
}

std::optional<std::vector<Pos>> shortest_path_to_any(const WorldState& world, Pos from,
                                                     const std::vector<Pos>& goals) {
    if (goals.empty()) return std::nullopt;
    return bfs_path(world, from, goals);
}

namespace {

std::vector<Pos> interact_goal_tiles(const WorldState& world, Pos target) {
    std::vector<Pos> out;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            Pos p{target.x + dx, target.y + dy};
            if (world.level().grid.in_bounds(p) && world.passable(p)) out.push_back(p);
        }
    return out;
}

std::vector<Pos> traverse_goal_tiles(const WorldState& world, Pos door) {
    std::vector<Pos> out;
    const Pos nbrs[4] = {{door.x, door.y - 1}, {door.x + 1, door.y}, {door.x, door.y + 1},
                         {door.x - 1, door.y}};
    for (Pos p : nbrs)
        if (world.level().grid.in_bounds(p) && world.passable(p)) out.push_back(p);
    return out;
}

struct TickRunner {
    WorldState& world;
    AgentBody& body;
    const TickHook& on_tick;
    int max_cycles;
    int ticks = 0;

    bool budget_left() const { return ticks < max_cycles; }

    // One tick in which the agent moves to `to` (or stands still when absent).
    // Returns false when the agent died on this tick.
    bool run_tick(std::optional<Pos> to) {
        ++ticks;
        world.advance_tick();
        if (to) body.position = *to;
        world.apply_tile_damage(body);
        if (on_tick) on_tick(std::nullopt);
        return body.alive;
    }
};

}  // namespace

ActionOutcome execute_action(WorldState& world, const std::string& agent_id, const Action& action,
                             int max_cycles, const TickHook& on_tick) {
    AgentBody& body = world.agent(agent_id);
    if (!body.alive) throw std::invalid_argument("agent '" + agent_id + "' is dead");
    if (max_cycles < 1) throw std::invalid_argument("max_cycles must be positive");
    const Entity* target = world.level().find_entity(action.target);
    if (!target) throw std::invalid_argument("unknown action target '" + action.target + "'");
    if (action.kind == ActionKind::Interact && target->kind != EntityKind::Button)
        throw std::invalid_argument("Interact target '" + action.target + "' is not a button");
    if (action.kind == ActionKind::Traverse && target->kind != EntityKind::Door)
        throw std::invalid_argument("Traverse target '" + action.target + "' is not a door");

    const Pos tpos = target->position;
    TickRunner run{world, body, on_tick, max_cycles};
    std::vector<Pos> path;
    size_t path_next = 0;
    uint64_t path_version = ~0ULL;

    while (true) {
        const bool arrived = action.kind == ActionKind::Interact
                                 ? chebyshev(body.position, tpos) <= 1
                                 : body.position == tpos ||
                                       std::abs(body.position.x - tpos.x) +
                                               std::abs(body.position.y - tpos.y) ==
                                           1;
        if (arrived) {
            if (action.kind == ActionKind::Interact) {
                if (!run.budget_left())
                    return {Outcome::BudgetExhausted, run.ticks, std::nullopt};
                // The interaction itself costs one tick.
                ++run.ticks;
                world.advance_tick();
                ToggleEvent ev = world.toggle_button(action.target);
                world.apply_tile_damage(body);
                if (on_tick) on_tick(ev);
                return {Outcome::Completed, run.ticks, ev};
            }
            // Traverse: step onto the door tile if it is open. Completion
            // wins over a same-tick fire death; the caller sees the body.
            if (!world.entity_value(action.target))
                return {Outcome::Unreachable, run.ticks, std::nullopt};
            if (!run.budget_left()) return {Outcome::BudgetExhausted, run.ticks, std::nullopt};
            std::optional<Pos> to =
                body.position == tpos ? std::nullopt : std::optional<Pos>(tpos);
            run.run_tick(to);
            return {Outcome::Completed, run.ticks, std::nullopt};
        }

        // (Re)plan when doors changed or the cached path ran out.
        if (path_version != world.doors_version() || path_next >= path.size()) {
            auto goals = action.kind == ActionKind::Interact
                             ? interact_goal_tiles(world, tpos)
                             : traverse_goal_tiles(world, tpos);
            auto p = shortest_path_to_any(world, body.position, goals);
            if (!p || p->empty()) return {Outcome::Unreachable, run.ticks, std::nullopt};
            path = std::move(*p);
            path_next = 0;
            path_version = world.doors_version();
        }
        if (!run.budget_left()) return {Outcome::BudgetExhausted, run.ticks, std::nullopt};
        if (!run.run_tick(path[path_next++]))
            return {Outcome::AgentDied, run.ticks, std::nullopt};
    }
}

ActionOutcome walk_toward(WorldState& world, const std::string& agent_id, Pos target,
                          int max_cycles, const TickHook& on_tick) {
    AgentBody& body = world.agent(agent_id);
    if (!body.alive) throw std::invalid_argument("agent '" + agent_id + "' is dead");
    if (max_cycles < 1) throw std::invalid_argument("max_cycles must be positive");

    TickRunner run{world, body, on_tick, max_cycles};
    std::vector<Pos> path;
    size_t path_next = 0;
    uint64_t path_version = ~0ULL;
    while (true) {
        if (body.position == target) return {Outcome::Completed, run.ticks, std::nullopt};
        if (path_version != world.doors_version() || path_next >= path.size()) {
            auto p = shortest_path(world, body.position, target);
            if (!p) return {Outcome::Unreachable, run.ticks, std::nullopt};
            path = std::move(*p);
            path_next = 0;
            path_version = world.doors_version();
        }
        if (!run.budget_left()) return {Outcome::BudgetExhausted, run.ticks, std::nullopt};
        if (!run.run_tick(path[path_next++]))
            return {Outcome::AgentDied, run.ticks, std::nullopt};
    }
}

}  // namespace covrl
