#include "covrl/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <sstream>

namespace covrl {

std::string to_string(Mode m) { return m == Mode::SingleAgent ? "single" : "multi"; }

std::string to_string(Termination t) {
    switch (t) {
        case Termination::FullCoverage: return "FullCoverage";
        case Termination::BudgetExhausted: return "BudgetExhausted";
        case Termination::AgentDied: return "AgentDied";
    }
    return "BudgetExhausted";
}

void apply_size_class_budgets(RunConfig& config) {
    switch (config.level.size_class) {
        case SizeClass::Small:
            config.actions_per_episode = 80;
            config.cycles_per_action = 70;
            break;
        case SizeClass::Medium:
            config.actions_per_episode = 150;
            config.cycles_per_action = 100;
            break;
        case SizeClass::Large:
            config.actions_per_episode = 200;
            config.cycles_per_action = 120;
            break;
    }
}

std::vector<std::string> config_errors(const RunConfig& config) {
    std::vector<std::string> errors;
    if (config.mode == Mode::SingleAgent && config.num_passive != 0)
        errors.push_back("single-agent mode requires num_passive = 0");
    if (config.num_passive < 0) errors.push_back("num_passive must be non-negative");
    if (config.episodes < 1) errors.push_back("episodes must be positive");
    if (config.actions_per_episode < 0)
        errors.push_back("actions_per_episode must be non-negative");
    if (config.cycles_per_action < 1) errors.push_back("cycles_per_action must be positive");
    if (config.observation_radius < 0)
        errors.push_back("observation_radius must be non-negative");
    const PolicyParams& p = config.policy;
    if (p.epsilon0 < 0.0 || p.epsilon0 > 1.0) errors.push_back("epsilon0 must be in [0,1]");
    if (p.epsilon_min < 0.0 || p.epsilon_min > p.epsilon0)
        errors.push_back("epsilon_min must be in [0, epsilon0]");
    if (p.alpha <= 0.0 || p.alpha > 1.0) errors.push_back("alpha must be in (0,1]");
    if (p.gamma < 0.0 || p.gamma >= 1.0) errors.push_back("gamma must be in [0,1)");
    if (config.q_similarity <= 0.0 || config.q_similarity > 1.0)
        errors.push_back("q_similarity must be in (0,1]");
    if (config.novelty.new_state_threshold <= 0.0 || config.novelty.new_state_threshold > 1.0)
        errors.push_back("novelty threshold must be in (0,1]");
    if (config.novelty.revisit_penalty < 0.0)
        errors.push_back("revisit penalty must be non-negative");
    return errors;
}

std::vector<Action> available_actions(const AbstractState& s) {
    std::vector<Action> out;
    for (const auto& f : s.facts())
        out.push_back({f.attribute == Attribute::IsPressed ? ActionKind::Interact
                                                           : ActionKind::Traverse,
                       f.entity_id});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

PassivePatrol::PassivePatrol(const LevelSpec& level, std::string agent_id)
    : agent_id_(std::move(agent_id)) {
    for (const auto& e : level.entities)
        if (e.kind == EntityKind::Door) door_ids_.push_back(e.id);
    visited_.assign(door_ids_.size(), false);
}

void PassivePatrol::retarget(const WorldState& world) {
    doors_version_ = world.doors_version();
    target_ = -1;
    path_.clear();
    path_next_ = 0;
    const Pos from = world.agent(agent_id_).position;
    size_t best_len = 0;
    for (size_t i = 0; i < door_ids_.size(); ++i) {
        if (visited_[i]) continue;
        Pos dp = world.level().find_entity(door_ids_[i])->position;
        std::vector<Pos> goals;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                Pos p{dp.x + dx, dp.y + dy};
                if (world.level().grid.in_bounds(p) && world.passable(p)) goals.push_back(p);
            }
        auto path = shortest_path_to_any(world, from, goals);
        if (!path) continue;
        if (target_ == -1 || path->size() < best_len) {
            target_ = static_cast<int>(i);
            best_len = path->size();
            path_ = std::move(*path);
        }
    }
}

void PassivePatrol::step(WorldState& world, Rng& rng) {
    AgentBody& body = world.agent(agent_id_);
    if (!body.alive) return;

    // Mark any door we are standing next to as patrolled.
    bool reached_target = false;
    for (size_t i = 0; i < door_ids_.size(); ++i) {
        if (visited_[i]) continue;
        Pos dp = world.level().find_entity(door_ids_[i])->position;
        if (chebyshev(body.position, dp) <= 1) {
            visited_[i] = true;
            if (static_cast<int>(i) == target_) reached_target = true;
        }
    }
    if (!door_ids_.empty() &&
        std::all_of(visited_.begin(), visited_.end(), [](bool v) { return v; })) {
        visited_.assign(door_ids_.size(), false);  // round-robin restart
        reached_target = true;
    }
    if (reached_target || target_ == -1 || doors_version_ != world.doors_version() ||
        path_next_ >= path_.size())
        retarget(world);

    if (target_ != -1 && path_next_ < path_.size() && world.passable(path_[path_next_])) {
        world.step_agent(agent_id_, path_[path_next_++]);
        return;
    }

    // No door reachable: seeded random walk.
    const Pos p = body.position;
    const Pos nbrs[4] = {{p.x, p.y - 1}, {p.x + 1, p.y}, {p.x, p.y + 1}, {p.x - 1, p.y}};
    std::vector<Pos> open;
    for (Pos n : nbrs)
        if (world.passable(n)) open.push_back(n);
    if (!open.empty()) {
        world.step_agent(agent_id_, open[rng.next_below(open.size())]);
    } else {
        world.apply_tile_damage(body);  // stood still, possibly in fire
    }
}

namespace {

uint64_t fnv1a_text(uint64_t h, const std::string& text) {
    if (h == 0) h = 14695981039346656037ULL;
    for (char c : text) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

// Nearest tile the active agent has never stood on; BFS order keeps it
// deterministic. Falls back to a random reachable tile once everything has
// been visited, so the world keeps ticking.
std::optional<Pos> frontier_target(const WorldState& world, const SpatialGrid& spatial,
                                   const std::string& agent_id, Rng& rng) {
    const TileGrid& g = world.level().grid;
    const Pos from = world.agent(agent_id).position;
    std::vector<uint8_t> seen(static_cast<size_t>(g.width()) * g.height(), 0);
    auto pack = [&](Pos p) { return static_cast<size_t>(p.y) * g.width() + p.x; };
    std::deque<Pos> queue{from};
    std::vector<Pos> reachable;
    seen[pack(from)] = 1;
    while (!queue.empty()) {
        Pos p = queue.front();
        queue.pop_front();
        if (!(p == from) && spatial.count_for(agent_id, p) == 0) return p;
        reachable.push_back(p);
        const Pos nbrs[4] = {{p.x, p.y - 1}, {p.x + 1, p.y}, {p.x, p.y + 1}, {p.x - 1, p.y}};
        for (Pos n : nbrs) {
            if (!g.in_bounds(n) || !world.passable(n) || seen[pack(n)]) continue;
            seen[pack(n)] = 1;
            queue.push_back(n);
        }
    }
    if (reachable.size() <= 1) return std::nullopt;
    return reachable[1 + rng.next_below(reachable.size() - 1)];
}

}  // namespace

EpisodeResult run_episode(WorldState& world, const RunConfig& config, QTable& qtable,
                          ObservationMemory& memory, double epsilon, CoverageLedgers& ledgers,
                          Rng& rng, RunTrace& trace, int episode_index) {
    const std::string active = "active";
    std::vector<std::string> passive_ids;
    for (const auto& id : world.agent_ids())
        if (id != active) passive_ids.push_back(id);

    std::vector<PassivePatrol> patrols;
    for (const auto& id : passive_ids) patrols.emplace_back(config.level, id);

    auto observe_all = [&]() {
        std::vector<Observation> obs;
        if (world.agent(active).alive)
            obs.push_back(observe(world, active, config.observation_radius));
        for (const auto& id : passive_ids)
            if (world.agent(id).alive)
                obs.push_back(observe(world, id, config.observation_radius));
        return obs;
    };
    auto record = [&](const std::vector<Observation>& obs,
                      const std::optional<ToggleEvent>& ev) {
        record_tick(ledgers, obs, ev);
        if (config.tick_observer) config.tick_observer(obs, ev);
    };
    TickHook on_tick = [&](const std::optional<ToggleEvent>& ev) {
        for (auto& patrol : patrols) patrol.step(world, rng);
        record(observe_all(), ev);
    };

    EpisodeResult result;
    result.episode = episode_index;
    record(observe_all(), std::nullopt);  // episode-start observation, tick 0

    for (int slot = 0; slot < config.actions_per_episode; ++slot) {
        AbstractState merged = merge_observations(observe_all());
        QTable::StateId s = qtable.lookup_or_insert(merged);
        std::vector<Action> available = available_actions(merged);

        ActionRecord rec;
        rec.episode = episode_index;
        rec.index = slot;
        const size_t ent_before = ledgers.entity.covered.size();
        const size_t conn_before = ledgers.connection.covered.size();

        ActionOutcome out;
        AbstractState post;
        // A short drift for no-op slots: enough ticks that the passives keep
        // patrolling and the merged state can change, without handing the
        // agent a systematic sweep of the map.
        constexpr int kWanderTicks = 4;
        auto wander = [&](int budget) {
            AgentBody& body = world.agent(active);
            int ticks = 0;
            while (ticks < budget && body.alive) {
                const Pos p = body.position;
                const Pos nbrs[4] = {{p.x, p.y - 1}, {p.x + 1, p.y}, {p.x, p.y + 1},
                                     {p.x - 1, p.y}};
                std::vector<Pos> open;
                for (Pos n : nbrs)
                    if (world.passable(n)) open.push_back(n);
                ++ticks;
                world.advance_tick();
                if (!open.empty())
                    world.step_agent(active, open[rng.next_below(open.size())]);
                else
                    world.apply_tile_damage(body);
                on_tick(std::nullopt);
            }
            return ticks;
        };
        if (available.empty()) {
            // Exploration fallback: head for ground the active agent has
            // never covered. No Q update; there is no action to credit.
            rec.fallback = true;
            auto frontier = frontier_target(world, ledgers.spatial, active, rng);
            if (frontier)
                out = walk_toward(world, active, *frontier, config.cycles_per_action, on_tick);
            else
                out = {Outcome::Unreachable, wander(kWanderTicks), std::nullopt};
            post = merge_observations(observe_all());
            rec.reward = memory.novelty_reward(post, config.novelty);
        } else {
            Action a = qtable.select_action(s, available, epsilon, rng);
            rec.action = a;
            out = execute_action(world, active, a, config.cycles_per_action, on_tick);
            if (out.ticks == 0) {
                // No-op action (unreachable from the start): the world did
                // not tick, so drift for a few ticks or nothing can change.
                // The update below teaches the policy to stop picking it.
                rec.fallback = true;
                out.ticks = wander(kWanderTicks);
            }
            post = merge_observations(observe_all());
            rec.reward = memory.novelty_reward(post, config.novelty);
            QTable::StateId s_next = qtable.lookup_or_insert(post);
            qtable.update(s, a, rec.reward, s_next, config.policy);
        }

        rec.outcome = out.outcome;
        rec.ticks = out.ticks;
        rec.toggled = out.toggle.has_value();
        rec.entity_delta = static_cast<int>(ledgers.entity.covered.size() - ent_before);
        rec.connection_delta =
            static_cast<int>(ledgers.connection.covered.size() - conn_before);
        trace.actions.push_back(rec);

        result.actions += 1;
        result.ticks += static_cast<uint64_t>(out.ticks);
        result.total_reward += rec.reward;
        if (rec.toggled) result.toggles += 1;
        result.observation_digest = fnv1a_text(result.observation_digest, post.to_text());

        if (!world.agent(active).alive) {
            result.termination = Termination::AgentDied;
            return result;
        }
        if (full_coverage(ledgers)) {
            result.termination = Termination::FullCoverage;
            return result;
        }
    }
    result.termination = Termination::BudgetExhausted;
    return result;
}

SessionResult run_session(const RunConfig& config) {
    auto errors = config_errors(config);
    if (!errors.empty()) {
        std::string joined;
        for (const auto& e : errors) joined += (joined.empty() ? "" : "; ") + e;
        throw std::invalid_argument("invalid run config: " + joined);
    }

    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(config.seed);
    PolicyParams policy = config.policy;
    policy.episodes = config.episodes;

    SessionResult result;
    result.qtable = QTable(config.q_similarity);
    result.ledgers = coverable_goals(config.level);
    ObservationMemory memory;

    uint64_t total_actions = 0;
    for (int k = 0; k < config.episodes; ++k) {
        double eps = epsilon_at(k, policy);
        WorldState world(config.level);
        world.add_agent("active", config.level.active_spawn);
        const int passives = config.mode == Mode::MultiAgent ? config.num_passive : 0;
        for (int i = 0; i < passives; ++i) {
            Pos spawn = config.level.passive_spawns.empty()
                            ? config.level.active_spawn
                            : config.level.passive_spawns[std::min(
                                  static_cast<size_t>(i),
                                  config.level.passive_spawns.size() - 1)];
            world.add_agent("passive" + std::to_string(i + 1), spawn);
        }

        EpisodeResult er = run_episode(world, config, result.qtable, memory, eps,
                                       result.ledgers, rng, result.trace, k);
        result.trace.episodes.push_back(er);
        total_actions += static_cast<uint64_t>(er.actions);

        if (er.termination == Termination::FullCoverage) {
            result.trace.termination = Termination::FullCoverage;
            break;
        }
        if (er.termination == Termination::AgentDied && config.death_ends_session) {
            result.trace.termination = Termination::AgentDied;
            break;
        }
        result.trace.termination = Termination::BudgetExhausted;
    }

    const auto t1 = std::chrono::steady_clock::now();
    CoverageReport& rep = result.report;
    rep.entity_pct = entity_coverage(result.ledgers.entity);
    rep.connection_pct = connection_coverage(result.ledgers.connection);
    rep.spatial_pct = result.ledgers.spatial.coverage_pct();
    rep.episodes_used = static_cast<int>(result.trace.episodes.size());
    for (const auto& er : result.trace.episodes) rep.ticks_total += er.ticks;
    rep.mean_ticks_per_episode =
        rep.episodes_used ? static_cast<double>(rep.ticks_total) / rep.episodes_used : 0.0;
    rep.mean_ticks_per_action =
        total_actions ? static_cast<double>(rep.ticks_total) / static_cast<double>(total_actions)
                      : 0.0;
    rep.wall_ms = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count());
    rep.mean_wall_ms_per_episode =
        rep.episodes_used ? static_cast<double>(rep.wall_ms) / rep.episodes_used : 0.0;
    rep.mean_wall_ms_per_action =
        total_actions ? static_cast<double>(rep.wall_ms) / static_cast<double>(total_actions)
                      : 0.0;
    return result;
}

std::string serialize_trace(const RunTrace& trace) {
    std::ostringstream out;
    for (const auto& a : trace.actions) {
        char reward[32];
        std::snprintf(reward, sizeof(reward), "%.6f", a.reward);
        std::string action_name = a.fallback ? (a.action.target.empty()
                                                    ? std::string("explore")
                                                    : to_string(a.action) + "+explore")
                                             : to_string(a.action);
        out << "episode=" << a.episode << " action=" << action_name
            << " outcome=" << to_string(a.outcome) << " reward=" << reward
            << " ticks=" << a.ticks << " d_entity=" << a.entity_delta
            << " d_connection=" << a.connection_delta << "\n";
    }
    for (const auto& e : trace.episodes) {
        char reward[32];
        std::snprintf(reward, sizeof(reward), "%.6f", e.total_reward);
        out << "episode_summary=" << e.episode << " termination=" << to_string(e.termination)
            << " actions=" << e.actions << " ticks=" << e.ticks << " reward=" << reward
            << " toggles=" << e.toggles << " digest=" << e.observation_digest << "\n";
    }
    out << "termination=" << to_string(trace.termination) << "\n";
    return out.str();
}

std::string CoverageReport::to_flat_text() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "entity_pct=%.4f\n"
                  "connection_pct=%.4f\n"
                  "spatial_pct=%.4f\n"
                  "episodes_used=%d\n"
                  "ticks_total=%llu\n"
                  "mean_ticks_per_episode=%.4f\n"
                  "mean_ticks_per_action=%.4f\n"
                  "wall_ms=%llu\n"
                  "mean_wall_ms_per_episode=%.4f\n"
                  "mean_wall_ms_per_action=%.4f\n",
                  entity_pct, connection_pct, spatial_pct, episodes_used,
                  static_cast<unsigned long long>(ticks_total), mean_ticks_per_episode,
                  mean_ticks_per_action, static_cast<unsigned long long>(wall_ms),
                  mean_wall_ms_per_episode, mean_wall_ms_per_action);
    return buf;
}

}  // namespace covrl
