#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "covrl/agent.hpp"
#include "covrl/coverage.hpp"
#include "covrl/level.hpp"
#include "covrl/world.hpp"

namespace covrl {

enum class Mode : uint8_t { SingleAgent, MultiAgent };

std::string to_string(Mode m);

struct RunConfig {
    LevelSpec level;
    Mode mode = Mode::MultiAgent;
    int num_passive = 1;  // forced to 0 in SingleAgent mode
    int episodes = 50;
    int actions_per_episode = 80;
    int cycles_per_action = 70;
    PolicyParams policy;
    NoveltyParams novelty;
    double q_similarity = 0.85;
    int observation_radius = kDefaultObservationRadius;
    uint64_t seed = 0;
    // Open point in the source material: we scope agent death to the episode
    // by default and expose the stricter policy behind this flag.
    bool death_ends_session = false;

    // Test/tooling hook: sees every recorded tick (observations + toggle).
    std::function<void(const std::vector<Observation>&, const std::optional<ToggleEvent>&)>
        tick_observer;
};

// Fills actions/cycles budgets from the level's size class (80/150/200 and
// 70/100/120 for Small/Medium/Large).
void apply_size_class_budgets(RunConfig& config);

std::vector<std::string> config_errors(const RunConfig& config);

enum class Termination : uint8_t { FullCoverage, BudgetExhausted, AgentDied };

std::string to_string(Termination t);

struct ActionRecord {
    int episode = 0;
    int index = 0;           // action slot within the episode
    Action action;
    bool fallback = false;   // frontier exploration step, no Q update
    Outcome outcome = Outcome::Completed;
    double reward = 0.0;
    int ticks = 0;
    int entity_delta = 0;
    int connection_delta = 0;
    bool toggled = false;
};

struct EpisodeResult {
    int episode = 0;
    Termination termination = Termination::BudgetExhausted;
    int actions = 0;
    uint64_t ticks = 0;
    double total_reward = 0.0;
    int toggles = 0;
    uint64_t observation_digest = 0;
};

struct RunTrace {
    std::vector<ActionRecord> actions;
    std::vector<EpisodeResult> episodes;
    Termination termination = Termination::BudgetExhausted;
};

// One line per action: episode, action, outcome, reward, ticks, coverage deltas.
std::string serialize_trace(const RunTrace& trace);

struct CoverageReport {
    double entity_pct = 0.0;
    double connection_pct = 0.0;
    double spatial_pct = 0.0;
    int episodes_used = 0;
    uint64_t ticks_total = 0;
    double mean_ticks_per_episode = 0.0;
    double mean_ticks_per_action = 0.0;
    uint64_t wall_ms = 0;
    double mean_wall_ms_per_episode = 0.0;
    double mean_wall_ms_per_action = 0.0;

    std::string to_flat_text() const;  // key=value lines
};

// Actions the game allows for the entities present in s: Interact for every
// button fact, Traverse for every door fact; sorted (kind, target).
std::vector<Action> available_actions(const AbstractState& s);

// Door patrol for a passive agent: heads for the nearest unvisited door,
// restarts the round when all have been visited, and falls back to a seeded
// random walk while no door is reachable. Never interacts with entities.
class PassivePatrol {
public:
    PassivePatrol(const LevelSpec& level, std::string agent_id);

    void step(WorldState& world, Rng& rng);

private:
    std::string agent_id_;
    std::vector<std::string> door_ids_;
    std::vector<bool> visited_;
    std::vector<Pos> path_;
    size_t path_next_ = 0;
    int target_ = -1;
    uint64_t doors_version_ = ~0ULL;

    void retarget(const WorldState& world);
};

struct SessionResult {
    RunTrace trace;
    CoverageReport report;
    CoverageLedgers ledgers;
    QTable qtable{0.85};
};

EpisodeResult run_episode(WorldState& world, const RunConfig& config, QTable& qtable,
                          ObservationMemory& memory, double epsilon, CoverageLedgers& ledgers,
                          Rng& rng, RunTrace& trace, int episode_index);

SessionResult run_session(const RunConfig& config);

}  // namespace covrl
