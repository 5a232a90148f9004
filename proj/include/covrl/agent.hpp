#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "covrl/rng.hpp"
#include "covrl/world.hpp"

namespace covrl {

// Set of facts with canonical ordering (by entity id) and a parallel sorted
// key vector for fast set arithmetic.
class AbstractState {
public:
    AbstractState() = default;
    explicit AbstractState(std::vector<Fact> facts);

    const std::vector<Fact>& facts() const { return facts_; }
    const std::vector<uint64_t>& keys() const { return keys_; }
    size_t size() const { return facts_.size(); }
    bool empty() const { return facts_.empty(); }

    bool operator==(const AbstractState& other) const { return facts_ == other.facts_; }

    std::string to_text() const;  // "(id,attr,value);(...)" in canonical order

private:
    std::vector<Fact> facts_;    // sorted by (entity_id, attribute, value)
    std::vector<uint64_t> keys_;  // sorted 64-bit fact fingerprints
};

double jaccard(const AbstractState& a, const AbstractState& b);

// Union of same-tick observations. Conflicting values for one
// (entity, attribute) mean the simulator handed out stale facts.
AbstractState merge_observations(const std::vector<Observation>& observations);

struct NoveltyParams {
    double new_state_threshold = 0.95;  // below this similarity a state is novel
    double revisit_penalty = 0.5;       // rho
};

class ObservationMemory {
public:
    struct Entry {
        AbstractState state;
        int visit_count = 1;
    };

    const std::vector<Entry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    // Reward in [-rho, 1]: (1 - j*) for novel states (inserted with count 1);
    // a revisit pays -rho * (1 - 1/(1+c*)) and bumps the matched entry.
    double novelty_reward(const AbstractState& s, const NoveltyParams& params = {});

private:
    std::vector<Entry> entries_;
};

struct PolicyParams {
    double epsilon0 = 0.5;
    double epsilon_min = 0.01;
    double alpha = 0.25;
    double gamma = 0.6;
    int episodes = 50;
};

// epsilon0 * delta^k with delta = (epsilon_min/epsilon0)^(1/(K-1)); the
// endpoints land on epsilon0 and epsilon_min exactly.
double epsilon_at(int episode, const PolicyParams& params);

// Tabular action values over canonical states. New states are only inserted
// when no stored state is Jaccard-similar enough, so stored states stay
// pairwise below the similarity threshold.
class QTable {
public:
    using StateId = size_t;

    explicit QTable(double similarity_threshold = 0.85)
        : similarity_threshold_(similarity_threshold) {}

    double similarity_threshold() const { return similarity_threshold_; }
    size_t state_count() const { return states_.size(); }
    const AbstractState& state_at(StateId id) const { return states_[id]; }
    const std::map<Action, double>& actions_at(StateId id) const { return values_[id]; }

    // Most similar stored state when its similarity >= threshold (earliest
    // insertion wins ties), otherwise inserts s as a new canonical state.
    StateId lookup_or_insert(const AbstractState& s);

    double value(StateId s, const Action& a) const;  // missing entries read 0
    double max_value(StateId s) const;               // 0 over an empty action map

    void update(StateId s, const Action& a, double reward, StateId s_next,
                const PolicyParams& params);

    // Epsilon-greedy over the available set; greedy ties break to the
    // lexicographically smallest (kind, target).
    Action select_action(StateId s, const std::vector<Action>& available, double epsilon,
                         Rng& rng) const;

    std::string dump() const;  // line-oriented text, for post-run inspection

private:
    double similarity_threshold_;
    std::vector<AbstractState> states_;
    std::vector<std::map<Action, double>> values_;
};

}  // namespace covrl
