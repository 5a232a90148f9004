#include "covrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace covrl {

namespace {

uint64_t fact_key(const Fact& f) {
    uint64_t h = 14695981039346656037ULL;
    auto mix = [&](uint8_t b) {
        h ^= b;
        h *= 1099511628211ULL;
    };
    for (char c : f.entity_id) mix(static_cast<uint8_t>(c));
    mix(static_cast<uint8_t>(f.attribute));
    mix(static_cast<uint8_t>(f.value));
    return h;
}

}  // namespace

AbstractState::AbstractState(std::vector<Fact> facts) : facts_(std::move(facts)) {
    std::sort(facts_.begin(), facts_.end());
    facts_.erase(std::unique(facts_.begin(), facts_.end()), facts_.end());
    for (size_t i = 1; i < facts_.size(); ++i)
        if (facts_[i].entity_id == facts_[i - 1].entity_id &&
            facts_[i].attribute == facts_[i - 1].attribute)
            throw std::invalid_argument("conflicting facts for entity '" + facts_[i].entity_id +
                                        "'");
    keys_.reserve(facts_.size());
    for (const auto& f : facts_) keys_.push_back(fact_key(f));
    std::sort(keys_.begin(), keys_.end());
}

std::string AbstractState::to_text() const {
    std::ostringstream out;
    for (size_t i = 0; i < facts_.size(); ++i) {
        if (i) out << ";";
        out << "(" << facts_[i].entity_id << "," << to_string(facts_[i].attribute) << ","
            << (facts_[i].value ? "true" : "false") << ")";
    }
    return out.str();
}

double jaccard(const AbstractState& a, const AbstractState& b) {
    if (a.empty() && b.empty()) return 1.0;
    const auto& ka = a.keys();
    const auto& kb = b.keys();
    size_t i = 0, j = 0, common = 0;
    while (i < ka.size() && j < kb.size()) {
        if (ka[i] == kb[j]) {
            ++common;
            ++i;
            ++j;
        } else if (ka[i] < kb[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    size_t uni = ka.size() + kb.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

AbstractState merge_observations(const std::vector<Observation>& observations) {
    if (observations.empty()) return AbstractState{};
    uint64_t tick = observations.front().tick;
    std::vector<Fact> all;
    for (const auto& obs : observations) {
        if (obs.tick != tick)
            throw std::invalid_argument("observations from different ticks cannot be merged");
        all.insert(all.end(), obs.facts.begin(), obs.facts.end());
    }
    return AbstractState(std::move(all));  // ctor rejects conflicting facts
}

double ObservationMemory::novelty_reward(const AbstractState& s, const NoveltyParams& params) {
    double best = 0.0;
    size_t best_i = 0;
    for (size_t i = 0; i < entries_.size(); ++i) {
        double j = jaccard(s, entries_[i].state);
        if (j > best) {
            best = j;
            best_i = i;
        }
    }
    if (entries_.empty() || best < params.new_state_threshold) {
        entries_.push_back({s, 1});
        return 1.0 - best;
    }
    const int c = entries_[best_i].visit_count;
    entries_[best_i].visit_count = c + 1;
    return -params.revisit_penalty * (1.0 - 1.0 / (1.0 + c));
}

double epsilon_at(int episode, const PolicyParams& params) {
    if (episode < 0 || episode >= params.episodes)
        throw std::out_of_range("episode index out of range");
    if (params.episodes == 1 || params.epsilon0 == 0.0) return params.epsilon0;
    double ratio = params.epsilon_min / params.epsilon0;
    return params.epsilon0 *
           std::pow(ratio, static_cast<double>(episode) / (params.episodes - 1));
}

QTable::StateId QTable::lookup_or_insert(const AbstractState& s) {
    double best = -1.0;
    size_t best_i = 0;
    for (size_t i = 0; i < states_.size(); ++i) {
        double j = jaccard(s, states_[i]);
        if (j > best) {
            best = j;
            best_i = i;
        }
    }
    if (!states_.empty() && best >= similarity_threshold_) return best_i;
    states_.push_back(s);
    values_.emplace_back();
    return states_.size() - 1;
}

double QTable::value(StateId s, const Action& a) const {
    const auto& m = values_[s];
    auto it = m.find(a);
    return it == m.end() ? 0.0 : it->second;
}

double QTable::max_value(StateId s) const {
    double best = 0.0;
    for (const auto& [a, v] : values_[s]) best = std::max(best, v);
    return best;
}

void QTable::update(StateId s, const Action& a, double reward, StateId s_next,
                    const PolicyParams& params) {
    double target = reward + params.gamma * max_value(s_next);
    double& q = values_[s][a];
    q = (1.0 - params.alpha) * q + params.alpha * target;
}

Action QTable::select_action(StateId s, const std::vector<Action>& available, double epsilon,
                             Rng& rng) const {
    if (available.empty()) throw std::invalid_argument("no available actions");
    std::vector<Action> sorted = available;
    std::sort(sorted.begin(), sorted.end());
    if (epsilon > 0.0 && rng.chance(epsilon))
        return sorted[rng.next_below(sorted.size())];
    Action best = sorted.front();
    double best_v = value(s, best);
    for (size_t i = 1; i < sorted.size(); ++i) {
        double v = value(s, sorted[i]);
        if (v > best_v) {
            best_v = v;
            best = sorted[i];
        }
    }
    return best;
}

std::string QTable::dump() const {
    std::ostringstream out;
    out << "sigma " << similarity_threshold_ << "\n";
    out << "states " << states_.size() << "\n";
    for (size_t i = 0; i < states_.size(); ++i) {
        out << "state " << i << " facts=" << states_[i].to_text() << "\n";
        for (const auto& [a, v] : values_[i]) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            out << "  " << to_string(a) << " = " << buf << "\n";
        }
    }
    return out.str();
}

}  // namespace covrl
