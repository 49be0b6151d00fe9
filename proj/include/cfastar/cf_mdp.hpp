#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfastar/scm.hpp"

namespace cfastar {

// Observed trajectory {(s_t, a_t)}, t = 0..T-1.
struct Episode {
    std::string id;
    std::vector<State> states;
    std::vector<ActionId> actions;

    std::size_t horizon() const { return states.size(); }
};

// o(tau) = sum_t R(s_t, a_t)
double episode_outcome(const Scm& scm, const Episode& episode);

// Counterfactual state paired with the number of actions changed so far.
struct EnhancedState {
    State state;
    std::size_t changes = 0;
};

struct CfEpisode {
    std::vector<State> states;
    std::vector<std::size_t> changes;  // l_t before acting at step t
    std::vector<ActionId> actions;
    std::size_t total_changes = 0;
    double outcome = 0.0;
};

/// Episode-specific deterministic counterfactual MDP.
///
/// Holds the noise abducted from every observed transition. Replaying it
/// under the observed actions reproduces the episode; replaying it under
/// other actions gives the counterfactual trajectory. Immutable after
/// construction.
class CfMdp {
public:
    CfMdp(std::shared_ptr<const Scm> scm, Episode observed, std::size_t budget);

    const Scm& scm() const { return *scm_; }
    const std::shared_ptr<const Scm>& scm_ptr() const { return scm_; }
    const Episode& observed() const { return observed_; }
    const std::vector<Noise>& noise() const { return noise_; }
    std::size_t budget() const { return budget_; }
    std::size_t horizon() const { return observed_.horizon(); }
    ActionId observed_action(std::size_t t) const { return observed_.actions[t]; }
    double observed_outcome() const { return observed_outcome_; }

    // Actions allowed from a node with `changes` used at step t.
    bool action_available(std::size_t changes, std::size_t t, ActionId a) const {
        return changes < budget_ || a == observed_.actions[t];
    }

    // F+_{tau,t}: one counterfactual transition out of step t (t <= T-2).
    EnhancedState step(const EnhancedState& es, ActionId a, std::size_t t) const;

    // Full counterfactual trajectory for a length-T action sequence.
    CfEpisode rollout(std::span<const ActionId> actions) const;

private:
    std::shared_ptr<const Scm> scm_;
    Episode observed_;
    std::vector<Noise> noise_;
    std::size_t budget_;
    double observed_outcome_;
};

// Throws AbductionError if the abducted noise fails to reproduce the episode.
CfMdp build_cf_mdp(std::shared_ptr<const Scm> scm, Episode episode, std::size_t budget);

// (o_cf - o_obs) / |o_obs|
double improvement(double observed_outcome, double cf_outcome);

// Positions where `actions` differs from the observed sequence.
std::vector<std::size_t> changed_steps(const Episode& observed, std::span<const ActionId> actions);

}  // namespace cfastar
