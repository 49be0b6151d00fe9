#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cfastar/cf_mdp.hpp"
#include "cfastar/heuristic.hpp"

namespace cfastar {

enum class AnchorStrategy { mc_lipschitz, mc_uniform, facility_location };

AnchorStrategy parse_anchor_strategy(std::string_view name);
std::string_view to_string(AnchorStrategy s);

struct AnchorConfig {
    AnchorStrategy strategy = AnchorStrategy::mc_lipschitz;
    std::size_t samples = 2000;    // M, Monte Carlo strategies
    std::size_t target_size = 0;   // b; if non-zero the anchor set is grown to exactly b states
    std::uint64_t seed = 0;
};

// How the change points of a sampled counterfactual sequence are drawn.
enum class StepSampling { lipschitz, uniform };

struct McAnchorSet {
    std::vector<State> anchors;
    // Action sequence that generated each anchor (index into `sequences`, or
    // -1 for observed states) and its time step.
    std::vector<std::ptrdiff_t> sequence_of;
    std::vector<std::size_t> step_of;
    std::vector<std::vector<ActionId>> sequences;
};

// `count` distinct indices, drawn one at a time with probability
// proportional to the remaining weights.
std::vector<std::size_t> sample_without_replacement(std::span<const double> weights,
                                                    std::size_t count, std::mt19937_64& rng);

// One random counterfactual action sequence with 1..k changes.
std::vector<ActionId> sample_cf_actions(const CfMdp& m, const LipschitzSchedule& schedule,
                                        StepSampling mode, std::mt19937_64& rng);

/// Observed states plus every distinct state visited by M sampled
/// counterfactual rollouts. Duplicates are detected bitwise.
McAnchorSet mc_anchor_set(const CfMdp& m, const LipschitzSchedule& schedule, std::size_t samples,
                          StepSampling mode, std::mt19937_64& rng);

/// Same sampling, but keeps drawing sequences until exactly `target_size`
/// anchors exist (or `max_sequences` draws have been made).
McAnchorSet mc_anchor_set_sized(const CfMdp& m, const LipschitzSchedule& schedule,
                                std::size_t target_size, StepSampling mode, std::mt19937_64& rng,
                                std::size_t max_sequences = 0);

/// Greedy farthest-point clustering: a uniformly random first center, then
/// b-1 times the point farthest from the chosen set. 2-approximation of the
/// b-center radius.
std::vector<State> facility_location_anchors(std::span<const State> points, std::size_t b,
                                             std::mt19937_64& rng);

// max over points of the distance to the nearest center.
double coverage_radius(std::span<const State> points, std::span<const State> centers);

}  // namespace cfastar
