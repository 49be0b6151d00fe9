#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cfastar/cf_mdp.hpp"
#include "cfastar/scm.hpp"

namespace cfastar {

struct Environment {
    std::shared_ptr<const Scm> scm;
    Episode episode;
};

struct Dataset {
    std::shared_ptr<const Scm> scm;
    std::vector<Episode> episodes;
};

/// Partition-problem reduction: T = B+1, two actions (keep / drop the pending
/// item), all-null observed episode whose counterfactual optimum is 0 exactly
/// when the multiset splits into two halves of equal sum.
Environment build_partition_gadget(std::span<const int> values);

enum class PartitionSolver { astar, brute_force };

bool decide_partition(std::span<const int> values, PartitionSolver solver);

// Optimal counterfactual outcome of the gadget with k = T.
double partition_gadget_optimum(std::span<const int> values, PartitionSolver solver);

struct RandomEnvOptions {
    std::size_t evolving_dim = 3;
    std::size_t frozen_dim = 0;
    std::size_t action_count = 3;
    std::size_t horizon = 6;
    double location_lipschitz = 1.0;  // exact max_a ||A_a||_2
    double scale_lipschitz = 0.0;     // exact max_a ||B_a||_2
    double base_scale = 0.5;          // scale bias before the softplus
    double action_effect = 1.0;       // magnitude of per-action location offsets
    double state_spread = 1.0;        // initial state standard deviation
    double matrix_spread = 0.35;      // per-action deviation from the shared drift matrix
    // Offsets on a g x g grid spanned by two random directions, one axis per
    // treatment; needs N = g*g with g >= 2. Otherwise offsets are independent.
    bool grid_actions = false;
};

/// Random location-scale SCM with affine location maps of prescribed operator
/// norm, a softplus scale (or constant scale when scale_lipschitz is 0), a
/// negated-coordinate reward, and episodes rolled out under random actions.
/// Fully determined by the seed.
Dataset random_linear_dataset(const RandomEnvOptions& options, std::size_t episodes,
                              std::uint64_t seed);

Environment random_linear_env(std::size_t D, std::size_t N, std::size_t T, std::uint64_t seed);

// Same model and episode, with the true location map replaced by the
// identity on the evolving coordinates and unit scale (telescoping check).
Environment identity_walk_env(std::size_t D, std::size_t T, std::uint64_t seed);

}  // namespace cfastar
