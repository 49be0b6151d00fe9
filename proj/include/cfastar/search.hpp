#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cfastar/cf_mdp.hpp"
#include "cfastar/heuristic.hpp"

namespace cfastar {

// One node selected from the open queue, in selection order.
struct ExpansionRecord {
    std::size_t t = 0;
    std::size_t changes = 0;
    double reward_so_far = 0.0;
    double priority = 0.0;  // reward_so_far + heuristic
};

struct SearchResult {
    std::vector<ActionId> actions;
    CfEpisode cf_episode;
    double outcome = 0.0;
    std::size_t nodes_expanded = 0;
    std::size_t nodes_generated = 0;
    double ebf = 1.0;
    std::chrono::duration<double, std::milli> elapsed{0};
    std::vector<ExpansionRecord> trace;  // filled only when requested
};

struct SearchOptions {
    bool record_trace = false;
};

/// A* over the counterfactual search graph rooted at (s_0, 0, 0).
///
/// Nodes are popped by largest reward-so-far plus heuristic; ties go to the
/// deeper node, then to the earlier insertion. With a consistent heuristic
/// the first goal popped is optimal. nodes_expanded counts every pop,
/// including the final goal pop, so a single chain of length T counts T+1.
SearchResult astar(const CfMdp& m, const HeuristicTable& table, const SearchOptions& options = {});

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

// sum_{j<=k} C(T,j) (N-1)^j, saturating at UINT64_MAX
std::uint64_t count_candidates(std::size_t T, std::size_t N, std::size_t k);

/// Exhaustive search over every action sequence within the budget. Ties go to
/// the lexicographically smallest sequence.
SearchResult brute_force(const CfMdp& m, std::uint64_t cap = kDefaultEnumerationCap);

// b >= 1 with 1 + b + ... + b^T = nodes_expanded
double ebf(std::size_t nodes_expanded, std::size_t T);

// Line-delimited JSON, one record per expansion.
void write_trace(std::ostream& os, const std::vector<ExpansionRecord>& trace);

}  // namespace cfastar
