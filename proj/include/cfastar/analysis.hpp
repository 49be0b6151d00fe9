#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfastar/anchors.hpp"
#include "cfastar/cf_mdp.hpp"
#include "cfastar/heuristic.hpp"
#include "cfastar/model_io.hpp"
#include "cfastar/scm.hpp"

namespace cfastar {

struct AnalyzeOptions {
    std::size_t budget = 3;
    AnchorConfig anchors;
    // Candidate points for facility location, typically every observed state
    // of the episode file. Unused by the Monte Carlo strategies.
    std::vector<State> pool;
    TableOptions table;
};

struct EpisodeRun {
    ResultRecord record;
    double total_ms = 0.0;  // anchors + table + search
};

// Anchor set for one episode. `episode_index` decorrelates the per-episode
// random streams while keeping them independent of the worker schedule.
std::vector<State> make_anchors(const CfMdp& m, const LipschitzSchedule& schedule,
                                const AnalyzeOptions& options, std::size_t episode_index);

// Abduction, anchors, table and A* for one episode. Library errors propagate.
EpisodeRun analyze_episode(std::shared_ptr<const Scm> scm, const Episode& episode,
                           const AnalyzeOptions& options, std::size_t episode_index);

EpisodeRun oracle_episode(std::shared_ptr<const Scm> scm, const Episode& episode,
                          std::size_t budget, std::uint64_t cap = 10'000'000);

// Runs every episode on up to `jobs` threads. Failures become records with
// `error` set. The output is sorted by episode id (stable for equal ids).
std::vector<EpisodeRun> analyze_all(std::shared_ptr<const Scm> scm,
                                    const std::vector<Episode>& episodes,
                                    const AnalyzeOptions& options, std::size_t jobs);

std::vector<EpisodeRun> oracle_all(std::shared_ptr<const Scm> scm,
                                   const std::vector<Episode>& episodes, std::size_t budget,
                                   std::size_t jobs, std::uint64_t cap = 10'000'000);

// Every observed state of every episode, in file order.
std::vector<State> observed_pool(const std::vector<Episode>& episodes);

// ---- benchmark sweeps -----------------------------------------------------

enum class SweepParam { k, M, Lh };

struct Sweep {
    SweepParam param = SweepParam::k;
    std::vector<double> values;
};

// "k=1..5", "k=1,2,3", "M=0,500,2000", "Lh=0.5,1,1.5". Throws InvalidInput.
Sweep parse_sweep(std::string_view text);
std::string_view to_string(SweepParam p);

struct BenchRow {
    double value = 0.0;
    std::size_t episodes = 0;  // successful runs
    std::size_t failures = 0;
    double mean_ebf = 0.0;
    double ci_half_width = 0.0;  // 1.96 * sample sd / sqrt(n)
    double mean_runtime_ms = 0.0;
    std::optional<double> mean_improvement;  // over episodes where it is defined
};

BenchRow summarize(double value, const std::vector<EpisodeRun>& runs);

// Options for one sweep point: k and M override `base`; Lh rescales the model.
std::vector<BenchRow> run_bench(std::shared_ptr<const Scm> scm,
                                const std::vector<Episode>& episodes, const Sweep& sweep,
                                const AnalyzeOptions& base, std::size_t jobs);

std::string bench_csv(SweepParam param, const std::vector<BenchRow>& rows);

}  // namespace cfastar
