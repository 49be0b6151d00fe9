#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfastar/cf_mdp.hpp"
#include "cfastar/scm.hpp"

namespace cfastar {

inline constexpr int kModelFormatVersion = 1;

// ---- models ---------------------------------------------------------------

nlohmann::json model_to_json(const Scm& scm);
Scm model_from_json(const nlohmann::json& j);

std::string save_model(const Scm& scm);
Scm load_model(std::string_view bytes);

Scm load_model_file(const std::string& path);
void save_model_file(const Scm& scm, const std::string& path);

// Copy of a location-scale model whose location map has Lipschitz constant
// `target` in the state: affine maps are rescaled to max_a ||A_a||_2 = target,
// MLP location nets get pre = post = sqrt(target). Declared L_h follows.
Scm with_location_lipschitz(const Scm& scm, double target);

// ---- episodes and results -------------------------------------------------

struct EpisodeRecord {
    Episode episode;
    nlohmann::json metadata;  // null when absent
};

struct LineIssue {
    std::size_t line = 0;
    std::string message;
};

struct EpisodeLoad {
    std::vector<EpisodeRecord> records;
    std::vector<LineIssue> issues;
};

// One JSON object per line; blank lines are skipped, bad lines reported.
EpisodeLoad load_episodes(std::string_view bytes);
EpisodeLoad load_episodes_file(const std::string& path);

std::string episode_to_line(const Episode& episode,
                            const nlohmann::json& metadata = nullptr);
std::string write_episodes(const std::vector<Episode>& episodes);

struct ResultRecord {
    std::string id;
    std::string solver;  // "astar" or "brute_force"
    std::size_t budget = 0;
    std::vector<ActionId> observed_actions;
    std::vector<ActionId> actions;
    std::vector<std::size_t> changed_steps;
    std::vector<State> cf_states;
    double observed_outcome = 0.0;
    double outcome = 0.0;
    std::optional<double> improvement;  // absent when the observed outcome is 0
    std::size_t nodes_expanded = 0;
    std::size_t nodes_generated = 0;
    double ebf = 1.0;
    double elapsed_ms = 0.0;
    std::size_t anchor_count = 0;
    std::optional<std::string> error;  // set for failed episodes; other fields unset
};

nlohmann::json result_to_json(const ResultRecord& r);
ResultRecord result_from_json(const nlohmann::json& j);

// Line-delimited, in the given order.
std::string write_results(const std::vector<ResultRecord>& results);
std::vector<ResultRecord> read_results(std::string_view bytes);

// ---- validation -----------------------------------------------------------

struct SpectralNorm {
    double value = 0.0;
    std::size_t iterations = 0;
    double residual = 0.0;  // relative change of the last iteration
    bool converged = false;
};

// Largest singular value by power iteration on M^T M.
SpectralNorm spectral_norm(const Eigen::MatrixXd& m, double rel_tol = 1e-8,
                           std::size_t max_iterations = 10'000);

struct NamedNorm {
    std::string name;
    double value = 0.0;
    bool converged = true;
};

struct ValidationReport {
    std::vector<NamedNorm> spectral_norms;
    double effective_location_lipschitz = 0.0;
    double effective_scale_lipschitz = 0.0;
    double max_transition_quotient_ratio = 0.0;  // observed quotient / declared K
    double max_reward_quotient_ratio = 0.0;      // observed quotient / declared C_a
    double min_scale = 0.0;
    double max_roundtrip_residual = 0.0;
    std::size_t samples = 0;

    bool norms_ok = true;
    bool lipschitz_ok = true;
    bool scale_ok = true;
    bool roundtrip_ok = true;
    std::vector<std::string> failures;

    bool pass() const { return norms_ok && lipschitz_ok && scale_ok && roundtrip_ok; }
};

inline constexpr double kSpectralSlack = 1e-3;
inline constexpr double kValidationRoundTripTol = 1e-6;

ValidationReport validate_model(const Scm& scm, std::size_t samples, std::mt19937_64& rng);

nlohmann::json report_to_json(const ValidationReport& r);

}  // namespace cfastar
