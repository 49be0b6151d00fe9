#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace cfastar {

using State = Eigen::VectorXd;
using Noise = Eigen::VectorXd;
using ActionId = std::size_t;

// Positivity transform applied to the raw output of a scale map.
struct ScaleTransform {
    enum class Kind { identity, softplus };

    Kind kind = Kind::identity;
    double floor = 1e-4;  // softplus only

    static ScaleTransform identity() { return {}; }
    static ScaleTransform softplus(double floor = 1e-4) { return {Kind::softplus, floor}; }

    double apply(double raw) const;
};

struct AffineMap {
    Eigen::MatrixXd weights;  // out x D
    Eigen::VectorXd bias;     // out
};

// h(s,a) = A_a s + b_a and raw scale B_a s + c_a, one map per action.
struct AffineLocationScale {
    std::vector<AffineMap> location;
    std::vector<AffineMap> scale;
};

/// One-hidden-layer tanh network with a learned action embedding.
///
/// out = post_scale * W_z * tanh(pre_scale * W_s * s + W_a * e_a + b_1) + b_2
///
/// With ||W_s||_2 <= 1 and ||W_z||_2 <= 1 the map is pre_scale * post_scale
/// Lipschitz in s.
struct MlpNet {
    Eigen::MatrixXd state_weights;      // H x D
    Eigen::MatrixXd action_weights;     // H x E
    Eigen::MatrixXd action_embeddings;  // N x E
    Eigen::MatrixXd output_weights;     // O x H
    Eigen::VectorXd hidden_bias;        // H, or empty
    Eigen::VectorXd output_bias;        // O, or empty
    double pre_scale = 1.0;
    double post_scale = 1.0;

    std::size_t input_dim() const { return static_cast<std::size_t>(state_weights.cols()); }
    std::size_t hidden_dim() const { return static_cast<std::size_t>(state_weights.rows()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(output_weights.rows()); }
    std::size_t action_count() const { return static_cast<std::size_t>(action_embeddings.rows()); }
    double state_lipschitz() const { return pre_scale * post_scale; }

    // Throws ModelIntegrityError when the shapes do not line up.
    void check_shapes() const;
};

Eigen::VectorXd mlp_eval(const MlpNet& net, const State& s, ActionId a);

struct MlpLocationScale {
    MlpNet location;
    MlpNet scale;
};

// Two-action hardness construction: action 0 keeps the running sum, action 1
// subtracts the pending item before the noise adds the next one.
struct PartitionGadgetMechanism {
    static constexpr ActionId null_action = 0;
    static constexpr ActionId diff_action = 1;
};

using Mechanism = std::variant<AffineLocationScale, MlpLocationScale, PartitionGadgetMechanism>;

// R(s,a) = -s[index]
struct NegCoordinateReward {
    std::size_t index = 0;
};

// R(s,a) = -max(0, s1 - alpha - s2*alpha) - max(0, alpha - s1 - s2*alpha)
struct PartitionGadgetReward {
    double alpha = 0.0;
};

// R(s,a) = w_a . s + b_a
struct AffineReward {
    Eigen::MatrixXd weights;  // N x D
    Eigen::VectorXd offsets;  // N
};

using RewardSpec = std::variant<NegCoordinateReward, PartitionGadgetReward, AffineReward>;

// K_{a,u} = location + scale * max_i |u_i|
struct LocationScaleLipschitz {
    double location = 0.0;
    double scale = 0.0;
};

// K_{a,u} = transition[a], independent of u
struct PerActionLipschitz {
    std::vector<double> transition;
};

using LipschitzMeta = std::variant<LocationScaleLipschitz, PerActionLipschitz>;

/// Bijective, Lipschitz-annotated transition mechanism plus reward.
///
/// The mechanism reads the full D-dimensional state and produces only the
/// evolving coordinates; frozen coordinates are filled in by the
/// counterfactual MDP. All evaluation is const and thread-safe.
class Scm {
public:
    Scm(std::size_t state_dim, std::vector<bool> evolving_mask, std::size_t action_count,
        Mechanism mechanism, RewardSpec reward, LipschitzMeta lipschitz,
        ScaleTransform scale_transform, Eigen::MatrixXd noise_covariance);

    std::size_t state_dim() const { return state_dim_; }
    std::size_t evolving_dim() const { return evolving_.size(); }
    std::size_t action_count() const { return action_count_; }
    const std::vector<bool>& evolving_mask() const { return evolving_mask_; }
    const std::vector<std::size_t>& evolving_indices() const { return evolving_; }
    const std::vector<std::size_t>& frozen_indices() const { return frozen_; }

    const Mechanism& mechanism() const { return mechanism_; }
    const RewardSpec& reward_spec() const { return reward_; }
    const LipschitzMeta& lipschitz_meta() const { return lipschitz_; }
    const ScaleTransform& scale_transform() const { return scale_transform_; }
    const Eigen::MatrixXd& noise_covariance() const { return noise_covariance_; }

    // g_S(s, a, u) restricted to the evolving coordinates.
    Eigen::VectorXd forward(const State& s, ActionId a, const Noise& u) const;

    // Inverse of forward in u; s_next is a full D-dimensional state.
    Noise abduct(const State& s, ActionId a, const State& s_next) const;

    // Location h(s,a) and positive scale phi(s,a). Location-scale mechanisms only.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> location_scale(const State& s, ActionId a) const;
    bool is_location_scale() const;

    double transition_lipschitz(ActionId a, const Noise& u) const;
    // max over actions
    double transition_lipschitz(const Noise& u) const;

    double reward(const State& s, ActionId a) const;
    double reward_lipschitz(ActionId a) const;
    double reward_lipschitz() const;

private:
    void check_state(const State& s) const;
    void check_action(ActionId a) const;
    void validate() const;

    std::size_t state_dim_;
    std::vector<bool> evolving_mask_;
    std::vector<std::size_t> evolving_;
    std::vector<std::size_t> frozen_;
    std::size_t action_count_;
    Mechanism mechanism_;
    RewardSpec reward_;
    LipschitzMeta lipschitz_;
    ScaleTransform scale_transform_;
    Eigen::MatrixXd noise_covariance_;
};

// Evolving coordinates of a full state.
Eigen::VectorXd evolving_part(const Scm& scm, const State& s);

}  // namespace cfastar
