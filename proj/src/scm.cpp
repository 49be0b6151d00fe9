#include "cfastar/scm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfastar/errors.hpp"

namespace cfastar {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string shape(const Eigen::MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ModelIntegrityError(what);
}

void check_affine(const AffineMap& map, std::size_t out, std::size_t in, const std::string& name) {
    require(static_cast<std::size_t>(map.weights.rows()) == out &&
                static_cast<std::size_t>(map.weights.cols()) == in,
            name + " weights have shape " + shape(map.weights) + ", expected " +
                std::to_string(out) + "x" + std::to_string(in));
    require(static_cast<std::size_t>(map.bias.size()) == out,
            name + " bias has length " + std::to_string(map.bias.size()));
    require(map.weights.allFinite() && map.bias.allFinite(), name + " has non-finite entries");
}

void check_net(const MlpNet& net, std::size_t out, std::size_t in, std::size_t actions,
               const std::string& name) {
    net.check_shapes();
    require(net.input_dim() == in, name + " input dimension " + std::to_string(net.input_dim()) +
                                       " != state dimension " + std::to_string(in));
    require(net.output_dim() == out, name + " output dimension " +
                                         std::to_string(net.output_dim()) +
                                         " != evolving dimension " + std::to_string(out));
    require(net.action_count() == actions, name + " embeds " + std::to_string(net.action_count()) +
                                               " actions, model declares " +
                                               std::to_string(actions));
}

}  // namespace

double ScaleTransform::apply(double raw) const {
    if (kind == Kind::identity) return raw;
    // numerically stable softplus
    const double sp = raw > 0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
    return sp + floor;
}

void MlpNet::check_shapes() const {
    const auto h = state_weights.rows();
    require(h > 0 && state_weights.cols() > 0, "mlp state weights are empty");
    require(action_weights.rows() == h, "mlp action weights have " +
                                            std::to_string(action_weights.rows()) +
                                            " rows, expected " + std::to_string(h));
    require(action_embeddings.cols() == action_weights.cols(),
            "mlp action embedding width " + std::to_string(action_embeddings.cols()) +
                " != action weight columns " + std::to_string(action_weights.cols()));
    require(action_embeddings.rows() > 0, "mlp has no action embeddings");
    require(output_weights.cols() == h && output_weights.rows() > 0,
            "mlp output weights have shape " + shape(output_weights));
    require(hidden_bias.size() == 0 || hidden_bias.size() == h, "mlp hidden bias length mismatch");
    require(output_bias.size() == 0 || output_bias.size() == output_weights.rows(),
            "mlp output bias length mismatch");
    require(std::isfinite(pre_scale) && std::isfinite(post_scale) && pre_scale >= 0 &&
                post_scale >= 0,
            "mlp scaling constants must be finite and non-negative");
    require(state_weights.allFinite() && action_weights.allFinite() &&
                action_embeddings.allFinite() && output_weights.allFinite() &&
                hidden_bias.allFinite() && output_bias.allFinite(),
            "mlp has non-finite weights");
}

Eigen::VectorXd mlp_eval(const MlpNet& net, const State& s, ActionId a) {
    if (static_cast<std::size_t>(s.size()) != net.input_dim())
        throw ModelIntegrityError("mlp input has dimension " + std::to_string(s.size()) +
                                  ", expected " + std::to_string(net.input_dim()));
    if (a >= net.action_count())
        throw ModelIntegrityError("mlp has no embedding for action " + std::to_string(a));
    Eigen::VectorXd pre = net.pre_scale * (net.state_weights * s) +
                          net.action_weights * net.action_embeddings.row(a).transpose();
    if (net.hidden_bias.size() > 0) pre += net.hidden_bias;
    Eigen::VectorXd out = net.post_scale * (net.output_weights * pre.array().tanh().matrix());
    if (net.output_bias.size() > 0) out += net.output_bias;
    return out;
}

Scm::Scm(std::size_t state_dim, std::vector<bool> evolving_mask, std::size_t action_count,
         Mechanism mechanism, RewardSpec reward, LipschitzMeta lipschitz,
         ScaleTransform scale_transform, Eigen::MatrixXd noise_covariance)
    : state_dim_(state_dim),
      evolving_mask_(std::move(evolving_mask)),
      action_count_(action_count),
      mechanism_(std::move(mechanism)),
      reward_(std::move(reward)),
      lipschitz_(std::move(lipschitz)),
      scale_transform_(scale_transform),
      noise_covariance_(std::move(noise_covariance)) {
    for (std::size_t i = 0; i < evolving_mask_.size(); ++i)
        (evolving_mask_[i] ? evolving_ : frozen_).push_back(i);
    validate();
}

void Scm::validate() const {
    require(state_dim_ >= 1, "state dimension must be positive");
    require(evolving_mask_.size() == state_dim_,
            "evolving mask has length " + std::to_string(evolving_mask_.size()) +
                ", expected " + std::to_string(state_dim_));
    require(!evolving_.empty(), "model has no evolving coordinates");
    require(action_count_ >= 1, "model needs at least one action");
    const std::size_t de = evolving_.size();

    std::visit(overloaded{
                   [&](const AffineLocationScale& m) {
                       require(m.location.size() == action_count_ &&
                                   m.scale.size() == action_count_,
                               "affine mechanism needs one location and one scale map per action");
                       for (std::size_t a = 0; a < action_count_; ++a) {
                           check_affine(m.location[a], de, state_dim_,
                                        "location[" + std::to_string(a) + "]");
                           check_affine(m.scale[a], de, state_dim_,
                                        "scale[" + std::to_string(a) + "]");
                       }
                   },
                   [&](const MlpLocationScale& m) {
                       check_net(m.location, de, state_dim_, action_count_, "location net");
                       check_net(m.scale, de, state_dim_, action_count_, "scale net");
                   },
                   [&](const PartitionGadgetMechanism&) {
                       require(state_dim_ == 2 && de == 2 && action_count_ == 2,
                               "partition gadget needs D=2 (both evolving) and N=2");
                   },
               },
               mechanism_);

    std::visit(overloaded{
                   [&](const NegCoordinateReward& r) {
                       require(r.index < state_dim_, "reward coordinate " +
                                                         std::to_string(r.index) +
                                                         " out of range");
                   },
                   [&](const PartitionGadgetReward& r) {
                       require(std::isfinite(r.alpha) && r.alpha >= 0,
                               "partition reward alpha must be finite and >= 0");
                   },
                   [&](const AffineReward& r) {
                       require(static_cast<std::size_t>(r.weights.rows()) == action_count_ &&
                                   static_cast<std::size_t>(r.weights.cols()) == state_dim_,
                               "affine reward weights have shape " + shape(r.weights));
                       require(static_cast<std::size_t>(r.offsets.size()) == action_count_,
                               "affine reward offsets length mismatch");
                       require(r.weights.allFinite() && r.offsets.allFinite(),
                               "affine reward has non-finite entries");
                   },
               },
               reward_);

    std::visit(overloaded{
                   [&](const LocationScaleLipschitz& l) {
                       require(is_location_scale(),
                               "location/scale Lipschitz constants need a location-scale mechanism");
                       require(std::isfinite(l.location) && std::isfinite(l.scale) &&
                                   l.location >= 0 && l.scale >= 0,
                               "Lipschitz constants must be finite and >= 0");
                   },
                   [&](const PerActionLipschitz& l) {
                       require(l.transition.size() == action_count_,
                               "need one transition Lipschitz constant per action");
                       for (double k : l.transition)
                           require(std::isfinite(k) && k >= 0,
                                   "Lipschitz constants must be finite and >= 0");
                   },
               },
               lipschitz_);

    require(std::isfinite(scale_transform_.floor) && scale_transform_.floor >= 0,
            "scale floor must be finite and >= 0");

    require(static_cast<std::size_t>(noise_covariance_.rows()) == de &&
                static_cast<std::size_t>(noise_covariance_.cols()) == de,
            "noise covariance has shape " + shape(noise_covariance_) + ", expected " +
                std::to_string(de) + "x" + std::to_string(de));
    require(noise_covariance_.allFinite(), "noise covariance has non-finite entries");
    const double asym = (noise_covariance_ - noise_covariance_.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-12 * std::max(1.0, noise_covariance_.cwiseAbs().maxCoeff()),
            "noise covariance is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(noise_covariance_);
    require(llt.info() == Eigen::Success, "noise covariance is not positive definite");
}

bool Scm::is_location_scale() const {
    return !std::holds_alternative<PartitionGadgetMechanism>(mechanism_);
}

void Scm::check_state(const State& s) const {
    if (static_cast<std::size_t>(s.size()) != state_dim_)
        throw InvalidInput("state has dimension " + std::to_string(s.size()) + ", expected " +
                           std::to_string(state_dim_));
    if (!s.allFinite()) throw InvalidInput("state has non-finite entries");
}

void Scm::check_action(ActionId a) const {
    if (a >= action_count_)
        throw InvalidInput("action " + std::to_string(a) + " out of range [0, " +
                           std::to_string(action_count_) + ")");
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> Scm::location_scale(const State& s,
                                                                 ActionId a) const {
    Eigen::VectorXd loc, raw;
    if (const auto* m = std::get_if<AffineLocationScale>(&mechanism_)) {
        loc = m->location[a].weights * s + m->location[a].bias;
        raw = m->scale[a].weights * s + m->scale[a].bias;
    } else if (const auto* m = std::get_if<MlpLocationScale>(&mechanism_)) {
        loc = mlp_eval(m->location, s, a);
        raw = mlp_eval(m->scale, s, a);
    } else {
        throw ModelIntegrityError("mechanism is not location-scale");
    }
    Eigen::VectorXd scale(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        scale[i] = scale_transform_.apply(raw[i]);
        if (!(scale[i] > 0))
            throw ModelIntegrityError("non-positive scale " + std::to_string(scale[i]) +
                                      " at coordinate " + std::to_string(i));
    }
    return {std::move(loc), std::move(scale)};
}

Eigen::VectorXd Scm::forward(const State& s, ActionId a, const Noise& u) const {
    check_state(s);
    check_action(a);
    if (static_cast<std::size_t>(u.size()) != evolving_dim())
        throw InvalidInput("noise has dimension " + std::to_string(u.size()) + ", expected " +
                           std::to_string(evolving_dim()));
    if (!u.allFinite()) throw InvalidInput("noise has non-finite entries");

    if (std::holds_alternative<PartitionGadgetMechanism>(mechanism_)) {
        Eigen::VectorXd out(2);
        out[0] = a == PartitionGadgetMechanism::diff_action ? s[0] - s[1] : s[0];
        out[1] = 0.0;
        return out + u;
    }
    auto [loc, scale] = location_scale(s, a);
    return loc + scale.cwiseProduct(u);
}

Noise Scm::abduct(const State& s, ActionId a, const State& s_next) const {
    check_state(s);
    check_state(s_next);
    check_action(a);
    const Eigen::VectorXd next = evolving_part(*this, s_next);

    if (std::holds_alternative<PartitionGadgetMechanism>(mechanism_)) {
        Eigen::VectorXd base(2);
        base[0] = a == PartitionGadgetMechanism::diff_action ? s[0] - s[1] : s[0];
        base[1] = 0.0;
        return next - base;
    }
    auto [loc, scale] = location_scale(s, a);
    return (next - loc).cwiseQuotient(scale);
}

double Scm::transition_lipschitz(ActionId a, const Noise& u) const {
    check_action(a);
    if (!u.allFinite()) throw InvalidInput("noise has non-finite entries");
    return std::visit(overloaded{
                          [&](const LocationScaleLipschitz& l) {
                              const double umax = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
                              return l.location + l.scale * umax;
                          },
                          [&](const PerActionLipschitz& l) { return l.transition[a]; },
                      },
                      lipschitz_);
}

double Scm::transition_lipschitz(const Noise& u) const {
    double k = 0.0;
    for (ActionId a = 0; a < action_count_; ++a) k = std::max(k, transition_lipschitz(a, u));
    return k;
}

double Scm::reward(const State& s, ActionId a) const {
    check_state(s);
    check_action(a);
    return std::visit(overloaded{
                          [&](const NegCoordinateReward& r) { return -s[r.index]; },
                          [&](const PartitionGadgetReward& r) {
                              const double al = r.alpha;
                              return -std::max(0.0, s[0] - al - s[1] * al) -
                                     std::max(0.0, al - s[0] - s[1] * al);
                          },
                          [&](const AffineReward& r) {
                              return r.weights.row(a).dot(s) + r.offsets[a];
                          },
                      },
                      reward_);
}

double Scm::reward_lipschitz(ActionId a) const {
    check_action(a);
    return std::visit(overloaded{
                          [](const NegCoordinateReward&) { return 1.0; },
                          [](const PartitionGadgetReward& r) {
                              // both hinges are active where s2 < 0, slope 2*alpha
                              return std::max(2.0 * std::sqrt(1.0 + r.alpha), 2.0 * r.alpha);
                          },
                          [&](const AffineReward& r) { return r.weights.row(a).norm(); },
                      },
                      reward_);
}

double Scm::reward_lipschitz() const {
    double c = 0.0;
    for (ActionId a = 0; a < action_count_; ++a) c = std::max(c, reward_lipschitz(a));
    return c;
}

Eigen::VectorXd evolving_part(const Scm& scm, const State& s) {
    const auto& idx = scm.evolving_indices();
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = s[idx[i]];
    return out;
}

}  // namespace cfastar
