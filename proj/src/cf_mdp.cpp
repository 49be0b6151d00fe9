#include "cfastar/cf_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfastar/errors.hpp"

namespace cfastar {

namespace {

constexpr double kReconstructionTol = 1e-6;

void check_episode(const Scm& scm, const Episode& ep) {
    const std::size_t T = ep.horizon();
    if (T < 2) throw InvalidInput("episode '" + ep.id + "' needs at least 2 steps");
    if (ep.actions.size() != T)
        throw InvalidInput("episode '" + ep.id + "' has " + std::to_string(T) + " states but " +
                           std::to_string(ep.actions.size()) + " actions");
    for (std::size_t t = 0; t < T; ++t) {
        if (static_cast<std::size_t>(ep.states[t].size()) != scm.state_dim())
            throw InvalidInput("episode '" + ep.id + "' state " + std::to_string(t) +
                               " has dimension " + std::to_string(ep.states[t].size()) +
                               ", model expects " + std::to_string(scm.state_dim()));
        if (!ep.states[t].allFinite())
            throw InvalidInput("episode '" + ep.id + "' state " + std::to_string(t) +
                               " has non-finite entries");
        if (ep.actions[t] >= scm.action_count())
            throw InvalidInput("episode '" + ep.id + "' action " + std::to_string(t) +
                               " out of range");
    }
}

}  // namespace

double episode_outcome(const Scm& scm, const Episode& episode) {
    double o = 0.0;
    for (std::size_t t = 0; t < episode.horizon(); ++t)
        o += scm.reward(episode.states[t], episode.actions[t]);
    return o;
}

CfMdp::CfMdp(std::shared_ptr<const Scm> scm, Episode observed, std::size_t budget)
    : scm_(std::move(scm)), observed_(std::move(observed)), budget_(budget) {
    if (!scm_) throw InvalidInput("null model");
    check_episode(*scm_, observed_);
    const std::size_t T = observed_.horizon();
    if (budget_ > T)
        throw InvalidInput("budget k=" + std::to_string(budget_) + " exceeds horizon " +
                           std::to_string(T));
    noise_.reserve(T - 1);
    for (std::size_t t = 0; t + 1 < T; ++t)
        noise_.push_back(
            scm_->abduct(observed_.states[t], observed_.actions[t], observed_.states[t + 1]));
    observed_outcome_ = episode_outcome(*scm_, observed_);
}

EnhancedState CfMdp::step(const EnhancedState& es, ActionId a, std::size_t t) const {
    if (t + 2 > horizon())
        throw InvalidInput("no transition out of step " + std::to_string(t) + " (T=" +
                           std::to_string(horizon()) + ")");
    if (es.changes > budget_) throw InvalidInput("change count exceeds budget");
    const bool changed = a != observed_.actions[t];
    if (changed && es.changes == budget_)
        throw InfeasibleAction("action " + std::to_string(a) + " at step " + std::to_string(t) +
                               " exceeds the change budget k=" + std::to_string(budget_));

    const Eigen::VectorXd evolved = scm_->forward(es.state, a, noise_[t]);
    EnhancedState next;
    next.state = observed_.states[t + 1];
    const auto& idx = scm_->evolving_indices();
    for (std::size_t i = 0; i < idx.size(); ++i)
        next.state[idx[i]] = evolved[static_cast<Eigen::Index>(i)];
    next.changes = es.changes + (changed ? 1 : 0);
    return next;
}

CfEpisode CfMdp::rollout(std::span<const ActionId> actions) const {
    const std::size_t T = horizon();
    if (actions.size() != T)
        throw InvalidInput("action sequence has length " + std::to_string(actions.size()) +
                           ", expected " + std::to_string(T));
    CfEpisode out;
    out.actions.assign(actions.begin(), actions.end());
    out.states.reserve(T);
    out.changes.reserve(T);

    EnhancedState es{observed_.states[0], 0};
    for (std::size_t t = 0; t < T; ++t) {
        if (actions[t] >= scm_->action_count())
            throw InvalidInput("action " + std::to_string(actions[t]) + " out of range");
        out.states.push_back(es.state);
        out.changes.push_back(es.changes);
        out.outcome += scm_->reward(es.state, actions[t]);
        if (t + 1 < T) {
            if (!action_available(es.changes, t, actions[t]))
                throw InfeasibleAction("action sequence changes more than k=" +
                                       std::to_string(budget_) + " actions");
            es = step(es, actions[t], t);
        } else {
            out.total_changes = es.changes + (actions[t] != observed_.actions[t] ? 1 : 0);
            if (out.total_changes > budget_)
                throw InfeasibleAction("action sequence changes more than k=" +
                                       std::to_string(budget_) + " actions");
        }
    }
    return out;
}

CfMdp build_cf_mdp(std::shared_ptr<const Scm> scm, Episode episode, std::size_t budget) {
    CfMdp m(std::move(scm), std::move(episode), budget);
    const auto& obs = m.observed();
    const CfEpisode replay = m.rollout(obs.actions);
    for (std::size_t t = 0; t < obs.horizon(); ++t) {
        for (Eigen::Index i = 0; i < obs.states[t].size(); ++i) {
            const double want = obs.states[t][i];
            const double got = replay.states[t][i];
            if (!(std::abs(got - want) <= kReconstructionTol * std::max(1.0, std::abs(want))))
                throw AbductionError("episode '" + obs.id + "': replay of step " +
                                     std::to_string(t) + " coordinate " + std::to_string(i) +
                                     " gives " + std::to_string(got) + ", observed " +
                                     std::to_string(want));
        }
    }
    return m;
}

double improvement(double observed_outcome, double cf_outcome) {
    if (observed_outcome == 0.0)
        throw UndefinedImprovement("improvement is undefined for an observed outcome of 0");
    return (cf_outcome - observed_outcome) / std::abs(observed_outcome);
}

std::vector<std::size_t> changed_steps(const Episode& observed,
                                       std::span<const ActionId> actions) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < actions.size() && t < observed.actions.size(); ++t)
        if (actions[t] != observed.actions[t]) out.push_back(t);
    return out;
}

}  // namespace cfastar
