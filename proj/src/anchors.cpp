#include "cfastar/anchors.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "cfastar/errors.hpp"

namespace cfastar {

namespace {

std::string state_key(const State& s) {
    std::string key(static_cast<std::size_t>(s.size()) * sizeof(double), '\0');
    std::memcpy(key.data(), s.data(), key.size());
    return key;
}

class AnchorCollector {
public:
    explicit AnchorCollector(McAnchorSet& out) : out_(out) {}

    bool add(const State& s, std::ptrdiff_t sequence, std::size_t step) {
        if (!seen_.insert(state_key(s)).second) return false;
        out_.anchors.push_back(s);
        out_.sequence_of.push_back(sequence);
        out_.step_of.push_back(step);
        return true;
    }

    std::size_t size() const { return out_.anchors.size(); }

private:
    McAnchorSet& out_;
    std::unordered_set<std::string> seen_;
};

}  // namespace

AnchorStrategy parse_anchor_strategy(std::string_view name) {
    if (name == "mc-lipschitz" || name == "mc_lipschitz") return AnchorStrategy::mc_lipschitz;
    if (name == "mc-uniform" || name == "mc_uniform") return AnchorStrategy::mc_uniform;
    if (name == "facility-location" || name == "facility_location")
        return AnchorStrategy::facility_location;
    throw InvalidInput("unknown anchor strategy '" + std::string(name) + "'");
}

std::string_view to_string(AnchorStrategy s) {
    switch (s) {
        case AnchorStrategy::mc_lipschitz: return "mc-lipschitz";
        case AnchorStrategy::mc_uniform: return "mc-uniform";
        case AnchorStrategy::facility_location: return "facility-location";
    }
    return "?";
}

std::vector<std::size_t> sample_without_replacement(std::span<const double> weights,
                                                    std::size_t count, std::mt19937_64& rng) {
    if (count > weights.size())
        throw InvalidInput("cannot draw " + std::to_string(count) + " distinct items from " +
                           std::to_string(weights.size()));
    std::vector<double> w(weights.begin(), weights.end());
    for (double x : w)
        if (!(x >= 0)) throw InvalidInput("sampling weights must be non-negative");
    std::vector<std::size_t> picked;
    picked.reserve(count);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t draw = 0; draw < count; ++draw) {
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        std::size_t choice = 0;
        if (total > 0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            choice = w.size();
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (w[i] <= 0) continue;
                acc += w[i];
                choice = i;
                if (target < acc) break;
            }
        } else {
            // all remaining weights are zero: uniform over what is left
            std::vector<std::size_t> left;
            for (std::size_t i = 0; i < w.size(); ++i)
                if (std::find(picked.begin(), picked.end(), i) == picked.end()) left.push_back(i);
            choice = left[std::uniform_int_distribution<std::size_t>(0, left.size() - 1)(rng)];
        }
        picked.push_back(choice);
        w[choice] = 0.0;
    }
    return picked;
}

std::vector<ActionId> sample_cf_actions(const CfMdp& m, const LipschitzSchedule& schedule,
                                        StepSampling mode, std::mt19937_64& rng) {
    const std::size_t T = m.horizon();
    const std::size_t N = m.scm().action_count();
    std::vector<ActionId> actions = m.observed().actions;
    if (m.budget() == 0 || N < 2) return actions;

    const std::size_t kprime =
        std::uniform_int_distribution<std::size_t>(1, std::min(m.budget(), T))(rng);
    std::vector<double> weights =
        mode == StepSampling::lipschitz ? schedule.L : std::vector<double>(T, 1.0);
    for (std::size_t t : sample_without_replacement(weights, kprime, rng)) {
        // uniform over the N-1 actions other than the observed one
        ActionId a = std::uniform_int_distribution<ActionId>(0, N - 2)(rng);
        if (a >= m.observed_action(t)) ++a;
        actions[t] = a;
    }
    return actions;
}

namespace {

McAnchorSet sample_anchors(const CfMdp& m, const LipschitzSchedule& schedule, StepSampling mode,
                           std::mt19937_64& rng, std::size_t max_sequences,
                           std::size_t target_size) {
    if (schedule.horizon() != m.horizon())
        throw InvalidInput("schedule horizon does not match the episode");
    McAnchorSet out;
    AnchorCollector collect(out);
    const auto& obs = m.observed();
    for (std::size_t t = 0; t < obs.horizon(); ++t) {
        if (target_size && collect.size() >= target_size) break;
        collect.add(obs.states[t], -1, t);
    }
    for (std::size_t j = 0; j < max_sequences; ++j) {
        if (target_size && collect.size() >= target_size) break;
        auto actions = sample_cf_actions(m, schedule, mode, rng);
        const CfEpisode ep = m.rollout(actions);
        const auto seq = static_cast<std::ptrdiff_t>(out.sequences.size());
        bool used = false;
        for (std::size_t t = 0; t < ep.states.size(); ++t) {
            if (target_size && collect.size() >= target_size) break;
            used |= collect.add(ep.states[t], seq, t);
        }
        if (used) out.sequences.push_back(std::move(actions));
    }
    return out;
}

}  // namespace

McAnchorSet mc_anchor_set(const CfMdp& m, const LipschitzSchedule& schedule, std::size_t samples,
                          StepSampling mode, std::mt19937_64& rng) {
    return sample_anchors(m, schedule, mode, rng, samples, 0);
}

McAnchorSet mc_anchor_set_sized(const CfMdp& m, const LipschitzSchedule& schedule,
                                std::size_t target_size, StepSampling mode, std::mt19937_64& rng,
                                std::size_t max_sequences) {
    if (target_size == 0) throw InvalidInput("anchor set size must be at least 1");
    if (max_sequences == 0) max_sequences = 100 * target_size;
    return sample_anchors(m, schedule, mode, rng, max_sequences, target_size);
}

std::vector<State> facility_location_anchors(std::span<const State> points, std::size_t b,
                                             std::mt19937_64& rng) {
    if (points.empty()) throw InvalidInput("facility location needs at least one point");
    if (b == 0) throw InvalidInput("facility location needs b >= 1");
    if (b >= points.size()) return {points.begin(), points.end()};

    std::vector<State> centers;
    centers.reserve(b);
    const std::size_t first =
        std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng);
    centers.push_back(points[first]);
    std::vector<double> nearest(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) nearest[i] = (points[i] - points[first]).norm();

    while (centers.size() < b) {
        const auto far = static_cast<std::size_t>(
            std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
        centers.push_back(points[far]);
        for (std::size_t i = 0; i < points.size(); ++i)
            nearest[i] = std::min(nearest[i], (points[i] - points[far]).norm());
    }
    return centers;
}

double coverage_radius(std::span<const State> points, std::span<const State> centers) {
    if (centers.empty()) throw InvalidInput("no centers");
    double radius = 0.0;
    for (const auto& p : points) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) d = std::min(d, (p - c).norm());
        radius = std::max(radius, d);
    }
    return radius;
}

}  // namespace cfastar
