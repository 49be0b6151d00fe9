#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "cfastar/cf_mdp.hpp"
#include "cfastar/gadgets.hpp"
#include "cfastar/scm.hpp"

namespace cfastar::fixtures {

// 1-D (or D-dim) affine location-scale SCM with h(s,a) = s + shift[a] and a
// constant scale, reward -s[0].
inline std::shared_ptr<const Scm> identity_scm(std::size_t D, double scale = 1.0,
                                               std::vector<double> shifts = {0.0}) {
    AffineLocationScale mech;
    for (double b : shifts) {
        mech.location.push_back({Eigen::MatrixXd::Identity(D, D), Eigen::VectorXd::Constant(D, b)});
        mech.scale.push_back({Eigen::MatrixXd::Zero(D, D), Eigen::VectorXd::Constant(D, scale)});
    }
    return std::make_shared<const Scm>(D, std::vector<bool>(D, true), shifts.size(), std::move(mech),
                                       NegCoordinateReward{0}, LocationScaleLipschitz{1.0, 0.0},
                                       ScaleTransform::identity(), Eigen::MatrixXd::Identity(D, D));
}

// Tanh net with unit spectral norm on the state and output weights.
inline MlpNet random_net(std::size_t in, std::size_t hidden, std::size_t out, std::size_t actions,
                  std::mt19937_64& rng, double pre, double post) {
    std::normal_distribution<double> g;
    auto gauss = [&](std::size_t r, std::size_t c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
        return m;
    };
    auto unit = [](Eigen::MatrixXd m) {
        return Eigen::MatrixXd(m / Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0));
    };
    MlpNet n;
    n.state_weights = unit(gauss(hidden, in));
    n.action_weights = gauss(hidden, 2);
    n.action_embeddings = gauss(actions, 2);
    n.output_weights = unit(gauss(out, hidden));
    n.hidden_bias = gauss(hidden, 1).col(0);
    n.output_bias = gauss(out, 1).col(0);
    n.pre_scale = pre;
    n.post_scale = post;
    return n;
}

// Small random instance in the oracle's range: T <= 8, N <= 3, k <= 3, D <= 3.
struct SmallInstance {
    std::shared_ptr<const Scm> scm;
    Episode episode;
    std::size_t budget = 0;
};

inline SmallInstance small_instance(std::uint64_t seed, std::size_t max_T = 8) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    RandomEnvOptions o;
    o.evolving_dim = pick(1, 3);
    o.frozen_dim = pick(0, 3 - o.evolving_dim);
    o.action_count = pick(2, 3);
    o.horizon = pick(2, max_T);
    o.location_lipschitz = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
    o.scale_lipschitz = pick(0, 1) ? 0.1 : 0.0;
    o.matrix_spread = 0.35;
    Dataset d = random_linear_dataset(o, 1, rng());
    SmallInstance inst{d.scm, std::move(d.episodes.front()), 0};
    inst.budget = pick(0, std::min<std::size_t>(3, o.horizon));
    return inst;
}

// Exact counterfactual value V(s, l, t) by exhaustive recursion.
inline double oracle_value(const CfMdp& m, const State& s, std::size_t l, std::size_t t) {
    const std::size_t T = m.horizon();
    if (t == T) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < m.scm().action_count(); ++a) {
        if (!m.action_available(l, t, a)) continue;
        double v = m.scm().reward(s, a);
        if (t + 1 < T) {
            const EnhancedState next = m.step({s, l}, a, t);
            v += oracle_value(m, next.state, next.changes, t + 1);
        }
        best = std::max(best, v);
    }
    return best;
}

// Every node (s, l, t) reachable from the root with t < T.
struct Node {
    State state;
    std::size_t changes;
    std::size_t t;
};

inline std::vector<Node> reachable_nodes(const CfMdp& m) {
    std::vector<Node> out;
    std::vector<Node> stack{{m.observed().states.front(), 0, 0}};
    while (!stack.empty()) {
        Node n = std::move(stack.back());
        stack.pop_back();
        if (n.t + 1 < m.horizon()) {
            for (ActionId a = 0; a < m.scm().action_count(); ++a) {
                if (!m.action_available(n.changes, n.t, a)) continue;
                const EnhancedState next = m.step({n.state, n.changes}, a, n.t);
                stack.push_back({next.state, next.changes, n.t + 1});
            }
        }
        out.push_back(std::move(n));
    }
    return out;
}

inline bool subset_sum_splits(const std::vector<int>& values) {
    int total = 0;
    for (int v : values) total += v;
    if (total % 2) return false;
    std::vector<char> reach(static_cast<std::size_t>(total / 2 + 1), 0);
    reach[0] = 1;
    for (int v : values)
        for (int s = total / 2; s >= v; --s)
            if (reach[static_cast<std::size_t>(s - v)]) reach[static_cast<std::size_t>(s)] = 1;
    return reach[static_cast<std::size_t>(total / 2)];
}

}  // namespace cfastar::fixtures
