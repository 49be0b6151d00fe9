#include "cfastar/gadgets.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cfastar/errors.hpp"
#include "cfastar/heuristic.hpp"
#include "cfastar/search.hpp"

namespace cfastar {

Environment build_partition_gadget(std::span<const int> values) {
    if (values.empty()) throw InvalidInput("partition instance needs at least one value");
    for (int v : values)
        if (v < 1) throw InvalidInput("partition values must be positive integers");

    const std::size_t B = values.size();
    const std::size_t T = B + 1;
    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    const double alpha = total / 2.0;

    auto scm = std::make_shared<const Scm>(
        2, std::vector<bool>{true, true}, 2, PartitionGadgetMechanism{},
        PartitionGadgetReward{alpha}, PerActionLipschitz{{1.0, std::sqrt(2.0)}},
        ScaleTransform::identity(), Eigen::MatrixXd::Identity(2, 2));

    Episode ep;
    ep.id = "partition";
    ep.states.reserve(T);
    double prefix = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t) {
        ep.states.push_back(Eigen::Vector2d(prefix, values[t]));
        prefix += values[t];
    }
    ep.states.push_back(Eigen::Vector2d(total, 0.0));
    ep.actions.assign(T, PartitionGadgetMechanism::null_action);
    return {std::move(scm), std::move(ep)};
}

double partition_gadget_optimum(std::span<const int> values, PartitionSolver solver) {
    Environment env = build_partition_gadget(values);
    const std::size_t T = env.episode.horizon();
    const CfMdp m = build_cf_mdp(env.scm, env.episode, T);
    if (solver == PartitionSolver::brute_force) return brute_force(m).outcome;
    const auto schedule = lipschitz_schedule(m);
    const auto table = build_table(m, m.observed().states, schedule);
    return astar(m, table).outcome;
}

bool decide_partition(std::span<const int> values, PartitionSolver solver) {
    return std::abs(partition_gadget_optimum(values, solver)) <= 1e-9;
}

namespace {

Eigen::MatrixXd gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = g(rng);
    return m;
}

Eigen::MatrixXd with_operator_norm(Eigen::MatrixXd m, double norm) {
    const double current = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    if (current == 0.0 || norm == 0.0) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    return m * (norm / current);
}

}  // namespace

Dataset random_linear_dataset(const RandomEnvOptions& o, std::size_t episodes,
                              std::uint64_t seed) {
    if (o.evolving_dim < 1 || o.action_count < 1 || o.horizon < 2)
        throw InvalidInput("random environment needs D>=1, N>=1, T>=2");
    std::mt19937_64 rng(seed);
    const std::size_t De = o.evolving_dim;
    const std::size_t D = De + o.frozen_dim;

    std::size_t grid = 0;
    if (o.grid_actions) {
        grid = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(o.action_count))));
        if (grid < 2 || grid * grid != o.action_count)
            throw InvalidInput("grid actions need a square action count of at least 4");
    }

    // near-identity drift on the evolving block, weak coupling to frozen features
    Eigen::MatrixXd base = 0.35 * gaussian(De, D, rng) / std::sqrt(static_cast<double>(D));
    base.leftCols(De) += Eigen::MatrixXd::Identity(De, De);
    Eigen::MatrixXd axes = gaussian(De, 2, rng);
    axes.col(0).normalize();
    axes.col(1).normalize();

    AffineLocationScale mech;
    for (std::size_t a = 0; a < o.action_count; ++a) {
        Eigen::MatrixXd A =
            base + o.matrix_spread * gaussian(De, D, rng) / std::sqrt(static_cast<double>(D));
        Eigen::VectorXd b;
        if (grid > 0) {
            const double half = 0.5 * static_cast<double>(grid - 1);
            const double i = (static_cast<double>(a / grid) - half) / half;
            const double j = (static_cast<double>(a % grid) - half) / half;
            b = o.action_effect * (i * axes.col(0) + j * axes.col(1));
        } else {
            b = o.action_effect * gaussian(De, 1, rng).col(0) /
                std::sqrt(static_cast<double>(De));
        }
        mech.location.push_back({with_operator_norm(std::move(A), o.location_lipschitz), b});

        AffineMap scale;
        if (o.scale_lipschitz > 0) {
            scale.weights = with_operator_norm(gaussian(De, D, rng), o.scale_lipschitz);
            scale.bias = Eigen::VectorXd::Constant(De, std::log(std::expm1(o.base_scale)));
        } else {
            scale.weights = Eigen::MatrixXd::Zero(De, D);
            scale.bias = Eigen::VectorXd::Constant(De, o.base_scale);
        }
        mech.scale.push_back(std::move(scale));
    }
    const ScaleTransform transform =
        o.scale_lipschitz > 0 ? ScaleTransform::softplus(1e-4) : ScaleTransform::identity();

    std::vector<bool> mask(D, false);
    for (std::size_t i = 0; i < De; ++i) mask[i] = true;
    auto scm = std::make_shared<const Scm>(
        D, mask, o.action_count, std::move(mech), NegCoordinateReward{0},
        LocationScaleLipschitz{o.location_lipschitz, o.scale_lipschitz}, transform,
        Eigen::MatrixXd::Identity(De, De));

    Dataset data;
    data.scm = scm;
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<ActionId> pick(0, o.action_count - 1);
    for (std::size_t e = 0; e < episodes; ++e) {
        Episode ep;
        ep.id = "ep" + std::to_string(e);
        State s(D);
        for (std::size_t i = 0; i < D; ++i)
            s[static_cast<Eigen::Index>(i)] = (i < De ? o.state_spread : 1.0) * g(rng);
        for (std::size_t t = 0; t < o.horizon; ++t) {
            const ActionId a = pick(rng);
            ep.states.push_back(s);
            ep.actions.push_back(a);
            if (t + 1 == o.horizon) break;
            Noise u(De);
            for (std::size_t i = 0; i < De; ++i) u[static_cast<Eigen::Index>(i)] = g(rng);
            const Eigen::VectorXd next = scm->forward(s, a, u);
            s.head(De) = next;
        }
        data.episodes.push_back(std::move(ep));
    }
    return data;
}

Environment random_linear_env(std::size_t D, std::size_t N, std::size_t T, std::uint64_t seed) {
    RandomEnvOptions o;
    o.evolving_dim = D;
    o.action_count = N;
    o.horizon = T;
    Dataset d = random_linear_dataset(o, 1, seed);
    return {d.scm, std::move(d.episodes.front())};
}

Environment identity_walk_env(std::size_t D, std::size_t T, std::uint64_t seed) {
    if (D < 1 || T < 2) throw InvalidInput("identity walk needs D>=1, T>=2");
    AffineLocationScale mech;
    for (int a = 0; a < 2; ++a) {
        mech.location.push_back({Eigen::MatrixXd::Identity(D, D), Eigen::VectorXd::Zero(D)});
        mech.scale.push_back({Eigen::MatrixXd::Zero(D, D), Eigen::VectorXd::Ones(D)});
    }
    auto scm = std::make_shared<const Scm>(D, std::vector<bool>(D, true), 2, std::move(mech),
                                           NegCoordinateReward{0}, LocationScaleLipschitz{1.0, 0.0},
                                           ScaleTransform::identity(),
                                           Eigen::MatrixXd::Identity(D, D));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Episode ep;
    ep.id = "walk";
    State s = State::Zero(D);
    for (std::size_t t = 0; t < T; ++t) {
        ep.states.push_back(s);
        ep.actions.push_back(t % 2);
        for (std::size_t i = 0; i < D; ++i) s[static_cast<Eigen::Index>(i)] += g(rng);
    }
    return {std::move(scm), std::move(ep)};
}

}  // namespace cfastar
