#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cfastar/errors.hpp"
#include "cfastar/gadgets.hpp"
#include "cfastar/scm.hpp"
#include "support.hpp"

using namespace cfastar;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Scm constant_scale_scm(double scale) {
    AffineLocationScale mech;
    mech.location.push_back({Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1)});
    mech.scale.push_back({Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, scale)});
    return Scm(1, {true}, 1, mech, NegCoordinateReward{0}, LocationScaleLipschitz{0.0, 0.0},
               ScaleTransform::identity(), Eigen::MatrixXd::Identity(1, 1));
}

std::shared_ptr<const Scm> gadget_scm() { return build_partition_gadget(std::vector<int>{1, 2, 3}).scm; }

}  // namespace

TEST(Forward, IdentityLocationUnitScale) {
    auto scm = fixtures::identity_scm(1);
    EXPECT_DOUBLE_EQ(scm->forward(vec({1.0}), 0, vec({2.0}))[0], 3.0);
}

TEST(Forward, GadgetNullAction) {
    auto scm = gadget_scm();
    const auto out = scm->forward(vec({0, 1}), PartitionGadgetMechanism::null_action, vec({1, 2}));
    EXPECT_EQ(out, vec({1, 2}));
}

TEST(Forward, GadgetDiffAction) {
    auto scm = gadget_scm();
    const auto out = scm->forward(vec({0, 1}), PartitionGadgetMechanism::diff_action, vec({1, 2}));
    EXPECT_EQ(out, vec({0, 2}));
}

TEST(Forward, RejectsNonFiniteInput) {
    auto scm = fixtures::identity_scm(1);
    EXPECT_THROW(scm->forward(vec({std::nan("")}), 0, vec({0.0})), InvalidInput);
    EXPECT_THROW(scm->forward(vec({1.0}), 0, vec({std::numeric_limits<double>::infinity()})),
                 InvalidInput);
}

TEST(Forward, RejectsNonPositiveScale) {
    AffineLocationScale mech;
    mech.location.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1)});
    mech.scale.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1)});
    const Scm scm(1, {true}, 1, mech, NegCoordinateReward{0}, LocationScaleLipschitz{1.0, 1.0},
                  ScaleTransform::identity(), Eigen::MatrixXd::Identity(1, 1));
    EXPECT_THROW(scm.forward(vec({-1.0}), 0, vec({0.0})), ModelIntegrityError);
    EXPECT_THROW(scm.abduct(vec({0.0}), 0, vec({1.0})), ModelIntegrityError);
}

TEST(Abduct, IdentityLocationUnitScale) {
    auto scm = fixtures::identity_scm(1);
    EXPECT_DOUBLE_EQ(scm->abduct(vec({1.0}), 0, vec({3.0}))[0], 2.0);
}

TEST(Abduct, GadgetObservedChain) {
    auto scm = gadget_scm();
    EXPECT_EQ(scm->abduct(vec({0, 1}), PartitionGadgetMechanism::null_action, vec({1, 2})), vec({1, 2}));
}

TEST(Abduct, ConstantScaleDivision) {
    const Scm scm = constant_scale_scm(2.0);
    EXPECT_DOUBLE_EQ(scm.abduct(vec({0.0}), 0, vec({4.0}))[0], 2.0);
}

TEST(TransitionLipschitz, LocationScaleFormula) {
    AffineLocationScale mech;
    mech.location.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)});
    mech.scale.push_back({Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Ones(2)});
    const Scm scm(2, {true, true}, 1, mech, NegCoordinateReward{0}, LocationScaleLipschitz{1.0, 0.1},
                  ScaleTransform::identity(), Eigen::MatrixXd::Identity(2, 2));
    EXPECT_NEAR(scm.transition_lipschitz(vec({2, -3})), 1.3, 1e-15);
}

TEST(TransitionLipschitz, ScaleFreeIsLocationConstant) {
    auto scm = fixtures::identity_scm(2);
    EXPECT_DOUBLE_EQ(scm->transition_lipschitz(vec({100, -7})), 1.0);
    EXPECT_DOUBLE_EQ(scm->transition_lipschitz(vec({0, 0})), 1.0);
}

TEST(TransitionLipschitz, GadgetIsSqrtTwo) {
    auto scm = gadget_scm();
    EXPECT_DOUBLE_EQ(scm->transition_lipschitz(vec({1, 2})), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(scm->transition_lipschitz(vec({-50, 9})), std::sqrt(2.0));
}

TEST(Reward, NegCoordinate) {
    AffineLocationScale mech;
    mech.location.push_back({Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3)});
    mech.scale.push_back({Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Ones(3)});
    const Scm scm(3, {true, true, true}, 1, mech, NegCoordinateReward{2}, LocationScaleLipschitz{1.0, 0.0},
                  ScaleTransform::identity(), Eigen::MatrixXd::Identity(3, 3));
    EXPECT_DOUBLE_EQ(scm.reward(vec({5, 1, 7}), 0), -7.0);
    EXPECT_DOUBLE_EQ(scm.reward_lipschitz(), 1.0);
}

TEST(Reward, GadgetValues) {
    auto scm = gadget_scm();
    EXPECT_DOUBLE_EQ(scm->reward(vec({6, 0}), 0), -3.0);
    EXPECT_DOUBLE_EQ(scm->reward(vec({3, 0}), 1), 0.0);
}

TEST(Reward, GadgetConstantMatchesClosedFormForSmallAlpha) {
    // alpha = 1.5: 2*sqrt(1 + alpha) dominates the two-hinge slope 2*alpha
    const auto scm = build_partition_gadget(std::vector<int>{1, 2}).scm;
    EXPECT_DOUBLE_EQ(scm->reward_lipschitz(), 2.0 * std::sqrt(2.5));
}

TEST(Reward, AffineConstantIsRowNorm) {
    AffineLocationScale mech;
    for (int a = 0; a < 2; ++a) {
        mech.location.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)});
        mech.scale.push_back({Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Ones(2)});
    }
    Eigen::MatrixXd w(2, 2);
    w << 3, 4, 0, 1;
    const Scm scm(2, {true, true}, 2, mech, AffineReward{w, vec({1, 2})}, LocationScaleLipschitz{1.0, 0.0},
                  ScaleTransform::identity(), Eigen::MatrixXd::Identity(2, 2));
    EXPECT_DOUBLE_EQ(scm.reward(vec({1, 1}), 0), 8.0);
    EXPECT_DOUBLE_EQ(scm.reward_lipschitz(0), 5.0);
    EXPECT_DOUBLE_EQ(scm.reward_lipschitz(), 5.0);
}

TEST(MlpEval, ZeroOutputLayer) {
    std::mt19937_64 rng(1);
    MlpNet n = fixtures::random_net(3, 5, 2, 2, rng, 1.0, 1.0);
    n.output_weights.setZero();
    n.output_bias.setZero();
    EXPECT_EQ(mlp_eval(n, vec({0.3, -2, 5}), 1), Eigen::VectorXd::Zero(2));
}

TEST(MlpEval, ConstantFunction) {
    MlpNet n;
    n.state_weights = Eigen::MatrixXd::Zero(4, 1);
    n.action_weights = Eigen::MatrixXd::Zero(4, 2);
    n.action_embeddings = Eigen::MatrixXd::Zero(1, 2);
    n.output_weights = Eigen::MatrixXd::Zero(1, 4);
    n.hidden_bias = Eigen::VectorXd::Zero(4);
    n.output_bias = vec({0.5});
    EXPECT_EQ(mlp_eval(n, vec({12.0}), 0), vec({0.5}));
}

TEST(MlpEval, OddAtOrigin) {
    MlpNet n;
    n.state_weights = Eigen::MatrixXd::Ones(1, 1);
    n.action_weights = Eigen::MatrixXd::Zero(1, 2);
    n.action_embeddings = Eigen::MatrixXd::Zero(1, 2);
    n.output_weights = Eigen::MatrixXd::Ones(1, 1);
    EXPECT_EQ(mlp_eval(n, vec({0.0}), 0), vec({0.0}));
}

TEST(MlpEval, ShapeMismatchIsIntegrityError) {
    std::mt19937_64 rng(2);
    const MlpNet n = fixtures::random_net(3, 5, 2, 2, rng, 1.0, 1.0);
    EXPECT_THROW(mlp_eval(n, vec({1, 2}), 0), ModelIntegrityError);
    EXPECT_THROW(mlp_eval(n, vec({1, 2, 3}), 2), ModelIntegrityError);
}

TEST(MlpEval, LipschitzConstantIsScaleProduct) {
    std::mt19937_64 rng(3);
    const MlpNet n = fixtures::random_net(4, 30, 3, 3, rng, 1.3, 0.9);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
        Eigen::VectorXd s(4), t(4);
        for (int j = 0; j < 4; ++j) {
            s[j] = g(rng);
            t[j] = s[j] + 0.1 * g(rng);
        }
        const ActionId a = static_cast<ActionId>(i % 3);
        const double q = (mlp_eval(n, s, a) - mlp_eval(n, t, a)).norm() / (s - t).norm();
        worst = std::max(worst, q);
    }
    EXPECT_LE(worst, n.state_lipschitz() + 1e-6);
    EXPECT_DOUBLE_EQ(n.state_lipschitz(), 1.3 * 0.9);
}

// ---- properties on random models ------------------------------------------

namespace {

std::vector<std::shared_ptr<const Scm>> property_models() {
    std::vector<std::shared_ptr<const Scm>> models;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        RandomEnvOptions o;
        o.evolving_dim = 3;
        o.frozen_dim = 2;
        o.action_count = 3;
        o.location_lipschitz = 0.8 + 0.2 * static_cast<double>(seed);
        o.scale_lipschitz = seed % 2 ? 0.3 : 0.0;
        models.push_back(random_linear_dataset(o, 1, seed).scm);
    }
    // MLP location-scale model
    std::mt19937_64 rng(11);
    MlpLocationScale mlp{fixtures::random_net(4, 16, 3, 2, rng, 1.0, 1.0), fixtures::random_net(4, 16, 3, 2, rng, 0.5, 0.5)};
    models.push_back(std::make_shared<const Scm>(
        4, std::vector<bool>{true, true, true, false}, 2, mlp, NegCoordinateReward{1},
        LocationScaleLipschitz{1.0, 0.25}, ScaleTransform::softplus(1e-4), Eigen::MatrixXd::Identity(3, 3)));
    return models;
}

}  // namespace

TEST(ScmProperty, AbductionInvertsForward) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (const auto& scm : property_models()) {
        const auto D = static_cast<Eigen::Index>(scm->state_dim());
        const auto De = static_cast<Eigen::Index>(scm->evolving_dim());
        for (int i = 0; i < 200; ++i) {
            State s(D);
            Noise u(De);
            for (Eigen::Index j = 0; j < D; ++j) s[j] = 2.0 * g(rng);
            for (Eigen::Index j = 0; j < De; ++j) u[j] = g(rng);
            const ActionId a = static_cast<ActionId>(i) % scm->action_count();
            State next = s;
            const Eigen::VectorXd ev = scm->forward(s, a, u);
            for (std::size_t j = 0; j < scm->evolving_indices().size(); ++j)
                next[static_cast<Eigen::Index>(scm->evolving_indices()[j])] = ev[static_cast<Eigen::Index>(j)];
            const Noise back = scm->abduct(s, a, next);
            for (Eigen::Index j = 0; j < De; ++j)
                EXPECT_NEAR(back[j], u[j], 1e-9 * std::max(1.0, std::abs(u[j])));
        }
    }
}

TEST(ScmProperty, EmpiricalLipschitz) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    for (const auto& scm : property_models()) {
        const auto D = static_cast<Eigen::Index>(scm->state_dim());
        const auto De = static_cast<Eigen::Index>(scm->evolving_dim());
        for (int i = 0; i < 300; ++i) {
            State s(D), t(D);
            Noise u(De);
            for (Eigen::Index j = 0; j < D; ++j) {
                s[j] = 2.0 * g(rng);
                t[j] = s[j] + (i % 2 ? 0.05 : 1.0) * g(rng);
            }
            for (Eigen::Index j = 0; j < De; ++j) u[j] = 2.0 * g(rng);
            const ActionId a = static_cast<ActionId>(i) % scm->action_count();
            const double dist = (s - t).norm();
            EXPECT_LE((scm->forward(s, a, u) - scm->forward(t, a, u)).norm(),
                      scm->transition_lipschitz(a, u) * dist + 1e-9);
            EXPECT_LE(scm->transition_lipschitz(a, u), scm->transition_lipschitz(u));
            EXPECT_LE(std::abs(scm->reward(s, a) - scm->reward(t, a)),
                      scm->reward_lipschitz(a) * dist + 1e-9);
        }
    }
}

TEST(ScmProperty, GadgetQuotientsWithinDeclaredConstants) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (const auto& values : {std::vector<int>{1, 2, 3}, std::vector<int>{8, 8, 7, 1}, std::vector<int>{1}}) {
        const auto scm = build_partition_gadget(values).scm;
        for (int i = 0; i < 2000; ++i) {
            const State s = Eigen::Vector2d(5 * g(rng), 5 * g(rng));
            const State t = s + Eigen::Vector2d(g(rng), g(rng));
            const Noise u = Eigen::Vector2d(g(rng), g(rng));
            const double dist = (s - t).norm();
            EXPECT_LE((scm->forward(s, 0, u) - scm->forward(t, 0, u)).norm(), 1.0 * dist + 1e-9);
            EXPECT_LE((scm->forward(s, 1, u) - scm->forward(t, 1, u)).norm(), std::sqrt(2.0) * dist + 1e-9);
            EXPECT_LE(std::abs(scm->reward(s, 0) - scm->reward(t, 0)), scm->reward_lipschitz() * dist + 1e-9);
        }
    }
}

TEST(ScmProperty, ScaledScaleMapGivesIdenticalCounterfactuals) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> pos(0.2, 5.0);
    for (int inst = 0; inst < 100; ++inst) {
        RandomEnvOptions o;
        o.evolving_dim = 3;
        o.action_count = 3;
        const auto base = random_linear_dataset(o, 1, static_cast<std::uint64_t>(inst)).scm;
        const auto& mech = std::get<AffineLocationScale>(base->mechanism());
        Eigen::VectorXd c(3);
        for (int j = 0; j < 3; ++j) c[j] = pos(rng);
        AffineLocationScale scaled = mech;
        for (auto& m : scaled.scale) {
            m.weights = c.asDiagonal() * m.weights;
            m.bias = c.asDiagonal() * m.bias;
        }
        const Eigen::MatrixXd cov = c.cwiseInverse().asDiagonal() * base->noise_covariance() *
                                    c.cwiseInverse().asDiagonal();
        const Scm other(base->state_dim(), base->evolving_mask(), base->action_count(), scaled,
                        base->reward_spec(), base->lipschitz_meta(), ScaleTransform::identity(), cov);
        State s(3), s_next(3), s_cf(3);
        for (int j = 0; j < 3; ++j) {
            s[j] = g(rng);
            s_next[j] = g(rng);
            s_cf[j] = g(rng);
        }
        const ActionId a = static_cast<ActionId>(inst % 3), b = static_cast<ActionId>((inst + 1) % 3);
        const auto one = base->forward(s_cf, b, base->abduct(s, a, s_next));
        const auto two = other.forward(s_cf, b, other.abduct(s, a, s_next));
        EXPECT_LE((one - two).cwiseAbs().maxCoeff(), 1e-6);
    }
}
