#include <gtest/gtest.h>

#include <random>

#include "cfastar/analysis.hpp"
#include "cfastar/errors.hpp"
#include "cfastar/gadgets.hpp"
#include "cfastar/model_io.hpp"
#include "support.hpp"

using namespace cfastar;

namespace {

Scm affine_model(std::size_t D, std::size_t N, std::uint64_t seed, double Lh = 1.0, double Lphi = 0.2) {
    RandomEnvOptions o;
    o.evolving_dim = D;
    o.action_count = N;
    o.location_lipschitz = Lh;
    o.scale_lipschitz = Lphi;
    return *random_linear_dataset(o, 1, seed).scm;
}

Scm mlp_model(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MlpLocationScale mlp{fixtures::random_net(3, 12, 2, 3, rng, 1.0, 1.0),
                         fixtures::random_net(3, 12, 2, 3, rng, 0.5, 0.5)};
    return Scm(3, {true, true, false}, 3, mlp, NegCoordinateReward{0}, LocationScaleLipschitz{1.0, 0.25},
               ScaleTransform::softplus(1e-4), Eigen::Matrix2d::Identity());
}

const char* kDeclaredModel = R"({
  "format_version": 1,
  "state_dim": 2,
  "evolving_mask": [true, true],
  "action_count": 1,
  "mechanism": "affine_location_scale",
  "affine": {
    "location": [{"weights": [[1.0, 0.0], [0.0, 1.0]], "bias": [0.0, 0.0]}],
    "scale": [{"weights": [[0.1, 0.0], [0.0, 0.0]], "bias": [1.0, 1.0]}]
  },
  "reward": {"type": "neg_coordinate", "index": 0},
  "lipschitz": {"location": 1.0, "scale": 0.1},
  "scale_transform": {"type": "softplus", "floor": 0.0001},
  "noise_covariance": [[1.0, 0.0], [0.0, 1.0]]
})";

}  // namespace

TEST(LoadModel, GadgetFile) {
    const auto env = build_partition_gadget(std::vector<int>{1, 2, 3});
    const Scm back = load_model(save_model(*env.scm));
    EXPECT_EQ(back.action_count(), 2u);
    EXPECT_EQ(back.state_dim(), 2u);
    EXPECT_DOUBLE_EQ(back.reward(Eigen::Vector2d(6, 0), 0), -3.0);
    EXPECT_DOUBLE_EQ(back.transition_lipschitz(Eigen::Vector2d(1, 1)), std::sqrt(2.0));
}

TEST(LoadModel, AffineRoundTripIsBitExact) {
    const Scm scm = affine_model(3, 2, 4);
    const std::string once = save_model(scm);
    const Scm back = load_model(once);
    EXPECT_EQ(save_model(back), once);
    const auto& a = std::get<AffineLocationScale>(scm.mechanism());
    const auto& b = std::get<AffineLocationScale>(back.mechanism());
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(a.location[i].weights, b.location[i].weights);
        EXPECT_EQ(a.location[i].bias, b.location[i].bias);
        EXPECT_EQ(a.scale[i].weights, b.scale[i].weights);
        EXPECT_EQ(a.scale[i].bias, b.scale[i].bias);
    }
}

TEST(LoadModel, MlpRoundTripIsBitExact) {
    const Scm scm = mlp_model(5);
    const std::string once = save_model(scm);
    const Scm back = load_model(once);
    EXPECT_EQ(save_model(back), once);
    const State s = Eigen::Vector3d(0.3, -1.2, 2.0);
    EXPECT_EQ(scm.forward(s, 2, Eigen::Vector2d(0.5, -0.5)), back.forward(s, 2, Eigen::Vector2d(0.5, -0.5)));
}

TEST(LoadModel, DeclaredConstantsAreExposed) {
    const Scm scm = load_model(kDeclaredModel);
    EXPECT_NEAR(scm.transition_lipschitz(Eigen::Vector2d(2, -3)), 1.3, 1e-15);
}

TEST(LoadModel, RejectsBadFiles) {
    EXPECT_THROW(load_model("not json"), ParseError);
    std::string s = kDeclaredModel;
    EXPECT_THROW(load_model(std::string(s).replace(s.find("\"format_version\": 1"), 19, "\"format_version\": 9")), ParseError);
    EXPECT_THROW(load_model(std::string(s).replace(s.find("affine_location_scale"), 21, "spline_location_scale")),
                 ParseError);
    // non positive-definite covariance
    EXPECT_THROW(load_model(std::string(s).replace(s.rfind("[[1.0, 0.0], [0.0, 1.0]]"), 24, "[[1.0, 2.0], [2.0, 1.0]]")),
                 ModelIntegrityError);
    // location map with the wrong output size
    EXPECT_THROW(load_model(std::string(s).replace(s.find("\"bias\": [0.0, 0.0]"), 18, "\"bias\": [0.0]")), Error);
}

TEST(SpectralNorm, Examples) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 1;
    const auto sn = spectral_norm(d);
    EXPECT_NEAR(sn.value, 3.0, 1e-8);
    EXPECT_TRUE(sn.converged);
    EXPECT_EQ(spectral_norm(Eigen::MatrixXd::Zero(3, 2)).value, 0.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXd m(5, 4);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
        EXPECT_NEAR(spectral_norm(m).value, Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0), 1e-6);
    }
}

TEST(ValidateModel, GadgetPasses) {
    std::mt19937_64 rng(0);
    const auto env = build_partition_gadget(std::vector<int>{2, 5, 3, 7});
    const auto rep = validate_model(*env.scm, 2000, rng);
    EXPECT_TRUE(rep.pass()) << report_to_json(rep).dump();
    EXPECT_LE(rep.max_transition_quotient_ratio, 1.0 + 1e-9);
}

TEST(ValidateModel, ExportedModelsPass) {
    std::mt19937_64 rng(1);
    EXPECT_TRUE(validate_model(affine_model(3, 4, 2), 1000, rng).pass());
    EXPECT_TRUE(validate_model(mlp_model(3), 1000, rng).pass());
    EXPECT_TRUE(validate_model(load_model(kDeclaredModel), 1000, rng).pass());
}

TEST(ValidateModel, ScaledMlpWeightFails) {
    std::mt19937_64 rng(2);
    const Scm good = mlp_model(4);
    MlpLocationScale mech = std::get<MlpLocationScale>(good.mechanism());
    mech.location.output_weights *= 2.0;
    const Scm bad(3, good.evolving_mask(), 3, mech, good.reward_spec(), good.lipschitz_meta(),
                  good.scale_transform(), good.noise_covariance());
    const auto rep = validate_model(bad, 200, rng);
    EXPECT_FALSE(rep.pass());
    EXPECT_FALSE(rep.norms_ok);
}

TEST(ValidateModel, UnderstatedLocationConstantFails) {
    std::mt19937_64 rng(3);
    const Scm good = affine_model(3, 2, 6, 1.5, 0.0);
    const Scm bad(good.state_dim(), good.evolving_mask(), good.action_count(), good.mechanism(),
                  good.reward_spec(), LocationScaleLipschitz{1.0, 0.0}, good.scale_transform(),
                  good.noise_covariance());
    const auto rep = validate_model(bad, 500, rng);
    EXPECT_FALSE(rep.pass());
    EXPECT_FALSE(rep.lipschitz_ok);
}

TEST(WithLocationLipschitz, RescalesAffineAndMlp) {
    const Scm a = with_location_lipschitz(affine_model(3, 3, 1), 0.5);
    double worst = 0.0;
    for (const auto& m : std::get<AffineLocationScale>(a.mechanism()).location)
        worst = std::max(worst, Eigen::JacobiSVD<Eigen::MatrixXd>(m.weights).singularValues()(0));
    EXPECT_NEAR(worst, 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(std::get<LocationScaleLipschitz>(a.lipschitz_meta()).location, 0.5);
    const Scm b = with_location_lipschitz(mlp_model(1), 2.25);
    EXPECT_NEAR(std::get<MlpLocationScale>(b.mechanism()).location.state_lipschitz(), 2.25, 1e-12);
    std::mt19937_64 rng(0);
    EXPECT_TRUE(validate_model(a, 300, rng).pass());
    EXPECT_TRUE(validate_model(b, 300, rng).pass());
    const auto gadget = build_partition_gadget(std::vector<int>{1});
    EXPECT_THROW(with_location_lipschitz(*gadget.scm, 1.0), InvalidInput);
}

TEST(Episodes, EmptyFile) {
    const auto load = load_episodes("");
    EXPECT_TRUE(load.records.empty());
    EXPECT_TRUE(load.issues.empty());
}

TEST(Episodes, RoundTripTwelveSteps) {
    RandomEnvOptions o;
    o.evolving_dim = 9;
    o.frozen_dim = 4;
    o.action_count = 25;
    o.horizon = 12;
    const Dataset d = random_linear_dataset(o, 3, 1);
    const std::string text = write_episodes(d.episodes);
    const auto load = load_episodes(text);
    ASSERT_EQ(load.records.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(load.records[i].episode.id, d.episodes[i].id);
        EXPECT_EQ(load.records[i].episode.states, d.episodes[i].states);
        EXPECT_EQ(load.records[i].episode.actions, d.episodes[i].actions);
    }
    std::vector<Episode> back;
    for (const auto& r : load.records) back.push_back(r.episode);
    EXPECT_EQ(write_episodes(back), text);
}

TEST(Episodes, BadLinesReportedGoodLinesKept) {
    const std::string text =
        "{\"id\":\"a\",\"states\":[[0],[1]],\"actions\":[0,0]}\n"
        "\n"
        "{\"id\":\"b\",\"states\":[[0],[1]],\"actions\":[0]}\n"
        "not json\n"
        "{\"id\":\"c\",\"T\":3,\"states\":[[0],[1]],\"actions\":[0,0]}\n"
        "{\"id\":7,\"states\":[[0,1],[1,2]],\"actions\":[1,0],\"metadata\":{\"source\":\"x\"}}\n";
    const auto load = load_episodes(text);
    ASSERT_EQ(load.records.size(), 2u);
    EXPECT_EQ(load.records[0].episode.id, "a");
    EXPECT_EQ(load.records[1].episode.id, "7");
    EXPECT_EQ(load.records[1].metadata.at("source"), "x");
    ASSERT_EQ(load.issues.size(), 3u);
    EXPECT_EQ(load.issues[0].line, 3u);
    EXPECT_EQ(load.issues[1].line, 4u);
    EXPECT_EQ(load.issues[2].line, 5u);
}

TEST(Results, ZeroBudgetRecord) {
    const auto env = random_linear_env(3, 3, 6, 2);
    AnalyzeOptions o;
    o.budget = 0;
    o.anchors.samples = 10;
    const auto run = analyze_episode(env.scm, env.episode, o, 0);
    EXPECT_TRUE(run.record.changed_steps.empty());
    ASSERT_TRUE(run.record.improvement.has_value());
    EXPECT_EQ(*run.record.improvement, 0.0);
}

TEST(Results, RoundTrip) {
    const auto env = random_linear_env(3, 3, 6, 3);
    AnalyzeOptions o;
    o.budget = 2;
    o.anchors.samples = 20;
    std::vector<ResultRecord> recs{analyze_episode(env.scm, env.episode, o, 0).record};
    ResultRecord failed;
    failed.id = "broken";
    failed.solver = "astar";
    failed.budget = 2;
    failed.error = "abduction failed";
    recs.push_back(failed);
    ResultRecord zero = recs.front();
    zero.id = "zero";
    zero.improvement.reset();
    recs.push_back(zero);
    const std::string text = write_results(recs);
    const auto back = read_results(text);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(write_results(back), text);
    EXPECT_EQ(back[0].cf_states, recs[0].cf_states);
    EXPECT_EQ(back[0].actions, recs[0].actions);
    EXPECT_EQ(back[1].error, failed.error);
    EXPECT_FALSE(back[2].improvement.has_value());
    EXPECT_THROW(read_results("{\"id\": 1}\n{"), ParseError);
}
