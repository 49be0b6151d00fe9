#include "cfastar/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cfastar/errors.hpp"

namespace cfastar {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json vec_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

const json& field(const json& j, const char* key) {
    if (!j.is_object()) throw ParseError(std::string("expected an object holding '") + key + "'");
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& j, const char* what) {
    if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
    return j.get<double>();
}

std::size_t count(const json& j, const char* what) {
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw ParseError(std::string(what) + " must be a non-negative integer");
    return j.get<std::size_t>();
}

Eigen::VectorXd vec_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what);
    return v;
}

Eigen::MatrixXd mat_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = rows ? (j[0].is_array() ? j[0].size() : 0) : 0;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ParseError(std::string(what) + " row " + std::to_string(r) +
                             " is not an array of length " + std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], what);
    }
    return m;
}

Eigen::VectorXd optional_vec(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    return vec_from_json(*it, key);
}

json affine_to_json(const AffineMap& m) {
    return {{"weights", mat_to_json(m.weights)}, {"bias", vec_to_json(m.bias)}};
}

AffineMap affine_from_json(const json& j) {
    return {mat_from_json(field(j, "weights"), "weights"), vec_from_json(field(j, "bias"), "bias")};
}

json net_to_json(const MlpNet& n) {
    return {{"state_weights", mat_to_json(n.state_weights)},
            {"action_weights", mat_to_json(n.action_weights)},
            {"action_embeddings", mat_to_json(n.action_embeddings)},
            {"output_weights", mat_to_json(n.output_weights)},
            {"hidden_bias", vec_to_json(n.hidden_bias)},
            {"output_bias", vec_to_json(n.output_bias)},
            {"pre_scale", n.pre_scale},
            {"post_scale", n.post_scale}};
}

MlpNet net_from_json(const json& j) {
    MlpNet n;
    n.state_weights = mat_from_json(field(j, "state_weights"), "state_weights");
    n.action_weights = mat_from_json(field(j, "action_weights"), "action_weights");
    n.action_embeddings = mat_from_json(field(j, "action_embeddings"), "action_embeddings");
    n.output_weights = mat_from_json(field(j, "output_weights"), "output_weights");
    n.hidden_bias = optional_vec(j, "hidden_bias");
    n.output_bias = optional_vec(j, "output_bias");
    n.pre_scale = number(field(j, "pre_scale"), "pre_scale");
    n.post_scale = number(field(j, "post_scale"), "post_scale");
    return n;
}

json state_list(const std::vector<State>& states) {
    json out = json::array();
    for (const auto& s : states) out.push_back(vec_to_json(s));
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

// ---- models ---------------------------------------------------------------

json model_to_json(const Scm& scm) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["state_dim"] = scm.state_dim();
    j["evolving_mask"] = scm.evolving_mask();
    j["action_count"] = scm.action_count();

    std::visit(overloaded{
                   [&](const AffineLocationScale& m) {
                       j["mechanism"] = "affine_location_scale";
                       json loc = json::array(), sc = json::array();
                       for (const auto& a : m.location) loc.push_back(affine_to_json(a));
                       for (const auto& a : m.scale) sc.push_back(affine_to_json(a));
                       j["affine"] = {{"location", loc}, {"scale", sc}};
                   },
                   [&](const MlpLocationScale& m) {
                       j["mechanism"] = "mlp_location_scale";
                       j["mlp"] = {{"location", net_to_json(m.location)},
                                   {"scale", net_to_json(m.scale)}};
                   },
                   [&](const PartitionGadgetMechanism&) { j["mechanism"] = "partition_gadget"; },
               },
               scm.mechanism());

    std::visit(overloaded{
                   [&](const NegCoordinateReward& r) {
                       j["reward"] = {{"type", "neg_coordinate"}, {"index", r.index}};
                   },
                   [&](const PartitionGadgetReward& r) {
                       j["reward"] = {{"type", "partition_gadget"}, {"alpha", r.alpha}};
                   },
                   [&](const AffineReward& r) {
                       j["reward"] = {{"type", "affine"},
                                      {"weights", mat_to_json(r.weights)},
                                      {"offsets", vec_to_json(r.offsets)}};
                   },
               },
               scm.reward_spec());

    std::visit(overloaded{
                   [&](const LocationScaleLipschitz& l) {
                       j["lipschitz"] = {{"location", l.location}, {"scale", l.scale}};
                   },
                   [&](const PerActionLipschitz& l) {
                       j["lipschitz"] = {{"transition", l.transition}};
                   },
               },
               scm.lipschitz_meta());

    const auto& tr = scm.scale_transform();
    if (tr.kind == ScaleTransform::Kind::identity)
        j["scale_transform"] = {{"type", "identity"}};
    else
        j["scale_transform"] = {{"type", "softplus"}, {"floor", tr.floor}};
    j["noise_covariance"] = mat_to_json(scm.noise_covariance());
    return j;
}

Scm model_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("model file must hold a JSON object");
    const auto version = field(j, "format_version");
    if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion)
        throw ParseError("unsupported model format_version " + version.dump());

    const std::size_t D = count(field(j, "state_dim"), "state_dim");
    const std::size_t N = count(field(j, "action_count"), "action_count");
    const json& mask_j = field(j, "evolving_mask");
    if (!mask_j.is_array()) throw ParseError("evolving_mask must be an array");
    std::vector<bool> mask;
    for (const auto& b : mask_j) {
        if (!b.is_boolean()) throw ParseError("evolving_mask entries must be booleans");
        mask.push_back(b.get<bool>());
    }

    const std::string tag = field(j, "mechanism").get<std::string>();
    Mechanism mech;
    if (tag == "affine_location_scale") {
        const json& a = field(j, "affine");
        AffineLocationScale m;
        for (const auto& x : field(a, "location")) m.location.push_back(affine_from_json(x));
        for (const auto& x : field(a, "scale")) m.scale.push_back(affine_from_json(x));
        mech = std::move(m);
    } else if (tag == "mlp_location_scale") {
        const json& n = field(j, "mlp");
        mech = MlpLocationScale{net_from_json(field(n, "location")), net_from_json(field(n, "scale"))};
    } else if (tag == "partition_gadget") {
        mech = PartitionGadgetMechanism{};
    } else {
        throw ParseError("unknown mechanism '" + tag + "'");
    }

    const json& rj = field(j, "reward");
    const std::string rtype = field(rj, "type").get<std::string>();
    RewardSpec reward;
    if (rtype == "neg_coordinate")
        reward = NegCoordinateReward{count(field(rj, "index"), "reward index")};
    else if (rtype == "partition_gadget")
        reward = PartitionGadgetReward{number(field(rj, "alpha"), "alpha")};
    else if (rtype == "affine")
        reward = AffineReward{mat_from_json(field(rj, "weights"), "reward weights"),
                              vec_from_json(field(rj, "offsets"), "reward offsets")};
    else
        throw ParseError("unknown reward type '" + rtype + "'");

    const json& lj = field(j, "lipschitz");
    LipschitzMeta lip;
    if (lj.contains("transition")) {
        const auto k = vec_from_json(lj["transition"], "lipschitz.transition");
        lip = PerActionLipschitz{{k.data(), k.data() + k.size()}};
    } else {
        lip = LocationScaleLipschitz{number(field(lj, "location"), "lipschitz.location"),
                                     number(field(lj, "scale"), "lipschitz.scale")};
    }

    ScaleTransform transform;
    if (auto it = j.find("scale_transform"); it != j.end()) {
        const std::string t = field(*it, "type").get<std::string>();
        if (t == "softplus")
            transform = ScaleTransform::softplus(
                it->contains("floor") ? number((*it)["floor"], "floor") : 1e-4);
        else if (t != "identity")
            throw ParseError("unknown scale transform '" + t + "'");
    }

    Eigen::MatrixXd cov = mat_from_json(field(j, "noise_covariance"), "noise_covariance");
    return Scm(D, std::move(mask), N, std::move(mech), std::move(reward), std::move(lip),
               transform, std::move(cov));
}

std::string save_model(const Scm& scm) { return model_to_json(scm).dump(2) + "\n"; }

Scm load_model(std::string_view bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model is not valid JSON: ") + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model: ") + e.what());
    }
}

Scm load_model_file(const std::string& path) { return load_model(read_file(path)); }

void save_model_file(const Scm& scm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << save_model(scm);
}

Scm with_location_lipschitz(const Scm& scm, double target) {
    if (!(target >= 0) || !std::isfinite(target))
        throw InvalidInput("location Lipschitz target must be finite and >= 0");
    const auto* meta = std::get_if<LocationScaleLipschitz>(&scm.lipschitz_meta());
    if (!meta) throw InvalidInput("model has no location/scale Lipschitz constants");

    Mechanism mech = scm.mechanism();
    if (auto* m = std::get_if<AffineLocationScale>(&mech)) {
        double current = 0.0;
        for (const auto& a : m->location)
            current = std::max(current, Eigen::JacobiSVD<Eigen::MatrixXd>(a.weights)
                                            .singularValues()
                                            .maxCoeff());
        for (auto& a : m->location)
            a.weights = current > 0 ? Eigen::MatrixXd(a.weights * (target / current))
                                    : Eigen::MatrixXd(a.weights);
    } else if (auto* m = std::get_if<MlpLocationScale>(&mech)) {
        m->location.pre_scale = m->location.post_scale = std::sqrt(target);
    } else {
        throw InvalidInput("mechanism is not location-scale");
    }
    return Scm(scm.state_dim(), scm.evolving_mask(), scm.action_count(), std::move(mech),
               scm.reward_spec(), LocationScaleLipschitz{target, meta->scale},
               scm.scale_transform(), scm.noise_covariance());
}

// ---- episodes and results -------------------------------------------------

std::string episode_to_line(const Episode& ep, const json& metadata) {
    json j{{"id", ep.id}, {"T", ep.horizon()}, {"states", state_list(ep.states)},
           {"actions", ep.actions}};
    if (!metadata.is_null()) j["metadata"] = metadata;
    return j.dump();
}

std::string write_episodes(const std::vector<Episode>& episodes) {
    std::string out;
    for (const auto& ep : episodes) out += episode_to_line(ep) + "\n";
    return out;
}

EpisodeLoad load_episodes(std::string_view bytes) {
    EpisodeLoad out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string_view::npos) end = bytes.size();
        const std::string_view line = bytes.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const json j = json::parse(line);
            EpisodeRecord rec;
            const json& id = field(j, "id");
            rec.episode.id = id.is_string() ? id.get<std::string>() : id.dump();
            const json& states = field(j, "states");
            if (!states.is_array()) throw ParseError("states must be an array");
            for (const auto& s : states) rec.episode.states.push_back(vec_from_json(s, "state"));
            const json& actions = field(j, "actions");
            if (!actions.is_array()) throw ParseError("actions must be an array");
            for (const auto& a : actions) rec.episode.actions.push_back(count(a, "action"));
            if (auto it = j.find("T"); it != j.end() && count(*it, "T") != rec.episode.horizon())
                throw ParseError("T=" + it->dump() + " but " +
                                 std::to_string(rec.episode.horizon()) + " states");
            if (rec.episode.actions.size() != rec.episode.horizon())
                throw ParseError("states and actions have different lengths");
            for (const auto& s : rec.episode.states)
                if (s.size() != rec.episode.states.front().size())
                    throw ParseError("states have inconsistent dimensions");
            if (auto it = j.find("metadata"); it != j.end()) rec.metadata = *it;
            out.records.push_back(std::move(rec));
        } catch (const json::exception& e) {
            out.issues.push_back({line_no, e.what()});
        } catch (const ParseError& e) {
            out.issues.push_back({line_no, e.what()});
        }
    }
    return out;
}

EpisodeLoad load_episodes_file(const std::string& path) { return load_episodes(read_file(path)); }

json result_to_json(const ResultRecord& r) {
    if (r.error) return {{"id", r.id}, {"solver", r.solver}, {"k", r.budget}, {"error", *r.error}};
    json j{{"id", r.id},
           {"solver", r.solver},
           {"k", r.budget},
           {"observed_actions", r.observed_actions},
           {"actions", r.actions},
           {"changed_steps", r.changed_steps},
           {"cf_states", state_list(r.cf_states)},
           {"observed_outcome", r.observed_outcome},
           {"outcome", r.outcome},
           {"improvement", r.improvement ? json(*r.improvement) : json(nullptr)},
           {"nodes_expanded", r.nodes_expanded},
           {"nodes_generated", r.nodes_generated},
           {"ebf", r.ebf},
           {"elapsed_ms", r.elapsed_ms},
           {"anchor_count", r.anchor_count}};
    return j;
}

ResultRecord result_from_json(const json& j) {
    ResultRecord r;
    r.id = field(j, "id").get<std::string>();
    r.solver = j.value("solver", "");
    r.budget = j.value("k", std::size_t{0});
    if (auto it = j.find("error"); it != j.end()) {
        r.error = it->get<std::string>();
        return r;
    }
    r.observed_actions = field(j, "observed_actions").get<std::vector<ActionId>>();
    r.actions = field(j, "actions").get<std::vector<ActionId>>();
    r.changed_steps = field(j, "changed_steps").get<std::vector<std::size_t>>();
    for (const auto& s : field(j, "cf_states")) r.cf_states.push_back(vec_from_json(s, "cf_states"));
    r.observed_outcome = number(field(j, "observed_outcome"), "observed_outcome");
    r.outcome = number(field(j, "outcome"), "outcome");
    if (const json& imp = field(j, "improvement"); !imp.is_null())
        r.improvement = number(imp, "improvement");
    r.nodes_expanded = count(field(j, "nodes_expanded"), "nodes_expanded");
    r.nodes_generated = count(field(j, "nodes_generated"), "nodes_generated");
    r.ebf = number(field(j, "ebf"), "ebf");
    r.elapsed_ms = number(field(j, "elapsed_ms"), "elapsed_ms");
    r.anchor_count = j.value("anchor_count", std::size_t{0});
    return r;
}

std::string write_results(const std::vector<ResultRecord>& results) {
    std::string out;
    for (const auto& r : results) out += result_to_json(r).dump() + "\n";
    return out;
}

std::vector<ResultRecord> read_results(std::string_view bytes) {
    std::vector<ResultRecord> out;
    std::size_t line_no = 0, pos = 0;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string_view::npos) end = bytes.size();
        const std::string_view line = bytes.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            out.push_back(result_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return out;
}

// ---- validation -----------------------------------------------------------

SpectralNorm spectral_norm(const Eigen::MatrixXd& m, double rel_tol, std::size_t max_iterations) {
    if (m.size() == 0) throw InvalidInput("spectral norm of an empty matrix");
    SpectralNorm out;
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(m.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
    v.normalize();

    double sigma = 0.0;
    for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
        Eigen::VectorXd w = m.transpose() * (m * v);
        const double wn = w.norm();
        if (wn == 0.0) {
            out.value = 0.0;
            out.residual = 0.0;
            out.converged = true;
            return out;
        }
        v = w / wn;
        const double next = (m * v).norm();
        out.residual = std::abs(next - sigma) / next;
        sigma = next;
        if (out.residual <= rel_tol) {
            out.converged = true;
            break;
        }
    }
    out.iterations = std::min(out.iterations, max_iterations);
    out.value = sigma;
    return out;
}

ValidationReport validate_model(const Scm& scm, std::size_t samples, std::mt19937_64& rng) {
    ValidationReport rep;
    rep.samples = samples;
    auto fail = [&](bool& flag, std::string why) {
        flag = false;
        rep.failures.push_back(std::move(why));
    };
    auto check_norm = [&](const std::string& name, const Eigen::MatrixXd& w, bool bounded) {
        const SpectralNorm sn = spectral_norm(w);
        rep.spectral_norms.push_back({name, sn.value, sn.converged});
        if (!sn.converged)
            fail(rep.norms_ok, name + ": power iteration stopped at residual " +
                                   std::to_string(sn.residual));
        if (bounded && sn.value > 1.0 + kSpectralSlack)
            fail(rep.norms_ok, name + ": spectral norm " + std::to_string(sn.value) +
                                   " exceeds 1+" + std::to_string(kSpectralSlack));
        return sn.value;
    };

    if (const auto* m = std::get_if<AffineLocationScale>(&scm.mechanism())) {
        for (std::size_t a = 0; a < m->location.size(); ++a) {
            rep.effective_location_lipschitz =
                std::max(rep.effective_location_lipschitz,
                         check_norm("location[" + std::to_string(a) + "]", m->location[a].weights, false));
            rep.effective_scale_lipschitz =
                std::max(rep.effective_scale_lipschitz,
                         check_norm("scale[" + std::to_string(a) + "]", m->scale[a].weights, false));
        }
    } else if (const auto* m = std::get_if<MlpLocationScale>(&scm.mechanism())) {
        check_norm("location.state_weights", m->location.state_weights, true);
        check_norm("location.output_weights", m->location.output_weights, true);
        check_norm("scale.state_weights", m->scale.state_weights, true);
        check_norm("scale.output_weights", m->scale.output_weights, true);
        rep.effective_location_lipschitz = m->location.state_lipschitz();
        rep.effective_scale_lipschitz = m->scale.state_lipschitz();
    }
    if (const auto* meta = std::get_if<LocationScaleLipschitz>(&scm.lipschitz_meta())) {
        auto below = [](double declared, double actual) {
            return declared < actual - 1e-9 * std::max(1.0, actual);
        };
        if (below(meta->location, rep.effective_location_lipschitz))
            fail(rep.lipschitz_ok, "declared L_h=" + std::to_string(meta->location) +
                                       " is below the location map's constant " +
                                       std::to_string(rep.effective_location_lipschitz));
        if (below(meta->scale, rep.effective_scale_lipschitz))
            fail(rep.lipschitz_ok, "declared L_phi=" + std::to_string(meta->scale) +
                                       " is below the scale map's constant " +
                                       std::to_string(rep.effective_scale_lipschitz));
    }

    const std::size_t D = scm.state_dim();
    const std::size_t De = scm.evolving_dim();
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<ActionId> pick(0, scm.action_count() - 1);
    std::uniform_real_distribution<double> spread(-2.0, 2.0);
    auto sample = [&](std::size_t n, double sd) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sd * g(rng);
        return v;
    };

    rep.min_scale = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
        const double sd = std::pow(10.0, spread(rng));
        const State s = sample(D, sd);
        const State s2 = s + sample(D, sd * std::pow(10.0, spread(rng) - 1.0));
        const ActionId a = pick(rng);
        const Noise u = sample(De, 1.0);
        try {
            if (scm.is_location_scale())
                rep.min_scale = std::min(rep.min_scale, scm.location_scale(s, a).second.minCoeff());

            const Eigen::VectorXd next = scm.forward(s, a, u);
            State full = s;
            for (std::size_t c = 0; c < De; ++c)
                full[static_cast<Eigen::Index>(scm.evolving_indices()[c])] = next[static_cast<Eigen::Index>(c)];
            const Noise back = scm.abduct(s, a, full);
            for (Eigen::Index c = 0; c < u.size(); ++c)
                rep.max_roundtrip_residual =
                    std::max(rep.max_roundtrip_residual,
                             std::abs(back[c] - u[c]) / std::max(1.0, std::abs(u[c])));

            const double dist = (s - s2).norm();
            if (dist > 0) {
                const double k = scm.transition_lipschitz(a, u);
                const double q = (scm.forward(s, a, u) - scm.forward(s2, a, u)).norm() / dist;
                const double ca = scm.reward_lipschitz(a);
                const double qr = std::abs(scm.reward(s, a) - scm.reward(s2, a)) / dist;
                auto ratio = [](double quotient, double bound) {
                    if (bound > 0) return quotient / bound;
                    return quotient > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
                };
                rep.max_transition_quotient_ratio = std::max(rep.max_transition_quotient_ratio, ratio(q, k));
                rep.max_reward_quotient_ratio = std::max(rep.max_reward_quotient_ratio, ratio(qr, ca));
            }
        } catch (const ModelIntegrityError& e) {
            fail(rep.scale_ok, e.what());
            break;
        }
    }
    if (!scm.is_location_scale() || samples == 0) rep.min_scale = 0.0;
    if (scm.is_location_scale() && samples > 0 && !(rep.min_scale > 0))
        fail(rep.scale_ok, "scale map produced a non-positive value");
    if (rep.max_roundtrip_residual > kValidationRoundTripTol)
        fail(rep.roundtrip_ok, "abduction round-trip residual " +
                                   std::to_string(rep.max_roundtrip_residual));
    if (rep.max_transition_quotient_ratio > 1.0 + 1e-9)
        fail(rep.lipschitz_ok, "sampled transition difference quotient exceeds declared K by factor " +
                                   std::to_string(rep.max_transition_quotient_ratio));
    if (rep.max_reward_quotient_ratio > 1.0 + 1e-9)
        fail(rep.lipschitz_ok, "sampled reward difference quotient exceeds declared C by factor " +
                                   std::to_string(rep.max_reward_quotient_ratio));
    return rep;
}

json report_to_json(const ValidationReport& r) {
    json norms = json::array();
    for (const auto& n : r.spectral_norms)
        norms.push_back({{"name", n.name}, {"value", n.value}, {"converged", n.converged}});
    return {{"pass", r.pass()},
            {"spectral_norms", norms},
            {"effective_location_lipschitz", r.effective_location_lipschitz},
            {"effective_scale_lipschitz", r.effective_scale_lipschitz},
            {"max_transition_quotient_ratio", r.max_transition_quotient_ratio},
            {"max_reward_quotient_ratio", r.max_reward_quotient_ratio},
            {"min_scale", r.min_scale},
            {"max_roundtrip_residual", r.max_roundtrip_residual},
            {"samples", r.samples},
            {"norms_ok", r.norms_ok},
            {"lipschitz_ok", r.lipschitz_ok},
            {"scale_ok", r.scale_ok},
            {"roundtrip_ok", r.roundtrip_ok},
            {"failures", r.failures}};
}

}  // namespace cfastar
