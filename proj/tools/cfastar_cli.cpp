// cfastar: counterfactual action-sequence search from the command line.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cfastar/analysis.hpp"
#include "cfastar/errors.hpp"
#include "cfastar/gadgets.hpp"
#include "cfastar/model_io.hpp"

namespace {

using namespace cfastar;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitValidation = 3;

struct Common {
    std::string model;
    std::string episodes;
    std::size_t k = 3;
    std::string out = "-";
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct AnchorFlags {
    std::string strategy = "mc-lipschitz";
    std::size_t samples = 2000;
    std::size_t anchor_size = 0;
};

void emit(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write '" + path + "'");
    f << text;
}

struct Inputs {
    std::shared_ptr<const Scm> scm;
    std::vector<Episode> episodes;
    std::size_t bad_lines = 0;
};

Inputs load_inputs(const Common& c) {
    Inputs in;
    in.scm = std::make_shared<const Scm>(load_model_file(c.model));
    EpisodeLoad load = load_episodes_file(c.episodes);
    for (const auto& issue : load.issues)
        std::cerr << c.episodes << ":" << issue.line << ": " << issue.message << "\n";
    in.bad_lines = load.issues.size();
    for (auto& r : load.records) in.episodes.push_back(std::move(r.episode));
    return in;
}

AnalyzeOptions analyze_options(const Common& c, const AnchorFlags& a, const Inputs& in) {
    AnalyzeOptions o;
    o.budget = c.k;
    o.anchors.strategy = parse_anchor_strategy(a.strategy);
    o.anchors.samples = a.samples;
    o.anchors.target_size = a.anchor_size;
    o.anchors.seed = c.seed;
    if (o.anchors.strategy == AnchorStrategy::facility_location) {
        if (a.anchor_size == 0) throw CLI::ValidationError("--anchor-size", "required by facility-location");
        o.pool = observed_pool(in.episodes);
    }
    return o;
}

int finish_runs(const Common& c, const Inputs& in, const std::vector<EpisodeRun>& runs) {
    std::vector<ResultRecord> records;
    std::size_t failed = 0;
    for (const auto& r : runs) {
        records.push_back(r.record);
        if (r.record.error) {
            ++failed;
            std::cerr << "episode " << r.record.id << ": " << *r.record.error << "\n";
        }
    }
    emit(c.out, write_results(records));
    return failed + in.bad_lines == 0 ? kExitOk : kExitData;
}

void add_common(CLI::App* cmd, Common& c, bool with_jobs) {
    cmd->add_option("--model", c.model, "model file (JSON)")->required();
    cmd->add_option("--episodes", c.episodes, "episode file (one JSON object per line)")->required();
    cmd->add_option("--k", c.k, "maximum number of changed actions")->capture_default_str();
    cmd->add_option("--out", c.out, "output path, - for stdout")->capture_default_str();
    if (with_jobs) {
        cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
        cmd->add_option("--jobs", c.jobs, "parallel episodes")->check(CLI::PositiveNumber)->capture_default_str();
    }
}

void add_anchor_flags(CLI::App* cmd, AnchorFlags& a) {
    cmd->add_option("--anchors", a.strategy, "anchor strategy")
        ->check(CLI::IsMember({"mc-lipschitz", "mc-uniform", "facility-location"}))
        ->capture_default_str();
    auto* samples = cmd->add_option("--samples", a.samples, "Monte Carlo samples M")->capture_default_str();
    auto* size = cmd->add_option("--anchor-size", a.anchor_size, "exact anchor set size b")
                     ->check(CLI::PositiveNumber);
    samples->excludes(size);
}

std::vector<int> parse_set(const std::string& text) {
    std::vector<int> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw CLI::ValidationError("--set", "bad value '" + item + "'");
        values.push_back(v);
    }
    if (values.empty()) throw CLI::ValidationError("--set", "empty set");
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual action-sequence search with Lipschitz heuristics"};
    app.require_subcommand(1);

    Common analyze_c;
    AnchorFlags analyze_a;
    auto* analyze = app.add_subcommand("analyze", "optimal counterfactual sequences by A*");
    add_common(analyze, analyze_c, true);
    add_anchor_flags(analyze, analyze_a);

    Common oracle_c;
    std::uint64_t cap = 10'000'000;
    auto* oracle = app.add_subcommand("oracle", "optimal counterfactual sequences by enumeration");
    add_common(oracle, oracle_c, false);
    oracle->add_option("--jobs", oracle_c.jobs, "parallel episodes")->check(CLI::PositiveNumber);
    oracle->add_option("--cap", cap, "largest number of sequences to enumerate")->capture_default_str();

    Common bench_c;
    AnchorFlags bench_a;
    std::string sweep_text;
    auto* bench = app.add_subcommand("bench", "EBF and runtime over a parameter sweep (CSV)");
    add_common(bench, bench_c, true);
    add_anchor_flags(bench, bench_a);
    bench->add_option("--sweep", sweep_text, "k=1..5 | M=0,500,2000 | Lh=0.5,1,1.5")->required();

    std::string set_text, out_model, out_episode;
    auto* gadget = app.add_subcommand("gadget", "partition reduction instance");
    gadget->add_option("--set", set_text, "positive integers, comma separated")->required();
    gadget->add_option("--out-model", out_model, "model output path")->required();
    gadget->add_option("--out-episode", out_episode, "episode output path")->required();

    std::string validate_model_path;
    std::size_t validate_samples = 1000;
    std::uint64_t validate_seed = 0;
    auto* validate = app.add_subcommand("validate", "check declared Lipschitz constants of a model");
    validate->add_option("--model", validate_model_path, "model file")->required();
    validate->add_option("--samples", validate_samples, "sampled state pairs")->capture_default_str();
    validate->add_option("--seed", validate_seed, "random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*analyze) {
            const Inputs in = load_inputs(analyze_c);
            const AnalyzeOptions o = analyze_options(analyze_c, analyze_a, in);
            return finish_runs(analyze_c, in, analyze_all(in.scm, in.episodes, o, analyze_c.jobs));
        }
        if (*oracle) {
            const Inputs in = load_inputs(oracle_c);
            return finish_runs(oracle_c, in, oracle_all(in.scm, in.episodes, oracle_c.k, oracle_c.jobs, cap));
        }
        if (*bench) {
            const Sweep sweep = parse_sweep(sweep_text);
            const Inputs in = load_inputs(bench_c);
            const AnalyzeOptions o = analyze_options(bench_c, bench_a, in);
            const auto start = std::chrono::steady_clock::now();
            const auto rows = run_bench(in.scm, in.episodes, sweep, o, bench_c.jobs);
            emit(bench_c.out, bench_csv(sweep.param, rows));
            std::cerr << "bench finished in "
                      << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                      << " s\n";
            bool failed = in.bad_lines > 0;
            for (const auto& r : rows) failed |= r.failures > 0;
            return failed ? kExitData : kExitOk;
        }
        if (*gadget) {
            const std::vector<int> values = parse_set(set_text);
            const Environment env = build_partition_gadget(values);
            save_model_file(*env.scm, out_model);
            emit(out_episode, episode_to_line(env.episode) + "\n");
            return kExitOk;
        }
        if (*validate) {
            const Scm scm = load_model_file(validate_model_path);
            std::mt19937_64 rng(validate_seed);
            const ValidationReport report = validate_model(scm, validate_samples, rng);
            std::cout << report_to_json(report).dump(2) << "\n";
            return report.pass() ? kExitOk : kExitValidation;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
