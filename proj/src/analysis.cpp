#include "cfastar/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include "cfastar/errors.hpp"
#include "cfastar/search.hpp"

namespace cfastar {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::mt19937_64 episode_rng(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

ResultRecord to_record(const CfMdp& m, const SearchResult& r, std::string solver) {
    ResultRecord rec;
    rec.id = m.observed().id;
    rec.solver = std::move(solver);
    rec.budget = m.budget();
    rec.observed_actions = m.observed().actions;
    rec.actions = r.actions;
    rec.changed_steps = changed_steps(m.observed(), r.actions);
    rec.cf_states = r.cf_episode.states;
    rec.observed_outcome = m.observed_outcome();
    rec.outcome = r.outcome;
    if (m.observed_outcome() != 0.0) rec.improvement = improvement(m.observed_outcome(), r.outcome);
    rec.nodes_expanded = r.nodes_expanded;
    rec.nodes_generated = r.nodes_generated;
    rec.ebf = r.ebf;
    rec.elapsed_ms = r.elapsed.count();
    return rec;
}

template <class Fn>
std::vector<EpisodeRun> run_all(const std::vector<Episode>& episodes, std::size_t jobs, Fn&& one) {
    std::vector<EpisodeRun> out(episodes.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < episodes.size(); i = next++) {
            try {
                out[i] = one(i);
            } catch (const std::exception& e) {
                out[i] = {};
                out[i].record.id = episodes[i].id;
                out[i].record.error = e.what();
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, episodes.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    std::stable_sort(out.begin(), out.end(), [](const EpisodeRun& a, const EpisodeRun& b) {
        return a.record.id < b.record.id;
    });
    return out;
}

}  // namespace

std::vector<State> make_anchors(const CfMdp& m, const LipschitzSchedule& schedule,
                                const AnalyzeOptions& options, std::size_t episode_index) {
    const AnchorConfig& c = options.anchors;
    std::mt19937_64 rng = episode_rng(c.seed, episode_index);
    if (c.strategy == AnchorStrategy::facility_location) {
        if (c.target_size == 0) throw InvalidInput("facility location needs an anchor size");
        if (options.pool.empty())
            return facility_location_anchors(m.observed().states, c.target_size, rng);
        return facility_location_anchors(options.pool, c.target_size, rng);
    }
    const StepSampling mode = c.strategy == AnchorStrategy::mc_lipschitz ? StepSampling::lipschitz
                                                                         : StepSampling::uniform;
    if (c.target_size > 0)
        return mc_anchor_set_sized(m, schedule, c.target_size, mode, rng).anchors;
    return mc_anchor_set(m, schedule, c.samples, mode, rng).anchors;
}

EpisodeRun analyze_episode(std::shared_ptr<const Scm> scm, const Episode& episode,
                           const AnalyzeOptions& options, std::size_t episode_index) {
    const auto start = Clock::now();
    const CfMdp m = build_cf_mdp(std::move(scm), episode, options.budget);
    const LipschitzSchedule schedule = lipschitz_schedule(m);
    std::vector<State> anchors = make_anchors(m, schedule, options, episode_index);
    const std::size_t count = anchors.size();
    const HeuristicTable table = build_table(m, std::move(anchors), schedule, options.table);
    const SearchResult r = astar(m, table);
    EpisodeRun run{to_record(m, r, "astar"), 0.0};
    run.record.anchor_count = count;
    run.total_ms = since(start);
    return run;
}

EpisodeRun oracle_episode(std::shared_ptr<const Scm> scm, const Episode& episode,
                          std::size_t budget, std::uint64_t cap) {
    const auto start = Clock::now();
    const CfMdp m = build_cf_mdp(std::move(scm), episode, budget);
    const SearchResult r = brute_force(m, cap);
    EpisodeRun run{to_record(m, r, "brute_force"), 0.0};
    run.total_ms = since(start);
    return run;
}

std::vector<EpisodeRun> analyze_all(std::shared_ptr<const Scm> scm,
                                    const std::vector<Episode>& episodes,
                                    const AnalyzeOptions& options, std::size_t jobs) {
    return run_all(episodes, jobs,
                   [&](std::size_t i) { return analyze_episode(scm, episodes[i], options, i); });
}

std::vector<EpisodeRun> oracle_all(std::shared_ptr<const Scm> scm,
                                   const std::vector<Episode>& episodes, std::size_t budget,
                                   std::size_t jobs, std::uint64_t cap) {
    return run_all(episodes, jobs,
                   [&](std::size_t i) { return oracle_episode(scm, episodes[i], budget, cap); });
}

std::vector<State> observed_pool(const std::vector<Episode>& episodes) {
    std::vector<State> pool;
    for (const auto& ep : episodes) pool.insert(pool.end(), ep.states.begin(), ep.states.end());
    return pool;
}

// ---- sweeps ---------------------------------------------------------------

namespace {

double parse_number(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw InvalidInput("bad sweep value '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::string_view to_string(SweepParam p) {
    switch (p) {
        case SweepParam::k: return "k";
        case SweepParam::M: return "M";
        case SweepParam::Lh: return "Lh";
    }
    return "?";
}

Sweep parse_sweep(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw InvalidInput("sweep must look like name=values");
    const std::string_view name = text.substr(0, eq);
    std::string_view rest = text.substr(eq + 1);
    Sweep sw;
    if (name == "k") sw.param = SweepParam::k;
    else if (name == "M") sw.param = SweepParam::M;
    else if (name == "Lh") sw.param = SweepParam::Lh;
    else throw InvalidInput("unknown sweep parameter '" + std::string(name) + "'");

    if (const auto dots = rest.find(".."); dots != std::string_view::npos && sw.param != SweepParam::Lh) {
        const double lo = parse_number(rest.substr(0, dots));
        const double hi = parse_number(rest.substr(dots + 2));
        if (lo != std::floor(lo) || hi != std::floor(hi) || lo > hi)
            throw InvalidInput("range sweep needs integers lo..hi with lo <= hi");
        for (double v = lo; v <= hi; v += 1.0) sw.values.push_back(v);
    } else {
        while (true) {
            const auto comma = rest.find(',');
            sw.values.push_back(parse_number(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
    }
    for (double v : sw.values) {
        if (sw.param == SweepParam::Lh ? v < 0.0 : (v < 0.0 || v != std::floor(v)))
            throw InvalidInput("sweep values must be non-negative" +
                               std::string(sw.param == SweepParam::Lh ? "" : " integers"));
    }
    return sw;
}

BenchRow summarize(double value, const std::vector<EpisodeRun>& runs) {
    BenchRow row;
    row.value = value;
    double sum = 0.0, sq = 0.0, ms = 0.0, imp = 0.0;
    std::size_t with_imp = 0;
    for (const auto& r : runs) {
        if (r.record.error) {
            ++row.failures;
            continue;
        }
        ++row.episodes;
        sum += r.record.ebf;
        sq += r.record.ebf * r.record.ebf;
        ms += r.total_ms;
        if (r.record.improvement) {
            imp += *r.record.improvement;
            ++with_imp;
        }
    }
    if (row.episodes == 0) return row;
    const double n = static_cast<double>(row.episodes);
    row.mean_ebf = sum / n;
    row.mean_runtime_ms = ms / n;
    if (row.episodes > 1) {
        const double var = std::max(0.0, (sq - n * row.mean_ebf * row.mean_ebf) / (n - 1.0));
        row.ci_half_width = 1.96 * std::sqrt(var / n);
    }
    if (with_imp > 0) row.mean_improvement = imp / static_cast<double>(with_imp);
    return row;
}

std::vector<BenchRow> run_bench(std::shared_ptr<const Scm> scm,
                                const std::vector<Episode>& episodes, const Sweep& sweep,
                                const AnalyzeOptions& base, std::size_t jobs) {
    std::vector<BenchRow> rows;
    for (double v : sweep.values) {
        AnalyzeOptions o = base;
        std::shared_ptr<const Scm> model = scm;
        switch (sweep.param) {
            case SweepParam::k: o.budget = static_cast<std::size_t>(v); break;
            case SweepParam::M:
                o.anchors.samples = static_cast<std::size_t>(v);
                o.anchors.target_size = 0;
                break;
            case SweepParam::Lh:
                model = std::make_shared<const Scm>(with_location_lipschitz(*scm, v));
                break;
        }
        rows.push_back(summarize(v, analyze_all(model, episodes, o, jobs)));
    }
    return rows;
}

std::string bench_csv(SweepParam param, const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << to_string(param)
       << ",episodes,failures,mean_ebf,ci_half_width,mean_runtime_ms,mean_improvement\n";
    for (const auto& r : rows) {
        os << r.value << ',' << r.episodes << ',' << r.failures << ',' << r.mean_ebf << ','
           << r.ci_half_width << ',' << r.mean_runtime_ms << ',';
        if (r.mean_improvement) os << *r.mean_improvement;
        os << '\n';
    }
    return os.str();
}

}  // namespace cfastar
