#include "cfastar/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "cfastar/errors.hpp"

namespace cfastar {

namespace {

// Largest child bound that provably cannot lift r + bound above `best`;
// the margin absorbs the rounding of the sum.
double cutoff(double best, double r) {
    if (best == -std::numeric_limits<double>::infinity()) return best;
    const double eps = std::numeric_limits<double>::epsilon();
    return best - r - 4 * eps * (std::abs(best) + std::abs(r));
}

}  // namespace

LipschitzSchedule lipschitz_schedule(double C, std::span<const double> K, std::size_t T) {
    if (T < 1) throw InvalidInput("horizon must be positive");
    if (K.size() + 1 != T)
        throw InvalidInput("need T-1=" + std::to_string(T - 1) + " transition constants, got " +
                           std::to_string(K.size()));
    if (!(C >= 0) || !std::isfinite(C)) throw InvalidInput("reward constant must be finite and >= 0");
    for (double k : K)
        if (!(k >= 0) || !std::isfinite(k))
            throw InvalidInput("transition constants must be finite and >= 0");

    LipschitzSchedule s;
    s.C = C;
    s.K.assign(K.begin(), K.end());
    s.L.assign(T, 0.0);
    s.L[T - 1] = C;
    for (std::size_t t = T - 1; t-- > 0;) s.L[t] = C + s.L[t + 1] * K[t];
    return s;
}

LipschitzSchedule lipschitz_schedule(const CfMdp& m) {
    std::vector<double> K;
    K.reserve(m.noise().size());
    for (const auto& u : m.noise()) K.push_back(m.scm().transition_lipschitz(u));
    return lipschitz_schedule(m.scm().reward_lipschitz(), K, m.horizon());
}

HeuristicTable::HeuristicTable(std::shared_ptr<const AnchorIndex> index,
                               LipschitzSchedule schedule, std::size_t budget, bool use_index)
    : index_(std::move(index)),
      schedule_(std::move(schedule)),
      budget_(budget),
      use_index_(use_index) {
    const std::size_t layers = schedule_.horizon() * (budget_ + 1);
    values_.assign(layers * index_->size(), 0.0);
    if (use_index_) prepared_.resize(layers);
}

std::span<double> HeuristicTable::layer_values(std::size_t changes, std::size_t t) {
    return {values_.data() + layer(changes, t) * anchors().size(), anchors().size()};
}

std::span<const double> HeuristicTable::layer_values(std::size_t changes, std::size_t t) const {
    return {values_.data() + layer(changes, t) * anchors().size(), anchors().size()};
}

void HeuristicTable::finalize_step(std::size_t t) {
    if (!use_index_) return;
    for (std::size_t l = 0; l <= budget_; ++l)
        prepared_[layer(l, t)] = index_->prepare(layer_values(l, t));
}

double HeuristicTable::bound(const State& x, std::size_t changes, std::size_t t) const {
    const double L = schedule_.L[t];
    if (use_index_) return index_->query(prepared_[layer(changes, t)], L, x);
    return index_->query_linear(layer_values(changes, t), L, x);
}

void HeuristicTable::bounds(const State& x, std::span<const std::size_t> changes, std::size_t t,
                            std::span<double> out, const AnchorIndex::Probe& probe) const {
    if (out.size() != changes.size()) throw InvalidInput("one output per budget level is required");
    if (!use_index_) {
        for (std::size_t j = 0; j < changes.size(); ++j) out[j] = bound(x, changes[j], t);
        std::fill(probe.argmin.begin(), probe.argmin.end(), std::size_t{0});
        return;
    }
    std::vector<const AnchorIndex::Layer*> layers(changes.size());
    for (std::size_t j = 0; j < changes.size(); ++j) layers[j] = &prepared_[layer(changes[j], t)];
    index_->query(layers, schedule_.L[t], x, out, probe);
}

double HeuristicTable::evaluate(const CfMdp& m, const State& s, std::size_t changes,
                                std::size_t t) const {
    std::vector<double> per_action(m.scm().action_count());
    return evaluate(m, s, changes, t, per_action);
}

double HeuristicTable::evaluate(const CfMdp& m, const State& s, std::size_t changes,
                                std::size_t t, std::span<double> per_action) const {
    const std::size_t T = horizon();
    const std::size_t N = m.scm().action_count();
    if (changes > budget_ || t > T)
        throw InvalidInput("heuristic queried at (l=" + std::to_string(changes) +
                           ", t=" + std::to_string(t) + ") outside l<=" +
                           std::to_string(budget_) + ", t<=" + std::to_string(T));
    if (per_action.size() != N) throw InvalidInput("per-action output must have one slot per action");
    constexpr double kNone = -std::numeric_limits<double>::infinity();
    std::fill(per_action.begin(), per_action.end(), kNone);
    if (t == T) return 0.0;

    double best = kNone;
    // winners of earlier sibling queries are good first guesses for later ones
    std::vector<std::size_t> seeds;
    for (ActionId a = 0; a < N; ++a) {
        if (!m.action_available(changes, t, a)) continue;
        const double r = m.scm().reward(s, a);
        double v = r;
        if (t + 1 < T) {
            const EnhancedState next = m.step({s, changes}, a, t);
            const std::size_t lv[1] = {next.changes};
            const double cut[1] = {cutoff(best, r)};
            double out[1];
            std::size_t arg[1];
            bounds(next.state, lv, t + 1, out, {cut, seeds, arg});
            if (std::find(seeds.begin(), seeds.end(), arg[0]) == seeds.end()) seeds.push_back(arg[0]);
            v += out[0];
        }
        per_action[a] = v;
        best = std::max(best, v);
    }
    return best;
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fill) {
    if (workers <= 1) {
        fill(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                fill(n * w / workers, n * (w + 1) / workers);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

HeuristicTable build_table(const CfMdp& m, std::shared_ptr<const AnchorIndex> index,
                           const LipschitzSchedule& schedule, const TableOptions& options) {
    if (!index || index->size() == 0) throw InvalidInput("anchor set is empty");
    const std::size_t T = m.horizon();
    if (schedule.horizon() != T)
        throw InvalidInput("schedule horizon " + std::to_string(schedule.horizon()) +
                           " does not match episode horizon " + std::to_string(T));
    if (index->dim() != m.scm().state_dim())
        throw InvalidInput("anchor dimension does not match the model");

    const std::size_t k = m.budget();
    const std::size_t N = m.scm().action_count();
    HeuristicTable table(std::move(index), schedule, k, options.use_index);
    const auto& anchors = table.anchors();
    const std::size_t n = anchors.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, n));
    constexpr double kNone = -std::numeric_limits<double>::infinity();

    for (std::size_t l = 0; l <= k; ++l) {
        auto out = table.layer_values(l, T - 1);
        for (std::size_t i = 0; i < n; ++i) {
            double best = kNone;
            for (ActionId a = 0; a < N; ++a)
                if (m.action_available(l, T - 1, a))
                    best = std::max(best, m.scm().reward(anchors[i], a));
            out[i] = best;
        }
    }
    table.finalize_step(T - 1);

    // The successor state does not depend on the budget level, so each
    // (anchor, action) pair is stepped once and queried for every level it
    // feeds: the observed action keeps l, any other action moves l to l+1.
    std::vector<std::size_t> keep(k + 1), bump(k);
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    std::iota(bump.begin(), bump.end(), std::size_t{1});

    for (std::size_t t = T - 1; t-- > 0;) {
        const ActionId observed = m.observed_action(t);
        std::vector<std::span<double>> out(k + 1);
        for (std::size_t l = 0; l <= k; ++l) out[l] = table.layer_values(l, t);

        const double L = schedule.L[t + 1];
        parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
            std::vector<double> best(k + 1), res(k + 1), cut(k + 1);
            std::vector<std::size_t> seeds, arg(k + 1);
            std::vector<State> next(N);
            std::vector<double> reward(N), rank(N);
            std::vector<ActionId> order;
            ActionId lead = observed;  // maximizer for l = 0 at the previous anchor

            for (std::size_t i = begin; i < end; ++i) {
                order.clear();
                for (ActionId a = 0; a < N; ++a) {
                    if (a != observed && k == 0) continue;
                    reward[a] = m.scm().reward(anchors[i], a);
                    next[a] = m.step({anchors[i], 0}, a, t).state;
                    order.push_back(a);
                }
                std::fill(best.begin(), best.end(), kNone);
                seeds.clear();

                // query levels fed by action a: l for the observed action (l = 0..k),
                // l+1 for any other (l = 0..k-1)
                auto run = [&](ActionId a) {
                    const bool same = a == observed;
                    const std::size_t count = same ? k + 1 : k;
                    const auto levels = same ? std::span<const std::size_t>(keep)
                                             : std::span<const std::size_t>(bump);
                    for (std::size_t l = 0; l < count; ++l) cut[l] = cutoff(best[l], reward[a]);
                    table.bounds(next[a], levels, t + 1, std::span(res).first(count),
                                 {std::span<const double>(cut).first(count), seeds,
                                  std::span(arg).first(count)});
                    for (std::size_t l = 0; l < count; ++l) {
                        if (std::find(seeds.begin(), seeds.end(), arg[l]) == seeds.end())
                            seeds.push_back(arg[l]);
                        const double v = reward[a] + res[l];
                        if (l == 0 && v > best[0]) lead = a;
                        best[l] = std::max(best[l], v);
                    }
                };

                // Exact pass for the likely maximizer, then the rest from the
                // highest cheap estimate down so the running maximum rises early
                // and later scans stop sooner. The order does not affect values.
                if (std::find(order.begin(), order.end(), lead) == order.end()) lead = observed;
                run(lead);
                for (const ActionId a : order) {
                    if (a == lead) continue;
                    const std::size_t level = a == observed ? 0 : 1;
                    double ub = std::numeric_limits<double>::infinity();
                    for (const std::size_t sidx : seeds)
                        ub = std::min(ub, table.value(sidx, level, t + 1) +
                                              L * (anchors[sidx] - next[a]).norm());
                    rank[a] = reward[a] + ub;
                }
                std::erase(order, lead);
                std::sort(order.begin(), order.end(),
                          [&](ActionId x, ActionId y) { return rank[x] > rank[y]; });
                for (const ActionId a : order) run(a);

                for (std::size_t l = 0; l <= k; ++l) out[l][i] = best[l];
            }
        });
        table.finalize_step(t);
    }
    return table;
}

HeuristicTable build_table(const CfMdp& m, std::vector<State> anchors,
                           const LipschitzSchedule& schedule, const TableOptions& options) {
    if (anchors.empty()) throw InvalidInput("anchor set is empty");
    return build_table(m, std::make_shared<const AnchorIndex>(std::move(anchors)), schedule,
                       options);
}

}  // namespace cfastar
