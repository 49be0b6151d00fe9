#include "cfastar/search.hpp"

#include <cstring>
#include <limits>
#include <ostream>
#include <queue>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "cfastar/errors.hpp"

namespace cfastar {

namespace {

using Clock = std::chrono::steady_clock;

struct Node {
    State state;  // empty for goal nodes
    std::size_t changes = 0;
    std::size_t t = 0;
    double reward = 0.0;
    std::ptrdiff_t parent = -1;
    ActionId action = 0;
    bool stale = false;
    bool explored = false;
    bool exact = false;              // key holds rwd + V(s,l,t) itself
    std::vector<double> per_action;  // R(s,a) + bound(s_a), once exact
};

struct Entry {
    double priority;
    std::size_t t;
    std::uint64_t seq;
    std::size_t node;
};

// max-heap order: higher priority, then deeper, then earlier insertion
struct EntryLess {
    bool operator()(const Entry& a, const Entry& b) const {
        if (a.priority != b.priority) return a.priority < b.priority;
        if (a.t != b.t) return a.t < b.t;
        return a.seq > b.seq;
    }
};

std::string node_key(const State& s, std::size_t changes, std::size_t t) {
    const std::size_t bytes = static_cast<std::size_t>(s.size()) * sizeof(double);
    std::string key(bytes + 2 * sizeof(std::size_t), '\0');
    std::memcpy(key.data(), s.data(), bytes);
    std::memcpy(key.data() + bytes, &changes, sizeof changes);
    std::memcpy(key.data() + bytes + sizeof changes, &t, sizeof t);
    return key;
}

}  // namespace

SearchResult astar(const CfMdp& m, const HeuristicTable& table, const SearchOptions& options) {
    const auto start = Clock::now();
    const std::size_t T = m.horizon();
    const std::size_t N = m.scm().action_count();
    if (table.horizon() != T || table.budget() != m.budget())
        throw InvalidInput("heuristic table was built for a different horizon or budget");

    SearchResult result;
    std::vector<Node> nodes;
    std::priority_queue<Entry, std::vector<Entry>, EntryLess> open;
    std::unordered_map<std::string, std::size_t> known;
    std::uint64_t seq = 0;

    auto push = [&](Node node, double priority) {
        const std::size_t id = nodes.size();
        open.push({priority, node.t, seq++, id});
        nodes.push_back(std::move(node));
        ++result.nodes_generated;
        return id;
    };
    // exact key of a node; also keeps the per-action values for its expansion
    auto resolve = [&](Node& node) {
        node.exact = true;
        if (node.t == T) return node.reward;
        node.per_action.assign(N, 0.0);
        return node.reward + table.evaluate(m, node.state, node.changes, node.t, node.per_action);
    };

    {
        Node root;
        root.state = m.observed().states[0];
        const double f = resolve(root);
        const std::size_t id = push(std::move(root), f);
        known.emplace(node_key(nodes[id].state, 0, 0), id);
    }

    // Children enter the queue keyed by R(s,a) + bound(s_a) from their
    // parent's evaluation, which is never below their own rwd + V. The exact
    // key is computed when such an entry first reaches the top, so only
    // nodes that get that far pay for a heuristic evaluation; the set of
    // expanded nodes is the one plain A* expands.
    while (!open.empty()) {
        const Entry top = open.top();
        open.pop();
        Node& node = nodes[top.node];
        if (node.stale) continue;
        if (!node.exact) {
            const double f = resolve(node);
            open.push({f, node.t, seq++, top.node});
            continue;
        }
        ++result.nodes_expanded;
        if (options.record_trace)
            result.trace.push_back({node.t, node.changes, node.reward, top.priority});

        if (node.t == T) {
            std::vector<ActionId> actions(T);
            for (std::ptrdiff_t v = static_cast<std::ptrdiff_t>(top.node); nodes[v].parent >= 0;
                 v = nodes[v].parent)
                actions[nodes[v].t - 1] = nodes[v].action;
            result.cf_episode = m.rollout(actions);
            result.outcome = result.cf_episode.outcome;
            result.actions = std::move(actions);
            result.ebf = ebf(result.nodes_expanded, T);
            result.elapsed = Clock::now() - start;
            return result;
        }

        node.explored = true;
        // copy: `nodes` may reallocate while children are pushed
        const State state = node.state;
        const std::size_t changes = node.changes;
        const std::size_t t = node.t;
        const double reward = node.reward;
        const std::vector<double> per_action = std::move(node.per_action);

        for (ActionId a = 0; a < N; ++a) {
            if (!m.action_available(changes, t, a)) continue;
            const double edge = m.scm().reward(state, a);
            Node child;
            child.parent = static_cast<std::ptrdiff_t>(top.node);
            child.action = a;
            child.reward = reward + edge;
            child.t = t + 1;
            if (t + 1 == T) {
                // every last-step edge leads to the goal
                child.changes = m.budget();
                child.exact = true;
                const double f = child.reward;
                push(std::move(child), f);
                continue;
            }
            EnhancedState next = m.step({state, changes}, a, t);
            child.state = std::move(next.state);
            child.changes = next.changes;

            std::string key = node_key(child.state, child.changes, child.t);
            auto it = known.find(key);
            if (it != known.end()) {
                Node& prev = nodes[it->second];
                if (prev.explored || prev.reward >= child.reward) continue;
                prev.stale = true;
            }
            const double f = reward + per_action[a];
            const std::size_t id = push(std::move(child), f);
            known[std::move(key)] = id;
        }
    }
    throw InvalidInput("search exhausted the graph without reaching the goal");
}

std::uint64_t count_candidates(std::size_t T, std::size_t N, std::size_t k) {
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    unsigned __int128 total = 0;
    unsigned __int128 binom = 1;  // C(T, j)
    unsigned __int128 power = 1;  // (N-1)^j
    for (std::size_t j = 0; j <= std::min(k, T); ++j) {
        if (j > 0) {
            binom = binom * (T - j + 1) / j;
            power *= (N - 1);
        }
        total += binom * power;
        if (total > kMax || binom > kMax || power > kMax) return kMax;
        if (N < 2) break;
    }
    return static_cast<std::uint64_t>(total);
}

SearchResult brute_force(const CfMdp& m, std::uint64_t cap) {
    const auto start = Clock::now();
    const std::size_t T = m.horizon();
    const std::size_t N = m.scm().action_count();
    const std::uint64_t candidates = count_candidates(T, N, m.budget());
    if (candidates > cap) throw EnumerationCapExceeded(candidates, cap);

    SearchResult result;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<ActionId> best_actions;
    std::vector<ActionId> actions(T);

    // depth-first in lexicographic order; strict improvement keeps the first optimum
    auto visit = [&](auto&& self, const EnhancedState& es, std::size_t t, double reward) -> void {
        ++result.nodes_expanded;
        for (ActionId a = 0; a < N; ++a) {
            if (!m.action_available(es.changes, t, a)) continue;
            actions[t] = a;
            const double r = reward + m.scm().reward(es.state, a);
            ++result.nodes_generated;
            if (t + 1 == T) {
                if (r > best) {
                    best = r;
                    best_actions = actions;
                }
            } else {
                self(self, m.step(es, a, t), t + 1, r);
            }
        }
    };
    visit(visit, {m.observed().states[0], 0}, 0, 0.0);

    result.cf_episode = m.rollout(best_actions);
    result.outcome = result.cf_episode.outcome;
    result.actions = std::move(best_actions);
    result.ebf = ebf(result.nodes_expanded, T);
    result.elapsed = Clock::now() - start;
    return result;
}

double ebf(std::size_t nodes_expanded, std::size_t T) {
    if (T < 1) throw InvalidInput("ebf needs T >= 1");
    if (nodes_expanded <= T + 1) return 1.0;
    const long double target = static_cast<long double>(nodes_expanded);
    auto geometric = [T](long double b) {
        long double sum = 0, term = 1;
        for (std::size_t i = 0; i <= T; ++i) {
            sum += term;
            term *= b;
        }
        return sum;
    };
    long double lo = 1.0L, hi = target;
    for (int it = 0; it < 500 && hi - lo > 1e-13L * hi; ++it) {
        const long double mid = 0.5L * (lo + hi);
        (geometric(mid) < target ? lo : hi) = mid;
    }
    return static_cast<double>(0.5L * (lo + hi));
}

void write_trace(std::ostream& os, const std::vector<ExpansionRecord>& trace) {
    for (const auto& r : trace) {
        nlohmann::json j{{"t", r.t},
                         {"l", r.changes},
                         {"rwd", r.reward_so_far},
                         {"f", r.priority}};
        os << j.dump() << '\n';
    }
}

}  // namespace cfastar
