#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cfastar/anchor_index.hpp"
#include "cfastar/cf_mdp.hpp"

namespace cfastar {

/// Lipschitz constants of the counterfactual value function per time step:
/// L_{T-1} = C and L_t = C + L_{t+1} * K_t.
struct LipschitzSchedule {
    std::vector<double> L;  // L_0 .. L_{T-1}
    double C = 0.0;
    std::vector<double> K;  // K_{u_0} .. K_{u_{T-2}}

    std::size_t horizon() const { return L.size(); }
};

LipschitzSchedule lipschitz_schedule(double C, std::span<const double> K, std::size_t T);

// Schedule with C = max_a C_a and K_t = max_a K_{a,u_t} taken from the model.
LipschitzSchedule lipschitz_schedule(const CfMdp& m);

struct TableOptions {
    bool use_index = true;   // false: linear scan over anchors
    std::size_t threads = 1; // workers per time step
};

/// Upper bounds of the counterfactual value function on a finite anchor set,
/// filled by a backward sweep over t and extended to arbitrary states through
/// Lipschitz penalties. Immutable once built.
class HeuristicTable {
public:
    HeuristicTable(std::shared_ptr<const AnchorIndex> index, LipschitzSchedule schedule,
                   std::size_t budget, bool use_index);

    const std::vector<State>& anchors() const { return index_->anchors(); }
    const AnchorIndex& index() const { return *index_; }
    const LipschitzSchedule& schedule() const { return schedule_; }
    std::size_t budget() const { return budget_; }
    std::size_t horizon() const { return schedule_.horizon(); }

    double value(std::size_t anchor, std::size_t changes, std::size_t t) const {
        return values_[layer(changes, t) * anchors().size() + anchor];
    }

    // min over anchors of V(anchor, changes, t) + L_t * ||anchor - x||
    double bound(const State& x, std::size_t changes, std::size_t t) const;

    // bound() for several budget levels at the same step; distances are shared.
    // See AnchorIndex::Probe for cutoffs and seeds; without the index both are
    // ignored and argmin, if requested, is filled with anchor 0.
    void bounds(const State& x, std::span<const std::size_t> changes, std::size_t t,
                std::span<double> out, const AnchorIndex::Probe& probe = {}) const;

    // Heuristic value at an arbitrary node (s, changes, t), 0 <= t <= T.
    double evaluate(const CfMdp& m, const State& s, std::size_t changes, std::size_t t) const;

    // Same, also writing an upper bound of R(s,a) + bound(s_a, l_a, t+1) per
    // action into `per_action` (size N; -inf for unavailable actions, R(s,a)
    // at t = T-1). The bound is exact for the maximizing action; the others
    // stop refining once they cannot reach the maximum.
    double evaluate(const CfMdp& m, const State& s, std::size_t changes, std::size_t t,
                    std::span<double> per_action) const;

private:
    friend HeuristicTable build_table(const CfMdp&, std::shared_ptr<const AnchorIndex>,
                                      const LipschitzSchedule&, const TableOptions&);

    std::size_t layer(std::size_t changes, std::size_t t) const { return t * (budget_ + 1) + changes; }
    std::span<double> layer_values(std::size_t changes, std::size_t t);
    std::span<const double> layer_values(std::size_t changes, std::size_t t) const;
    void finalize_step(std::size_t t);

    std::shared_ptr<const AnchorIndex> index_;
    LipschitzSchedule schedule_;
    std::size_t budget_;
    bool use_index_;
    std::vector<double> values_;                 // (t, l, anchor)
    std::vector<AnchorIndex::Layer> prepared_;   // per layer, for indexed queries
};

HeuristicTable build_table(const CfMdp& m, std::shared_ptr<const AnchorIndex> index,
                           const LipschitzSchedule& schedule, const TableOptions& options = {});

HeuristicTable build_table(const CfMdp& m, std::vector<State> anchors,
                           const LipschitzSchedule& schedule, const TableOptions& options = {});

inline double evaluate(const HeuristicTable& table, const CfMdp& m, const State& s,
                       std::size_t changes, std::size_t t) {
    return table.evaluate(m, s, changes, t);
}

}  // namespace cfastar
