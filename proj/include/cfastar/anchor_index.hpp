#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfastar/scm.hpp"

namespace cfastar {

/// Ball tree over a fixed anchor set answering
///
///     min_i { values[i] + lipschitz * ||anchors[i] - x|| }
///
/// exactly, for one or several value layers at once. A subtree is skipped
/// only when min(values in subtree) + lipschitz * (dist(x, center) - radius)
/// exceeds the best candidate found, so the result is the number a linear
/// scan produces.
class AnchorIndex {
public:
    // Values of one layer rearranged for queries.
    struct Layer {
        std::vector<double> values;  // tree order
        std::vector<double> minima;  // per node
    };

    explicit AnchorIndex(std::vector<State> anchors, std::size_t leaf_size = 16);

    std::size_t size() const { return anchors_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<State>& anchors() const { return anchors_; }

    // `values` is indexed by anchor id.
    Layer prepare(std::span<const double> values) const;

    double query(const Layer& layer, double lipschitz, const State& x) const;

    struct Probe {
        // Layer j may stop as soon as some candidate is at most cutoffs[j];
        // its result is then such a candidate (an upper bound of the
        // minimum) rather than the minimum itself.
        std::span<const double> cutoffs;
        // Anchor ids tried before the tree walk (e.g. a nearby query's winners).
        std::span<const std::size_t> seeds;
        // Receives the anchor id behind each result.
        std::span<std::size_t> argmin;
    };

    // out[j] = query(*layers[j], lipschitz, x) for every j.
    void query(std::span<const Layer* const> layers, double lipschitz, const State& x,
               std::span<double> out, const Probe& probe) const;
    void query(std::span<const Layer* const> layers, double lipschitz, const State& x,
               std::span<double> out) const {
        query(layers, lipschitz, x, out, Probe{});
    }

    // Reference implementation, O(size * dim); `values` indexed by anchor id.
    double query_linear(std::span<const double> values, double lipschitz, const State& x) const;

private:
    struct Node {
        std::size_t begin = 0, end = 0;   // range in tree order
        std::size_t left = 0, right = 0;  // child ids, 0 for leaves
        double radius = 0.0;
        bool leaf() const { return left == 0; }
    };

    struct Query;

    std::size_t build(std::size_t begin, std::size_t end);
    double center_distance(std::size_t node, const double* x) const;
    double point_sq_distance(std::size_t pos, const double* x) const;
    double frozen_offset(const double* x) const;
    void search(std::size_t node, double dc, Query& q) const;
    void visit(std::size_t pos, Query& q) const;

    std::vector<State> anchors_;
    std::size_t dim_ = 0;
    std::size_t leaf_size_;
    // coordinates on which the anchors differ; the others are identical
    // across the set and folded into a per-query offset
    std::vector<std::size_t> active_;
    std::vector<std::size_t> fixed_;
    std::vector<double> fixed_values_;
    std::vector<std::size_t> order_;      // tree position -> anchor id
    std::vector<std::size_t> position_;   // anchor id -> tree position
    std::vector<double> points_;          // tree order, active coordinates
    std::vector<double> leaf_distance_;   // tree order, distance to leaf center
    std::vector<Node> nodes_;
    std::vector<double> centers_;         // per node, active coordinates
};

}  // namespace cfastar
