#include "cfastar/anchor_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfastar/errors.hpp"

namespace cfastar {

namespace {

// A candidate is only dropped when its lower bound exceeds the best value by
// more than this relative slack, which covers rounding in the bounds.
constexpr double kSlack = 1e-12;

double threshold(double best) { return best + kSlack * std::abs(best); }

}  // namespace

struct AnchorIndex::Query {
    const double* x;  // active coordinates
    double offset;    // squared distance over the fixed coordinates
    double lipschitz;
    std::size_t count;
    const double* const* values;  // per layer, tree order
    const double* const* minima;  // per layer, per node
    double* best;
    double* limit;                // prune above this, per layer
    unsigned char* live;          // layer still searching
    const double* cutoffs;        // may be null
    std::size_t* argmin;          // tree positions; may be null
    std::size_t open;             // live layers
};

AnchorIndex::AnchorIndex(std::vector<State> anchors, std::size_t leaf_size)
    : anchors_(std::move(anchors)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    if (anchors_.empty()) throw InvalidInput("anchor set is empty");
    dim_ = static_cast<std::size_t>(anchors_.front().size());
    for (const auto& a : anchors_)
        if (static_cast<std::size_t>(a.size()) != dim_)
            throw InvalidInput("anchors have inconsistent dimensions");

    for (std::size_t d = 0; d < dim_; ++d) {
        const auto e = static_cast<Eigen::Index>(d);
        const double first = anchors_.front()[e];
        const bool same = std::all_of(anchors_.begin(), anchors_.end(),
                                      [&](const State& a) { return a[e] == first; });
        if (same) {
            fixed_.push_back(d);
            fixed_values_.push_back(first);
        } else {
            active_.push_back(d);
        }
    }

    const std::size_t n = anchors_.size();
    const std::size_t ad = active_.size();
    points_.resize(n * ad);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < ad; ++c)
            points_[i * ad + c] = anchors_[i][static_cast<Eigen::Index>(active_[c])];

    // build on rows indexed by anchor id, then lay them out in tree order
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * n / leaf_size_ + 2);
    build(0, n);

    position_.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) position_[order_[pos]] = pos;

    std::vector<double> by_id = std::move(points_);
    points_.assign(n * ad, 0.0);
    for (std::size_t pos = 0; pos < n; ++pos)
        std::copy_n(&by_id[order_[pos] * ad], ad, &points_[pos * ad]);

    leaf_distance_.assign(n, 0.0);
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        if (!nodes_[id].leaf()) continue;
        for (std::size_t pos = nodes_[id].begin; pos < nodes_[id].end; ++pos)
            leaf_distance_[pos] = center_distance(id, &points_[pos * ad]);
    }
}

std::size_t AnchorIndex::build(std::size_t begin, std::size_t end) {
    const std::size_t ad = active_.size();
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end, 0, 0, 0.0});
    centers_.resize((id + 1) * ad, 0.0);

    auto row = [&](std::size_t i) { return &points_[order_[i] * ad]; };
    auto sq_dist = [ad](const double* a, const double* b) {
        double s = 0.0;
        for (std::size_t c = 0; c < ad; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
        return s;
    };

    double* center = &centers_[id * ad];
    for (std::size_t i = begin; i < end; ++i)
        for (std::size_t c = 0; c < ad; ++c) center[c] += row(i)[c];
    for (std::size_t c = 0; c < ad; ++c) center[c] /= static_cast<double>(end - begin);

    std::size_t far = begin;
    double radius2 = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double d = sq_dist(row(i), center);
        if (d > radius2) {
            radius2 = d;
            far = i;
        }
    }
    // the center is an average, so guard the radius against rounding
    nodes_[id].radius = std::sqrt(radius2) * (1.0 + 1e-12);
    if (end - begin <= leaf_size_ || radius2 == 0.0) return id;

    std::size_t other = far;
    double spread = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double d = sq_dist(row(i), row(far));
        if (d > spread) {
            spread = d;
            other = i;
        }
    }
    std::vector<double> dir(ad);
    const double* p = row(far);
    const double* q = row(other);
    for (std::size_t c = 0; c < ad; ++c) dir[c] = q[c] - p[c];

    const std::size_t mid = begin + (end - begin) / 2;
    auto proj = [&](std::size_t anchor) {
        const double* r = &points_[anchor * ad];
        double s = 0.0;
        for (std::size_t c = 0; c < ad; ++c) s += r[c] * dir[c];
        return s;
    };
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return proj(a) < proj(b); });
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

AnchorIndex::Layer AnchorIndex::prepare(std::span<const double> values) const {
    if (values.size() != anchors_.size())
        throw InvalidInput("value layer size does not match anchor count");
    Layer layer;
    layer.values.resize(values.size());
    for (std::size_t pos = 0; pos < order_.size(); ++pos) layer.values[pos] = values[order_[pos]];
    layer.minima.assign(nodes_.size(), std::numeric_limits<double>::infinity());
    // children always have larger ids than their parent
    for (std::size_t id = nodes_.size(); id-- > 0;) {
        const Node& n = nodes_[id];
        if (n.leaf()) {
            for (std::size_t pos = n.begin; pos < n.end; ++pos)
                layer.minima[id] = std::min(layer.minima[id], layer.values[pos]);
        } else {
            layer.minima[id] = std::min(layer.minima[n.left], layer.minima[n.right]);
        }
    }
    return layer;
}

double AnchorIndex::center_distance(std::size_t node, const double* x) const {
    const std::size_t ad = active_.size();
    const double* c = &centers_[node * ad];
    double sq = 0.0;
    for (std::size_t i = 0; i < ad; ++i) sq += (x[i] - c[i]) * (x[i] - c[i]);
    return std::sqrt(sq);
}

double AnchorIndex::point_sq_distance(std::size_t pos, const double* x) const {
    const std::size_t ad = active_.size();
    const double* p = &points_[pos * ad];
    double sq = 0.0;
    for (std::size_t i = 0; i < ad; ++i) sq += (p[i] - x[i]) * (p[i] - x[i]);
    return sq;
}

double AnchorIndex::frozen_offset(const double* x) const {
    double sq = 0.0;
    for (std::size_t i = 0; i < fixed_.size(); ++i) {
        const double g = x[fixed_[i]] - fixed_values_[i];
        sq += g * g;
    }
    return sq;
}

void AnchorIndex::visit(std::size_t pos, Query& q) const {
    const double d = std::sqrt(point_sq_distance(pos, q.x) + q.offset);
    for (std::size_t j = 0; j < q.count; ++j) {
        if (!q.live[j]) continue;
        const double cand = q.values[j][pos] + q.lipschitz * d;
        if (cand < q.best[j]) {
            q.best[j] = cand;
            q.limit[j] = threshold(cand);
            if (q.argmin) q.argmin[j] = pos;
            if (q.cutoffs && cand <= q.cutoffs[j]) {
                q.live[j] = 0;
                --q.open;
            }
        }
    }
}

void AnchorIndex::search(std::size_t node, double dc, Query& q) const {
    const Node& n = nodes_[node];
    // distances carry rounding error relative to their magnitude
    const double gap = std::max(0.0, dc - n.radius - kSlack * (dc + n.radius));
    const double pen =
        q.lipschitz * (q.offset == 0.0 ? gap : std::sqrt(gap * gap + q.offset));
    bool useful = false;
    for (std::size_t j = 0; j < q.count && !useful; ++j)
        useful = q.live[j] && q.minima[j][node] + pen <= q.limit[j];
    if (!useful) return;

    if (n.leaf()) {
        for (std::size_t pos = n.begin; pos < n.end; ++pos) {
            // triangle inequality through the leaf center
            const double tri = std::max(
                0.0, std::abs(dc - leaf_distance_[pos]) - kSlack * (dc + leaf_distance_[pos]));
            const double lower =
                q.lipschitz * (q.offset == 0.0 ? tri : std::sqrt(tri * tri + q.offset));
            bool wanted = false;
            for (std::size_t j = 0; j < q.count && !wanted; ++j)
                wanted = q.live[j] && q.values[j][pos] + lower <= q.limit[j];
            if (!wanted) continue;
            visit(pos, q);
            if (q.open == 0) return;
        }
        return;
    }
    const double dl = center_distance(n.left, q.x);
    const double dr = center_distance(n.right, q.x);
    if (dl - nodes_[n.left].radius <= dr - nodes_[n.right].radius) {
        search(n.left, dl, q);
        if (q.open > 0) search(n.right, dr, q);
    } else {
        search(n.right, dr, q);
        if (q.open > 0) search(n.left, dl, q);
    }
}

void AnchorIndex::query(std::span<const Layer* const> layers, double lipschitz, const State& x,
                        std::span<double> out, const Probe& probe) const {
    if (static_cast<std::size_t>(x.size()) != dim_)
        throw InvalidInput("query point has wrong dimension");
    const std::size_t count = layers.size();
    if (out.size() != count) throw InvalidInput("one output per layer is required");
    if (!probe.cutoffs.empty() && probe.cutoffs.size() != count)
        throw InvalidInput("one cutoff per layer is required");
    if (!probe.argmin.empty() && probe.argmin.size() != count)
        throw InvalidInput("one argmin slot per layer is required");
    for (const Layer* layer : layers)
        if (layer->values.size() != order_.size() || layer->minima.size() != nodes_.size())
            throw InvalidInput("layer was not prepared by this index");

    // one allocation per query for all scratch arrays
    std::vector<double> scratch(active_.size() + count);
    std::vector<const double*> arrays(2 * count);
    std::vector<unsigned char> live(count, 1);
    double* active = scratch.data();
    double* limit = active + active_.size();
    for (std::size_t i = 0; i < active_.size(); ++i)
        active[i] = x[static_cast<Eigen::Index>(active_[i])];
    for (std::size_t j = 0; j < count; ++j) {
        arrays[j] = layers[j]->values.data();
        arrays[count + j] = layers[j]->minima.data();
    }
    std::fill(out.begin(), out.end(), std::numeric_limits<double>::infinity());
    std::fill(limit, limit + count, std::numeric_limits<double>::infinity());
    std::fill(probe.argmin.begin(), probe.argmin.end(), std::size_t{0});

    Query q{active,
            frozen_offset(x.data()),
            lipschitz,
            count,
            arrays.data(),
            arrays.data() + count,
            out.data(),
            limit,
            live.data(),
            probe.cutoffs.empty() ? nullptr : probe.cutoffs.data(),
            probe.argmin.empty() ? nullptr : probe.argmin.data(),
            count};
    for (const std::size_t id : probe.seeds) {
        if (q.open == 0) break;
        if (id >= order_.size()) throw InvalidInput("seed is not an anchor id");
        visit(position_[id], q);
    }
    if (q.open > 0) search(0, center_distance(0, active), q);
    for (auto& a : probe.argmin) a = order_[a];
}

double AnchorIndex::query(const Layer& layer, double lipschitz, const State& x) const {
    const Layer* layers[1] = {&layer};
    double out[1];
    query(layers, lipschitz, x, out);
    return out[0];
}

double AnchorIndex::query_linear(std::span<const double> values, double lipschitz,
                                 const State& x) const {
    if (static_cast<std::size_t>(x.size()) != dim_)
        throw InvalidInput("query point has wrong dimension");
    if (values.size() != anchors_.size())
        throw InvalidInput("value layer size does not match anchor count");
    std::vector<double> active(active_.size());
    for (std::size_t i = 0; i < active_.size(); ++i)
        active[i] = x[static_cast<Eigen::Index>(active_[i])];
    const double offset = frozen_offset(x.data());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t pos = 0; pos < order_.size(); ++pos) {
        const double cand =
            values[order_[pos]] + lipschitz * std::sqrt(point_sq_distance(pos, active.data()) + offset);
        if (cand < best) best = cand;
    }
    return best;
}

}  // namespace cfastar
