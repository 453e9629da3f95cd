#include "topnav/tda.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <queue>
#include <unordered_map>

#include "union_find.hpp"

namespace topnav {

std::vector<std::size_t> PersistenceDiagram::finite_indices(int dim) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].dim == dim && !pairs[k].essential()) out.push_back(k);
    }
    return out;
}

Vec PersistenceDiagram::lifetimes(int dim) const {
    Vec out;
    for (const auto& p : pairs) {
        if (p.dim == dim && !p.essential()) out.push_back(p.lifetime());
    }
    return out;
}

double edge_length(const PointCloud& cloud, Edge e) {
    auto a = cloud.points.row(e.i);
    auto b = cloud.points.row(e.j);
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
    }
    return std::sqrt(s);
}

namespace {

class DistanceMatrix {
public:
    explicit DistanceMatrix(const PointCloud& cloud) : n_(cloud.size()), d_(n_ * n_, 0.0) {
        for (std::uint32_t i = 0; i < n_; ++i) {
            for (std::uint32_t j = i + 1; j < n_; ++j) {
                const double v = edge_length(cloud, Edge{i, j});
                d_[i * n_ + j] = v;
                d_[j * n_ + i] = v;
            }
        }
    }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    std::size_t size() const { return n_; }

    /// min over points of the max distance from that point.
    double enclosing_radius() const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_; ++i) {
            double m = 0.0;
            for (std::size_t j = 0; j < n_; ++j) m = std::max(m, d_[i * n_ + j]);
            best = std::min(best, m);
        }
        return n_ == 0 ? 0.0 : best;
    }

private:
    std::size_t n_;
    std::vector<double> d_;
};

struct SortedEdge {
    double length;
    Edge e;
};

bool edge_key_less(double la, Edge a, double lb, Edge b) {
    if (la != lb) return la < lb;
    return a < b;
}

struct Triangle {
    double diam;
    std::uint64_t code;  // (i * N + j) * N + k with i < j < k; numeric order is lexicographic
    bool operator==(const Triangle& o) const { return diam == o.diam && code == o.code; }
};

bool triangle_less(const Triangle& a, const Triangle& b) {
    if (a.diam != b.diam) return a.diam < b.diam;
    return a.code < b.code;
}

struct Neighbor {
    double dist;
    std::uint32_t k;
};

class H1Reducer {
public:
    H1Reducer(const DistanceMatrix& dist, double threshold)
        : d_(dist), n_(dist.size()), threshold_(threshold) {
        pivots_.reserve(n_ * 8);
        build_neighbors();
    }

    std::uint64_t encode(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        return (a * n_ + b) * n_ + c;
    }

    std::array<std::uint32_t, 3> decode(std::uint64_t code) const {
        const auto c = static_cast<std::uint32_t>(code % n_);
        code /= n_;
        const auto b = static_cast<std::uint32_t>(code % n_);
        const auto a = static_cast<std::uint32_t>(code / n_);
        return {a, b, c};
    }

    std::optional<Triangle> min_coface(Edge e) const {
        const double len = d_(e.i, e.j);
        std::optional<Triangle> best;
        for (std::uint32_t k = 0; k < n_; ++k) {
            if (k == e.i || k == e.j) continue;
            const double diam = std::max({len, d_(e.i, k), d_(e.j, k)});
            // codes increase with k for a fixed edge, so the first minimum wins ties
            if (diam <= threshold_ && (!best || diam < best->diam)) best = Triangle{diam, encode(e.i, e.j, k)};
        }
        return best;
    }

    /// The coface of e with the same diameter and smallest code, if any.
    std::optional<Triangle> zero_apparent_coface(Edge e) const {
        const double len = d_(e.i, e.j);
        // Few close neighbors: search them. Many: a hit comes early in index order.
        const auto within = [&](std::uint32_t v) {
            const auto& list = neighbors_[v];
            return static_cast<std::size_t>(
                std::upper_bound(list.begin(), list.end(), len,
                                 [](double x, const Neighbor& nb) { return x < nb.dist; }) -
                list.begin());
        };
        const std::size_t ci = within(e.i), cj = within(e.j);
        const std::uint32_t v = ci <= cj ? e.i : e.j;
        const std::uint32_t w = ci <= cj ? e.j : e.i;
        const std::size_t count = std::min(ci, cj);
        if (count <= kNeighborScan) {
            std::uint32_t best = static_cast<std::uint32_t>(n_);
            const auto& list = neighbors_[v];
            for (std::size_t m = 0; m < count; ++m) {
                const std::uint32_t k = list[m].k;
                if (k != w && k < best && d_(w, k) <= len) best = k;
            }
            if (best == n_) return std::nullopt;
            return Triangle{len, encode(e.i, e.j, best)};
        }
        for (std::uint32_t k = 0; k < n_; ++k) {
            if (k == e.i || k == e.j) continue;
            if (d_(e.i, k) <= len && d_(e.j, k) <= len) return Triangle{len, encode(e.i, e.j, k)};
        }
        return std::nullopt;
    }

    /// Longest edge of a triangle; ties resolved by the smallest vertex pair.
    Edge max_facet(std::uint64_t code) const {
        const auto v = decode(code);
        const Edge candidates[3] = {{v[0], v[1]}, {v[0], v[2]}, {v[1], v[2]}};
        Edge best = candidates[0];
        double best_len = d_(best.i, best.j);
        for (int c = 1; c < 3; ++c) {
            const double l = d_(candidates[c].i, candidates[c].j);
            if (l > best_len) {
                best = candidates[c];
                best_len = l;
            }
        }
        return best;
    }

    /// Largest facet in the filtration order (value, then lexicographic).
    Edge max_facet_in_order(std::uint64_t code) const {
        const auto v = decode(code);
        const Edge candidates[3] = {{v[0], v[1]}, {v[0], v[2]}, {v[1], v[2]}};
        Edge best = candidates[0];
        for (int c = 1; c < 3; ++c) {
            if (edge_key_less(d_(best.i, best.j), best, d_(candidates[c].i, candidates[c].j), candidates[c])) {
                best = candidates[c];
            }
        }
        return best;
    }

    /// Reduce the coboundary of `e` against the columns already stored. Returns
    /// the pivot triangle, or nullopt if the column vanishes.
    std::optional<Triangle> reduce(Edge e) {
        if (auto t = zero_apparent_coface(e)) {
            if (max_facet_in_order(t->code) == e) {
                pivots_.emplace(t->code, Column{e, -1});
                return t;
            }
        }
        // An unreduced column whose lowest entry is not yet claimed is already reduced.
        const auto lowest = min_coface(e);
        if (!lowest) return std::nullopt;
        if (!pivots_.count(lowest->code)) {
            pivots_.emplace(lowest->code, Column{e, -1});
            return lowest;
        }
        auto column = std::make_unique<WorkingColumn>(*this);
        column->add_coboundary(e, nullptr);
        while (true) {
            auto pivot = column->pivot();
            if (!pivot) return std::nullopt;
            auto it = pivots_.find(pivot->code);
            if (it == pivots_.end()) {
                const int slot = static_cast<int>(reduced_.size());
                reduced_.push_back(ReducedColumn{{*pivot}, std::move(column)});
                pivots_.emplace(pivot->code, Column{e, slot});
                return pivot;
            }
            const Column& other = it->second;
            if (other.slot < 0) {
                column->add_coboundary(other.edge, &*pivot);
            } else {
                column->add_reduced(other.slot);
            }
        }
    }

private:
    struct Column {
        Edge edge;
        int slot;  // -1: the column is just the coboundary of `edge`
    };

    static constexpr std::size_t kNeighborScan = 32;

    void build_neighbors() {
        neighbors_.resize(n_);
        for (std::uint32_t v = 0; v < n_; ++v) {
            auto& list = neighbors_[v];
            for (std::uint32_t k = 0; k < n_; ++k) {
                if (k != v && d_(v, k) <= threshold_) list.push_back(Neighbor{d_(v, k), k});
            }
            std::sort(list.begin(), list.end(), [](const Neighbor& x, const Neighbor& y) {
                if (x.dist != y.dist) return x.dist < y.dist;
                return x.k < y.k;
            });
        }
    }

    // Cofaces of one edge in increasing filtration order, produced lazily by
    // merging the sorted neighbor lists of its endpoints: vertex k completes a
    // triangle once it has been seen from both ends.
    class CofaceStream {
    public:
        CofaceStream(const H1Reducer& r, Edge e)
            : r_(&r), e_(e), len_(r.d_(e.i, e.j)), seen_((r.n_ + 63) / 64, 0) {
            fill();
        }
        bool done() const { return pos_ >= batch_.size(); }
        const Triangle& head() const { return batch_[pos_]; }
        void advance() {
            if (++pos_ >= batch_.size()) fill();
        }

    private:
        const Neighbor* peek(std::size_t& which) const {
            const auto& a = r_->neighbors_[e_.i];
            const auto& b = r_->neighbors_[e_.j];
            const Neighbor* na = pa_ < a.size() ? &a[pa_] : nullptr;
            const Neighbor* nb = pb_ < b.size() ? &b[pb_] : nullptr;
            if (na && (!nb || na->dist <= nb->dist)) {
                which = 0;
                return na;
            }
            which = 1;
            return nb;
        }

        void fill() {
            batch_.clear();
            pos_ = 0;
            double level = -1.0;
            std::size_t which = 0;
            while (const Neighbor* ev = peek(which)) {
                if (level >= 0.0 && ev->dist > level) break;
                const Neighbor cur = *ev;
                (which == 0 ? pa_ : pb_)++;
                if (cur.k == e_.i || cur.k == e_.j) continue;
                std::uint64_t& word = seen_[cur.k / 64];
                const std::uint64_t bit = std::uint64_t{1} << (cur.k % 64);
                if (!(word & bit)) {
                    word |= bit;
                    continue;
                }
                const double diam = std::max(len_, cur.dist);
                if (level < 0.0) level = diam;
                batch_.push_back(Triangle{diam, r_->encode(e_.i, e_.j, cur.k)});
            }
            if (batch_.size() > 1) {
                std::sort(batch_.begin(), batch_.end(),
                          [](const Triangle& x, const Triangle& y) { return x.code < y.code; });
            }
        }

        const H1Reducer* r_;
        Edge e_;
        double len_;
        std::vector<std::uint64_t> seen_;
        std::size_t pa_ = 0, pb_ = 0;
        std::vector<Triangle> batch_;
        std::size_t pos_ = 0;
    };

    // Sum over Z/2 of coface streams and stored reduced columns, merged through
    // a binary min-heap of source heads.
    class WorkingColumn {
    public:
        explicit WorkingColumn(H1Reducer& r) : r_(r) {}

        /// Adds the coboundary of e, skipping entries below `from`.
        void add_coboundary(Edge e, const Triangle* from) {
            CofaceStream s(r_, e);
            if (from) {
                while (!s.done() && triangle_less(s.head(), *from)) s.advance();
            }
            if (s.done()) return;
            cofaces_.push_back(std::move(s));
            push(Source{cofaces_.back().head(), static_cast<int>(cofaces_.size() - 1), -1, 0});
        }

        /// Adds a stored reduced column from its pivot on.
        void add_reduced(int slot) { push(Source{r_.reduced_[static_cast<std::size_t>(slot)].entries[0], -1, slot, 0}); }

        /// Smallest entry with odd multiplicity, left in place.
        std::optional<Triangle> pivot() {
            while (!heap_.empty()) {
                const Triangle t = key(0);
                // any copy of the minimum forces a copy among the root's children
                const bool paired = (heap_.size() > 1 && key(1) == t) || (heap_.size() > 2 && key(2) == t);
                if (!paired) return t;
                advance_top();
                advance_top();
            }
            return std::nullopt;
        }

        /// Drops the current pivot and returns the next one.
        std::optional<Triangle> next_pivot() {
            if (!heap_.empty()) advance_top();
            return pivot();
        }

    private:
        struct Source {
            Triangle head;
            int coface;  // index into cofaces_, or -1
            int slot;    // stored reduced column, or -1
            std::size_t pos;
        };

        const Triangle& key(std::size_t pos) const { return heap_[pos].head; }
        bool less(std::size_t a, std::size_t b) const { return triangle_less(key(a), key(b)); }

        // Moves a source to its next entry; false once it is exhausted.
        bool step(Source& s) {
            if (s.coface >= 0) {
                auto& c = cofaces_[static_cast<std::size_t>(s.coface)];
                c.advance();
                if (c.done()) return false;
                s.head = c.head();
                return true;
            }
            if (!r_.extend(s.slot, ++s.pos)) return false;
            s.head = r_.reduced_[static_cast<std::size_t>(s.slot)].entries[s.pos];
            return true;
        }

        void push(Source s) {
            heap_.push_back(s);
            sift_up(heap_.size() - 1);
        }

        void advance_top() {
            if (!step(heap_[0])) {
                heap_[0] = heap_.back();
                heap_.pop_back();
            }
            if (!heap_.empty()) sift_down(0);
        }

        void sift_up(std::size_t pos) {
            while (pos > 0) {
                const std::size_t parent = (pos - 1) / 2;
                if (!less(pos, parent)) break;
                std::swap(heap_[pos], heap_[parent]);
                pos = parent;
            }
        }

        void sift_down(std::size_t pos) {
            const std::size_t size = heap_.size();
            while (true) {
                std::size_t best = pos;
                const std::size_t l = 2 * pos + 1, r = l + 1;
                if (l < size && less(l, best)) best = l;
                if (r < size && less(r, best)) best = r;
                if (best == pos) return;
                std::swap(heap_[pos], heap_[best]);
                pos = best;
            }
        }

        H1Reducer& r_;
        std::vector<CofaceStream> cofaces_;
        std::vector<Source> heap_;
    };

    // A finished column: its entries are generated on demand and memoized.
    struct ReducedColumn {
        std::vector<Triangle> entries;
        std::unique_ptr<WorkingColumn> rest;  // null once exhausted
    };

    /// Makes entry `pos` of a stored column available; false past its end.
    bool extend(int slot, std::size_t pos) {
        auto* col = &reduced_[static_cast<std::size_t>(slot)];
        while (col->entries.size() <= pos && col->rest) {
            auto next = col->rest->next_pivot();
            col = &reduced_[static_cast<std::size_t>(slot)];
            if (next) {
                col->entries.push_back(*next);
            } else {
                col->rest.reset();
            }
        }
        return pos < col->entries.size();
    }

    const DistanceMatrix& d_;
    std::uint64_t n_;
    double threshold_;
    std::unordered_map<std::uint64_t, Column> pivots_;
    std::vector<ReducedColumn> reduced_;
    std::vector<std::vector<Neighbor>> neighbors_;
};

}  // namespace

PersistenceDiagram rips_persistence(const PointCloud& cloud, int max_dim) {
    const std::size_t n = cloud.size();
    if (n == 0) throw InputError("rips_persistence: empty point cloud");
    if (max_dim < 0 || max_dim > 1) throw InputError("rips_persistence: max_dim must be 0 or 1");
    if (!all_finite(cloud.points.data)) throw InputError("rips_persistence: non-finite coordinates");

    const DistanceMatrix dist(cloud);
    const double threshold = dist.enclosing_radius();

    std::vector<SortedEdge> edges;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j) {
            const double l = dist(i, j);
            if (l <= threshold) edges.push_back({l, Edge{i, j}});
        }
    }
    // generated in lexicographic order, so a stable sort by length gives the full key order
    std::stable_sort(edges.begin(), edges.end(),
                     [](const SortedEdge& a, const SortedEdge& b) { return a.length < b.length; });

    PersistenceDiagram diag;
    diag.max_dim = max_dim;
    diag.threshold = threshold;

    detail::UnionFind components(n);
    std::vector<char> tree_edge(edges.size(), 0);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const Edge e = edges[k].e;
        if (components.unite(e.i, e.j)) {
            tree_edge[k] = 1;
            if (edges[k].length > 0.0) {
                diag.pairs.push_back(PersistencePair{0, 0.0, edges[k].length, std::nullopt, e});
            }
        }
    }
    diag.pairs.push_back(
        PersistencePair{0, 0.0, std::numeric_limits<double>::infinity(), std::nullopt, std::nullopt});

    if (max_dim >= 1 && n >= 3) {
        H1Reducer reducer(dist, threshold);
        std::vector<PersistencePair> h1;
        for (std::size_t k = edges.size(); k-- > 0;) {
            if (tree_edge[k]) continue;  // cleared: these columns reduce to zero
            const Edge e = edges[k].e;
            const auto pivot = reducer.reduce(e);
            if (!pivot) {
                h1.push_back(PersistencePair{1, edges[k].length, std::numeric_limits<double>::infinity(), e,
                                             std::nullopt});
            } else if (pivot->diam > edges[k].length) {
                h1.push_back(PersistencePair{1, edges[k].length, pivot->diam, e, reducer.max_facet(pivot->code)});
            }
        }
        std::sort(h1.begin(), h1.end(), [](const PersistencePair& a, const PersistencePair& b) {
            if (a.birth != b.birth) return a.birth < b.birth;
            if (a.death != b.death) return a.death < b.death;
            return a.birth_edge < b.birth_edge;
        });
        diag.pairs.insert(diag.pairs.end(), h1.begin(), h1.end());
    }
    return diag;
}

GeneralPositionReport check_general_position(const PointCloud& cloud, double tol) {
    GeneralPositionReport report;
    const std::size_t n = cloud.size();
    std::vector<SortedEdge> edges;
    edges.reserve(n * (n > 0 ? n - 1 : 0) / 2);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j) {
            const double l = edge_length(cloud, Edge{i, j});
            if (l < tol) report.coincident.push_back(Edge{i, j});
            edges.push_back({l, Edge{i, j}});
        }
    }
    // generated in lexicographic order, so a stable sort by length gives the full key order
    std::stable_sort(edges.begin(), edges.end(),
                     [](const SortedEdge& a, const SortedEdge& b) { return a.length < b.length; });
    for (std::size_t k = 1; k < edges.size(); ++k) {
        if (edges[k].length - edges[k - 1].length < tol) {
            report.equidistant.emplace_back(edges[k - 1].e, edges[k].e);
        }
    }
    return report;
}

namespace {

EdgeGradient edge_gradient(const PointCloud& cloud, Edge e) {
    const double len = edge_length(cloud, e);
    if (!(len > 0.0)) {
        throw SingularityError("critical edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                               ") has zero length");
    }
    auto a = cloud.points.row(e.i);
    auto b = cloud.points.row(e.j);
    EdgeGradient g{e, Vec(a.size())};
    for (std::size_t c = 0; c < a.size(); ++c) g.direction[c] = (a[c] - b[c]) / len;
    return g;
}

}  // namespace

DiagramGradient diagram_gradient(const PointCloud& cloud, const PersistenceDiagram& diag) {
    DiagramGradient out;
    out.num_points = cloud.size();
    out.dim = cloud.dim();
    out.pairs.resize(diag.pairs.size());
    for (std::size_t k = 0; k < diag.pairs.size(); ++k) {
        const auto& p = diag.pairs[k];
        if (p.essential()) continue;
        if (p.birth_edge) out.pairs[k].birth = edge_gradient(cloud, *p.birth_edge);
        if (p.death_edge) out.pairs[k].death = edge_gradient(cloud, *p.death_edge);
    }
    return out;
}

Matrix pullback(const DiagramGradient& dgrad, const Matrix& dL_dpairs) {
    if (dL_dpairs.rows != dgrad.pairs.size() || (dL_dpairs.rows > 0 && dL_dpairs.cols != 2)) {
        throw InputError("pullback: expected " + std::to_string(dgrad.pairs.size()) +
                         " x 2 pair seeds, got " + std::to_string(dL_dpairs.rows) + " x " +
                         std::to_string(dL_dpairs.cols));
    }
    Matrix out(dgrad.num_points, dgrad.dim);
    auto scatter = [&](const EdgeGradient& g, double w) {
        if (w == 0.0) return;
        for (std::size_t c = 0; c < dgrad.dim; ++c) {
            out(g.edge.i, c) += w * g.direction[c];
            out(g.edge.j, c) -= w * g.direction[c];
        }
    };
    for (std::size_t k = 0; k < dgrad.pairs.size(); ++k) {
        if (dgrad.pairs[k].birth) scatter(*dgrad.pairs[k].birth, dL_dpairs(k, 0));
        if (dgrad.pairs[k].death) scatter(*dgrad.pairs[k].death, dL_dpairs(k, 1));
    }
    return out;
}

}  // namespace topnav
