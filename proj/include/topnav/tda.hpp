#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "topnav/common.hpp"

namespace topnav {

/// N points in R^n, one per row. source_indices optionally links each point back
/// to the trajectory sample it came from.
struct PointCloud {
    Matrix points;
    std::vector<std::size_t> source_indices;

    std::size_t size() const noexcept { return points.rows; }
    std::size_t dim() const noexcept { return points.cols; }
};

/// Edge (i, j) with i < j.
struct Edge {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    auto operator<=>(const Edge&) const = default;
};

/// One birth/death pair. Finite pairs carry the edges whose lengths equal their
/// birth and death values; H0 births have no edge (all vertices enter at 0) and
/// the essential H0 class has no death edge.
struct PersistencePair {
    int dim = 0;
    double birth = 0.0;
    double death = 0.0;
    std::optional<Edge> birth_edge;
    std::optional<Edge> death_edge;

    bool essential() const noexcept { return death == std::numeric_limits<double>::infinity(); }
    double lifetime() const noexcept { return death - birth; }
};

/// Pairs of all computed dimensions in a fixed order: H0 by ascending death with
/// the essential class last, then H1 by ascending (birth, death). Pairs with
/// zero lifetime are not reported.
struct PersistenceDiagram {
    std::vector<PersistencePair> pairs;
    int max_dim = 1;
    /// Enclosing radius; the filtration is truncated here.
    double threshold = 0.0;

    std::size_t size() const noexcept { return pairs.size(); }
    /// Indices of the finite pairs in `dim`, in diagram order.
    std::vector<std::size_t> finite_indices(int dim) const;
    /// Lifetimes of the finite pairs in `dim`, in diagram order.
    Vec lifetimes(int dim) const;
};

/// Gradient of an edge length: d|p_i - p_j| / dp_i = direction, / dp_j = -direction.
struct EdgeGradient {
    Edge edge;
    Vec direction;
};

struct PairGradient {
    std::optional<EdgeGradient> birth;
    std::optional<EdgeGradient> death;
};

struct DiagramGradient {
    std::size_t num_points = 0;
    std::size_t dim = 0;
    std::vector<PairGradient> pairs;  // aligned with PersistenceDiagram::pairs
};

struct GeneralPositionReport {
    std::vector<Edge> coincident;                      // point pairs closer than tol
    std::vector<std::pair<Edge, Edge>> equidistant;    // edges with lengths within tol
    bool clean() const noexcept { return coincident.empty() && equidistant.empty(); }
};

/// Vietoris-Rips persistence in dimensions 0..max_dim (max_dim is 0 or 1).
///
/// A simplex enters at its diameter, so an edge enters at its length (not half
/// of it). Simplices are totally ordered by (value, dimension, lexicographic
/// vertex tuple). H0 comes from union-find over sorted edges; H1 from a
/// cohomology reduction of the edge coboundaries, truncated at the enclosing
/// radius where the complex becomes a cone and all H1 classes have died.
/// The death edge of an H1 pair is the longest edge of the killing triangle,
/// ties broken by the lexicographically smallest vertex pair.
PersistenceDiagram rips_persistence(const PointCloud& cloud, int max_dim = 1);

/// Reports coincident points and pairs of equal pairwise distances. Advisory only.
GeneralPositionReport check_general_position(const PointCloud& cloud, double tol);

/// Sparse derivatives of every birth and death with respect to the point
/// coordinates. Throws SingularityError if a critical edge has zero length.
DiagramGradient diagram_gradient(const PointCloud& cloud, const PersistenceDiagram& diag);

/// Dense dL/dpoints from per-pair seeds: row k of dL_dpairs is
/// (dL/dbirth_k, dL/ddeath_k).
Matrix pullback(const DiagramGradient& dgrad, const Matrix& dL_dpairs);

double edge_length(const PointCloud& cloud, Edge e);

}  // namespace topnav
