#pragma once

#include "vugsim/common.hpp"

#include <array>
#include <memory>
#include <optional>
#include <vector>

namespace vugsim {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned rectangular domain, meters.
struct Box {
    Point lo{0.0, 0.0};
    Point hi{1.0, 1.0};

    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    double area() const { return width() * height(); }
    bool contains(const Point& p, double tol = 0.0) const
    {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol;
    }
};

/// A resolved (discrete) fracture: a polyline with aperture, permeability and porosity.
struct Fracture {
    std::vector<Point> polyline;
    double aperture = 1e-3;        ///< d_s, meters
    double permeability = 8.2606e-8;  ///< intrinsic fracture permeability
    double porosity = 1.0;
};

struct FractureNetwork {
    std::vector<Fracture> fractures;

    std::size_t size() const { return fractures.size(); }
    bool empty() const { return fractures.empty(); }

    /// Throws ValidationError on degenerate polylines or non-physical properties.
    void validate() const;
};

/// Side bits for boundary-node flags. Corner nodes carry two bits.
enum Side : unsigned {
    kLeft = 1u,
    kRight = 2u,
    kBottom = 4u,
    kTop = 8u,
};

struct Edge {
    std::array<Index, 2> nodes{};
    std::array<Index, 2> triangles{-1, -1};  ///< second is -1 on the domain boundary
};

/// Conforming P1 triangulation. When built from a lattice, cell (i, j) owns triangles 2c and 2c+1
/// with c = j * nx + i.
class FineMesh {
public:
    FineMesh() = default;

    /// Arbitrary triangulation. Triangles are reoriented counterclockwise; fracture chains reference
    /// node pairs and are resolved to edge ids.
    static FineMesh from_triangles(std::vector<Point> nodes, std::vector<std::array<Index, 3>> triangles,
                                   const std::vector<std::vector<std::array<Index, 2>>>& fracture_node_pairs = {});

    Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
    Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
    Index num_edges() const { return static_cast<Index>(edges_.size()); }

    const std::vector<Point>& nodes() const { return nodes_; }
    const Point& node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<std::array<Index, 3>>& triangles() const { return triangles_; }
    const std::array<Index, 3>& triangle(Index t) const { return triangles_[static_cast<std::size_t>(t)]; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(Index e) const { return edges_[static_cast<std::size_t>(e)]; }

    /// Edge id for an unordered node pair, or -1.
    Index find_edge(Index a, Index b) const;

    unsigned boundary_flags(Index node) const { return boundary_flags_[static_cast<std::size_t>(node)]; }
    bool on_boundary(Index node) const { return boundary_flags(node) != 0u; }

    /// Ordered edge chain for each fracture of the network the mesh was built with.
    const std::vector<std::vector<Index>>& fracture_edges() const { return fracture_edges_; }
    const std::vector<Index>& fracture_edges(Index fracture) const
    {
        return fracture_edges_[static_cast<std::size_t>(fracture)];
    }

    double signed_area(Index t) const;
    double area(Index t) const { return signed_area(t); }
    double edge_length(Index e) const;
    double h_min() const { return h_min_; }
    const Box& bounds() const { return bounds_; }

    bool is_lattice() const { return nx_ > 0; }
    Index nx() const { return nx_; }
    Index ny() const { return ny_; }
    Index lattice_node(Index i, Index j) const { return j * (nx_ + 1) + i; }

private:
    friend FineMesh build_fine_mesh(const Box&, Index, Index, const FractureNetwork&);

    void finalize(const std::vector<std::vector<std::array<Index, 2>>>& fracture_node_pairs);

    std::vector<Point> nodes_;
    std::vector<std::array<Index, 3>> triangles_;
    std::vector<Edge> edges_;
    std::vector<unsigned> boundary_flags_;
    std::vector<std::vector<Index>> fracture_edges_;
    std::vector<std::vector<std::pair<Index, Index>>> node_edges_;  // node -> (neighbor, edge id)
    Box bounds_{};
    double h_min_ = 0.0;
    Index nx_ = 0;
    Index ny_ = 0;
};

/// Structured node lattice with fractures snapped to lattice-aligned edge chains; each cell is split
/// along a diagonal that does not cross a fracture.
FineMesh build_fine_mesh(const Box& domain, Index nx, Index ny, const FractureNetwork& network);

/// Nested rectangular coarse grid over a lattice fine mesh.
class CoarseGrid {
public:
    CoarseGrid(std::shared_ptr<const FineMesh> mesh, Index mx, Index my);

    const FineMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const FineMesh>& mesh_ptr() const { return mesh_; }

    Index mx() const { return mx_; }
    Index my() const { return my_; }
    /// Fine cells per coarse block along x / y.
    Index ratio_x() const { return rx_; }
    Index ratio_y() const { return ry_; }
    double block_size() const { return block_size_; }

    Index num_nodes() const { return (mx_ + 1) * (my_ + 1); }
    Index num_blocks() const { return mx_ * my_; }
    Index node_id(Index I, Index J) const { return J * (mx_ + 1) + I; }
    Index block_id(Index I, Index J) const { return J * mx_ + I; }
    Point node(Index id) const;
    /// Fine lattice node coinciding with coarse node `id`.
    Index fine_node(Index id) const;

    const std::vector<Index>& block_triangles(Index block) const
    {
        return block_triangles_[static_cast<std::size_t>(block)];
    }
    const std::vector<Index>& node_blocks(Index node) const { return node_blocks_[static_cast<std::size_t>(node)]; }
    Index triangle_block(Index t) const { return triangle_block_[static_cast<std::size_t>(t)]; }

private:
    std::shared_ptr<const FineMesh> mesh_;
    Index mx_;
    Index my_;
    Index rx_ = 0;
    Index ry_ = 0;
    double block_size_ = 0.0;
    std::vector<std::vector<Index>> block_triangles_;
    std::vector<std::vector<Index>> node_blocks_;
    std::vector<Index> triangle_block_;
};

CoarseGrid build_coarse_grid(std::shared_ptr<const FineMesh> mesh, Index mx, Index my);

/// Local submesh of the coarse neighborhood omega_i = union of blocks touching x_i.
struct CoarseNeighborhood {
    Index center = -1;
    std::vector<Index> blocks;
    std::vector<Index> triangles;        ///< global triangle ids
    std::vector<Index> local_to_global;  ///< local node -> global node, ascending
    std::vector<Index> global_to_local;  ///< global node -> local node or -1
    std::vector<Index> boundary_nodes;   ///< global ids on the boundary of omega, ascending
    std::vector<Index> fracture_edges;   ///< global edge ids with at least one adjacent triangle in omega
    std::vector<Index> edge_fracture;    ///< fracture id per entry of fracture_edges
    std::array<Index, 4> lattice_range{};  ///< i0, i1, j0, j1 (inclusive fine-lattice indices)

    Index num_nodes() const { return static_cast<Index>(local_to_global.size()); }
    Index local(Index global) const { return global_to_local[static_cast<std::size_t>(global)]; }
    bool contains(Index global) const { return local(global) >= 0; }
};

CoarseNeighborhood neighborhood(const CoarseGrid& grid, Index node_id);

/// chi^{omega_i} for every coarse node, as full-length fine nodal arrays (piecewise-bilinear hats).
std::vector<Vector> partition_of_unity(const CoarseGrid& grid);

}  // namespace vugsim
