#include "vugsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace vugsim {

void FractureNetwork::validate() const
{
    for (std::size_t f = 0; f < fractures.size(); ++f) {
        const auto& fr = fractures[f];
        std::ostringstream where;
        where << "fractures[" << f << "]";
        require(fr.polyline.size() >= 2, where.str() + ": polyline needs at least 2 points");
        for (std::size_t k = 1; k < fr.polyline.size(); ++k) {
            const double dx = fr.polyline[k].x - fr.polyline[k - 1].x;
            const double dy = fr.polyline[k].y - fr.polyline[k - 1].y;
            require(std::hypot(dx, dy) > 0.0, where.str() + ": zero-length segment");
        }
        require(fr.aperture > 0.0, where.str() + ".aperture must be positive");
        require(fr.permeability > 0.0, where.str() + ".permeability must be positive");
        require(fr.porosity > 0.0 && fr.porosity <= 1.0, where.str() + ".porosity must lie in (0, 1]");
    }
}

double FineMesh::signed_area(Index t) const
{
    const auto& tri = triangle(t);
    const Point& a = node(tri[0]);
    const Point& b = node(tri[1]);
    const Point& c = node(tri[2]);
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double FineMesh::edge_length(Index e) const
{
    const auto& ed = edge(e);
    const Point& a = node(ed.nodes[0]);
    const Point& b = node(ed.nodes[1]);
    return std::hypot(b.x - a.x, b.y - a.y);
}

Index FineMesh::find_edge(Index a, Index b) const
{
    for (const auto& [nb, id] : node_edges_[static_cast<std::size_t>(a)]) {
        if (nb == b) {
            return id;
        }
    }
    return -1;
}

FineMesh FineMesh::from_triangles(std::vector<Point> nodes, std::vector<std::array<Index, 3>> triangles,
                                  const std::vector<std::vector<std::array<Index, 2>>>& fracture_node_pairs)
{
    require(!nodes.empty() && !triangles.empty(), "mesh needs nodes and triangles");
    FineMesh mesh;
    mesh.nodes_ = std::move(nodes);
    mesh.triangles_ = std::move(triangles);
    for (auto& tri : mesh.triangles_) {
        for (Index v : tri) {
            require(v >= 0 && v < mesh.num_nodes(), "triangle references a nonexistent node");
        }
    }
    Box box{mesh.nodes_.front(), mesh.nodes_.front()};
    for (const auto& p : mesh.nodes_) {
        box.lo.x = std::min(box.lo.x, p.x);
        box.lo.y = std::min(box.lo.y, p.y);
        box.hi.x = std::max(box.hi.x, p.x);
        box.hi.y = std::max(box.hi.y, p.y);
    }
    mesh.bounds_ = box;
    mesh.finalize(fracture_node_pairs);
    return mesh;
}

void FineMesh::finalize(const std::vector<std::vector<std::array<Index, 2>>>& fracture_node_pairs)
{
    for (Index t = 0; t < num_triangles(); ++t) {
        double a = signed_area(t);
        if (a < 0.0) {
            std::swap(triangles_[static_cast<std::size_t>(t)][1], triangles_[static_cast<std::size_t>(t)][2]);
            a = -a;
        }
        require(a > 0.0, "degenerate triangle " + std::to_string(t));
    }

    node_edges_.assign(nodes_.size(), {});
    edges_.clear();
    for (Index t = 0; t < num_triangles(); ++t) {
        const auto& tri = triangle(t);
        for (int k = 0; k < 3; ++k) {
            const Index a = tri[static_cast<std::size_t>(k)];
            const Index b = tri[static_cast<std::size_t>((k + 1) % 3)];
            const Index id = find_edge(a, b);
            if (id < 0) {
                Edge e;
                e.nodes = {std::min(a, b), std::max(a, b)};
                e.triangles = {t, -1};
                const Index new_id = num_edges();
                edges_.push_back(e);
                node_edges_[static_cast<std::size_t>(a)].emplace_back(b, new_id);
                node_edges_[static_cast<std::size_t>(b)].emplace_back(a, new_id);
            } else {
                auto& e = edges_[static_cast<std::size_t>(id)];
                require(e.triangles[1] < 0, "non-manifold edge in triangulation");
                e.triangles[1] = t;
            }
        }
    }

    h_min_ = std::numeric_limits<double>::infinity();
    for (Index e = 0; e < num_edges(); ++e) {
        h_min_ = std::min(h_min_, edge_length(e));
    }

    const double tol = 1e-12 * std::max(bounds_.width(), bounds_.height());
    boundary_flags_.assign(nodes_.size(), 0u);
    for (const auto& e : edges_) {
        if (e.triangles[1] >= 0) {
            continue;
        }
        for (Index v : e.nodes) {
            const Point& p = node(v);
            unsigned flags = 0u;
            if (std::abs(p.x - bounds_.lo.x) <= tol) flags |= kLeft;
            if (std::abs(p.x - bounds_.hi.x) <= tol) flags |= kRight;
            if (std::abs(p.y - bounds_.lo.y) <= tol) flags |= kBottom;
            if (std::abs(p.y - bounds_.hi.y) <= tol) flags |= kTop;
            boundary_flags_[static_cast<std::size_t>(v)] |= flags;
        }
    }

    std::vector<Index> owner(edges_.size(), -1);
    fracture_edges_.assign(fracture_node_pairs.size(), {});
    for (std::size_t f = 0; f < fracture_node_pairs.size(); ++f) {
        for (const auto& pair : fracture_node_pairs[f]) {
            const Index id = find_edge(pair[0], pair[1]);
            require(id >= 0, "fracture " + std::to_string(f) + " is not conforming to the mesh");
            if (owner[static_cast<std::size_t>(id)] >= 0) {
                throw ValidationError("fractures " + std::to_string(owner[static_cast<std::size_t>(id)]) + " and " +
                                      std::to_string(f) + " share a mesh edge; they are too close to distinguish");
            }
            owner[static_cast<std::size_t>(id)] = static_cast<Index>(f);
            fracture_edges_[f].push_back(id);
        }
    }
}

namespace {

struct LatticeNode {
    Index i;
    Index j;
    bool operator==(const LatticeNode& o) const { return i == o.i && j == o.j; }
};

enum Diagonal : signed char { kNone = 0, kRising = 1, kFalling = 2 };

Index required_cells(double extent, double segment_length)
{
    // Two lattice steps per shortest segment separates its endpoints after snapping.
    return static_cast<Index>(std::ceil(2.0 * extent / segment_length));
}

}  // namespace

FineMesh build_fine_mesh(const Box& domain, Index nx, Index ny, const FractureNetwork& network)
{
    require(nx >= 2 && ny >= 2, "fine mesh needs nx, ny >= 2");
    require(domain.width() > 0.0 && domain.height() > 0.0, "domain extent must be positive");
    network.validate();

    const double hx = domain.width() / static_cast<double>(nx);
    const double hy = domain.height() / static_cast<double>(ny);
    const double tol = 1e-9 * std::max(domain.width(), domain.height());

    auto snap = [&](const Point& p) {
        const auto i = static_cast<Index>(std::floor((p.x - domain.lo.x) / hx + 0.5));
        const auto j = static_cast<Index>(std::floor((p.y - domain.lo.y) / hy + 0.5));
        return LatticeNode{std::clamp<Index>(i, 0, nx), std::clamp<Index>(j, 0, ny)};
    };
    auto node_id = [&](const LatticeNode& n) { return n.j * (nx + 1) + n.i; };

    std::vector<signed char> diagonal(static_cast<std::size_t>(nx * ny), kNone);
    std::vector<std::vector<std::array<Index, 2>>> chains(network.size());

    for (std::size_t f = 0; f < network.size(); ++f) {
        const auto& poly = network.fractures[f].polyline;
        for (std::size_t k = 0; k < poly.size(); ++k) {
            if (!domain.contains(poly[k], tol)) {
                std::ostringstream msg;
                msg << "fractures[" << f << "] point " << k << " (" << poly[k].x << ", " << poly[k].y
                    << ") lies outside the domain";
                throw ValidationError(msg.str());
            }
        }
        auto& chain = chains[f];
        for (std::size_t k = 1; k < poly.size(); ++k) {
            const LatticeNode a = snap(poly[k - 1]);
            const LatticeNode b = snap(poly[k]);
            if (a == b) {
                const double len = std::hypot(poly[k].x - poly[k - 1].x, poly[k].y - poly[k - 1].y);
                std::ostringstream msg;
                msg << "fractures[" << f << "] segment " << k - 1 << " (length " << len
                    << ") collapses at this resolution; refine to at least nx=" << required_cells(domain.width(), len)
                    << ", ny=" << required_cells(domain.height(), len);
                throw ValidationError(msg.str());
            }
            const Index di = b.i - a.i;
            const Index dj = b.j - a.j;
            const Index steps = std::max(std::abs(di), std::abs(dj));
            LatticeNode cur = a;
            for (Index s = 1; s <= steps; ++s) {
                const double t = static_cast<double>(s) / static_cast<double>(steps);
                const LatticeNode next{
                    static_cast<Index>(std::floor(static_cast<double>(a.i) + t * static_cast<double>(di) + 0.5)),
                    static_cast<Index>(std::floor(static_cast<double>(a.j) + t * static_cast<double>(dj) + 0.5))};
                const Index si = next.i - cur.i;
                const Index sj = next.j - cur.j;
                if (si != 0 && sj != 0) {
                    const Index ci = std::min(cur.i, next.i);
                    const Index cj = std::min(cur.j, next.j);
                    auto& d = diagonal[static_cast<std::size_t>(cj * nx + ci)];
                    const signed char want = (si == sj) ? kRising : kFalling;
                    if (d == kNone || d == want) {
                        d = want;
                        chain.push_back({node_id(cur), node_id(next)});
                    } else {
                        // The cell is already split the other way: go around along the cell sides.
                        const LatticeNode mid{next.i, cur.j};
                        chain.push_back({node_id(cur), node_id(mid)});
                        chain.push_back({node_id(mid), node_id(next)});
                    }
                } else {
                    chain.push_back({node_id(cur), node_id(next)});
                }
                cur = next;
            }
        }
    }

    FineMesh mesh;
    mesh.nx_ = nx;
    mesh.ny_ = ny;
    mesh.bounds_ = domain;
    mesh.nodes_.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (Index j = 0; j <= ny; ++j) {
        for (Index i = 0; i <= nx; ++i) {
            mesh.nodes_.push_back({domain.lo.x + static_cast<double>(i) * hx, domain.lo.y + static_cast<double>(j) * hy});
        }
    }
    // Snap the far sides exactly onto the domain.
    for (Index j = 0; j <= ny; ++j) {
        mesh.nodes_[static_cast<std::size_t>(j * (nx + 1) + nx)].x = domain.hi.x;
    }
    for (Index i = 0; i <= nx; ++i) {
        mesh.nodes_[static_cast<std::size_t>(ny * (nx + 1) + i)].y = domain.hi.y;
    }

    mesh.triangles_.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
            const Index n00 = j * (nx + 1) + i;
            const Index n10 = n00 + 1;
            const Index n01 = n00 + nx + 1;
            const Index n11 = n01 + 1;
            if (diagonal[static_cast<std::size_t>(j * nx + i)] == kFalling) {
                mesh.triangles_.push_back({n00, n10, n01});
                mesh.triangles_.push_back({n10, n11, n01});
            } else {
                mesh.triangles_.push_back({n00, n10, n11});
                mesh.triangles_.push_back({n00, n11, n01});
            }
        }
    }
    mesh.finalize(chains);
    return mesh;
}

CoarseGrid::CoarseGrid(std::shared_ptr<const FineMesh> mesh, Index mx, Index my)
    : mesh_(std::move(mesh)), mx_(mx), my_(my)
{
    require(mesh_ != nullptr, "coarse grid needs a fine mesh");
    require(mesh_->is_lattice(), "coarse grid needs a lattice fine mesh");
    require(mx >= 1 && my >= 1, "coarse grid needs mx, my >= 1");
    const Index nx = mesh_->nx();
    const Index ny = mesh_->ny();
    if (nx % mx != 0) {
        throw ValidationError("coarse grid not nested: mx=" + std::to_string(mx) + " does not divide nx=" +
                              std::to_string(nx));
    }
    if (ny % my != 0) {
        throw ValidationError("coarse grid not nested: my=" + std::to_string(my) + " does not divide ny=" +
                              std::to_string(ny));
    }
    rx_ = nx / mx;
    ry_ = ny / my;
    const Box& b = mesh_->bounds();
    block_size_ = std::max(b.width() / static_cast<double>(mx), b.height() / static_cast<double>(my));

    block_triangles_.assign(static_cast<std::size_t>(mx * my), {});
    triangle_block_.assign(static_cast<std::size_t>(mesh_->num_triangles()), -1);
    for (Index t = 0; t < mesh_->num_triangles(); ++t) {
        const Index cell = t / 2;
        const Index ci = cell % nx;
        const Index cj = cell / nx;
        const Index block = block_id(ci / rx_, cj / ry_);
        block_triangles_[static_cast<std::size_t>(block)].push_back(t);
        triangle_block_[static_cast<std::size_t>(t)] = block;
    }

    node_blocks_.assign(static_cast<std::size_t>(num_nodes()), {});
    for (Index J = 0; J <= my; ++J) {
        for (Index I = 0; I <= mx; ++I) {
            auto& blocks = node_blocks_[static_cast<std::size_t>(node_id(I, J))];
            for (Index BJ = J - 1; BJ <= J; ++BJ) {
                for (Index BI = I - 1; BI <= I; ++BI) {
                    if (BI >= 0 && BI < mx && BJ >= 0 && BJ < my) {
                        blocks.push_back(block_id(BI, BJ));
                    }
                }
            }
        }
    }
}

Point CoarseGrid::node(Index id) const
{
    return mesh_->node(fine_node(id));
}

Index CoarseGrid::fine_node(Index id) const
{
    require(id >= 0 && id < num_nodes(), "coarse node id out of range");
    const Index I = id % (mx_ + 1);
    const Index J = id / (mx_ + 1);
    return mesh_->lattice_node(I * rx_, J * ry_);
}

CoarseGrid build_coarse_grid(std::shared_ptr<const FineMesh> mesh, Index mx, Index my)
{
    return CoarseGrid(std::move(mesh), mx, my);
}

CoarseNeighborhood neighborhood(const CoarseGrid& grid, Index node_id)
{
    require(node_id >= 0 && node_id < grid.num_nodes(), "coarse node id " + std::to_string(node_id) + " out of range");
    const FineMesh& mesh = grid.mesh();
    const Index I = node_id % (grid.mx() + 1);
    const Index J = node_id / (grid.mx() + 1);

    CoarseNeighborhood nb;
    nb.center = node_id;
    nb.blocks = grid.node_blocks(node_id);
    const Index i0 = std::max<Index>(I - 1, 0) * grid.ratio_x();
    const Index i1 = std::min<Index>(I + 1, grid.mx()) * grid.ratio_x();
    const Index j0 = std::max<Index>(J - 1, 0) * grid.ratio_y();
    const Index j1 = std::min<Index>(J + 1, grid.my()) * grid.ratio_y();
    nb.lattice_range = {i0, i1, j0, j1};

    nb.global_to_local.assign(static_cast<std::size_t>(mesh.num_nodes()), -1);
    for (Index j = j0; j <= j1; ++j) {
        for (Index i = i0; i <= i1; ++i) {
            const Index g = mesh.lattice_node(i, j);
            nb.global_to_local[static_cast<std::size_t>(g)] = static_cast<Index>(nb.local_to_global.size());
            nb.local_to_global.push_back(g);
            if (i == i0 || i == i1 || j == j0 || j == j1) {
                nb.boundary_nodes.push_back(g);
            }
        }
    }

    for (Index b : nb.blocks) {
        const auto& tris = grid.block_triangles(b);
        nb.triangles.insert(nb.triangles.end(), tris.begin(), tris.end());
    }
    std::sort(nb.triangles.begin(), nb.triangles.end());

    auto in_omega = [&](Index t) {
        return t >= 0 && std::find(nb.blocks.begin(), nb.blocks.end(), grid.triangle_block(t)) != nb.blocks.end();
    };
    const auto& chains = mesh.fracture_edges();
    for (std::size_t f = 0; f < chains.size(); ++f) {
        for (Index e : chains[f]) {
            const auto& ed = mesh.edge(e);
            if (in_omega(ed.triangles[0]) || in_omega(ed.triangles[1])) {
                nb.fracture_edges.push_back(e);
                nb.edge_fracture.push_back(static_cast<Index>(f));
            }
        }
    }
    return nb;
}

std::vector<Vector> partition_of_unity(const CoarseGrid& grid)
{
    const FineMesh& mesh = grid.mesh();
    const Index nx = mesh.nx();
    const Index ny = mesh.ny();
    const auto rx = static_cast<double>(grid.ratio_x());
    const auto ry = static_cast<double>(grid.ratio_y());
    std::vector<Vector> chi(static_cast<std::size_t>(grid.num_nodes()), Vector::Zero(mesh.num_nodes()));
    for (Index j = 0; j <= ny; ++j) {
        for (Index i = 0; i <= nx; ++i) {
            const Index g = mesh.lattice_node(i, j);
            const Index I0 = std::min(i / grid.ratio_x(), grid.mx() - 1);
            const Index J0 = std::min(j / grid.ratio_y(), grid.my() - 1);
            const double sx = (static_cast<double>(i) - static_cast<double>(I0) * rx) / rx;
            const double sy = (static_cast<double>(j) - static_cast<double>(J0) * ry) / ry;
            const double wx[2] = {1.0 - sx, sx};
            const double wy[2] = {1.0 - sy, sy};
            for (int b = 0; b < 2; ++b) {
                for (int a = 0; a < 2; ++a) {
                    const double w = wx[a] * wy[b];
                    if (w != 0.0) {
                        chi[static_cast<std::size_t>(grid.node_id(I0 + a, J0 + b))][g] = w;
                    }
                }
            }
        }
    }
    return chi;
}

}  // namespace vugsim
