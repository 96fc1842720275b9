#include "vugsim/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vugsim {

Region Region::whole(const FineMesh& mesh)
{
    Region r;
    r.triangles.resize(static_cast<std::size_t>(mesh.num_triangles()));
    std::iota(r.triangles.begin(), r.triangles.end(), Index{0});
    const auto& chains = mesh.fracture_edges();
    for (std::size_t f = 0; f < chains.size(); ++f) {
        for (Index e : chains[f]) {
            r.fracture_edges.push_back(e);
            r.edge_fracture.push_back(static_cast<Index>(f));
        }
    }
    r.num_nodes = mesh.num_nodes();
    return r;
}

Region Region::of(const CoarseNeighborhood& nb)
{
    Region r;
    r.triangles = nb.triangles;
    r.fracture_edges = nb.fracture_edges;
    r.edge_fracture = nb.edge_fracture;
    r.global_to_local = nb.global_to_local;
    r.num_nodes = nb.num_nodes();
    return r;
}

void DofMap::fix(Index dof, double value)
{
    require(dof >= 0 && dof < size(), "Dirichlet condition on nonexistent DOF " + std::to_string(dof));
    dirichlet_[dof] = value;
}

void DofMap::fix_node(Index node, double value)
{
    require(node >= 0 && node < num_nodes_, "Dirichlet condition on nonexistent node " + std::to_string(node));
    for (int c = 0; c < kContinua; ++c) {
        dirichlet_[dof(c, node)] = value;
    }
}

std::vector<Index> DofMap::free_dofs() const
{
    std::vector<Index> free;
    free.reserve(static_cast<std::size_t>(size()));
    auto it = dirichlet_.begin();
    for (Index d = 0; d < size(); ++d) {
        if (it != dirichlet_.end() && it->first == d) {
            ++it;
            continue;
        }
        free.push_back(d);
    }
    return free;
}

namespace {

struct TriangleGeometry {
    double area;
    std::array<std::array<double, 2>, 3> grad;  // gradients of the barycentric coordinates
};

TriangleGeometry triangle_geometry(const FineMesh& mesh, Index t)
{
    const auto& tri = mesh.triangle(t);
    const Point& p0 = mesh.node(tri[0]);
    const Point& p1 = mesh.node(tri[1]);
    const Point& p2 = mesh.node(tri[2]);
    const double two_area = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    TriangleGeometry g{};
    g.area = 0.5 * two_area;
    const std::array<const Point*, 3> p{&p0, &p1, &p2};
    for (int k = 0; k < 3; ++k) {
        const Point& a = *p[static_cast<std::size_t>((k + 1) % 3)];
        const Point& b = *p[static_cast<std::size_t>((k + 2) % 3)];
        g.grad[static_cast<std::size_t>(k)] = {(a.y - b.y) / two_area, (b.x - a.x) / two_area};
    }
    return g;
}

double checked_alpha(double pressure, const FluidProperties& fluid)
{
    const double a = alpha(pressure, fluid);
    if (!(a > 0.0)) {
        throw NumericalError("mobility multiplier is not positive at pressure " + std::to_string(pressure) +
                             " (1 + c (u - u0) <= 0)");
    }
    return a;
}

std::array<Index, 3> local_nodes(const FineMesh& mesh, const Region& region, Index t)
{
    const auto& tri = mesh.triangle(t);
    return {region.local(tri[0]), region.local(tri[1]), region.local(tri[2])};
}

SparseMatrix from_triplets(Index n, std::vector<Triplet>& triplets)
{
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

}  // namespace

SparseMatrix assemble_mass(const FineMesh& mesh, const Medium& medium, const Region& region)
{
    const Index n = region.num_nodes;
    std::vector<Triplet> trip;
    trip.reserve(region.triangles.size() * 27 + region.fracture_edges.size() * 12);
    for (Index t : region.triangles) {
        const double area = mesh.area(t);
        const auto nodes = local_nodes(mesh, region, t);
        for (int c = 0; c < kContinua; ++c) {
            const double b = medium.continua[static_cast<std::size_t>(c)].storage();
            const Index off = c * n;
            for (int a = 0; a < 3; ++a) {
                for (int k = 0; k < 3; ++k) {
                    const double w = (a == k ? 2.0 : 1.0) * area / 12.0;
                    trip.emplace_back(off + nodes[static_cast<std::size_t>(a)], off + nodes[static_cast<std::size_t>(k)],
                                      b * w);
                }
            }
        }
    }
    const FluidProperties& fluid = medium.fluid;
    for (std::size_t k = 0; k < region.fracture_edges.size(); ++k) {
        const Index e = region.fracture_edges[k];
        const auto& fr = medium.network.fractures[static_cast<std::size_t>(region.edge_fracture[k])];
        const double b_frac = fr.porosity * fluid.compressibility / fluid.fvf_reference;
        const double len = mesh.edge_length(e);
        const auto& ed = mesh.edge(e);
        const Index a0 = region.local(ed.nodes[0]);
        const Index a1 = region.local(ed.nodes[1]);
        const double diag = b_frac * fr.aperture * len / 3.0;
        const double off_diag = b_frac * fr.aperture * len / 6.0;
        for (int c = 0; c < kContinua; ++c) {
            const Index off = c * n;
            trip.emplace_back(off + a0, off + a0, diag);
            trip.emplace_back(off + a1, off + a1, diag);
            trip.emplace_back(off + a0, off + a1, off_diag);
            trip.emplace_back(off + a1, off + a0, off_diag);
        }
    }
    return from_triplets(region.num_dofs(), trip);
}

SparseMatrix assemble_mass(const FineMesh& mesh, const Medium& medium)
{
    return assemble_mass(mesh, medium, Region::whole(mesh));
}

SparseMatrix assemble_stiffness(const FineMesh& mesh, const Medium& medium, const Vector& lag, const Region& region)
{
    const Index n = region.num_nodes;
    require(lag.size() == region.num_dofs(), "stiffness lag field has the wrong length");
    std::vector<Triplet> trip;
    trip.reserve(region.triangles.size() * 18 + region.fracture_edges.size() * 8);
    for (Index t : region.triangles) {
        const TriangleGeometry g = triangle_geometry(mesh, t);
        const auto nodes = local_nodes(mesh, region, t);
        for (int c = 0; c < 2; ++c) {
            const Index off = c * n;
            const double w_mean = (lag[off + nodes[0]] + lag[off + nodes[1]] + lag[off + nodes[2]]) / 3.0;
            const double coeff =
                medium.continua[static_cast<std::size_t>(c)].permeability(t) * checked_alpha(w_mean, medium.fluid) *
                g.area;
            // Diagonal from the off-diagonal entries so every element row sums to zero; keeps the
            // assembled operator from leaking mass through round-off in the gradients.
            std::array<std::array<double, 3>, 3> e{};
            for (int a = 0; a < 3; ++a) {
                for (int k = a + 1; k < 3; ++k) {
                    const auto& ga = g.grad[static_cast<std::size_t>(a)];
                    const auto& gk = g.grad[static_cast<std::size_t>(k)];
                    const double v = coeff * (ga[0] * gk[0] + ga[1] * gk[1]);
                    e[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] = v;
                    e[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] = v;
                }
            }
            for (int a = 0; a < 3; ++a) {
                auto& row = e[static_cast<std::size_t>(a)];
                row[static_cast<std::size_t>(a)] = -(row[static_cast<std::size_t>((a + 1) % 3)] +
                                                     row[static_cast<std::size_t>((a + 2) % 3)]);
                for (int k = 0; k < 3; ++k) {
                    trip.emplace_back(off + nodes[static_cast<std::size_t>(a)], off + nodes[static_cast<std::size_t>(k)],
                                      row[static_cast<std::size_t>(k)]);
                }
            }
        }
    }
    for (std::size_t k = 0; k < region.fracture_edges.size(); ++k) {
        const Index e = region.fracture_edges[k];
        const auto& fr = medium.network.fractures[static_cast<std::size_t>(region.edge_fracture[k])];
        const double len = mesh.edge_length(e);
        const auto& ed = mesh.edge(e);
        const Index a0 = region.local(ed.nodes[0]);
        const Index a1 = region.local(ed.nodes[1]);
        for (int c = 0; c < 2; ++c) {
            const Index off = c * n;
            const double w_mean = 0.5 * (lag[off + a0] + lag[off + a1]);
            const double coeff = fr.aperture * fr.permeability * checked_alpha(w_mean, medium.fluid) / len;
            trip.emplace_back(off + a0, off + a0, coeff);
            trip.emplace_back(off + a1, off + a1, coeff);
            trip.emplace_back(off + a0, off + a1, -coeff);
            trip.emplace_back(off + a1, off + a0, -coeff);
        }
    }
    return from_triplets(region.num_dofs(), trip);
}

SparseMatrix assemble_stiffness(const FineMesh& mesh, const Medium& medium, const Vector& lag)
{
    return assemble_stiffness(mesh, medium, lag, Region::whole(mesh));
}

SparseMatrix assemble_reference_stiffness(const FineMesh& mesh, const Medium& medium, const Region& region)
{
    const Vector lag = Vector::Constant(region.num_dofs(), medium.fluid.reference_pressure);
    return assemble_stiffness(mesh, medium, lag, region);
}

SparseMatrix assemble_exchange(const FineMesh& mesh, const ExchangeTable& exchange, const Region& region)
{
    const Index n = region.num_nodes;
    // Lumped nodal weights per continuum pair.
    std::array<Vector, 3> weight;
    const std::array<std::array<int, 2>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    for (auto& w : weight) {
        w = Vector::Zero(n);
    }
    for (Index t : region.triangles) {
        const double third = mesh.area(t) / 3.0;
        const auto nodes = local_nodes(mesh, region, t);
        for (std::size_t p = 0; p < 3; ++p) {
            const double q = exchange.q(pairs[p][0], pairs[p][1], t);
            for (Index v : nodes) {
                weight[p][v] += q * third;
            }
        }
    }
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(12 * n));
    for (std::size_t p = 0; p < 3; ++p) {
        const Index oi = pairs[p][0] * n;
        const Index oj = pairs[p][1] * n;
        for (Index v = 0; v < n; ++v) {
            const double w = weight[p][v];
            if (w == 0.0) {
                continue;
            }
            trip.emplace_back(oi + v, oi + v, w);
            trip.emplace_back(oj + v, oj + v, w);
            trip.emplace_back(oi + v, oj + v, -w);
            trip.emplace_back(oj + v, oi + v, -w);
        }
    }
    return from_triplets(region.num_dofs(), trip);
}

SparseMatrix assemble_exchange(const FineMesh& mesh, const ExchangeTable& exchange)
{
    return assemble_exchange(mesh, exchange, Region::whole(mesh));
}

SparseMatrix assemble_spectral_weight(const FineMesh& mesh, const Medium& medium, const Region& region)
{
    const Index n = region.num_nodes;
    const double inv_mu = 1.0 / medium.fluid.viscosity;
    std::vector<Triplet> trip;
    trip.reserve(region.triangles.size() * 27 + region.fracture_edges.size() * 12);
    for (Index t : region.triangles) {
        const double area = mesh.area(t);
        const auto nodes = local_nodes(mesh, region, t);
        for (int c = 0; c < kContinua; ++c) {
            const double kappa = medium.continua[static_cast<std::size_t>(c)].permeability(t) * inv_mu;
            const Index off = c * n;
            for (int a = 0; a < 3; ++a) {
                for (int k = 0; k < 3; ++k) {
                    const double w = (a == k ? 2.0 : 1.0) * area / 12.0;
                    trip.emplace_back(off + nodes[static_cast<std::size_t>(a)], off + nodes[static_cast<std::size_t>(k)],
                                      kappa * w);
                }
            }
        }
    }
    for (std::size_t k = 0; k < region.fracture_edges.size(); ++k) {
        const Index e = region.fracture_edges[k];
        const auto& fr = medium.network.fractures[static_cast<std::size_t>(region.edge_fracture[k])];
        const double len = mesh.edge_length(e);
        const auto& ed = mesh.edge(e);
        const Index a0 = region.local(ed.nodes[0]);
        const Index a1 = region.local(ed.nodes[1]);
        const double scale = fr.aperture * fr.permeability * inv_mu;
        for (int c = 0; c < kContinua; ++c) {
            const Index off = c * n;
            trip.emplace_back(off + a0, off + a0, scale * len / 3.0);
            trip.emplace_back(off + a1, off + a1, scale * len / 3.0);
            trip.emplace_back(off + a0, off + a1, scale * len / 6.0);
            trip.emplace_back(off + a1, off + a0, scale * len / 6.0);
        }
    }
    return from_triplets(region.num_dofs(), trip);
}

Location locate(const FineMesh& mesh, const Point& p)
{
    const Box& box = mesh.bounds();
    const double tol = 1e-12 * std::max(box.width(), box.height());
    auto try_triangle = [&](Index t, Location& out) {
        const auto& tri = mesh.triangle(t);
        const Point& a = mesh.node(tri[0]);
        const Point& b = mesh.node(tri[1]);
        const Point& c = mesh.node(tri[2]);
        const double two_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        const double l1 = ((c.x - p.x) * (a.y - p.y) - (a.x - p.x) * (c.y - p.y)) / two_area;
        const double l2 = ((a.x - p.x) * (b.y - p.y) - (b.x - p.x) * (a.y - p.y)) / two_area;
        const double l0 = 1.0 - l1 - l2;
        const double eps = 1e-12;
        if (l0 < -eps || l1 < -eps || l2 < -eps) {
            return false;
        }
        out.triangle = t;
        out.weights = {std::max(l0, 0.0), std::max(l1, 0.0), std::max(l2, 0.0)};
        const double s = out.weights[0] + out.weights[1] + out.weights[2];
        for (double& w : out.weights) {
            w /= s;
        }
        return true;
    };

    Location loc;
    if (!box.contains(p, tol)) {
        return loc;
    }
    if (mesh.is_lattice()) {
        const double hx = box.width() / static_cast<double>(mesh.nx());
        const double hy = box.height() / static_cast<double>(mesh.ny());
        const Index i = std::clamp<Index>(static_cast<Index>(std::floor((p.x - box.lo.x) / hx)), 0, mesh.nx() - 1);
        const Index j = std::clamp<Index>(static_cast<Index>(std::floor((p.y - box.lo.y) / hy)), 0, mesh.ny() - 1);
        const Index cell = j * mesh.nx() + i;
        if (try_triangle(2 * cell, loc) || try_triangle(2 * cell + 1, loc)) {
            return loc;
        }
    }
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        if (try_triangle(t, loc)) {
            return loc;
        }
    }
    return loc;
}

Vector assemble_load(const FineMesh& mesh, const SourceSpec& sources)
{
    const Index n = mesh.num_nodes();
    Vector load = Vector::Zero(kContinua * n);
    for (const auto& well : sources.wells) {
        const Location loc = locate(mesh, well.location);
        if (loc.triangle < 0) {
            throw ValidationError("well at (" + std::to_string(well.location.x) + ", " +
                                  std::to_string(well.location.y) + ") lies outside the domain");
        }
        const Index off = static_cast<int>(well.continuum) * n;
        const auto& tri = mesh.triangle(loc.triangle);
        for (int k = 0; k < 3; ++k) {
            load[off + tri[static_cast<std::size_t>(k)]] += well.rate * loc.weights[static_cast<std::size_t>(k)];
        }
    }
    for (int c = 0; c < kContinua; ++c) {
        const auto& density = sources.densities[static_cast<std::size_t>(c)];
        if (density.empty()) {
            continue;
        }
        require(static_cast<Index>(density.size()) == mesh.num_triangles(),
                "source density must have one value per triangle");
        const Index off = c * n;
        for (Index t = 0; t < mesh.num_triangles(); ++t) {
            const double share = density[static_cast<std::size_t>(t)] * mesh.area(t) / 3.0;
            for (Index v : mesh.triangle(t)) {
                load[off + v] += share;
            }
        }
    }
    for (const auto& nf : sources.neumann) {
        if (nf.flux == 0.0) {
            continue;
        }
        for (Index e = 0; e < mesh.num_edges(); ++e) {
            const auto& ed = mesh.edge(e);
            if (ed.triangles[1] >= 0) {
                continue;
            }
            if ((mesh.boundary_flags(ed.nodes[0]) & nf.side) == 0u || (mesh.boundary_flags(ed.nodes[1]) & nf.side) == 0u) {
                continue;
            }
            const double half = 0.5 * nf.flux * mesh.edge_length(e);
            for (int c = 0; c < kContinua; ++c) {
                if (!nf.continua[static_cast<std::size_t>(c)]) {
                    continue;
                }
                load[c * n + ed.nodes[0]] -= half;
                load[c * n + ed.nodes[1]] -= half;
            }
        }
    }
    return load;
}

Vector ReducedSystem::expand(const Vector& reduced) const
{
    require(reduced.size() == static_cast<Index>(free.size()), "reduced vector has the wrong length");
    Vector full = lifting;
    for (std::size_t k = 0; k < free.size(); ++k) {
        full[free[k]] = reduced[static_cast<Index>(k)];
    }
    return full;
}

Vector ReducedSystem::restrict(const Vector& full) const
{
    Vector r(static_cast<Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) {
        r[static_cast<Index>(k)] = full[free[k]];
    }
    return r;
}

ReducedSystem apply_dirichlet(const SparseMatrix& matrix, const Vector& rhs, const DofMap& dofs)
{
    const Index n = matrix.rows();
    require(matrix.cols() == n && rhs.size() == n && dofs.size() == n, "apply_dirichlet: dimension mismatch");
    ReducedSystem out;
    out.lifting = Vector::Zero(n);
    for (const auto& [d, v] : dofs.dirichlet()) {
        out.lifting[d] = v;
    }
    out.free = dofs.free_dofs();
    out.full_to_free.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t k = 0; k < out.free.size(); ++k) {
        out.full_to_free[static_cast<std::size_t>(out.free[k])] = static_cast<Index>(k);
    }
    const auto nf = static_cast<Index>(out.free.size());
    out.rhs.resize(nf);
    for (Index k = 0; k < nf; ++k) {
        out.rhs[k] = rhs[out.free[static_cast<std::size_t>(k)]];
    }
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(matrix.nonZeros()));
    for (Index col = 0; col < matrix.outerSize(); ++col) {
        const Index fc = out.full_to_free[static_cast<std::size_t>(col)];
        for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
            const Index fr = out.full_to_free[static_cast<std::size_t>(it.row())];
            if (fr < 0) {
                continue;
            }
            if (fc >= 0) {
                trip.emplace_back(fr, fc, it.value());
            } else {
                out.rhs[fr] -= it.value() * out.lifting[col];
            }
        }
    }
    out.matrix.resize(nf, nf);
    out.matrix.setFromTriplets(trip.begin(), trip.end());
    out.matrix.makeCompressed();
    return out;
}

DofMap dirichlet_from_sides(const FineMesh& mesh, const std::map<unsigned, double>& side_values)
{
    DofMap dofs(mesh.num_nodes());
    for (const auto& [side, value] : side_values) {
        for (Index v = 0; v < mesh.num_nodes(); ++v) {
            if ((mesh.boundary_flags(v) & side) != 0u) {
                dofs.fix_node(v, value);
            }
        }
    }
    return dofs;
}

double total_mass(const SparseMatrix& mass, const Vector& u)
{
    return (mass * u).sum();
}

}  // namespace vugsim
