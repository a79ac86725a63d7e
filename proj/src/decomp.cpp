#include "lmor/decomp.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <set>
#include <stdexcept>

namespace lmor {

CoarseGrid make_coarse_grid(const StructuredMesh& mesh, int NX, int NY)
{
    if (NX < 1 || NY < 1) throw std::invalid_argument("make_coarse_grid: empty coarse grid");
    if (mesh.nx % NX || mesh.ny % NY) throw std::invalid_argument("make_coarse_grid: fine mesh does not resolve coarse lines");
    CoarseGrid g;
    g.NX = NX;
    g.NY = NY;
    g.rx = mesh.nx / NX;
    g.ry = mesh.ny / NY;
    g.Hx = (mesh.domain.x1 - mesh.domain.x0) / NX;
    g.Hy = (mesh.domain.y1 - mesh.domain.y0) / NY;
    auto push = [&](CoarseEntity e) {
        std::sort(e.domains.begin(), e.domains.end());
        int id = g.num_entities();
        g.by_domains[e.domains] = id;
        g.entities.push_back(std::move(e));
        return id;
    };
    for (int J = 0; J < NY; ++J)
        for (int I = 0; I < NX; ++I) g.cells.push_back(push({kCell, {g.cell_id(I, J)}, I, J, false}));
    for (int J = 0; J < NY; ++J)
        for (int I = 0; I + 1 < NX; ++I)
            g.faces.push_back(push({kFace, {g.cell_id(I, J), g.cell_id(I + 1, J)}, I, J, true}));
    for (int J = 0; J + 1 < NY; ++J)
        for (int I = 0; I < NX; ++I)
            g.faces.push_back(push({kFace, {g.cell_id(I, J), g.cell_id(I, J + 1)}, I, J, false}));
    for (int J = 1; J < NY; ++J)
        for (int I = 1; I < NX; ++I)
            g.vertices.push_back(push({kVertex,
                                       {g.cell_id(I - 1, J - 1), g.cell_id(I, J - 1), g.cell_id(I - 1, J), g.cell_id(I, J)},
                                       I, J, false}));
    return g;
}

std::vector<std::vector<int>> dof_domains(const StructuredMesh& mesh, const CoarseGrid& grid)
{
    std::vector<std::vector<int>> dom(mesh.num_dofs());
    for (int j = 0; j <= mesh.ny; ++j) {
        for (int i = 0; i <= mesh.nx; ++i) {
            std::set<int> s;
            for (int fj = j - 1; fj <= j; ++fj)
                for (int fi = i - 1; fi <= i; ++fi)
                    if (fi >= 0 && fj >= 0 && fi < mesh.nx && fj < mesh.ny) s.insert(grid.cell_id(fi / grid.rx, fj / grid.ry));
            dom[mesh.vertex(i, j)].assign(s.begin(), s.end());
        }
    }
    for (int j = 0; j < mesh.ny; ++j)
        for (int i = 0; i < mesh.nx; ++i) dom[mesh.centroid(i, j)] = {grid.cell_id(i / grid.rx, j / grid.ry)};
    return dom;
}

DofClassification classify_dofs(const ProblemDefinition& def, const CoarseGrid& grid)
{
    auto dom = dof_domains(def.mesh, grid);
    DofClassification c;
    c.entity_of.resize(def.num_free());
    c.basic.resize(grid.num_entities());
    for (int k = 0; k < def.num_free(); ++k) {
        auto it = grid.by_domains.find(dom[def.free_dofs[k]]);
        if (it == grid.by_domains.end()) throw std::runtime_error("classify_dofs: dof without matching coarse entity");
        c.entity_of[k] = it->second;
        c.basic[it->second].push_back(k);
    }
    return c;
}

namespace {

std::vector<int> merged(std::vector<int> a, const std::vector<int>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

std::vector<int> positions(const std::vector<int>& sorted, const std::vector<int>& items)
{
    std::vector<int> p;
    p.reserve(items.size());
    for (int v : items) p.push_back(static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin()));
    return p;
}

// values on interior dofs I of the a-harmonic function with prescribed values on B
Mat harmonic(const SpMat& A, const std::vector<int>& I, const std::vector<int>& B, const Mat& vals)
{
    if (I.empty()) return Mat(0, vals.cols());
    SpMat AII = submatrix(A, I, I), AIB = submatrix(A, I, B);
    Eigen::SimplicialLDLT<SpMat> ldlt(AII);
    if (ldlt.info() != Eigen::Success) throw SolverFailure("extension: local factorization failed");
    Mat rhs = -(AIB * vals);
    return ldlt.solve(rhs);
}

}  // namespace

WirebasketDecomposition::WirebasketDecomposition(const Problem& problem, const CoarseGrid& grid, const Param& mu_bar)
    : grid_(grid), cls_(classify_dofs(problem.def, grid)), n_(problem.def.num_free())
{
    const auto& mesh = problem.def.mesh;
    const int ne = grid_.num_entities();
    ext_.resize(ne);
    E_.resize(ne);
    bnd_.resize(ne);
    coupling_.resize(ne);
    SpMat Abar = problem.form.assemble_A(mu_bar);

    auto id = [&](std::vector<int> d) {
        std::sort(d.begin(), d.end());
        auto it = grid_.by_domains.find(d);
        return it == grid_.by_domains.end() ? -1 : it->second;
    };
    auto vertex_id = [&](int I, int J) {
        if (I < 1 || J < 1 || I >= grid_.NX || J >= grid_.NY) return -1;
        return id({grid_.cell_id(I - 1, J - 1), grid_.cell_id(I, J - 1), grid_.cell_id(I - 1, J), grid_.cell_id(I, J)});
    };

    for (int e : grid_.faces) {
        const auto& ent = grid_.entities[e];
        if (ent.vertical) bnd_[e] = {vertex_id(ent.I + 1, ent.J), vertex_id(ent.I + 1, ent.J + 1)};
        else bnd_[e] = {vertex_id(ent.I, ent.J + 1), vertex_id(ent.I + 1, ent.J + 1)};
        std::erase(bnd_[e], -1);
    }
    for (int e : grid_.cells) {
        const auto& ent = grid_.entities[e];
        std::vector<int> b;
        for (int d : ent.domains)
            for (int k = 0; k < ne; ++k) {
                const auto& o = grid_.entities[k];
                if (o.codim != kCell && std::binary_search(o.domains.begin(), o.domains.end(), d)) b.push_back(k);
            }
        std::sort(b.begin(), b.end());
        bnd_[e] = b;
        coupling_[e] = b;
    }

    for (int e : grid_.cells) {
        ext_[e] = cls_.basic[e];
        E_[e] = Mat::Identity(ext_[e].size(), ext_[e].size());
    }
    for (int e : grid_.faces) {
        const auto& ent = grid_.entities[e];
        std::vector<int> interior;
        for (int d : ent.domains) interior = merged(interior, cls_.basic[grid_.cells[d]]);
        const auto& fb = cls_.basic[e];
        ext_[e] = merged(interior, fb);
        Mat Ui = harmonic(Abar, interior, fb, Mat::Identity(fb.size(), fb.size()));
        Mat& E = E_[e];
        E = Mat::Zero(ext_[e].size(), fb.size());
        auto pb = positions(ext_[e], fb), pi = positions(ext_[e], interior);
        for (size_t k = 0; k < fb.size(); ++k) E(pb[k], k) = 1;
        for (size_t k = 0; k < interior.size(); ++k) E.row(pi[k]) = Ui.row(k);
    }
    for (int e : grid_.vertices) {
        const auto& ent = grid_.entities[e];
        const auto& vb = cls_.basic[e];
        if (vb.size() != 1) throw std::runtime_error("wirebasket: vertex basic space is not one-dimensional");
        const double vx = mesh.domain.x0 + ent.I * grid_.Hx, vy = mesh.domain.y0 + ent.J * grid_.Hy;
        std::vector<int> bdofs = vb;
        std::vector<double> bvals = {1.0};
        std::vector<int> interior;
        for (int d : ent.domains) interior = merged(interior, cls_.basic[grid_.cells[d]]);
        for (int f : grid_.faces) {
            const auto& fd = grid_.entities[f].domains;
            if (!std::includes(ent.domains.begin(), ent.domains.end(), fd.begin(), fd.end())) continue;
            for (int k : cls_.basic[f]) {
                int full = problem.def.free_dofs[k];
                double dx = std::abs(mesh.coords(full, 0) - vx) / grid_.Hx;
                double dy = std::abs(mesh.coords(full, 1) - vy) / grid_.Hy;
                bdofs.push_back(k);
                bvals.push_back(std::max(0.0, 1.0 - std::max(dx, dy)));
            }
        }
        Vec bv = Eigen::Map<Vec>(bvals.data(), bvals.size());
        Mat ui = harmonic(Abar, interior, bdofs, bv);
        ext_[e] = merged(interior, bdofs);
        E_[e] = Mat::Zero(ext_[e].size(), 1);
        auto pb = positions(ext_[e], bdofs), pi = positions(ext_[e], interior);
        for (size_t k = 0; k < bdofs.size(); ++k) E_[e](pb[k], 0) = bv[k];
        for (size_t k = 0; k < interior.size(); ++k) E_[e](pi[k], 0) = ui(k, 0);
    }
}

LocalVector WirebasketDecomposition::extend(int e, const Vec& basic_vals) const
{
    if (basic_vals.size() != static_cast<Index>(cls_.basic[e].size()))
        throw std::invalid_argument("extend: coefficient size does not match basic space");
    return {ext_[e], E_[e] * basic_vals};
}

std::vector<Vec> WirebasketDecomposition::components(const Vec& phi) const
{
    std::vector<Vec> c(grid_.num_entities());
    Vec r = phi;
    for (int e : grid_.vertices) {
        c[e] = gather(r, cls_.basic[e]);
    }
    for (int e : grid_.vertices) scatter_add(r, ext_[e], E_[e] * c[e], -1.0);
    for (int e : grid_.faces) c[e] = gather(r, cls_.basic[e]);
    for (int e : grid_.faces) scatter_add(r, ext_[e], E_[e] * c[e], -1.0);
    for (int e : grid_.cells) c[e] = gather(r, cls_.basic[e]);
    return c;
}

std::vector<LocalVector> WirebasketDecomposition::decompose(const Vec& phi) const
{
    auto c = components(phi);
    std::vector<LocalVector> parts(grid_.num_entities());
    for (int e = 0; e < grid_.num_entities(); ++e) parts[e] = extend(e, c[e]);
    return parts;
}

Vec WirebasketDecomposition::to_full(const LocalVector& part) const
{
    Vec v = Vec::Zero(n_);
    scatter_add(v, part.idx, part.val);
    return v;
}

std::vector<int> WirebasketDecomposition::neighbourhood(int face_e) const
{
    const auto& ent = grid_.entities.at(face_e);
    if (ent.codim != kFace) throw std::invalid_argument("neighbourhood: entity is not a face");
    int i0, i1, j0, j1;
    if (ent.vertical) {
        i0 = ent.I, i1 = ent.I + 1, j0 = ent.J - 1, j1 = ent.J + 1;
    } else {
        i0 = ent.I - 1, i1 = ent.I + 1, j0 = ent.J, j1 = ent.J + 1;
    }
    std::vector<int> n;
    for (int J = std::max(0, j0); J <= std::min(grid_.NY - 1, j1); ++J)
        for (int I = std::max(0, i0); I <= std::min(grid_.NX - 1, i1); ++I) n.push_back(grid_.cell_id(I, J));
    std::sort(n.begin(), n.end());
    return n;
}

std::vector<int> WirebasketDecomposition::training_space(int face_e) const
{
    auto N = neighbourhood(face_e);
    std::vector<int> dofs;
    for (int k = 0; k < grid_.num_entities(); ++k) {
        const auto& d = grid_.entities[k].domains;
        if (std::includes(N.begin(), N.end(), d.begin(), d.end())) dofs.insert(dofs.end(), cls_.basic[k].begin(), cls_.basic[k].end());
    }
    std::sort(dofs.begin(), dofs.end());
    return dofs;
}

std::vector<int> WirebasketDecomposition::coupling_space(int face_e) const
{
    auto N = neighbourhood(face_e);
    std::vector<int> dofs;
    for (int k = 0; k < grid_.num_entities(); ++k) {
        const auto& d = grid_.entities[k].domains;
        bool inside = std::includes(N.begin(), N.end(), d.begin(), d.end());
        bool meets = std::any_of(d.begin(), d.end(), [&](int c) { return std::binary_search(N.begin(), N.end(), c); });
        if (meets && !inside) dofs.insert(dofs.end(), cls_.basic[k].begin(), cls_.basic[k].end());
    }
    std::sort(dofs.begin(), dofs.end());
    return dofs;
}

namespace {

double hat(int I, int n, double t)
{
    if (n == 2) return 1.0;
    if (I == 1 && t <= 1) return 1.0;
    if (I == n - 1 && t >= n - 1) return 1.0;
    return std::max(0.0, 1.0 - std::abs(t - I));
}

}  // namespace

double PoUDecomposition::rho_at(int i, double x, double y) const
{
    auto [I, J] = vertex[i];
    return hat(I, NX, (x - domain_x0) / Hx) * hat(J, NY, (y - domain_y0) / Hy);
}

PoUDecomposition build_pou(const ProblemDefinition& def, const CoarseGrid& grid)
{
    if (grid.NX < 2 || grid.NY < 2) throw std::invalid_argument("build_pou: coarse grid needs at least 2x2 cells");
    const auto& mesh = def.mesh;
    auto dom = dof_domains(mesh, grid);
    PoUDecomposition p;
    p.Hx = grid.Hx;
    p.Hy = grid.Hy;
    p.NX = grid.NX;
    p.NY = grid.NY;
    p.domain_x0 = mesh.domain.x0;
    p.domain_y0 = mesh.domain.y0;
    for (int J = 1; J < grid.NY; ++J) {
        for (int I = 1; I < grid.NX; ++I) {
            std::vector<int> cells = {grid.cell_id(I - 1, J - 1), grid.cell_id(I, J - 1), grid.cell_id(I - 1, J), grid.cell_id(I, J)};
            std::sort(cells.begin(), cells.end());
            std::vector<int> dofs;
            for (int k = 0; k < def.num_free(); ++k) {
                const auto& d = dom[def.free_dofs[k]];
                if (std::includes(cells.begin(), cells.end(), d.begin(), d.end())) dofs.push_back(k);
            }
            const int i = p.size();
            p.vertex.push_back({I, J});
            p.cells.push_back(cells);
            p.dofs.push_back(dofs);
            p.color.push_back((I % 2) * 2 + (J % 2));
            Vec r(dofs.size());
            for (size_t k = 0; k < dofs.size(); ++k) {
                int full = def.free_dofs[dofs[k]];
                r[k] = p.rho_at(i, mesh.coords(full, 0), mesh.coords(full, 1));
            }
            p.rho.push_back(r);
        }
    }
    return p;
}

LocalVector pou_map(const PoUDecomposition& pou, int i, const Vec& phi)
{
    return {pou.dofs[i], pou.rho[i].cwiseProduct(gather(phi, pou.dofs[i]))};
}

}  // namespace lmor
