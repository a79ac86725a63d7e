#include "lmor/fem.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

namespace lmor {

Vec gather(const Vec& v, const std::vector<int>& idx)
{
    Vec out(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

void scatter_add(Vec& v, const std::vector<int>& idx, const Vec& x, double alpha)
{
    for (size_t i = 0; i < idx.size(); ++i) v[idx[i]] += alpha * x[i];
}

SpMat submatrix(const SpMat& A, const std::vector<int>& rows, const std::vector<int>& cols)
{
    std::vector<int> rmap(A.rows(), -1);
    for (size_t i = 0; i < rows.size(); ++i) rmap[rows[i]] = static_cast<int>(i);
    std::vector<Triplet> trip;
    for (size_t j = 0; j < cols.size(); ++j) {
        for (SpMat::InnerIterator it(A, cols[j]); it; ++it) {
            int r = rmap[it.row()];
            if (r >= 0) trip.emplace_back(r, static_cast<int>(j), it.value());
        }
    }
    SpMat S(rows.size(), cols.size());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
}

double StructuredMesh::triangle_area(int t) const
{
    const auto& tri = triangles[t];
    Eigen::Vector2d a = coords.row(tri[0]), b = coords.row(tri[1]), c = coords.row(tri[2]);
    return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

StructuredMesh build_mesh(int nx, int ny, const Rect& domain)
{
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_mesh: zero cell count");
    StructuredMesh m;
    m.nx = nx;
    m.ny = ny;
    m.domain = domain;
    m.hx = (domain.x1 - domain.x0) / nx;
    m.hy = (domain.y1 - domain.y0) / ny;
    m.coords.resize((nx + 1) * (ny + 1) + nx * ny, 2);
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.coords.row(m.vertex(i, j)) << domain.x0 + i * m.hx, domain.y0 + j * m.hy;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            m.coords.row(m.centroid(i, j)) << domain.x0 + (i + 0.5) * m.hx, domain.y0 + (j + 0.5) * m.hy;
    m.triangles.reserve(4 * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int v00 = m.vertex(i, j), v10 = m.vertex(i + 1, j);
            int v11 = m.vertex(i + 1, j + 1), v01 = m.vertex(i, j + 1);
            int c = m.centroid(i, j);
            m.triangles.push_back({v00, v10, c});
            m.triangles.push_back({v10, v11, c});
            m.triangles.push_back({v11, v01, c});
            m.triangles.push_back({v01, v00, c});
        }
    }
    return m;
}

namespace {

using Poly = std::vector<Eigen::Vector2d>;

Poly clip(const Poly& in, int axis, double bound, bool keep_greater)
{
    Poly out;
    if (in.empty()) return out;
    auto inside = [&](const Eigen::Vector2d& p) { return keep_greater ? p[axis] >= bound : p[axis] <= bound; };
    for (size_t k = 0; k < in.size(); ++k) {
        const auto& cur = in[k];
        const auto& prev = in[(k + in.size() - 1) % in.size()];
        bool ci = inside(cur), pi = inside(prev);
        if (ci != pi) {
            double s = (bound - prev[axis]) / (cur[axis] - prev[axis]);
            out.push_back(prev + s * (cur - prev));
        }
        if (ci) out.push_back(cur);
    }
    return out;
}

double poly_area(const Poly& p)
{
    double a = 0;
    for (size_t k = 0; k < p.size(); ++k) {
        const auto& u = p[k];
        const auto& v = p[(k + 1) % p.size()];
        a += u.x() * v.y() - u.y() * v.x();
    }
    return 0.5 * std::abs(a);
}

}  // namespace

double clipped_area(const StructuredMesh& mesh, int t, const Rect& r)
{
    const auto& tri = mesh.triangles[t];
    Poly p{mesh.coords.row(tri[0]).transpose(), mesh.coords.row(tri[1]).transpose(),
           mesh.coords.row(tri[2]).transpose()};
    p = clip(p, 0, r.x0, true);
    p = clip(p, 0, r.x1, false);
    p = clip(p, 1, r.y0, true);
    p = clip(p, 1, r.y1, false);
    return p.size() < 3 ? 0.0 : poly_area(p);
}

Vec region_fraction(const StructuredMesh& mesh, const Region& region)
{
    const int nt = static_cast<int>(mesh.triangles.size());
    Vec frac = Vec::Zero(nt);
    for (const auto& [r, sign] : region.terms) {
        // only triangles in cells touching r
        int i0 = std::max(0, static_cast<int>(std::floor((r.x0 - mesh.domain.x0) / mesh.hx)) - 1);
        int i1 = std::min(mesh.nx - 1, static_cast<int>(std::ceil((r.x1 - mesh.domain.x0) / mesh.hx)));
        int j0 = std::max(0, static_cast<int>(std::floor((r.y0 - mesh.domain.y0) / mesh.hy)) - 1);
        int j1 = std::min(mesh.ny - 1, static_cast<int>(std::ceil((r.y1 - mesh.domain.y0) / mesh.hy)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                for (int q = 0; q < 4; ++q) {
                    int t = 4 * (j * mesh.nx + i) + q;
                    double a = clipped_area(mesh, t, r);
                    if (a > 0) frac[t] += sign * a / mesh.triangle_area(t);
                }
    }
    for (int t = 0; t < nt; ++t) {
        double v = std::clamp(frac[t], 0.0, 1.0);
        if (v < 1e-14) v = 0;
        if (v > 1 - 1e-14) v = 1;
        frac[t] = v;
    }
    return frac;
}

namespace {

void triangle_geometry(const StructuredMesh& mesh, int t, double& area, double b[3], double c[3])
{
    const auto& tri = mesh.triangles[t];
    double x[3], y[3];
    for (int k = 0; k < 3; ++k) {
        x[k] = mesh.coords(tri[k], 0);
        y[k] = mesh.coords(tri[k], 1);
    }
    b[0] = y[1] - y[2];
    b[1] = y[2] - y[0];
    b[2] = y[0] - y[1];
    c[0] = x[2] - x[1];
    c[1] = x[0] - x[2];
    c[2] = x[1] - x[0];
    area = 0.5 * (c[2] * b[1] - c[1] * b[2]);
}

}  // namespace

SpMat assemble_stiffness(const StructuredMesh& mesh, const Vec& elem_coef)
{
    std::vector<Triplet> trip;
    trip.reserve(9 * mesh.triangles.size());
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        double s = elem_coef[t];
        if (s == 0) continue;
        double area, b[3], c[3];
        triangle_geometry(mesh, static_cast<int>(t), area, b, c);
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(tri[i], tri[j], s * (b[i] * b[j] + c[i] * c[j]) / (4 * area));
    }
    SpMat K(mesh.num_dofs(), mesh.num_dofs());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

SpMat assemble_stiffness(const StructuredMesh& mesh)
{
    return assemble_stiffness(mesh, Vec::Ones(mesh.triangles.size()));
}

SpMat assemble_mass(const StructuredMesh& mesh)
{
    std::vector<Triplet> trip;
    trip.reserve(9 * mesh.triangles.size());
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        double area = mesh.triangle_area(static_cast<int>(t));
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0));
    }
    SpMat M(mesh.num_dofs(), mesh.num_dofs());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

Vec assemble_load(const StructuredMesh& mesh, const Vec& elem_f)
{
    Vec b = Vec::Zero(mesh.num_dofs());
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (elem_f[t] == 0) continue;
        double v = elem_f[t] * mesh.triangle_area(static_cast<int>(t)) / 3.0;
        for (int k : mesh.triangles[t]) b[k] += v;
    }
    return b;
}

SpMat AffineForm::assemble_A(const Param& mu) const
{
    SpMat S = theta_a[0](mu) * A[0];
    for (size_t q = 1; q < A.size(); ++q) S += theta_a[q](mu) * A[q];
    return S;
}

Vec AffineForm::assemble_f(const Param& mu) const
{
    Vec v = Vec::Zero(size());
    for (size_t q = 0; q < f.size(); ++q) v += theta_f[q](mu) * f[q];
    return v;
}

std::vector<double> AffineForm::eval_theta_a(const Param& mu) const
{
    std::vector<double> t;
    for (const auto& th : theta_a) t.push_back(th(mu));
    return t;
}

std::vector<double> AffineForm::eval_theta_f(const Param& mu) const
{
    std::vector<double> t;
    for (const auto& th : theta_f) t.push_back(th(mu));
    return t;
}

bool AffineForm::admissible(const Param& mu) const
{
    if (mu.size() != lower.size()) return false;
    for (Index i = 0; i < mu.size(); ++i)
        if (mu[i] < lower[i] || mu[i] > upper[i]) return false;
    return true;
}

Vec ProblemDefinition::lift(const Vec& u_free) const
{
    Vec u = shift;
    for (size_t i = 0; i < free_dofs.size(); ++i) u[free_dofs[i]] += u_free[i];
    return u;
}

Vec ProblemDefinition::restrict_free(const Vec& u_full) const
{
    return gather(u_full, free_dofs);
}

namespace {

ProblemDefinition base_definition(const StructuredMesh& mesh, const std::vector<bool>& dirichlet)
{
    ProblemDefinition d;
    d.mesh = mesh;
    d.free_index.assign(mesh.num_dofs(), -1);
    for (int i = 0; i < mesh.num_dofs(); ++i) {
        if (!dirichlet[i]) {
            d.free_index[i] = static_cast<int>(d.free_dofs.size());
            d.free_dofs.push_back(i);
        }
    }
    d.shift = Vec::Zero(mesh.num_dofs());
    SpMat K = assemble_stiffness(mesh);
    SpMat M = assemble_mass(mesh);
    d.l2 = submatrix(M, d.free_dofs, d.free_dofs);
    d.h1 = submatrix(K, d.free_dofs, d.free_dofs) + d.l2;
    return d;
}

std::vector<bool> boundary_mask(const StructuredMesh& mesh, bool left, bool right, bool bottom, bool top)
{
    std::vector<bool> mask(mesh.num_dofs(), false);
    for (int j = 0; j <= mesh.ny; ++j)
        for (int i = 0; i <= mesh.nx; ++i) {
            bool on = (left && i == 0) || (right && i == mesh.nx) || (bottom && j == 0) || (top && j == mesh.ny);
            if (on) mask[mesh.vertex(i, j)] = true;
        }
    return mask;
}

}  // namespace

Problem thermal_block(const StructuredMesh& mesh)
{
    if (mesh.nx % 2 || mesh.ny % 2) throw std::invalid_argument("thermal_block: quadrant boundaries not resolved");
    Problem p;
    p.def = base_definition(mesh, boundary_mask(mesh, true, true, true, true));
    p.def.name = "thermal_block";
    p.def.C_F = 1.0 / (std::numbers::sqrt2 * std::numbers::pi);
    const double cf2 = p.def.C_F * p.def.C_F;
    p.def.alpha_lb = [cf2](const Param& mu) { return mu.minCoeff() / (cf2 + 1.0); };
    p.def.gamma_ub = [](const Param& mu) { return std::max(1.0, mu.maxCoeff()); };
    const Rect quads[4] = {{0, .5, 0, .5}, {.5, 1, 0, .5}, {0, .5, .5, 1}, {.5, 1, .5, 1}};
    p.def.sigma_base = Vec::Zero(mesh.triangles.size());
    p.def.sigma_param = Vec::Zero(mesh.triangles.size());
    for (int q = 0; q < 4; ++q) {
        Vec frac = region_fraction(mesh, Region().add(quads[q]));
        SpMat K = assemble_stiffness(mesh, frac);
        p.form.A.push_back(submatrix(K, p.def.free_dofs, p.def.free_dofs));
        p.form.theta_a.push_back([q](const Param& mu) { return mu[q]; });
    }
    Vec load = assemble_load(mesh, Vec::Ones(mesh.triangles.size()));
    p.form.f.push_back(gather(load, p.def.free_dofs));
    p.form.theta_f.push_back([](const Param&) { return 1.0; });
    p.form.lower = Param::Constant(4, 0.1);
    p.form.upper = Param::Constant(4, 1.0);
    return p;
}

Region channels_region(int geom_id)
{
    if (geom_id < 1 || geom_id > 5) throw std::invalid_argument("channels_region: geometry id must be in 1..5");
    Region r;
    r.add({0, .1, 0, 1}).add({.9, 1, 0, 1});
    r.add({.11, .89, .475, .485}).add({.1, .9, .495, .505}).add({.11, .89, .515, .525});
    if (geom_id >= 2) r.remove({.1, .11, .495, .505});
    if (geom_id >= 3) r.remove({.89, .9, .495, .505});
    if (geom_id >= 4) r.add({.1, .11, .515, .525});
    if (geom_id >= 5) r.add({.89, .9, .495, .505});
    return r;
}

Problem thermal_channels(const StructuredMesh& mesh, int geom_id)
{
    Region region = channels_region(geom_id);
    Problem p;
    p.def = base_definition(mesh, boundary_mask(mesh, true, true, false, false));
    p.def.name = "thermal_channels_" + std::to_string(geom_id);
    p.def.C_F = 1.0 / std::numbers::pi;
    const double cf2 = p.def.C_F * p.def.C_F;
    p.def.alpha_lb = [cf2](const Param&) { return 1.0 / (cf2 + 1.0); };
    p.def.gamma_ub = [](const Param& mu) { return 1.0 + mu[0]; };
    for (int i = 0; i < mesh.num_dofs(); ++i) p.def.shift[i] = 1.0 - 2.0 * mesh.coords(i, 0);

    Vec frac = region_fraction(mesh, region);
    p.def.sigma_base = Vec::Ones(mesh.triangles.size());
    p.def.sigma_param = frac;
    SpMat K1 = assemble_stiffness(mesh);
    SpMat Kh = assemble_stiffness(mesh, frac);
    const auto& fd = p.def.free_dofs;
    p.form.A.push_back(submatrix(K1, fd, fd));
    p.form.theta_a.push_back([](const Param&) { return 1.0; });
    p.form.A.push_back(submatrix(Kh, fd, fd));
    p.form.theta_a.push_back([](const Param& mu) { return mu[0]; });
    Vec g1 = K1 * p.def.shift, gh = Kh * p.def.shift;
    p.form.f.push_back(-gather(g1, fd));
    p.form.theta_f.push_back([](const Param&) { return 1.0; });
    p.form.f.push_back(-gather(gh, fd));
    p.form.theta_f.push_back([](const Param& mu) { return mu[0]; });
    p.form.lower = Param::Constant(1, 1.0);
    p.form.upper = Param::Constant(1, 1e5);
    return p;
}

Problem channels_variant(const StructuredMesh& mesh, const VariantGeometry& g)
{
    Problem p;
    p.def = base_definition(mesh, boundary_mask(mesh, true, true, true, true));
    p.def.name = "channels_variant";
    p.def.C_F = 1.0 / (std::numbers::sqrt2 * std::numbers::pi);
    const double cf2 = p.def.C_F * p.def.C_F;
    const double lo = g.sigma_low, hi = g.sigma_high;
    p.def.alpha_lb = [lo, cf2](const Param&) { return lo / (cf2 + 1.0); };
    p.def.gamma_ub = [hi](const Param&) { return hi; };
    Vec frac = region_fraction(mesh, g.high);
    Vec sigma = Vec::Constant(mesh.triangles.size(), lo) + (hi - lo) * frac;
    p.def.sigma_base = sigma;
    p.def.sigma_param = Vec::Zero(mesh.triangles.size());
    Vec fe = g.f_value * (region_fraction(mesh, g.f_plus) - region_fraction(mesh, g.f_minus));
    SpMat K = assemble_stiffness(mesh, sigma);
    p.form.A.push_back(submatrix(K, p.def.free_dofs, p.def.free_dofs));
    p.form.theta_a.push_back([](const Param&) { return 1.0; });
    p.form.f.push_back(gather(assemble_load(mesh, fe), p.def.free_dofs));
    p.form.theta_f.push_back([](const Param&) { return 1.0; });
    p.form.lower = Param(0);
    p.form.upper = Param(0);
    return p;
}

Problem channels_variant(const StructuredMesh& mesh)
{
    return channels_variant(mesh, load_variant_geometry(default_variant_config()));
}

RectProblem rect_laplace(double L, double W, int n_per_unit, double k)
{
    if (k < 0) throw std::invalid_argument("rect_laplace: negative wavenumber");
    int nx = static_cast<int>(std::lround(2 * L * n_per_unit));
    int ny = static_cast<int>(std::lround(W * n_per_unit));
    if (nx % 2) throw std::invalid_argument("rect_laplace: x = 0 not on a grid line");
    StructuredMesh mesh = build_mesh(nx, ny, {-L, L, 0, W});
    RectProblem rp;
    rp.k = k;
    auto& p = rp.problem;
    p.def = base_definition(mesh, boundary_mask(mesh, true, true, false, false));
    p.def.name = "rect_laplace";
    p.def.sigma_base = Vec::Ones(mesh.triangles.size());
    p.def.sigma_param = Vec::Zero(mesh.triangles.size());
    SpMat K = assemble_stiffness(mesh), M = assemble_mass(mesh);
    rp.A_full = K - (k * k) * M;
    p.form.A.push_back(submatrix(K, p.def.free_dofs, p.def.free_dofs));
    p.form.theta_a.push_back([](const Param&) { return 1.0; });
    p.form.A.push_back(submatrix(M, p.def.free_dofs, p.def.free_dofs));
    p.form.theta_a.push_back([k](const Param&) { return -k * k; });
    p.form.f.push_back(Vec::Zero(p.def.num_free()));
    p.form.theta_f.push_back([](const Param&) { return 1.0; });
    p.form.spd = (k == 0);
    p.form.lower = Param(0);
    p.form.upper = Param(0);
    for (int j = 0; j <= ny; ++j) rp.gamma_out.push_back(mesh.vertex(0, j));
    for (int j = 0; j <= ny; ++j) rp.gamma_out.push_back(mesh.vertex(nx, j));
    for (int j = 0; j <= ny; ++j) rp.gamma_in.push_back(mesh.vertex(nx / 2, j));
    return rp;
}

Vec solve_free(const AffineForm& form, const Param& mu)
{
    SpMat A = form.assemble_A(mu);
    Vec b = form.assemble_f(mu);
    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SolverFailure("solve_free: factorization failed");
    const Vec& D = ldlt.vectorD();
    double dmax = D.cwiseAbs().maxCoeff(), dmin = D.cwiseAbs().minCoeff();
    if (!form.spd && dmin < 1e-14 * dmax) throw SolverFailure("solve_free: pivot ratio below 1e-14 (resonance)");
    if (form.spd && D.minCoeff() <= 0) throw SolverFailure("solve_free: matrix not positive definite");
    Vec u = ldlt.solve(b);
    double bn = b.norm();
    if (bn > 0 && (A * u - b).norm() > 1e-10 * bn) {
        // one step of iterative refinement
        u += ldlt.solve(b - A * u);
        if ((A * u - b).norm() > 1e-10 * bn) throw SolverFailure("solve_free: residual too large");
    }
    return u;
}

Vec solve_full(const Problem& p, const Param& mu)
{
    return p.def.lift(solve_free(p.form, mu));
}

void write_solution_csv(const std::string& path, const StructuredMesh& mesh, const Vec& u_full)
{
    std::ofstream os(path);
    os.imbue(std::locale::classic());
    os << "dof,x,y,value\n" << std::setprecision(17);
    for (int i = 0; i < mesh.num_dofs(); ++i)
        os << i << ',' << mesh.coords(i, 0) << ',' << mesh.coords(i, 1) << ',' << u_full[i] << '\n';
}

}  // namespace lmor
