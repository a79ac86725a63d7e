#pragma once

#include "lmor/types.hpp"

#include <array>
#include <optional>
#include <string>

namespace lmor {

struct Rect {
    double x0, x1, y0, y1;
    double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Criss-cross P1 mesh: every grid cell is split into four triangles through its centroid.
/// Dofs: grid vertices row-major, then centroids row-major.
struct StructuredMesh {
    int nx = 0, ny = 0;
    Rect domain{};
    double hx = 0, hy = 0;
    Eigen::Matrix<double, Eigen::Dynamic, 2> coords;
    std::vector<std::array<int, 3>> triangles;

    int num_dofs() const { return static_cast<int>(coords.rows()); }
    int num_vertices() const { return (nx + 1) * (ny + 1); }
    int vertex(int i, int j) const { return j * (nx + 1) + i; }
    int centroid(int i, int j) const { return num_vertices() + j * nx + i; }
    /// Fine cell (i, j) of triangle t.
    std::array<int, 2> cell_of(int t) const { return {(t / 4) % nx, (t / 4) / nx}; }
    double triangle_area(int t) const;
};

StructuredMesh build_mesh(int nx, int ny, const Rect& domain);

/// Region as signed union of rectangles; the indicator is sum(sign * chi_rect).
struct Region {
    std::vector<std::pair<Rect, int>> terms;
    Region& add(const Rect& r) { terms.push_back({r, +1}); return *this; }
    Region& remove(const Rect& r) { terms.push_back({r, -1}); return *this; }
};

/// Exact area of triangle t intersected with r.
double clipped_area(const StructuredMesh& mesh, int t, const Rect& r);
/// Per-triangle area fraction of the region, clamped to [0, 1].
Vec region_fraction(const StructuredMesh& mesh, const Region& region);

SpMat assemble_stiffness(const StructuredMesh& mesh, const Vec& elem_coef);
SpMat assemble_stiffness(const StructuredMesh& mesh);
SpMat assemble_mass(const StructuredMesh& mesh);
Vec assemble_load(const StructuredMesh& mesh, const Vec& elem_f);

/// Parameterized bilinear form and right hand side restricted to free dofs.
struct AffineForm {
    std::vector<SpMat> A;
    std::vector<Coefficient> theta_a;
    std::vector<Vec> f;
    std::vector<Coefficient> theta_f;
    Param lower, upper;
    bool spd = true;

    int size() const { return A.empty() ? 0 : static_cast<int>(A.front().rows()); }
    int num_params() const { return static_cast<int>(lower.size()); }
    SpMat assemble_A(const Param& mu) const;
    Vec assemble_f(const Param& mu) const;
    std::vector<double> eval_theta_a(const Param& mu) const;
    std::vector<double> eval_theta_f(const Param& mu) const;
    bool admissible(const Param& mu) const;
};

struct ProblemDefinition {
    std::string name;
    StructuredMesh mesh;
    std::vector<int> free_dofs;
    std::vector<int> free_index;  ///< full dof -> free index or -1
    Vec shift;                    ///< full-size lifting of the Dirichlet data
    SpMat h1;                     ///< H1 product on free dofs
    SpMat l2;                     ///< L2 product on free dofs
    Vec sigma_base;               ///< per-triangle conductivity without parameter
    Vec sigma_param;              ///< per-triangle indicator scaled by the parameter
    double C_F = 0;
    std::function<double(const Param&)> alpha_lb;
    std::function<double(const Param&)> gamma_ub;

    int num_free() const { return static_cast<int>(free_dofs.size()); }
    /// Full coefficient vector from free part plus lifting.
    Vec lift(const Vec& u_free) const;
    Vec restrict_free(const Vec& u_full) const;
};

struct Problem {
    ProblemDefinition def;
    AffineForm form;
};

/// Thermal block on the unit square, four quadrants, f = 1, zero Dirichlet data.
Problem thermal_block(const StructuredMesh& mesh);

/// Conductivity regions of the thermal channels geometries 1..5.
Region channels_region(int geom_id);
/// Thermal channels: u = 1 at x = 0, u = -1 at x = 1, Neumann elsewhere, sigma = 1 + mu on the channels.
Problem thermal_channels(const StructuredMesh& mesh, int geom_id);

struct VariantGeometry {
    double sigma_low = 1, sigma_high = 1e5;
    double f_value = 1e5;
    Region high;
    Region f_plus;
    Region f_minus;
};
VariantGeometry load_variant_geometry(const std::string& path);
std::string default_variant_config();
/// Non-parametric high-contrast problem driven by a piecewise constant source.
Problem channels_variant(const StructuredMesh& mesh, const VariantGeometry& geom);
Problem channels_variant(const StructuredMesh& mesh);

/// -Laplace - k^2 on (-L, L) x (0, W), Dirichlet on x = +-L, Neumann elsewhere.
struct RectProblem {
    Problem problem;
    SpMat A_full;                  ///< stiffness - k^2 mass on all dofs
    std::vector<int> gamma_out;    ///< full dofs on x = +-L ordered left then right, bottom to top
    std::vector<int> gamma_in;     ///< full dofs on x = 0, bottom to top
    double k = 0;
};
RectProblem rect_laplace(double L, double W, int n_per_unit, double k);

struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Solve on free dofs with sparse LDL^T; indefinite forms get a pivot ratio check.
Vec solve_free(const AffineForm& form, const Param& mu);
/// Full coefficient vector including Dirichlet values.
Vec solve_full(const Problem& p, const Param& mu);

/// Export as CSV rows (dof, x, y, value).
void write_solution_csv(const std::string& path, const StructuredMesh& mesh, const Vec& u_full);

}  // namespace lmor
