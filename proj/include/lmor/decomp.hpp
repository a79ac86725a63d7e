#pragma once

#include "lmor/fem.hpp"

#include <map>

namespace lmor {

enum Codim : int { kCell = 0, kFace = 1, kVertex = 2 };

struct CoarseEntity {
    int codim = 0;
    std::vector<int> domains;  ///< sorted coarse cell ids, D_E
    int I = 0, J = 0;          ///< cell index, lower-left cell of a face, or vertex grid index
    bool vertical = false;     ///< faces: separates (I, J) and (I + 1, J)
};

struct CoarseGrid {
    int NX = 0, NY = 0;
    int rx = 0, ry = 0;  ///< fine cells per coarse cell
    double Hx = 0, Hy = 0;
    std::vector<CoarseEntity> entities;
    std::vector<int> cells, faces, vertices;  ///< entity ids per codim
    std::map<std::vector<int>, int> by_domains;

    int num_entities() const { return static_cast<int>(entities.size()); }
    int cell_id(int I, int J) const { return J * NX + I; }
    /// Entity id of cell (I, J).
    int cell_entity(int I, int J) const { return cells[cell_id(I, J)]; }
};

/// Cells first, then vertical and horizontal faces, then interior vertices.
CoarseGrid make_coarse_grid(const StructuredMesh& mesh, int NX, int NY);

struct DofClassification {
    std::vector<int> entity_of;                 ///< free dof -> entity
    std::vector<std::vector<int>> basic;        ///< entity -> sorted free dofs
};

/// Coarse cells meeting the support of each mesh dof.
std::vector<std::vector<int>> dof_domains(const StructuredMesh& mesh, const CoarseGrid& grid);
DofClassification classify_dofs(const ProblemDefinition& def, const CoarseGrid& grid);

/// Basic and extended spaces with harmonic extensions computed for a fixed parameter.
class WirebasketDecomposition {
public:
    WirebasketDecomposition() = default;
    WirebasketDecomposition(const Problem& problem, const CoarseGrid& grid, const Param& mu_bar);

    const CoarseGrid& grid() const { return grid_; }
    const DofClassification& classification() const { return cls_; }
    const std::vector<int>& basic(int e) const { return cls_.basic[e]; }
    const std::vector<int>& ext_domain(int e) const { return ext_[e]; }
    int num_free() const { return n_; }

    /// Extension matrix from basic coefficients to ext_domain values (identity for cells).
    const Mat& extension(int e) const { return E_[e]; }
    LocalVector extend(int e, const Vec& basic_vals) const;
    /// Interior vertices bounding a face, or vertices and faces bounding a cell.
    const std::vector<int>& boundary_entities(int e) const { return bnd_[e]; }
    /// Non-cell entities whose extension reaches into cell e.
    const std::vector<int>& coupling_entities(int cell_e) const { return coupling_[cell_e]; }

    /// Basic coefficients of the wirebasket component of phi for every entity.
    std::vector<Vec> components(const Vec& phi) const;
    /// Parts phi_i in V_i^wb summing to phi.
    std::vector<LocalVector> decompose(const Vec& phi) const;
    Vec to_full(const LocalVector& part) const;

    /// Training and coupling dofs of a face, from the neighbourhood of up to six cells.
    std::vector<int> neighbourhood(int face_e) const;
    std::vector<int> training_space(int face_e) const;
    std::vector<int> coupling_space(int face_e) const;

private:
    CoarseGrid grid_;
    DofClassification cls_;
    int n_ = 0;
    std::vector<std::vector<int>> ext_;
    std::vector<Mat> E_;
    std::vector<std::vector<int>> bnd_, coupling_;
};

struct PoUDecomposition {
    std::vector<std::array<int, 2>> vertex;     ///< coarse vertex (I, J) of each patch
    std::vector<std::vector<int>> cells;        ///< coarse cells of each patch
    std::vector<std::vector<int>> dofs;         ///< sorted free dofs of V_i^ovl
    std::vector<Vec> rho;                       ///< nodal PoU values on dofs[i]
    std::vector<int> color;                     ///< parity class
    int c_ovl = 4;
    int c_C = 4;
    double Hx = 0, Hy = 0;
    int NX = 0, NY = 0;
    double domain_x0 = 0, domain_y0 = 0;

    int size() const { return static_cast<int>(dofs.size()); }
    /// Partition of unity function i at a point.
    double rho_at(int i, double x, double y) const;
    /// max over patches of ||grad rho_i||_inf^2 (sum of both axis slopes squared).
    double grad_rho_sq() const { return 1.0 / (Hx * Hx) + 1.0 / (Hy * Hy); }
};

/// One patch per interior coarse vertex; hats next to the boundary are extended by one to the boundary.
PoUDecomposition build_pou(const ProblemDefinition& def, const CoarseGrid& grid);
/// Nodal interpolation I_h(rho_i phi).
LocalVector pou_map(const PoUDecomposition& pou, int i, const Vec& phi);

}  // namespace lmor
