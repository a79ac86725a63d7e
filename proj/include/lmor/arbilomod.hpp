#pragma once

#include "lmor/errorest.hpp"
#include "lmor/reduction.hpp"

namespace lmor {

struct ArbiLoModConfig {
    int NX = 10, NY = 10;
    TrainingConfig training;
    double tol = 1e-2;          ///< stop when max over Xi of ||R||_{V'} is below
    int max_iterations = 60;
    int jobs = 1;
};

struct ArbiLoModRecord {
    int iter = 0;
    double max_residual = 0;    ///< max over Xi of ||R||_{V'}
    double max_rel_error = 0;   ///< max over Xi of ||u - u~||_V / ||u||_V
    double max_delta_loc = 0;   ///< max over Xi of (sum_i ||R||^2_{V_i'})^(1/2) / alpha_lb
    int total_dim = 0;
    int marked = 0;
    int enriched = 0;
};

struct GeometryChange {
    std::vector<int> affected_cells;
    std::vector<int> invalid;   ///< entity ids, sorted
    int invalid_faces = 0, invalid_cells = 0, invalid_vertices = 0;
};

/// Coarse cells containing a triangle whose indicator differs between the two regions.
std::vector<int> affected_cells(const StructuredMesh& mesh, const CoarseGrid& grid, const Region& a, const Region& b);

/// Training, local greedys, reduced solves and online enrichment with geometry-change reuse.
class ArbiLoMod {
public:
    ArbiLoMod(Problem p, ArbiLoModConfig cfg);

    /// Creates every local space that is missing; returns the number of face trainings performed.
    int build();
    /// Enrichment loop; true when the tolerance is met.
    bool run();
    /// Switch to a new problem on the same mesh, invalidating spaces whose inputs intersect the affected cells.
    GeometryChange change_geometry(Problem p, const std::vector<int>& affected);
    /// Entities whose input hash differs for the given problem; oracle for change_geometry.
    std::vector<int> invalid_by_rehash(const Problem& p) const;
    /// Coarse cells whose data enter the generation of an entity's space.
    std::vector<int> input_cells(int e) const;

    const Problem& problem() const { return p_; }
    const WirebasketDecomposition& decomposition() const { return wb_; }
    const std::vector<LocalReducedSpace>& spaces() const { return spaces_; }
    const std::vector<ArbiLoModRecord>& history() const { return history_; }
    int trainings() const { return trainings_; }
    int greedys() const { return greedys_; }
    int iterations() const { return iterations_; }
    bool converged() const { return converged_; }
    int total_dim() const;
    /// Max relative V error over Xi of the current reduced solutions.
    double max_rel_error();

private:
    std::uint64_t entity_hash(const Problem& p, int e) const;
    void refresh_problem_data();
    void run_greedys(const std::vector<int>& cells);
    ArbiLoModRecord evaluate(std::vector<Vec>& residuals, std::vector<std::vector<double>>& local);

    Problem p_;
    ArbiLoModConfig cfg_;
    CoarseGrid grid_;
    WirebasketDecomposition wb_;
    PoUDecomposition pou_;
    InnerProduct V_;
    std::vector<InnerProduct> patch_ip_;
    std::vector<InnerProduct> ext_ip_;
    ParameterCache cache_;
    std::vector<Vec> truth_;
    std::vector<std::vector<int>> cell_triangles_;
    std::vector<LocalReducedSpace> spaces_;
    std::vector<ArbiLoModRecord> history_;
    int trainings_ = 0, greedys_ = 0, iterations_ = 0;
    bool converged_ = false;
};

}  // namespace lmor
