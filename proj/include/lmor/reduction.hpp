#pragma once

#include "lmor/decomp.hpp"
#include "lmor/linalg.hpp"

#include <cstdint>
#include <random>

namespace lmor {

enum class Provenance { vertex, training, greedy, enrichment };
const char* to_string(Provenance p);

/// Reduced space of one coarse entity; columns live on the entity's extension domain.
struct LocalReducedSpace {
    int entity = -1;
    std::vector<int> dofs;
    Mat basis;                       ///< orthonormal in the V product restricted to dofs
    std::vector<Provenance> tags;
    std::uint64_t hash = 0;          ///< inputs the space was generated from

    int dim() const { return static_cast<int>(basis.cols()); }
    void clear()
    {
        basis.resize(static_cast<Index>(dofs.size()), 0);
        tags.clear();
    }
};

/// Pick the largest element, normalize, deflate the rest; repeat while the largest norm exceeds eps.
/// Continues an existing orthonormal basis when one is passed.
Mat snapshot_greedy(std::vector<Vec> Z, double eps, const InnerProduct& ip, const Mat& start = Mat());

/// Affine operators and right hand sides evaluated on the training set.
struct ParameterCache {
    std::vector<Param> mus;
    std::vector<SpMat> A;
    std::vector<Vec> f;
    std::vector<double> alpha;
};
ParameterCache make_parameter_cache(const Problem& p, const std::vector<Param>& mus);

struct TrainingConfig {
    std::vector<Param> xi;
    int M = 60;
    double eps_train = 1e-4;
    double eps_greedy = 1e-3;
    double theta = 0.5;
    double mu_bar = 1e5;
    std::uint64_t seed = 1;
};

/// |Xi| parameters log-uniform on [lo, hi], endpoints included.
std::vector<Param> log_uniform_xi(double lo, double hi, int n);

LocalReducedSpace vertex_space(const Problem& p, const WirebasketDecomposition& wb, int vertex_e);
LocalReducedSpace train_face(const Problem& p, const WirebasketDecomposition& wb, int face_e, const TrainingConfig& cfg);
LocalReducedSpace train_face_randomized(const Problem& p, const WirebasketDecomposition& wb, int face_e, const Param& mu,
                                        double tol, int n_t, double eps_algofail, std::uint64_t seed);

struct GreedyReport {
    int iterations = 0;
    double max_estimate = 0;
    bool stagnated = false;
};

/// Extends the cell space until the residual estimator is below eps_greedy over Xi x (coupling functions + f).
GreedyReport local_greedy_cell(const Problem& p, const WirebasketDecomposition& wb, const ParameterCache& cache,
                               const std::vector<LocalReducedSpace>& spaces, LocalReducedSpace& cell, double eps_greedy,
                               int max_iter = 200);

struct ReducedSingular : std::runtime_error {
    int entity_a, entity_b;
    ReducedSingular(const std::string& msg, int a, int b) : std::runtime_error(msg), entity_a(a), entity_b(b) {}
};

struct ReducedModel {
    SpMat B;                        ///< free dofs x reduced dim
    std::vector<int> entity_of_col;
    std::vector<SpMat> A;           ///< B^T A_q B
    std::vector<Vec> f;             ///< B^T f_q
    int dim() const { return static_cast<int>(B.cols()); }
};

ReducedModel assemble_reduced(const AffineForm& form, const std::vector<LocalReducedSpace>& spaces, int n_free);
ReducedModel assemble_reduced(const AffineForm& form, const Mat& basis);

struct ReducedSolution {
    Vec coeffs;
    Vec u;  ///< free dofs
};
/// Pivots below 1e-12 of the diagonal raise ReducedSingular naming the coupled entities.
ReducedSolution solve_reduced(const ReducedModel& model, const AffineForm& form, const Param& mu);

enum class EstimatorKind { traditional, improved };

struct GreedyStep {
    int n = 0;
    double max_direct = 0;        ///< max over Xi of ||R||_{V'} / ||f||_{V'}
    double max_improved = 0;
    double max_traditional = 0;
    double dev_improved = 0;      ///< max relative deviation from the direct norm where direct >= floor
    double dev_traditional = 0;
    double min_trad_estimate = 0; ///< smallest traditional estimate among points with deviation > 1e-3
    double max_true_error = 0;    ///< relative V error on held-out parameters
    int negative_clamps = 0;
    int selected = -1;
};

struct WeakGreedyResult {
    Mat basis;
    std::vector<GreedyStep> steps;
    std::vector<Param> held_out;
};

/// Greedy over Xi driven by the chosen residual norm scheme; both schemes and the direct norm are recorded.
WeakGreedyResult weak_greedy(const Problem& p, const std::vector<Param>& xi, double tol, EstimatorKind kind, int n_max,
                             std::uint64_t seed, double floor_rel = 1e-12);

/// Every point of a tensor grid with per-axis counts, then a seeded subsample of the requested size.
std::vector<Param> tensor_subsample(const Param& lo, const Param& hi, int per_axis, int count, std::uint64_t seed);

}  // namespace lmor
