#pragma once

#include "lmor/arbilomod.hpp"
#include "lmor/enrich.hpp"
#include "lmor/errorest.hpp"
#include "lmor/rangefinder.hpp"
#include "lmor/reduction.hpp"

#include <cstdint>
#include <string>

namespace lmor {

/// Shared run settings; an empty out directory suppresses all files.
struct RunOptions {
    std::string out;
    int jobs = 1;
    std::uint64_t seed = 1;
};

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

// thermal block residual norm splitting

struct SplittingConfig {
    int n = 100;
    int nmax = 40;
    int per_axis = 6;
    int count = 256;
};
struct SplittingResult {
    WeakGreedyResult greedy;
    double seconds = 0;
};
SplittingResult run_splitting(const SplittingConfig& cfg, const RunOptions& opt);
CheckResult check_splitting(const SplittingResult& r);

// randomized range finder

struct RangefinderConfig {
    int inv_h = 80;
    double L = 1, W = 1;
    double k = 0;
    std::vector<double> tols{1e-2, 1e-4, 1e-6};
    int n_t = 10;
    double eps_algofail = 1e-15;
    int runs = 200;
    int svals = 8;
};
struct RangefinderRun {
    double tol = 0;
    int run = 0;
    int dim = 0;
    int evaluations = 0;
    double deviation = 0;
    double estimate = 0;
};
struct RangefinderResult {
    Vec svals;
    std::vector<double> formula;        ///< analytic values where available
    std::vector<RangefinderRun> runs;
    double median_effectivity = 0;      ///< final estimate over true deviation, pooled over runs
    int literal_plateau = 0;            ///< index of the first ratio below 0.5
    int sustained_plateau = 0;          ///< index after which all ratios in the next three steps are below 0.5
    double seconds = 0;
};
RangefinderResult run_rangefinder(const RangefinderConfig& cfg, const RunOptions& opt);
CheckResult check_rangefinder_analytic(const RangefinderResult& r, const RangefinderConfig& cfg);
CheckResult check_rangefinder_helmholtz(const RangefinderResult& r, const RangefinderConfig& cfg);

// norm estimator statistics

struct NormEstimatorConfig {
    int trials = 10000;
    int rows = 50, cols = 30;
    int n_t = 10;
    double eps_testfail = 1e-2;
};
struct NormEstimatorResult {
    int failures = 0;
    int trials = 0;
    double allowed_failures = 0;
    double median_effectivity = 0;
    double c_eff = 0;
    double seconds = 0;
};
NormEstimatorResult run_norm_estimator(const NormEstimatorConfig& cfg, const RunOptions& opt);
/// Combines the Monte Carlo statistics with the effectivity of the analytic example.
CheckResult check_norm_estimator(const NormEstimatorResult& r, const RangefinderResult& analytic);

// localization inequalities

struct LocalizationConfig {
    int n = 20;
    int N = 4;
    int samples = 50;
};
struct LocalizationResult {
    int violations_efficiency = 0;
    int violations_reliability = 0;
    int violations_upper = 0;
    double max_efficiency_ratio = 0;     ///< sum_i ||R||^2_{V_i'} / ||R||^2_{V'}
    double min_reliability_ratio = 0;    ///< Delta_loc,g / ||u - u~||
    double max_upper_ratio = 0;          ///< Delta_loc,g / (gamma / alpha c_pu sqrt(c_C) ||u - u~||)
    double c_pu_brute = 0;
    double c_I = 0;
    double c_pu_h1_bound = 0;
    double c_pu_energy_bound_sq = 0;     ///< for this instance
    double c_pu_sq_reference = 0;        ///< channels variant inputs
    double seconds = 0;
};
LocalizationResult run_localization(const LocalizationConfig& cfg, const RunOptions& opt);
CheckResult check_localization(const LocalizationResult& r);

// wirebasket identity

struct WirebasketConfig {
    int n = 16;
    int N = 2;
    int samples = 200;
};
struct WirebasketResult {
    double max_sum_error = 0;
    double max_idempotence_error = 0;
    double seconds = 0;
};
WirebasketResult run_wirebasket(const WirebasketConfig& cfg, const RunOptions& opt);
CheckResult check_wirebasket(const WirebasketResult& r);

// online enrichment convergence

enum class EnrichMode { residual, coupled, both };

struct EnrichmentConfig {
    int n = 40;
    int N = 5;                 ///< coarse cells per direction, giving (N - 1)^2 patches
    int max_iterations = 200;
    double target = 1e-6;
    EnrichMode mode = EnrichMode::both;
    int small_n = 12;
    int small_N = 3;
    int small_iterations = 40;
};
struct EnrichmentResult {
    std::vector<EnrichRecord> residual, coupled, small;
    std::vector<double> residual_same_state;   ///< residual step error from each coupled state
    int patches = 0;
    double small_c_pu = 0;
    double small_c_rbe = 0;
    double reference_one_minus_c = 0;    ///< 1 - c_rbe for N = 81, c_pu^2 = 3.6013e7
    double seconds = 0;
};
EnrichmentResult run_enrichment(const EnrichmentConfig& cfg, const RunOptions& opt);
CheckResult check_enrichment(const EnrichmentResult& r, const EnrichmentConfig& cfg);

// ArbiLoMod on the thermal channels

struct ChannelsConfig {
    int inv_h = 100;
    int NX = 10, NY = 10;
    std::vector<int> geometries{1, 2};
    bool reuse = true;
    bool compare_scratch = true;   ///< rerun every changed geometry from scratch as a baseline
    int xi_size = 6;
    ArbiLoModConfig arbilomod;
};
struct ChannelsStage {
    int geometry = 0;
    bool reused = false;
    int trainings = 0;
    int iterations = 0;
    int greedys = 0;
    bool converged = false;
    double max_rel_error = 0;
    int total_dim = 0;
    int faces = 0;
    int invalid_faces = 0;
    bool hash_oracle_agrees = true;
    double seconds = 0;
};
struct ChannelsResult {
    std::vector<ChannelsStage> stages;
    double seconds = 0;
};
ChannelsResult run_channels(const ChannelsConfig& cfg, const RunOptions& opt);
CheckResult check_channels(const ChannelsResult& r);

// Gram-Schmidt stress test

struct GramSchmidtConfig {
    int N = 50;
    int dim = 2000;
    int repeats = 200;
};
struct GramSchmidtResult {
    double worst_adaptive = 0;
    double worst_gram = 0;
    double worst_reiterated = 0;
    double median_adaptive_iterations = 0;
    double seconds = 0;
};
GramSchmidtResult run_gram_schmidt(const GramSchmidtConfig& cfg, const RunOptions& opt);
CheckResult check_gram_schmidt(const GramSchmidtResult& r);

// relative error estimators

struct RelativeConfig {
    int triples = 1000;
    int pairs = 100;
    int n = 10;
};
struct RelativeResult {
    int order_violations = 0;
    int bound_violations = 0;
    double boundary_error = 0;
    double seconds = 0;
};
RelativeResult run_relative(const RelativeConfig& cfg, const RunOptions& opt);
CheckResult check_relative(const RelativeResult& r);

// localization constants

struct ConstantsReport {
    int n = 0, N = 0;
    double c_pu_brute = 0;
    double c_I = 0;
    double c_pu_h1_bound = 0;
    double c_pu_energy_bound_sq = 0;
    double reference_c_pu_sq = 0;
    double reference_one_minus_c = 0;
};
ConstantsReport run_constants(int n, int N, const RunOptions& opt);

/// Every acceptance criterion with the pinned configurations, in order.
std::vector<CheckResult> run_acceptance(const RunOptions& opt, const std::vector<int>& only = {});

}  // namespace lmor
