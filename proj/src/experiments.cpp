#include "lmor/experiments.hpp"
#include "lmor/acceptance.hpp"
#include "lmor/io.hpp"
#include "lmor/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

namespace lmor {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v)
{
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string file(const RunOptions& opt, const std::string& name)
{
    ensure_directory(opt.out);
    return join_path(opt.out, name);
}

CheckResult make_check(int id, std::string name)
{
    CheckResult c;
    c.id = id;
    c.name = std::move(name);
    return c;
}

StructuredMesh unit_mesh(int n)
{
    return build_mesh(n, n, {0, 1, 0, 1});
}

}  // namespace

// ---------------------------------------------------------------------------

SplittingResult run_splitting(const SplittingConfig& cfg, const RunOptions& opt)
{
    auto t0 = Clock::now();
    auto p = thermal_block(unit_mesh(cfg.n));
    auto xi = tensor_subsample(p.form.lower, p.form.upper, cfg.per_axis, cfg.count, opt.seed);
    SplittingResult r;
    r.greedy = weak_greedy(p, xi, 0.0, EstimatorKind::improved, cfg.nmax, opt.seed);
    r.seconds = since(t0);
    if (!opt.out.empty()) {
        CsvWriter csv(file(opt, "thermal_block_splitting.csv"),
                      {"basis_size", "err_true", "est_direct", "est_trad", "est_improved", "dev_improved", "dev_trad",
                       "negative_clamps", "selected"});
        for (const auto& s : r.greedy.steps) {
            csv << s.n << s.max_true_error << s.max_direct << s.max_traditional << s.max_improved << s.dev_improved
                << s.dev_traditional << s.negative_clamps << s.selected;
            csv.endrow();
        }
    }
    return r;
}

CheckResult check_splitting(const SplittingResult& r)
{
    namespace a = acceptance;
    CheckResult c = make_check(1, "thermal block stable splitting");
    double worst = 0;
    bool stagnation = false;
    double stag_est = 0, stag_dev = 0;
    int stag_n = -1;
    int first_bad = -1;
    double bad_level = 0;
    for (const auto& s : r.greedy.steps) {
        worst = std::max(worst, s.dev_improved);
        if (first_bad < 0 && s.dev_improved > a::splitting_improved_agreement) {
            first_bad = s.n;
            bad_level = s.max_direct;
        }
        if (!stagnation && s.dev_traditional > a::splitting_trad_deviation && s.min_trad_estimate < a::splitting_trad_level) {
            stagnation = true;
            stag_est = s.min_trad_estimate;
            stag_dev = s.dev_traditional;
            stag_n = s.n;
        }
    }
    c.pass = worst <= a::splitting_improved_agreement && stagnation && r.seconds <= a::splitting_seconds;
    c.detail = fmt("improved max rel dev %.2e", worst);
    if (first_bad >= 0) c.detail += fmt(" (first above 1e-9 at n=%d, max estimate %.1e of ||f||)", first_bad, bad_level);
    c.detail += fmt("; traditional dev %.2e at n=%d (estimate %.2e); %.0fs", stag_dev, stag_n, stag_est, r.seconds);
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

RangefinderResult run_rangefinder(const RangefinderConfig& cfg, const RunOptions& opt)
{
    auto t0 = Clock::now();
    auto rp = rect_laplace(cfg.L, cfg.W, cfg.inv_h, cfg.k);
    auto op = interface_transfer_operator(rp);
    Mat T = materialize(op);
    RangefinderResult r;
    r.svals = operator_svals(op, T);
    if (cfg.k == 0)
        for (int i = 1; i <= std::min<int>(cfg.svals, r.svals.size()); ++i) r.formula.push_back(analytic_svals(cfg.L, cfg.W, i));

    r.literal_plateau = r.sustained_plateau = -1;
    for (Index i = 0; i + 1 < r.svals.size(); ++i)
        if (r.svals[i + 1] < 0.5 * r.svals[i]) {
            r.literal_plateau = static_cast<int>(i + 1);
            break;
        }
    for (Index i = 0; i + 3 < r.svals.size(); ++i) {
        bool all = true;
        for (Index j = i; j < i + 3; ++j) all = all && r.svals[j + 1] < 0.5 * r.svals[j];
        if (all) {
            r.sustained_plateau = static_cast<int>(i + 1);
            break;
        }
    }

    std::vector<double> eff;
    for (size_t ti = 0; ti < cfg.tols.size(); ++ti)
        for (int run = 0; run < cfg.runs; ++run) {
            auto rng = make_rng(opt.seed, ti * 1000003ull + run);
            auto rb = adaptive_range_approximation(op, cfg.tols[ti], cfg.n_t, cfg.eps_algofail, rng);
            RangefinderRun x;
            x.tol = cfg.tols[ti];
            x.run = run;
            x.dim = static_cast<int>(rb.basis.cols());
            x.evaluations = rb.evaluations;
            x.deviation = projection_deviation(op, T, rb.basis);
            x.estimate = rb.estimate;
            if (x.deviation > 0) eff.push_back(x.estimate / x.deviation);
            r.runs.push_back(x);
        }
    r.median_effectivity = median(eff);
    r.seconds = since(t0);

    if (!opt.out.empty()) {
        std::string tag = cfg.k == 0 ? "analytic" : "helmholtz";
        {
            CsvWriter csv(file(opt, "rangefinder_" + tag + "_svals.csv"), {"i", "sigma", "formula", "ratio_next"});
            for (Index i = 0; i < r.svals.size(); ++i) {
                csv << static_cast<int>(i + 1) << r.svals[i] << (i < static_cast<Index>(r.formula.size()) ? r.formula[i] : 0.0)
                    << (i + 1 < r.svals.size() ? r.svals[i + 1] / r.svals[i] : 0.0);
                csv.endrow();
            }
        }
        CsvWriter runs(file(opt, "rangefinder_" + tag + "_runs.csv"), {"tol", "run", "dim", "evaluations", "deviation", "estimate"});
        for (const auto& x : r.runs) {
            runs << x.tol << x.run << x.dim << x.evaluations << x.deviation << x.estimate;
            runs.endrow();
        }
        CsvWriter q(file(opt, "rangefinder_" + tag + "_quartiles.csv"),
                    {"tol", "dev_min", "dev_q1", "dev_median", "dev_q3", "dev_max", "dim_median"});
        for (double tol : cfg.tols) {
            std::vector<double> d, n;
            for (const auto& x : r.runs)
                if (x.tol == tol) {
                    d.push_back(x.deviation);
                    n.push_back(x.dim);
                }
            std::sort(d.begin(), d.end());
            auto at = [&](double f) { return d.empty() ? 0.0 : d[static_cast<size_t>(f * (d.size() - 1))]; };
            q << tol << at(0) << at(0.25) << at(0.5) << at(0.75) << at(1) << median(n);
            q.endrow();
        }
    }
    return r;
}

namespace {

bool rangefinder_contracts(const RangefinderResult& r, const RangefinderConfig& cfg, std::string& why)
{
    int bad_dev = 0, bad_eval = 0;
    for (const auto& x : r.runs) {
        bad_dev += x.deviation > x.tol;
        bad_eval += x.evaluations != x.dim + cfg.n_t;
    }
    why = fmt("%d/%zu runs within tol, %d evaluation count mismatches", static_cast<int>(r.runs.size()) - bad_dev,
              r.runs.size(), bad_eval);
    return bad_dev == 0 && bad_eval == 0;
}

}  // namespace

CheckResult check_rangefinder_analytic(const RangefinderResult& r, const RangefinderConfig& cfg)
{
    namespace a = acceptance;
    CheckResult c = make_check(2, "rangefinder analytic example");
    double worst = 0;
    int worst_i = 0;
    for (size_t i = 0; i < r.formula.size(); ++i) {
        double e = std::abs(r.svals[i] / r.formula[i] - 1);
        if (e > worst) {
            worst = e;
            worst_i = static_cast<int>(i + 1);
        }
    }
    std::string why;
    bool ok = rangefinder_contracts(r, cfg, why);
    c.pass = r.formula.size() >= static_cast<size_t>(cfg.svals) && worst <= a::svals_rel && ok && r.seconds <= a::rangefinder_seconds;
    c.detail = fmt("max sval deviation %.3f at i=%d; ", worst, worst_i) + why + fmt("; %.0fs", r.seconds);
    c.seconds = r.seconds;
    return c;
}

CheckResult check_rangefinder_helmholtz(const RangefinderResult& r, const RangefinderConfig& cfg)
{
    namespace a = acceptance;
    CheckResult c = make_check(10, "helmholtz rangefinder");
    const double expected = cfg.k / std::numbers::pi;
    std::string why;
    bool ok = rangefinder_contracts(r, cfg, why);
    c.pass = r.literal_plateau > 0 && std::abs(r.literal_plateau - expected) <= a::plateau_slack && ok;
    c.detail = fmt("plateau %d (first ratio < 0.5; sustained decay after %d) vs k/pi = %.2f; ", r.literal_plateau,
                   r.sustained_plateau, expected) +
               why;
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

NormEstimatorResult run_norm_estimator(const NormEstimatorConfig& cfg, const RunOptions& opt)
{
    auto t0 = Clock::now();
    NormEstimatorResult r;
    r.trials = cfg.trials;
    const Index N_O = std::min(cfg.rows, cfg.cols);
    auto range = InnerProduct::euclidean(cfg.rows);
    std::vector<double> eff;
    eff.reserve(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) {
        auto rng = make_rng(opt.seed, 0x4e0000ull + t);
        Mat O(cfg.rows, cfg.cols);
        std::normal_distribution<double> nd;
        for (Index j = 0; j < O.cols(); ++j)
            for (Index i = 0; i < O.rows(); ++i) O(i, j) = nd(rng);
        double norm = Eigen::JacobiSVD<Mat>(O).singularValues()[0];
        double est = norm_estimate([&](const Vec& x) { return Vec(O * x); }, cfg.cols, range, cfg.n_t, cfg.eps_testfail, 1.0, rng);
        r.failures += est < norm;
        eff.push_back(est / norm);
    }
    r.median_effectivity = median(eff);
    r.c_eff = c_eff(cfg.n_t, cfg.eps_testfail, N_O, 1, 1);
    double sigma = std::sqrt(cfg.trials * cfg.eps_testfail * (1 - cfg.eps_testfail));
    r.allowed_failures = cfg.eps_testfail * cfg.trials + 3 * sigma;
    r.seconds = since(t0);
    if (!opt.out.empty()) {
        CsvWriter csv(file(opt, "norm_estimator.csv"),
                      {"trials", "failures", "allowed_failures", "median_effectivity", "c_eff"});
        csv << r.trials << r.failures << r.allowed_failures << r.median_effectivity << r.c_eff;
        csv.endrow();
    }
    return r;
}

CheckResult check_norm_estimator(const NormEstimatorResult& r, const RangefinderResult& analytic)
{
    namespace a = acceptance;
    CheckResult c = make_check(3, "norm estimator statistics");
    bool mc = r.failures <= r.allowed_failures && r.median_effectivity >= 1 && r.median_effectivity <= r.c_eff;
    double lo = (1 - a::effectivity_band) * a::paper_median_effectivity, hi = (1 + a::effectivity_band) * a::paper_median_effectivity;
    bool ex = analytic.median_effectivity >= lo && analytic.median_effectivity <= hi;
    c.pass = mc && ex;
    c.detail = fmt("failures %d (allowed %.1f); median effectivity %.2f in [1, %.2f]; analytic example median %.1f in [%.1f, %.1f]",
                   r.failures, r.allowed_failures, r.median_effectivity, r.c_eff, analytic.median_effectivity, lo, hi);
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

namespace {

/// Galerkin solution in a random subspace spanned by A^{-1} applied to random loads.
Vec random_reduced_solution(const SpMat& A, const Vec& f, const Eigen::SimplicialLDLT<SpMat>& solver, std::mt19937_64& rng)
{
    int k = std::uniform_int_distribution<int>(1, 8)(rng);
    Mat B(A.rows(), k);
    for (int j = 0; j < k; ++j) B.col(j) = solver.solve(uniform_vector(rng, A.rows()));
    Eigen::HouseholderQR<Mat> qr(B);
    Mat Q = qr.householderQ() * Mat::Identity(A.rows(), k);
    Mat Ar = Q.transpose() * (A * Q);
    return Q * Ar.ldlt().solve(Q.transpose() * f);
}

double max_rho_sq(const PoUDecomposition& pou)
{
    double m = 0;
    for (const auto& r : pou.rho)
        if (r.size()) m = std::max(m, r.cwiseAbs().maxCoeff());
    return m * m;
}

}  // namespace

LocalizationResult run_localization(const LocalizationConfig& cfg, const RunOptions& opt)
{
    auto t0 = Clock::now();
    auto p = thermal_channels(unit_mesh(cfg.n), 1);
    auto grid = make_coarse_grid(p.def.mesh, cfg.N, cfg.N);
    auto pou = build_pou(p.def, grid);
    InnerProduct V(p.def.h1, "H1");
    auto products = patch_products(pou, p.def.h1);
    LocalizationResult r;
    r.c_pu_brute = cpu_bruteforce(pou, p.def.h1);
    r.c_I = interpolation_constant(p.def, pou);
    r.c_pu_h1_bound = cpu_upper_bound_h1(r.c_I, std::sqrt(pou.grad_rho_sq()), 1.0, pou.c_ovl);
    r.c_pu_energy_bound_sq = cpu_energy_bound_sq(p.def.C_F, 1 + p.form.upper[0], pou.grad_rho_sq(), max_rho_sq(pou), pou.c_ovl);
    r.c_pu_sq_reference = cpu_energy_bound_sq(1 / (std::sqrt(2.0) * std::numbers::pi), 1e5, 200, 1, 4);
    r.min_reliability_ratio = std::numeric_limits<double>::infinity();

    auto rng = make_rng(opt.seed, 0x10c);
    std::unique_ptr<CsvWriter> csv;
    if (!opt.out.empty())
        csv = std::make_unique<CsvWriter>(file(opt, "localization.csv"),
                                          std::vector<std::string>{"sample", "mu", "err", "delta", "delta_loc_g", "local_sum_sq", "dual_sq", "upper"});
    for (int s = 0; s < cfg.samples; ++s) {
        double lmu = std::uniform_real_distribution<double>(0, std::log10(p.form.upper[0]))(rng);
        Param mu = Param::Constant(1, std::pow(10.0, lmu));
        SpMat A = p.form.assemble_A(mu);
        Vec f = p.form.assemble_f(mu);
        Eigen::SimplicialLDLT<SpMat> solver(A);
        Vec u = solver.solve(f);
        Vec ur = random_reduced_solution(A, f, solver, rng);
        Vec R = f - A * ur;
        double err = V.norm(u - ur);
        double dual = dual_norm(V, R);
        auto local = local_dual_norms(R, pou, products);
        double sum = 0;
        for (double x : local) sum += x * x;
        double alpha = p.def.alpha_lb(mu), gamma = p.def.gamma_ub(mu);
        double dlg = delta_loc_g(local, r.c_pu_brute, alpha);
        double upper = gamma / alpha * r.c_pu_brute * std::sqrt(double(pou.c_C)) * err;
        r.max_efficiency_ratio = std::max(r.max_efficiency_ratio, sum / (dual * dual));
        r.violations_efficiency += sum > pou.c_C * dual * dual * (1 + 1e-12);
        r.min_reliability_ratio = std::min(r.min_reliability_ratio, dlg / err);
        r.violations_reliability += err > dlg;
        r.max_upper_ratio = std::max(r.max_upper_ratio, dlg / upper);
        r.violations_upper += dlg > upper;
        if (csv) {
            *csv << s << mu[0] << err << dual / alpha << dlg << sum << dual * dual << upper;
            csv->endrow();
        }
    }
    r.seconds = since(t0);
    return r;
}

CheckResult check_localization(const LocalizationResult& r)
{
    namespace a = acceptance;
    CheckResult c = make_check(4, "localization inequalities");
    bool ref = std::abs(r.c_pu_sq_reference / a::reference_c_pu_sq - 1) <= a::reference_rel;
    c.pass = r.violations_efficiency == 0 && r.violations_reliability == 0 && r.violations_upper == 0 &&
             r.c_pu_brute <= r.c_pu_h1_bound && r.c_pu_brute * r.c_pu_brute <= r.c_pu_sq_reference && ref;
    c.detail = fmt("violations %d/%d/%d; max sum/dual %.3f; min Dloc/err %.3f; max Dloc/upper %.3f; c_pu %.3f <= %.3f (H1 bound); "
                   "reference c_pu^2 bound %.5e",
                   r.violations_efficiency, r.violations_reliability, r.violations_upper, r.max_efficiency_ratio,
                   r.min_reliability_ratio, r.max_upper_ratio, r.c_pu_brute, r.c_pu_h1_bound, r.c_pu_sq_reference);
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

WirebasketResult run_wirebasket(const WirebasketConfig& cfg, const RunOptions& opt)
{
    auto t0 = Clock::now();
    auto p = thermal_channels(unit_mesh(cfg.n), 1);
    auto grid = make_coarse_grid(p.def.mesh, cfg.N, cfg.N);
    WirebasketDecomposition wb(p, grid, Param::Constant(1, 1e5));
    WirebasketResult r;
    auto rng = make_rng(opt.seed, 0x3b);
    const int n = p.def.num_free();
    for (int s = 0; s < cfg.samples; ++s) {
        Vec phi = normal_vector(rng, n);
        const double nphi = phi.norm();
        auto parts = wb.decompose(phi);
        auto comps = wb.components(phi);
        Vec sum = Vec::Zero(n);
        for (const auto& part : parts) sum += wb.to_full(part);
        r.max_sum_error = std::max(r.max_sum_error, (sum - phi).norm() / nphi);
        for (int e = 0; e < grid.num_entities(); ++e) {
            Vec pe = wb.to_full(parts[e]);
            auto again = wb.components(pe);
            double err = 0;
            for (int k = 0; k < grid.num_entities(); ++k)
                err += (k == e ? again[k] - comps[k] : again[k]).squaredNorm();
            r.max_idempotence_error = std::max(r.max_idempotence_error, std::sqrt(err) / nphi);
        }
    }
    r.seconds = since(t0);
    if (!opt.out.empty()) {
        CsvWriter csv(file(opt, "wirebasket.csv"), {"samples", "max_sum_error", "max_idempotence_error"});
        csv << cfg.samples << r.max_sum_error << r.max_idempotence_error;
        csv.endrow();
    }
    return r;
}

CheckResult check_wirebasket(const WirebasketResult& r)
{
    namespace a = acceptance;
    CheckResult c = make_check(5, "wirebasket identity");
    c.pass = r.max_sum_error <= a::wirebasket_rel && r.max_idempotence_error <= a::wirebasket_rel;
    c.detail = fmt("max sum error %.2e; max idempotence error %.2e", r.max_sum_error, r.max_idempotence_error);
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

namespace {

/// same_state: when given, receives the error a residual step would reach from each coupled state.
std::vector<EnrichRecord> enrich_run(EnrichmentSolver& s, bool coupled, int iterations, double target,
                                     std::vector<double>* same_state = nullptr)
{
    std::vector<EnrichRecord> out;
    s.reset();
    for (int i = 0; i < iterations && s.rel_error() > target; ++i) {
        try {
            if (coupled && same_state) {
                EnrichmentSolver trial = s;
                same_state->push_back(trial.residual_step().rel_energy_error);
            }
            out.push_back(coupled ? s.coupled_step() : s.residual_step());
        } catch (const ExhaustedEnrichment&) {
            break;
        }
    }
    return out;
}

void write_enrich_csv(const std::string& path, const std::vector<EnrichRecord>& recs)
{
    CsvWriter csv(path, {"iter", "rel_energy_error", "selected_space", "contraction_quotient", "eq_chungend_lhs",
                         "eq_chungend_rhs", "decrement", "local_sq", "dim"});
    for (const auto& r : recs) {
        csv << r.iter << r.rel_energy_error << r.selected << r.contraction_quotient << r.chungend_lhs << r.chungend_rhs
            << r.decrement << r.selected_norm_sq << r.dim;
        csv.endrow();
    }
}

}  // namespace

EnrichmentResult run_enrichment(const EnrichmentConfig& cfg, const RunOptions& opt)
{
    auto t0 = Clock::now();
    EnrichmentResult r;
    {
        auto p = channels_variant(unit_mesh(cfg.n));
        auto grid = make_coarse_grid(p.def.mesh, cfg.N, cfg.N);
        auto pou = build_pou(p.def, grid);
        r.patches = pou.size();
        EnrichmentSolver s(p, pou);
        if (cfg.mode != EnrichMode::coupled) r.residual = enrich_run(s, false, cfg.max_iterations, cfg.target);
        if (cfg.mode != EnrichMode::residual) {
            int its = cfg.mode == EnrichMode::both ? static_cast<int>(r.residual.size()) : cfg.max_iterations;
            r.coupled = enrich_run(s, true, its, cfg.mode == EnrichMode::both ? 0.0 : cfg.target, &r.residual_same_state);
        }
    }
    if (cfg.mode == EnrichMode::both) {
        auto p = channels_variant(unit_mesh(cfg.small_n));
        auto grid = make_coarse_grid(p.def.mesh, cfg.small_N, cfg.small_N);
        auto pou = build_pou(p.def, grid);
        EnrichmentSolver s(p, pou);
        r.small_c_pu = cpu_bruteforce(pou, s.energy());
        r.small_c_rbe = c_rbe(pou.size(), r.small_c_pu);
        r.small = enrich_run(s, false, cfg.small_iterations, 1e-12);
    }
    r.reference_one_minus_c = one_minus_c_rbe(81, 3.6013e7);
    r.seconds = since(t0);
    if (!opt.out.empty()) {
        if (!r.residual.empty()) write_enrich_csv(file(opt, "enrichment_residual.csv"), r.residual);
        if (!r.coupled.empty()) write_enrich_csv(file(opt, "enrichment_coupled.csv"), r.coupled);
        if (!r.small.empty()) write_enrich_csv(file(opt, "enrichment_contraction.csv"), r.small);
    }
    return r;
}

CheckResult check_enrichment(const EnrichmentResult& r, const EnrichmentConfig& cfg)
{
    namespace a = acceptance;
    CheckResult c = make_check(6, "online enrichment convergence");
    // identities are checked relative to ||u - u_n||^2 = ||u - u_{n+1}||^2 + ||u_{n+1} - u_n||^2
    int monotone = 0, chungend = 0, dominance = 0, optimality = 0, contraction = 0, pythagoras = 0;
    double prev = 1;
    for (const auto& x : r.residual) {
        monotone += x.rel_energy_error > prev * (1 + a::monotone_slack);
        prev = x.rel_energy_error;
        chungend += x.selected_norm_sq - x.decrement > a::chungend_rel * (x.chungend_lhs + x.decrement);
    }
    for (size_t i = 0; i < std::min(r.residual.size(), r.coupled.size()); ++i)
        dominance += r.coupled[i].rel_energy_error > r.residual[i].rel_energy_error * (1 + a::dominance_slack);
    for (size_t i = 0; i < std::min(r.residual_same_state.size(), r.coupled.size()); ++i)
        optimality += r.coupled[i].rel_energy_error > r.residual_same_state[i] * (1 + a::dominance_slack);
    for (const auto& x : r.coupled)
        pythagoras += std::abs(x.decrement - x.selected_norm_sq) > a::chungend_rel * (x.chungend_lhs + x.decrement);
    double worst_q = 0;
    for (const auto& x : r.small) {
        worst_q = std::max(worst_q, x.contraction_quotient);
        contraction += x.contraction_quotient > r.small_c_rbe + a::contraction_slack;
    }
    bool reached = !r.residual.empty() && r.residual.back().rel_energy_error <= cfg.target;
    bool ref = std::abs(r.reference_one_minus_c / a::reference_one_minus_c - 1) <= a::reference_rel;
    c.pass = reached && monotone == 0 && chungend == 0 && dominance == 0 && optimality == 0 && pythagoras == 0 && contraction == 0 &&
             !r.coupled.empty() && !r.small.empty() && ref && r.seconds <= a::enrichment_seconds;
    c.detail = fmt("residual %zu its to %.2e; violations: monotone %d, chungend %d, curve dominance %d, same-state optimality %d, "
                   "pythagoras %d, contraction %d (max q %.6f, c_rbe %.10f); 1-c_rbe(81) %.4e; %.0fs",
                   r.residual.size(), r.residual.empty() ? 1.0 : r.residual.back().rel_energy_error, monotone, chungend,
                   dominance, optimality, pythagoras, contraction, worst_q, r.small_c_rbe, r.reference_one_minus_c, r.seconds);
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

namespace {

ChannelsStage finish_stage(ArbiLoMod& m, int geom, bool reused, int trainings_before, int greedys_before, int iterations_before,
                           Clock::time_point t0)
{
    m.run();
    ChannelsStage s;
    s.geometry = geom;
    s.reused = reused;
    s.trainings = m.trainings() - trainings_before;
    s.greedys = m.greedys() - greedys_before;
    s.iterations = m.iterations() - iterations_before;
    s.converged = m.converged();
    s.max_rel_error = m.max_rel_error();
    s.total_dim = m.total_dim();
    s.faces = static_cast<int>(m.decomposition().grid().faces.size());
    s.seconds = since(t0);
    return s;
}

}  // namespace

ChannelsResult run_channels(const ChannelsConfig& cfg, const RunOptions& opt)
{
    if (cfg.geometries.empty()) throw std::invalid_argument("channels: empty geometry sequence");
    auto t0 = Clock::now();
    auto mesh = unit_mesh(cfg.inv_h);
    ArbiLoModConfig ac = cfg.arbilomod;
    ac.NX = cfg.NX;
    ac.NY = cfg.NY;
    ac.jobs = opt.jobs;
    ac.training.seed = opt.seed;
    if (ac.training.xi.empty()) ac.training.xi = log_uniform_xi(1, 1e5, cfg.xi_size);

    ChannelsResult r;
    std::unique_ptr<ArbiLoMod> model;
    std::unique_ptr<CsvWriter> hist;
    if (!opt.out.empty())
        hist = std::make_unique<CsvWriter>(file(opt, "channels_iterations.csv"),
                                           std::vector<std::string>{"geometry", "reused", "iter", "estimator", "delta_loc",
                                                                    "true_error", "total_dim", "marked", "enriched"});
    auto dump = [&](const ArbiLoMod& m, const ChannelsStage& s, size_t from) {
        if (!hist) return;
        for (size_t i = from; i < m.history().size(); ++i) {
            const auto& h = m.history()[i];
            *hist << s.geometry << static_cast<int>(s.reused) << h.iter << h.max_residual << h.max_delta_loc
                  << h.max_rel_error << h.total_dim << h.marked << h.enriched;
            hist->endrow();
        }
    };

    for (size_t gi = 0; gi < cfg.geometries.size(); ++gi) {
        const int geom = cfg.geometries[gi];
        auto p = thermal_channels(mesh, geom);
        if (!model || !cfg.reuse) {
            auto ts = Clock::now();
            model = std::make_unique<ArbiLoMod>(p, ac);
            model->build();
            auto s = finish_stage(*model, geom, false, 0, 0, 0, ts);
            s.invalid_faces = s.faces;
            dump(*model, s, 0);
            r.stages.push_back(s);
            continue;
        }
        auto ts = Clock::now();
        const int prev = cfg.geometries[gi - 1];
        auto affected = affected_cells(mesh, model->decomposition().grid(), channels_region(prev), channels_region(geom));
        auto oracle = model->invalid_by_rehash(p);
        int tb = model->trainings(), gb = model->greedys(), ib = model->iterations();
        size_t hb = model->history().size();
        auto change = model->change_geometry(p, affected);
        model->build();
        auto s = finish_stage(*model, geom, true, tb, gb, ib, ts);
        s.invalid_faces = change.invalid_faces;
        s.hash_oracle_agrees = oracle == change.invalid;
        dump(*model, s, hb);
        r.stages.push_back(s);
        if (cfg.compare_scratch) {
            auto ts2 = Clock::now();
            ArbiLoMod fresh(p, ac);
            fresh.build();
            auto s2 = finish_stage(fresh, geom, false, 0, 0, 0, ts2);
            s2.invalid_faces = s2.faces;
            dump(fresh, s2, 0);
            r.stages.push_back(s2);
        }
    }
    r.seconds = since(t0);
    if (!opt.out.empty()) {
        CsvWriter csv(file(opt, "channels_stages.csv"),
                      {"geometry", "reused", "trainings", "faces", "invalid_faces", "iterations", "greedys", "converged",
                       "max_rel_error", "total_dim", "hash_oracle_agrees"});
        for (const auto& s : r.stages) {
            csv << s.geometry << static_cast<int>(s.reused) << s.trainings << s.faces << s.invalid_faces << s.iterations
                << s.greedys << static_cast<int>(s.converged) << s.max_rel_error << s.total_dim
                << static_cast<int>(s.hash_oracle_agrees);
            csv.endrow();
        }
        if (model) {
            CsvWriter ent(file(opt, "channels_entities.csv"),
                          {"entity", "codim", "dim", "vertex", "training", "greedy", "enrichment"});
            for (const auto& sp : model->spaces()) {
                int cnt[4] = {0, 0, 0, 0};
                for (auto t : sp.tags) ++cnt[static_cast<int>(t)];
                ent << sp.entity << model->decomposition().grid().entities[sp.entity].codim << sp.dim() << cnt[0] << cnt[1]
                    << cnt[2] << cnt[3];
                ent.endrow();
            }
        }
    }
    return r;
}

CheckResult check_channels(const ChannelsResult& r)
{
    namespace a = acceptance;
    CheckResult c = make_check(7, "ArbiLoMod pipeline and reuse");
    const ChannelsStage* first = r.stages.empty() ? nullptr : &r.stages.front();
    const ChannelsStage *reuse = nullptr, *scratch = nullptr;
    for (const auto& s : r.stages)
        if (s.geometry == 2 && s.reused) reuse = &s;
    for (const auto& s : r.stages)
        if (s.geometry == 2 && !s.reused && &s != first) scratch = &s;
    if (!first || !reuse || !scratch) {
        c.detail = "needs geometry 1 then 2 with reuse and a from-scratch baseline";
        return c;
    }
    double frac = double(reuse->invalid_faces) / reuse->faces;
    c.pass = first->converged && first->max_rel_error <= a::channels_rel_error && reuse->converged &&
             reuse->max_rel_error <= a::channels_rel_error && frac <= a::invalid_fraction &&
             reuse->trainings < scratch->trainings && reuse->iterations < scratch->iterations &&
             reuse->hash_oracle_agrees && r.seconds <= a::channels_seconds;
    c.detail = fmt("geom 1: %d its, error %.2e; geom 2 reuse: %d/%d faces retrained (%.1f%%), %d its, error %.2e, oracle %s; "
                   "scratch: %d trainings, %d its; %.0fs",
                   first->iterations, first->max_rel_error, reuse->trainings, reuse->faces, 100 * frac, reuse->iterations,
                   reuse->max_rel_error, reuse->hash_oracle_agrees ? "agrees" : "differs", scratch->trainings,
                   scratch->iterations, r.seconds);
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

GramSchmidtResult run_gram_schmidt(const GramSchmidtConfig& cfg, const RunOptions& opt)
{
    auto t0 = Clock::now();
    GramSchmidtResult r;
    std::vector<std::vector<double>> iters(cfg.N);
    Vec e_ad = Vec::Zero(cfg.N), e_gr = Vec::Zero(cfg.N), e_re = Vec::Zero(cfg.N);
    for (int rep = 0; rep < cfg.repeats; ++rep) {
        auto rng = make_rng(opt.seed, 0x65000ull + rep);
        Mat G(cfg.dim, cfg.N);
        for (Index j = 0; j < G.cols(); ++j) G.col(j) = normal_vector(rng, cfg.dim);
        Eigen::HouseholderQR<Mat> qr(G);
        Mat Phi = qr.householderQ() * Mat::Identity(cfg.dim, cfg.N);
        Mat T(cfg.dim, cfg.N);
        Vec acc = Vec::Zero(cfg.dim);
        for (int i = 0; i < cfg.N; ++i) {
            acc += std::ldexp(1.0, -(i + 1)) * Phi.col(i);
            T.col(i) = acc;
        }
        auto run = [&](GSVariant v) {
            GSOptions o;
            o.variant = v;
            o.drop_tol = 0;
            return gram_schmidt<double>(T, [](const Vec& a, const Vec& b) { return a.dot(b); }, o);
        };
        auto ad = run(GSVariant::adaptive), gr = run(GSVariant::gram), re = run(GSVariant::reiterated);
        auto dot = [](const auto& a, const auto& b) { return a.dot(b); };
        auto upd = [&](Vec& worst, const GSResult<double>& g) {
            Vec e = orthonormality_errors(g.basis, dot);
            for (Index i = 0; i < e.size(); ++i) worst[i] = std::max(worst[i], e[i]);
        };
        upd(e_ad, ad);
        upd(e_gr, gr);
        upd(e_re, re);
        for (size_t i = 0; i < ad.iterations.size(); ++i) iters[ad.kept[i]].push_back(ad.iterations[i]);
    }
    r.worst_adaptive = e_ad.maxCoeff();
    r.worst_gram = e_gr.maxCoeff();
    r.worst_reiterated = e_re.maxCoeff();
    std::vector<double> med(cfg.N);
    for (int i = 0; i < cfg.N; ++i) {
        med[i] = median(iters[i]);
        r.median_adaptive_iterations = std::max(r.median_adaptive_iterations, med[i]);
    }
    r.seconds = since(t0);
    if (!opt.out.empty()) {
        CsvWriter csv(file(opt, "gram_schmidt.csv"), {"i", "e1_adaptive", "e1_gram", "e1_reiterated2", "median_iterations"});
        for (int i = 0; i < cfg.N; ++i) {
            csv << i + 1 << e_ad[i] << e_gr[i] << e_re[i] << med[i];
            csv.endrow();
        }
    }
    return r;
}

CheckResult check_gram_schmidt(const GramSchmidtResult& r)
{
    namespace a = acceptance;
    CheckResult c = make_check(8, "Gram-Schmidt bench");
    c.pass = r.worst_adaptive <= a::gs_adaptive && r.worst_gram >= a::gs_gram_min && r.worst_reiterated <= a::gs_reiterated &&
             r.median_adaptive_iterations <= a::gs_median_iterations;
    c.detail = fmt("worst e1: adaptive %.2e, gram %.2e, re-iterated(2) %.2e; max median iterations %.1f", r.worst_adaptive,
                   r.worst_gram, r.worst_reiterated, r.median_adaptive_iterations);
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

RelativeResult run_relative(const RelativeConfig& cfg, const RunOptions& opt)
{
    auto t0 = Clock::now();
    RelativeResult r;
    auto rng = make_rng(opt.seed, 0x4e1);
    std::uniform_real_distribution<double> U(0, 1);
    for (int t = 0; t < cfg.triples; ++t) {
        double nu = std::pow(10.0, 6 * U(rng) - 3);
        double d = 0.5 * nu * U(rng);
        r.order_violations += rel_new(d, nu) > rel_classic(d, nu);
    }
    std::unique_ptr<CsvWriter> csv;
    if (!opt.out.empty())
        csv = std::make_unique<CsvWriter>(file(opt, "relative_estimators.csv"),
                                          std::vector<std::string>{"pair", "true_rel", "delta", "norm_u_red", "rel_new", "rel_classic"});
    for (int t = 0; t < cfg.pairs;) {
        Vec u = normal_vector(rng, cfg.n);
        Vec e = normal_vector(rng, cfg.n);
        e *= U(rng) * 0.3 * u.norm() / e.norm();
        Vec ur = u - e;
        double delta = e.norm() * (1 + U(rng));
        if (delta > 0.5 * ur.norm()) continue;
        double tr = e.norm() / u.norm();
        double rn = rel_new(delta, ur.norm()), rc = rel_classic(delta, ur.norm());
        r.bound_violations += tr > rn || tr > rc;
        if (csv) {
            *csv << t << tr << delta << ur.norm() << rn << rc;
            csv->endrow();
        }
        ++t;
    }
    for (double nu : {1e-3, 0.7, 1.0, 3.0, 1e4}) {
        r.boundary_error = std::max(r.boundary_error, std::abs(rel_new(nu / 2, nu) - rel_classic(nu / 2, nu)));
        r.boundary_error = std::max(r.boundary_error, std::abs(rel_new(nu / 2, nu) - 1));
    }
    r.seconds = since(t0);
    return r;
}

CheckResult check_relative(const RelativeResult& r)
{
    namespace a = acceptance;
    CheckResult c = make_check(9, "relative error estimators");
    c.pass = r.order_violations == 0 && r.bound_violations == 0 && r.boundary_error <= a::boundary_equality;
    c.detail = fmt("order violations %d; bound violations %d; boundary mismatch %.1e", r.order_violations, r.bound_violations,
                   r.boundary_error);
    c.seconds = r.seconds;
    return c;
}

// ---------------------------------------------------------------------------

ConstantsReport run_constants(int n, int N, const RunOptions& opt)
{
    ConstantsReport r;
    r.n = n;
    r.N = N;
    auto p = channels_variant(unit_mesh(n));
    auto grid = make_coarse_grid(p.def.mesh, N, N);
    auto pou = build_pou(p.def, grid);
    SpMat E = p.form.assemble_A(Param(0));
    r.c_pu_brute = cpu_bruteforce(pou, E);
    r.c_I = interpolation_constant(p.def, pou);
    r.c_pu_h1_bound = cpu_upper_bound_h1(r.c_I, std::sqrt(pou.grad_rho_sq()), 1.0, pou.c_ovl);
    double contrast = p.def.sigma_base.maxCoeff() / p.def.sigma_base.minCoeff();
    r.c_pu_energy_bound_sq = cpu_energy_bound_sq(p.def.C_F, contrast, pou.grad_rho_sq(), max_rho_sq(pou), pou.c_ovl);
    r.reference_c_pu_sq = cpu_energy_bound_sq(1 / (std::sqrt(2.0) * std::numbers::pi), 1e5, 200, 1, 4);
    r.reference_one_minus_c = one_minus_c_rbe(81, r.reference_c_pu_sq);
    if (!opt.out.empty()) {
        CsvWriter csv(file(opt, "constants.csv"),
                      {"n", "N", "patches", "c_pu_brute_energy", "c_I", "c_pu_h1_bound", "c_pu_energy_bound_sq",
                       "reference_c_pu_sq", "reference_one_minus_c_rbe"});
        csv << n << N << pou.size() << r.c_pu_brute << r.c_I << r.c_pu_h1_bound << r.c_pu_energy_bound_sq
            << r.reference_c_pu_sq << r.reference_one_minus_c;
        csv.endrow();
    }
    return r;
}

// ---------------------------------------------------------------------------

std::vector<CheckResult> run_acceptance(const RunOptions& opt, const std::vector<int>& only)
{
    auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
    std::vector<CheckResult> out;
    auto guarded = [&](int id, const char* name, auto&& body) {
        if (!want(id)) return;
        try {
            out.push_back(body());
        } catch (const std::exception& e) {
            auto c = make_check(id, name);
            c.detail = std::string("exception: ") + e.what();
            out.push_back(c);
        }
    };

    guarded(1, "thermal block stable splitting", [&] { return check_splitting(run_splitting({}, opt)); });

    RangefinderConfig analytic;
    std::optional<RangefinderResult> analytic_result;
    if (want(2) || want(3)) {
        try {
            analytic_result = run_rangefinder(analytic, opt);
        } catch (const std::exception& e) {
            for (int id : {2, 3})
                if (want(id)) {
                    auto c = make_check(id, id == 2 ? "rangefinder analytic example" : "norm estimator statistics");
                    c.detail = std::string("exception: ") + e.what();
                    out.push_back(c);
                }
        }
    }
    if (analytic_result) {
        guarded(2, "rangefinder analytic example", [&] { return check_rangefinder_analytic(*analytic_result, analytic); });
        guarded(3, "norm estimator statistics", [&] { return check_norm_estimator(run_norm_estimator({}, opt), *analytic_result); });
    }
    guarded(4, "localization inequalities", [&] { return check_localization(run_localization({}, opt)); });
    guarded(5, "wirebasket identity", [&] { return check_wirebasket(run_wirebasket({}, opt)); });
    guarded(6, "online enrichment convergence", [&] {
        EnrichmentConfig cfg;
        return check_enrichment(run_enrichment(cfg, opt), cfg);
    });
    guarded(7, "ArbiLoMod pipeline and reuse", [&] { return check_channels(run_channels({}, opt)); });
    guarded(8, "Gram-Schmidt bench", [&] { return check_gram_schmidt(run_gram_schmidt({}, opt)); });
    guarded(9, "relative error estimators", [&] { return check_relative(run_relative({}, opt)); });
    guarded(10, "helmholtz rangefinder", [&] {
        RangefinderConfig h;
        h.k = 30;
        h.L = 1;
        h.W = 1;
        return check_rangefinder_helmholtz(run_rangefinder(h, opt), h);
    });
    std::sort(out.begin(), out.end(), [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
    return out;
}

}  // namespace lmor
