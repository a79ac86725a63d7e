#include "lmor/reduction.hpp"
#include "lmor/errorest.hpp"
#include "lmor/rangefinder.hpp"
#include "lmor/rng.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <limits>

namespace lmor {

const char* to_string(Provenance p)
{
    switch (p) {
    case Provenance::vertex: return "vertex";
    case Provenance::training: return "training";
    case Provenance::greedy: return "greedy";
    case Provenance::enrichment: return "enrichment";
    }
    return "?";
}

Mat snapshot_greedy(std::vector<Vec> Z, double eps, const InnerProduct& ip, const Mat& start)
{
    OrthoBasis B(ip);
    for (Index j = 0; j < start.cols(); ++j) B.append_orthonormal(start.col(j));
    if (B.dim())
        for (auto& z : Z) z = B.orthogonalize(z);
    while (true) {
        int best = -1;
        double best_norm = eps;
        for (size_t k = 0; k < Z.size(); ++k) {
            double n = ip.norm(Z[k]);
            if (n > best_norm) {
                best_norm = n;
                best = static_cast<int>(k);
            }
        }
        if (best < 0) break;
        if (!B.extend(Z[best])) {
            Z[best].setZero();
            continue;
        }
        const Index j = B.dim() - 1;
        Vec b = B.basis().col(j), mb = B.applied().col(j);
        for (auto& z : Z) z -= mb.dot(z) * b;
    }
    return B.basis();
}

ParameterCache make_parameter_cache(const Problem& p, const std::vector<Param>& mus)
{
    ParameterCache c;
    c.mus = mus;
    for (const auto& mu : mus) {
        c.A.push_back(p.form.assemble_A(mu));
        c.f.push_back(p.form.assemble_f(mu));
        c.alpha.push_back(p.def.alpha_lb(mu));
    }
    return c;
}

std::vector<Param> log_uniform_xi(double lo, double hi, int n)
{
    if (n < 1 || !(lo > 0) || hi < lo) throw std::invalid_argument("log_uniform_xi: invalid range");
    std::vector<Param> xi;
    for (int i = 0; i < n; ++i) {
        double t = n == 1 ? 0.0 : double(i) / (n - 1);
        xi.push_back(Param::Constant(1, std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))));
    }
    return xi;
}

LocalReducedSpace vertex_space(const Problem& p, const WirebasketDecomposition& wb, int vertex_e)
{
    LocalReducedSpace s;
    s.entity = vertex_e;
    s.dofs = wb.ext_domain(vertex_e);
    Vec v = wb.extension(vertex_e).col(0);
    InnerProduct H(submatrix(p.def.h1, s.dofs, s.dofs), "H1(ext)");
    s.basis = v / H.norm(v);
    s.tags = {Provenance::vertex};
    return s;
}

LocalReducedSpace train_face(const Problem& p, const WirebasketDecomposition& wb, int face_e, const TrainingConfig& cfg)
{
    LocalReducedSpace s;
    s.entity = face_e;
    s.dofs = wb.ext_domain(face_e);
    auto rng = make_rng(cfg.seed, static_cast<std::uint64_t>(face_e));
    std::vector<Vec> Z;
    InnerProduct range;
    for (const auto& mu : cfg.xi) {
        auto op = arbilomod_transfer_operator(p, wb, face_e, mu);
        range = op.range;
        Z.push_back(op.affine);
        for (int m = 0; m < cfg.M; ++m) Z.push_back(op.linear(uniform_vector(rng, op.n_source())));
    }
    Mat C = snapshot_greedy(std::move(Z), cfg.eps_train, range);
    s.basis = wb.extension(face_e) * C;
    s.tags.assign(C.cols(), Provenance::training);
    return s;
}

LocalReducedSpace train_face_randomized(const Problem& p, const WirebasketDecomposition& wb, int face_e, const Param& mu,
                                        double tol, int n_t, double eps_algofail, std::uint64_t seed)
{
    LocalReducedSpace s;
    s.entity = face_e;
    s.dofs = wb.ext_domain(face_e);
    auto rng = make_rng(seed, static_cast<std::uint64_t>(face_e));
    auto op = arbilomod_transfer_operator(p, wb, face_e, mu);
    auto rb = adaptive_range_approximation(op, tol, n_t, eps_algofail, rng);
    s.basis = wb.extension(face_e) * rb.basis;
    s.tags.assign(rb.basis.cols(), Provenance::training);
    return s;
}

GreedyReport local_greedy_cell(const Problem& p, const WirebasketDecomposition& wb, const ParameterCache& cache,
                               const std::vector<LocalReducedSpace>& spaces, LocalReducedSpace& cell, double eps_greedy,
                               int max_iter)
{
    const int ce = cell.entity;
    const auto& C = wb.basic(ce);
    const Index nC = static_cast<Index>(C.size());
    InnerProduct H(submatrix(p.def.h1, C, C), "H1(cell)");

    std::vector<int> U;
    for (int e : wb.coupling_entities(ce)) U.insert(U.end(), spaces[e].dofs.begin(), spaces[e].dofs.end());
    std::sort(U.begin(), U.end());
    U.erase(std::unique(U.begin(), U.end()), U.end());
    int nb = 0;
    for (int e : wb.coupling_entities(ce)) nb += spaces[e].dim();
    Mat PsiU = Mat::Zero(U.size(), nb);
    {
        int col = 0;
        for (int e : wb.coupling_entities(ce)) {
            const auto& s = spaces[e];
            std::vector<int> pos;
            for (int d : s.dofs) pos.push_back(static_cast<int>(std::lower_bound(U.begin(), U.end(), d) - U.begin()));
            for (Index j = 0; j < s.basis.cols(); ++j, ++col)
                for (size_t k = 0; k < pos.size(); ++k) PsiU(pos[k], col) = s.basis(k, j);
        }
    }

    const size_t nmu = cache.mus.size();
    std::vector<SpMat> ACC(nmu);
    std::vector<Eigen::SimplicialLDLT<SpMat>> exact(nmu);
    std::vector<Mat> G(nmu);
    for (size_t m = 0; m < nmu; ++m) {
        ACC[m] = submatrix(cache.A[m], C, C);
        exact[m].compute(ACC[m]);
        if (exact[m].info() != Eigen::Success) throw SolverFailure("local greedy: factorization failed");
        G[m].resize(nC, 1 + nb);
        G[m].col(0) = gather(cache.f[m], C);
        if (nb) G[m].rightCols(nb) = -(submatrix(cache.A[m], C, U) * PsiU);
    }

    OrthoBasis B(H);
    if (cell.basis.rows() == 0) cell.basis.resize(nC, 0);
    for (Index j = 0; j < cell.basis.cols(); ++j) B.append_orthonormal(cell.basis.col(j));

    GreedyReport rep;
    double prev = std::numeric_limits<double>::infinity();
    int non_decreasing = 0;
    while (true) {
        double best = -1;
        size_t bm = 0;
        Index bj = 0;
        for (size_t m = 0; m < nmu; ++m) {
            Mat R = G[m];
            if (B.dim()) {
                Mat AB = ACC[m] * B.basis();
                Mat Ar = B.basis().transpose() * AB;
                Mat X = Ar.ldlt().solve(B.basis().transpose() * G[m]);
                R -= AB * X;
            }
            Mat Z = H.solve(R);
            for (Index j = 0; j < R.cols(); ++j) {
                double est = std::sqrt(std::max(0.0, R.col(j).dot(Z.col(j)))) / cache.alpha[m];
                if (est > best) {
                    best = est;
                    bm = m;
                    bj = j;
                }
            }
        }
        rep.max_estimate = best;
        if (best <= eps_greedy || rep.iterations >= max_iter) break;
        if (best >= prev) {
            if (++non_decreasing >= 3) {
                rep.stagnated = true;
                break;
            }
        } else {
            non_decreasing = 0;
        }
        prev = best;
        Vec u = exact[bm].solve(Vec(G[bm].col(bj)));
        if (!B.extend(u)) {
            rep.stagnated = true;
            break;
        }
        cell.tags.push_back(Provenance::greedy);
        ++rep.iterations;
    }
    cell.dofs = C;
    cell.basis = B.basis();
    return rep;
}

namespace {

ReducedModel project_model(const AffineForm& form, SpMat B, std::vector<int> owners)
{
    ReducedModel m;
    m.B = std::move(B);
    m.entity_of_col = std::move(owners);
    SpMat Bt = m.B.transpose();
    for (const auto& A : form.A) {
        SpMat AB = A * m.B;
        SpMat r = Bt * AB;
        m.A.push_back(r);
    }
    for (const auto& f : form.f) m.f.push_back(Bt * f);
    return m;
}

}  // namespace

ReducedModel assemble_reduced(const AffineForm& form, const std::vector<LocalReducedSpace>& spaces, int n_free)
{
    std::vector<Triplet> t;
    std::vector<int> owners;
    int col = 0;
    for (const auto& s : spaces) {
        for (Index j = 0; j < s.basis.cols(); ++j, ++col) {
            for (size_t k = 0; k < s.dofs.size(); ++k)
                if (s.basis(k, j) != 0) t.emplace_back(s.dofs[k], col, s.basis(k, j));
            owners.push_back(s.entity);
        }
    }
    if (col == 0) throw std::invalid_argument("assemble_reduced: all local spaces are empty");
    SpMat B(n_free, col);
    B.setFromTriplets(t.begin(), t.end());
    return project_model(form, std::move(B), std::move(owners));
}

ReducedModel assemble_reduced(const AffineForm& form, const Mat& basis)
{
    if (basis.cols() == 0) throw std::invalid_argument("assemble_reduced: empty basis");
    SpMat B = basis.sparseView();
    return project_model(form, std::move(B), std::vector<int>(basis.cols(), -1));
}

ReducedSolution solve_reduced(const ReducedModel& model, const AffineForm& form, const Param& mu)
{
    auto ta = form.eval_theta_a(mu);
    auto tf = form.eval_theta_f(mu);
    SpMat A = ta[0] * model.A[0];
    for (size_t q = 1; q < model.A.size(); ++q) A += ta[q] * model.A[q];
    Vec f = tf[0] * model.f[0];
    for (size_t q = 1; q < model.f.size(); ++q) f += tf[q] * model.f[q];

    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    const Index n = A.rows();
    Vec diag = A.diagonal();
    int bad = -1;
    if (ldlt.info() != Eigen::Success) {
        bad = 0;
    } else {
        const Vec& D = ldlt.vectorD();
        const auto& perm = ldlt.permutationP().indices();
        for (Index i = 0; i < n; ++i) {
            double d = D[perm[i]];
            if (!(std::abs(d) >= 1e-12 * std::abs(diag[i]))) {
                bad = static_cast<int>(i);
                break;
            }
        }
    }
    if (bad >= 0) {
        int partner = bad;
        double best = -1;
        for (SpMat::InnerIterator it(A, bad); it; ++it) {
            if (it.row() == bad) continue;
            double c = std::abs(it.value()) / std::sqrt(std::abs(diag[bad] * diag[it.row()]));
            if (c > best) {
                best = c;
                partner = static_cast<int>(it.row());
            }
        }
        int ea = model.entity_of_col.empty() ? -1 : model.entity_of_col[bad];
        int eb = model.entity_of_col.empty() ? -1 : model.entity_of_col[partner];
        throw ReducedSingular("reduced system singular: near-dependent basis between entities " + std::to_string(ea) +
                                  " and " + std::to_string(eb),
                              ea, eb);
    }
    ReducedSolution s;
    s.coeffs = ldlt.solve(f);
    s.u = model.B * s.coeffs;
    return s;
}

std::vector<Param> tensor_subsample(const Param& lo, const Param& hi, int per_axis, int count, std::uint64_t seed)
{
    const int d = static_cast<int>(lo.size());
    if (per_axis < 1 || d < 1) throw std::invalid_argument("tensor_subsample: empty grid");
    long total = 1;
    for (int k = 0; k < d; ++k) total *= per_axis;
    std::vector<long> idx(total);
    for (long i = 0; i < total; ++i) idx[i] = i;
    auto rng = make_rng(seed, 0x7e57);
    if (count < total) {
        for (long i = 0; i < count; ++i) {
            std::uniform_int_distribution<long> pick(i, total - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(count);
        std::sort(idx.begin(), idx.end());
    }
    std::vector<Param> out;
    for (long id : idx) {
        Param mu(d);
        long r = id;
        for (int k = 0; k < d; ++k) {
            int i = static_cast<int>(r % per_axis);
            r /= per_axis;
            mu[k] = per_axis == 1 ? lo[k] : lo[k] + (hi[k] - lo[k]) * i / (per_axis - 1);
        }
        out.push_back(mu);
    }
    return out;
}

WeakGreedyResult weak_greedy(const Problem& p, const std::vector<Param>& xi, double tol, EstimatorKind kind, int n_max,
                             std::uint64_t seed, double floor_rel)
{
    const auto& form = p.form;
    const int n = form.size();
    InnerProduct V(p.def.h1, "H1");
    WeakGreedyResult out;

    auto rng = make_rng(seed, 2);
    std::vector<Vec> held_truth;
    for (int k = 0; k < 10; ++k) {
        Param mu(form.num_params());
        for (int d = 0; d < mu.size(); ++d)
            mu[d] = std::uniform_real_distribution<double>(form.lower[d], form.upper[d])(rng);
        out.held_out.push_back(mu);
        held_truth.push_back(solve_free(form, mu));
    }
    std::vector<double> fnorm;
    for (const auto& mu : xi) fnorm.push_back(dual_norm(V, form.assemble_f(mu)));

    // the direct oracle forms residuals in extended precision to avoid cancellation
    using LMat = Eigen::SparseMatrix<long double>;
    using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    std::vector<LMat> Aq_ld;
    std::vector<LVec> fq_ld;
    for (const auto& A : form.A) Aq_ld.push_back(A.cast<long double>());
    for (const auto& f : form.f) fq_ld.push_back(f.cast<long double>());
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> B_ld(n, 0);
    auto direct_residual = [&](const Param& mu, const Vec& c) -> Vec {
        auto ta = form.eval_theta_a(mu);
        auto tf = form.eval_theta_f(mu);
        LVec u = c.size() ? LVec(B_ld * c.cast<long double>()) : LVec(LVec::Zero(n));
        LVec R = LVec::Zero(n);
        for (size_t q = 0; q < fq_ld.size(); ++q) R += static_cast<long double>(tf[q]) * fq_ld[q];
        for (size_t q = 0; q < Aq_ld.size(); ++q) R -= static_cast<long double>(ta[q]) * (Aq_ld[q] * u);
        return R.cast<double>();
    };

    OrthoBasis RB(V);
    ResidualRep rep(form, V);
    rep.extend(Mat(n, 0));
    std::vector<Mat> AqB(form.A.size(), Mat(n, 0));
    std::vector<Mat> Ar(form.A.size(), Mat(0, 0));
    std::vector<Vec> fr(form.f.size(), Vec(0));

    auto reduced = [&](const Param& mu) -> Vec {
        const Index N = RB.dim();
        if (N == 0) return Vec(0);
        auto ta = form.eval_theta_a(mu);
        auto tf = form.eval_theta_f(mu);
        Mat A = Mat::Zero(N, N);
        Vec f = Vec::Zero(N);
        for (size_t q = 0; q < Ar.size(); ++q) A += ta[q] * Ar[q];
        for (size_t q = 0; q < fr.size(); ++q) f += tf[q] * fr[q];
        return A.ldlt().solve(f);
    };

    for (int step = 0;; ++step) {
        GreedyStep g;
        g.n = static_cast<int>(RB.dim());
        g.min_trad_estimate = std::numeric_limits<double>::infinity();
        double best = -1;
        for (size_t m = 0; m < xi.size(); ++m) {
            Vec c = reduced(xi[m]);
            double direct = dual_norm(V, direct_residual(xi[m], c)) / fnorm[m];
            double imp = rep.online(xi[m], c) / fnorm[m];
            bool clamped = false;
            double trad = rep.traditional(xi[m], c, &clamped) / fnorm[m];
            g.negative_clamps += clamped;
            g.max_direct = std::max(g.max_direct, direct);
            g.max_improved = std::max(g.max_improved, imp);
            g.max_traditional = std::max(g.max_traditional, trad);
            if (direct >= floor_rel) {
                double di = std::abs(imp - direct) / direct, dt = std::abs(trad - direct) / direct;
                g.dev_improved = std::max(g.dev_improved, di);
                g.dev_traditional = std::max(g.dev_traditional, dt);
                if (dt > 1e-3) g.min_trad_estimate = std::min(g.min_trad_estimate, trad);
            }
            double est = kind == EstimatorKind::improved ? imp : trad;
            if (est > best) {
                best = est;
                g.selected = static_cast<int>(m);
            }
        }
        for (size_t k = 0; k < out.held_out.size(); ++k) {
            Vec c = reduced(out.held_out[k]);
            Vec u = RB.dim() ? Vec(RB.basis() * c) : Vec(Vec::Zero(n));
            g.max_true_error = std::max(g.max_true_error, V.norm(held_truth[k] - u) / V.norm(held_truth[k]));
        }
        out.steps.push_back(g);
        if (best <= tol || g.n >= n_max) break;

        Vec snap = solve_free(form, xi[g.selected]);
        if (!RB.extend(snap)) break;
        Vec b = RB.basis().col(RB.dim() - 1);
        B_ld.conservativeResize(Eigen::NoChange, RB.dim());
        B_ld.col(RB.dim() - 1) = b.cast<long double>();
        rep.extend(b);
        const Index N = RB.dim();
        for (size_t q = 0; q < form.A.size(); ++q) {
            AqB[q].conservativeResize(Eigen::NoChange, N);
            AqB[q].col(N - 1) = form.A[q] * b;
            Ar[q] = RB.basis().transpose() * AqB[q];
            Ar[q] = 0.5 * (Ar[q] + Ar[q].transpose()).eval();
        }
        for (size_t q = 0; q < form.f.size(); ++q) fr[q] = RB.basis().transpose() * form.f[q];
    }
    out.basis = RB.basis();
    return out;
}

}  // namespace lmor
