#include "lmor/errorest.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <numeric>

namespace lmor {

Vec residual(const AffineForm& form, const Param& mu, const Vec& u)
{
    auto ta = form.eval_theta_a(mu);
    Vec r = form.assemble_f(mu);
    for (size_t q = 0; q < form.A.size(); ++q) r -= ta[q] * (form.A[q] * u);
    return r;
}

double global_delta(const AffineForm& form, const InnerProduct& V, const Param& mu, const Vec& u, double alpha_lb)
{
    if (!(alpha_lb > 0)) throw std::invalid_argument("global_delta: alpha_lb must be positive");
    return dual_norm(V, residual(form, mu, u)) / alpha_lb;
}

std::vector<InnerProduct> patch_products(const PoUDecomposition& pou, const SpMat& M)
{
    std::vector<InnerProduct> out;
    out.reserve(pou.size());
    for (int i = 0; i < pou.size(); ++i) out.emplace_back(submatrix(M, pou.dofs[i], pou.dofs[i]), "patch");
    return out;
}

std::vector<double> local_dual_norms(const Vec& R, const PoUDecomposition& pou, const std::vector<InnerProduct>& products)
{
    std::vector<double> n(pou.size());
    for (int i = 0; i < pou.size(); ++i) n[i] = dual_norm(products[i], gather(R, pou.dofs[i]));
    return n;
}

double delta_loc_l(const std::vector<double>& local, const std::vector<double>& c_i, double alpha_lb)
{
    if (local.size() != c_i.size()) throw std::invalid_argument("delta_loc_l: size mismatch");
    double s = 0;
    for (size_t i = 0; i < local.size(); ++i) s += c_i[i] * local[i];
    return s / alpha_lb;
}

double delta_loc_g(const std::vector<double>& local, double c_pu, double alpha_lb)
{
    double s = 0;
    for (double v : local) s += v * v;
    return c_pu * std::sqrt(s) / alpha_lb;
}

double cpu_upper_bound_h1(double c_I, double c_phi, double H, int c_ovl)
{
    double g = c_phi / H;
    return std::sqrt(4 + 2 * c_I * c_I + 4 * g * g) * std::sqrt(double(c_ovl));
}

double cpu_energy_bound_sq(double C_F, double contrast, double grad_rho_sq, double max_rho_sq, int c_ovl)
{
    return 2.0 * c_ovl * (C_F * contrast * grad_rho_sq + max_rho_sq);
}

double cpu_bruteforce(const PoUDecomposition& pou, const SpMat& M, const Mat& reduced, int max_dofs)
{
    const Index n = M.rows();
    if (n > max_dofs) throw std::invalid_argument("cpu_bruteforce: problem exceeds the dense size cap");
    Mat K = Mat::Zero(n, n);
    for (int i = 0; i < pou.size(); ++i) {
        const auto& d = pou.dofs[i];
        Mat Mi = Mat(submatrix(M, d, d));
        Mat Q = Mi;
        if (reduced.cols() > 0) {
            // reduced functions supported in the patch
            std::vector<char> inside(n, 0);
            for (int k : d) inside[k] = 1;
            std::vector<int> out;
            for (Index k = 0; k < n; ++k)
                if (!inside[k]) out.push_back(static_cast<int>(k));
            Mat Wout(out.size(), reduced.cols());
            for (size_t k = 0; k < out.size(); ++k) Wout.row(k) = reduced.row(out[k]);
            Eigen::JacobiSVD<Mat> svd(Wout, Eigen::ComputeFullV);
            const Vec& s = svd.singularValues();
            double tol = 1e-12 * std::max(1.0, s.size() ? s[0] : 0.0);
            int rank = 0;
            for (Index k = 0; k < s.size(); ++k) rank += s[k] > tol;
            Index nullity = reduced.cols() - rank;
            if (nullity > 0) {
                Mat Z = reduced * svd.matrixV().rightCols(nullity);
                Mat Zi(d.size(), nullity);
                for (size_t k = 0; k < d.size(); ++k) Zi.row(k) = Z.row(d[k]);
                Mat MZ = Mi * Zi;
                Mat G = Zi.transpose() * MZ;
                Q -= MZ * G.ldlt().solve(MZ.transpose());
            }
        }
        for (size_t a = 0; a < d.size(); ++a)
            for (size_t b = 0; b < d.size(); ++b) K(d[a], d[b]) += pou.rho[i][a] * Q(a, b) * pou.rho[i][b];
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(K, Mat(M), Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

namespace {

double hat_slope(int I, int n, double t)
{
    if (n == 2) return 0.0;
    if (I == 1 && t <= 1) return 0.0;
    if (I == n - 1 && t >= n - 1) return 0.0;
    if (std::abs(t - I) >= 1) return 0.0;
    return t > I ? -1.0 : 1.0;
}

double hat_value(int I, int n, double t)
{
    if (n == 2) return 1.0;
    if (I == 1 && t <= 1) return 1.0;
    if (I == n - 1 && t >= n - 1) return 1.0;
    return std::max(0.0, 1.0 - std::abs(t - I));
}

struct Quadrature {
    std::vector<std::array<double, 3>> pts;  // xi, eta, weight on the reference triangle
};

const Quadrature& duffy_rule()
{
    static const Quadrature q = [] {
        const double x[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                             0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
        const double w[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                             0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
        Quadrature r;
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b) {
                double u = 0.5 * (x[a] + 1), v = 0.5 * (x[b] + 1);
                r.pts.push_back({u, v * (1 - u), 0.25 * w[a] * w[b] * (1 - u)});
            }
        return r;
    }();
    return q;
}

}  // namespace

double interpolation_constant(const ProblemDefinition& def, const PoUDecomposition& pou)
{
    const auto& mesh = def.mesh;
    const int rx = mesh.nx / pou.NX, ry = mesh.ny / pou.NY;
    double worst = 0;
    for (int i = 0; i < pou.size(); ++i) {
        auto [I, J] = pou.vertex[i];
        std::vector<int> tris;
        for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
            auto c = mesh.cell_of(t);
            int ci = c[0] / rx, cj = c[1] / ry;
            if ((ci == I - 1 || ci == I) && (cj == J - 1 || cj == J)) tris.push_back(t);
        }
        std::vector<int> local(mesh.num_dofs(), -1);
        int nl = 0;
        for (int t : tris)
            for (int d : mesh.triangles[t])
                if (def.free_index[d] >= 0 && local[d] < 0) local[d] = nl++;
        Mat Q = Mat::Zero(nl, nl), H = Mat::Zero(nl, nl);
        auto rho = [&](double x, double y) {
            return hat_value(I, pou.NX, (x - pou.domain_x0) / pou.Hx) * hat_value(J, pou.NY, (y - pou.domain_y0) / pou.Hy);
        };
        auto grad_rho = [&](double x, double y) {
            double tx = (x - pou.domain_x0) / pou.Hx, ty = (y - pou.domain_y0) / pou.Hy;
            return Eigen::Vector2d(hat_slope(I, pou.NX, tx) / pou.Hx * hat_value(J, pou.NY, ty),
                                   hat_value(I, pou.NX, tx) * hat_slope(J, pou.NY, ty) / pou.Hy);
        };
        for (int t : tris) {
            const auto& tri = mesh.triangles[t];
            Eigen::Vector2d p0 = mesh.coords.row(tri[0]), p1 = mesh.coords.row(tri[1]), p2 = mesh.coords.row(tri[2]);
            Eigen::Matrix2d Jm;
            Jm.col(0) = p1 - p0;
            Jm.col(1) = p2 - p0;
            const double det = std::abs(Jm.determinant());
            Eigen::Matrix2d JinvT = Jm.inverse().transpose();
            Eigen::Vector2d gphi[3] = {JinvT * Eigen::Vector2d(-1, -1), JinvT * Eigen::Vector2d(1, 0),
                                       JinvT * Eigen::Vector2d(0, 1)};
            double rho_node[3];
            for (int a = 0; a < 3; ++a) rho_node[a] = rho(mesh.coords(tri[a], 0), mesh.coords(tri[a], 1));
            for (const auto& qp : duffy_rule().pts) {
                double xi = qp[0], eta = qp[1], w = qp[2] * det;
                Eigen::Vector2d x = p0 + Jm * Eigen::Vector2d(xi, eta);
                double phi[3] = {1 - xi - eta, xi, eta};
                double r = rho(x[0], x[1]);
                Eigen::Vector2d gr = grad_rho(x[0], x[1]);
                Eigen::Vector3d e0, ex, ey, v0, vx, vy;
                for (int a = 0; a < 3; ++a) {
                    e0[a] = phi[a] * (rho_node[a] - r);
                    Eigen::Vector2d ge = gphi[a] * (rho_node[a] - r) - phi[a] * gr;
                    ex[a] = ge[0];
                    ey[a] = ge[1];
                    v0[a] = phi[a];
                    vx[a] = gphi[a][0];
                    vy[a] = gphi[a][1];
                }
                Eigen::Matrix3d q = w * (e0 * e0.transpose() + ex * ex.transpose() + ey * ey.transpose());
                Eigen::Matrix3d h = w * (v0 * v0.transpose() + vx * vx.transpose() + vy * vy.transpose());
                for (int a = 0; a < 3; ++a) {
                    int la = local[tri[a]];
                    if (la < 0) continue;
                    for (int b = 0; b < 3; ++b) {
                        int lb = local[tri[b]];
                        if (lb < 0) continue;
                        Q(la, lb) += q(a, b);
                        H(la, lb) += h(a, b);
                    }
                }
            }
        }
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Q, H, Eigen::EigenvaluesOnly);
        worst = std::max(worst, std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())));
    }
    return worst;
}

double rel_classic(double delta, double norm_u)
{
    if (!(delta >= 0) || !(norm_u > 0) || delta > norm_u / 2)
        throw OutOfValidity("rel_classic: requires 0 <= Delta <= ||u~|| / 2");
    return 2 * delta / norm_u;
}

double rel_new(double delta, double norm_u)
{
    if (!(delta >= 0) || !(delta < norm_u)) throw OutOfValidity("rel_new: requires 0 <= Delta < ||u~||");
    return delta / (norm_u - delta);
}

ResidualRep::ResidualRep(const AffineForm& form, InnerProduct V) : form_(&form), V_(std::move(V)), Psi_(V_) {}

void ResidualRep::add_eta(const Vec& e)
{
    const Index old_psi = Psi_.dim();
    etas_.push_back(e);
    const Index k = static_cast<Index>(etas_.size()) - 1;

    Vec Me = V_.apply(e);
    gram_.conservativeResize(k + 1, k + 1);
    for (Index l = 0; l <= k; ++l) {
        double g = etas_[l].dot(Me);
        gram_(k, l) = g;
        gram_(l, k) = g;
    }

    eta_bar_.conservativeResize(k + 1, old_psi);
    if (old_psi) eta_bar_.row(k) = (Psi_.applied().transpose() * e).transpose();
    if (Psi_.extend(e)) {
        Vec mp = Psi_.applied().col(Psi_.dim() - 1);
        eta_bar_.conservativeResize(Eigen::NoChange, Psi_.dim());
        for (Index l = 0; l <= k; ++l) eta_bar_(l, Psi_.dim() - 1) = etas_[l].dot(mp);
    } else {
        dropped_.push_back(static_cast<int>(k));
    }
}

void ResidualRep::extend(const Mat& cols)
{
    if (!have_f_) {
        for (const auto& f : form_->f) {
            add_eta(V_.solve(f));
            ++solves_;
        }
        have_f_ = true;
    }
    for (Index i = 0; i < cols.cols(); ++i) {
        for (const auto& A : form_->A) {
            add_eta(V_.solve(Vec(A * cols.col(i))));
            ++solves_;
        }
        ++nb_;
    }
}

Vec ResidualRep::alphas(const Param& mu, const Vec& c) const
{
    if (c.size() != nb_) throw std::invalid_argument("ResidualRep: coefficient vector does not match the basis");
    auto tf = form_->eval_theta_f(mu);
    auto ta = form_->eval_theta_a(mu);
    const int Qf = static_cast<int>(tf.size()), Qa = static_cast<int>(ta.size());
    Vec a(Qf + Qa * nb_);
    for (int q = 0; q < Qf; ++q) a[q] = tf[q];
    for (int i = 0; i < nb_; ++i)
        for (int q = 0; q < Qa; ++q) a[Qf + i * Qa + q] = -ta[q] * c[i];
    return a;
}

double ResidualRep::online(const Param& mu, const Vec& c) const
{
    Vec a = alphas(mu, c);
    return (eta_bar_.transpose() * a).norm();
}

double ResidualRep::traditional(const Param& mu, const Vec& c, bool* clamped) const
{
    Vec a = alphas(mu, c);
    double s = a.dot(gram_ * a);
    if (clamped) *clamped = s < 0;
    return std::sqrt(std::max(0.0, s));
}

Vec ResidualRep::reconstruct(int k) const
{
    return Psi_.basis() * eta_bar_.row(k).transpose();
}

}  // namespace lmor
