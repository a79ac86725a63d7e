#pragma once

#include "lmor/decomp.hpp"
#include "lmor/linalg.hpp"

namespace lmor {

/// f(mu) - A(mu) u on free dofs.
Vec residual(const AffineForm& form, const Param& mu, const Vec& u);
/// ||f(mu) - A(mu) u||_{V'} / alpha_lb
double global_delta(const AffineForm& form, const InnerProduct& V, const Param& mu, const Vec& u, double alpha_lb);

/// Products restricted to the patch spaces.
std::vector<InnerProduct> patch_products(const PoUDecomposition& pou, const SpMat& M);
std::vector<double> local_dual_norms(const Vec& R, const PoUDecomposition& pou, const std::vector<InnerProduct>& products);

double delta_loc_l(const std::vector<double>& local, const std::vector<double>& c_i, double alpha_lb);
double delta_loc_g(const std::vector<double>& local, double c_pu, double alpha_lb);

/// sqrt(4 + 2 c_I^2 + 4 (c_phi / H)^2) * sqrt(c_ovl)
double cpu_upper_bound_h1(double c_I, double c_phi, double H, int c_ovl);
/// Bound on c_pu^2 in the energy norm: 2 c_ovl (C_F * contrast * max|grad rho|^2 + max rho^2).
double cpu_energy_bound_sq(double C_F, double contrast, double grad_rho_sq, double max_rho_sq, int c_ovl);

/// sup_phi (sum_i ||(1 - P_i) I_h(rho_i phi)||^2)^(1/2) / ||phi|| by a dense generalized eigensolve.
/// reduced: optional columns (free dofs) of the reduced space, deflated per patch where they lie in V_i.
double cpu_bruteforce(const PoUDecomposition& pou, const SpMat& M, const Mat& reduced = Mat(), int max_dofs = 2000);

/// max_i sup_v ||I_h(rho_i v) - rho_i v||_{H1} / ||v||_{H1(omega_i)}, exact quadrature per triangle.
double interpolation_constant(const ProblemDefinition& def, const PoUDecomposition& pou);

struct OutOfValidity : std::domain_error {
    using std::domain_error::domain_error;
};
/// 2 Delta / ||u~||, valid for Delta <= ||u~|| / 2.
double rel_classic(double delta, double norm_u);
/// Delta / (||u~|| - Delta), valid for Delta < ||u~||.
double rel_new(double delta, double norm_u);

/// Orthonormalized Riesz representatives of the residual components for a reduced basis.
class ResidualRep {
public:
    ResidualRep(const AffineForm& form, InnerProduct V);

    /// Riesz solves for the new basis columns (Q_a each) and the right hand side terms on first use.
    void extend(const Mat& new_columns);
    int basis_size() const { return nb_; }
    int n_eta() const { return static_cast<int>(Psi_.dim()); }
    int riesz_solves() const { return solves_; }
    const std::vector<int>& dropped() const { return dropped_; }

    /// Coefficients alpha_k of the residual in terms of the stored representatives.
    Vec alphas(const Param& mu, const Vec& coeffs) const;
    /// ||(sum_k alpha_k eta_bar_k)||_2; never touches full order vectors.
    double online(const Param& mu, const Vec& coeffs) const;
    /// sqrt(alpha^T G alpha) with the Gram matrix of the representatives; negative sums are clamped.
    double traditional(const Param& mu, const Vec& coeffs, bool* clamped = nullptr) const;
    /// Representative eta_k reconstructed from the table, for checks.
    Vec reconstruct(int k) const;
    const Vec& eta(int k) const { return etas_[k]; }
    int n_vectors() const { return static_cast<int>(etas_.size()); }

private:
    void add_eta(const Vec& e);

    const AffineForm* form_;
    InnerProduct V_;
    OrthoBasis Psi_;
    std::vector<Vec> etas_;
    Mat eta_bar_;  ///< n_eta_vectors x dim Psi
    Mat gram_;     ///< (eta_k, eta_l)
    std::vector<int> dropped_;
    int nb_ = 0, solves_ = 0;
    bool have_f_ = false;
};

}  // namespace lmor
