#include "lmor/arbilomod.hpp"
#include "lmor/parallel.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cstring>
#include <numeric>
#include <set>

namespace lmor {

namespace {

struct Fnv {
    std::uint64_t h = 0xcbf29ce484222325ull;
    void bytes(const void* p, size_t n)
    {
        auto c = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 0x100000001b3ull;
        }
    }
    void add(double v) { bytes(&v, sizeof v); }
    void add(std::int64_t v) { bytes(&v, sizeof v); }
};

Param mu_bar_param(const Problem& p, double mu_bar)
{
    return Param::Constant(p.form.num_params(), mu_bar);
}

}  // namespace

std::vector<int> affected_cells(const StructuredMesh& mesh, const CoarseGrid& grid, const Region& a, const Region& b)
{
    Vec fa = region_fraction(mesh, a), fb = region_fraction(mesh, b);
    std::set<int> cells;
    for (Index t = 0; t < fa.size(); ++t) {
        if (fa[t] == fb[t]) continue;
        auto c = mesh.cell_of(static_cast<int>(t));
        cells.insert(grid.cell_id(c[0] / grid.rx, c[1] / grid.ry));
    }
    return {cells.begin(), cells.end()};
}

ArbiLoMod::ArbiLoMod(Problem p, ArbiLoModConfig cfg) : p_(std::move(p)), cfg_(std::move(cfg))
{
    if (cfg_.training.xi.empty()) throw std::invalid_argument("ArbiLoMod: empty training set");
    grid_ = make_coarse_grid(p_.def.mesh, cfg_.NX, cfg_.NY);
    const auto& mesh = p_.def.mesh;
    cell_triangles_.resize(grid_.cells.size());
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        auto c = mesh.cell_of(t);
        cell_triangles_[grid_.cell_id(c[0] / grid_.rx, c[1] / grid_.ry)].push_back(t);
    }
    refresh_problem_data();
    spaces_.resize(grid_.num_entities());
    for (int e = 0; e < grid_.num_entities(); ++e) spaces_[e].entity = e;
}

void ArbiLoMod::refresh_problem_data()
{
    wb_ = WirebasketDecomposition(p_, grid_, mu_bar_param(p_, cfg_.training.mu_bar));
    pou_ = build_pou(p_.def, grid_);
    V_ = InnerProduct(p_.def.h1, "H1");
    patch_ip_ = patch_products(pou_, p_.def.h1);
    ext_ip_.assign(grid_.num_entities(), InnerProduct());
    for (int e = 0; e < grid_.num_entities(); ++e)
        if (grid_.entities[e].codim != kCell)
            ext_ip_[e] = InnerProduct(submatrix(p_.def.h1, wb_.ext_domain(e), wb_.ext_domain(e)), "H1(ext)");
    cache_ = make_parameter_cache(p_, cfg_.training.xi);
    truth_.clear();
    for (const auto& mu : cfg_.training.xi) truth_.push_back(solve_free(p_.form, mu));
}

std::vector<int> ArbiLoMod::input_cells(int e) const
{
    const auto& ent = grid_.entities[e];
    std::set<int> c;
    if (ent.codim == kVertex) {
        c.insert(ent.domains.begin(), ent.domains.end());
    } else if (ent.codim == kFace) {
        auto n = wb_.neighbourhood(e);
        c.insert(n.begin(), n.end());
    } else {
        c.insert(ent.domains.begin(), ent.domains.end());
        for (int k : wb_.coupling_entities(e)) c.insert(grid_.entities[k].domains.begin(), grid_.entities[k].domains.end());
    }
    return {c.begin(), c.end()};
}

std::uint64_t ArbiLoMod::entity_hash(const Problem& p, int e) const
{
    Fnv h;
    const auto& t = cfg_.training;
    h.add(std::int64_t(e));
    h.add(std::int64_t(grid_.entities[e].codim));
    h.add(std::int64_t(t.M));
    h.add(std::int64_t(t.seed));
    h.add(t.eps_train);
    h.add(t.eps_greedy);
    h.add(t.mu_bar);
    for (const auto& mu : t.xi)
        for (Index k = 0; k < mu.size(); ++k) h.add(mu[k]);
    auto cells = input_cells(e);
    for (int c : cells)
        for (int tri : cell_triangles_[c]) {
            h.add(p.def.sigma_base[tri]);
            h.add(p.def.sigma_param[tri]);
        }
    // right hand side data on dofs whose support lies in the input cells
    const auto& cls = wb_.classification();
    for (int k = 0; k < grid_.num_entities(); ++k) {
        const auto& d = grid_.entities[k].domains;
        if (!std::includes(cells.begin(), cells.end(), d.begin(), d.end())) continue;
        for (int dof : cls.basic[k])
            for (const auto& f : p.form.f) h.add(f[dof]);
    }
    return h.h | 1;
}

int ArbiLoMod::total_dim() const
{
    int n = 0;
    for (const auto& s : spaces_) n += s.dim();
    return n;
}

void ArbiLoMod::run_greedys(const std::vector<int>& cells)
{
    parallel_for(static_cast<int>(cells.size()), cfg_.jobs, [&](int k) {
        int c = cells[k];
        local_greedy_cell(p_, wb_, cache_, spaces_, spaces_[c], cfg_.training.eps_greedy);
    });
    greedys_ += static_cast<int>(cells.size());
}

int ArbiLoMod::build()
{
    std::set<int> dirty;
    auto mark_dirty = [&](int e) {
        for (int c : grid_.entities[e].domains) dirty.insert(grid_.cells[c]);
    };
    for (int v : grid_.vertices)
        if (spaces_[v].hash == 0) {
            spaces_[v] = vertex_space(p_, wb_, v);
            spaces_[v].hash = entity_hash(p_, v);
            mark_dirty(v);
        }
    std::vector<int> faces;
    for (int f : grid_.faces)
        if (spaces_[f].hash == 0) faces.push_back(f);
    parallel_for(static_cast<int>(faces.size()), cfg_.jobs, [&](int k) {
        int f = faces[k];
        spaces_[f] = train_face(p_, wb_, f, cfg_.training);
        spaces_[f].hash = entity_hash(p_, f);
    });
    for (int f : faces) mark_dirty(f);
    trainings_ += static_cast<int>(faces.size());
    for (int c : grid_.cells)
        if (spaces_[c].hash == 0) {
            spaces_[c].entity = c;
            spaces_[c].dofs = wb_.basic(c);
            spaces_[c].clear();
            spaces_[c].hash = entity_hash(p_, c);
            dirty.insert(c);
        }
    run_greedys({dirty.begin(), dirty.end()});
    return static_cast<int>(faces.size());
}

ArbiLoModRecord ArbiLoMod::evaluate(std::vector<Vec>& residuals, std::vector<std::vector<double>>& local)
{
    ArbiLoModRecord rec;
    rec.iter = iterations_;
    rec.total_dim = total_dim();
    auto model = assemble_reduced(p_.form, spaces_, p_.def.num_free());
    residuals.assign(cache_.mus.size(), Vec());
    local.assign(cache_.mus.size(), {});
    for (size_t m = 0; m < cache_.mus.size(); ++m) {
        auto sol = solve_reduced(model, p_.form, cache_.mus[m]);
        residuals[m] = cache_.f[m] - cache_.A[m] * sol.u;
        rec.max_residual = std::max(rec.max_residual, dual_norm(V_, residuals[m]));
        local[m] = local_dual_norms(residuals[m], pou_, patch_ip_);
        double s = 0;
        for (double v : local[m]) s += v * v;
        rec.max_delta_loc = std::max(rec.max_delta_loc, std::sqrt(s) / cache_.alpha[m]);
        rec.max_rel_error = std::max(rec.max_rel_error, V_.norm(truth_[m] - sol.u) / V_.norm(truth_[m]));
    }
    return rec;
}

double ArbiLoMod::max_rel_error()
{
    std::vector<Vec> r;
    std::vector<std::vector<double>> l;
    return evaluate(r, l).max_rel_error;
}

bool ArbiLoMod::run()
{
    converged_ = false;
    const int n = p_.def.num_free();
    while (true) {
        std::vector<Vec> R;
        std::vector<std::vector<double>> local;
        auto rec = evaluate(R, local);
        if (rec.max_residual <= cfg_.tol) {
            converged_ = true;
            history_.push_back(rec);
            break;
        }
        if (iterations_ >= cfg_.max_iterations) {
            history_.push_back(rec);
            break;
        }

        struct Pair {
            int m, i;
            double v;
        };
        std::vector<Pair> pairs;
        double total = 0;
        for (size_t m = 0; m < local.size(); ++m)
            for (size_t i = 0; i < local[m].size(); ++i) {
                pairs.push_back({static_cast<int>(m), static_cast<int>(i), local[m][i]});
                total += local[m][i];
            }
        std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.v > b.v; });
        std::vector<Pair> E;
        double acc = 0;
        for (const auto& pr : pairs) {
            if (acc >= cfg_.training.theta * total) break;
            E.push_back(pr);
            acc += pr.v;
        }

        std::set<int> S, dirty;
        for (const auto& pr : E) {
            const auto& d = pou_.dofs[pr.i];
            Eigen::SimplicialLDLT<SpMat> ldlt(submatrix(cache_.A[pr.m], d, d));
            if (ldlt.info() != Eigen::Success) throw SolverFailure("enrichment: local factorization failed");
            Vec ul = Vec::Zero(n);
            scatter_add(ul, d, Vec(ldlt.solve(gather(R[pr.m], d))));
            auto comps = wb_.components(ul);
            int best_e = -1;
            double best = 0, best_part = 0;
            Vec best_rem;
            for (int e = 0; e < grid_.num_entities(); ++e) {
                if (grid_.entities[e].codim == kCell || comps[e].size() == 0 || comps[e].squaredNorm() == 0) continue;
                const auto& H = ext_ip_[e];
                const Mat& B = spaces_[e].basis;
                Vec part = wb_.extension(e) * comps[e];
                Vec rem = part;
                for (int pass = 0; pass < 2 && B.cols(); ++pass) rem -= B * (B.transpose() * H.apply(rem));
                double nr = H.norm(rem);
                if (nr > best) {
                    best = nr;
                    best_e = e;
                    best_rem = rem;
                    best_part = H.norm(part);
                }
            }
            if (best_e < 0 || S.count(best_e) || !(best > 1e-10 * best_part)) continue;
            auto& s = spaces_[best_e];
            s.basis.conservativeResize(Eigen::NoChange, s.basis.cols() + 1);
            s.basis.col(s.basis.cols() - 1) = best_rem / best;
            s.tags.push_back(Provenance::enrichment);
            S.insert(best_e);
            for (int c : grid_.entities[best_e].domains) dirty.insert(grid_.cells[c]);
        }
        rec.marked = static_cast<int>(E.size());
        rec.enriched = static_cast<int>(S.size());
        history_.push_back(rec);
        ++iterations_;
        if (S.empty()) break;
        run_greedys({dirty.begin(), dirty.end()});
    }
    return converged_;
}

std::vector<int> ArbiLoMod::invalid_by_rehash(const Problem& p) const
{
    if (p.def.mesh.num_dofs() != p_.def.mesh.num_dofs() || p.def.num_free() != p_.def.num_free())
        throw std::invalid_argument("invalid_by_rehash: mismatched meshes");
    std::vector<int> out;
    for (int e = 0; e < grid_.num_entities(); ++e)
        if (entity_hash(p, e) != spaces_[e].hash) out.push_back(e);
    return out;
}

GeometryChange ArbiLoMod::change_geometry(Problem p, const std::vector<int>& affected)
{
    if (p.def.mesh.num_dofs() != p_.def.mesh.num_dofs() || p.def.num_free() != p_.def.num_free())
        throw std::invalid_argument("change_geometry: mismatched meshes");
    GeometryChange g;
    g.affected_cells = affected;
    std::sort(g.affected_cells.begin(), g.affected_cells.end());
    for (int e = 0; e < grid_.num_entities(); ++e) {
        auto cells = input_cells(e);
        bool hit = std::any_of(cells.begin(), cells.end(),
                               [&](int c) { return std::binary_search(g.affected_cells.begin(), g.affected_cells.end(), c); });
        if (!hit) continue;
        g.invalid.push_back(e);
        switch (grid_.entities[e].codim) {
        case kFace: ++g.invalid_faces; break;
        case kCell: ++g.invalid_cells; break;
        default: ++g.invalid_vertices; break;
        }
    }
    p_ = std::move(p);
    refresh_problem_data();
    for (int e : g.invalid) {
        spaces_[e] = LocalReducedSpace();
        spaces_[e].entity = e;
    }
    converged_ = false;
    return g;
}

}  // namespace lmor
