#include "lmor/experiments.hpp"
#include "lmor/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

using namespace lmor;

namespace {

constexpr const char* kVersion = "1.0.0";

/// "1e-2,1e-4" or a decade range "1e0..1e-12".
std::vector<double> parse_tols(const std::string& s)
{
    std::vector<double> out;
    if (auto pos = s.find(".."); pos != std::string::npos) {
        double a = std::stod(s.substr(0, pos)), b = std::stod(s.substr(pos + 2));
        if (!(a > 0 && b > 0)) throw CLI::ValidationError("--tols", "range bounds must be positive");
        int la = static_cast<int>(std::lround(std::log10(a))), lb = static_cast<int>(std::lround(std::log10(b)));
        for (int e = la;; e += la < lb ? 1 : -1) {
            out.push_back(std::pow(10.0, e));
            if (e == lb) break;
        }
        return out;
    }
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        double v = std::stod(tok);
        if (!(v > 0)) throw CLI::ValidationError("--tols", "tolerances must be positive");
        out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError("--tols", "no tolerances given");
    return out;
}

void record_options(Manifest& m, const CLI::App* app, const std::string& prefix)
{
    for (const auto* o : app->get_options()) {
        if (o->get_name() == "--help" || o->get_name().empty()) continue;
        std::string key = prefix + o->get_name(false, true);
        while (!key.empty() && key[prefix.size()] == '-') key.erase(prefix.size(), 1);
        std::string val;
        if (o->count()) {
            for (const auto& r : o->results()) val += (val.empty() ? "" : " ") + r;
            if (o->get_expected_max() == 0 && val.empty()) val = "true";
        } else {
            val = o->get_default_str();
        }
        m.set(key, val);
    }
}

int print_checks(const std::vector<CheckResult>& checks, bool verdict)
{
    bool ok = true;
    for (const auto& c : checks) {
        if (verdict)
            std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << c.detail << '\n';
        else
            std::cout << c.name << ": " << c.detail << '\n';
        ok = ok && c.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Localized model order reduction experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    RunOptions opt;
    opt.out = "out";
    bool check = false;
    app.add_option("--out", opt.out, "output directory")->capture_default_str();
    app.add_option("--jobs", opt.jobs, "concurrent local builds")->capture_default_str()->check(CLI::Range(1, 1024));
    app.add_option("--seed", opt.seed, "base seed")->capture_default_str();
    app.add_flag("--check", check, "evaluate the matching acceptance criteria; exit 1 on failure");

    SplittingConfig sp;
    auto* c_sp = app.add_subcommand("thermal-block-splitting", "weak greedy with both residual norm schemes");
    c_sp->add_option("--n", sp.n, "fine cells per direction")->capture_default_str()->check(CLI::Range(2, 2000));
    c_sp->add_option("--nmax", sp.nmax, "maximum basis size")->capture_default_str()->check(CLI::Range(1, 1000));
    c_sp->add_option("--per-axis", sp.per_axis, "tensor grid points per parameter")->capture_default_str()->check(CLI::Range(1, 50));
    c_sp->add_option("--count", sp.count, "training set size after subsampling")->capture_default_str()->check(CLI::Range(1, 1000000));

    RangefinderConfig ra;
    std::string ra_tols = "1e-2,1e-4,1e-6";
    auto* c_ra = app.add_subcommand("rangefinder-analytic", "adaptive range finder on the Laplace interface operator");
    RangefinderConfig rh;
    rh.k = 30;
    std::string rh_tols = "1e-2,1e-4,1e-6";
    auto* c_rh = app.add_subcommand("rangefinder-helmholtz", "adaptive range finder on the Helmholtz interface operator");
    for (auto [c, cfg, tols] : {std::tuple{c_ra, &ra, &ra_tols}, std::tuple{c_rh, &rh, &rh_tols}}) {
        c->set_help_flag("--help", "print this help message and exit");
        c->add_option("--h", cfg->inv_h, "inverse mesh size")->capture_default_str()->check(CLI::Range(2, 1000));
        c->add_option("--tols", *tols, "comma list or decade range a..b")->capture_default_str();
        c->add_option("--nt", cfg->n_t, "test vectors")->capture_default_str()->check(CLI::Range(1, 1000));
        c->add_option("--runs", cfg->runs, "seeded runs per tolerance")->capture_default_str()->check(CLI::Range(1, 100000));
        c->add_option("--eps", cfg->eps_algofail, "algorithm failure probability")->capture_default_str()->check(CLI::Range(1e-300, 0.5));
    }
    c_rh->add_option("--k", rh.k, "wave number")->capture_default_str()->check(CLI::Range(0.0, 200.0));

    NormEstimatorConfig ne;
    auto* c_ne = app.add_subcommand("norm-estimator", "Monte Carlo statistics of the probabilistic norm estimator");
    c_ne->add_option("--trials", ne.trials)->capture_default_str()->check(CLI::Range(1, 10000000));
    c_ne->add_option("--nt", ne.n_t)->capture_default_str()->check(CLI::Range(1, 1000));
    c_ne->add_option("--eps", ne.eps_testfail)->capture_default_str()->check(CLI::Range(1e-300, 0.5));

    LocalizationConfig lo;
    auto* c_lo = app.add_subcommand("localization", "localized estimator inequalities on random reduced solutions");
    c_lo->add_option("--n", lo.n)->capture_default_str()->check(CLI::Range(2, 200));
    c_lo->add_option("--N", lo.N, "coarse cells per direction")->capture_default_str()->check(CLI::Range(2, 50));
    c_lo->add_option("--samples", lo.samples)->capture_default_str()->check(CLI::Range(1, 100000));

    WirebasketConfig wb;
    auto* c_wb = app.add_subcommand("wirebasket", "decomposition identity on random functions");
    c_wb->add_option("--n", wb.n)->capture_default_str()->check(CLI::Range(2, 400));
    c_wb->add_option("--N", wb.N)->capture_default_str()->check(CLI::Range(1, 50));
    c_wb->add_option("--samples", wb.samples)->capture_default_str()->check(CLI::Range(1, 100000));

    EnrichmentConfig en;
    std::string mode = "both";
    auto* c_en = app.add_subcommand("enrichment-convergence", "residual based and globally coupled online enrichment");
    c_en->add_option("--mode", mode)->capture_default_str()->check(CLI::IsMember({"residual", "coupled", "both"}));
    c_en->add_option("--n", en.n)->capture_default_str()->check(CLI::Range(2, 400));
    c_en->add_option("--N", en.N, "coarse cells per direction")->capture_default_str()->check(CLI::Range(2, 100));
    c_en->add_option("--iterations", en.max_iterations)->capture_default_str()->check(CLI::Range(1, 100000));
    c_en->add_option("--target", en.target, "relative energy error target")->capture_default_str()->check(CLI::Range(0.0, 1.0));

    ChannelsConfig ch;
    std::string geoms = "1,2";
    bool no_reuse = false, no_scratch = false;
    auto* c_ch = app.add_subcommand("channels-arbilomod", "ArbiLoMod over a geometry sequence of the thermal channels");
    c_ch->set_help_flag("--help", "print this help message and exit");
    c_ch->add_option("--h", ch.inv_h, "inverse mesh size")->capture_default_str()->check(CLI::Range(10, 1000));
    c_ch->add_option("--NX", ch.NX)->capture_default_str()->check(CLI::Range(2, 100));
    c_ch->add_option("--NY", ch.NY)->capture_default_str()->check(CLI::Range(2, 100));
    c_ch->add_option("--geom-sequence", geoms, "comma separated geometry ids in 1..5")->capture_default_str();
    c_ch->add_flag("--no-reuse", no_reuse, "rebuild every geometry from scratch");
    c_ch->add_flag("--no-scratch", no_scratch, "skip the from-scratch baseline after each change");
    c_ch->add_option("--xi", ch.xi_size, "training parameters, log-uniform in [1, 1e5]")->capture_default_str()->check(CLI::Range(1, 1000));
    c_ch->add_option("--tol", ch.arbilomod.tol, "stopping tolerance on the residual dual norm")->capture_default_str();
    c_ch->add_option("--max-iterations", ch.arbilomod.max_iterations)->capture_default_str()->check(CLI::Range(0, 10000));
    c_ch->add_option("--M", ch.arbilomod.training.M, "random coupling samples per training parameter")->capture_default_str();
    c_ch->add_option("--eps-train", ch.arbilomod.training.eps_train)->capture_default_str();
    c_ch->add_option("--eps-greedy", ch.arbilomod.training.eps_greedy)->capture_default_str();
    c_ch->add_option("--theta", ch.arbilomod.training.theta, "Doerfler fraction")->capture_default_str()->check(CLI::Range(0.0, 1.0));

    GramSchmidtConfig gs;
    auto* c_gs = app.add_subcommand("gram-schmidt-bench", "orthogonality of the Gram-Schmidt variants on nearly dependent vectors");
    c_gs->add_option("--N", gs.N)->capture_default_str()->check(CLI::Range(1, 1000));
    c_gs->add_option("--dim", gs.dim)->capture_default_str()->check(CLI::Range(1, 1000000));
    c_gs->add_option("--repeats", gs.repeats)->capture_default_str()->check(CLI::Range(1, 100000));

    RelativeConfig re;
    auto* c_re = app.add_subcommand("relative-estimators", "classic and improved relative error estimators");
    c_re->add_option("--triples", re.triples)->capture_default_str()->check(CLI::Range(1, 10000000));
    c_re->add_option("--pairs", re.pairs)->capture_default_str()->check(CLI::Range(1, 10000000));

    int cn = 12, cN = 3;
    auto* c_co = app.add_subcommand("constants-report", "brute force localization constant against its bounds");
    c_co->add_option("--n", cn)->capture_default_str()->check(CLI::Range(2, 60));
    c_co->add_option("--N", cN)->capture_default_str()->check(CLI::Range(2, 20));

    std::string only;
    auto* c_ac = app.add_subcommand("acceptance", "run every acceptance criterion");
    c_ac->add_option("--only", only, "comma separated criterion ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    Manifest manifest;
    manifest.set("subcommand", sub->get_name());
    manifest.set("version", kVersion);
    record_options(manifest, &app, "");
    record_options(manifest, sub, sub->get_name() + ".");

    std::vector<CheckResult> checks;
    try {
        if (sub == c_sp) {
            auto r = run_splitting(sp, opt);
            checks.push_back(check_splitting(r));
        } else if (sub == c_ra) {
            ra.tols = parse_tols(ra_tols);
            auto r = run_rangefinder(ra, opt);
            checks.push_back(check_rangefinder_analytic(r, ra));
        } else if (sub == c_rh) {
            rh.tols = parse_tols(rh_tols);
            auto r = run_rangefinder(rh, opt);
            checks.push_back(check_rangefinder_helmholtz(r, rh));
        } else if (sub == c_ne) {
            auto r = run_norm_estimator(ne, opt);
            RangefinderConfig a;
            checks.push_back(check_norm_estimator(r, run_rangefinder(a, opt)));
        } else if (sub == c_lo) {
            checks.push_back(check_localization(run_localization(lo, opt)));
        } else if (sub == c_wb) {
            checks.push_back(check_wirebasket(run_wirebasket(wb, opt)));
        } else if (sub == c_en) {
            en.mode = mode == "residual" ? EnrichMode::residual : mode == "coupled" ? EnrichMode::coupled : EnrichMode::both;
            checks.push_back(check_enrichment(run_enrichment(en, opt), en));
        } else if (sub == c_ch) {
            ch.geometries.clear();
            std::stringstream ss(geoms);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                int g = std::stoi(tok);
                if (g < 1 || g > 5) throw CLI::ValidationError("--geom-sequence", "geometry ids must lie in 1..5");
                ch.geometries.push_back(g);
            }
            ch.reuse = !no_reuse;
            ch.compare_scratch = !no_scratch && !no_reuse;
            checks.push_back(check_channels(run_channels(ch, opt)));
        } else if (sub == c_gs) {
            checks.push_back(check_gram_schmidt(run_gram_schmidt(gs, opt)));
        } else if (sub == c_re) {
            checks.push_back(check_relative(run_relative(re, opt)));
        } else if (sub == c_co) {
            auto r = run_constants(cn, cN, opt);
            std::cout << "c_pu (brute force, energy) = " << format_double(r.c_pu_brute) << '\n'
                      << "c_I = " << format_double(r.c_I) << '\n'
                      << "c_pu H1 bound = " << format_double(r.c_pu_h1_bound) << '\n'
                      << "c_pu^2 energy bound = " << format_double(r.c_pu_energy_bound_sq) << '\n'
                      << "reference c_pu^2 bound = " << format_double(r.reference_c_pu_sq) << '\n'
                      << "reference 1 - c_rbe = " << format_double(r.reference_one_minus_c) << '\n';
        } else if (sub == c_ac) {
            std::vector<int> ids;
            std::stringstream ss(only);
            std::string tok;
            while (std::getline(ss, tok, ',')) ids.push_back(std::stoi(tok));
            checks = run_acceptance(opt, ids);
            check = true;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    for (const auto& c : checks) manifest.set("check." + std::to_string(c.id), c.pass ? "pass" : "fail");
    if (!opt.out.empty()) {
        ensure_directory(opt.out);
        manifest.write(join_path(opt.out, sub->get_name() + ".manifest"));
    }
    int status = print_checks(checks, check);
    return check ? status : 0;
}
