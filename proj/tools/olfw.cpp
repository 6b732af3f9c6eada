#include "olfw/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace olfw;

namespace {

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("FW_SEED");
    if (!s || !*s) return std::nullopt;
    try {
        return detail::parse_u64(s);
    } catch (const config_error&) {
        throw config_error(std::string("FW_SEED is not an unsigned integer: ") + s);
    }
}

// --seed beats FW_SEED, which beats whatever the config says.
std::optional<std::uint64_t> seed_override(const std::optional<std::uint64_t>& flag) {
    return flag ? flag : env_seed();
}

void emit(const RunTrace& trace, const std::string& out) {
    if (out.empty() || out == "-") {
        trace.write_csv(std::cout);
        return;
    }
    std::ofstream os(out, std::ios::binary);
    if (!os) throw config_error("cannot write " + out);
    trace.write_csv(os);
}

int report_batch(const BatchResult& res, const std::filesystem::path& dir) {
    std::size_t failed = 0;
    for (const auto& e : res.entries)
        if (e.status != "ok") {
            ++failed;
            std::cerr << "failed: " << e.file << ": " << e.notes << '\n';
        }
    std::cerr << res.entries.size() << " runs, " << failed << " failed; manifest at " << (dir / "manifest.csv").string()
              << '\n';
    return res.exit_status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-loop Frank-Wolfe experiments"};
    app.require_subcommand(1);

    // solve
    auto* solve = app.add_subcommand("solve", "Run one solver on one instance and write its trace");
    std::string s_algo, s_rule, s_cfg, s_out;
    std::size_t s_iters = 0;
    std::optional<std::uint64_t> s_seed;
    solve->add_option("--algo", s_algo, "fw | afw | difw (default: from config)");
    solve->add_option("--rule", s_rule, "openloop:<l> | linesearch | shortstep | constant[:eta]");
    solve->add_option("--instance", s_cfg, "Config file; its first experiment supplies the instance")->required();
    solve->add_option("--iters", s_iters, "Iteration budget (default: from config)");
    solve->add_option("--seed", s_seed, "Instance seed");
    solve->add_option("--out", s_out, "Trace CSV (default: stdout)");

    // figure
    auto* figure = app.add_subcommand("figure", "Run a figure preset");
    std::string f_name, f_dir;
    bool f_full = false, f_dump = false;
    unsigned f_jobs = 1;
    std::optional<std::uint64_t> f_seed;
    figure->add_option("preset", f_name, "nonpolytope | wolfe | afw-difw | local-rate | herding")->required();
    figure->add_option("--out-dir", f_dir, "Output directory (default: out/<preset>)");
    figure->add_option("--jobs", f_jobs, "Worker threads")->check(CLI::PositiveNumber);
    figure->add_option("--seed", f_seed, "Seed for every run");
    figure->add_flag("--full", f_full, "Full iteration budgets and dimension ranges");
    figure->add_flag("--print-config", f_dump, "Print the preset as a config file and exit");

    // batch
    auto* batch = app.add_subcommand("batch", "Run every experiment in a config file");
    std::string b_cfg, b_dir = "out";
    unsigned b_jobs = 1;
    std::optional<std::uint64_t> b_seed;
    batch->add_option("config", b_cfg, "Config file")->required();
    batch->add_option("--out-dir", b_dir, "Output directory");
    batch->add_option("--jobs", b_jobs, "Worker threads")->check(CLI::PositiveNumber);
    batch->add_option("--seed", b_seed, "Seed for every run");

    // verify
    auto* verify = app.add_subcommand("verify", "Check artifacts against a manifest");
    std::string v_dir;
    verify->add_option("dir", v_dir, "Batch output directory")->required();

    // rates
    auto* rates = app.add_subcommand("rates", "Windowed log-log slopes of a trace, or a rate contour");
    std::string r_in, r_out, r_family;
    std::size_t r_window = 100, r_iters = 1000;
    std::vector<std::size_t> r_dims;
    std::optional<std::uint64_t> r_seed;
    auto* r_in_opt = rates->add_option("--in", r_in, "Trace CSV");
    auto* r_fam_opt = rates->add_option("--contour", r_family, "interior | face: sweep FW OpenLoop(4) over --dims");
    r_in_opt->excludes(r_fam_opt);
    rates->add_option("--dims", r_dims, "Dimensions for --contour")->delimiter(',');
    rates->add_option("--iters", r_iters, "Iterations per contour run");
    rates->add_option("--window", r_window, "Regression window")->check(CLI::PositiveNumber);
    rates->add_option("--seed", r_seed, "Seed for contour instances");
    rates->add_option("--out", r_out, "Output CSV (default: stdout)");

    // herding
    auto* herd = app.add_subcommand("herding", "Kernel herding in the Bernoulli-kernel RKHS");
    std::string h_density = "uniform", h_rule = "openloop:1", h_out, h_atoms;
    std::size_t h_iters = 1024;
    std::optional<std::uint64_t> h_seed;
    herd->add_option("--density", h_density, "uniform | fourier:<file> | random[:<n>]");
    herd->add_option("--rule", h_rule, "Step rule");
    herd->add_option("--iters", h_iters, "Iterations")->check(CLI::PositiveNumber);
    herd->add_option("--seed", h_seed, "Seed for random densities");
    herd->add_option("--out", h_out, "Trace CSV (default: stdout)");
    herd->add_option("--atoms", h_atoms, "Also write the final atoms and weights (y,weight)");

    // jaggi
    auto* jaggi = app.add_subcommand("jaggi", "min ||x||^2 over the simplex with card(x) <= t, for t = 1..d");
    std::size_t j_d = 0;
    jaggi->add_option("--d", j_d, "Dimension (<= 24)")->required()->check(CLI::Range(1, 24));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*solve) {
            auto cfgs = load_configs(s_cfg);
            if (cfgs.empty()) throw config_error("no experiment in " + s_cfg);
            ExperimentConfig c = cfgs.front();
            if (!s_algo.empty()) c.algorithm = s_algo;
            if (c.algorithm == "herding") throw config_error("use the herding subcommand for herding");
            if (s_iters) c.iterations = s_iters;
            if (auto seed = seed_override(s_seed)) c.seed = c.instance.seed = *seed;
            StepRule rule = !s_rule.empty() ? StepRule::parse(s_rule)
                            : !c.rules.empty() ? c.rules.front()
                                               : throw config_error("no step rule given");
            emit(run_single(c, rule), s_out);
            return 0;
        }
        if (*figure) {
            PresetOptions po;
            po.full = f_full;
            if (auto seed = seed_override(f_seed)) po.seed = *seed;
            auto cfgs = figure_preset(f_name, po);
            if (f_dump) {
                std::cout << serialize(cfgs);
                return 0;
            }
            std::filesystem::path dir = f_dir.empty() ? std::filesystem::path("out") / f_name : std::filesystem::path(f_dir);
            return report_batch(run_batch(cfgs, dir, f_jobs), dir);
        }
        if (*batch) {
            auto cfgs = load_configs(b_cfg);
            if (auto seed = seed_override(b_seed)) override_seed(cfgs, *seed);
            return report_batch(run_batch(cfgs, b_dir, b_jobs), b_dir);
        }
        if (*verify) {
            auto bad = verify_manifest(v_dir);
            for (const auto& f : bad) std::cerr << "checksum mismatch: " << f << '\n';
            if (bad.empty()) std::cerr << "all artifacts match\n";
            return bad.empty() ? 0 : 1;
        }
        if (*rates) {
            std::ofstream file;
            std::ostream* os = &std::cout;
            if (!r_out.empty() && r_out != "-") {
                file.open(r_out, std::ios::binary);
                if (!file) throw config_error("cannot write " + r_out);
                os = &file;
            }
            if (!r_family.empty()) {
                InstanceSpec fam;
                fam.region.kind = RegionKind::simplex;
                fam.matrix = MatrixKind::identity;
                if (r_family == "interior") {
                    fam.location = Location::interior;
                } else if (r_family == "face") {
                    fam.location = Location::face;
                    fam.rho = 2.0;
                } else {
                    throw config_error("unknown contour family " + r_family);
                }
                fam.seed = seed_override(r_seed).value_or(1);
                if (r_dims.empty()) r_dims = {10, 50, 100};
                write_contour_csv(*os, rate_contour(fam, r_dims, r_iters, r_window));
                return 0;
            }
            if (r_in.empty()) throw config_error("rates needs --in or --contour");
            std::ifstream in(r_in);
            if (!in) throw config_error("cannot open " + r_in);
            auto h = read_trace_gaps(in);
            *os << "t,slope,r2\n";
            for (std::size_t t = 0; t + r_window < h.size(); ++t) {
                auto r = local_rate(h, t, r_window);
                *os << t << ',' << fmt_double(r.slope) << ',' << fmt_double(r.r_squared) << '\n';
            }
            return 0;
        }
        if (*herd) {
            MeanEmbedding mu(parse_density(h_density, seed_override(h_seed).value_or(1)));
            auto res = herding_run(mu, StepRule::parse(h_rule), h_iters);
            emit(res.trace, h_out);
            if (!h_atoms.empty()) {
                std::ofstream os(h_atoms, std::ios::binary);
                if (!os) throw config_error("cannot write " + h_atoms);
                os << "y,weight\n";
                const auto& s = res.state;
                for (std::size_t i = 0; i < s.atoms().size(); ++i)
                    os << fmt_double(s.atoms()[i]) << ',' << fmt_double(s.raw_weights()[i] / s.total_weight()) << '\n';
            }
            return 0;
        }
        if (*jaggi) {
            std::cout << "t,min_sq_norm,inverse_t\n";
            for (std::size_t t = 1; t <= j_d; ++t)
                std::cout << t << ',' << fmt_double(jaggi_lower_bound(j_d, t)) << ','
                          << fmt_double(1.0 / static_cast<double>(t)) << '\n';
            return 0;
        }
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
