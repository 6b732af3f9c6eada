#pragma once

#include "olfw/afw.hpp"
#include "olfw/analysis.hpp"
#include "olfw/difw.hpp"
#include "olfw/fw.hpp"
#include "olfw/herding.hpp"
#include "olfw/objectives.hpp"
#include "olfw/reference.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

namespace olfw {

struct ExperimentConfig {
    std::string name;
    std::string algorithm = "fw";  // fw | afw | difw | herding
    std::vector<StepRule> rules;
    std::size_t iterations = 1000;
    std::uint64_t seed = 1;
    std::string output;          // path stem relative to the batch directory
    InstanceSpec instance;       // instance.seed mirrors seed
    std::string density = "uniform";
    std::size_t rate_window = 0;  // > 0 also writes <stem>.rates.csv

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {
inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}
inline std::size_t parse_size(const std::string& v) {
    std::size_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) throw config_error("not a nonnegative integer: " + v);
    return out;
}
inline std::uint64_t parse_u64(const std::string& v) {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) throw config_error("not a 64-bit seed: " + v);
    return out;
}
}  // namespace detail

inline std::string serialize(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[experiment]\n";
    os << "name = " << c.name << '\n';
    os << "algorithm = " << c.algorithm << '\n';
    os << "rules = ";
    for (std::size_t i = 0; i < c.rules.size(); ++i) os << (i ? ", " : "") << c.rules[i].to_string();
    os << '\n';
    os << "iterations = " << c.iterations << '\n';
    os << "seed = " << c.seed << '\n';
    os << "output = " << c.output << '\n';
    os << "rate_window = " << c.rate_window << '\n';
    os << "\n[instance]\n";
    os << "location = " << to_string(c.instance.location) << '\n';
    os << "rho = " << fmt_roundtrip(c.instance.rho) << '\n';
    os << "matrix = " << to_string(c.instance.matrix) << '\n';
    os << "\n[region]\n";
    os << "kind = " << to_string(c.instance.region.kind) << '\n';
    os << "p = " << fmt_roundtrip(c.instance.region.p) << '\n';
    os << "radius = " << fmt_roundtrip(c.instance.region.radius) << '\n';
    os << "dimension = " << c.instance.region.dimension << '\n';
    os << "\n[herding]\n";
    os << "density = " << c.density << '\n';
    return os.str();
}

inline std::string serialize(const std::vector<ExperimentConfig>& cs) {
    std::string out;
    for (std::size_t i = 0; i < cs.size(); ++i) out += (i ? "\n" : "") + serialize(cs[i]);
    return out;
}

// Each [experiment] header starts a new config; the other sections apply to the latest one.
inline std::vector<ExperimentConfig> parse_configs(std::istream& is) {
    std::vector<ExperimentConfig> out;
    std::string section, raw;
    std::size_t lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = detail::trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error("line " + std::to_string(lineno) + ": bad section header");
            section = line.substr(1, line.size() - 2);
            if (section == "experiment") out.emplace_back();
            else if (section != "instance" && section != "region" && section != "herding")
                throw config_error("line " + std::to_string(lineno) + ": unknown section " + section);
            if (out.empty()) out.emplace_back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
        if (out.empty()) throw config_error("line " + std::to_string(lineno) + ": key outside any section");
        auto& c = out.back();
        try {
            if (section == "experiment") {
                if (key == "name") c.name = val;
                else if (key == "algorithm") {
                    if (val != "fw" && val != "afw" && val != "difw" && val != "herding")
                        throw config_error("unknown algorithm " + val);
                    c.algorithm = val;
                } else if (key == "rules") {
                    c.rules.clear();
                    std::stringstream ss(val);
                    std::string item;
                    while (std::getline(ss, item, ','))
                        if (auto t = detail::trim(item); !t.empty()) c.rules.push_back(StepRule::parse(t));
                } else if (key == "iterations") c.iterations = detail::parse_size(val);
                else if (key == "seed") c.seed = c.instance.seed = detail::parse_u64(val);
                else if (key == "output") c.output = val;
                else if (key == "rate_window") c.rate_window = detail::parse_size(val);
                else throw config_error("unknown key " + key);
            } else if (section == "instance") {
                if (key == "location") c.instance.location = parse_location(val);
                else if (key == "rho") c.instance.rho = parse_double(val);
                else if (key == "matrix") c.instance.matrix = parse_matrix_kind(val);
                else throw config_error("unknown key " + key);
            } else if (section == "region") {
                if (key == "kind") c.instance.region.kind = parse_region_kind(val);
                else if (key == "p") c.instance.region.p = parse_double(val);
                else if (key == "radius") c.instance.region.radius = parse_double(val);
                else if (key == "dimension") c.instance.region.dimension = detail::parse_size(val);
                else throw config_error("unknown key " + key);
            } else if (section == "herding") {
                if (key == "density") c.density = val;
                else throw config_error("unknown key " + key);
            } else {
                throw config_error("key outside any section");
            }
        } catch (const config_error& e) {
            throw config_error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<ExperimentConfig> parse_configs(const std::string& text) {
    std::istringstream is(text);
    return parse_configs(is);
}

inline std::vector<ExperimentConfig> load_configs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config: " + path);
    return parse_configs(in);
}

inline void override_seed(std::vector<ExperimentConfig>& cs, std::uint64_t seed) {
    for (auto& c : cs) c.seed = c.instance.seed = seed;
}

struct PresetOptions {
    bool full = false;
    std::uint64_t seed = 1;
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"nonpolytope", "wolfe", "afw-difw", "local-rate", "herding"};
    return names;
}

inline std::vector<ExperimentConfig> figure_preset(const std::string& name, const PresetOptions& opt = {}) {
    const std::size_t long_run = opt.full ? 100000 : 10000;
    std::vector<ExperimentConfig> out;
    auto add = [&](ExperimentConfig c, const std::string& stem, const std::vector<std::string>& rules) {
        for (const auto& r : rules) {
            ExperimentConfig one = c;
            one.rules = {StepRule::parse(r)};
            std::string tag = r;
            std::replace(tag.begin(), tag.end(), ':', '_');
            one.name = stem + "_" + tag;
            one.output = one.name;
            out.push_back(std::move(one));
        }
    };
    auto base = [&](RegionKind kind, double p, std::size_t d, Location loc, MatrixKind m) {
        ExperimentConfig c;
        c.seed = opt.seed;
        c.iterations = long_run;
        c.instance.region = {kind, p, 1.0, d};
        c.instance.location = loc;
        c.instance.matrix = m;
        c.instance.seed = opt.seed;
        return c;
    };

    if (name == "nonpolytope") {
        const std::vector<std::string> common{"linesearch", "shortstep", "openloop:1", "openloop:2", "openloop:4"};
        std::vector<std::string> ext = common;
        ext.push_back("openloop:6");
        ext.push_back("constant");
        const std::pair<double, Location> panels[] = {
            {1, Location::interior}, {2, Location::interior}, {5, Location::interior},
            {2, Location::boundary}, {3, Location::boundary}, {5, Location::boundary},
            {2, Location::exterior}, {3, Location::exterior}, {5, Location::exterior}};
        for (auto [p, loc] : panels) {
            auto c = base(RegionKind::lp_ball, p, 100, loc, MatrixKind::random);
            add(c, "l" + fmt_roundtrip(p) + "_" + to_string(loc), loc == Location::exterior ? ext : common);
        }
    } else if (name == "wolfe") {
        for (double rho : {0.25, 2.0}) {
            auto c = base(RegionKind::simplex, 2, 100, Location::face, MatrixKind::identity);
            c.instance.rho = rho;
            add(c, "rho" + fmt_roundtrip(rho), {"linesearch", "openloop:1", "openloop:2", "openloop:4"});
        }
    } else if (name == "afw-difw") {
        for (Location loc : {Location::interior, Location::boundary, Location::exterior}) {
            auto c = base(RegionKind::simplex, 2, 100, loc, MatrixKind::identity);
            c.algorithm = "afw";
            add(c, std::string("afw_") + to_string(loc), {"linesearch", "openloop:2", "openloop:4"});
            c.algorithm = "difw";
            add(c, std::string("difw_") + to_string(loc), {"linesearch", "openloop:2", "openloop:4", "openloop:8"});
        }
    } else if (name == "local-rate") {
        std::vector<std::size_t> dims;
        if (opt.full)
            for (std::size_t d = 1; d <= 1000; ++d) dims.push_back(d);
        else
            for (std::size_t d = 10; d <= 200; d += 10) dims.push_back(d);
        for (std::size_t d : dims) {
            for (bool face : {false, true}) {
                auto c = base(RegionKind::simplex, 2, d, face ? Location::face : Location::interior, MatrixKind::identity);
                if (face) c.instance.rho = 2.0;
                c.iterations = 1000;
                c.rate_window = 100;
                add(c, std::string(face ? "face" : "interior") + "_d" + std::to_string(d), {"openloop:4"});
            }
        }
    } else if (name == "herding") {
        for (const char* density : {"uniform", "random"}) {
            ExperimentConfig c;
            c.algorithm = "herding";
            c.seed = c.instance.seed = opt.seed;
            c.iterations = 1000;
            c.density = density;
            add(c, density, {"linesearch", "openloop:1", "openloop:2", "openloop:4"});
        }
    } else {
        std::string list;
        for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
        throw config_error("unknown preset '" + name + "'; available: " + list);
    }
    return out;
}

// Reference optima shared across runs of the same instance.
class ReferenceCache {
public:
    ReferenceOptimum get(const Instance& inst) {
        std::shared_future<ReferenceOptimum> fut;
        std::promise<ReferenceOptimum> prom;
        bool owner = false;
        {
            std::lock_guard lock(mu_);
            auto it = cache_.find(inst.objective.id);
            if (it == cache_.end()) {
                fut = prom.get_future().share();
                cache_.emplace(inst.objective.id, fut);
                owner = true;
            } else {
                fut = it->second;
            }
        }
        if (owner) {
            try {
                prom.set_value(reference_optimum(inst.objective, inst.region));
            } catch (...) {
                prom.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

private:
    std::mutex mu_;
    std::map<std::string, std::shared_future<ReferenceOptimum>> cache_;
};

inline Point default_start(const Region& region) {
    return std::visit(
        [](const auto& reg) -> Point {
            using R = std::decay_t<decltype(reg)>;
            if constexpr (std::is_same_v<R, LpBall>) {
                Point x = reg.center();
                x[0] += reg.radius();
                return x;
            } else {
                return reg.vertex(0);
            }
        },
        region);
}

inline RunTrace run_single(const ExperimentConfig& c, const StepRule& rule, ReferenceCache* cache = nullptr) {
    if (c.iterations < 1) throw config_error("iterations must be positive");
    if (c.algorithm == "herding") {
        MeanEmbedding mu(parse_density(c.density, c.seed));
        auto res = herding_run(mu, rule, c.iterations);
        res.trace.meta.seed = c.seed;
        return std::move(res.trace);
    }
    InstanceSpec spec = c.instance;
    spec.seed = c.seed;
    Instance inst = generate_instance(spec);
    ReferenceCache local;
    inst.objective.set_reference((cache ? cache : &local)->get(inst));

    StepRule r = rule;
    std::map<std::string, std::string> extra;
    std::optional<double> lambda;
    if (!r.resolved()) {
        auto setup = std::visit([&](const auto& reg) { return constant_rule_setup(inst.objective, reg); }, inst.region);
        r = StepRule::constant(setup.eta);
        lambda = setup.lambda;
        extra["alpha"] = fmt_roundtrip(setup.alpha);
        extra["lambda"] = fmt_roundtrip(setup.lambda);
    }
    const Point x0 = default_start(inst.region);

    RunTrace trace = std::visit(
        [&](const auto& reg) -> RunTrace {
            using R = std::decay_t<decltype(reg)>;
            if (c.algorithm == "fw") return fw_run(inst.objective, reg, r, x0, c.iterations);
            if (c.algorithm == "afw") {
                if constexpr (std::is_same_v<R, ProbabilitySimplex>) {
                    return afw_run(inst.objective, reg, r, std::size_t{0}, c.iterations);
                } else {
                    if (reg.p() != 1.0) throw config_error("afw needs a polytope region");
                    return afw_run(inst.objective, reg, r, std::size_t{0}, c.iterations);
                }
            }
            if (c.algorithm == "difw") {
                if constexpr (std::is_same_v<R, ProbabilitySimplex>)
                    return difw_run(inst.objective, reg, r, x0, c.iterations);
                else
                    throw config_error("difw needs a simplex-like region");
            }
            throw config_error("unknown algorithm " + c.algorithm);
        },
        inst.region);
    trace.meta.rule = rule.to_string();
    trace.meta.extra.insert(extra.begin(), extra.end());
    trace.meta.extra["L"] = fmt_roundtrip(inst.objective.smoothness());
    trace.meta.extra["delta"] = fmt_roundtrip(region_diameter(inst.region));
    trace.meta.extra["fstar_method"] = inst.objective.reference().method;
    if (lambda) trace.meta.extra["lambda_certified"] = min_gradient_norm(trace) >= *lambda ? "1" : "0";
    return trace;
}

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct ManifestEntry {
    std::string file;
    std::string name;
    std::string algorithm;
    std::string rule;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    std::string status = "ok";
    bool early_exit = false;
    bool fstar_certified = true;
    std::string sha256;
    std::string notes;
};

struct BatchResult {
    int exit_status = 0;
    std::vector<ManifestEntry> entries;
};

inline std::string rule_tag(const StepRule& r) {
    std::string tag = r.to_string();
    std::replace(tag.begin(), tag.end(), ':', '_');
    return tag;
}

inline void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream os(path, std::ios::binary);
    os << "file,name,algorithm,rule,seed,iterations,status,early_exit,fstar_certified,sha256,notes\n";
    for (const auto& e : entries)
        os << e.file << ',' << e.name << ',' << e.algorithm << ',' << e.rule << ',' << e.seed << ',' << e.iterations << ','
           << e.status << ',' << (e.early_exit ? 1 : 0) << ',' << (e.fstar_certified ? 1 : 0) << ',' << e.sha256 << ','
           << e.notes << '\n';
}

// One CSV per (config, rule), written under out_dir, plus manifest.csv.
inline BatchResult run_batch(const std::vector<ExperimentConfig>& configs, const std::filesystem::path& out_dir,
                             unsigned jobs = 1) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    struct Item {
        const ExperimentConfig* cfg;
        StepRule rule;
        std::string file;
    };
    std::vector<Item> items;
    for (const auto& c : configs) {
        std::string stem = c.output.empty() ? (c.name.empty() ? "run" : c.name) : c.output;
        for (const auto& r : c.rules)
            items.push_back({&c, r, c.rules.size() == 1 ? stem + ".csv" : stem + "__" + rule_tag(r) + ".csv"});
    }

    BatchResult res;
    res.entries.resize(items.size());
    ReferenceCache cache;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            const auto& it = items[i];
            auto& e = res.entries[i];
            e.file = it.file;
            e.name = it.cfg->name;
            e.algorithm = it.cfg->algorithm;
            e.rule = it.rule.to_string();
            e.seed = it.cfg->seed;
            e.iterations = it.cfg->iterations;
            try {
                RunTrace tr = run_single(*it.cfg, it.rule, &cache);
                std::ostringstream os;
                tr.write_csv(os);
                std::string body = os.str();
                fs::path p = out_dir / it.file;
                fs::create_directories(p.parent_path());
                std::ofstream(p, std::ios::binary) << body;
                e.sha256 = sha256_hex(body);
                e.early_exit = tr.meta.early_exit;
                e.fstar_certified = tr.meta.fstar_certified;
                std::string notes;
                for (const auto& [k, v] : tr.meta.extra) notes += (notes.empty() ? "" : ";") + k + "=" + v;
                e.notes = notes;
                if (it.cfg->rate_window > 0) {
                    auto h = tr.gaps();
                    std::ostringstream rs;
                    rs << "t,slope,r2\n";
                    for (std::size_t t = 0; t + it.cfg->rate_window < h.size(); ++t) {
                        auto r = local_rate(h, t, it.cfg->rate_window);
                        rs << t << ',' << fmt_double(r.slope) << ',' << fmt_double(r.r_squared) << '\n';
                    }
                    fs::path rp = p;
                    rp.replace_extension(".rates.csv");
                    std::ofstream(rp, std::ios::binary) << rs.str();
                }
            } catch (const std::exception& ex) {
                std::string msg = ex.what();
                std::replace(msg.begin(), msg.end(), ',', ';');
                std::replace(msg.begin(), msg.end(), '\n', ' ');
                e.status = "failed";
                e.notes = msg;
            }
        }
    };
    jobs = std::max(1u, jobs);
    {
        std::vector<std::jthread> pool;
        for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : res.entries)
        if (e.status != "ok") res.exit_status = 1;
    write_manifest(out_dir / "manifest.csv", res.entries);
    return res;
}

// Files whose checksum no longer matches the manifest (or that are missing).
inline std::vector<std::string> verify_manifest(const std::filesystem::path& out_dir) {
    std::ifstream in(out_dir / "manifest.csv");
    if (!in) throw config_error("no manifest in " + out_dir.string());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> bad;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() < 10) {
            bad.push_back("malformed manifest row: " + line);
            continue;
        }
        if (f[6] != "ok") continue;
        try {
            if (sha256_hex(read_file(out_dir / f[0])) != f[9]) bad.push_back(f[0]);
        } catch (const std::exception&) {
            bad.push_back(f[0]);
        }
    }
    return bad;
}

}  // namespace olfw
