// prds: exact analysis, simulation, and interference patterns for monomial
// random dynamical systems on the p-adic integers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prds/analysis.hpp"
#include "prds/engine.hpp"
#include "prds/pattern.hpp"
#include "prds/rational.hpp"

namespace {

using nlohmann::json;

constexpr int kExitValidation = 2;
constexpr int kExitInternal = 3;
constexpr int kExitIo = 4;

struct Options {
    std::optional<std::uint64_t> p;
    std::optional<std::vector<std::uint64_t>> exponents;
    std::optional<std::vector<std::string>> probabilities;
    std::optional<unsigned> precision;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> config_file;

    std::optional<std::uint64_t> steps;
    std::optional<std::uint64_t> trials;
    std::optional<unsigned> threads;
    std::optional<std::string> u0;
    std::optional<std::uint64_t> u0_index;
    std::optional<std::uint64_t> burn_in;
    std::optional<std::uint64_t> particles;
    std::optional<std::vector<double>> y_range;
    std::optional<unsigned> x_bins;
    std::optional<unsigned> y_bins;
    std::optional<std::vector<std::uint64_t>> check_seeds;
};

// flags override config-file values
template <typename T>
void take(std::optional<T>& slot, const json& j, const char* key) {
    if (slot || !j.contains(key)) return;
    slot = j.at(key).get<T>();
}

void load_config(Options& o) {
    if (!o.config_file) return;
    std::ifstream in(*o.config_file);
    if (!in) throw prds::IoError("cannot open config file " + *o.config_file);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw prds::ValidationError("config parse error: " + std::string(e.what()));
    }
    take(o.p, j, "p");
    take(o.exponents, j, "s");
    if (!o.probabilities && j.contains("q")) {
        std::vector<std::string> q;
        for (const auto& item : j.at("q"))
            q.push_back(item.is_string() ? item.get<std::string>() : item.dump());
        o.probabilities = q;
    }
    take(o.precision, j, "precision");
    take(o.seed, j, "seed");
    take(o.steps, j, "steps");
    take(o.trials, j, "trials");
    take(o.threads, j, "threads");
    take(o.u0, j, "u0");
    take(o.u0_index, j, "u0_index");
    take(o.burn_in, j, "burn_in");
    take(o.particles, j, "particles");
    take(o.y_range, j, "y_range");
    take(o.x_bins, j, "x_bins");
    take(o.y_bins, j, "y_bins");
    take(o.check_seeds, j, "check_seeds");
}

prds::RdsSpec build_spec(const Options& o, std::vector<std::string>& errors) {
    prds::RdsSpec spec;
    if (!o.p)
        errors.push_back("--p is required");
    else
        spec.p = *o.p;
    if (!o.exponents || o.exponents->empty())
        errors.push_back("--s requires at least one exponent");
    else
        spec.exponents = *o.exponents;
    if (o.probabilities) {
        for (const auto& text : *o.probabilities) {
            try {
                spec.probabilities.push_back(prds::parse_rational(text));
            } catch (const prds::ValidationError& e) {
                errors.push_back(e.what());
            }
        }
    }
    spec.precision = o.precision.value_or(16);
    spec.seed = o.seed.value_or(0);
    return spec;
}

prds::PadicInt resolve_u0(const Options& o, const prds::RdsSpec& spec) {
    if (o.u0 && o.u0_index) throw prds::ValidationError("--u0 and --u0-index are exclusive");
    if (o.u0) {
        prds::PadicInt u = prds::PadicInt::parse(*o.u0);
        if (u.prime() != spec.p || u.precision() != spec.precision)
            throw prds::ValidationError("u0 does not match the spec's (p, K)");
        return u;
    }
    const std::uint64_t index = o.u0_index.value_or(1);
    prds::UnityTable table(spec.p, spec.precision);
    return table.lift(index);
}

void fail_validation(const std::vector<std::string>& errors) {
    for (const auto& e : errors) std::cerr << "error: " << e << "\n";
    std::exit(kExitValidation);
}

void require_spec_valid(const prds::RdsSpec& spec, std::vector<std::string> pre_errors = {}) {
    auto errors = spec.validate();
    pre_errors.insert(pre_errors.end(), errors.begin(), errors.end());
    if (!pre_errors.empty()) fail_validation(pre_errors);
    if (!spec.has_attracting_exponent())
        std::cerr << "warning: no exponent is divisible by p; "
                     "sphere dynamics are isometric; no attraction claim\n";
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw prds::IoError("cannot write " + path.string());
    return out;
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw prds::IoError("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

json spec_json(const prds::RdsSpec& spec) {
    json j;
    j["p"] = spec.p;
    j["s"] = spec.exponents;
    std::vector<std::string> q;
    for (const auto& x : spec.effective_probabilities()) q.push_back(prds::rational_str(x));
    j["q"] = q;
    j["precision"] = spec.precision;
    j["seed"] = spec.seed;
    j["rng"] = prds::rng::generator_name;
    return j;
}

int cmd_analyze(const Options& o) {
    std::vector<std::string> errors;
    prds::RdsSpec spec = build_spec(o, errors);
    require_spec_valid(spec, errors);
    prds::AttractorReport report = prds::analyze(spec);
    std::string text = prds::report_to_json(report);
    if (o.out_dir) {
        auto dir = prepare_out_dir(*o.out_dir);
        open_output(dir / "report.json") << text << "\n";
    } else {
        std::cout << text << "\n";
    }
    return 0;
}

int cmd_simulate(const Options& o) {
    std::vector<std::string> errors;
    prds::RdsSpec spec = build_spec(o, errors);
    if (!o.out_dir) errors.push_back("--out-dir is required for simulate");
    if (o.steps && *o.steps > 100000000ULL) errors.push_back("--steps is limited to 1e8");
    require_spec_valid(spec, errors);

    const std::uint64_t steps = o.steps.value_or(1000);
    const std::uint64_t trials = o.trials.value_or(1);
    const unsigned threads = o.threads.value_or(1);
    if (trials < 1) fail_validation({"--trials must be >= 1"});
    prds::PadicInt u0 = resolve_u0(o, spec);

    auto traces = prds::run_trials(spec, u0, steps, trials, threads);
    auto dir = prepare_out_dir(*o.out_dir);

    prds::UnityTable table(spec.p, spec.precision);
    const auto components = prds::invariant_decomposition(spec.p, spec.exponents);
    json summary;
    summary["command"] = "simulate";
    summary["spec"] = spec_json(spec);
    summary["steps"] = steps;
    summary["trials"] = trials;
    summary["u0"] = u0.str();
    json per_trial = json::array();
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto& trace = traces[t];
        char name[32];
        std::snprintf(name, sizeof name, "trace_%04llu.csv", static_cast<unsigned long long>(t));
        const auto path = trials == 1 ? (dir / "trace.csv") : (dir / name);
        auto out = open_output(path);
        prds::write_trace_csv(out, trace);

        const prds::PadicInt& last = trace.steps.empty() ? trace.initial : trace.steps.back().state;
        json entry;
        entry["trial"] = t;
        entry["trace"] = path.filename().string();
        entry["final_state"] = last.str();
        entry["final_dist_valuation"] =
            (trace.steps.empty() ? trace.initial_dist : trace.steps.back().dist_to_attractor).str();
        std::vector<std::uint64_t> counts(spec.exponents.size(), 0);
        for (const auto& s : trace.steps) ++counts[s.draw];
        entry["draw_counts"] = counts;
        int component = -1;
        if (last.valuation().v == 0) {
            const auto index = table.index_of_residue(last.residue());
            for (std::size_t c = 0; c < components.size(); ++c)
                if (std::binary_search(components[c].begin(), components[c].end(), index))
                    component = static_cast<int>(c);
            entry["final_index"] = index;
        } else {
            entry["final_index"] = nullptr;
        }
        entry["absorbed_component"] = component;
        per_trial.push_back(entry);
    }
    summary["per_trial"] = per_trial;
    open_output(dir / "summary.json") << summary.dump(2) << "\n";
    return 0;
}

int cmd_chain(const Options& o) {
    std::vector<std::string> errors;
    prds::RdsSpec spec = build_spec(o, errors);
    require_spec_valid(spec, errors);
    const std::uint64_t steps = o.steps.value_or(100000);
    const std::uint64_t burn = o.burn_in.value_or(prds::default_burn_in(spec.p));

    auto report = prds::empirical_transition_matrix(spec, steps, burn);
    json j;
    j["command"] = "chain";
    j["spec"] = spec_json(spec);
    j["states"] = report.exact.states;
    j["start_index"] = report.start_index;
    j["n_steps"] = report.n_steps;
    json exact = json::array(), empirical = json::array();
    for (std::size_t r = 0; r < report.exact.states.size(); ++r) {
        json erow = json::array(), frow = json::array();
        for (std::size_t c = 0; c < report.exact.states.size(); ++c) {
            erow.push_back(prds::rational_str(report.exact.rows[r][c]));
            const double emp = report.row_visits[r]
                                   ? static_cast<double>(report.transition_counts[r][c]) /
                                         static_cast<double>(report.row_visits[r])
                                   : 0.0;
            frow.push_back(prds::format_double(emp));
        }
        exact.push_back(erow);
        empirical.push_back(frow);
    }
    j["exact"] = exact;
    j["empirical"] = empirical;
    j["row_visits"] = report.row_visits;
    j["max_abs_deviation"] = prds::format_double(report.max_abs_deviation);
    j["all_within_3sigma"] = report.all_within_3sigma;
    json failures = json::array();
    for (const auto& f : report.failures) {
        json entry;
        entry["from"] = report.exact.states[f.row];
        entry["to"] = report.exact.states[f.col];
        entry["deviation"] = prds::format_double(f.deviation);
        entry["sigma"] = prds::format_double(f.sigma);
        failures.push_back(entry);
    }
    j["failed_entries"] = failures;
    std::string text = j.dump(2);
    if (o.out_dir) {
        auto dir = prepare_out_dir(*o.out_dir);
        open_output(dir / "chain.json") << text << "\n";
    } else {
        std::cout << text << "\n";
    }
    return 0;
}

int cmd_pattern(const Options& o) {
    std::vector<std::string> errors;
    prds::PatternConfig config;
    config.spec = build_spec(o, errors);
    if (!o.out_dir) errors.push_back("--out-dir is required for pattern");
    if (o.y_range) {
        if (o.y_range->size() != 2)
            errors.push_back("--y-range needs exactly two values a,b");
        else {
            config.y_min = (*o.y_range)[0];
            config.y_max = (*o.y_range)[1];
        }
    }
    config.n_particles = o.particles.value_or(10000);
    config.burn_in = o.burn_in;
    if (o.x_bins) config.x_bins = *o.x_bins;
    if (o.y_bins) config.y_bins = *o.y_bins;
    if (errors.empty() && config.spec.validate().empty()) config.u0 = resolve_u0(o, config.spec);
    auto config_errors = config.validate();
    errors.insert(errors.end(), config_errors.begin(), config_errors.end());
    if (!errors.empty()) fail_validation(errors);
    if (!config.spec.has_attracting_exponent())
        std::cerr << "warning: no exponent is divisible by p; "
                     "sphere dynamics are isometric; no attraction claim\n";

    auto result = prds::generate_pattern(config);
    auto dir = prepare_out_dir(*o.out_dir);
    {
        auto out = open_output(dir / "points.csv");
        prds::write_points_csv(out, result);
    }
    {
        auto out = open_output(dir / "histogram.csv");
        prds::write_histogram_csv(out, config, result);
    }

    json strips;
    strips["command"] = "pattern";
    strips["spec"] = spec_json(config.spec);
    strips["u0"] = config.effective_u0().str();
    strips["particles"] = config.n_particles;
    strips["burn_in"] = config.effective_burn_in();
    strips["absorbed"] = result.absorbed;
    strips["reached_component"] = result.reached_component;
    strips["points_file"] = "points.csv";
    strips["histogram_file"] = "histogram.csv";
    json centers = json::array();
    prds::UnityTable table(config.spec.p, config.spec.precision);
    for (std::size_t i = 0; i < result.strip_centers.size(); ++i) {
        json c;
        c["index"] = result.strip_indices[i];
        c["root"] = "xi^" + std::to_string(result.strip_indices[i]);
        c["lift"] = table.lift(result.strip_indices[i]).str();
        c["x"] = prds::rational_str(result.strip_centers[i]);
        c["x_float"] = prds::format_double(result.strip_centers[i].get_d());
        c["occupancy"] = result.strip_occupancy[i];
        centers.push_back(c);
    }
    strips["strips"] = centers;

    if (o.check_seeds && o.check_seeds->size() >= 1) {
        auto check =
            prds::seed_independence_check(config, *o.check_seeds, o.threads.value_or(1));
        json jc;
        jc["seeds"] = check.seeds;
        jc["identical_strip_centers"] = true;
        jc["samples_per_seed"] = check.samples_per_seed;
        jc["occupancy"] = check.occupancy;
        jc["max_occupancy_sigma"] = prds::format_double(check.max_occupancy_sigma);
        strips["seed_independence"] = jc;
    }
    open_output(dir / "strips.json") << strips.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"p-adic monomial random dynamical systems: exact attractors, "
                 "Markov analysis, simulation, interference patterns"};
    app.require_subcommand(1);

    Options o;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--p", o.p, "prime modulus");
        cmd->add_option("--s", o.exponents, "exponents s_1,...,s_m")->delimiter(',');
        cmd->add_option("--q", o.probabilities,
                        "probabilities q_1,...,q_m (rationals or decimals; default uniform)")
            ->delimiter(',');
        cmd->add_option("--precision", o.precision, "digits K retained (default 16)");
        cmd->add_option("--seed", o.seed, "RNG seed (default 0)");
        cmd->add_option("--out-dir", o.out_dir, "output directory");
        cmd->add_option("--config", o.config_file, "JSON config file; flags override");
    };

    auto* analyze = app.add_subcommand("analyze", "exact attractor report (JSON)");
    add_common(analyze);

    auto* simulate = app.add_subcommand("simulate", "orbit traces (CSV) + summary (JSON)");
    add_common(simulate);
    simulate->add_option("--steps", o.steps, "iterations per trial (default 1000)");
    simulate->add_option("--trials", o.trials, "independent trials (default 1)");
    simulate->add_option("--threads", o.threads, "worker threads (default 1)");
    simulate->add_option("--u0", o.u0, "initial state, form p:K:a0,a1,...");
    simulate->add_option("--u0-index", o.u0_index, "start at the lift of xi^a (default 1)");

    auto* chain = app.add_subcommand("chain", "exact vs empirical transition matrix");
    add_common(chain);
    chain->add_option("--steps", o.steps, "recorded transitions (default 100000)");
    chain->add_option("--burn-in", o.burn_in, "transitions discarded first (default 10*(p-1))");

    auto* pattern = app.add_subcommand("pattern", "interference pattern: points, histogram, strips");
    add_common(pattern);
    pattern->add_option("--particles", o.particles, "total iterations (default 10000)");
    pattern->add_option("--burn-in", o.burn_in, "iterations discarded (default 10*(p-1))");
    pattern->add_option("--u0", o.u0, "initial state, form p:K:a0,a1,...");
    pattern->add_option("--u0-index", o.u0_index, "start at the lift of xi^a (default 1)");
    pattern->add_option("--y-range", o.y_range, "uniform y interval a,b (default 0,1)")->delimiter(',');
    pattern->add_option("--x-bins", o.x_bins, "histogram x resolution (default 100)");
    pattern->add_option("--y-bins", o.y_bins, "histogram y resolution (default 20)");
    pattern->add_option("--check-seeds", o.check_seeds, "run the seed-independence check")
        ->delimiter(',');
    pattern->add_option("--threads", o.threads, "worker threads for --check-seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        load_config(o);
        if (analyze->parsed()) return cmd_analyze(o);
        if (simulate->parsed()) return cmd_simulate(o);
        if (chain->parsed()) return cmd_chain(o);
        if (pattern->parsed()) return cmd_pattern(o);
    } catch (const prds::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const prds::InternalInconsistency& e) {
        std::cerr << "internal inconsistency: " << e.what() << "\n";
        return kExitInternal;
    } catch (const prds::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
