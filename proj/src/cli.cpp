#include "obcov/cli.hpp"

#include "obcov/config.hpp"
#include "obcov/estimators.hpp"
#include "obcov/experiments.hpp"
#include "obcov/matrix_io.hpp"
#include "obcov/report.hpp"
#include "obcov/stream_codec.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

namespace obcov {

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<unsigned> threads;
    std::optional<std::size_t> trials;
    std::string p_values;
    std::vector<std::string> sets;
    bool quick = false;

    // estimate
    std::string input;
    std::string kind;
    std::string mask;
    std::string truth;

    // acquire
    std::string policy;

    // grid-search
    std::string target;

    int figure = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "key = value or JSON config file (a JSON sidecar works too)");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--out", f.out, "output path");
    cmd->add_option("--threads", f.threads, "worker threads (0 = logical cores)");
    cmd->add_option("--set", f.sets, "extra key=value override, repeatable");
}

void add_sweep(CLI::App* cmd, Flags& f) {
    cmd->add_flag("--quick", f.quick, "20 trials instead of 100");
    cmd->add_option("--trials", f.trials, "Monte Carlo trials");
    cmd->add_option("--p-values", f.p_values, "comma-separated dimensions");
}

fs::path sidecar_path(const fs::path& out) {
    fs::path p = out;
    p.replace_extension(".json");
    if (p == out) p += ".sidecar.json";
    return p;
}

void require_input(const std::string& path, const char* what) {
    if (!path.empty() && !fs::is_regular_file(path))
        throw Error(Errc::IoError, std::string(what) + " file not found: " + path);
}

void require_output(const fs::path& path) {
    const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(parent)) throw Error(Errc::IoError, "output directory does not exist: " + parent.string());
}

Config build_config(const std::string& command, const Flags& f) {
    Config c = default_config(command);
    if (!f.config.empty()) load_config_file(c, f.config);
    if (f.quick) c.spec.trials = 20;
    if (f.trials) apply_setting(c, "trials", std::to_string(*f.trials));
    if (f.seed) apply_setting(c, "seed", std::to_string(*f.seed));
    if (!f.p_values.empty()) apply_setting(c, "p_values", f.p_values);
    if (!f.input.empty()) apply_setting(c, "input", f.input);
    if (!f.kind.empty()) apply_setting(c, "kind", f.kind);
    if (!f.mask.empty()) apply_setting(c, "mask", f.mask);
    if (!f.truth.empty()) apply_setting(c, "truth", f.truth);
    if (!f.policy.empty()) apply_setting(c, "policy", f.policy);
    if (!f.target.empty()) apply_setting(c, "target", f.target);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(Errc::InvalidConfig, "--set expects key=value, got '" + kv + "'");
        apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (f.threads) apply_setting(c, "threads", std::to_string(*f.threads));
    if (!f.out.empty()) apply_setting(c, "out", f.out);

    for (const auto& sg : c.spec.sigmas)
        if (sg.kind == SigmaKind::Custom) require_input(sg.path, "sigma");
    require_input(c.input, "input");
    require_input(c.mask, "mask");
    require_input(c.truth, "truth");
    return c;
}

void write_table(const ResultTable& table, const Config& c, const std::string& command, std::ostream& out) {
    const fs::path csv = c.out;
    const fs::path json = sidecar_path(csv);
    write_text_file(csv, result_table_csv(table));
    write_text_file(json, result_table_json(table, config_to_json(c, command)).dump(2) + "\n");
    out << "wrote " << csv.string() << " and " << json.string() << '\n';
    for (const auto& [k, v] : table.annotations) out << k << " = " << format_double(v) << '\n';
}

int cmd_acquire(const Flags& f, std::ostream& out) {
    Config c = build_config("acquire", f);
    if (c.out.empty()) c.out = "stream.obcv";
    require_output(c.out);
    {
        // An empty stream (n = 0) is a valid acquisition.
        ExperimentSpec check = c.spec;
        check.n = std::max<std::size_t>(check.n, 1);
        check.validate();
    }

    const std::size_t p = c.spec.p_values.front();
    const std::size_t n = c.spec.n;
    const SymMatrix sigma = build_sigma(c.spec.sigmas.front(), p);
    const GaussianModel model(sigma);
    const auto xs = draw_trial_samples(model, n, c.spec.seed, 0, 0);
    const std::span<const std::vector<double>> observed = std::span(xs).subspan(1);

    std::optional<DitherState> state;
    LanePurpose lane = LanePurpose::Adap;
    switch (c.policy) {
    case DitherPolicy::Fixed:
        state = DitherState::fixed(c.lambda);
        lane = LanePurpose::Dith;
        break;
    case DitherPolicy::GlobalAdaptive:
        state = DitherState::global_adaptive(c.spec.c1, c.spec.log_offset);
        break;
    case DitherPolicy::EntrywiseAdaptive:
        state = DitherState::entrywise_adaptive(p, c.spec.c1_entrywise, c.spec.log_offset);
        lane = LanePurpose::Entrywise;
        break;
    case DitherPolicy::OracleEntrywise:
        state = build_oracle_dither(sigma, std::max<std::size_t>(n, 1), c.spec.c1_entrywise);
        lane = LanePurpose::Oracle;
        break;
    case DitherPolicy::MaxEntrywise:
        state = observed.empty() ? DitherState::max_entrywise(std::vector<double>(p, 0.0)) : build_max_dither(observed);
        lane = LanePurpose::Max;
        break;
    }
    RngStream rng(c.spec.seed, 0, lane_for(lane, 0));
    const SampleStream stream = acquire_stream(xs, *state, rng);
    write_stream_file(c.out, stream);

    const BitCost cost = n > 0 ? bit_cost(c.policy, p, n) : BitCost{0, 0};
    nlohmann::ordered_json doc;
    doc["config"] = config_to_json(c, "acquire");
    doc["result"] = {{"p", p},
                     {"n", n},
                     {"policy", std::string(policy_name(c.policy))},
                     {"quantized_bits", cost.quantized_bits},
                     {"full_precision_bits", cost.full_precision_bits}};
    const fs::path json = sidecar_path(c.out);
    write_text_file(json, doc.dump(2) + "\n");

    out << "wrote " << c.out << " (policy " << policy_name(c.policy) << ", p=" << p << ", n=" << n << ")\n";
    out << "quantized_bits=" << cost.quantized_bits << " full_precision_bits=" << cost.full_precision_bits << '\n';
    return kExitOk;
}

int cmd_estimate(const Flags& f, std::ostream& out) {
    Config c = build_config("estimate", f);
    if (c.input.empty()) throw Error(Errc::InvalidConfig, "estimate needs --in <stream.obcv>");
    if (c.out.empty()) c.out = "estimate.csv";
    require_output(c.out);

    const SampleStream stream = read_stream_file(c.input);
    if (c.kind != "auto") {
        const EstimatorTag wanted = *parse_estimator(c.kind);
        const EstimatorTag native = estimator_for(stream.policy);
        const bool both_entrywise = is_entrywise(stream.policy) &&
                                    (wanted == EstimatorTag::AdapEntrywise || wanted == EstimatorTag::OracleEntrywise ||
                                     wanted == EstimatorTag::MaxEntrywise);
        if (wanted != native && !both_entrywise)
            throw Error(Errc::PolicyMismatch, "estimator '" + c.kind + "' cannot consume a '" +
                                                  std::string(policy_name(stream.policy)) + "' stream");
    }
    SymMatrix est = estimate(stream);
    if (!c.mask.empty()) est = apply_mask(est, read_matrix_csv(c.mask));

    std::ostringstream csv;
    write_matrix_csv(csv, est.matrix());
    nlohmann::ordered_json result = {{"p", stream.p},
                                     {"n", stream.n()},
                                     {"policy", std::string(policy_name(stream.policy))},
                                     {"estimator", std::string(estimator_name(estimator_for(stream.policy)))}};
    if (!c.truth.empty()) {
        const SymMatrix truth(read_matrix_csv(c.truth));
        const double e_op = estimation_error(est, truth, ErrorNorm::Op);
        const double e_fro = estimation_error(est, truth, ErrorNorm::Fro);
        const double e_max = estimation_error(est, truth, ErrorNorm::Max);
        csv << "error_op,error_fro,error_max\n"
            << format_double(e_op) << ',' << format_double(e_fro) << ',' << format_double(e_max) << '\n';
        result["error_op"] = e_op;
        result["error_fro"] = e_fro;
        result["error_max"] = e_max;
        out << "error_op=" << format_double(e_op) << " error_fro=" << format_double(e_fro)
            << " error_max=" << format_double(e_max) << '\n';
    }
    write_text_file(c.out, csv.str());
    nlohmann::ordered_json doc;
    doc["config"] = config_to_json(c, "estimate");
    doc["result"] = result;
    write_text_file(sidecar_path(c.out), doc.dump(2) + "\n");
    out << "wrote " << c.out << '\n';
    return kExitOk;
}

int cmd_reproduce(const Flags& f, std::ostream& out) {
    if (f.figure < 1 || f.figure > 3) throw Error(Errc::InvalidConfig, "figure must be 1, 2 or 3");
    const std::string command = "reproduce-" + std::to_string(f.figure);
    Config c = build_config(command, f);
    if (c.out.empty()) c.out = "figure" + std::to_string(f.figure) + ".csv";
    require_output(c.out);
    resolve_config(c);

    ResultTable table;
    switch (f.figure) {
    case 1: table = run_figure1(c.spec); break;
    case 2: table = run_figure2(c.spec); break;
    default: table = run_figure3(c.spec); break;
    }
    write_table(table, c, command, out);
    return kExitOk;
}

int cmd_rate_study(const Flags& f, std::ostream& out) {
    Config c = build_config("rate-study", f);
    if (c.out.empty()) c.out = "rate_study.csv";
    require_output(c.out);
    resolve_config(c);
    write_table(run_rate_study(c.spec), c, "rate-study", out);
    return kExitOk;
}

int cmd_grid_search(const Flags& f, std::ostream& out) {
    Config c = build_config("grid-search", f);
    if (c.out.empty()) c.out = "grid_search.csv";
    require_output(c.out);
    resolve_config(c);
    c.spec.validate();

    const SymMatrix sigma = build_sigma(c.spec.sigmas.front(), c.spec.p_values.front());
    GridSearchResult result;
    std::string label;
    if (c.target == "lambda") {
        const auto grid = c.spec.lambda_grid.values();
        result = grid_search_lambda(sigma, c.spec.n, grid, c.spec.trials, c.spec.seed, c.spec.threads);
        label = "dith";
    } else {
        if (!(c.c1_grid.min > 0.0 && c.c1_grid.max >= c.c1_grid.min && c.c1_grid.points >= 1))
            throw Error(Errc::InvalidConfig, "C1 grid needs max >= min > 0 and at least one point");
        const auto grid = c.c1_grid.values();
        const EstimatorTag tag = c.target == "c1" ? EstimatorTag::Adap : EstimatorTag::AdapEntrywise;
        result = grid_search_c1(sigma, c.spec.n, grid, c.spec.trials, c.spec.seed, c.spec.threads, tag);
        label = std::string(estimator_name(tag));
    }

    ResultTable table;
    table.sweep_name = c.target;
    for (std::size_t g = 0; g < result.grid.size(); ++g)
        table.rows.push_back({result.grid[g], label, result.mean_errors[g], result.std_errors[g], c.spec.trials});
    table.annotations["best_" + c.target] = result.best;
    write_table(table, c, "grid-search", out);
    return kExitOk;
}

} // namespace

int exit_code_for(Errc code) noexcept {
    switch (code) {
    case Errc::IoError:
    case Errc::BadMagic:
    case Errc::UnsupportedVersion:
    case Errc::TruncatedStream: return kExitIo;
    case Errc::NotPositiveDefinite:
    case Errc::NoConvergence:
    case Errc::NonFinite:
    case Errc::EmptyInput:
    case Errc::InvalidState: return kExitNumeric;
    default: return kExitConfig;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"One-bit dithered covariance estimation toolkit", "obcov"};
    app.require_subcommand(1);
    Flags f;

    auto* acquire = app.add_subcommand("acquire", "draw Gaussian samples and write a quantized .obcv stream");
    add_common(acquire, f);
    acquire->add_option("--policy", f.policy, "fixed|adaptive|entrywise|oracle|max");

    auto* est = app.add_subcommand("estimate", "estimate a covariance matrix from an .obcv stream");
    add_common(est, f);
    est->add_option("--in", f.input, "input .obcv stream");
    est->add_option("--kind", f.kind, "auto|dith|adap|entrywise|oracle|max");
    est->add_option("--mask", f.mask, "symmetric mask CSV with entries in [0,1]");
    est->add_option("--truth", f.truth, "true covariance CSV; appends error_op,error_fro,error_max");

    auto* reproduce = app.add_subcommand("reproduce", "run one of the figure experiments");
    add_common(reproduce, f);
    add_sweep(reproduce, f);
    reproduce->add_option("figure", f.figure, "1, 2 or 3")->required();

    auto* rate = app.add_subcommand("rate-study", "error versus n with a log-log slope fit");
    add_common(rate, f);
    add_sweep(rate, f);

    auto* grid = app.add_subcommand("grid-search", "grid search lambda or C1");
    add_common(grid, f);
    add_sweep(grid, f);
    grid->add_option("--target", f.target, "lambda|c1|c1_entrywise");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (acquire->parsed()) return cmd_acquire(f, out);
        if (est->parsed()) return cmd_estimate(f, out);
        if (reproduce->parsed()) return cmd_reproduce(f, out);
        if (rate->parsed()) return cmd_rate_study(f, out);
        if (grid->parsed()) return cmd_grid_search(f, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitConfig;
}

} // namespace obcov
