#include "obcov/config.hpp"

#include "obcov/error.hpp"
#include "obcov/matrix_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

namespace obcov {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t end = s.find(',', pos);
        if (end == std::string_view::npos) end = s.size();
        auto item = trim(s.substr(pos, end - pos));
        if (!item.empty()) out.push_back(std::move(item));
        pos = end + 1;
    }
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw Error(Errc::InvalidConfig,
                "bad value '" + std::string(value) + "' for " + std::string(key) + " (expected " + std::string(expected) + ")");
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
    const auto v = trim(value);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, value, "unsigned integer");
    return out;
}

double parse_double(std::string_view key, std::string_view value) {
    const auto v = trim(value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
        bad_value(key, value, "finite number");
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    const auto v = trim(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, value, "true/false");
}

std::vector<std::size_t> parse_size_list(std::string_view key, std::string_view value) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(value)) out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
    if (out.empty()) bad_value(key, value, "non-empty list of integers");
    return out;
}

std::optional<SigmaKind> parse_sigma_kind(std::string_view name) {
    if (name == "compound") return SigmaKind::CompoundSymmetry;
    if (name == "scaled") return SigmaKind::ScaledCompound;
    if (name == "random") return SigmaKind::RandomSpd;
    if (name == "custom") return SigmaKind::Custom;
    return std::nullopt;
}

std::string json_scalar_to_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return format_double(v.get<double>());
    throw Error(Errc::InvalidConfig, "unsupported JSON value " + v.dump());
}

std::string json_to_text(const nlohmann::json& v) {
    if (!v.is_array()) return json_scalar_to_text(v);
    std::string out;
    for (const auto& item : v) {
        if (!out.empty()) out += ',';
        out += json_scalar_to_text(item);
    }
    return out;
}

} // namespace

std::optional<DitherPolicy> parse_policy(std::string_view name) noexcept {
    for (auto p : {DitherPolicy::Fixed, DitherPolicy::GlobalAdaptive, DitherPolicy::EntrywiseAdaptive,
                   DitherPolicy::OracleEntrywise, DitherPolicy::MaxEntrywise})
        if (policy_name(p) == name) return p;
    return std::nullopt;
}

Config default_config(std::string_view command) {
    Config c;
    if (command == "reproduce-1" || command == "acquire" || command == "estimate") {
        c.spec = figure1_defaults();
    } else if (command == "reproduce-2") {
        c.spec = figure2_defaults();
    } else if (command == "reproduce-3") {
        c.spec = figure3_defaults();
    } else if (command == "rate-study") {
        c.spec = rate_study_defaults();
    } else if (command == "grid-search") {
        c.spec = figure1_defaults();
        c.spec.name = "grid-search";
        c.spec.p_values = {5};
    } else {
        throw Error(Errc::InvalidConfig, "unknown command " + std::string(command));
    }
    if (command == "acquire") {
        c.spec.name = "acquire";
        c.spec.p_values = {10};
        c.spec.n = 100;
    }
    if (command == "estimate") c.spec.name = "estimate";
    c.spec.threads = std::max(1u, std::thread::hardware_concurrency());
    return c;
}

void apply_setting(Config& c, std::string_view raw_key, std::string_view value) {
    const std::string key = trim(raw_key);
    auto& s = c.spec;
    if (key == "command") {
        // Informational in sidecars.
    } else if (key == "name") {
        s.name = trim(value);
    } else if (key == "sigma") {
        const std::uint64_t seed = s.sigmas.empty() ? 0 : s.sigmas.front().seed;
        const std::string path = s.sigmas.empty() ? std::string{} : s.sigmas.front().path;
        s.sigmas.clear();
        for (const auto& item : split_list(value)) {
            const auto kind = parse_sigma_kind(item);
            if (!kind) bad_value(key, value, "compound|scaled|random|custom");
            s.sigmas.push_back({*kind, seed, path});
        }
        if (s.sigmas.empty()) bad_value(key, value, "non-empty sigma list");
    } else if (key == "sigma_seed") {
        const auto seed = parse_u64(key, value);
        for (auto& sg : s.sigmas) sg.seed = seed;
    } else if (key == "sigma_path") {
        for (auto& sg : s.sigmas) sg.path = trim(value);
    } else if (key == "p" || key == "p_values") {
        s.p_values = parse_size_list(key, value);
    } else if (key == "n") {
        s.n = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "n_values") {
        s.n_values = parse_size_list(key, value);
    } else if (key == "trials") {
        s.trials = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "seed") {
        s.seed = parse_u64(key, value);
    } else if (key == "estimators") {
        s.estimators.clear();
        for (const auto& item : split_list(value)) {
            const auto tag = parse_estimator(item);
            if (!tag) bad_value(key, value, "sample|dith|adap|entrywise|oracle|max");
            s.estimators.push_back(*tag);
        }
        if (s.estimators.empty()) bad_value(key, value, "non-empty estimator list");
    } else if (key == "lambda_min") {
        s.lambda_grid.min = parse_double(key, value);
        c.lambda_grid_auto = false;
    } else if (key == "lambda_max") {
        s.lambda_grid.max = parse_double(key, value);
        c.lambda_grid_auto = false;
    } else if (key == "lambda_points") {
        s.lambda_grid.points = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "c1") {
        s.c1 = parse_double(key, value);
    } else if (key == "c1_entrywise") {
        s.c1_entrywise = parse_double(key, value);
    } else if (key == "log_offset") {
        s.log_offset = parse_bool(key, value);
    } else if (key == "norm") {
        const auto norm = parse_norm(trim(value));
        if (!norm) bad_value(key, value, "op|fro|max");
        s.norm = *norm;
    } else if (key == "relative") {
        s.relative = parse_bool(key, value);
    } else if (key == "threads") {
        const auto t = parse_u64(key, value);
        s.threads = t == 0 ? std::max(1u, std::thread::hardware_concurrency()) : static_cast<unsigned>(t);
    } else if (key == "policy") {
        const auto policy = parse_policy(trim(value));
        if (!policy) bad_value(key, value, "fixed|adaptive|entrywise|oracle|max");
        c.policy = *policy;
    } else if (key == "lambda") {
        c.lambda = parse_double(key, value);
    } else if (key == "input") {
        c.input = trim(value);
    } else if (key == "mask") {
        c.mask = trim(value);
    } else if (key == "truth") {
        c.truth = trim(value);
    } else if (key == "kind") {
        const auto k = trim(value);
        if (k != "auto" && !parse_estimator(k)) bad_value(key, value, "auto|dith|adap|entrywise|oracle|max");
        c.kind = k;
    } else if (key == "target") {
        const auto t = trim(value);
        if (t != "lambda" && t != "c1" && t != "c1_entrywise") bad_value(key, value, "lambda|c1|c1_entrywise");
        c.target = t;
    } else if (key == "c1_min") {
        c.c1_grid.min = parse_double(key, value);
    } else if (key == "c1_max") {
        c.c1_grid.max = parse_double(key, value);
    } else if (key == "c1_points") {
        c.c1_grid.points = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "out") {
        c.out = trim(value);
    } else {
        throw Error(Errc::InvalidConfig, "unknown config key '" + key + "'");
    }
}

void load_config_text(Config& c, std::string_view text) {
    const auto body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::InvalidConfig, std::string("malformed JSON config: ") + e.what());
        }
        if (!doc.is_object()) throw Error(Errc::InvalidConfig, "JSON config must be an object");
        const nlohmann::json* settings = &doc;
        if (doc.contains("config")) {
            for (const auto& [k, v] : doc.items())
                if (k != "config" && k != "rows" && k != "annotations" && k != "sweep" && k != "result")
                    throw Error(Errc::InvalidConfig, "unknown sidecar key '" + k + "'");
            settings = &doc["config"];
        }
        if (!settings->is_object()) throw Error(Errc::InvalidConfig, "\"config\" must be an object");
        for (const auto& [k, v] : settings->items()) apply_setting(c, k, json_to_text(v));
        return;
    }

    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(c, content.substr(0, eq), content.substr(eq + 1));
    }
}

void load_config_file(Config& c, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    load_config_text(c, buf.str());
}

void resolve_config(Config& c) {
    if (c.lambda_grid_auto && !c.spec.sigmas.empty() && !c.spec.p_values.empty()) {
        const auto sigma = build_sigma(c.spec.sigmas.front(), c.spec.p_values.front());
        const std::size_t points = c.spec.lambda_grid.points;
        c.spec.lambda_grid = LambdaGrid::for_sigma(sigma, points);
        c.lambda_grid_auto = false;
    }
}

nlohmann::ordered_json config_to_json(const Config& c, std::string_view command) {
    const auto& s = c.spec;
    nlohmann::ordered_json j;
    j["command"] = std::string(command);
    j["name"] = s.name;
    std::string sigma;
    for (const auto& sg : s.sigmas) {
        if (!sigma.empty()) sigma += ',';
        sigma += sigma_kind_name(sg.kind);
    }
    j["sigma"] = sigma;
    j["sigma_seed"] = s.sigmas.empty() ? 0 : s.sigmas.front().seed;
    j["sigma_path"] = s.sigmas.empty() ? std::string{} : s.sigmas.front().path;
    j["p_values"] = s.p_values;
    j["n"] = s.n;
    j["n_values"] = s.n_values;
    j["trials"] = s.trials;
    j["seed"] = s.seed;
    auto est = nlohmann::ordered_json::array();
    for (auto tag : s.estimators) est.push_back(std::string(estimator_name(tag)));
    j["estimators"] = est;
    j["lambda_min"] = s.lambda_grid.min;
    j["lambda_max"] = s.lambda_grid.max;
    j["lambda_points"] = s.lambda_grid.points;
    j["c1"] = s.c1;
    j["c1_entrywise"] = s.c1_entrywise;
    j["log_offset"] = s.log_offset;
    j["norm"] = std::string(norm_name(s.norm));
    j["relative"] = s.relative;
    j["policy"] = std::string(policy_name(c.policy));
    j["lambda"] = c.lambda;
    j["input"] = c.input;
    j["mask"] = c.mask;
    j["truth"] = c.truth;
    j["kind"] = c.kind;
    j["target"] = c.target;
    j["c1_min"] = c.c1_grid.min;
    j["c1_max"] = c.c1_grid.max;
    j["c1_points"] = c.c1_grid.points;
    return j;
}

} // namespace obcov
