// SPDX-License-Identifier: Apache-2.0
#include "jsdm/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace jsdm {

namespace {

enum class Type { integer, uint64, real, boolean, text, choice, int_list, real_list, choice_list };

struct KeySpec {
    const char* name;
    Type type;
    const char* fallback; // nullptr: required
    double lo = -HUGE_VAL;
    double hi = HUGE_VAL;
    bool lo_open = false; // lo itself excluded
    std::vector<std::string> choices = {};
    std::map<std::string, std::string> per_experiment = {};
};

const std::vector<std::string> kExperiments{"scaling", "grouping-compare", "ccdf", "largesystem", "fractions", "prob-sched"};
const std::vector<std::string> kPolicies{"gbf-all", "gbf-max", "zfbf-sus", "zfbf-gus", "prob"};
const std::map<std::string, std::string> kLsExperiments(const char* value)
{
    return {{"largesystem", value}, {"fractions", value}, {"prob-sched", value}};
}

const std::vector<KeySpec>& key_table()
{
    static const std::vector<KeySpec> table{
        {"experiment", Type::choice, nullptr, -HUGE_VAL, HUGE_VAL, false, kExperiments},
        {"seed", Type::uint64, nullptr},
        {"M", Type::integer, nullptr, 1, 4096},
        {"trials", Type::integer, "200", 1, 1e9, false, {},
         {{"scaling", "200"}, {"grouping-compare", "500"}, {"ccdf", "200000"}, {"largesystem", "100"},
          {"fractions", "1"}, {"prob-sched", "100"}}},
        {"N", Type::int_list, "1", 1, 64},
        {"D", Type::real, "0.5", 0, 10, true},
        {"snr_db", Type::real_list, "10", -50, 80},
        {"K", Type::int_list, "50,100,200,500,1000", 1, 1e6, false, {}, kLsExperiments("16")},
        {"theta_min_deg", Type::real, "-60", -90, 90, true},
        {"theta_max_deg", Type::real, "60", -90, 90, true},
        {"delta_min_deg", Type::real, "5", 0, 45, true},
        {"delta_max_deg", Type::real, "15", 0, 45, true},
        {"population_csv", Type::text, ""},
        {"G", Type::integer, "8", 1, 64, false, {}, kLsExperiments("4")},
        {"grouping", Type::choice, "dft", -HUGE_VAL, HUGE_VAL, false, {"dft", "kmeans"}},
        {"dft_rule", Type::choice, "wrapped", -HUGE_VAL, HUGE_VAL, false, {"wrapped", "disjoint"}},
        {"dft_r", Type::integer, "1", 1, 4096},
        {"pattern_mode", Type::choice, "alternating", -HUGE_VAL, HUGE_VAL, false, {"alternating", "maxmin"}},
        {"rank_policy", Type::choice, "energy", -HUGE_VAL, HUGE_VAL, false, {"energy", "full"}},
        {"eta", Type::real, "0.95", 0, 1, true},
        {"kmeans_epsilon", Type::real, "1e-3", 0, 1, true},
        {"kmeans_max_iter", Type::integer, "100", 1, 1e6},
        {"kmeans_restarts", Type::integer, "5", 1, 1000},
        {"policies", Type::choice_list, "gbf-all,gbf-max,zfbf-sus", -HUGE_VAL, HUGE_VAL, false, kPolicies},
        {"sus_alpha", Type::real, "0.3", 0, 1, true},
        {"ranks", Type::int_list, "3,3", 1, 4096},
        {"kprime", Type::int_list, "32,64,128,256,512,1024,2048,4096", 2, 1e7},
        {"group_basis", Type::choice, "orthogonal", -HUGE_VAL, HUGE_VAL, false, {"orthogonal", "random"}},
        {"ccdf_x", Type::real_list, "0.5,1,2,4", 0, 1e9},
        {"group_theta_deg", Type::real_list, "-30,30", -90, 90, true},
        {"group_delta_deg", Type::real_list, "10,10", 0, 45, true},
        {"b", Type::integer, "2", 1, 4096},
        {"pattern", Type::integer, "1", 1, 2},
        {"utility", Type::choice_list, "pfs,sumrate", -HUGE_VAL, HUGE_VAL, false, {"pfs", "sumrate"}},
        {"delta_gamma", Type::real, "0.01", 0, 0.1, true},
        {"utility_floor", Type::real, "1e-12", 0, 1, true},
        {"with_stop", Type::boolean, "true"},
        {"quadrature_nodes", Type::integer, "2048", 8, 1 << 20},
        {"fp_tolerance", Type::real, "1e-9", 0, 1e-2, true},
        {"fp_max_iter", Type::integer, "10000", 1, 1e7},
        {"selection", Type::choice, "probabilistic", -HUGE_VAL, HUGE_VAL, false, {"rounded", "probabilistic"}},
    };
    return table;
}

std::string trim(std::string_view s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string_view::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ','))
        out.push_back(trim(item));
    if (!s.empty() && s.back() == ',')
        out.emplace_back();
    return out;
}

std::optional<double> parse_real(const std::string& s)
{
    if (s.empty())
        return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::optional<long long> parse_integer(const std::string& s)
{
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        return std::nullopt;
    return v;
}

std::optional<bool> parse_bool(const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on")
        return true;
    if (s == "false" || s == "0" || s == "no" || s == "off")
        return false;
    return std::nullopt;
}

std::string range_text(const KeySpec& k)
{
    std::ostringstream os;
    os << (k.lo_open ? "(" : "[") << k.lo << ", " << k.hi << "]";
    return os.str();
}

bool in_range(const KeySpec& k, double v)
{
    return (k.lo_open ? v > k.lo : v >= k.lo) && v <= k.hi;
}

// Checks one value and returns its normalized text.
std::optional<std::string> check_value(const KeySpec& k, const std::string& raw, std::vector<ConfigIssue>& issues)
{
    auto fail = [&](ConfigIssue::Kind kind, const std::string& msg) {
        issues.push_back({kind, k.name, msg});
        return std::optional<std::string>{};
    };
    auto check_scalar = [&](const std::string& item, bool integral) -> bool {
        if (integral) {
            const auto v = parse_integer(item);
            if (!v) {
                fail(ConfigIssue::Kind::parse, "'" + item + "' is not an integer");
                return false;
            }
            if (!in_range(k, static_cast<double>(*v))) {
                fail(ConfigIssue::Kind::range, item + " outside " + range_text(k));
                return false;
            }
            return true;
        }
        const auto v = parse_real(item);
        if (!v) {
            fail(ConfigIssue::Kind::parse, "'" + item + "' is not a number");
            return false;
        }
        if (!in_range(k, *v)) {
            fail(ConfigIssue::Kind::range, item + " outside " + range_text(k));
            return false;
        }
        return true;
    };
    auto check_choice = [&](const std::string& item) {
        if (std::find(k.choices.begin(), k.choices.end(), item) != k.choices.end())
            return true;
        std::string allowed;
        for (const auto& c : k.choices)
            allowed += (allowed.empty() ? "" : "|") + c;
        fail(ConfigIssue::Kind::range, "'" + item + "' is not one of " + allowed);
        return false;
    };

    switch (k.type) {
    case Type::integer:
        return check_scalar(raw, true) ? std::optional<std::string>(raw) : std::nullopt;
    case Type::real:
        return check_scalar(raw, false) ? std::optional<std::string>(raw) : std::nullopt;
    case Type::uint64: {
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (ec != std::errc() || p != raw.data() + raw.size() || raw.empty())
            return fail(ConfigIssue::Kind::parse, "'" + raw + "' is not a non-negative 64-bit integer");
        return std::to_string(v);
    }
    case Type::boolean: {
        const auto v = parse_bool(raw);
        if (!v)
            return fail(ConfigIssue::Kind::parse, "'" + raw + "' is not a boolean");
        return std::string(*v ? "true" : "false");
    }
    case Type::text:
        return raw;
    case Type::choice:
        return check_choice(raw) ? std::optional<std::string>(raw) : std::nullopt;
    case Type::int_list:
    case Type::real_list:
    case Type::choice_list: {
        const auto items = split_list(raw);
        if (items.empty())
            return fail(ConfigIssue::Kind::range, "list must not be empty");
        std::string joined;
        for (const auto& item : items) {
            const bool ok = k.type == Type::choice_list ? check_choice(item) : check_scalar(item, k.type == Type::int_list);
            if (!ok)
                return std::nullopt;
            joined += (joined.empty() ? "" : ",") + item;
        }
        return joined;
    }
    }
    return std::nullopt;
}

} // namespace

std::string_view issue_kind_name(ConfigIssue::Kind kind)
{
    switch (kind) {
    case ConfigIssue::Kind::missing:
        return "missing";
    case ConfigIssue::Kind::unknown_key:
        return "unknown-key";
    case ConfigIssue::Kind::range:
        return "range";
    case ConfigIssue::Kind::parse:
        return "parse";
    }
    return "?";
}

namespace {
std::string join_issues(const std::vector<ConfigIssue>& issues)
{
    std::string out = "invalid configuration:";
    for (const auto& i : issues)
        out += "\n  " + std::string(issue_kind_name(i.kind)) + " " + i.key + ": " + i.message;
    return out;
}
} // namespace

ConfigErrors::ConfigErrors(std::vector<ConfigIssue> issues) : ConfigError(join_issues(issues)), issues_(std::move(issues)) {}

std::uint64_t ExperimentConfig::seed() const
{
    return std::stoull(values_.at("seed"));
}

const std::string& ExperimentConfig::get(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("config: unknown key '" + key + "'");
    return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const
{
    return *parse_real(get(key));
}

int ExperimentConfig::get_int(const std::string& key) const
{
    return static_cast<int>(*parse_integer(get(key)));
}

bool ExperimentConfig::get_bool(const std::string& key) const
{
    return get(key) == "true";
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& s : split_list(get(key)))
        out.push_back(*parse_real(s));
    return out;
}

std::vector<int> ExperimentConfig::get_ints(const std::string& key) const
{
    std::vector<int> out;
    for (const auto& s : split_list(get(key)))
        out.push_back(static_cast<int>(*parse_integer(s)));
    return out;
}

std::vector<std::string> ExperimentConfig::get_strings(const std::string& key) const
{
    return split_list(get(key));
}

std::string ExperimentConfig::normalized() const
{
    std::string out;
    for (const auto& [k, v] : values_)
        out += k + " = " + v + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const
{
    return fnv1a64(normalized());
}

std::string ExperimentConfig::hash_hex() const
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> experiment_names()
{
    return kExperiments;
}

ExperimentConfig validate_config_text(std::string_view text, const std::map<std::string, std::string>& overrides)
{
    std::vector<ConfigIssue> issues;
    std::map<std::string, std::string> raw;
    std::istringstream is{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            issues.push_back({ConfigIssue::Kind::parse, "line " + std::to_string(lineno), "expected 'key = value'"});
            continue;
        }
        const std::string key = trim(body.substr(0, eq));
        if (raw.count(key)) {
            issues.push_back({ConfigIssue::Kind::parse, key, "given more than once"});
            continue;
        }
        raw[key] = trim(body.substr(eq + 1));
    }
    for (const auto& [k, v] : overrides)
        raw[k] = trim(v);

    const auto& table = key_table();
    for (const auto& [k, v] : raw)
        if (std::none_of(table.begin(), table.end(), [&](const KeySpec& s) { return k == s.name; }))
            issues.push_back({ConfigIssue::Kind::unknown_key, k, "not a recognized key"});

    std::string experiment;
    if (auto it = raw.find("experiment"); it != raw.end())
        experiment = it->second;

    ExperimentConfig cfg;
    for (const auto& spec : table) {
        std::string value;
        if (auto it = raw.find(spec.name); it != raw.end()) {
            value = it->second;
        } else if (!spec.fallback) {
            issues.push_back({ConfigIssue::Kind::missing, spec.name, "required key not given"});
            continue;
        } else {
            auto pe = spec.per_experiment.find(experiment);
            value = pe != spec.per_experiment.end() ? pe->second : spec.fallback;
            cfg.defaulted_.push_back(spec.name);
        }
        if (spec.type == Type::text && value.empty()) {
            cfg.values_[spec.name] = value;
            continue;
        }
        if (auto norm = check_value(spec, value, issues))
            cfg.values_[spec.name] = *norm;
    }

    auto cross = [&](const char* a, const char* b) {
        if (cfg.values_.count(a) && cfg.values_.count(b) && !(cfg.get_double(a) < cfg.get_double(b)))
            issues.push_back({ConfigIssue::Kind::range, a, std::string("must be below ") + b});
    };
    cross("theta_min_deg", "theta_max_deg");
    cross("delta_min_deg", "delta_max_deg");
    if (cfg.values_.count("theta_min_deg") && cfg.values_.count("theta_max_deg") && cfg.values_.count("delta_max_deg")) {
        const double reach = std::max(std::abs(cfg.get_double("theta_min_deg")), std::abs(cfg.get_double("theta_max_deg"))) +
                             cfg.get_double("delta_max_deg");
        if (!(reach < 90.0))
            issues.push_back({ConfigIssue::Kind::range, "delta_max_deg", "|theta| + delta must stay below 90 degrees"});
    }
    if (cfg.values_.count("group_theta_deg") && cfg.values_.count("group_delta_deg") &&
        cfg.get_doubles("group_theta_deg").size() != cfg.get_doubles("group_delta_deg").size())
        issues.push_back({ConfigIssue::Kind::range, "group_delta_deg", "needs one entry per group_theta_deg entry"});

    if (!issues.empty())
        throw ConfigErrors(std::move(issues));
    return cfg;
}

ExperimentConfig validate_config(const std::string& path, const std::map<std::string, std::string>& overrides)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigErrors({{ConfigIssue::Kind::parse, "config", "cannot open '" + path + "'"}});
    std::stringstream ss;
    ss << in.rdbuf();
    return validate_config_text(ss.str(), overrides);
}

} // namespace jsdm
