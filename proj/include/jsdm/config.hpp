// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/core.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace jsdm {

// Flat "key = value" configuration. Lists are comma separated, '#' starts a
// comment. Every known key is present after validation; keys that were not
// given are listed in `defaulted`.
struct ConfigIssue {
    enum class Kind { missing, unknown_key, range, parse };
    Kind kind = Kind::parse;
    std::string key;
    std::string message;
};

std::string_view issue_kind_name(ConfigIssue::Kind kind);

class ConfigErrors : public ConfigError {
public:
    explicit ConfigErrors(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

class ExperimentConfig {
public:
    const std::string& experiment() const { return values_.at("experiment"); }
    std::uint64_t seed() const;
    int trials() const { return get_int("trials"); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    // Sorted "key = value" lines; this text is what gets hashed.
    std::string normalized() const;
    std::uint64_t hash() const;
    std::string hash_hex() const;

    const std::vector<std::string>& defaulted() const { return defaulted_; }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    friend ExperimentConfig validate_config_text(std::string_view, const std::map<std::string, std::string>&);
    std::map<std::string, std::string> values_;
    std::vector<std::string> defaulted_;
};

// Parses and validates; `overrides` (from the command line) win over the file.
// Throws ConfigErrors with one entry per problem.
ExperimentConfig validate_config_text(std::string_view text, const std::map<std::string, std::string>& overrides = {});
ExperimentConfig validate_config(const std::string& path, const std::map<std::string, std::string>& overrides = {});

std::vector<std::string> experiment_names();

std::uint64_t fnv1a64(std::string_view data);

} // namespace jsdm
