#pragma once

#include "identpde/io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace identpde {

/// Malformed experiment spec. line() is 0 when the problem has no single line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Sectioned key = value text:
///
///   # comment
///   [section]
///   key = value
///
/// Keys are addressed as "section.key". Every key must be read by the
/// experiment, so misspelled keys are reported.
class Config {
public:
    static Config parse(const std::string& text);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    int line_of(const std::string& key) const;

    std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt) const;
    double get_double(const std::string& key, const std::optional<double>& fallback = std::nullopt) const;
    long long get_int(const std::string& key, const std::optional<long long>& fallback = std::nullopt) const;
    bool get_bool(const std::string& key, const std::optional<bool>& fallback = std::nullopt) const;
    std::vector<std::string> get_list(const std::string& key, const std::optional<std::vector<std::string>>& fallback = std::nullopt) const;
    std::vector<double> get_double_list(const std::string& key, const std::optional<std::vector<double>>& fallback = std::nullopt) const;

    /// Throws for the first key that was never read.
    void reject_unused() const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    const Entry* find(const std::string& key) const;

    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
};

enum class ExperimentKind { Simulate, Identify, Bee, NoiseSweep, DownsampleSweep, GridLadder };

std::string to_string(ExperimentKind k);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Identify;
    std::string name;
    std::uint64_t seed = 0;
    long long trials = 1;
    Config config;
    std::string hash;                // of the spec text
    std::filesystem::path base_dir;  // relative input paths resolve here
};

ExperimentSpec parse_experiment(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment(const std::filesystem::path& path);

struct RunOptions {
    std::filesystem::path out_dir = ".";
    unsigned jobs = 1;
};

/// Runs the experiment and returns the files written, in order.
std::vector<std::filesystem::path> run_experiment(const ExperimentSpec& spec, const RunOptions& opts);

/// Ident settings from the [ident] section.
IdentConfig ident_config_from(const Config& cfg);

}  // namespace identpde
