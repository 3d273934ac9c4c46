#include "identpde/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace identpde {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; });
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("unterminated section header", line);
            section = trim(std::string_view(s).substr(1, s.size() - 2));
            if (!valid_name(section)) throw ConfigError("bad section name '" + section + "'", line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        if (section.empty()) throw ConfigError("key outside of any [section]", line);
        const std::string key = trim(std::string_view(s).substr(0, eq));
        if (!valid_name(key)) throw ConfigError("bad key '" + key + "'", line);
        std::string value = trim(std::string_view(s).substr(eq + 1));
        const auto hash = value.find(" #");
        if (hash != std::string::npos) value = trim(std::string_view(value).substr(0, hash));
        const std::string full = section + "." + key;
        if (cfg.entries_.count(full)) throw ConfigError("duplicate key '" + full + "'", line);
        cfg.entries_[full] = {value, line};
    }
    return cfg;
}

const Config::Entry* Config::find(const std::string& key) const {
    used_.insert(key);
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

int Config::line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
}

std::string Config::get_string(const std::string& key, const std::optional<std::string>& fallback) const {
    const Entry* e = find(key);
    if (e) return e->value;
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
}

double Config::get_double(const std::string& key, const std::optional<double>& fallback) const {
    const Entry* e = find(key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError("missing required key '" + key + "'");
    }
    double v = 0;
    const char* end = e->value.data() + e->value.size();
    auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        // Allow simple fractions such as 1/256.
        const auto slash = e->value.find('/');
        if (slash != std::string::npos) {
            double a = 0, b = 0;
            const std::string lhs = trim(std::string_view(e->value).substr(0, slash));
            const std::string rhs = trim(std::string_view(e->value).substr(slash + 1));
            auto ra = std::from_chars(lhs.data(), lhs.data() + lhs.size(), a);
            auto rb = std::from_chars(rhs.data(), rhs.data() + rhs.size(), b);
            if (ra.ec == std::errc() && ra.ptr == lhs.data() + lhs.size() && rb.ec == std::errc() &&
                rb.ptr == rhs.data() + rhs.size() && b != 0)
                return a / b;
        }
        throw ConfigError("'" + key + "' expects a number, got '" + e->value + "'", e->line);
    }
    return v;
}

long long Config::get_int(const std::string& key, const std::optional<long long>& fallback) const {
    const Entry* e = find(key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError("missing required key '" + key + "'");
    }
    long long v = 0;
    const char* end = e->value.data() + e->value.size();
    auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects an integer, got '" + e->value + "'", e->line);
    return v;
}

bool Config::get_bool(const std::string& key, const std::optional<bool>& fallback) const {
    const Entry* e = find(key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError("missing required key '" + key + "'");
    }
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + e->value + "'", e->line);
}

std::vector<std::string> Config::get_list(const std::string& key, const std::optional<std::vector<std::string>>& fallback) const {
    const Entry* e = find(key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError("missing required key '" + key + "'");
    }
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(e->value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("'" + key + "' has an empty list item", e->line);
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError("'" + key + "' is an empty list", e->line);
    return out;
}

std::vector<double> Config::get_double_list(const std::string& key, const std::optional<std::vector<double>>& fallback) const {
    if (!has(key)) {
        used_.insert(key);
        if (fallback) return *fallback;
        throw ConfigError("missing required key '" + key + "'");
    }
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
        double v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size())
            throw ConfigError("'" + key + "' expects numbers, got '" + item + "'", line_of(key));
        out.push_back(v);
    }
    return out;
}

void Config::reject_unused() const {
    // Report in file order.
    const Entry* first = nullptr;
    std::string first_key;
    for (const auto& [key, e] : entries_)
        if (!used_.count(key) && (!first || e.line < first->line)) {
            first = &e;
            first_key = key;
        }
    if (first) throw ConfigError("unknown key '" + first_key + "' for this experiment", first->line);
}

std::string to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Identify: return "identify";
    case ExperimentKind::Bee: return "bee";
    case ExperimentKind::NoiseSweep: return "noise_sweep";
    case ExperimentKind::DownsampleSweep: return "downsample_sweep";
    case ExperimentKind::GridLadder: return "grid_ladder";
    }
    return "identify";
}

ExperimentSpec parse_experiment(const std::string& text, const std::filesystem::path& base_dir) {
    ExperimentSpec spec;
    spec.config = Config::parse(text);
    spec.hash = fnv1a_hex(text);
    spec.base_dir = base_dir;
    const Config& c = spec.config;
    const std::string kind = c.get_string("experiment.kind");
    bool found = false;
    for (auto k : {ExperimentKind::Simulate, ExperimentKind::Identify, ExperimentKind::Bee, ExperimentKind::NoiseSweep,
                   ExperimentKind::DownsampleSweep, ExperimentKind::GridLadder})
        if (to_string(k) == kind) {
            spec.kind = k;
            found = true;
        }
    if (!found) throw ConfigError("unknown experiment kind '" + kind + "'", c.line_of("experiment.kind"));
    spec.name = c.get_string("experiment.name", "");
    const long long seed = c.get_int("experiment.seed", 0);
    if (seed < 0) throw ConfigError("seed must be >= 0", c.line_of("experiment.seed"));
    spec.seed = static_cast<std::uint64_t>(seed);
    spec.trials = c.get_int("experiment.trials", 1);
    if (spec.trials < 1) throw ConfigError("trials must be >= 1", c.line_of("experiment.trials"));
    return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read spec file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment(ss.str(), path.parent_path());
}

}  // namespace identpde
