#include <algorithm>
#include <fstream>
#include <sstream>

#include "nsalab/cli.hpp"

namespace nsalab::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Lists accept spaces, commas and semicolons as separators.
std::vector<std::string> tokens(const std::string& v) {
    std::string t = v;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::replace(t.begin(), t.end(), ';', ' ');
    std::istringstream in(t);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

double to_real(const std::string& w, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(w, &used);
        if (used != w.size()) throw std::invalid_argument(w);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a number, got '" + w + "'");
    }
}

std::int64_t to_int(const std::string& w, const std::string& where) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(w, &used);
        if (used != w.size()) throw std::invalid_argument(w);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected an integer, got '" + w + "'");
    }
}

}  // namespace

const std::map<std::string, std::vector<std::string>>& Config::schema() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"run", {"subcommand", "seed"}},
        {"family", {"kind", "matrix", "epsilon", "modes", "sequence-mode", "explicit-list", "seed", "smoothness"}},
        {"cones", {"mu", "grid", "n-max"}},
        {"section", {"grid", "tol", "max-depth", "band-radius", "band-pad", "beta"}},
        {"regularity",
         {"holder-scales", "holder-pairs", "tau-base", "tau-offset", "tau-half-length", "tau-samples", "step",
          "max-arclen"}},
        {"counterexample",
         {"b", "theta", "eps", "base-ratio", "height-pad", "support-width", "support-height", "n-max", "step",
          "norm-grid"}},
        {"sturmian",
         {"lambda", "cf", "alpha", "cf-length", "window", "initial-grid", "refine-depth", "escape-radius",
          "max-iters"}},
        {"dimension", {"scales", "scale-base", "scale-exponents"}},
    };
    return keys;
}

Config Config::parse(std::istream& in) {
    Config c;
    std::string section = "run";
    std::string line;
    int lineno = 0;
    const auto& sch = schema();
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!sch.count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& allowed = sch.at(section);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
        if (c.values_[section].count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        c.values_[section][key] = value;
    }
    return c;
}

Config Config::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse(in);
}

bool Config::has(const std::string& section, const std::string& key) const { return raw(section, key).has_value(); }

std::optional<std::string> Config::raw(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    if (s == values_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    return raw(section, key).value_or(fallback);
}

double Config::get_real(const std::string& section, const std::string& key, double fallback) const {
    const auto r = raw(section, key);
    return r ? to_real(*r, "[" + section + "] " + key) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key, std::int64_t fallback) const {
    const auto r = raw(section, key);
    return r ? to_int(*r, "[" + section + "] " + key) : fallback;
}

std::vector<double> Config::get_reals(const std::string& section, const std::string& key,
                                      const std::vector<double>& fallback) const {
    const auto r = raw(section, key);
    if (!r) return fallback;
    std::vector<double> out;
    for (const auto& w : tokens(*r)) out.push_back(to_real(w, "[" + section + "] " + key));
    return out;
}

std::vector<int> Config::get_ints(const std::string& section, const std::string& key,
                                  const std::vector<int>& fallback) const {
    const auto r = raw(section, key);
    if (!r) return fallback;
    std::vector<int> out;
    for (const auto& w : tokens(*r)) out.push_back(int(to_int(w, "[" + section + "] " + key)));
    return out;
}

}  // namespace nsalab::cli
