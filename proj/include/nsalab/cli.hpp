#pragma once

// Batch front-end: config parsing and subcommand dispatch.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsalab::cli {

/// Malformed or unknown configuration; maps to exit status 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Flat sectioned key=value text:
///
///   # comment
///   [family]
///   kind = trig-perturbed
///   matrix = 2 1 1 1
///
/// Keys outside a section belong to section "run". Unknown sections and keys
/// are rejected at parse time.
class Config {
public:
    static Config parse(std::istream& in);
    static Config parse_string(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> raw(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback) const;
    std::vector<double> get_reals(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
    std::vector<int> get_ints(const std::string& section, const std::string& key, const std::vector<int>& fallback) const;

    /// Keys accepted per section.
    static const std::map<std::string, std::vector<std::string>>& schema();

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `nsalab` executable.
int run(int argc, char** argv);

}  // namespace nsalab::cli
