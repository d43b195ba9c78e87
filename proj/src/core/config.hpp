#pragma once

// Plain-text configuration: one `key = value` per line, `#` starts a comment, vector
// values are whitespace-separated. Every file declares `schema = <name>/<version>`.
// Keys a schema does not know are rejected with their line number.
//
//   seqlsi.scenario/1  theta_true, n, p_w1, seed, spec (data generation)
//   seqlsi.mcmc/1      burn-in, kept draws, thinning, seed, init, priors (fitting)

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sampler.hpp"
#include "simgen.hpp"

namespace seqlsi {

inline constexpr std::string_view kScenarioSchema = "seqlsi.scenario/1";
inline constexpr std::string_view kMcmcSchema = "seqlsi.mcmc/1";

class KeyValueFile {
public:
    // ParseError on malformed lines or duplicate keys.
    static KeyValueFile parse(std::string_view text, std::string source);
    // IoError if unreadable.
    static KeyValueFile load(const std::string& path);

    const std::string& source() const noexcept { return source_; }
    void require_schema(std::string_view expected);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    // The take_* accessors mark a key as consumed; ParseError (with line) on bad values.
    std::optional<std::string> take(const std::string& key);
    std::optional<double> take_double(const std::string& key);
    std::optional<std::uint64_t> take_uint(const std::string& key);
    std::optional<std::vector<double>> take_doubles(const std::string& key, std::size_t count);
    // ParseError naming the first key that was never taken.
    void reject_unused() const;

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
        bool used = false;
    };
    const Entry* find(const std::string& key);
    [[noreturn]] void fail(const Entry& e, const std::string& key, const std::string& what) const;

    std::string source_;
    std::map<std::string, Entry> entries_;
};

ScenarioConfig parse_scenario(std::string_view text, std::string source = "<scenario>");
ScenarioConfig load_scenario(const std::string& path);
// Round-trips through parse_scenario; doubles use the shortest exact form.
std::string format_scenario(const ScenarioConfig& cfg);

struct FitConfig {
    PriorConfig priors;
    McmcConfig mcmc;
};
FitConfig parse_fit_config(std::string_view text, std::string source = "<mcmc>");
FitConfig load_fit_config(const std::string& path);
std::string format_fit_config(const FitConfig& cfg);

}  // namespace seqlsi
