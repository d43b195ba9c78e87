#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <span>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace seqlsi {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return true;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_vec(std::span<const double> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(v[i]);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text, std::string source) {
    KeyValueFile f;
    f.source_ = std::move(source);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            if (eol == text.size()) break;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(f.source_, line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (!valid_key(key)) throw ParseError(f.source_, line_no, "invalid key '" + key + "'");
        if (value.empty()) throw ParseError(f.source_, line_no, "key '" + key + "' has no value");
        if (f.entries_.count(key))
            throw ParseError(f.source_, line_no,
                             "duplicate key '" + key + "' (first set on line " + std::to_string(f.entries_[key].line) + ")");
        f.entries_[key] = Entry{value, line_no, false};
        if (eol == text.size()) break;
    }
    return f;
}

KeyValueFile KeyValueFile::load(const std::string& path) { return parse(read_file(path), path); }

const KeyValueFile::Entry* KeyValueFile::find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
}

void KeyValueFile::fail(const Entry& e, const std::string& key, const std::string& what) const {
    throw ParseError(source_, e.line, "key '" + key + "': " + what);
}

void KeyValueFile::require_schema(std::string_view expected) {
    const Entry* e = find("schema");
    if (!e) throw ParseError(source_, 0, "missing 'schema' (expected " + std::string(expected) + ")");
    if (e->value != expected) fail(*e, "schema", "expected " + std::string(expected) + ", got " + e->value);
}

std::optional<std::string> KeyValueFile::take(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    return e->value;
}

std::optional<double> KeyValueFile::take_double(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    const auto v = to_double(e->value);
    if (!v) fail(*e, key, "expected a finite number, got '" + e->value + "'");
    return v;
}

std::optional<std::uint64_t> KeyValueFile::take_uint(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || ptr != e->value.data() + e->value.size())
        fail(*e, key, "expected a non-negative integer, got '" + e->value + "'");
    return v;
}

std::optional<std::vector<double>> KeyValueFile::take_doubles(const std::string& key, std::size_t count) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    const auto parts = split_ws(e->value);
    if (parts.size() != count)
        fail(*e, key, "expected " + std::to_string(count) + " numbers, got " + std::to_string(parts.size()));
    std::vector<double> out;
    for (auto p : parts) {
        const auto v = to_double(p);
        if (!v) fail(*e, key, "'" + std::string(p) + "' is not a finite number");
        out.push_back(*v);
    }
    return out;
}

void KeyValueFile::reject_unused() const {
    const Entry* first = nullptr;
    std::string first_key;
    for (const auto& [k, e] : entries_)
        if (!e.used && (!first || e.line < first->line)) {
            first = &e;
            first_key = k;
        }
    if (first) throw ParseError(source_, first->line, "unknown key '" + first_key + "'");
}

// ---------------------------------------------------------------------------------------

namespace {

std::string seq_suffix(int s) { return to_string(TreatmentSequence::from_index(s)); }

template <class T>
T required(std::optional<T> v, const KeyValueFile& f, const std::string& key) {
    if (!v) throw ParseError(f.source(), 0, "missing required key '" + key + "'");
    return *v;
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text, std::string source) {
    KeyValueFile f = KeyValueFile::parse(text, std::move(source));
    f.require_schema(kScenarioSchema);
    ScenarioConfig cfg;
    if (auto s = f.take("spec")) {
        try {
            cfg.spec = spec_from_string(*s);
        } catch (const ContractError& e) {
            throw ParseError(f.source(), 0, std::string("key 'spec': ") + e.what());
        }
    }
    cfg.n = required(f.take_uint("n"), f, "n");
    cfg.seed = required(f.take_uint("seed"), f, "seed");
    if (auto p = f.take_double("p_w1")) cfg.p_w1 = *p;

    ParameterVector& t = cfg.theta_true;
    const auto alpha = required(f.take_doubles("alpha", 3), f, "alpha");
    std::copy(alpha.begin(), alpha.end(), t.alpha.begin());
    for (int w1 = 0; w1 < 2; ++w1) {
        const std::string key = "gamma" + std::to_string(w1);
        const auto g = required(f.take_doubles(key, 4), f, key);
        std::copy(g.begin(), g.end(), t.gamma[w1].begin());
    }
    for (int s = 0; s < 4; ++s) {
        const std::string bkey = "beta" + seq_suffix(s);
        const auto b = required(f.take_doubles(bkey, 4), f, bkey);
        std::copy(b.begin(), b.end(), t.beta[s].begin());
        const std::string vkey = "sigma2_" + seq_suffix(s);
        t.sigma2[s] = required(f.take_double(vkey), f, vkey);
    }
    f.reject_unused();
    try {
        validate(cfg);
    } catch (const std::exception& e) {
        throw ParseError(f.source(), 0, e.what());
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) { return parse_scenario(read_file(path), path); }

std::string format_scenario(const ScenarioConfig& cfg) {
    const ParameterVector& t = cfg.theta_true;
    std::ostringstream o;
    o << "schema = " << kScenarioSchema << '\n';
    o << "spec = " << to_string(cfg.spec) << '\n';
    o << "n = " << cfg.n << '\n';
    o << "p_w1 = " << fmt(cfg.p_w1) << '\n';
    o << "seed = " << cfg.seed << '\n';
    o << "alpha = " << fmt_vec(t.alpha) << "  # alpha_11 alpha_00 alpha_10\n";
    for (int w1 = 0; w1 < 2; ++w1) o << "gamma" << w1 << " = " << fmt_vec(t.gamma[w1]) << '\n';
    for (int s = 0; s < 4; ++s) o << "beta" << seq_suffix(s) << " = " << fmt_vec(t.beta[s]) << '\n';
    for (int s = 0; s < 4; ++s) o << "sigma2_" << seq_suffix(s) << " = " << fmt(t.sigma2[s]) << '\n';
    return o.str();
}

FitConfig parse_fit_config(std::string_view text, std::string source) {
    KeyValueFile f = KeyValueFile::parse(text, std::move(source));
    f.require_schema(kMcmcSchema);
    FitConfig cfg;
    if (auto v = f.take_uint("burn_in")) cfg.mcmc.burn_in = *v;
    if (auto v = f.take_uint("kept")) cfg.mcmc.kept = *v;
    if (auto v = f.take_uint("thin")) cfg.mcmc.thin = *v;
    if (auto v = f.take_uint("seed")) cfg.mcmc.seed = *v;
    if (auto v = f.take("init")) {
        try {
            cfg.mcmc.init = init_from_string(*v);
        } catch (const ContractError& e) {
            throw ParseError(f.source(), 0, std::string("key 'init': ") + e.what());
        }
    }
    if (auto v = f.take_double("coef_mean")) cfg.priors.coef_mean = *v;
    if (auto v = f.take_double("coef_var")) cfg.priors.coef_var = *v;
    if (auto v = f.take_double("sigma2_df")) cfg.priors.sigma2_df = *v;
    if (auto v = f.take_double("sigma2_scale")) cfg.priors.sigma2_scale = *v;
    f.reject_unused();
    try {
        validate(cfg.priors);
        validate(cfg.mcmc);
    } catch (const ContractError& e) {
        throw ParseError(f.source(), 0, e.what());
    }
    return cfg;
}

FitConfig load_fit_config(const std::string& path) { return parse_fit_config(read_file(path), path); }

std::string format_fit_config(const FitConfig& cfg) {
    std::ostringstream o;
    o << "schema = " << kMcmcSchema << '\n';
    o << "burn_in = " << cfg.mcmc.burn_in << '\n';
    o << "kept = " << cfg.mcmc.kept << '\n';
    o << "thin = " << cfg.mcmc.thin << '\n';
    o << "seed = " << cfg.mcmc.seed << '\n';
    o << "init = " << to_string(cfg.mcmc.init) << '\n';
    o << "coef_mean = " << fmt(cfg.priors.coef_mean) << '\n';
    o << "coef_var = " << fmt(cfg.priors.coef_var) << '\n';
    o << "sigma2_df = " << fmt(cfg.priors.sigma2_df) << '\n';
    o << "sigma2_scale = " << fmt(cfg.priors.sigma2_scale) << '\n';
    return o.str();
}

}  // namespace seqlsi
