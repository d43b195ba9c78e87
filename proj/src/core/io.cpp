#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "error.hpp"
#include "json.hpp"

namespace seqlsi {

using nlohmann::json;

namespace {

constexpr std::string_view kDatasetHeader = "id,w1,y1_obs,w2,y2_obs";
constexpr std::string_view kTruthHeader = ",g_true,y2_00,y2_10,y2_01,y2_11";
// Sequence indices of the truth columns y2_00, y2_10, y2_01, y2_11.
constexpr std::array<int, 4> kTruthColumnSeq{0, 2, 1, 3};

std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void finish(std::ostream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path == "-") {
        body(std::cout);
        finish(std::cout, "<stdout>");
        return;
    }
    auto out = open_out(path);
    body(out);
    finish(out, path);
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
bool parse_num(std::string_view s, T& v) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::uint8_t parse_bit(std::string_view s, const std::string& source, std::size_t line, const char* field) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw ParseError(source, line, std::string("field ") + field + " must be 0 or 1, got '" + std::string(s) + "'");
}

double parse_real(std::string_view s, const std::string& source, std::size_t line, const std::string& field) {
    double v = 0.0;
    if (!parse_num(s, v) || !std::isfinite(v))
        throw ParseError(source, line, "field " + field + " must be a finite number, got '" + std::string(s) + "'");
    return v;
}

Stratum parse_stratum(std::string_view s, const std::string& source, std::size_t line) {
    for (Stratum g : kAllStrata)
        if (s == to_string(g)) return g;
    throw ParseError(source, line, "field g_true must be one of 00, 01, 10, 11, got '" + std::string(s) + "'");
}

json theta_json(const ParameterVector& t) {
    json j = json::object();
    const auto flat = t.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) j[ParameterVector::names()[i]] = flat[i];
    return j;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path, 0, std::string("invalid JSON: ") + e.what());
    }
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

std::string meta_path(const std::string& path) { return path + ".meta.json"; }

// ---------------------------------------------------------------------------------------

void write_dataset_csv(std::ostream& out, const Dataset& data, bool with_truth) {
    if (with_truth && !data.has_truth()) throw ContractError("dataset has no latent truth to write");
    out << kDatasetHeader;
    if (with_truth) out << kTruthHeader;
    out << '\n';
    for (const Unit& u : data.units) {
        out << u.id << ',' << int(u.w1) << ',' << int(u.y1_obs) << ',' << int(u.w2) << ',' << num(u.y2_obs);
        if (with_truth) {
            out << ',' << to_string(u.latent->stratum);
            for (int s : kTruthColumnSeq) out << ',' << num(u.latent->y2_potential[s]);
        }
        out << '\n';
    }
}

void write_dataset_csv(const std::string& path, const Dataset& data, bool with_truth) {
    with_output(path, [&](std::ostream& out) { write_dataset_csv(out, data, with_truth); });
}

Dataset read_dataset_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source, 1, "empty file (missing header)");
    line = strip_cr(line);
    bool truth = false;
    if (line == std::string(kDatasetHeader) + std::string(kTruthHeader))
        truth = true;
    else if (line != kDatasetHeader)
        throw ParseError(source, 1, "unexpected header '" + line + "' (expected '" + std::string(kDatasetHeader) + "[" +
                                        std::string(kTruthHeader) + "]')");
    const std::size_t n_fields = truth ? 10 : 5;
    Dataset d;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != n_fields)
            throw ParseError(source, line_no,
                             "expected " + std::to_string(n_fields) + " fields, got " + std::to_string(f.size()));
        Unit u;
        if (!parse_num(f[0], u.id)) throw ParseError(source, line_no, "field id must be an integer");
        u.w1 = parse_bit(f[1], source, line_no, "w1");
        u.y1_obs = parse_bit(f[2], source, line_no, "y1_obs");
        u.w2 = parse_bit(f[3], source, line_no, "w2");
        u.y2_obs = parse_real(f[4], source, line_no, "y2_obs");
        if (truth) {
            LatentTruth t;
            t.stratum = parse_stratum(f[5], source, line_no);
            static constexpr std::array<const char*, 4> names{"y2_00", "y2_10", "y2_01", "y2_11"};
            for (int c = 0; c < 4; ++c)
                t.y2_potential[kTruthColumnSeq[c]] = parse_real(f[6 + c], source, line_no, names[c]);
            if (y1_under(t.stratum, u.w1) != u.y1_obs)
                throw ParseError(source, line_no, "g_true is incompatible with (w1, y1_obs)");
            u.latent = t;
        }
        d.units.push_back(std::move(u));
    }
    if (in.bad()) throw IoError("read error on '" + source + "'");
    return d;
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    Dataset d = read_dataset_csv(in, path);
    if (std::ifstream(meta_path(path))) {
        const json meta = read_json(meta_path(path));
        if (meta.contains("seed") && meta["seed"].is_number_unsigned()) d.seed = meta["seed"].get<std::uint64_t>();
    }
    return d;
}

void write_scenario_meta(const std::string& path, const ScenarioConfig& cfg) {
    json j;
    j["format"] = "seqlsi.dataset/1";
    j["seed"] = cfg.seed;
    j["n"] = cfg.n;
    j["p_w1"] = cfg.p_w1;
    j["spec"] = std::string(to_string(cfg.spec));
    j["theta_true"] = theta_json(cfg.theta_true);
    json ates = json::object();
    for (const auto& a : true_ates(cfg.theta_true)) ates[a.name] = a.value;
    j["true_ates"] = ates;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

// ---------------------------------------------------------------------------------------

void write_chain(const std::string& path, const Chain& chain) {
    {
        auto out = open_out(path);
        const auto& names = ParameterVector::names();
        for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
        out << '\n';
        for (const ParameterVector& t : chain.draws) {
            const auto flat = t.flatten();
            for (std::size_t i = 0; i < flat.size(); ++i) out << (i ? "," : "") << num(flat[i]);
            out << '\n';
        }
        finish(out, path);
    }
    json j;
    j["format"] = "seqlsi.chain/1";
    j["spec"] = std::string(to_string(chain.spec));
    j["draws"] = chain.draws.size();
    j["priors"] = {{"coef_mean", chain.meta.priors.coef_mean},
                   {"coef_var", chain.meta.priors.coef_var},
                   {"sigma2_df", chain.meta.priors.sigma2_df},
                   {"sigma2_scale", chain.meta.priors.sigma2_scale}};
    j["mcmc"] = {{"burn_in", chain.meta.mcmc.burn_in},
                 {"kept", chain.meta.mcmc.kept},
                 {"thin", chain.meta.mcmc.thin},
                 {"seed", chain.meta.mcmc.seed},
                 {"init", std::string(to_string(chain.meta.mcmc.init))}};
    j["n_units"] = chain.meta.n_units;
    j["data_seed"] = chain.meta.data_seed ? json(*chain.meta.data_seed) : json(nullptr);
    j["wall_seconds"] = chain.meta.wall_seconds;
    std::string strata;
    strata.reserve(chain.aug_strata_final.size());
    for (Stratum g : chain.aug_strata_final) strata += static_cast<char>('0' + index(g));
    j["aug_strata_final"] = strata;  // one digit per unit: 0=00, 1=01, 2=10, 3=11
    auto out = open_out(meta_path(path));
    out << j.dump(2) << '\n';
    finish(out, meta_path(path));
}

Chain read_chain(const std::string& path) {
    const std::string mpath = meta_path(path);
    if (!std::ifstream(mpath)) throw IoError("chain metadata '" + mpath + "' not found");
    const json j = read_json(mpath);
    Chain chain;
    try {
        if (j.at("format") != "seqlsi.chain/1") throw ParseError(mpath, 0, "unsupported chain format");
        chain.spec = spec_from_string(j.at("spec").get<std::string>());
        const auto& p = j.at("priors");
        chain.meta.priors = {p.at("coef_mean").get<double>(), p.at("coef_var").get<double>(),
                             p.at("sigma2_df").get<double>(), p.at("sigma2_scale").get<double>()};
        const auto& m = j.at("mcmc");
        chain.meta.mcmc.burn_in = m.at("burn_in").get<std::size_t>();
        chain.meta.mcmc.kept = m.at("kept").get<std::size_t>();
        chain.meta.mcmc.thin = m.at("thin").get<std::size_t>();
        chain.meta.mcmc.seed = m.at("seed").get<std::uint64_t>();
        chain.meta.mcmc.init = init_from_string(m.at("init").get<std::string>());
        chain.meta.n_units = j.at("n_units").get<std::size_t>();
        if (!j.at("data_seed").is_null()) chain.meta.data_seed = j.at("data_seed").get<std::uint64_t>();
        chain.meta.wall_seconds = j.at("wall_seconds").get<double>();
        for (char c : j.at("aug_strata_final").get<std::string>()) {
            if (c < '0' || c > '3') throw ParseError(mpath, 0, "aug_strata_final holds an invalid stratum code");
            chain.aug_strata_final.push_back(static_cast<Stratum>(c - '0'));
        }
    } catch (const json::exception& e) {
        throw ParseError(mpath, 0, std::string("malformed chain metadata: ") + e.what());
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, 1, "empty chain file");
    line = strip_cr(line);
    const auto header = split_csv(line);
    const auto& names = ParameterVector::names();
    if (header.size() != names.size()) throw ParseError(path, 1, "chain header must list the 31 parameters");
    for (std::size_t i = 0; i < names.size(); ++i)
        if (header[i] != names[i])
            throw ParseError(path, 1, "column " + std::to_string(i + 1) + " should be '" + names[i] + "'");
    std::size_t line_no = 1;
    std::array<double, ParameterVector::kSize> vals{};
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != names.size())
            throw ParseError(path, line_no, "expected 31 fields, got " + std::to_string(f.size()));
        for (std::size_t i = 0; i < f.size(); ++i) vals[i] = parse_real(f[i], path, line_no, names[i]);
        ParameterVector t = ParameterVector::unflatten(vals);
        try {
            validate(t, chain.spec);
        } catch (const std::exception& e) {
            throw ParseError(path, line_no, e.what());
        }
        chain.draws.push_back(t);
    }
    if (chain.draws.size() != j.at("draws").get<std::size_t>())
        throw ParseError(path, 0, "draw count does not match metadata");
    return chain;
}

// ---------------------------------------------------------------------------------------

void write_summary(const std::string& path, const std::vector<const Chain*>& chains,
                   const std::optional<std::array<double, 6>>& truth) {
    if (chains.empty()) throw ContractError("summary needs at least one chain");
    std::vector<std::string> prefixes;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        std::string p(to_string(chains[c]->spec));
        const auto dup = std::count_if(chains.begin(), chains.begin() + static_cast<std::ptrdiff_t>(c),
                                       [&](const Chain* o) { return o->spec == chains[c]->spec; });
        if (dup > 0) p += "_" + std::to_string(dup + 1);
        prefixes.push_back(p);
    }
    std::vector<Functional> rows;
    for (std::size_t k = 0; k < ate_contrasts().size(); ++k) rows.push_back(Functional::ate(k));
    for (Stratum g : kAllStrata) rows.push_back(Functional::stratum_prob(g));

    std::ostringstream o;
    o << "estimand";
    if (truth) o << ",true";
    for (const auto& p : prefixes) o << ',' << p << "_mean," << p << "_sd," << p << "_q2.5," << p << "_q97.5";
    o << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        o << rows[r].name();
        if (truth) o << ',' << (r < 6 ? fixed((*truth)[r]) : "-");
        for (const Chain* c : chains) {
            if (!available(rows[r], c->spec)) {
                o << ",-,-,-,-";
                continue;
            }
            const SummaryRow s = summarize(rows[r].name(), functional_draws(*c, rows[r]));
            o << ',' << fixed(s.mean) << ',' << fixed(s.sd) << ',' << fixed(s.q025) << ',' << fixed(s.q975);
        }
        o << '\n';
    }
    with_output(path, [&](std::ostream& out) { out << o.str(); });
}

void write_density(const std::string& path, const DensityGrid& grid) {
    with_output(path, [&](std::ostream& out) {
        out << "x,density\n";
        if (grid.point_mass) {
            out << num(grid.location) << ",inf\n";
            return;
        }
        for (std::size_t i = 0; i < grid.x.size(); ++i) out << num(grid.x[i]) << ',' << num(grid.density[i]) << '\n';
    });
}

void write_diagnostics(const std::string& path, const std::vector<DiagnosticRow>& rows) {
    with_output(path, [&](std::ostream& out) {
        out << "parameter,mean,sd,ess,rhat,split_rhat,first_half_mean,second_half_mean\n";
        for (const auto& r : rows) {
            out << r.name << ',' << fixed(r.mean) << ',' << fixed(r.sd) << ',' << fixed(r.ess, 1) << ','
                << (r.rhat ? fixed(*r.rhat) : "-") << ',' << (r.split_rhat ? fixed(*r.split_rhat) : "-") << ','
                << fixed(r.first_half_mean) << ',' << fixed(r.second_half_mean) << '\n';
        }
    });
}

void write_sensitivity(const std::string& path, const std::vector<SensitivityRow>& rows) {
    with_output(path, [&](std::ostream& out) {
        out << "pairing,w1,strata,gap_mean,gap_sd,gap_lower,gap_upper,level,excludes_zero\n";
        for (const auto& r : rows) {
            out << r.pairing.id << ',' << r.pairing.w1 << ',' << to_string(r.pairing.first) << "-"
                << to_string(r.pairing.second) << ',' << fixed(r.gap.mean) << ',' << fixed(r.gap.sd) << ','
                << fixed(r.lower) << ',' << fixed(r.upper) << ',' << num(r.level) << ','
                << (r.excludes_zero ? "true" : "false") << '\n';
        }
    });
}

void write_assignment_table(const std::string& path, const std::vector<SensitivityRow>& rows) {
    with_output(path, [&](std::ostream& out) {
        out << "w1,stratum,mean,sd,q2.5,q25,median,q75,q97.5\n";
        // Each (w1, stratum) appears in exactly one pairing.
        for (int w1 = 0; w1 < 2; ++w1)
            for (Stratum g : kAllStrata)
                for (const auto& r : rows) {
                    if (r.pairing.w1 != w1) continue;
                    const SummaryRow* s = r.pairing.first == g ? &r.first : r.pairing.second == g ? &r.second : nullptr;
                    if (!s) continue;
                    out << w1 << ',' << to_string(g) << ',' << fixed(s->mean) << ',' << fixed(s->sd) << ','
                        << fixed(s->q025) << ',' << fixed(*s->q25) << ',' << fixed(*s->median) << ','
                        << fixed(*s->q75) << ',' << fixed(s->q975) << '\n';
                }
    });
}

void write_ipw(const std::string& path, const IpwResult& result, const std::optional<std::array<double, 6>>& truth) {
    with_output(path, [&](std::ostream& out) {
        out << "estimand,estimate,se,reps_used";
        if (truth) out << ",true";
        out << ",note\n";
        for (std::size_t k = 0; k < result.ates.size(); ++k) {
            const IpwEstimate& e = result.ates[k];
            out << e.name << ',' << (e.estimate ? fixed(*e.estimate) : "-") << ',' << (e.se ? fixed(*e.se) : "-") << ','
                << e.reps_used;
            if (truth) out << ',' << fixed((*truth)[k]);
            out << ',' << e.note << '\n';
        }
    });
}

}  // namespace seqlsi
