#pragma once

// File formats. Datasets and chains are CSV with a fixed header; chains and simulated
// datasets carry a JSON sidecar `<file>.meta.json`. Report tables are CSV. A path of "-"
// means standard output for every writer of reports.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "model.hpp"
#include "posterior.hpp"
#include "sampler.hpp"
#include "sensitivity.hpp"
#include "simgen.hpp"

namespace seqlsi {

// Header `id,w1,y1_obs,w2,y2_obs` plus `,g_true,y2_00,y2_10,y2_01,y2_11` with truth.
void write_dataset_csv(std::ostream& out, const Dataset& data, bool with_truth);
void write_dataset_csv(const std::string& path, const Dataset& data, bool with_truth);
// ParseError with the line number on malformed rows; reads the seed from the sidecar
// when one exists.
Dataset read_dataset_csv(std::istream& in, const std::string& source);
Dataset read_dataset_csv(const std::string& path);

// Seed, n, p_w1, spec, theta_true and the true ATEs of a simulated dataset.
void write_scenario_meta(const std::string& path, const ScenarioConfig& cfg);

std::string meta_path(const std::string& path);  // path + ".meta.json"

// One row per kept draw, one column per ParameterVector::names() entry, shortest
// round-trip decimal form. The sidecar holds spec, configs, seeds, runtime and the final
// augmented strata.
void write_chain(const std::string& path, const Chain& chain);
Chain read_chain(const std::string& path);

// Estimand [, true], then mean, sd, q2.5, q97.5 per chain. Stratum
// probability rows show '-' for SI-2 chains.
void write_summary(const std::string& path, const std::vector<const Chain*>& chains,
                   const std::optional<std::array<double, 6>>& truth);

// Two columns `x,density`; a point mass is written as the single row `<value>,inf`.
void write_density(const std::string& path, const DensityGrid& grid);

void write_diagnostics(const std::string& path, const std::vector<DiagnosticRow>& rows);

// Gap report: pairing, w1, strata, gap mean/sd/lower/upper, level, excludes_zero.
void write_sensitivity(const std::string& path, const std::vector<SensitivityRow>& rows);
// Assignment probability per (w1, stratum) with quartiles.
void write_assignment_table(const std::string& path, const std::vector<SensitivityRow>& rows);

void write_ipw(const std::string& path, const IpwResult& result, const std::optional<std::array<double, 6>>& truth);

}  // namespace seqlsi
