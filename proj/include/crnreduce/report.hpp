#pragma once

// Machine-readable output: versioned JSON reports, CSV tables and the
// output-directory manifest with input hashes. JSON objects are emitted
// with alphabetically sorted keys, so serialization is deterministic.

#include "crnreduce/numerics.hpp"
#include "crnreduce/reduction.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace crnred::report {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Canonical text plus the structured num/den term lists.
json ratfn_json(const symalg::RatFn& f);
json poly_json(const symalg::Poly& p);
json matrix_json(const symalg::RFMatrix& m);

json candidate_json(const reduction::TFPVCandidate& cand);
json blanket_json(const reduction::BlanketReport& rep);
json reduction_json(const crn::PartitionedSystem& psys,
                    const reduction::ReductionOutput& red);
json convergence_json(const numerics::ConvergenceReport& rep);

// header: t, then one column per state name; one row per knot
std::string trajectory_csv(const numerics::Trajectory& traj,
                           const std::vector<std::string>& state_names);
// header: epsilon, sup_error, ratio (ratio empty on the first row)
std::string convergence_csv(const numerics::ConvergenceReport& rep);

// FNV-1a 64-bit of the raw bytes, as 16 hex digits.
std::string content_hash(const std::string& bytes);

struct ManifestInput {
  std::string path;
  std::string hash;
};
json manifest_json(const std::string& command, const std::vector<ManifestInput>& inputs,
                   const std::vector<std::string>& outputs);

}  // namespace crnred::report
