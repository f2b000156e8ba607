#ifndef KBSIM_IO_HPP
#define KBSIM_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "kbsim/simulate.hpp"

namespace kbsim {

// A run request: one fully expanded configuration plus the list of policies
// to compare on it.
struct ExperimentSpec {
    SimulationConfig base;
    std::vector<PolicyKind> policies;
};

// Parses an experiment document. Presets expand first, then explicit keys
// override. Unknown keys are rejected.
ExperimentSpec experiment_from_json(const nlohmann::json& doc);
ExperimentSpec load_experiment_file(const std::string& path);

// Full echo: the returned document re-parses to an identical run.
nlohmann::json experiment_to_json(const ExperimentSpec& spec);

// CSV renderings (6-decimal floats, LF endings).
std::string regret_csv(const std::vector<ReplicationSummary>& summaries);
std::string allocations_csv(const std::vector<ReplicationSummary>& summaries);

// Writes regret.csv, allocations.csv and meta.json into out_dir.
void write_outputs(const ExperimentSpec& spec, const std::vector<ReplicationSummary>& summaries,
                   const std::string& out_dir, double wall_seconds);

} // namespace kbsim

#endif
