#ifndef KBSIM_SIMULATE_HPP
#define KBSIM_SIMULATE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kbsim/model.hpp"
#include "kbsim/policies.hpp"

namespace kbsim {

enum class PolicyKind { AlgLp, AlgAdv, Ulwe };
enum class CapacityMode { Hard, Soft };

const char* policy_name(PolicyKind kind);
std::optional<PolicyKind> policy_from_name(const std::string& name);

struct SimulationConfig {
    ProblemInstance instance;
    std::vector<std::vector<double>> schedule_rows;
    PolicyKind policy = PolicyKind::Ulwe;
    int replications = 1;
    std::uint64_t base_seed = 0;
    std::vector<int> checkpoints;
    int resolve_cadence = 1;
    CapacityMode capacity_mode = CapacityMode::Hard;
    double threshold_multiplier = 1.0;
    double switch_threshold_multiplier = 1.0;
    bool theta_cardinality_max = false;

    ArrivalSchedule schedule() const { return ArrivalSchedule::from_rows(schedule_rows, instance); }
    PolicyConfig policy_config() const;
    void validate() const;
};

struct PeriodRecord {
    int period = 0;
    int type = 0;
    int resource = 0; // num_resources() means reject
    int theta_index = -1;
    bool purchase = false;
    double reward = 0.0;
    std::vector<double> remaining; // per real resource, after this period
    bool switched = false;
};

struct EpisodeTrace {
    std::vector<PeriodRecord> periods;
    double total_revenue = 0.0;
    std::vector<int> purchases;                 // paid purchases per real resource
    std::vector<int> violations;                // soft-mode purchases beyond capacity
    std::vector<std::vector<int>> allocations;  // [type][resource incl reject], end of run
    std::optional<int> switch_period;
    bool true_theta_removed = false;
    int misspecification_warnings = 0;
};

struct RegretPoint {
    int t = 0;
    double benchmark = 0.0;
    double revenue = 0.0; // cumulative algorithm revenue through t
    double regret = 0.0;
};

struct RegretTrace {
    std::vector<RegretPoint> points;
};

// Inverse-CDF draw of the period-t customer type.
int draw_arrival(const ArrivalSchedule& schedule, int t, RngStream& rng);

// One full episode, deterministic in (config, replication).  `benchmarks`
// holds the deterministic upper bound at each configured checkpoint.
std::pair<EpisodeTrace, RegretTrace> run_episode(const SimulationConfig& config, int replication,
                                                 const std::vector<double>& benchmarks);
std::pair<EpisodeTrace, RegretTrace> run_episode(const SimulationConfig& config, int replication);

struct CheckpointStats {
    int t = 0;
    double benchmark = 0.0;
    double mean_regret = 0.0;
    double stderr_regret = 0.0;
    double mean_revenue = 0.0;
    // Mean cumulative assignment counts, [type][resource incl reject].
    std::vector<std::vector<double>> mean_allocations;
};

struct ReplicationSummary {
    PolicyKind policy = PolicyKind::Ulwe;
    int replications = 0;
    std::vector<CheckpointStats> checkpoints;
    int switch_count = 0;
    std::vector<int> switch_periods; // one entry per switched episode, ascending
    int theta_star_removed_count = 0;
    int misspecification_warnings = 0;
};

// Runs all replications and reduces them in index order. `replicate` spreads
// episodes over OpenMP threads (capped by KBSIM_THREADS, 0 = auto);
// `replicate_serial` is the reference loop the parallel path must match.
ReplicationSummary replicate(const SimulationConfig& config);
ReplicationSummary replicate_serial(const SimulationConfig& config);

// Thread cap from KBSIM_THREADS (0 or unset = library default).
int configured_thread_cap();

struct PresetOptions {
    int horizon = 500;
    // false: each capacity is T/2 (total matches the horizon);
    // true:  each capacity is T.
    bool capacity_full_each = false;
    std::uint64_t seed = 0; // drives the synthetic history behind the candidate grids
};

// Named experiment presets: "iid", "adv1", "adv2".
SimulationConfig make_preset(const std::string& name, const PresetOptions& options = {});
bool is_preset_name(const std::string& name);

} // namespace kbsim

#endif
