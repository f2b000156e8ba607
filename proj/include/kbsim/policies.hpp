#ifndef KBSIM_POLICIES_HPP
#define KBSIM_POLICIES_HPP

#include <optional>
#include <vector>

#include "kbsim/lp.hpp"
#include "kbsim/model.hpp"
#include "kbsim/rng.hpp"

namespace kbsim {

struct PolicyConfig {
    int resolve_cadence = 1;
    bool hard_capacity = true;
    // Scales the deviation allowance of the candidate-elimination tests.
    double update_threshold_multiplier = 1.0;
    // Scales the deviation allowance of the two switch tests. 1.0 keeps the
    // printed constants, which at short horizons never trigger; experiment
    // presets pin a calibrated value.
    double switch_threshold_multiplier = 1.0;
    // Candidate-count factor in the first switch threshold: sum over
    // resources of |Theta_i| by default, the max when set.
    bool theta_cardinality_max = false;
};

// One period's choice. `resource` is a real index or num_resources() for the
// reject arm; `probabilities` is the distribution actually sampled from
// (always num_resources()+1 long, reject last); `theta_index` is the
// optimistic maximizer for the chosen resource, -1 for reject.
struct Decision {
    int resource = 0;
    std::vector<double> probabilities;
    int theta_index = -1;
};

struct ConfidenceState {
    // Surviving candidate indices per resource, ascending. Only ever shrinks.
    std::vector<std::vector<int>> omega;
    // d_sets[i][k]: periods where resource i was offered with maximizer k.
    std::vector<std::vector<std::vector<int>>> d_sets;
    // residual_sums[i][k]: sum over d_sets[i][k] of (f_i(x, theta_k) - a).
    std::vector<std::vector<double>> residual_sums;
    // gap_sums[i][k][k2]: sum over d_sets[i][k] of (f_i(x,theta_k) - f_i(x,theta_k2)).
    std::vector<std::vector<std::vector<double>>> gap_sums;
    double beta = 0.0; // 1 / (n T)
    // Incremented instead of removing the last surviving candidate.
    int misspecification_warnings = 0;
};

// A distinct parameter vector appearing in at least one resource's candidate
// set; member_index maps it back into each Theta_i (-1 where absent).
struct SwitchCandidate {
    std::vector<double> theta;
    std::vector<int> member_index;
};

struct SwitchMonitor {
    bool switched = false;
    std::optional<int> switch_period;
    std::vector<SwitchCandidate> candidates;
    std::vector<double> cond1_sums; // per candidate
    std::vector<double> cond2_sums; // per real resource
    // Parameterized-LP solutions memoized per candidate; recomputed only when
    // some omega changed since the cached solve.
    std::vector<int> memo_generation;
    std::vector<std::vector<double>> memo_solution;
};

struct PolicyState {
    PolicyConfig config;
    ConfidenceState confidence;
    SwitchMonitor monitor;
    std::vector<double> consumption; // purchases per real resource
    int period = 0;                  // last period a step was taken for
    // Cached optimistic-LP plan and its bookkeeping.
    AllocationLp plan_layout;
    std::vector<double> plan;  // solution values, plan_layout.var() addressing
    int plan_solved_at = -1;   // period of the cached solve, -1 before the first
    int omega_generation = 0;  // bumped on every candidate removal
};

PolicyState init_policy_state(const ProblemInstance& instance, const PolicyConfig& config);

// Index of `context` within the instance's type list (matched by id).
int type_index(const ProblemInstance& instance, const Context& context);

// Inverse-CDF sample over a probability column; entries in index order.
int sample_from_column(const std::vector<double>& probabilities, double u);

// LP protocol step: re-solves the optimistic plan when stale, then samples
// the column of the arriving type. In hard-capacity mode the mass of depleted
// resources moves to the reject arm before sampling.
Decision alg_lp_step(PolicyState& state, const ProblemInstance& instance, const Context& context,
                     RngStream& rng);

// Greedy protocol step: picks the resource maximizing revenue discounted by
// the consumed-fraction penalty, times the optimistic purchase probability.
Decision alg_adv_step(PolicyState& state, const ProblemInstance& instance, const Context& context);

// Candidate-elimination update after the purchase outcome is observed.
// Reject decisions are a no-op (nothing was offered).
void update_confidence(PolicyState& state, const ProblemInstance& instance,
                       const Decision& decision, const Context& context, int purchase);

// Updates the switch accumulators for this period and reports whether either
// switch condition fired. Once it fires the monitor latches permanently.
bool check_switch(PolicyState& state, const ProblemInstance& instance, const Context& context,
                  const Decision& decision);

// Unified step: LP protocol plus switch checking until the switch fires, the
// greedy protocol afterwards.
Decision ulwe_step(PolicyState& state, const ProblemInstance& instance, const Context& context,
                   RngStream& rng);

} // namespace kbsim

#endif
