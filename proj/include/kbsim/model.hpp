#ifndef KBSIM_MODEL_HPP
#define KBSIM_MODEL_HPP

#include <cstdint>
#include <vector>

#include "kbsim/errors.hpp"

namespace kbsim {

// One customer type: an id and the feature vector shown to the policies.
struct Context {
    int id = 0;
    std::vector<double> features;
};

// A sellable resource. theta_space is the finite candidate set for the
// latent purchase-probability parameter; true_theta indexes the one the
// simulator samples outcomes from.
struct ResourceSpec {
    double revenue = 0.0;
    double capacity = 0.0;
    std::vector<std::vector<double>> theta_space;
    int true_theta = 0;
};

struct ProblemInstance {
    std::vector<ResourceSpec> resources;
    std::vector<Context> contexts;
    int horizon = 0;
    // Expected total arrivals per type over the horizon; sums to the horizon.
    std::vector<double> total_rates;
    bool reject_arm_enabled = true;
    // Aggregate-rate advice handed to the allocation LPs. Empty means the
    // true totals are used. Presets feed the stationary estimate here so the
    // planners work from historical advice rather than the realized schedule.
    std::vector<double> advice_rates;

    int num_resources() const { return static_cast<int>(resources.size()); }
    int num_types() const { return static_cast<int>(contexts.size()); }
    const std::vector<double>& lp_rates() const {
        return advice_rates.empty() ? total_rates : advice_rates;
    }

    // Throws config_error on any violated invariant.
    void validate() const;
};

// Piecewise-constant block of the arrival process: `fraction` of the horizon
// with a fixed type distribution.
struct ArrivalSegment {
    double fraction = 0.0;
    std::vector<double> type_probs;
};

// Per-period type distributions mu^t, t = 1..T. Construction checks row
// validity and that column sums reproduce the instance's total_rates.
class ArrivalSchedule {
public:
    static ArrivalSchedule from_rows(std::vector<std::vector<double>> rows,
                                     const ProblemInstance& instance);
    static ArrivalSchedule from_segments(const std::vector<ArrivalSegment>& segments,
                                         int horizon, const ProblemInstance& instance);

    // Expands segments to rows without checking against an instance; used by
    // preset builders that derive total_rates from the expanded rows.
    static std::vector<std::vector<double>> expand_segments(
        const std::vector<ArrivalSegment>& segments, int horizon, int num_types);

    int horizon() const { return static_cast<int>(rows_.size()); }
    // t is 1-based.
    const std::vector<double>& row(int t) const { return rows_.at(static_cast<size_t>(t - 1)); }
    // Lambda_j(t) = sum_{s<=t} mu_j^s; t = 0 gives all zeros.
    std::vector<double> cumulative_rates(int t) const;

private:
    explicit ArrivalSchedule(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}
    std::vector<std::vector<double>> rows_;
};

// Logistic purchase probability sigma(theta . x). Always in (0, 1).
double purchase_prob(const Context& context, const std::vector<double>& theta);

struct OptimisticProb {
    double prob = 0.0;
    int theta_index = -1;
};

// Max purchase probability over the surviving candidate indices `omega`
// (indices into theta_space). Ties go to the lowest index so runs are
// reproducible. Empty omega throws policy_error.
OptimisticProb optimistic_prob(const Context& context,
                               const std::vector<std::vector<double>>& theta_space,
                               const std::vector<int>& omega);

// Penalty (e^u - 1) / (e - 1) on [0, 1]; 0 at 0, 1 at 1, convex.
double psi(double u);

// Maximum-likelihood logistic fit on (context, outcome) observations.
std::vector<double> fit_logistic_mle(const std::vector<const Context*>& xs,
                                     const std::vector<int>& outcomes, int dim);

// Builds a candidate set for one resource: simulates `history_obs` historical
// observations under true_theta with the given type mix, fits the MLE, and
// lays a grid_points^d grid with `spacing` per coordinate around the fit.
// The MLE point itself is always a member.
std::vector<std::vector<double>> build_theta_grid(const std::vector<Context>& contexts,
                                                  const std::vector<double>& type_weights,
                                                  const std::vector<double>& true_theta,
                                                  int history_obs, int grid_points,
                                                  double spacing, std::uint64_t seed);

} // namespace kbsim

#endif
