#ifndef KBSIM_LP_HPP
#define KBSIM_LP_HPP

#include <vector>

#include "kbsim/model.hpp"

namespace kbsim {

enum class ConstraintSense { LessEqual, Equal };

// Small dense LP in the form max c'x  s.t.  A x {<=,=} b, x >= 0.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<std::vector<double>> rows;
    std::vector<ConstraintSense> senses;
    std::vector<double> rhs;

    int num_vars() const { return static_cast<int>(objective.size()); }
    int num_rows() const { return static_cast<int>(rows.size()); }
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    std::vector<double> values;
    double objective_value = 0.0;
    LpStatus status = LpStatus::Infeasible;
};

// Two-phase dense primal simplex with Bland's rule, so identical inputs take
// identical pivot paths and cycling cannot occur. Infeasible/unbounded
// problems are reported through the status, never by throwing.
LpSolution solve(const LinearProgram& lp);

// Assignment LP over variables s_ij (resource i, type j), with the reject arm
// appended as resource index num_resources()-? see reject_index(). Variables
// are laid out resource-major via var().
struct AllocationLp {
    LinearProgram lp;
    int num_resources = 0; // real resources, excluding the reject arm
    int num_types = 0;
    bool has_reject = false;

    int reject_index() const { return num_resources; }
    int columns() const { return num_resources + (has_reject ? 1 : 0); }
    int var(int resource, int type) const { return resource * num_types + type; }
};

// Core builder: probs[i][j] is the purchase probability coefficient used for
// resource i on type j. Capacity rows use the instance lp_rates().
AllocationLp build_allocation_lp(const ProblemInstance& instance,
                                 const std::vector<std::vector<double>>& probs);

// Eq-style optimistic LP: coefficients are the max purchase probability over
// each resource's surviving candidate indices.
AllocationLp build_optimistic_lp(const ProblemInstance& instance,
                                 const std::vector<std::vector<int>>& omega_per_resource);

// Parameterized LP: coefficients come from one chosen candidate per resource
// (indices into each theta_space).
AllocationLp build_param_lp(const ProblemInstance& instance,
                            const std::vector<int>& theta_index_per_resource);

// Deterministic benchmark: best achievable expected revenue for the arrival
// mass accumulated through period t, under the true parameters. Computed on
// aggregate per-type allocation variables.
double benchmark_jd(const ProblemInstance& instance, const ArrivalSchedule& schedule, int t);

} // namespace kbsim

#endif
