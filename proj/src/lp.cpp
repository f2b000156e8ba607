#include "kbsim/lp.hpp"

#include <cmath>
#include <algorithm>
#include <limits>

namespace kbsim {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

// Tableau for the two-phase simplex. Column layout: structural variables,
// then one slack per <= row, then one artificial per row that needs it.
struct Tableau {
    int rows = 0;
    int cols = 0; // excludes the rhs column
    std::vector<std::vector<double>> a;
    std::vector<double> rhs;
    std::vector<int> basis; // basis[r] = column basic in row r

    double& at(int r, int c) { return a[static_cast<size_t>(r)][static_cast<size_t>(c)]; }
    double get(int r, int c) const { return a[static_cast<size_t>(r)][static_cast<size_t>(c)]; }

    void pivot(int pr, int pc) {
        double p = get(pr, pc);
        for (int c = 0; c < cols; ++c) at(pr, c) /= p;
        rhs[static_cast<size_t>(pr)] /= p;
        for (int r = 0; r < rows; ++r) {
            if (r == pr) continue;
            double f = get(r, pc);
            if (f == 0.0) continue;
            for (int c = 0; c < cols; ++c) at(r, c) -= f * get(pr, c);
            rhs[static_cast<size_t>(r)] -= f * rhs[static_cast<size_t>(pr)];
        }
        basis[static_cast<size_t>(pr)] = pc;
    }
};

// Maximizes obj over the tableau with Bland's rule. `allowed` marks columns
// eligible to enter. Returns false when unbounded.
bool run_simplex(Tableau& t, const std::vector<double>& obj, const std::vector<bool>& allowed) {
    while (true) {
        // Reduced costs: c_j - c_B' B^-1 A_j. Bland: lowest improving index.
        int entering = -1;
        for (int c = 0; c < t.cols; ++c) {
            if (!allowed[static_cast<size_t>(c)]) continue;
            bool basic = false;
            for (int r = 0; r < t.rows; ++r) {
                if (t.basis[static_cast<size_t>(r)] == c) { basic = true; break; }
            }
            if (basic) continue;
            double reduced = obj[static_cast<size_t>(c)];
            for (int r = 0; r < t.rows; ++r)
                reduced -= obj[static_cast<size_t>(t.basis[static_cast<size_t>(r)])] * t.get(r, c);
            if (reduced > kCostTol) { entering = c; break; }
        }
        if (entering < 0) return true;

        // Min ratio; Bland tie-break on the smallest basic variable index.
        int leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < t.rows; ++r) {
            double col = t.get(r, entering);
            if (col > kPivotTol) {
                double ratio = t.rhs[static_cast<size_t>(r)] / col;
                if (ratio < best_ratio - kPivotTol ||
                    (ratio < best_ratio + kPivotTol && leaving >= 0 &&
                     t.basis[static_cast<size_t>(r)] < t.basis[static_cast<size_t>(leaving)])) {
                    best_ratio = ratio;
                    leaving = r;
                }
            }
        }
        if (leaving < 0) return false;
        t.pivot(leaving, entering);
    }
}

} // namespace

void LinearProgram::validate() const {
    if (objective.empty()) throw config_error("LP needs at least one variable");
    if (rows.size() != senses.size() || rows.size() != rhs.size())
        throw config_error("LP row arrays must align");
    for (double c : objective)
        if (!std::isfinite(c)) throw config_error("LP objective must be finite");
    for (const auto& row : rows) {
        if (row.size() != objective.size())
            throw config_error("LP row width must match the variable count");
        for (double v : row)
            if (!std::isfinite(v)) throw config_error("LP coefficients must be finite");
    }
    for (double b : rhs)
        if (!std::isfinite(b)) throw config_error("LP rhs must be finite");
}

LpSolution solve(const LinearProgram& lp) {
    lp.validate();
    const int n = lp.num_vars();
    const int m = lp.num_rows();

    // Normalize to rhs >= 0. A flipped <= row becomes >=, which needs a
    // surplus column and an artificial.
    enum RowKind { Slack, SurplusArtificial, ArtificialOnly };
    std::vector<RowKind> kinds(static_cast<size_t>(m));
    std::vector<std::vector<double>> rows = lp.rows;
    std::vector<double> rhs = lp.rhs;
    int num_slack = 0, num_surplus = 0, num_artificial = 0;
    for (int r = 0; r < m; ++r) {
        bool flipped = rhs[static_cast<size_t>(r)] < 0.0;
        if (flipped) {
            for (double& v : rows[static_cast<size_t>(r)]) v = -v;
            rhs[static_cast<size_t>(r)] = -rhs[static_cast<size_t>(r)];
        }
        if (lp.senses[static_cast<size_t>(r)] == ConstraintSense::Equal) {
            kinds[static_cast<size_t>(r)] = ArtificialOnly;
            ++num_artificial;
        } else if (!flipped) {
            kinds[static_cast<size_t>(r)] = Slack;
            ++num_slack;
        } else {
            kinds[static_cast<size_t>(r)] = SurplusArtificial;
            ++num_surplus;
            ++num_artificial;
        }
    }

    Tableau t;
    t.rows = m;
    t.cols = n + num_slack + num_surplus + num_artificial;
    t.a.assign(static_cast<size_t>(m), std::vector<double>(static_cast<size_t>(t.cols), 0.0));
    t.rhs = rhs;
    t.basis.assign(static_cast<size_t>(m), -1);

    int slack_base = n;
    int artificial_base = n + num_slack + num_surplus;
    int next_aux = slack_base, next_art = artificial_base;
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n; ++c) t.at(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
        switch (kinds[static_cast<size_t>(r)]) {
            case Slack:
                t.at(r, next_aux) = 1.0;
                t.basis[static_cast<size_t>(r)] = next_aux++;
                break;
            case SurplusArtificial:
                t.at(r, next_aux) = -1.0;
                ++next_aux;
                t.at(r, next_art) = 1.0;
                t.basis[static_cast<size_t>(r)] = next_art++;
                break;
            case ArtificialOnly:
                t.at(r, next_art) = 1.0;
                t.basis[static_cast<size_t>(r)] = next_art++;
                break;
        }
    }

    std::vector<bool> allow_all(static_cast<size_t>(t.cols), true);

    if (num_artificial > 0) {
        // Phase 1: maximize -sum(artificials).
        std::vector<double> phase1(static_cast<size_t>(t.cols), 0.0);
        for (int c = artificial_base; c < t.cols; ++c) phase1[static_cast<size_t>(c)] = -1.0;
        run_simplex(t, phase1, allow_all); // cannot be unbounded (objective <= 0)
        double infeas = 0.0;
        for (int r = 0; r < m; ++r)
            if (t.basis[static_cast<size_t>(r)] >= artificial_base) infeas += t.rhs[static_cast<size_t>(r)];
        if (infeas > kFeasTol) return {std::vector<double>(static_cast<size_t>(n), 0.0), 0.0, LpStatus::Infeasible};

        // Drive leftover zero-level artificials out of the basis when possible.
        for (int r = 0; r < m; ++r) {
            if (t.basis[static_cast<size_t>(r)] < artificial_base) continue;
            int pc = -1;
            for (int c = 0; c < artificial_base; ++c) {
                if (std::abs(t.get(r, c)) > kPivotTol) { pc = c; break; }
            }
            if (pc >= 0) t.pivot(r, pc);
            // Otherwise the row is all zeros (redundant); the artificial stays
            // basic at level zero and is blocked from re-entering below.
        }
        for (int c = artificial_base; c < t.cols; ++c) allow_all[static_cast<size_t>(c)] = false;
    }

    // Phase 2 on the real objective.
    std::vector<double> obj(static_cast<size_t>(t.cols), 0.0);
    for (int c = 0; c < n; ++c) obj[static_cast<size_t>(c)] = lp.objective[static_cast<size_t>(c)];
    if (!run_simplex(t, obj, allow_all))
        return {std::vector<double>(static_cast<size_t>(n), 0.0), 0.0, LpStatus::Unbounded};

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.values.assign(static_cast<size_t>(n), 0.0);
    for (int r = 0; r < m; ++r) {
        int b = t.basis[static_cast<size_t>(r)];
        if (b < n) sol.values[static_cast<size_t>(b)] = t.rhs[static_cast<size_t>(r)];
    }
    sol.objective_value = 0.0;
    for (int c = 0; c < n; ++c)
        sol.objective_value += lp.objective[static_cast<size_t>(c)] * sol.values[static_cast<size_t>(c)];
    return sol;
}

AllocationLp build_allocation_lp(const ProblemInstance& instance,
                                 const std::vector<std::vector<double>>& probs) {
    const int n = instance.num_resources();
    const int L = instance.num_types();
    if (static_cast<int>(probs.size()) != n)
        throw config_error("probability matrix must cover every resource");
    for (const auto& row : probs) {
        if (static_cast<int>(row.size()) != L)
            throw config_error("probability matrix must cover every type");
    }
    const std::vector<double>& rates = instance.lp_rates();

    AllocationLp out;
    out.num_resources = n;
    out.num_types = L;
    out.has_reject = instance.reject_arm_enabled;
    const int cols = out.columns() * L;

    LinearProgram& lp = out.lp;
    lp.objective.assign(static_cast<size_t>(cols), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < L; ++j) {
            lp.objective[static_cast<size_t>(out.var(i, j))] =
                instance.resources[static_cast<size_t>(i)].revenue * rates[static_cast<size_t>(j)] *
                probs[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
    }
    // Capacity row per real resource (the reject arm is uncapacitated).
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<size_t>(cols), 0.0);
        for (int j = 0; j < L; ++j) {
            row[static_cast<size_t>(out.var(i, j))] =
                rates[static_cast<size_t>(j)] * probs[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        lp.rows.push_back(std::move(row));
        lp.senses.push_back(ConstraintSense::LessEqual);
        lp.rhs.push_back(instance.resources[static_cast<size_t>(i)].capacity);
    }
    // Each type's assignment probabilities sum to one.
    for (int j = 0; j < L; ++j) {
        std::vector<double> row(static_cast<size_t>(cols), 0.0);
        for (int i = 0; i < out.columns(); ++i) row[static_cast<size_t>(out.var(i, j))] = 1.0;
        lp.rows.push_back(std::move(row));
        lp.senses.push_back(ConstraintSense::Equal);
        lp.rhs.push_back(1.0);
    }
    return out;
}

AllocationLp build_optimistic_lp(const ProblemInstance& instance,
                                 const std::vector<std::vector<int>>& omega_per_resource) {
    const int n = instance.num_resources();
    if (static_cast<int>(omega_per_resource.size()) != n)
        throw config_error("omega must cover every resource");
    std::vector<std::vector<double>> probs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const ResourceSpec& r = instance.resources[static_cast<size_t>(i)];
        for (const Context& x : instance.contexts) {
            probs[static_cast<size_t>(i)].push_back(
                optimistic_prob(x, r.theta_space, omega_per_resource[static_cast<size_t>(i)]).prob);
        }
    }
    return build_allocation_lp(instance, probs);
}

AllocationLp build_param_lp(const ProblemInstance& instance,
                            const std::vector<int>& theta_index_per_resource) {
    const int n = instance.num_resources();
    if (static_cast<int>(theta_index_per_resource.size()) != n)
        throw config_error("theta assignment must cover every resource");
    std::vector<std::vector<double>> probs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const ResourceSpec& r = instance.resources[static_cast<size_t>(i)];
        const auto& theta =
            r.theta_space.at(static_cast<size_t>(theta_index_per_resource[static_cast<size_t>(i)]));
        for (const Context& x : instance.contexts)
            probs[static_cast<size_t>(i)].push_back(purchase_prob(x, theta));
    }
    return build_allocation_lp(instance, probs);
}

double benchmark_jd(const ProblemInstance& instance, const ArrivalSchedule& schedule, int t) {
    if (t < 0 || t > instance.horizon) throw config_error("benchmark period out of range");
    const int n = instance.num_resources();
    const int L = instance.num_types();
    const std::vector<double> mass = schedule.cumulative_rates(t);
    const int cols = (n + (instance.reject_arm_enabled ? 1 : 0)) * L;
    auto var = [L](int i, int j) { return i * L + j; };

    // Aggregate form: y_ij is the expected number of type-j arrivals routed
    // to resource i over the first t periods.
    LinearProgram lp;
    lp.objective.assign(static_cast<size_t>(cols), 0.0);
    std::vector<std::vector<double>> f(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const ResourceSpec& r = instance.resources[static_cast<size_t>(i)];
        const auto& theta = r.theta_space.at(static_cast<size_t>(r.true_theta));
        for (int j = 0; j < L; ++j) {
            double p = purchase_prob(instance.contexts[static_cast<size_t>(j)], theta);
            f[static_cast<size_t>(i)].push_back(p);
            lp.objective[static_cast<size_t>(var(i, j))] = r.revenue * p;
        }
    }
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<size_t>(cols), 0.0);
        for (int j = 0; j < L; ++j)
            row[static_cast<size_t>(var(i, j))] = f[static_cast<size_t>(i)][static_cast<size_t>(j)];
        lp.rows.push_back(std::move(row));
        lp.senses.push_back(ConstraintSense::LessEqual);
        lp.rhs.push_back(instance.resources[static_cast<size_t>(i)].capacity);
    }
    const int route_cols = n + (instance.reject_arm_enabled ? 1 : 0);
    for (int j = 0; j < L; ++j) {
        std::vector<double> row(static_cast<size_t>(cols), 0.0);
        for (int i = 0; i < route_cols; ++i) row[static_cast<size_t>(var(i, j))] = 1.0;
        lp.rows.push_back(std::move(row));
        lp.senses.push_back(ConstraintSense::Equal);
        lp.rhs.push_back(mass[static_cast<size_t>(j)]);
    }
    LpSolution sol = solve(lp);
    if (sol.status != LpStatus::Optimal)
        throw policy_error("benchmark LP did not solve; is the reject arm disabled?");
    return sol.objective_value;
}

} // namespace kbsim
