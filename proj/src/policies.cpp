#include "kbsim/policies.hpp"

#include <cmath>
#include <algorithm>
#include <string>

namespace kbsim {

namespace {

constexpr double kCapacityEps = 1e-9;

bool contains(const std::vector<int>& sorted, int value) {
    return std::binary_search(sorted.begin(), sorted.end(), value);
}

bool candidate_active(const SwitchCandidate& cand, const ConfidenceState& conf) {
    for (size_t i = 0; i < cand.member_index.size(); ++i) {
        int k = cand.member_index[i];
        if (k >= 0 && contains(conf.omega[i], k)) return true;
    }
    return false;
}

bool selectable(const PolicyState& state, const ProblemInstance& instance, int i) {
    if (!state.config.hard_capacity) return true;
    return state.consumption[static_cast<size_t>(i)] + 1.0 <=
           instance.resources[static_cast<size_t>(i)].capacity + kCapacityEps;
}

double update_threshold(const PolicyState& state, int t) {
    double beta = state.confidence.beta;
    return state.config.update_threshold_multiplier * std::sqrt(t * std::log(2.0 * t / beta));
}

void resolve_plan(PolicyState& state, const ProblemInstance& instance) {
    AllocationLp alp = build_optimistic_lp(instance, state.confidence.omega);
    LpSolution sol = solve(alp.lp);
    if (sol.status != LpStatus::Optimal)
        throw policy_error("allocation LP is " +
                           std::string(sol.status == LpStatus::Infeasible ? "infeasible" : "unbounded") +
                           "; enable the reject arm or relax capacities");
    state.plan_layout = std::move(alp);
    state.plan = std::move(sol.values);
    state.plan_solved_at = state.period;
}

} // namespace

PolicyState init_policy_state(const ProblemInstance& instance, const PolicyConfig& config) {
    instance.validate();
    const int n = instance.num_resources();
    PolicyState st;
    st.config = config;
    st.consumption.assign(static_cast<size_t>(n), 0.0);

    ConfidenceState& conf = st.confidence;
    conf.beta = 1.0 / (static_cast<double>(n) * instance.horizon);
    conf.omega.resize(static_cast<size_t>(n));
    conf.d_sets.resize(static_cast<size_t>(n));
    conf.residual_sums.resize(static_cast<size_t>(n));
    conf.gap_sums.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const size_t K = instance.resources[static_cast<size_t>(i)].theta_space.size();
        conf.omega[static_cast<size_t>(i)].resize(K);
        for (size_t k = 0; k < K; ++k) conf.omega[static_cast<size_t>(i)][k] = static_cast<int>(k);
        conf.d_sets[static_cast<size_t>(i)].assign(K, {});
        conf.residual_sums[static_cast<size_t>(i)].assign(K, 0.0);
        conf.gap_sums[static_cast<size_t>(i)].assign(K, std::vector<double>(K, 0.0));
    }

    // Distinct parameter vectors across all resources, in first-seen order.
    SwitchMonitor& mon = st.monitor;
    for (int i = 0; i < n; ++i) {
        const auto& space = instance.resources[static_cast<size_t>(i)].theta_space;
        for (size_t k = 0; k < space.size(); ++k) {
            int found = -1;
            for (size_t c = 0; c < mon.candidates.size(); ++c) {
                if (mon.candidates[c].theta == space[k]) { found = static_cast<int>(c); break; }
            }
            if (found < 0) {
                SwitchCandidate cand;
                cand.theta = space[k];
                cand.member_index.assign(static_cast<size_t>(n), -1);
                mon.candidates.push_back(std::move(cand));
                found = static_cast<int>(mon.candidates.size()) - 1;
            }
            mon.candidates[static_cast<size_t>(found)].member_index[static_cast<size_t>(i)] =
                static_cast<int>(k);
        }
    }
    mon.cond1_sums.assign(mon.candidates.size(), 0.0);
    mon.cond2_sums.assign(static_cast<size_t>(n), 0.0);
    mon.memo_generation.assign(mon.candidates.size(), -1);
    mon.memo_solution.resize(mon.candidates.size());
    return st;
}

int type_index(const ProblemInstance& instance, const Context& context) {
    for (int j = 0; j < instance.num_types(); ++j) {
        if (instance.contexts[static_cast<size_t>(j)].id == context.id) return j;
    }
    throw config_error("context id not found in the instance");
}

int sample_from_column(const std::vector<double>& probabilities, double u) {
    double cum = 0.0;
    for (size_t idx = 0; idx < probabilities.size(); ++idx) {
        cum += probabilities[idx];
        if (u < cum) return static_cast<int>(idx);
    }
    // Rounding left u past the final cumulative; take the last positive entry.
    for (size_t idx = probabilities.size(); idx-- > 0;) {
        if (probabilities[idx] > 0.0) return static_cast<int>(idx);
    }
    return static_cast<int>(probabilities.size()) - 1;
}

Decision alg_lp_step(PolicyState& state, const ProblemInstance& instance, const Context& context,
                     RngStream& rng) {
    const int n = instance.num_resources();
    state.period += 1;
    for (int i = 0; i < n; ++i) {
        if (state.confidence.omega[static_cast<size_t>(i)].empty())
            throw policy_error("confidence set exhausted");
    }
    if (state.plan_solved_at < 0 || state.period - state.plan_solved_at >= state.config.resolve_cadence)
        resolve_plan(state, instance);

    const int j = type_index(instance, context);
    std::vector<double> column(static_cast<size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i)
        column[static_cast<size_t>(i)] = state.plan[static_cast<size_t>(state.plan_layout.var(i, j))];
    if (state.plan_layout.has_reject)
        column[static_cast<size_t>(n)] =
            state.plan[static_cast<size_t>(state.plan_layout.var(state.plan_layout.reject_index(), j))];

    // Depleted resources cannot be offered; their mass goes to the reject arm.
    for (int i = 0; i < n; ++i) {
        if (!selectable(state, instance, i) && column[static_cast<size_t>(i)] > 0.0) {
            if (!instance.reject_arm_enabled)
                throw policy_error("resource depleted and the reject arm is disabled");
            column[static_cast<size_t>(n)] += column[static_cast<size_t>(i)];
            column[static_cast<size_t>(i)] = 0.0;
        }
    }

    Decision d;
    d.resource = sample_from_column(column, rng.next_double());
    d.probabilities = std::move(column);
    if (d.resource < n) {
        const ResourceSpec& r = instance.resources[static_cast<size_t>(d.resource)];
        d.theta_index = optimistic_prob(context, r.theta_space,
                                        state.confidence.omega[static_cast<size_t>(d.resource)])
                            .theta_index;
    }
    return d;
}

Decision alg_adv_step(PolicyState& state, const ProblemInstance& instance, const Context& context) {
    const int n = instance.num_resources();
    state.period += 1;

    Decision d;
    d.probabilities.assign(static_cast<size_t>(n) + 1, 0.0);
    double best_score = 0.0;
    int best = -1;
    std::vector<int> maximizer(static_cast<size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        const ResourceSpec& r = instance.resources[static_cast<size_t>(i)];
        if (state.confidence.omega[static_cast<size_t>(i)].empty())
            throw policy_error("confidence set exhausted");
        if (!selectable(state, instance, i)) continue;
        double ratio = std::clamp(state.consumption[static_cast<size_t>(i)] / r.capacity, 0.0, 1.0);
        OptimisticProb opt =
            optimistic_prob(context, r.theta_space, state.confidence.omega[static_cast<size_t>(i)]);
        maximizer[static_cast<size_t>(i)] = opt.theta_index;
        double score = r.revenue * (1.0 - psi(ratio)) * opt.prob;
        if (score > best_score) { // strict: ties stay with the lower index
            best_score = score;
            best = i;
        }
    }
    if (best < 0) {
        d.resource = n; // nothing earns anything; reject
    } else {
        d.resource = best;
        d.theta_index = maximizer[static_cast<size_t>(best)];
    }
    d.probabilities[static_cast<size_t>(d.resource)] = 1.0;
    return d;
}

void update_confidence(PolicyState& state, const ProblemInstance& instance,
                       const Decision& decision, const Context& context, int purchase) {
    const int n = instance.num_resources();
    if (decision.resource >= n) return;
    const int i = decision.resource;
    const int k = decision.theta_index;
    ConfidenceState& conf = state.confidence;
    std::vector<int>& omega = conf.omega[static_cast<size_t>(i)];
    if (k < 0 || !contains(omega, k))
        throw policy_error("decision maximizer is not in the surviving set");

    const ResourceSpec& r = instance.resources[static_cast<size_t>(i)];
    const int t = state.period;
    const double f_k = purchase_prob(context, r.theta_space[static_cast<size_t>(k)]);

    conf.d_sets[static_cast<size_t>(i)][static_cast<size_t>(k)].push_back(t);
    conf.residual_sums[static_cast<size_t>(i)][static_cast<size_t>(k)] += f_k - purchase;
    for (int k2 : omega) {
        conf.gap_sums[static_cast<size_t>(i)][static_cast<size_t>(k)][static_cast<size_t>(k2)] +=
            f_k - purchase_prob(context, r.theta_space[static_cast<size_t>(k2)]);
    }

    const double thr = update_threshold(state, t);
    bool violated =
        std::abs(conf.residual_sums[static_cast<size_t>(i)][static_cast<size_t>(k)]) > thr;
    if (!violated) {
        for (int k2 : omega) {
            if (std::abs(conf.gap_sums[static_cast<size_t>(i)][static_cast<size_t>(k)]
                                      [static_cast<size_t>(k2)]) > thr) {
                violated = true;
                break;
            }
        }
    }
    if (!violated) return;
    if (omega.size() == 1) {
        // Removing the last candidate would leave the policy unable to act.
        ++conf.misspecification_warnings;
        return;
    }
    omega.erase(std::find(omega.begin(), omega.end(), k));
    ++state.omega_generation;
}

bool check_switch(PolicyState& state, const ProblemInstance& instance, const Context& context,
                  const Decision& decision) {
    (void)decision;
    SwitchMonitor& mon = state.monitor;
    if (mon.switched) return true;
    if (state.plan_solved_at < 0) throw policy_error("switch check needs a solved plan");

    const int n = instance.num_resources();
    const int t = state.period;
    const int T = instance.horizon;
    const int j = type_index(instance, context);
    const double beta = state.confidence.beta;
    const double mult = state.config.switch_threshold_multiplier;

    double max_revenue = 0.0;
    int cardinality_sum = 0, cardinality_max = 0;
    for (int i = 0; i < n; ++i) {
        max_revenue = std::max(max_revenue, instance.resources[static_cast<size_t>(i)].revenue);
        int size = static_cast<int>(instance.resources[static_cast<size_t>(i)].theta_space.size());
        cardinality_sum += size;
        cardinality_max = std::max(cardinality_max, size);
    }
    const int cardinality = state.config.theta_cardinality_max ? cardinality_max : cardinality_sum;

    // Plan-vs-candidate revenue drift, one running sum per surviving candidate.
    bool fired = false;
    for (size_t c = 0; c < mon.candidates.size(); ++c) {
        const SwitchCandidate& cand = mon.candidates[c];
        if (!candidate_active(cand, state.confidence)) continue;
        if (mon.memo_generation[c] != state.omega_generation) {
            std::vector<std::vector<double>> probs(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                const ResourceSpec& r = instance.resources[static_cast<size_t>(i)];
                for (int jj = 0; jj < instance.num_types(); ++jj) {
                    const Context& x = instance.contexts[static_cast<size_t>(jj)];
                    double p = cand.member_index[static_cast<size_t>(i)] >= 0
                                   ? purchase_prob(x, cand.theta)
                                   : optimistic_prob(x, r.theta_space,
                                                     state.confidence.omega[static_cast<size_t>(i)])
                                         .prob;
                    probs[static_cast<size_t>(i)].push_back(p);
                }
            }
            AllocationLp alp = build_allocation_lp(instance, probs);
            LpSolution sol = solve(alp.lp);
            if (sol.status != LpStatus::Optimal)
                throw policy_error("candidate allocation LP did not solve");
            mon.memo_solution[c] = std::move(sol.values);
            mon.memo_generation[c] = state.omega_generation;
        }
        double inc = 0.0;
        for (int i = 0; i < n; ++i) {
            double s_cand = mon.memo_solution[c][static_cast<size_t>(state.plan_layout.var(i, j))];
            double s_plan = state.plan[static_cast<size_t>(state.plan_layout.var(i, j))];
            inc += instance.resources[static_cast<size_t>(i)].revenue * (s_cand - s_plan) *
                   purchase_prob(context, cand.theta);
        }
        mon.cond1_sums[c] += inc;
        double thr1 = max_revenue * mult *
                      std::sqrt(32.0 * t * std::log(4.0 * cardinality * t / beta));
        if (std::abs(mon.cond1_sums[c]) > thr1) fired = true;
    }

    // Planned consumption pacing per resource.
    const double dev2 = mult * std::sqrt(2.0 * t * std::log(2.0 * t / beta));
    for (int i = 0; i < n; ++i) {
        const ResourceSpec& r = instance.resources[static_cast<size_t>(i)];
        double fbar = optimistic_prob(context, r.theta_space,
                                      state.confidence.omega[static_cast<size_t>(i)])
                          .prob;
        mon.cond2_sums[static_cast<size_t>(i)] +=
            state.plan[static_cast<size_t>(state.plan_layout.var(i, j))] * fbar;
        double pace = static_cast<double>(t) / T * r.capacity;
        if (mon.cond2_sums[static_cast<size_t>(i)] > pace + dev2) fired = true;
    }

    if (fired) {
        mon.switched = true;
        mon.switch_period = t;
    }
    return fired;
}

Decision ulwe_step(PolicyState& state, const ProblemInstance& instance, const Context& context,
                   RngStream& rng) {
    if (!state.monitor.switched) {
        Decision d = alg_lp_step(state, instance, context, rng);
        check_switch(state, instance, context, d);
        return d;
    }
    return alg_adv_step(state, instance, context);
}

} // namespace kbsim
