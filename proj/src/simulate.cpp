#include "kbsim/simulate.hpp"

#include <cmath>
#include <cstdlib>
#include <algorithm>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "kbsim/lp.hpp"

namespace kbsim {

const char* policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::AlgLp: return "alg_lp";
        case PolicyKind::AlgAdv: return "alg_adv";
        case PolicyKind::Ulwe: return "ulwe";
    }
    return "?";
}

std::optional<PolicyKind> policy_from_name(const std::string& name) {
    if (name == "alg_lp") return PolicyKind::AlgLp;
    if (name == "alg_adv") return PolicyKind::AlgAdv;
    if (name == "ulwe") return PolicyKind::Ulwe;
    return std::nullopt;
}

PolicyConfig SimulationConfig::policy_config() const {
    PolicyConfig pc;
    pc.resolve_cadence = resolve_cadence;
    pc.hard_capacity = capacity_mode == CapacityMode::Hard;
    pc.update_threshold_multiplier = threshold_multiplier;
    pc.switch_threshold_multiplier = switch_threshold_multiplier;
    pc.theta_cardinality_max = theta_cardinality_max;
    return pc;
}

void SimulationConfig::validate() const {
    instance.validate();
    (void)schedule(); // row/rate checks happen at construction
    if (replications < 1) throw config_error("replications must be at least 1");
    if (resolve_cadence < 1) throw config_error("resolve_cadence must be at least 1");
    if (!(threshold_multiplier > 0.0) || !(switch_threshold_multiplier > 0.0))
        throw config_error("threshold multipliers must be positive");
    int prev = 0;
    for (int t : checkpoints) {
        if (t < 1 || t > instance.horizon) throw config_error("checkpoints must lie in [1, horizon]");
        if (t <= prev) throw config_error("checkpoints must be strictly increasing");
        prev = t;
    }
}

int draw_arrival(const ArrivalSchedule& schedule, int t, RngStream& rng) {
    const std::vector<double>& row = schedule.row(t);
    double u = rng.next_double();
    double cum = 0.0;
    for (size_t j = 0; j < row.size(); ++j) {
        cum += row[j];
        if (u < cum) return static_cast<int>(j);
    }
    for (size_t j = row.size(); j-- > 0;) {
        if (row[j] > 0.0) return static_cast<int>(j);
    }
    return static_cast<int>(row.size()) - 1;
}

std::pair<EpisodeTrace, RegretTrace> run_episode(const SimulationConfig& config, int replication,
                                                 const std::vector<double>& benchmarks) {
    config.validate();
    if (benchmarks.size() != config.checkpoints.size())
        throw config_error("benchmark values must align with the checkpoints");
    const ProblemInstance& inst = config.instance;
    const ArrivalSchedule schedule = config.schedule();
    const int n = inst.num_resources();
    const int L = inst.num_types();
    const bool hard = config.capacity_mode == CapacityMode::Hard;

    PolicyState state = init_policy_state(inst, config.policy_config());
    RngStream arrival = make_stream(config.base_seed, static_cast<std::uint64_t>(replication), Stream::Arrival);
    RngStream purchase = make_stream(config.base_seed, static_cast<std::uint64_t>(replication), Stream::Purchase);
    RngStream policy = make_stream(config.base_seed, static_cast<std::uint64_t>(replication), Stream::Policy);

    EpisodeTrace trace;
    trace.purchases.assign(static_cast<size_t>(n), 0);
    trace.violations.assign(static_cast<size_t>(n), 0);
    trace.allocations.assign(static_cast<size_t>(L), std::vector<int>(static_cast<size_t>(n) + 1, 0));
    trace.periods.reserve(static_cast<size_t>(inst.horizon));

    RegretTrace regret;
    size_t next_checkpoint = 0;

    for (int t = 1; t <= inst.horizon; ++t) {
        int j = draw_arrival(schedule, t, arrival);
        const Context& x = inst.contexts[static_cast<size_t>(j)];

        Decision d;
        switch (config.policy) {
            case PolicyKind::AlgLp: d = alg_lp_step(state, inst, x, policy); break;
            case PolicyKind::AlgAdv: d = alg_adv_step(state, inst, x); break;
            case PolicyKind::Ulwe: d = ulwe_step(state, inst, x, policy); break;
        }

        int a = 0;
        double reward = 0.0;
        if (d.resource < n) {
            const ResourceSpec& r = inst.resources[static_cast<size_t>(d.resource)];
            const auto& theta_star = r.theta_space[static_cast<size_t>(r.true_theta)];
            if (purchase.next_double() < purchase_prob(x, theta_star)) {
                a = 1;
                bool over = state.consumption[static_cast<size_t>(d.resource)] + 1.0 >
                            r.capacity + 1e-9;
                state.consumption[static_cast<size_t>(d.resource)] += 1.0;
                if (over) {
                    // Only reachable in soft mode: allocation is allowed but earns nothing.
                    trace.violations[static_cast<size_t>(d.resource)] += 1;
                } else {
                    trace.purchases[static_cast<size_t>(d.resource)] += 1;
                    reward = r.revenue;
                }
            }
            update_confidence(state, inst, d, x, a);
        }
        trace.total_revenue += reward;
        trace.allocations[static_cast<size_t>(j)][static_cast<size_t>(d.resource)] += 1;

        PeriodRecord rec;
        rec.period = t;
        rec.type = j;
        rec.resource = d.resource;
        rec.theta_index = d.theta_index;
        rec.purchase = a == 1;
        rec.reward = reward;
        rec.switched = state.monitor.switched;
        rec.remaining.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            double used = hard ? state.consumption[static_cast<size_t>(i)]
                               : std::min(state.consumption[static_cast<size_t>(i)],
                                          inst.resources[static_cast<size_t>(i)].capacity);
            rec.remaining[static_cast<size_t>(i)] =
                inst.resources[static_cast<size_t>(i)].capacity - used;
        }
        trace.periods.push_back(std::move(rec));

        if (next_checkpoint < config.checkpoints.size() &&
            t == config.checkpoints[next_checkpoint]) {
            RegretPoint p;
            p.t = t;
            p.benchmark = benchmarks[next_checkpoint];
            p.revenue = trace.total_revenue;
            p.regret = p.benchmark - p.revenue;
            regret.points.push_back(p);
            ++next_checkpoint;
        }
    }

    trace.switch_period = state.monitor.switch_period;
    trace.misspecification_warnings = state.confidence.misspecification_warnings;
    for (int i = 0; i < n; ++i) {
        int star = inst.resources[static_cast<size_t>(i)].true_theta;
        const auto& omega = state.confidence.omega[static_cast<size_t>(i)];
        if (!std::binary_search(omega.begin(), omega.end(), star)) trace.true_theta_removed = true;
    }
    return {std::move(trace), std::move(regret)};
}

std::pair<EpisodeTrace, RegretTrace> run_episode(const SimulationConfig& config, int replication) {
    const ArrivalSchedule schedule = config.schedule();
    std::vector<double> benchmarks;
    benchmarks.reserve(config.checkpoints.size());
    for (int t : config.checkpoints) benchmarks.push_back(benchmark_jd(config.instance, schedule, t));
    return run_episode(config, replication, benchmarks);
}

int configured_thread_cap() {
    const char* env = std::getenv("KBSIM_THREADS");
    if (env == nullptr) return 0;
    int v = std::atoi(env);
    return v > 0 ? v : 0;
}

namespace {

ReplicationSummary summarize(const SimulationConfig& config, const std::vector<double>& benchmarks,
                             const std::vector<std::pair<EpisodeTrace, RegretTrace>>& episodes) {
    const int n = config.instance.num_resources();
    const int L = config.instance.num_types();
    const int R = config.replications;

    ReplicationSummary out;
    out.policy = config.policy;
    out.replications = R;

    for (size_t ci = 0; ci < config.checkpoints.size(); ++ci) {
        CheckpointStats stats;
        stats.t = config.checkpoints[ci];
        stats.benchmark = benchmarks[ci];
        stats.mean_allocations.assign(static_cast<size_t>(L),
                                      std::vector<double>(static_cast<size_t>(n) + 1, 0.0));
        double sum = 0.0, sumsq = 0.0, revsum = 0.0;
        for (const auto& ep : episodes) {
            double reg = ep.second.points[ci].regret;
            sum += reg;
            sumsq += reg * reg;
            revsum += ep.second.points[ci].revenue;
        }
        stats.mean_regret = sum / R;
        stats.mean_revenue = revsum / R;
        if (R > 1) {
            double var = (sumsq - sum * sum / R) / (R - 1);
            stats.stderr_regret = std::sqrt(std::max(var, 0.0) / R);
        }
        for (const auto& ep : episodes) {
            for (const PeriodRecord& rec : ep.first.periods) {
                if (rec.period > stats.t) break;
                stats.mean_allocations[static_cast<size_t>(rec.type)]
                                      [static_cast<size_t>(rec.resource)] += 1.0;
            }
        }
        for (auto& row : stats.mean_allocations)
            for (double& v : row) v /= R;
        out.checkpoints.push_back(std::move(stats));
    }

    for (const auto& ep : episodes) {
        if (ep.first.switch_period) {
            out.switch_count += 1;
            out.switch_periods.push_back(*ep.first.switch_period);
        }
        if (ep.first.true_theta_removed) out.theta_star_removed_count += 1;
        out.misspecification_warnings += ep.first.misspecification_warnings;
    }
    std::sort(out.switch_periods.begin(), out.switch_periods.end());
    return out;
}

std::vector<double> checkpoint_benchmarks(const SimulationConfig& config) {
    const ArrivalSchedule schedule = config.schedule();
    std::vector<double> benchmarks;
    benchmarks.reserve(config.checkpoints.size());
    for (int t : config.checkpoints) benchmarks.push_back(benchmark_jd(config.instance, schedule, t));
    return benchmarks;
}

} // namespace

ReplicationSummary replicate_serial(const SimulationConfig& config) {
    config.validate();
    const std::vector<double> benchmarks = checkpoint_benchmarks(config);
    std::vector<std::pair<EpisodeTrace, RegretTrace>> episodes;
    episodes.reserve(static_cast<size_t>(config.replications));
    for (int r = 0; r < config.replications; ++r)
        episodes.push_back(run_episode(config, r, benchmarks));
    return summarize(config, benchmarks, episodes);
}

ReplicationSummary replicate(const SimulationConfig& config) {
    config.validate();
    const std::vector<double> benchmarks = checkpoint_benchmarks(config);
    std::vector<std::pair<EpisodeTrace, RegretTrace>> episodes(
        static_cast<size_t>(config.replications));
#if defined(_OPENMP)
    int cap = configured_thread_cap();
    int threads = cap > 0 ? std::min(cap, omp_get_max_threads()) : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int r = 0; r < config.replications; ++r)
        episodes[static_cast<size_t>(r)] = run_episode(config, r, benchmarks);
#else
    for (int r = 0; r < config.replications; ++r)
        episodes[static_cast<size_t>(r)] = run_episode(config, r, benchmarks);
#endif
    // Episodes land in replication order, so this reduction matches the
    // serial reference bit for bit.
    return summarize(config, benchmarks, episodes);
}

} // namespace kbsim
