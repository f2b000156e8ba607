// Acceptance suite: one line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "kbsim/io.hpp"
#include "kbsim/lp.hpp"
#include "kbsim/simulate.hpp"
#include "lp_oracle.hpp"

using namespace kbsim;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Clock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int g_failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
    std::printf("criterion %d %s  %s  (%.2f s)\n", id, pass ? "PASS" : "FAIL", detail.c_str(),
                seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

ReplicationSummary run_policy(const SimulationConfig& base, PolicyKind p) {
    SimulationConfig cfg = base;
    cfg.policy = p;
    return replicate(cfg);
}

double final_regret(const ReplicationSummary& s) { return s.checkpoints.back().mean_regret; }
double final_stderr(const ReplicationSummary& s) { return s.checkpoints.back().stderr_regret; }

double pooled_stderr(const ReplicationSummary& a, const ReplicationSummary& b) {
    double ea = final_stderr(a), eb = final_stderr(b);
    return std::sqrt(ea * ea + eb * eb);
}

// Median switch period over all replications; never-switched episodes count
// as later than any period.
std::optional<int> median_switch_period(const ReplicationSummary& s) {
    int half = s.replications / 2;
    if (static_cast<int>(s.switch_periods.size()) <= half) return std::nullopt;
    return s.switch_periods[static_cast<size_t>(half)];
}

char buffer[512];

void criterion_1() {
    Clock clock;
    RngStream rng(20240517);
    const int cases = 1000;
    int mismatches = 0;
    for (int c = 0; c < cases; ++c)
        if (!testing::oracle_agrees(testing::random_small_lp(rng), 1e-8)) ++mismatches;
    double secs = clock.seconds();
    std::snprintf(buffer, sizeof(buffer),
                  "lp oracle equivalence: %d/%d seeded cases within 1e-8", cases - mismatches,
                  cases);
    report(1, mismatches == 0 && secs < 10.0, buffer, secs);
}

void criterion_2() {
    Clock clock;
    SimulationConfig cfg = make_preset("iid", PresetOptions{500, false, kSeed});
    double value = benchmark_jd(cfg.instance, cfg.schedule(), 500);
    double secs = clock.seconds();
    std::snprintf(buffer, sizeof(buffer), "benchmark value: J(c,500) = %.9f, expected 495", value);
    report(2, std::abs(value - 495.0) <= 1e-6 && secs < 1.0, buffer, secs);
}

struct IidRuns {
    ReplicationSummary lp, adv, ulwe;
};

IidRuns criterion_3(const SimulationConfig& iid) {
    Clock clock;
    IidRuns runs{run_policy(iid, PolicyKind::AlgLp), run_policy(iid, PolicyKind::AlgAdv),
                 run_policy(iid, PolicyKind::Ulwe)};
    double r_lp = final_regret(runs.lp), r_adv = final_regret(runs.adv),
           r_ulwe = final_regret(runs.ulwe);
    double gap = std::abs(r_ulwe - r_lp);
    double pooled = pooled_stderr(runs.ulwe, runs.lp);
    bool ratio_ok = r_ulwe <= 0.8 * r_adv;
    bool near_lp = gap <= 3.0 * pooled;
    double secs = clock.seconds();
    std::snprintf(buffer, sizeof(buffer),
                  "iid ordering: regret ulwe=%.2f lp=%.2f adv=%.2f, ulwe/adv=%.2f (need <=0.8), "
                  "|ulwe-lp|=%.2f vs 3*se=%.2f",
                  r_ulwe, r_lp, r_adv, r_ulwe / r_adv, gap, 3.0 * pooled);
    report(3, ratio_ok && near_lp && secs < 120.0, buffer, secs);
    return runs;
}

void criterion_4() {
    Clock clock;
    SimulationConfig adv1 = make_preset("adv1", PresetOptions{500, false, kSeed});
    adv1.replications = 100;
    adv1.base_seed = kSeed;
    ReplicationSummary lp = run_policy(adv1, PolicyKind::AlgLp);
    ReplicationSummary adv = run_policy(adv1, PolicyKind::AlgAdv);
    ReplicationSummary ulwe = run_policy(adv1, PolicyKind::Ulwe);
    double r_lp = final_regret(lp), r_adv = final_regret(adv), r_ulwe = final_regret(ulwe);
    bool order1 = r_adv - r_ulwe >= pooled_stderr(adv, ulwe);
    bool order2 = r_lp - r_adv >= pooled_stderr(lp, adv);
    std::optional<int> median = median_switch_period(ulwe);
    bool window = median && *median >= 100 && *median <= 250;
    double secs = clock.seconds();
    std::snprintf(buffer, sizeof(buffer),
                  "adv1 ordering: regret ulwe=%.2f adv=%.2f lp=%.2f (gaps %.2f/%.2f vs se %.2f/%.2f), "
                  "switched %d/100, median switch=%s in [100,250]",
                  r_ulwe, r_adv, r_lp, r_adv - r_ulwe, r_lp - r_adv, pooled_stderr(adv, ulwe),
                  pooled_stderr(lp, adv), ulwe.switch_count,
                  median ? std::to_string(*median).c_str() : "none");
    report(4, order1 && order2 && window && secs < 180.0, buffer, secs);
}

void criterion_5(const IidRuns& runs, double secs) {
    std::snprintf(buffer, sizeof(buffer), "iid no-switch: ulwe switched in %d/100 replications",
                  runs.ulwe.switch_count);
    report(5, runs.ulwe.switch_count <= 5, buffer, secs);
}

void criterion_6(const IidRuns& runs, double secs) {
    std::snprintf(buffer, sizeof(buffer),
                  "true-theta survival: removed in %d/100 iid replications (ulwe)",
                  runs.ulwe.theta_star_removed_count);
    report(6, runs.ulwe.theta_star_removed_count <= 5, buffer, secs);
}

void criterion_7(const IidRuns& runs) {
    Clock clock;
    SimulationConfig big = make_preset("iid", PresetOptions{1000, false, kSeed});
    big.replications = 100;
    big.base_seed = kSeed;
    big.policy = PolicyKind::Ulwe;
    ReplicationSummary s1000 = replicate(big);
    double r500 = final_regret(runs.ulwe);
    double r1000 = final_regret(s1000);
    double ratio = r1000 / r500;
    double secs = clock.seconds();
    std::snprintf(buffer, sizeof(buffer),
                  "sublinear scaling: regret T=1000 %.2f over T=500 %.2f, ratio %.2f (need <=1.7)",
                  r1000, r500, ratio);
    report(7, r500 > 0 && ratio <= 1.7 && secs < 300.0, buffer, secs);
}

void criterion_8() {
    Clock clock;
    int cases_psi = 0, fail_psi = 0;
    {
        RngStream rng(81);
        for (int c = 0; c < 400; ++c, ++cases_psi) {
            double u = rng.next_double(), v = rng.next_double(), t = rng.next_double();
            if (psi(t * u + (1 - t) * v) > t * psi(u) + (1 - t) * psi(v) + 1e-12) ++fail_psi;
            double lo = std::min(u, v), hi = std::max(u, v);
            if (lo < hi && psi(lo) >= psi(hi)) ++fail_psi;
        }
        if (std::abs(psi(0.0)) > 1e-15 || std::abs(psi(1.0) - 1.0) > 1e-15) ++fail_psi;
    }

    // Confidence-set monotonicity, with an elimination scale low enough to
    // exercise removals.
    int cases_omega = 0, fail_omega = 0;
    for (int c = 0; c < 200; ++c, ++cases_omega) {
        SimulationConfig cfg = make_preset(c % 2 == 0 ? "iid" : "adv2",
                                           PresetOptions{60, false, static_cast<std::uint64_t>(c)});
        cfg.threshold_multiplier = 0.25;
        const ProblemInstance& inst = cfg.instance;
        PolicyState st = init_policy_state(inst, cfg.policy_config());
        RngStream arrivals(100 + c), outcomes(200 + c), policy(300 + c);
        auto sched = cfg.schedule();
        auto prev = st.confidence.omega;
        for (int t = 1; t <= inst.horizon; ++t) {
            int j = draw_arrival(sched, t, arrivals);
            const Context& x = inst.contexts[static_cast<size_t>(j)];
            Decision d = ulwe_step(st, inst, x, policy);
            if (d.resource < inst.num_resources()) {
                const auto& rs = inst.resources[static_cast<size_t>(d.resource)];
                int a = outcomes.next_double() <
                                purchase_prob(x, rs.theta_space[static_cast<size_t>(rs.true_theta)])
                            ? 1
                            : 0;
                if (a == 1) st.consumption[static_cast<size_t>(d.resource)] += 1.0;
                update_confidence(st, inst, d, x, a);
            }
            for (size_t i = 0; i < prev.size(); ++i) {
                for (int k : st.confidence.omega[i]) {
                    if (std::find(prev[i].begin(), prev[i].end(), k) == prev[i].end()) ++fail_omega;
                }
            }
            prev = st.confidence.omega;
        }
    }

    // Hard-capacity safety on deliberately tight instances.
    int cases_cap = 0, fail_cap = 0;
    for (int c = 0; c < 200; ++c, ++cases_cap) {
        SimulationConfig cfg = make_preset(c % 2 == 0 ? "adv1" : "iid",
                                           PresetOptions{60, false, static_cast<std::uint64_t>(c)});
        cfg.policy = c % 3 == 0 ? PolicyKind::AlgLp : (c % 3 == 1 ? PolicyKind::AlgAdv : PolicyKind::Ulwe);
        cfg.base_seed = static_cast<std::uint64_t>(1000 + c);
        for (auto& r : cfg.instance.resources) r.capacity = 8.0;
        auto trace = run_episode(cfg, 0).first;
        for (size_t i = 0; i < trace.purchases.size(); ++i)
            if (trace.purchases[i] > cfg.instance.resources[i].capacity + 1e-9) ++fail_cap;
        for (const auto& rec : trace.periods)
            for (double rem : rec.remaining)
                if (rem < -1e-9) ++fail_cap;
    }

    // Greedy argmax scale invariance at the decision-sequence level.
    int cases_scale = 0, fail_scale = 0;
    for (int c = 0; c < 200; ++c, ++cases_scale) {
        SimulationConfig base = make_preset("iid", PresetOptions{50, false, static_cast<std::uint64_t>(c)});
        base.policy = c % 2 == 0 ? PolicyKind::AlgAdv : PolicyKind::Ulwe;
        base.base_seed = static_cast<std::uint64_t>(c);
        SimulationConfig scaled = base;
        double factor = 1.0 + 0.5 * (c % 7);
        for (auto& r : scaled.instance.resources) r.revenue *= factor;
        auto a = run_episode(base, 0).first;
        auto b = run_episode(scaled, 0).first;
        for (size_t t = 0; t < a.periods.size(); ++t)
            if (a.periods[t].resource != b.periods[t].resource) ++fail_scale;
    }

    // Seed determinism down to the CSV bytes.
    int cases_seed = 0, fail_seed = 0;
    for (int c = 0; c < 200; ++c, ++cases_seed) {
        ExperimentSpec spec;
        spec.base = make_preset(c % 2 == 0 ? "iid" : "adv1",
                                PresetOptions{30, false, static_cast<std::uint64_t>(c)});
        spec.base.replications = 1;
        spec.base.base_seed = static_cast<std::uint64_t>(c);
        spec.policies = {PolicyKind::Ulwe, PolicyKind::AlgAdv};
        std::vector<ReplicationSummary> first, second;
        for (PolicyKind p : spec.policies) {
            SimulationConfig cfg = spec.base;
            cfg.policy = p;
            first.push_back(replicate(cfg));
            second.push_back(replicate(cfg));
        }
        if (regret_csv(first) != regret_csv(second) ||
            allocations_csv(first) != allocations_csv(second))
            ++fail_seed;
    }

    int failures = fail_psi + fail_omega + fail_cap + fail_scale + fail_seed;
    double secs = clock.seconds();
    std::snprintf(buffer, sizeof(buffer),
                  "invariant suites: psi %d/%d, omega-monotone %d/%d, capacity %d/%d, "
                  "scale-invariance %d/%d, seed-determinism %d/%d",
                  cases_psi - fail_psi, cases_psi, cases_omega - fail_omega, cases_omega,
                  cases_cap - fail_cap, cases_cap, cases_scale - fail_scale, cases_scale,
                  cases_seed - fail_seed, cases_seed);
    report(8, failures == 0, buffer, secs);
}

} // namespace

int main() {
    criterion_1();
    criterion_2();

    Clock iid_clock;
    SimulationConfig iid = make_preset("iid", PresetOptions{500, false, kSeed});
    iid.replications = 100;
    iid.base_seed = kSeed;
    IidRuns runs = criterion_3(iid);
    double iid_secs = iid_clock.seconds();

    criterion_4();
    criterion_5(runs, iid_secs);
    criterion_6(runs, iid_secs);
    criterion_7(runs);
    criterion_8();

    if (g_failures == 0) std::printf("all acceptance criteria passed\n");
    else std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures;
}
