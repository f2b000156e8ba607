#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kbsim/lp.hpp"
#include "kbsim/rng.hpp"
#include "kbsim/simulate.hpp"
#include "lp_oracle.hpp"

using namespace kbsim;

namespace {

// One resource with a single candidate whose logit on the lone context is z,
// plus the reject arm.
ProblemInstance one_resource_instance(double lambda, double revenue, double capacity, double z) {
    ProblemInstance inst;
    inst.contexts = {{0, {1.0}}};
    ResourceSpec r;
    r.revenue = revenue;
    r.capacity = capacity;
    r.theta_space = {{z}};
    r.true_theta = 0;
    inst.resources = {r};
    inst.horizon = static_cast<int>(lambda);
    inst.total_rates = {lambda};
    return inst;
}

ProblemInstance two_by_two_instance() {
    ProblemInstance inst;
    inst.contexts = {{0, {1.0, 0.0}}, {1, {0.0, 1.0}}};
    const std::vector<double> theta_star = {std::log(9.0), 0.0};
    for (double rev : {1.0, 1.5}) {
        ResourceSpec r;
        r.revenue = rev;
        r.capacity = 250.0;
        r.theta_space = {theta_star};
        r.true_theta = 0;
        inst.resources.push_back(r);
    }
    inst.horizon = 500;
    inst.total_rates = {300.0, 200.0};
    return inst;
}

} // namespace

TEST_CASE("simplex on hand LPs") {
    SUBCASE("single bound") {
        LinearProgram lp;
        lp.objective = {1.0};
        lp.rows = {{1.0}};
        lp.senses = {ConstraintSense::LessEqual};
        lp.rhs = {3.0};
        LpSolution s = solve(lp);
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(s.objective_value == doctest::Approx(3.0).epsilon(1e-10));
        CHECK(s.values[0] == doctest::Approx(3.0).epsilon(1e-10));
    }
    SUBCASE("degenerate optimal face") {
        LinearProgram lp;
        lp.objective = {1.0, 1.0};
        lp.rows = {{1.0, 1.0}, {1.0, 0.0}};
        lp.senses = {ConstraintSense::LessEqual, ConstraintSense::LessEqual};
        lp.rhs = {1.0, 0.4};
        LpSolution s = solve(lp);
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(s.objective_value == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("infeasible reported via status") {
        LinearProgram lp;
        lp.objective = {1.0};
        lp.rows = {{1.0}, {1.0}};
        lp.senses = {ConstraintSense::LessEqual, ConstraintSense::Equal};
        lp.rhs = {1.0, 2.0};
        CHECK(solve(lp).status == LpStatus::Infeasible);
    }
    SUBCASE("negative rhs round trips through phase one") {
        // x >= 1 written as x <= -1 on the negated axis, optimum at the bound.
        LinearProgram lp;
        lp.objective = {-1.0};
        lp.rows = {{-1.0}};
        lp.senses = {ConstraintSense::LessEqual};
        lp.rhs = {-1.0};
        LpSolution s = solve(lp);
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(s.values[0] == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("unbounded reported via status") {
        LinearProgram lp;
        lp.objective = {1.0, 0.0};
        lp.rows = {{0.0, 1.0}};
        lp.senses = {ConstraintSense::LessEqual};
        lp.rhs = {1.0};
        CHECK(solve(lp).status == LpStatus::Unbounded);
    }
}

TEST_CASE("simplex matches the BFS enumeration oracle on random instances") {
    RngStream rng(20240517);
    int mismatches = 0;
    for (int c = 0; c < 1000; ++c) {
        LinearProgram lp = testing::random_small_lp(rng);
        if (!testing::oracle_agrees(lp)) ++mismatches;
        LpSolution s = solve(lp);
        if (s.status == LpStatus::Optimal) {
            // Solution invariants: near-feasible, near-nonnegative.
            for (double v : s.values) CHECK(v >= -1e-10);
            for (int r = 0; r < lp.num_rows(); ++r) {
                double lhs = 0.0;
                for (int cv = 0; cv < lp.num_vars(); ++cv)
                    lhs += lp.rows[r][cv] * s.values[cv];
                if (lp.senses[r] == ConstraintSense::LessEqual)
                    CHECK(lhs <= lp.rhs[r] + 1e-8);
                else
                    CHECK(lhs == doctest::Approx(lp.rhs[r]).epsilon(1e-8));
            }
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("optimistic allocation LP examples") {
    SUBCASE("capacity slack routes everything to the paying arm") {
        ProblemInstance inst = one_resource_instance(10.0, 1.0, 10.0, 0.0); // f = 0.5
        AllocationLp alp = build_optimistic_lp(inst, {{0}});
        LpSolution s = solve(alp.lp);
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(s.objective_value == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(s.values[alp.var(0, 0)] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(testing::enumerate_bfs_optimum(alp.lp).value() ==
              doctest::Approx(s.objective_value).epsilon(1e-9));
    }
    SUBCASE("binding capacity splits mass to the reject arm") {
        ProblemInstance inst = one_resource_instance(10.0, 1.0, 4.0, 40.0); // f ~ 1
        AllocationLp alp = build_optimistic_lp(inst, {{0}});
        LpSolution s = solve(alp.lp);
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(s.objective_value == doctest::Approx(4.0).epsilon(1e-8));
        CHECK(s.values[alp.var(0, 0)] == doctest::Approx(0.4).epsilon(1e-8));
        CHECK(s.values[alp.var(alp.reject_index(), 0)] == doctest::Approx(0.6).epsilon(1e-8));
        CHECK(testing::enumerate_bfs_optimum(alp.lp).value() ==
              doctest::Approx(s.objective_value).epsilon(1e-9));
    }
    SUBCASE("no reject arm and tight capacity is infeasible") {
        ProblemInstance inst = one_resource_instance(10.0, 1.0, 4.0, 40.0);
        inst.reject_arm_enabled = false;
        AllocationLp alp = build_optimistic_lp(inst, {{0}});
        CHECK(solve(alp.lp).status == LpStatus::Infeasible);
    }
}

TEST_CASE("optimistic objective is monotone in the candidate set") {
    RngStream rng(99);
    for (int c = 0; c < 60; ++c) {
        ProblemInstance inst;
        inst.contexts = {{0, {1.0, 0.0}}, {1, {0.0, 1.0}}};
        int n = 1 + static_cast<int>(rng.next_u64() % 2);
        for (int i = 0; i < n; ++i) {
            ResourceSpec r;
            r.revenue = 0.5 + rng.next_double() * 2.0;
            r.capacity = 1.0 + rng.next_double() * 50.0;
            int K = 2 + static_cast<int>(rng.next_u64() % 4);
            for (int k = 0; k < K; ++k)
                r.theta_space.push_back({rng.next_double() * 6 - 3, rng.next_double() * 6 - 3});
            r.true_theta = 0;
            inst.resources.push_back(r);
        }
        inst.horizon = 100;
        inst.total_rates = {60.0, 40.0};

        std::vector<std::vector<int>> full(static_cast<size_t>(n)), sub(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            int K = static_cast<int>(inst.resources[i].theta_space.size());
            for (int k = 0; k < K; ++k) full[i].push_back(k);
            for (int k = 0; k < K; ++k)
                if (rng.next_u64() % 2 == 0) sub[i].push_back(k);
            if (sub[i].empty()) sub[i].push_back(0);
        }
        double u_full = solve(build_optimistic_lp(inst, full).lp).objective_value;
        double u_sub = solve(build_optimistic_lp(inst, sub).lp).objective_value;
        CHECK(u_sub <= u_full + 1e-9);
    }
}

TEST_CASE("parameterized LP against the optimistic one") {
    ProblemInstance inst = two_by_two_instance();

    SUBCASE("singleton candidate sets coincide") {
        AllocationLp opt = build_optimistic_lp(inst, {{0}, {0}});
        AllocationLp par = build_param_lp(inst, {0, 0});
        CHECK(opt.lp.objective == par.lp.objective);
        CHECK(opt.lp.rhs == par.lp.rhs);
        CHECK(solve(opt.lp).objective_value ==
              doctest::Approx(solve(par.lp).objective_value).epsilon(1e-12));
    }
    SUBCASE("dominated coefficients never raise the objective") {
        ProblemInstance wide = inst;
        for (auto& r : wide.resources) r.theta_space.push_back({std::log(9.0) + 0.4, 0.3});
        double u = solve(build_optimistic_lp(wide, {{0, 1}, {0, 1}}).lp).objective_value;
        double lp_true = solve(build_param_lp(wide, {0, 0}).lp).objective_value;
        CHECK(lp_true <= u + 1e-9);
    }
    SUBCASE("two by two value matches the oracle") {
        AllocationLp par = build_param_lp(inst, {0, 0});
        LpSolution s = solve(par.lp);
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(testing::enumerate_bfs_optimum(par.lp).value() ==
              doctest::Approx(s.objective_value).epsilon(1e-8));
        CHECK(s.objective_value == doctest::Approx(495.0).epsilon(1e-9));

        // Assignment mass per type is exactly one, capacities respected.
        for (int j = 0; j < par.num_types; ++j) {
            double mass = 0.0;
            for (int i = 0; i < par.columns(); ++i) mass += s.values[par.var(i, j)];
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
        }
        for (int i = 0; i < par.num_resources; ++i) {
            double load = 0.0;
            for (int j = 0; j < par.num_types; ++j)
                load += par.lp.rows[i][par.var(i, j)] * s.values[par.var(i, j)];
            CHECK(load <= inst.resources[i].capacity + 1e-8);
        }
    }
}

TEST_CASE("deterministic benchmark") {
    ProblemInstance inst = two_by_two_instance();
    std::vector<std::vector<double>> rows(500, {0.6, 0.4});
    ArrivalSchedule sched = ArrivalSchedule::from_rows(rows, inst);

    SUBCASE("empty prefix is worth nothing") {
        CHECK(benchmark_jd(inst, sched, 0) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("full horizon value") {
        CHECK(benchmark_jd(inst, sched, 500) == doctest::Approx(495.0).epsilon(1e-6));
    }
    SUBCASE("monotone in the period") {
        double prev = -1.0;
        for (int t : {0, 50, 100, 250, 400, 500}) {
            double v = benchmark_jd(inst, sched, t);
            CHECK(v >= prev - 1e-9);
            prev = v;
        }
    }
    SUBCASE("monotone in capacity, saturating at the unconstrained sum") {
        double base = benchmark_jd(inst, sched, 500);
        ProblemInstance big = inst;
        for (auto& r : big.resources) r.capacity = 10000.0;
        double unconstrained = benchmark_jd(big, sched, 500);
        CHECK(unconstrained >= base - 1e-9);
        // Every arrival goes to the best revenue-probability product.
        double best_a = std::max(1.0 * 0.9, 1.5 * 0.9);
        double best_b = std::max(1.0 * 0.5, 1.5 * 0.5);
        CHECK(unconstrained == doctest::Approx(300.0 * best_a + 200.0 * best_b).epsilon(1e-8));
    }
    SUBCASE("matches the preset wiring") {
        SimulationConfig cfg = make_preset("iid");
        CHECK(benchmark_jd(cfg.instance, cfg.schedule(), 500) ==
              doctest::Approx(495.0).epsilon(1e-6));
    }
}
