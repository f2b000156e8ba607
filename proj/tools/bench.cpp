// Times the replication loop: serial reference vs the OpenMP path.
#include <chrono>
#include <cstdio>

#include "kbsim/simulate.hpp"

namespace {

double time_once(const kbsim::SimulationConfig& cfg, bool parallel, double* checksum) {
    auto start = std::chrono::steady_clock::now();
    kbsim::ReplicationSummary s =
        parallel ? kbsim::replicate(cfg) : kbsim::replicate_serial(cfg);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    *checksum = s.checkpoints.back().mean_regret;
    return secs;
}

} // namespace

int main(int argc, char** argv) {
    int reps = argc > 1 ? std::atoi(argv[1]) : 100;
    std::printf("preset iid, %d replications per policy\n", reps);
    std::printf("%-8s %12s %12s %9s  %s\n", "policy", "serial [s]", "openmp [s]", "speedup", "agree");
    for (kbsim::PolicyKind p :
         {kbsim::PolicyKind::AlgLp, kbsim::PolicyKind::AlgAdv, kbsim::PolicyKind::Ulwe}) {
        kbsim::SimulationConfig cfg = kbsim::make_preset("iid");
        cfg.replications = reps;
        cfg.policy = p;
        double serial_sum = 0.0, parallel_sum = 0.0;
        double t_serial = time_once(cfg, false, &serial_sum);
        double t_parallel = time_once(cfg, true, &parallel_sum);
        std::printf("%-8s %12.3f %12.3f %8.2fx  %s\n", kbsim::policy_name(p), t_serial, t_parallel,
                    t_serial / t_parallel, serial_sum == parallel_sum ? "yes" : "NO");
    }
    return 0;
}
