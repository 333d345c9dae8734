// Benchmarks the OpenMP kernels against their serial reference paths.

#include "rohm/attacks.hpp"
#include "rohm/harness.hpp"
#include "rohm/target.hpp"

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

rohm::CampaignConfig bench_config(std::size_t n_traces) {
    rohm::CampaignConfig cfg;
    cfg.geometry = rohm::new_fabric(16, 16, 4, 8);
    cfg.scenario = rohm::Scenario::CimaDima;
    cfg.n_traces = n_traces;
    cfg.vna.grid = rohm::make_grid(2e9, 3e9, 500);
    cfg.key_byte = 0x2b;
    rohm::ConstraintLimits lim;
    lim.x_min = 2;
    lim.x_max = 5;
    lim.y_min = 2;
    lim.y_max = 5;
    lim.allowed_slices = {0, 1, 2, 3};
    lim.allowed_route_variants = {0, 1, 2, 3};
    cfg.regions.push_back(lim);
    cfg.campaign_seed = 42;
    cfg.model_seed = 7;
    return cfg;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (compiled without OpenMP)\n");
#endif
    rohm::CampaignConfig cfg = bench_config(1000);

    auto t0 = Clock::now();
    rohm::CaptureResult serial = rohm::ref::capture(cfg);
    double t_serial_cap = seconds_since(t0);

    t0 = Clock::now();
    rohm::CaptureResult par = rohm::capture(cfg, true);
    double t_par_cap = seconds_since(t0);
    bool same = serial.traces.traces == par.traces.traces;
    std::printf("capture  %zu traces x %zu pts: serial %.3fs, parallel %.3fs (%s)\n",
                serial.traces.n_traces, serial.traces.n_points, t_serial_cap, t_par_cap,
                same ? "bit-identical" : "MISMATCH");

    t0 = Clock::now();
    auto ref_mat = rohm::ref::cima_matrix(par.traces);
    double t_ref = seconds_since(t0);
    t0 = Clock::now();
    rohm::AttackReport rep = rohm::cima(par.traces, cfg.key_byte);
    double t_fast = seconds_since(t0);
    double worst = 0.0;
    for (int k = 0; k < 256; ++k)
        for (std::size_t f = 0; f < par.traces.n_points; ++f)
            worst = std::max(worst, std::abs(ref_mat[k][f] - rep.statistic_matrix[k][f]));
    std::printf("cima     256 x %zu pts:         reference %.3fs, kernel %.3fs (max dev %.2e)\n",
                par.traces.n_points, t_ref, t_fast, worst);

    t0 = Clock::now();
    auto ref_dm = rohm::ref::dima_matrix(par.traces, nullptr);
    double t_ref_d = seconds_since(t0);
    t0 = Clock::now();
    rohm::AttackReport rep_d = rohm::dima(par.traces, cfg.key_byte);
    double t_fast_d = seconds_since(t0);
    worst = 0.0;
    for (int k = 0; k < 256; ++k)
        for (std::size_t f = 0; f < par.traces.n_points; ++f)
            worst = std::max(worst, std::abs(ref_dm[k][f] - rep_d.statistic_matrix[k][f]));
    std::printf("dima     256 x %zu pts:         reference %.3fs, kernel %.3fs (max dev %.2e)\n",
                par.traces.n_points, t_ref_d, t_fast_d, worst);
    return 0;
}
