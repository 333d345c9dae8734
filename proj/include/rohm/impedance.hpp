#pragma once

#include "rohm/error.hpp"
#include "rohm/fabric.hpp"
#include "rohm/rng.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace rohm {

using cplx = std::complex<double>;

struct FrequencyGrid {
    double f_start_hz = 2e9;
    double f_stop_hz = 3e9;
    int n_points = 500;

    double freq_at(int i) const {
        return f_start_hz + (f_stop_hz - f_start_hz) * double(i) / double(n_points - 1);
    }
    bool operator==(const FrequencyGrid&) const = default;
};

FrequencyGrid make_grid(double f_start_hz, double f_stop_hz, int n_points);

// Baseline PDN seen with nothing placed.
constexpr double kBaselineOhm = 50.0;

// Per-cell branch: series r-l-c hanging off the PDN. The stored bit adds
// delta_c to the branch capacitance, detuning the branch resonance
// f_res = 1/(2*pi*sqrt(l*c0)).
struct CellImpedanceParams {
    double r;       // ohm
    double l;       // henry
    double c0;      // farad, state-0 capacitance
    double delta_c; // farad, extra capacitance at state 1
    double f_res;   // hz, derived

    // half-power half-width of the resonance feature as seen at the chip
    // port; the baseline load, not the branch resistance, dominates it
    double bandwidth_hz() const { return (kBaselineOhm + r) / (4.0 * M_PI * l); }
};

struct ComplexSweep {
    FrequencyGrid grid;
    std::vector<cplx> values;
};

struct ImpedanceTrace {
    FrequencyGrid grid;
    std::vector<double> phase_deg;
};

struct VnaConfig {
    FrequencyGrid grid;
    double z0 = 50.0;
    int averaging = 200;
    double noise_sigma = 5e-4; // per-single-shot std on each S11 component
    double if_bandwidth_hz = 500.0; // informational only
};

// Deterministic per-cell parameter synthesis from (coord, model_seed).
CellImpedanceParams cell_params(const CellCoord& coord, uint64_t model_seed);

cplx cell_admittance(const CellImpedanceParams& p, double f_hz, bool bit);

ComplexSweep chip_impedance(const FabricState& state, const FrequencyGrid& grid,
                            uint64_t model_seed);

cplx z_to_s11(cplx z, double z0);
cplx s11_to_z(cplx s11, double z0);

// Noiseless phase trace (pure function of the state).
ImpedanceTrace true_phase(const FabricState& state, const FrequencyGrid& grid,
                          uint64_t model_seed);

// Noisy VNA sweep: Z -> S11 -> complex Gaussian noise with per-component
// std noise_sigma/sqrt(averaging) -> Z -> phase in degrees.
ImpedanceTrace measure(const FabricState& state, const VnaConfig& vna, uint64_t model_seed,
                       RngStream rng);

namespace ref {
// Serial reference sweep, kept deliberately naive for kernel testing.
ComplexSweep chip_impedance(const FabricState& state, const FrequencyGrid& grid,
                            uint64_t model_seed);
} // namespace ref

} // namespace rohm
