#include "rohm/impedance.hpp"

namespace rohm {

FrequencyGrid make_grid(double f_start_hz, double f_stop_hz, int n_points) {
    if (!(f_start_hz > 0.0) || !(f_start_hz < f_stop_hz) || n_points < 2)
        throw config_error("invalid-grid", "need 0 < f_start < f_stop and n_points >= 2");
    return FrequencyGrid{f_start_hz, f_stop_hz, n_points};
}

CellImpedanceParams cell_params(const CellCoord& coord, uint64_t model_seed) {
    uint64_t h = mix64(model_seed);
    h = mix64(h ^ uint64_t(uint32_t(coord.clb_x)));
    h = mix64(h ^ uint64_t(uint32_t(coord.clb_y)));
    h = mix64(h ^ uint64_t(uint32_t(coord.slice)));
    h = mix64(h ^ uint64_t(uint32_t(coord.ff)));
    h = mix64(h ^ uint64_t(uint32_t(coord.route_variant)));

    auto unit = [](uint64_t x) { return double(x >> 11) * 0x1.0p-53; };
    double u_f = unit(h);
    double u_l = unit(mix64(h + 1));
    double u_r = unit(mix64(h + 2));
    double u_d = unit(mix64(h + 3));

    CellImpedanceParams p;
    p.f_res = 1e9 + 2e9 * u_f;
    p.l = 1.5e-7 + 1.0e-7 * u_l;
    double w = 2.0 * M_PI * p.f_res;
    p.c0 = 1.0 / (w * w * p.l);
    p.r = 0.25 + 0.55 * u_r;
    p.delta_c = p.c0 * (0.005 + 0.015 * u_d);
    return p;
}

cplx cell_admittance(const CellImpedanceParams& p, double f_hz, bool bit) {
    double w = 2.0 * M_PI * f_hz;
    double c = bit ? p.c0 + p.delta_c : p.c0;
    cplx z_branch(p.r, w * p.l - 1.0 / (w * c));
    return 1.0 / z_branch;
}

static cplx point_impedance(const FabricState& state,
                            const std::vector<CellImpedanceParams>& params, double f_hz) {
    cplx y = 1.0 / cplx(kBaselineOhm, 0.0);
    for (std::size_t i = 0; i < params.size(); ++i)
        y += cell_admittance(params[i], f_hz, state.bits[i] != 0);
    return 1.0 / y;
}

ComplexSweep chip_impedance(const FabricState& state, const FrequencyGrid& grid,
                            uint64_t model_seed) {
    if (state.bits.size() != state.placement.size())
        throw config_error("state-mismatch", "bit vector length != placement size");
    std::vector<CellImpedanceParams> params(state.placement.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i] = cell_params(state.placement.assignment[i], model_seed);

    ComplexSweep sweep;
    sweep.grid = grid;
    sweep.values.resize(grid.n_points);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < grid.n_points; ++k)
        sweep.values[k] = point_impedance(state, params, grid.freq_at(k));
    return sweep;
}

namespace ref {
ComplexSweep chip_impedance(const FabricState& state, const FrequencyGrid& grid,
                            uint64_t model_seed) {
    ComplexSweep sweep;
    sweep.grid = grid;
    sweep.values.resize(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k) {
        double f = grid.freq_at(k);
        cplx y = 1.0 / cplx(kBaselineOhm, 0.0);
        for (std::size_t i = 0; i < state.placement.size(); ++i) {
            CellImpedanceParams p = cell_params(state.placement.assignment[i], model_seed);
            y += cell_admittance(p, f, state.bits[i] != 0);
        }
        sweep.values[k] = 1.0 / y;
    }
    return sweep;
}
} // namespace ref

cplx z_to_s11(cplx z, double z0) {
    if (std::abs(z + cplx(z0, 0.0)) == 0.0)
        throw data_error("singular-s11", "z equals -z0");
    return (z - z0) / (z + z0);
}

cplx s11_to_z(cplx s11, double z0) {
    if (std::abs(cplx(1.0, 0.0) - s11) == 0.0)
        throw data_error("singular-z", "s11 equals 1");
    return z0 * (1.0 + s11) / (1.0 - s11);
}

ImpedanceTrace true_phase(const FabricState& state, const FrequencyGrid& grid,
                          uint64_t model_seed) {
    ComplexSweep z = chip_impedance(state, grid, model_seed);
    ImpedanceTrace tr;
    tr.grid = grid;
    tr.phase_deg.resize(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k)
        tr.phase_deg[k] = std::arg(z.values[k]) * 180.0 / M_PI;
    return tr;
}

ImpedanceTrace measure(const FabricState& state, const VnaConfig& vna, uint64_t model_seed,
                       RngStream rng) {
    ComplexSweep z = chip_impedance(state, vna.grid, model_seed);
    if (vna.averaging < 1)
        throw config_error("invalid-vna", "averaging must be >= 1");
    double sigma = vna.noise_sigma / std::sqrt(double(vna.averaging));
    ImpedanceTrace tr;
    tr.grid = vna.grid;
    tr.phase_deg.resize(vna.grid.n_points);
    for (int k = 0; k < vna.grid.n_points; ++k) {
        cplx s = z_to_s11(z.values[k], vna.z0);
        auto [g1, g2] = rng.next_gaussian_pair();
        cplx noisy = s + cplx(sigma * g1, sigma * g2);
        if (noisy == cplx(1.0, 0.0)) {
            auto [h1, h2] = rng.next_gaussian_pair();
            noisy = s + cplx(sigma * h1, sigma * h2);
        }
        tr.phase_deg[k] = std::arg(s11_to_z(noisy, vna.z0)) * 180.0 / M_PI;
    }
    return tr;
}

} // namespace rohm
