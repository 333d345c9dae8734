#include "rohm/impedance.hpp"
#include "rohm/target.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace rohm;

namespace {

FabricState single_cell_state(const CellCoord& c, uint8_t bit) {
    FabricState st;
    st.geometry = new_fabric(16, 16, 4, 8);
    st.placement.assignment = {c};
    st.bits = {bit};
    return st;
}

} // namespace

TEST_CASE("cell_params determinism and variant sensitivity") {
    CellCoord c{3, 5, 1, 2, 0};
    auto p1 = cell_params(c, 7);
    auto p2 = cell_params(c, 7);
    CHECK(p1.r == p2.r);
    CHECK(p1.f_res == p2.f_res);

    CellCoord cv = c;
    cv.route_variant = 1;
    auto p3 = cell_params(cv, 7);
    CHECK(p1.r != p3.r);

    auto p4 = cell_params(c, 8);
    CHECK(p1.f_res != p4.f_res);
}

TEST_CASE("f_res distribution over the whole default fabric") {
    FabricGeometry g = new_fabric(16, 16, 4, 8);
    double mn = 1e18, mx = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            for (int s = 0; s < g.slices_per_clb; ++s)
                for (int f = 0; f < g.ffs_per_slice; ++f) {
                    auto p = cell_params(CellCoord{x, y, s, f, 0}, 7);
                    mn = std::min(mn, p.f_res);
                    mx = std::max(mx, p.f_res);
                    CHECK(p.c0 > 0);
                    CHECK(p.c0 + p.delta_c > 0);
                    CHECK(p.r > 0);
                    CHECK(p.l > 0);
                }
    CHECK(mn >= 1e9);
    CHECK(mx <= 3e9);
}

TEST_CASE("empty fabric gives the baseline impedance") {
    FabricState st;
    st.geometry = new_fabric(4, 4, 4, 8);
    ComplexSweep z = chip_impedance(st, make_grid(1e9, 3e9, 16), 7);
    for (auto v : z.values) {
        CHECK(v.real() == doctest::Approx(kBaselineOhm));
        CHECK(v.imag() == doctest::Approx(0.0));
    }
}

TEST_CASE("bit toggle peaks near the cell resonance") {
    FrequencyGrid grid = make_grid(1e9, 3e9, 4000);
    RngStream rng(5);
    int tested = 0;
    for (int rep = 0; rep < 100; ++rep) {
        CellCoord c{int(rng.next_below(16)), int(rng.next_below(16)), int(rng.next_below(4)),
                    int(rng.next_below(8)), int(rng.next_below(4))};
        auto p = cell_params(c, 7);
        // keep the window inside the measured band
        if (p.f_res < grid.f_start_hz + 3 * p.bandwidth_hz() ||
            p.f_res > grid.f_stop_hz - 3 * p.bandwidth_hz())
            continue;
        ++tested;
        ComplexSweep z0 = chip_impedance(single_cell_state(c, 0), grid, 7);
        ComplexSweep z1 = chip_impedance(single_cell_state(c, 1), grid, 7);
        double best = -1;
        int best_k = 0;
        for (int k = 0; k < grid.n_points; ++k) {
            double d = std::abs(z1.values[k] - z0.values[k]);
            if (d > best) {
                best = d;
                best_k = k;
            }
        }
        CHECK(best > 0);
        CHECK(std::abs(grid.freq_at(best_k) - p.f_res) <= 3 * p.bandwidth_hz());
    }
    CHECK(tested >= 50);
}

TEST_CASE("relocating a bit moves the difference peak in frequency") {
    FrequencyGrid grid = make_grid(1e9, 3e9, 4000);
    CellCoord a{2, 2, 0, 0, 0}, b{9, 12, 3, 5, 1};
    auto argmax_delta = [&](const CellCoord& c) {
        ComplexSweep z0 = chip_impedance(single_cell_state(c, 0), grid, 7);
        ComplexSweep z1 = chip_impedance(single_cell_state(c, 1), grid, 7);
        int best_k = 0;
        double best = -1;
        for (int k = 0; k < grid.n_points; ++k) {
            double d = std::abs(z1.values[k] - z0.values[k]);
            if (d > best) {
                best = d;
                best_k = k;
            }
        }
        return grid.freq_at(best_k);
    };
    double fa = argmax_delta(a), fb = argmax_delta(b);
    CHECK(std::abs(fa - fb) > 1e7);
}

TEST_CASE("eq-1 conversions") {
    CHECK(std::abs(z_to_s11({50, 0}, 50)) == doctest::Approx(0.0));
    CHECK(z_to_s11({1e12, 0}, 50).real() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(z_to_s11({150, 0}, 50).real() == doctest::Approx(0.5));
    CHECK(s11_to_z({0, 0}, 50).real() == doctest::Approx(50.0));
    CHECK(s11_to_z({0.5, 0}, 50).real() == doctest::Approx(150.0));
    CHECK_THROWS_AS(s11_to_z({1.0, 0}, 50), Error);
    CHECK_THROWS_AS(z_to_s11({-50.0, 0}, 50), Error);
}

TEST_CASE("eq-1 round trip and passivity over random impedances") {
    RngStream rng(11);
    for (int i = 0; i < 1000; ++i) {
        cplx z(1e-3 + 1e4 * rng.next_double(), 2e4 * (rng.next_double() - 0.5));
        cplx s = z_to_s11(z, 50.0);
        CHECK(std::abs(s) < 1.0);
        cplx back = s11_to_z(s, 50.0);
        CHECK(std::abs(back - z) <= 1e-12 * std::abs(z));
    }
}

TEST_CASE("chip impedance stays passive") {
    FrequencyGrid grid = make_grid(1e9, 3e9, 500);
    FabricState st;
    st.geometry = new_fabric(16, 16, 4, 8);
    RngStream rng(3);
    for (int i = 0; i < 24; ++i) {
        st.placement.assignment.push_back(CellCoord{int(rng.next_below(16)),
                                                    int(rng.next_below(16)),
                                                    int(rng.next_below(4)),
                                                    int(rng.next_below(8)),
                                                    int(rng.next_below(4))});
        st.bits.push_back(uint8_t(rng.next_bit()));
    }
    ComplexSweep z = chip_impedance(st, grid, 7);
    for (auto v : z.values) {
        CHECK(v.real() > 0.0);
        CHECK(std::abs(z_to_s11(v, 50.0)) < 1.0);
    }
    ComplexSweep zr = ref::chip_impedance(st, grid, 7);
    for (int k = 0; k < grid.n_points; ++k)
        CHECK(z.values[k] == zr.values[k]); // kernel matches the serial reference
}

TEST_CASE("noiseless measurement equals the true phase") {
    CellCoord c{4, 4, 1, 1, 0};
    FabricState st = single_cell_state(c, 1);
    VnaConfig vna;
    vna.grid = make_grid(1e9, 3e9, 64);
    vna.noise_sigma = 0.0;
    ImpedanceTrace m = measure(st, vna, 7, RngStream(1));
    ImpedanceTrace t = true_phase(st, vna.grid, 7);
    for (int k = 0; k < vna.grid.n_points; ++k) {
        CHECK(m.phase_deg[k] == doctest::Approx(t.phase_deg[k]).epsilon(1e-12));
        CHECK(m.phase_deg[k] > -180.0);
        CHECK(m.phase_deg[k] <= 180.0);
    }
}

TEST_CASE("averaging shrinks measurement noise by sqrt(averaging)") {
    CellCoord c{4, 4, 1, 1, 0};
    FabricState st = single_cell_state(c, 1);
    VnaConfig vna;
    vna.grid = make_grid(1.9e9, 2.1e9, 2);
    vna.noise_sigma = 1e-3;

    auto sample_std = [&](int averaging, uint64_t tag) {
        VnaConfig v = vna;
        v.averaging = averaging;
        double s = 0, q = 0;
        const int reps = 10000;
        for (int i = 0; i < reps; ++i) {
            ImpedanceTrace tr = measure(st, v, 7, RngStream::derive(123, uint64_t(i), tag));
            s += tr.phase_deg[0];
            q += tr.phase_deg[0] * tr.phase_deg[0];
        }
        return std::sqrt(q / reps - (s / reps) * (s / reps));
    };
    double s1 = sample_std(1, 1);
    double s200 = sample_std(200, 2);
    double ratio = s1 / s200;
    CHECK(ratio > std::sqrt(200.0) * 0.85);
    CHECK(ratio < std::sqrt(200.0) * 1.15);
}

TEST_CASE("measurement is deterministic in the rng stream") {
    CellCoord c{1, 2, 3, 4, 1};
    FabricState st = single_cell_state(c, 0);
    VnaConfig vna;
    vna.grid = make_grid(1e9, 3e9, 32);
    ImpedanceTrace a = measure(st, vna, 7, RngStream::derive(9, 0, 3));
    ImpedanceTrace b = measure(st, vna, 7, RngStream::derive(9, 0, 3));
    CHECK(a.phase_deg == b.phase_deg);
    ImpedanceTrace d = measure(st, vna, 7, RngStream::derive(9, 1, 3));
    CHECK(a.phase_deg != d.phase_deg);
}
