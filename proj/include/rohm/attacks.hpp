#pragma once

#include "rohm/error.hpp"
#include "rohm/impedance.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rohm {

struct TraceSet {
    FrequencyGrid grid;
    std::size_t n_traces = 0;
    std::size_t n_points = 0;
    std::vector<float> traces;       // row-major N x F
    std::vector<uint8_t> plaintexts; // N entries (non-profiled scenarios)
    std::vector<uint8_t> bit_labels; // N x n_label_bits entries of 0/1 (profiled)
    std::size_t n_label_bits = 0;

    std::span<const float> row(std::size_t i) const {
        return {traces.data() + i * n_points, n_points};
    }
};

struct DmCurve {
    std::vector<double> values; // per frequency, >= 0
    std::size_t target_bit = 0;
};

struct BitTemplate {
    std::vector<double> mean0, mean1, pooled_var;
    std::vector<int> selected_points; // top-k frequency indices by DM
};

struct AttackReport {
    std::vector<std::vector<double>> statistic_matrix; // 256 x F
    int key_rank = 0;        // 1 = best
    uint8_t best_guess = 0;
    double max_true_stat = 0.0;
    double max_wrong_stat = 0.0;
    int degenerate_partitions = 0;
    std::vector<std::size_t> checkpoints;               // progressive runs only
    std::vector<std::vector<double>> progressive;       // checkpoints x 256
};

struct TimaResult {
    std::vector<BitTemplate> templates;
    std::vector<std::vector<uint8_t>> per_trace_guess; // bit x attack trace
    std::vector<double> per_bit_accuracy;
    std::vector<uint8_t> majority_guess;
};

double pearson(std::span<const double> x, std::span<const double> y);

DmCurve dm_curve(const TraceSet& ts, std::span<const uint8_t> labels, std::size_t bit_index);

std::vector<BitTemplate> tima_profile(const TraceSet& profiling, int k_points);

TimaResult tima_attack(const std::vector<BitTemplate>& templates, const TraceSet& attack);

enum class AttackMethod { Cima, Dima };

AttackReport cima(const TraceSet& ts, uint8_t true_key);
AttackReport dima(const TraceSet& ts, uint8_t true_key);

AttackReport progressive_leakage(const TraceSet& ts, AttackMethod method, uint8_t true_key,
                                 const std::vector<std::size_t>& checkpoints);

namespace ref {
// Naive serial statistics, kept as the reference the fast kernels are
// checked against.
double pearson(std::span<const double> x, std::span<const double> y);
std::vector<std::vector<double>> cima_matrix(const TraceSet& ts);
std::vector<std::vector<double>> dima_matrix(const TraceSet& ts, int* degenerate);
} // namespace ref

} // namespace rohm
