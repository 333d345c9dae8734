#pragma once

#include "rohm/attacks.hpp"
#include "rohm/fabric.hpp"
#include "rohm/impedance.hpp"
#include "rohm/mtd.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rohm {

enum class Scenario { CimaDima, Tima };

struct CampaignConfig {
    FabricGeometry geometry;
    Scenario scenario = Scenario::CimaDima;
    std::size_t n_traces = 0;
    VnaConfig vna;
    std::vector<ConstraintLimits> regions; // one per protected region (per share)
    MtdPolicy mtd;                          // mtd.limits is unused; regions[] apply
    bool mtd_enabled = false;
    uint8_t key_byte = 0;                   // cima_dima
    std::array<uint8_t, 16> key{};          // tima
    int n_shares = 3;                       // tima
    uint64_t campaign_seed = 1;
    uint64_t model_seed = 1;
};

CampaignConfig config_from_json(const std::string& text);
std::string config_to_json(const CampaignConfig& cfg);
CampaignConfig load_config(const std::string& path);

// Substream purposes for the (campaign_seed, trace_index, purpose) split.
enum RngPurpose : uint64_t {
    kRngPlaintext = 1,
    kRngShares = 2,
    kRngNoise = 3,
    kRngPr = 0x100, // + region index; keyed by trigger index, not trace index
};

struct CaptureResult {
    TraceSet traces;
    std::size_t pr_applications = 0;
    double last_entropy_bits = 0.0;
};

// Deterministic capture: identical output for the serial and the
// OpenMP-parallel path (every trace derives its own substreams, and the
// active placement is recomputed from the trace's trigger index).
CaptureResult capture(const CampaignConfig& cfg, bool parallel = true);

namespace ref {
CaptureResult capture(const CampaignConfig& cfg); // serial reference
} // namespace ref

// Archive layout: <dir>/meta.json, <dir>/traces.bin (LE float32, row-major
// N x F), <dir>/labels.bin (plaintext bytes, or bit-packed share labels).
void write_archive(const std::string& dir, const CampaignConfig& cfg,
                   const CaptureResult& result);

struct Archive {
    CampaignConfig config;
    TraceSet traces;
    std::size_t pr_applications = 0;
};

Archive read_archive(const std::string& dir);

uint64_t fnv1a64(const std::vector<uint8_t>& bytes);

// Scales vna.noise_sigma so the single-trace SNR at the leakiest frequency
// (signal variance across secret states over noise variance) hits target_snr.
double calibrate_noise_sigma(const CampaignConfig& cfg, double target_snr);

struct SweepRow {
    int rate;
    double delay_ms;
    double clb_factor;
    int true_key_rank;
    double max_true_correlation;
};

std::vector<SweepRow> sweep(const CampaignConfig& cfg, const std::vector<int>& rates);

} // namespace rohm
