#pragma once

#include "rohm/error.hpp"
#include "rohm/fabric.hpp"
#include "rohm/rng.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace rohm {

struct Lfsr {
    int width;
    std::set<int> taps; // Fibonacci form, positions 1..width
    uint64_t state;     // nonzero
};

// Documented maximal-length taps for the widths the tests enumerate.
Lfsr make_lfsr(int width, uint64_t seed_state);

// One Fibonacci step: output = XOR of tapped bits, output shifted in at the top.
std::pair<int, Lfsr> lfsr_next(const Lfsr& l);

std::vector<uint16_t> random_permutation(RngStream& rng, std::size_t n);

// Picks the instance that holds the data; all others are cleared to state 0.
std::pair<int, Lfsr> slice_mux_select(const Lfsr& l, int n_instances);

struct MtdPolicy {
    int slice_mux = 0;          // 0 = off, else number of instances
    bool seq_mux = false;
    bool randomized_pr = false;
    int pr_rate = 1;
    uint64_t seed = 0;
    ConstraintLimits limits;

    bool enabled() const { return slice_mux > 0 || seq_mux || randomized_pr; }
};

struct BitstreamRecord {
    uint16_t bit_index;
    uint8_t x, y, slice, ff, variant;
    bool operator==(const BitstreamRecord&) const = default;
};

constexpr uint8_t kBitstreamVersion = 1;

struct PartialBitstream {
    uint8_t version = kBitstreamVersion;
    uint8_t region_id = 0;
    std::vector<BitstreamRecord> records;
    std::optional<std::vector<uint16_t>> perm;

    bool operator==(const PartialBitstream&) const = default;
};

struct PrResult {
    Placement placement;
    PartialBitstream bitstream;
    double entropy_bits; // log2 of the realized configuration space
};

// Draws a fresh randomized placement and/or load permutation under the
// policy limits and encodes the diff from base as a one-time bitstream.
PrResult generate_pr(const MtdPolicy& policy, const FabricGeometry& geometry,
                     const Placement& base, uint8_t region_id, RngStream rng);

// Applies the bitstream to the state: placement records rewrite cell
// coordinates, the permutation becomes the active load transform, and
// the logical bit values are carried across unchanged.
FabricState apply_pr(const FabricState& state, const PartialBitstream& bs,
                     const ConstraintLimits& limits);

bool should_trigger(uint64_t encryption_counter, int pr_rate);

struct OverheadEntry {
    int pr_rate;
    double delay_ms;
    double clb_factor;
    bool extrapolated = false;
};

enum class OverheadMode { Table, Formula };

OverheadEntry overhead(int pr_rate, OverheadMode mode = OverheadMode::Table);

// Table 1's NO-LOC row: number of reconfigurable-module location options
// per rate; carried as metadata only.
int no_loc_options(int pr_rate);

std::vector<uint8_t> serialize_bs(const PartialBitstream& bs);
PartialBitstream parse_bs(const std::vector<uint8_t>& bytes);

} // namespace rohm
