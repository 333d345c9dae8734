#pragma once

#include "rohm/error.hpp"
#include "rohm/fabric.hpp"
#include "rohm/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace rohm {

uint8_t sbox(uint8_t b);
uint8_t first_round_intermediate(uint8_t p, uint8_t k);
int hamming_weight(uint8_t b);

struct MaskedKeyShares {
    int n_shares = 3;
    // shares[s] is a 16-byte share; XOR over s recovers the master key
    std::vector<std::array<uint8_t, 16>> shares;
};

MaskedKeyShares refresh_shares(const std::array<uint8_t, 16>& key, int n_shares,
                               RngStream rng);

// Writes logical_bits into the placed FFs through the active load transform
// (physical slot i receives logical bit perm[i]; identity when absent).
FabricState load_target(const FabricState& state, const std::vector<uint8_t>& logical_bits);

// Inverse of load_target's permutation: recovers the logical bit values.
std::vector<uint8_t> read_back(const FabricState& state);

std::vector<uint8_t> byte_to_bits(uint8_t b); // LSB first, 8 entries

} // namespace rohm
