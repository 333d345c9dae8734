#include "rohm/mtd.hpp"
#include "rohm/target.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <unordered_set>

namespace rohm {

Lfsr make_lfsr(int width, uint64_t seed_state) {
    static const std::map<int, std::set<int>> kMaximalTaps = {
        {4, {4, 3}},
        {8, {8, 6, 5, 4}},
        {16, {16, 15, 13, 4}},
    };
    auto it = kMaximalTaps.find(width);
    if (it == kMaximalTaps.end())
        throw config_error("unsupported-lfsr-width", "no documented taps for this width");
    uint64_t mask = (width == 64) ? ~0ull : ((1ull << width) - 1);
    uint64_t st = seed_state & mask;
    if (st == 0)
        throw config_error("degenerate-lfsr", "LFSR state must be nonzero");
    return Lfsr{width, it->second, st};
}

std::pair<int, Lfsr> lfsr_next(const Lfsr& l) {
    if (l.state == 0)
        throw data_error("degenerate-lfsr", "LFSR state is zero");
    // right-shift Fibonacci form: tap position t reads bit (width - t), so
    // the outgoing bit 0 (tap = width) always feeds back
    int out = 0;
    for (int t : l.taps)
        out ^= int((l.state >> (l.width - t)) & 1);
    Lfsr next = l;
    next.state = (l.state >> 1) | (uint64_t(out) << (l.width - 1));
    return {out, next};
}

std::vector<uint16_t> random_permutation(RngStream& rng, std::size_t n) {
    std::vector<uint16_t> perm(n);
    for (std::size_t i = 0; i < n; ++i)
        perm[i] = uint16_t(i);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = rng.next_below(i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::pair<int, Lfsr> slice_mux_select(const Lfsr& l, int n_instances) {
    if (n_instances < 1)
        throw config_error("invalid-instances", "need n_instances >= 1");
    if (n_instances == 1)
        return {0, l};
    int bits = 0;
    while ((1 << bits) < n_instances)
        ++bits;
    Lfsr cur = l;
    for (;;) {
        int v = 0;
        for (int b = 0; b < bits; ++b) {
            auto [bit, next] = lfsr_next(cur);
            v = (v << 1) | bit;
            cur = next;
        }
        if (v < n_instances)
            return {v, cur};
    }
}

namespace {

std::int64_t site_key(const FabricGeometry& g, const CellCoord& c) {
    return ((std::int64_t(c.clb_y) * g.width + c.clb_x) * g.slices_per_clb + c.slice) *
               g.ffs_per_slice +
           c.ff;
}

} // namespace

PrResult generate_pr(const MtdPolicy& policy, const FabricGeometry& geometry,
                     const Placement& base, uint8_t region_id, RngStream rng) {
    const std::size_t n = base.size();
    if (n > 0xffff)
        throw config_error("too-many-bits", "bitstream format limits regions to 65535 bits");

    PrResult out;
    out.placement = base;
    out.bitstream.region_id = region_id;
    out.entropy_bits = 0.0;

    if (policy.randomized_pr) {
        const ConstraintLimits& lim = policy.limits;
        if (std::int64_t(n) > lim.site_capacity(geometry))
            throw config_error("capacity", "limits too small for protected bits");

        std::vector<int> slices(lim.allowed_slices.begin(), lim.allowed_slices.end());
        std::vector<int> variants(lim.allowed_route_variants.begin(),
                                  lim.allowed_route_variants.end());
        std::int64_t sites = lim.site_capacity(geometry);
        std::int64_t cells = sites * std::int64_t(variants.size());

        auto cell_at = [&](std::int64_t idx) {
            int variant = variants[idx % variants.size()];
            std::int64_t s = idx / variants.size();
            int ff = int(s % geometry.ffs_per_slice);
            s /= geometry.ffs_per_slice;
            int slice = slices[s % slices.size()];
            s /= slices.size();
            int x = lim.x_min + int(s % (lim.x_max - lim.x_min + 1));
            int y = lim.y_min + int(s / (lim.x_max - lim.x_min + 1));
            return CellCoord{x, y, slice, ff, variant};
        };

        std::unordered_set<std::int64_t> used;
        for (std::size_t i = 0; i < n; ++i) {
            CellCoord c;
            do {
                c = cell_at(std::int64_t(rng.next_below(uint64_t(cells))));
            } while (!used.insert(site_key(geometry, c)).second);
            out.placement.assignment[i] = c;
        }
        // entropy of an ordered injective draw: log2(sites!/(sites-n)!) plus
        // the independent variant choices
        for (std::size_t i = 0; i < n; ++i)
            out.entropy_bits += std::log2(double(sites - std::int64_t(i)));
        out.entropy_bits += double(n) * std::log2(double(variants.size()));
    }

    for (std::size_t i = 0; i < n; ++i) {
        const CellCoord& c = out.placement.assignment[i];
        if (!(c == base.assignment[i]))
            out.bitstream.records.push_back(BitstreamRecord{
                uint16_t(i), uint8_t(c.clb_x), uint8_t(c.clb_y), uint8_t(c.slice),
                uint8_t(c.ff), uint8_t(c.route_variant)});
    }

    if (policy.seq_mux) {
        out.bitstream.perm = random_permutation(rng, n);
        out.entropy_bits += std::lgamma(double(n) + 1.0) / std::log(2.0);
    }
    return out;
}

FabricState apply_pr(const FabricState& state, const PartialBitstream& bs,
                     const ConstraintLimits& limits) {
    FabricState next = state;
    std::vector<uint8_t> logical = read_back(state);

    for (const auto& rec : bs.records) {
        if (rec.bit_index >= next.placement.size())
            throw data_error("malformed-bitstream", "record bit index out of range");
        next.placement.assignment[rec.bit_index] =
            CellCoord{rec.x, rec.y, rec.slice, rec.ff, rec.variant};
    }
    auto violations = validate_placement(next.placement, next.geometry, limits);
    if (!violations.empty())
        throw data_error("malformed-bitstream",
                         "resulting placement invalid: " + violations.front().detail);

    if (bs.perm) {
        const auto& perm = *bs.perm;
        if (perm.size() != next.placement.size())
            throw data_error("malformed-bitstream", "permutation size mismatch");
        next.load_perm = perm;
    } else {
        next.load_perm.reset();
    }
    return load_target(next, logical);
}

bool should_trigger(uint64_t encryption_counter, int pr_rate) {
    if (pr_rate < 1)
        throw config_error("invalid-pr-rate", "pr_rate must be >= 1");
    return encryption_counter % uint64_t(pr_rate) == 0;
}

namespace {

struct TableRow {
    int rate;
    double delay_ms; // < 0 means not printed
    double clb;
};

const TableRow kOverheadTable[] = {
    {1, 0.893, 1.00}, {2, 0.446, 1.09},  {4, 0.226, 1.12},  {8, 0.118, 1.14},
    {16, 0.063, 1.20}, {32, 0.032, 1.25}, {64, 0.016, 1.29}, {128, -1.0, 1.32},
};

} // namespace

OverheadEntry overhead(int pr_rate, OverheadMode mode) {
    if (pr_rate < 1)
        throw config_error("invalid-pr-rate", "pr_rate must be >= 1");
    if (mode == OverheadMode::Table) {
        for (const auto& row : kOverheadTable) {
            if (row.rate == pr_rate) {
                if (row.delay_ms < 0)
                    throw config_error("out-of-table",
                                       "delay for rate 128 is not in the table");
                return OverheadEntry{pr_rate, row.delay_ms, row.clb, false};
            }
        }
        throw config_error("out-of-table", "rate not in the overhead table");
    }

    OverheadEntry e;
    e.pr_rate = pr_rate;
    e.delay_ms = 0.893 / double(pr_rate);
    double lr = std::log2(double(pr_rate));
    const int last = std::size(kOverheadTable) - 1;
    if (pr_rate >= kOverheadTable[last].rate) {
        double slope = (kOverheadTable[last].clb - kOverheadTable[last - 1].clb);
        e.clb_factor = kOverheadTable[last].clb + slope * (lr - std::log2(128.0));
        e.extrapolated = pr_rate > kOverheadTable[last].rate;
    } else {
        int i = 0;
        while (kOverheadTable[i + 1].rate <= pr_rate)
            ++i;
        double l0 = std::log2(double(kOverheadTable[i].rate));
        double l1 = std::log2(double(kOverheadTable[i + 1].rate));
        double t = (lr - l0) / (l1 - l0);
        e.clb_factor = kOverheadTable[i].clb + t * (kOverheadTable[i + 1].clb -
                                                    kOverheadTable[i].clb);
    }
    bool table_rate = false;
    for (const auto& row : kOverheadTable)
        table_rate |= row.rate == pr_rate;
    if (!table_rate || pr_rate == 128)
        e.extrapolated = true;
    return e;
}

int no_loc_options(int pr_rate) {
    // Table 1 NO-LOC row: 0 at rate 1 (plain AES), then equal to the rate.
    if (pr_rate < 1)
        throw config_error("invalid-pr-rate", "pr_rate must be >= 1");
    return pr_rate == 1 ? 0 : pr_rate;
}

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(uint8_t(v & 0xff));
    out.push_back(uint8_t(v >> 8));
}

uint16_t get_u16(const std::vector<uint8_t>& in, std::size_t pos) {
    return uint16_t(in[pos]) | (uint16_t(in[pos + 1]) << 8);
}

} // namespace

std::vector<uint8_t> serialize_bs(const PartialBitstream& bs) {
    if (bs.records.size() > 0xffff)
        throw data_error("too-many-records", "record count exceeds u16");
    std::vector<uint8_t> out;
    out.insert(out.end(), {'R', 'O', 'H', 'M'});
    out.push_back(bs.version);
    out.push_back(bs.region_id);
    put_u16(out, uint16_t(bs.records.size()));
    out.push_back(bs.perm ? 1 : 0);
    for (const auto& r : bs.records) {
        put_u16(out, r.bit_index);
        out.push_back(r.x);
        out.push_back(r.y);
        out.push_back(r.slice);
        out.push_back(r.ff);
        out.push_back(r.variant);
    }
    if (bs.perm) {
        if (bs.perm->size() > 0xffff)
            throw data_error("perm-too-long", "permutation length exceeds u16");
        put_u16(out, uint16_t(bs.perm->size()));
        for (uint16_t v : *bs.perm)
            put_u16(out, v);
    }
    return out;
}

PartialBitstream parse_bs(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 9)
        throw data_error("parse:magic", "input shorter than the fixed header");
    if (std::memcmp(bytes.data(), "ROHM", 4) != 0)
        throw data_error("parse:magic", "bad magic");
    PartialBitstream bs;
    bs.version = bytes[4];
    if (bs.version != kBitstreamVersion)
        throw data_error("parse:version", "unsupported version");
    bs.region_id = bytes[5];
    uint16_t count = get_u16(bytes, 6);
    bool perm_present = bytes[8] != 0;
    std::size_t pos = 9;
    if (bytes.size() < pos + std::size_t(count) * 7)
        throw data_error("parse:records", "truncated record list");
    bs.records.reserve(count);
    for (uint16_t i = 0; i < count; ++i) {
        BitstreamRecord r;
        r.bit_index = get_u16(bytes, pos);
        r.x = bytes[pos + 2];
        r.y = bytes[pos + 3];
        r.slice = bytes[pos + 4];
        r.ff = bytes[pos + 5];
        r.variant = bytes[pos + 6];
        bs.records.push_back(r);
        pos += 7;
    }
    if (perm_present) {
        if (bytes.size() < pos + 2)
            throw data_error("parse:perm", "truncated permutation length");
        uint16_t plen = get_u16(bytes, pos);
        pos += 2;
        if (bytes.size() < pos + std::size_t(plen) * 2)
            throw data_error("parse:perm", "truncated permutation");
        std::vector<uint16_t> perm(plen);
        std::vector<bool> seen(plen, false);
        for (uint16_t i = 0; i < plen; ++i) {
            perm[i] = get_u16(bytes, pos);
            pos += 2;
            if (perm[i] >= plen || seen[perm[i]])
                throw data_error("parse:perm", "not a valid permutation");
            seen[perm[i]] = true;
        }
        bs.perm = std::move(perm);
    }
    if (pos != bytes.size())
        throw data_error("parse:trailing", "trailing bytes after bitstream");
    return bs;
}

} // namespace rohm
