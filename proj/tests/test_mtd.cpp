#include "rohm/mtd.hpp"
#include "rohm/target.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

using namespace rohm;

namespace {

std::vector<uint8_t> read_golden(const std::string& name) {
    std::ifstream in(std::string(GOLDEN_DIR) + "/" + name, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

uint64_t lfsr_period(int width) {
    Lfsr l = make_lfsr(width, 1);
    uint64_t start = l.state;
    uint64_t period = 0;
    do {
        l = lfsr_next(l).second;
        ++period;
    } while (l.state != start);
    return period;
}

ConstraintLimits small_region(int n_slices = 4, int n_variants = 4) {
    ConstraintLimits lim;
    lim.x_min = 1;
    lim.x_max = 2;
    lim.y_min = 1;
    lim.y_max = 2;
    for (int s = 0; s < n_slices; ++s)
        lim.allowed_slices.insert(s);
    for (int v = 0; v < n_variants; ++v)
        lim.allowed_route_variants.insert(v);
    return lim;
}

} // namespace

TEST_CASE("maximal lfsr periods") {
    CHECK(lfsr_period(4) == 15);
    CHECK(lfsr_period(8) == 255);
    CHECK_THROWS_AS(make_lfsr(4, 0), Error);
    CHECK_THROWS_AS(make_lfsr(13, 1), Error);
}

TEST_CASE("permutation basics and uniformity") {
    RngStream rng(1);
    CHECK(random_permutation(rng, 0).empty());
    CHECK(random_permutation(rng, 1) == std::vector<uint16_t>{0});

    // chi-square over the 24 permutations of n=4
    std::map<std::vector<uint16_t>, int> counts;
    const int draws = 24000;
    for (int i = 0; i < draws; ++i) {
        RngStream r = RngStream::derive(77, uint64_t(i));
        counts[random_permutation(r, 4)]++;
    }
    CHECK(counts.size() == 24);
    double chi2 = 0;
    for (const auto& [perm, c] : counts) {
        double e = draws / 24.0;
        chi2 += (c - e) * (c - e) / e;
    }
    CHECK(chi2 < 49.728); // chi-square critical value, df=23, p=0.001
}

TEST_CASE("slice mux selection") {
    Lfsr l = make_lfsr(8, 0x5a);
    CHECK(slice_mux_select(l, 1).first == 0);

    std::array<int, 4> freq{};
    Lfsr cur = make_lfsr(8, 0x5a);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        auto [idx, next] = slice_mux_select(cur, 4);
        freq[idx]++;
        cur = next;
    }
    for (int k = 0; k < 4; ++k)
        CHECK(std::abs(freq[k] / double(draws) - 0.25) < 0.02);
}

TEST_CASE("generate_pr with everything off is a no-op") {
    FabricGeometry g = new_fabric(8, 8, 4, 8);
    ConstraintLimits lim = small_region();
    Placement base = default_placement(g, 8, lim);
    MtdPolicy policy;
    policy.limits = lim;
    PrResult res = generate_pr(policy, g, base, 0, RngStream(1));
    CHECK(res.bitstream.records.empty());
    CHECK(!res.bitstream.perm);
    CHECK(res.placement.assignment == base.assignment);
}

TEST_CASE("relocation into an exactly-sized region permutes its cells") {
    FabricGeometry g = new_fabric(8, 8, 4, 8);
    ConstraintLimits lim;
    lim.x_min = lim.x_max = 0;
    lim.y_min = lim.y_max = 0;
    lim.allowed_slices = {0};
    lim.allowed_route_variants = {0};
    Placement base = default_placement(g, 8, lim); // exactly the 8 FFs of slice 0
    MtdPolicy policy;
    policy.randomized_pr = true;
    policy.limits = lim;
    for (int rep = 0; rep < 50; ++rep) {
        PrResult res = generate_pr(policy, g, base, 0, RngStream::derive(5, uint64_t(rep)));
        std::set<int> ffs;
        for (const auto& c : res.placement.assignment) {
            CHECK(c.clb_x == 0);
            CHECK(c.slice == 0);
            ffs.insert(c.ff);
        }
        CHECK(ffs.size() == 8);
        CHECK(validate_placement(res.placement, g, lim).empty());
    }
}

TEST_CASE("seq_mux permutation entropy for 128 bits") {
    FabricGeometry g = new_fabric(16, 16, 4, 8);
    ConstraintLimits lim;
    lim.x_min = 0;
    lim.x_max = 0;
    lim.y_min = 0;
    lim.y_max = 3;
    lim.allowed_slices = {0, 1, 2, 3};
    lim.allowed_route_variants = {0};
    Placement base = default_placement(g, 128, lim);
    MtdPolicy policy;
    policy.seq_mux = true;
    policy.limits = lim;
    PrResult res = generate_pr(policy, g, base, 0, RngStream(9));
    REQUIRE(res.bitstream.perm);
    CHECK(res.bitstream.perm->size() == 128);
    std::set<uint16_t> vals(res.bitstream.perm->begin(), res.bitstream.perm->end());
    CHECK(vals.size() == 128);
    CHECK(res.entropy_bits == doctest::Approx(716.0).epsilon(0.01)); // log2(128!)
}

TEST_CASE("uniform relocation of a single bit") {
    FabricGeometry g = new_fabric(8, 8, 4, 8);
    ConstraintLimits lim;
    lim.x_min = lim.x_max = 3;
    lim.y_min = lim.y_max = 3;
    lim.allowed_slices = {0, 1};
    lim.allowed_route_variants = {0, 1};
    const int M = 2 * 8 * 2; // sites x variants
    Placement base = default_placement(g, 1, lim);
    MtdPolicy policy;
    policy.randomized_pr = true;
    policy.limits = lim;
    std::map<std::tuple<int, int, int>, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        PrResult res = generate_pr(policy, g, base, 0, RngStream::derive(17, uint64_t(i)));
        const auto& c = res.placement.assignment[0];
        counts[{c.slice, c.ff, c.route_variant}]++;
    }
    double p = 1.0 / M;
    double sigma = std::sqrt(draws * p * (1 - p));
    for (const auto& [cell, c] : counts)
        CHECK(std::abs(c - draws * p) <= 3 * sigma + 1);
    CHECK(counts.size() == M);
}

TEST_CASE("one-time property: generated bitstreams rarely repeat") {
    FabricGeometry g = new_fabric(8, 8, 4, 8);
    ConstraintLimits lim;
    lim.x_min = lim.x_max = 0;
    lim.y_min = lim.y_max = 1;
    lim.allowed_slices = {0, 1};
    lim.allowed_route_variants = {0};
    Placement base = default_placement(g, 8, lim); // 16 sites for 8 bits
    MtdPolicy policy;
    policy.randomized_pr = true;
    policy.seq_mux = true;
    policy.limits = lim;
    std::set<std::vector<uint8_t>> seen;
    int collisions = 0;
    for (int i = 0; i < 10000; ++i) {
        PrResult res = generate_pr(policy, g, base, 0, RngStream::derive(21, uint64_t(i)));
        if (!seen.insert(serialize_bs(res.bitstream)).second)
            ++collisions;
    }
    CHECK(collisions <= 1);
}

TEST_CASE("apply_pr") {
    FabricGeometry g = new_fabric(8, 8, 4, 8);
    ConstraintLimits lim = small_region();
    FabricState st;
    st.geometry = g;
    st.placement = default_placement(g, 8, lim);
    st.bits = {1, 1, 0, 1, 0, 0, 0, 1};

    SUBCASE("empty bitstream leaves the state unchanged") {
        FabricState out = apply_pr(st, PartialBitstream{}, lim);
        CHECK(out.placement.assignment == st.placement.assignment);
        CHECK(out.bits == st.bits);
    }
    SUBCASE("generated bitstream preserves the logical bits") {
        MtdPolicy policy;
        policy.randomized_pr = true;
        policy.seq_mux = true;
        policy.limits = lim;
        for (int rep = 0; rep < 100; ++rep) {
            PrResult res =
                generate_pr(policy, g, st.placement, 0, RngStream::derive(3, uint64_t(rep)));
            FabricState out = apply_pr(st, res.bitstream, lim);
            CHECK(read_back(out) == st.bits); // st has no load transform
            CHECK(validate_placement(out.placement, g, lim).empty());
        }
    }
    SUBCASE("colliding records are rejected") {
        PartialBitstream bs;
        bs.records.push_back({0, 1, 1, 0, 0, 0});
        bs.records.push_back({1, 1, 1, 0, 0, 1}); // same FF site, different variant
        CHECK_THROWS_AS(apply_pr(st, bs, lim), Error);
    }
}

TEST_CASE("trigger schedule") {
    for (uint64_t c = 0; c < 8; ++c)
        CHECK(should_trigger(c, 1));
    CHECK(should_trigger(0, 2));
    CHECK(!should_trigger(1, 2));
    CHECK(should_trigger(2, 2));
    CHECK(!should_trigger(3, 2));
    int n = 0;
    for (uint64_t c = 0; c < 32; ++c)
        n += should_trigger(c, 16);
    CHECK(n == 2);
    CHECK(should_trigger(16, 16));
}

TEST_CASE("overhead table and formula") {
    CHECK(overhead(1).delay_ms == 0.893);
    CHECK(overhead(1).clb_factor == 1.0);
    CHECK(overhead(16).delay_ms == 0.063);
    CHECK(overhead(16).clb_factor == 1.20);
    CHECK(overhead(64).delay_ms == 0.016);
    CHECK(overhead(64).clb_factor == 1.29);
    CHECK_THROWS_AS(overhead(3), Error);
    CHECK_THROWS_AS(overhead(128), Error); // delay not printed in the table

    OverheadEntry f = overhead(128, OverheadMode::Formula);
    CHECK(f.delay_ms == doctest::Approx(0.893 / 128));
    CHECK(f.clb_factor == doctest::Approx(1.32));
    CHECK(f.extrapolated);
    CHECK(overhead(3, OverheadMode::Formula).clb_factor > 1.09);
    CHECK(overhead(3, OverheadMode::Formula).clb_factor < 1.12);

    // monotone over the printed rows
    double prev_delay = 1e9, prev_clb = 0;
    for (int r : {1, 2, 4, 8, 16, 32, 64}) {
        OverheadEntry e = overhead(r);
        CHECK(e.delay_ms < prev_delay);
        CHECK(e.clb_factor >= prev_clb);
        prev_delay = e.delay_ms;
        prev_clb = e.clb_factor;
    }
    CHECK(no_loc_options(1) == 0);
    CHECK(no_loc_options(64) == 64);
}

TEST_CASE("bitstream golden files") {
    PartialBitstream empty;
    CHECK(serialize_bs(empty) == read_golden("bs_empty.bin"));

    PartialBitstream recs;
    recs.region_id = 2;
    recs.records.push_back({1, 3, 4, 2, 7, 1});
    recs.records.push_back({5, 0, 1, 3, 6, 0});
    CHECK(serialize_bs(recs) == read_golden("bs_records.bin"));

    PartialBitstream perm;
    perm.region_id = 1;
    perm.records.push_back({0, 2, 2, 1, 4, 3});
    perm.perm = std::vector<uint16_t>{2, 0, 3, 1};
    CHECK(serialize_bs(perm) == read_golden("bs_perm.bin"));

    CHECK(parse_bs(read_golden("bs_perm.bin")) == perm);
}

TEST_CASE("bitstream round trip over generated inputs") {
    FabricGeometry g = new_fabric(8, 8, 4, 8);
    ConstraintLimits lim = small_region();
    Placement base = default_placement(g, 8, lim);
    MtdPolicy policy;
    policy.randomized_pr = true;
    policy.seq_mux = true;
    policy.limits = lim;
    for (int i = 0; i < 1000; ++i) {
        PrResult res = generate_pr(policy, g, base, uint8_t(i & 0xff),
                                   RngStream::derive(31, uint64_t(i)));
        CHECK(parse_bs(serialize_bs(res.bitstream)) == res.bitstream);
    }
}

TEST_CASE("bitstream parser rejects malformed input") {
    PartialBitstream bs;
    bs.records.push_back({0, 1, 1, 0, 0, 0});
    bs.perm = std::vector<uint16_t>{1, 0};
    std::vector<uint8_t> good = serialize_bs(bs);

    auto expect_code = [](std::vector<uint8_t> bytes, const std::string& code) {
        try {
            parse_bs(bytes);
            FAIL_CHECK("expected parse error ", code);
        } catch (const Error& e) {
            CHECK(e.code() == code);
        }
    };

    std::vector<uint8_t> bad_magic = good;
    bad_magic[0] = 'X';
    expect_code(bad_magic, "parse:magic");

    std::vector<uint8_t> bad_version = good;
    bad_version[4] = 99;
    expect_code(bad_version, "parse:version");

    expect_code({'R', 'O', 'H'}, "parse:magic"); // truncated header

    std::vector<uint8_t> truncated_records(good.begin(), good.begin() + 12);
    expect_code(truncated_records, "parse:records");

    std::vector<uint8_t> truncated_perm(good.begin(), good.end() - 1);
    expect_code(truncated_perm, "parse:perm");

    std::vector<uint8_t> bad_perm = good;
    bad_perm[bad_perm.size() - 2] = 7; // index out of range for a 2-element perm
    expect_code(bad_perm, "parse:perm");

    std::vector<uint8_t> trailing = good;
    trailing.push_back(0);
    expect_code(trailing, "parse:trailing");
}
