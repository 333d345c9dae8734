#pragma once

#include "rohm/error.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rohm {

constexpr int kDefaultRouteVariants = 4;

struct FabricGeometry {
    int width = 16;          // CLB columns
    int height = 16;         // CLB rows
    int slices_per_clb = 4;
    int ffs_per_slice = 8;
    int route_variants = kDefaultRouteVariants;

    std::int64_t ff_capacity() const {
        return std::int64_t(width) * height * slices_per_clb * ffs_per_slice;
    }
};

// One flip-flop site plus the active switch-box path feeding it.
struct CellCoord {
    int clb_x = 0;
    int clb_y = 0;
    int slice = 0;
    int ff = 0;
    int route_variant = 0;

    bool operator==(const CellCoord&) const = default;
    // site identity ignores the route variant (two bits on the same FF
    // collide regardless of routing)
    bool same_site(const CellCoord& o) const {
        return clb_x == o.clb_x && clb_y == o.clb_y && slice == o.slice && ff == o.ff;
    }
};

struct Placement {
    // assignment[i] is the cell holding logical bit i
    std::vector<CellCoord> assignment;

    std::size_t size() const { return assignment.size(); }
};

struct ConstraintLimits {
    int x_min = 0, x_max = 0;   // inclusive CLB rectangle
    int y_min = 0, y_max = 0;
    std::set<int> allowed_slices;
    std::set<int> allowed_route_variants;

    // number of distinct FF sites (route variants excluded)
    std::int64_t site_capacity(const FabricGeometry& g) const {
        return std::int64_t(x_max - x_min + 1) * (y_max - y_min + 1) *
               std::int64_t(allowed_slices.size()) * g.ffs_per_slice;
    }
};

struct FabricState {
    FabricGeometry geometry;
    Placement placement;
    std::vector<uint8_t> bits; // one 0/1 value per logical bit
    // active load transform: physical slot i holds logical bit load_perm[i]
    std::optional<std::vector<uint16_t>> load_perm;
};

struct PlacementViolation {
    enum Kind { OutOfRegion, DisallowedSlice, DisallowedVariant, Collision, OutOfFabric };
    Kind kind;
    std::size_t bit;
    std::string detail;
};

FabricGeometry new_fabric(int width, int height, int slices_per_clb, int ffs_per_slice,
                          int route_variants = kDefaultRouteVariants);

bool coord_in_geometry(const CellCoord& c, const FabricGeometry& g);
bool coord_in_limits(const CellCoord& c, const ConstraintLimits& l);

ConstraintLimits full_fabric_limits(const FabricGeometry& g);

// Row-major, slice-major, ff-major deterministic fill inside the limits,
// route_variant 0 everywhere. Throws on insufficient capacity.
Placement default_placement(const FabricGeometry& g, std::size_t n_bits,
                            const ConstraintLimits& limits);

std::vector<PlacementViolation> validate_placement(const Placement& p, const FabricGeometry& g,
                                                   const ConstraintLimits& limits);

// JSON schema: {"geometry": {...}, "assignment": [[bit,x,y,slice,ff,variant],...],
//               "limits": {...}}
std::string placement_to_json(const Placement& p, const FabricGeometry& g,
                              const ConstraintLimits& limits);
void placement_from_json(const std::string& text, Placement& p, FabricGeometry& g,
                         ConstraintLimits& limits);

} // namespace rohm
