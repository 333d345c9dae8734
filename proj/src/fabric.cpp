#include "rohm/fabric.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <unordered_set>

namespace rohm {

FabricGeometry new_fabric(int width, int height, int slices_per_clb, int ffs_per_slice,
                          int route_variants) {
    if (width < 1 || height < 1 || slices_per_clb < 1 || ffs_per_slice < 1 ||
        route_variants < 1) {
        throw config_error("invalid-geometry", "all fabric dimensions must be >= 1");
    }
    return FabricGeometry{width, height, slices_per_clb, ffs_per_slice, route_variants};
}

bool coord_in_geometry(const CellCoord& c, const FabricGeometry& g) {
    return c.clb_x >= 0 && c.clb_x < g.width && c.clb_y >= 0 && c.clb_y < g.height &&
           c.slice >= 0 && c.slice < g.slices_per_clb && c.ff >= 0 && c.ff < g.ffs_per_slice &&
           c.route_variant >= 0 && c.route_variant < g.route_variants;
}

bool coord_in_limits(const CellCoord& c, const ConstraintLimits& l) {
    return c.clb_x >= l.x_min && c.clb_x <= l.x_max && c.clb_y >= l.y_min &&
           c.clb_y <= l.y_max && l.allowed_slices.count(c.slice) != 0 &&
           l.allowed_route_variants.count(c.route_variant) != 0;
}

ConstraintLimits full_fabric_limits(const FabricGeometry& g) {
    ConstraintLimits l;
    l.x_min = 0;
    l.x_max = g.width - 1;
    l.y_min = 0;
    l.y_max = g.height - 1;
    for (int s = 0; s < g.slices_per_clb; ++s)
        l.allowed_slices.insert(s);
    for (int v = 0; v < g.route_variants; ++v)
        l.allowed_route_variants.insert(v);
    return l;
}

Placement default_placement(const FabricGeometry& g, std::size_t n_bits,
                            const ConstraintLimits& limits) {
    if (limits.allowed_slices.empty() || limits.allowed_route_variants.empty() ||
        limits.x_min > limits.x_max || limits.y_min > limits.y_max) {
        throw config_error("empty-limits", "constraint limits are empty");
    }
    if (std::int64_t(n_bits) > limits.site_capacity(g)) {
        throw config_error("capacity", "region too small for " + std::to_string(n_bits) +
                                           " bits");
    }
    Placement p;
    p.assignment.reserve(n_bits);
    for (int y = limits.y_min; y <= limits.y_max && p.size() < n_bits; ++y)
        for (int x = limits.x_min; x <= limits.x_max && p.size() < n_bits; ++x)
            for (int s : limits.allowed_slices) {
                for (int ff = 0; ff < g.ffs_per_slice && p.size() < n_bits; ++ff)
                    p.assignment.push_back(CellCoord{x, y, s, ff, 0});
                if (p.size() >= n_bits)
                    break;
            }
    return p;
}

std::vector<PlacementViolation> validate_placement(const Placement& p, const FabricGeometry& g,
                                                   const ConstraintLimits& limits) {
    std::vector<PlacementViolation> out;
    struct SiteKey {
        std::int64_t v;
        bool operator==(const SiteKey&) const = default;
    };
    auto site_key = [&](const CellCoord& c) {
        return ((std::int64_t(c.clb_y) * g.width + c.clb_x) * g.slices_per_clb + c.slice) *
                   g.ffs_per_slice +
               c.ff;
    };
    std::unordered_set<std::int64_t> seen;
    for (std::size_t i = 0; i < p.assignment.size(); ++i) {
        const CellCoord& c = p.assignment[i];
        if (!coord_in_geometry(c, g)) {
            out.push_back({PlacementViolation::OutOfFabric, i, "coordinate outside fabric"});
            continue;
        }
        if (c.clb_x < limits.x_min || c.clb_x > limits.x_max || c.clb_y < limits.y_min ||
            c.clb_y > limits.y_max)
            out.push_back({PlacementViolation::OutOfRegion, i, "CLB outside allowed region"});
        if (limits.allowed_slices.count(c.slice) == 0)
            out.push_back({PlacementViolation::DisallowedSlice, i, "slice not allowed"});
        if (limits.allowed_route_variants.count(c.route_variant) == 0)
            out.push_back({PlacementViolation::DisallowedVariant, i, "route variant not allowed"});
        if (!seen.insert(site_key(c)).second)
            out.push_back({PlacementViolation::Collision, i, "two bits share one FF site"});
    }
    return out;
}

namespace {

nlohmann::json geometry_json(const FabricGeometry& g) {
    return {{"width", g.width},
            {"height", g.height},
            {"slices_per_clb", g.slices_per_clb},
            {"ffs_per_slice", g.ffs_per_slice},
            {"route_variants", g.route_variants}};
}

FabricGeometry geometry_from(const nlohmann::json& j) {
    return new_fabric(j.at("width").get<int>(), j.at("height").get<int>(),
                      j.at("slices_per_clb").get<int>(), j.at("ffs_per_slice").get<int>(),
                      j.value("route_variants", kDefaultRouteVariants));
}

nlohmann::json limits_json(const ConstraintLimits& l) {
    return {{"x_min", l.x_min},
            {"x_max", l.x_max},
            {"y_min", l.y_min},
            {"y_max", l.y_max},
            {"slices", std::vector<int>(l.allowed_slices.begin(), l.allowed_slices.end())},
            {"variants", std::vector<int>(l.allowed_route_variants.begin(),
                                          l.allowed_route_variants.end())}};
}

ConstraintLimits limits_from(const nlohmann::json& j) {
    ConstraintLimits l;
    l.x_min = j.at("x_min").get<int>();
    l.x_max = j.at("x_max").get<int>();
    l.y_min = j.at("y_min").get<int>();
    l.y_max = j.at("y_max").get<int>();
    for (int s : j.at("slices"))
        l.allowed_slices.insert(s);
    for (int v : j.at("variants"))
        l.allowed_route_variants.insert(v);
    return l;
}

} // namespace

std::string placement_to_json(const Placement& p, const FabricGeometry& g,
                              const ConstraintLimits& limits) {
    nlohmann::json j;
    j["geometry"] = geometry_json(g);
    j["limits"] = limits_json(limits);
    auto& arr = j["assignment"] = nlohmann::json::array();
    for (std::size_t i = 0; i < p.assignment.size(); ++i) {
        const CellCoord& c = p.assignment[i];
        arr.push_back({i, c.clb_x, c.clb_y, c.slice, c.ff, c.route_variant});
    }
    return j.dump(2);
}

void placement_from_json(const std::string& text, Placement& p, FabricGeometry& g,
                         ConstraintLimits& limits) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("bad-json", e.what());
    }
    try {
        g = geometry_from(j.at("geometry"));
        limits = limits_from(j.at("limits"));
        const auto& arr = j.at("assignment");
        p.assignment.assign(arr.size(), CellCoord{});
        for (const auto& row : arr) {
            std::size_t bit = row.at(0).get<std::size_t>();
            if (bit >= p.assignment.size())
                throw config_error("bad-assignment", "bit index out of range");
            p.assignment[bit] = CellCoord{row.at(1).get<int>(), row.at(2).get<int>(),
                                          row.at(3).get<int>(), row.at(4).get<int>(),
                                          row.at(5).get<int>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error("bad-schema", e.what());
    }
}

} // namespace rohm
