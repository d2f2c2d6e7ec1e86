#include "irlkf/catalog.hpp"

#include "irlkf/errors.hpp"

#include <cstdio>
#include <set>

namespace irlkf {

EnvironmentCatalog::EnvironmentCatalog(std::vector<Environment> environments)
    : environments_(std::move(environments)) {
    if (environments_.empty()) throw ContractViolation("environment catalog is empty");
    std::set<int> ids;
    for (const auto& env : environments_) {
        env.validate();
        if (!ids.insert(env.id).second)
            throw ContractViolation("duplicate environment id " + std::to_string(env.id));
    }
}

const Environment& EnvironmentCatalog::find(int id) const {
    for (const auto& env : environments_)
        if (env.id == id) return env;
    throw NotFound("environment id " + std::to_string(id));
}

bool EnvironmentCatalog::contains(int id) const {
    for (const auto& env : environments_)
        if (env.id == id) return true;
    return false;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::uint64_t EnvironmentCatalog::hash() const {
    std::string text;
    char line[256];
    for (const auto& e : environments_) {
        std::snprintf(line, sizeof line, "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", e.id,
                      e.start.x(), e.start.y(), e.goal.x(), e.goal.y(), e.laptop_center.x(), e.laptop_center.y(),
                      e.table.min.x(), e.table.min.y(), e.table.max.x(), e.table.max.y());
        text += line;
    }
    return fnv1a64(text);
}

// Layout constants. Start and goal sit on nodes of the 25-node lattice
// (multiples of 1/24) so the lattice oracle sees the exact endpoints. With
// the default speed limit a trajectory covers at most 20/24 of the
// workspace, so the far corners are out of reach from some starts.
namespace layout {

constexpr double cell = 1.0 / 24.0;
const Point goal{20 * cell, 12 * cell};
const Point starts[4] = {
    {6 * cell, 12 * cell},   // straight across the middle
    {10 * cell, 4 * cell},   // below
    {10 * cell, 20 * cell},  // above
    {14 * cell, 2 * cell},   // bottom edge, close to the goal
};
const Point laptops[4] = {
    {0.55, 0.50},
    {0.45, 0.30},
    {0.60, 0.75},
    {0.02, 0.98},  // top-left corner
};
const Rect tables[3] = {
    {{0.60, 0.40}, {0.72, 0.60}},
    {{0.30, 0.60}, {0.50, 0.80}},
    {{0.02, 0.02}, {0.15, 0.15}},  // bottom-left corner
};

}  // namespace layout

EnvironmentCatalog build_catalog() {
    std::vector<Environment> envs;
    envs.reserve(48);
    for (int s = 0; s < 4; ++s)
        for (int l = 0; l < 4; ++l)
            for (int t = 0; t < 3; ++t) {
                Environment e;
                e.id = 12 * s + 3 * l + t;
                e.start = layout::starts[s];
                e.goal = layout::goal;
                e.laptop_center = layout::laptops[l];
                e.table = layout::tables[t];
                envs.push_back(e);
            }
    return EnvironmentCatalog(std::move(envs));
}

}  // namespace irlkf
