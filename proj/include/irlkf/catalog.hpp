#pragma once

#include "irlkf/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace irlkf {

/// Ordered, non-empty set of environments with unique ids.
class EnvironmentCatalog {
public:
    explicit EnvironmentCatalog(std::vector<Environment> environments);

    const std::vector<Environment>& environments() const { return environments_; }
    std::size_t size() const { return environments_.size(); }
    const Environment& operator[](std::size_t i) const { return environments_[i]; }
    auto begin() const { return environments_.begin(); }
    auto end() const { return environments_.end(); }

    /// Throws NotFound for unknown ids.
    const Environment& find(int id) const;
    bool contains(int id) const;

    /// FNV-1a 64 over a canonical text rendering of every environment.
    std::uint64_t hash() const;

private:
    std::vector<Environment> environments_;
};

/// The 48-environment catalog: 4 start states x 4 laptop centers x 3 table
/// rectangles, one shared goal. Ids run 0..47 with
/// id = 12 * start + 3 * laptop + table.
EnvironmentCatalog build_catalog();

std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t value);

}  // namespace irlkf
