#pragma once

// Stage planning: which categories (or attribute groups) arrive at which
// learning stage.

#include "izsfd/schema.hpp"

#include <cstdint>
#include <vector>

namespace izsfd {

// Random near-even partition of `items` into `parts` disjoint pieces. Sizes
// differ by at most one (the larger pieces come first); each piece is sorted.
// Throws InvalidPlan when parts < 1 or parts > items.size().
std::vector<std::vector<int>> make_stage_plan(std::vector<int> items, std::size_t parts, std::uint64_t seed);

enum class Protocol { category_increment, attribute_increment };

struct StagePlan {
    Protocol protocol = Protocol::category_increment;
    // New seen / new unseen categories per stage. For attribute increment all
    // categories are declared at stage 1 and later entries are empty.
    std::vector<std::vector<CategoryId>> seen;
    std::vector<std::vector<CategoryId>> unseen;
    // Attribute groups introduced per stage (attribute increment only).
    std::vector<std::vector<std::size_t>> groups;
    std::uint64_t seed = 0;

    std::size_t stages() const { return seen.size(); }

    std::vector<CategoryId> seen_through(std::size_t stage) const;    // stages 1..stage, sorted
    std::vector<CategoryId> unseen_through(std::size_t stage) const;
    std::vector<std::size_t> groups_through(std::size_t stage) const;  // stage order

    // Disjointness and shape checks; throws InvalidPlan.
    void validate() const;
};

// Seen and unseen categories are each split into `stages` parts.
StagePlan make_category_plan(const std::vector<CategoryId>& seen, const std::vector<CategoryId>& unseen,
                             std::size_t stages, std::uint64_t seed);

// All categories at stage 1; the `group_count` attribute groups are split
// into `stages` parts.
StagePlan make_attribute_plan(const std::vector<CategoryId>& seen, const std::vector<CategoryId>& unseen,
                              std::size_t group_count, std::size_t stages, std::uint64_t seed);

// Random seen/unseen split: `unseen_count` categories become unseen.
void split_seen_unseen(const std::vector<CategoryId>& categories, std::size_t unseen_count, std::uint64_t seed,
                       std::vector<CategoryId>& seen, std::vector<CategoryId>& unseen);

}  // namespace izsfd
