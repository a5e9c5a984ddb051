#include "izsfd/plan.hpp"

#include "izsfd/error.hpp"
#include "izsfd/random.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace izsfd {

std::vector<std::vector<int>> make_stage_plan(std::vector<int> items, std::size_t parts, std::uint64_t seed) {
    if (parts < 1) throw InvalidPlan("stage count must be at least 1");
    if (parts > items.size())
        throw InvalidPlan("cannot split " + std::to_string(items.size()) + " items into " + std::to_string(parts) +
                          " stages");
    std::sort(items.begin(), items.end());
    if (std::adjacent_find(items.begin(), items.end()) != items.end()) throw InvalidPlan("duplicate plan items");
    Rng rng = Rng::stream(seed, "stage-plan", {items.size(), parts});
    rng.shuffle(items);

    std::vector<std::vector<int>> out(parts);
    const std::size_t base = items.size() / parts;
    const std::size_t extra = items.size() % parts;
    auto it = items.begin();
    for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t n = base + (p < extra ? 1 : 0);
        out[p].assign(it, it + static_cast<std::ptrdiff_t>(n));
        std::sort(out[p].begin(), out[p].end());
        it += static_cast<std::ptrdiff_t>(n);
    }
    return out;
}

namespace {

template <typename T>
std::vector<T> flatten_through(const std::vector<std::vector<T>>& parts, std::size_t stage, bool sorted) {
    if (stage < 1 || stage > parts.size()) throw InvalidPlan("stage index out of range");
    std::vector<T> out;
    for (std::size_t k = 0; k < stage; ++k) out.insert(out.end(), parts[k].begin(), parts[k].end());
    if (sorted) std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<CategoryId> StagePlan::seen_through(std::size_t stage) const { return flatten_through(seen, stage, true); }

std::vector<CategoryId> StagePlan::unseen_through(std::size_t stage) const {
    return flatten_through(unseen, stage, true);
}

std::vector<std::size_t> StagePlan::groups_through(std::size_t stage) const {
    if (groups.empty()) return {};
    return flatten_through(groups, stage, false);
}

void StagePlan::validate() const {
    if (seen.empty()) throw InvalidPlan("plan has no stages");
    if (unseen.size() != seen.size()) throw InvalidPlan("seen and unseen stage lists differ in length");
    if (seen.front().empty()) throw InvalidPlan("stage 1 must introduce seen categories");
    std::set<CategoryId> cats;
    std::size_t total = 0;
    for (std::size_t k = 0; k < seen.size(); ++k) {
        for (auto c : seen[k]) cats.insert(c);
        for (auto c : unseen[k]) cats.insert(c);
        total += seen[k].size() + unseen[k].size();
    }
    if (cats.size() != total) throw InvalidPlan("a category appears in more than one stage or role");
    if (protocol == Protocol::attribute_increment) {
        if (groups.size() != seen.size()) throw InvalidPlan("attribute plan needs one group list per stage");
        if (groups.front().empty()) throw InvalidPlan("stage 1 must introduce attribute groups");
        std::set<std::size_t> g;
        std::size_t n = 0;
        for (const auto& part : groups) {
            g.insert(part.begin(), part.end());
            n += part.size();
        }
        if (g.size() != n) throw InvalidPlan("an attribute group appears in more than one stage");
        for (std::size_t k = 1; k < seen.size(); ++k)
            if (!seen[k].empty() || !unseen[k].empty())
                throw InvalidPlan("attribute increment declares every category at stage 1");
    }
}

namespace {

std::vector<std::vector<CategoryId>> split_or_empty(const std::vector<CategoryId>& items, std::size_t stages,
                                                    std::uint64_t seed) {
    if (items.empty()) return std::vector<std::vector<CategoryId>>(stages);
    return make_stage_plan(items, stages, seed);
}

}  // namespace

StagePlan make_category_plan(const std::vector<CategoryId>& seen, const std::vector<CategoryId>& unseen,
                             std::size_t stages, std::uint64_t seed) {
    StagePlan plan;
    plan.protocol = Protocol::category_increment;
    plan.seed = seed;
    plan.seen = make_stage_plan(seen, stages, Rng::stream(seed, "plan-seen").next_u64());
    plan.unseen = split_or_empty(unseen, stages, Rng::stream(seed, "plan-unseen").next_u64());
    plan.validate();
    return plan;
}

StagePlan make_attribute_plan(const std::vector<CategoryId>& seen, const std::vector<CategoryId>& unseen,
                              std::size_t group_count, std::size_t stages, std::uint64_t seed) {
    StagePlan plan;
    plan.protocol = Protocol::attribute_increment;
    plan.seed = seed;
    plan.seen.assign(stages, {});
    plan.unseen.assign(stages, {});
    if (stages < 1) throw InvalidPlan("stage count must be at least 1");
    plan.seen[0] = seen;
    plan.unseen[0] = unseen;
    std::sort(plan.seen[0].begin(), plan.seen[0].end());
    std::sort(plan.unseen[0].begin(), plan.unseen[0].end());
    std::vector<int> items(group_count);
    for (std::size_t g = 0; g < group_count; ++g) items[g] = static_cast<int>(g);
    for (const auto& part : make_stage_plan(items, stages, Rng::stream(seed, "plan-groups").next_u64()))
        plan.groups.emplace_back(part.begin(), part.end());
    plan.validate();
    return plan;
}

void split_seen_unseen(const std::vector<CategoryId>& categories, std::size_t unseen_count, std::uint64_t seed,
                       std::vector<CategoryId>& seen, std::vector<CategoryId>& unseen) {
    if (unseen_count >= categories.size())
        throw InvalidPlan("unseen count must leave at least one seen category");
    std::vector<CategoryId> order = categories;
    std::sort(order.begin(), order.end());
    Rng rng = Rng::stream(seed, "seen-unseen-split");
    rng.shuffle(order);
    unseen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(unseen_count));
    seen.assign(order.begin() + static_cast<std::ptrdiff_t>(unseen_count), order.end());
    std::sort(seen.begin(), seen.end());
    std::sort(unseen.begin(), unseen.end());
}

}  // namespace izsfd
