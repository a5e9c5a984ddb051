#include "izsfd/error.hpp"
#include "izsfd/metrics.hpp"
#include "izsfd/plan.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

namespace izsfd {
namespace {

std::vector<int> iota(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

TEST(StagePlan, SingleStageHoldsEverything) {
    const auto parts = make_stage_plan(iota(7), 1, 3);
    ASSERT_EQ(parts.size(), 1u);
    EXPECT_EQ(parts[0], iota(7));
}

TEST(StagePlan, HydraulicSizedSplit) {
    const auto parts = make_stage_plan(iota(144), 4, 5);
    ASSERT_EQ(parts.size(), 4u);
    std::set<int> all;
    for (const auto& p : parts) {
        EXPECT_EQ(p.size(), 36u);
        EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
        all.insert(p.begin(), p.end());
    }
    EXPECT_EQ(all.size(), 144u);
}

TEST(StagePlan, UnevenSizesDifferByOneLargestFirst) {
    const auto parts = make_stage_plan(iota(10), 4, 1);
    std::vector<std::size_t> sizes;
    for (const auto& p : parts) sizes.push_back(p.size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 3, 2, 2}));
}

TEST(StagePlan, SeededPartition) {
    EXPECT_EQ(make_stage_plan(iota(20), 4, 9), make_stage_plan(iota(20), 4, 9));
    const auto a = make_stage_plan(iota(20), 4, 9), b = make_stage_plan(iota(20), 4, 10);
    EXPECT_NE(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].size(), b[i].size());
}

TEST(StagePlan, TooManyPartsRejected) {
    EXPECT_THROW(make_stage_plan(iota(3), 4, 1), InvalidPlan);
    EXPECT_THROW(make_stage_plan(iota(3), 0, 1), InvalidPlan);
}

TEST(StagePlan, CategoryPlanIsDisjointAndCumulative) {
    const std::vector<CategoryId> seen{0, 1, 2, 3, 4, 5}, unseen{10, 11, 12};
    const StagePlan plan = make_category_plan(seen, unseen, 3, 2);
    EXPECT_NO_THROW(plan.validate());
    EXPECT_EQ(plan.stages(), 3u);
    EXPECT_EQ(plan.seen_through(3), seen);
    EXPECT_EQ(plan.unseen_through(3), unseen);
    EXPECT_EQ(plan.seen_through(1).size(), 2u);
    EXPECT_EQ(plan.unseen_through(2).size(), 2u);
}

TEST(StagePlan, AttributePlanDeclaresCategoriesUpFront) {
    const std::vector<CategoryId> seen{0, 1, 2}, unseen{5};
    const StagePlan plan = make_attribute_plan(seen, unseen, 6, 3, 4);
    EXPECT_NO_THROW(plan.validate());
    EXPECT_EQ(plan.seen[0], seen);
    EXPECT_TRUE(plan.seen[1].empty() && plan.seen[2].empty());
    std::vector<std::size_t> groups = plan.groups_through(3);
    std::sort(groups.begin(), groups.end());
    EXPECT_EQ(groups, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
    for (const auto& g : plan.groups) EXPECT_EQ(g.size(), 2u);
}

TEST(StagePlan, OverlapRejected) {
    StagePlan plan;
    plan.seen = {{0, 1}, {1}};
    plan.unseen = {{5}, {6}};
    EXPECT_THROW(plan.validate(), InvalidPlan);
    plan.seen = {{0, 1}, {2}};
    plan.unseen = {{5}, {0}};
    EXPECT_THROW(plan.validate(), InvalidPlan);
}

TEST(SeenUnseenSplit, SizesAndDeterminism) {
    const std::vector<CategoryId> cats{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<CategoryId> s1, u1, s2, u2;
    split_seen_unseen(cats, 3, 7, s1, u1);
    split_seen_unseen(cats, 3, 7, s2, u2);
    EXPECT_EQ(s1.size(), 5u);
    EXPECT_EQ(u1.size(), 3u);
    EXPECT_EQ(s1, s2);
    EXPECT_EQ(u1, u2);
}

TEST(Metrics, HarmonicMeanReferenceRow) {
    const StageMetrics m = compute_metrics(0.8004, 0.5929);
    ASSERT_TRUE(m.har.has_value());
    EXPECT_NEAR(*m.har, 0.6812, 1e-4);
}

TEST(Metrics, HarmonicMeanFixedPointAndZero) {
    for (double x : {0.1, 0.5, 0.93}) EXPECT_NEAR(harmonic_mean(x, x), x, 1e-15);
    EXPECT_EQ(harmonic_mean(0.0, 0.0), 0.0);
    EXPECT_EQ(harmonic_mean(0.7, 0.0), 0.0);
}

TEST(Metrics, GzsfdFromPredictions) {
    const std::vector<CategoryId> labels{0, 0, 1, 1, 7, 7, 7, 8};
    const std::vector<CategoryId> preds{0, 1, 1, 1, 7, 0, 7, 8};
    const StageMetrics m = compute_metrics(preds, labels, {0, 1}, Paradigm::gzsfd, 2);
    EXPECT_EQ(m.stage, 2u);
    EXPECT_NEAR(*m.acc_s, 0.75, 1e-15);
    EXPECT_NEAR(m.acc_u, 0.75, 1e-15);
    EXPECT_NEAR(*m.har, 0.75, 1e-15);
    EXPECT_EQ(m.per_category.at(0), (CategoryAccuracy{1, 2}));
    EXPECT_EQ(m.per_category.at(7), (CategoryAccuracy{2, 3}));
}

TEST(Metrics, TzsfdReportsUnseenOnly) {
    const std::vector<CategoryId> labels{0, 0, 0, 0, 7, 8};
    const std::vector<CategoryId> preds{0, 0, 0, 1, 7, 7};
    const StageMetrics m = compute_metrics(preds, labels, {0, 1}, Paradigm::tzsfd);
    EXPECT_FALSE(m.acc_s.has_value());
    EXPECT_FALSE(m.har.has_value());
    EXPECT_NEAR(m.acc_u, 0.5, 1e-15);
    EXPECT_EQ(m.per_category.count(0), 0u);
}

TEST(Metrics, EmptyPartitionsUndefined) {
    const std::vector<CategoryId> seen_only{0, 0, 0, 1};
    const std::vector<CategoryId> seen_preds{0, 0, 0, 0};
    EXPECT_THROW(compute_metrics(seen_preds, seen_only, {0, 1}, Paradigm::gzsfd), UndefinedMetric);
    EXPECT_THROW(compute_metrics(seen_preds, seen_only, {0, 1}, Paradigm::tzsfd), UndefinedMetric);
    const std::vector<CategoryId> unseen_only{7, 8};
    EXPECT_THROW(compute_metrics(unseen_only, unseen_only, {0, 1}, Paradigm::gzsfd), UndefinedMetric);
    EXPECT_NO_THROW(compute_metrics(unseen_only, unseen_only, {0, 1}, Paradigm::tzsfd));
    EXPECT_THROW(accuracy({}, {}), UndefinedMetric);
}

TEST(Metrics, MisalignedInputsRejected) {
    const std::vector<CategoryId> a{0, 1}, b{0};
    EXPECT_THROW(compute_metrics(a, b, {0}, Paradigm::gzsfd), InvalidInput);
}

TEST(Metrics, ParadigmNames) {
    for (Paradigm p : {Paradigm::tzsfd, Paradigm::gzsfd}) EXPECT_EQ(parse_paradigm(to_string(p)), p);
    EXPECT_THROW(parse_paradigm("zsl"), InvalidInput);
}

}  // namespace
}  // namespace izsfd
