#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pointedge/errors.hpp"
#include "pointedge/losses.hpp"
#include "support.hpp"

using namespace pointedge;
using pointedge::testing::fd_max_rel_error;
using pointedge::testing::random_tensor;

namespace {

double cross_entropy_oracle(const Tensor& s, const std::vector<int>& labels) {
    double total = 0;
    for (std::size_t r = 0; r < s.rows(); ++r) {
        double m = -INFINITY;
        for (double v : s.row(r)) m = std::max(m, v);
        double z = 0;
        for (double v : s.row(r)) z += std::exp(v - m);
        total += m + std::log(z) - s.at(r, static_cast<std::size_t>(labels[r]));
    }
    return total / static_cast<double>(s.rows());
}

EvalAccumulator from_matrix(const std::vector<std::vector<int>>& m) {
    EvalAccumulator acc(static_cast<int>(m.size()));
    for (std::size_t t = 0; t < m.size(); ++t)
        for (std::size_t p = 0; p < m.size(); ++p)
            for (int n = 0; n < m[t][p]; ++n) acc.add(static_cast<int>(t), static_cast<int>(p));
    return acc;
}

}  // namespace

TEST(PointLoss, UniformScoresGiveLogC) {
    ad::Tape tape;
    const std::vector<int> labels{0, 3, 2, 1, 1};
    EXPECT_NEAR(point_loss(tape.constant(Tensor({5, 4}, 0.7)), labels).value().item(), std::log(4.0), 1e-12);
}

TEST(PointLoss, ConfidentCorrectScoresApproachZero) {
    Tensor s = Tensor::zeros(2, 3);
    s.at(0, 1) = 800;
    s.at(1, 2) = 800;
    ad::Tape tape;
    const double l = point_loss(tape.constant(s), std::vector<int>{1, 2}).value().item();
    EXPECT_TRUE(std::isfinite(l));
    EXPECT_NEAR(l, 0.0, 1e-12);
    s.at(1, 0) = 1600;
    const double wrong = point_loss(tape.constant(s), std::vector<int>{1, 2}).value().item();
    EXPECT_NEAR(wrong, 400.0, 1e-9);
}

TEST(PointLoss, MatchesLogSumExpOracleAndGradient) {
    std::mt19937_64 rng(1);
    const Tensor s = random_tensor(7, 5, rng, -3, 3);
    std::vector<int> labels(7);
    for (int& l : labels) l = std::uniform_int_distribution<int>(0, 4)(rng);
    ad::Tape tape;
    EXPECT_NEAR(point_loss(tape.constant(s), labels).value().item(), cross_entropy_oracle(s, labels), 1e-12);
    EXPECT_LT(fd_max_rel_error([&](auto& v) { return point_loss(v[0], labels); }, {s}), 1e-6);
}

TEST(PointLoss, RejectsBadLabels) {
    ad::Tape tape;
    EXPECT_THROW(point_loss(tape.constant(Tensor::zeros(2, 3)), std::vector<int>{0, 3}), ValidationError);
    EXPECT_THROW(point_loss(tape.constant(Tensor::zeros(2, 3)), std::vector<int>{0}), ValidationError);
}

TEST(EdgeLoss, HalfProbabilityGivesLogTwo) {
    ad::Tape tape;
    const std::vector<std::uint8_t> labels{1, 0, 1, 0, 0, 1};
    EXPECT_NEAR(edge_loss(tape.constant(Tensor({6, 1}, 0.5)), labels, 1.0).value().item(), std::log(2.0), 1e-12);
}

TEST(EdgeLoss, ZeroAlphaIgnoresNegatives) {
    ad::Tape tape;
    Tensor p = Tensor::zeros(3, 1);
    p.at(0, 0) = 0.8;
    p.at(1, 0) = 0.99;
    p.at(2, 0) = 0.3;
    const std::vector<std::uint8_t> labels{1, 0, 1};
    EXPECT_NEAR(edge_loss(tape.constant(p), labels, 0.0).value().item(), -(std::log(0.8) + std::log(0.3)) / 3, 1e-12);
}

TEST(EdgeLoss, HandComputedWeightedSum) {
    const std::vector<std::uint8_t> labels{1, 1, 0, 1};
    EdgeTargets t{{0, 1, 2, 3}, labels};
    EXPECT_EQ(t.positives(), 3u);
    const double alpha = auto_alpha(t.positives(), t.negatives());
    EXPECT_EQ(alpha, 3.0);
    Tensor p = Tensor::zeros(4, 1);
    const double v[] = {0.9, 0.6, 0.2, 0.7};
    for (int i = 0; i < 4; ++i) p.at(i, 0) = v[i];
    ad::Tape tape;
    const double want = -(std::log(0.9) + std::log(0.6) + 3 * std::log(0.8) + std::log(0.7)) / 4;
    EXPECT_NEAR(edge_loss(tape.constant(p), labels, alpha).value().item(), want, 1e-12);
    EXPECT_LT(fd_max_rel_error([&](auto& x) { return edge_loss(x[0], labels, alpha); }, {p}), 1e-6);
}

TEST(EdgeLoss, SymmetricUnderLabelAndProbabilityFlip) {
    std::mt19937_64 rng(2);
    const Tensor p = random_tensor(9, 1, rng, 0.05, 0.95);
    Tensor q = p;
    for (double& x : q.values()) x = 1 - x;
    std::vector<std::uint8_t> l(9), flipped(9);
    for (std::size_t i = 0; i < 9; ++i) {
        l[i] = static_cast<std::uint8_t>(i % 3 == 0);
        flipped[i] = static_cast<std::uint8_t>(1 - l[i]);
    }
    ad::Tape tape;
    EXPECT_NEAR(edge_loss(tape.constant(p), l, 1.0).value().item(),
                edge_loss(tape.constant(q), flipped, 1.0).value().item(), 1e-12);
}

TEST(EdgeLoss, ClampKeepsSaturatedPredictionsFinite) {
    Tensor p = Tensor::zeros(2, 1);
    p.at(1, 0) = 1.0;
    ad::Tape tape;
    const double l = edge_loss(tape.constant(p), std::vector<std::uint8_t>{1, 0}, 1.0).value().item();
    EXPECT_NEAR(l, -std::log(prob_clamp), 1e-3);
    EXPECT_EQ(auto_alpha(5, 0), 5.0);
}

TEST(TotalLoss, GradientIsLinearInLambdas) {
    std::mt19937_64 rng(3);
    const Tensor s = random_tensor(4, 3, rng), p = random_tensor(5, 1, rng, 0.1, 0.9);
    const std::vector<int> pl{0, 1, 2, 1};
    const std::vector<std::uint8_t> el{1, 0, 0, 1, 1};
    auto grads = [&](double l1, double l2) {
        ad::Tape tape;
        ad::Var sv = tape.parameter(s), pv = tape.parameter(p);
        tape.backward(total_loss(point_loss(sv, pl), edge_loss(pv, el, 1.5), LossWeights{l1, l2, 1.5}));
        return std::pair{tape.grad(sv), tape.grad(pv)};
    };
    const auto [s1, p1] = grads(1, 0);
    const auto [s2, p2] = grads(0, 1);
    const auto [s3, p3] = grads(2.5, 0.5);
    for (std::size_t i = 0; i < s3.size(); ++i) EXPECT_NEAR(s3.data()[i], 2.5 * s1.data()[i] + 0.5 * s2.data()[i], 1e-14);
    for (std::size_t i = 0; i < p3.size(); ++i) EXPECT_NEAR(p3.data()[i], 2.5 * p1.data()[i] + 0.5 * p2.data()[i], 1e-14);
    EXPECT_THROW((LossWeights{-1, 1, {}}.validate()), ValidationError);
    EXPECT_THROW((LossWeights{1, 1, -0.5}.validate()), ValidationError);
}

TEST(EdgeLabels, CountsMatchEnumeration) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    Positions pos(20);
    for (auto& v : pos) v = {u(rng), u(rng), u(rng)};
    std::vector<int> labels(20);
    for (int& l : labels) l = std::uniform_int_distribution<int>(0, 2)(rng);
    const GraphLayer g = init_graph(pos, 5);
    const auto flags = edge_labels(g, labels);
    std::size_t same = 0, self = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = 0; j < 20; ++j) {
            if (!g.find_edge(i, j)) continue;
            same += labels[i] == labels[j];
            self += i == j;
        }
    }
    EXPECT_EQ(static_cast<std::size_t>(std::accumulate(flags.begin(), flags.end(), 0)), same);
    const EdgeTargets with = edge_targets(g, labels, true), without = edge_targets(g, labels, false);
    EXPECT_EQ(with.rows.size(), g.edge_count());
    EXPECT_EQ(with.positives(), same);
    EXPECT_EQ(without.rows.size(), g.edge_count() - self);
    EXPECT_EQ(without.positives(), same - self);
    for (std::size_t r : without.rows) EXPECT_NE(g.edges[r].src, g.edges[r].dst);
}

TEST(Metrics, PerfectPredictions) {
    const Metrics m = compute_metrics(from_matrix({{5, 0, 0}, {0, 2, 0}, {0, 0, 7}}));
    EXPECT_EQ(m.overall_accuracy, 1.0);
    EXPECT_EQ(m.mean_accuracy, 1.0);
    EXPECT_EQ(m.mean_iou, 1.0);
}

TEST(Metrics, TwoClassConfusion) {
    const Metrics m = compute_metrics(from_matrix({{3, 1}, {1, 3}}));
    EXPECT_EQ(m.overall_accuracy, 0.75);
    EXPECT_EQ(m.mean_accuracy, 0.75);
    EXPECT_EQ(m.mean_iou, 0.6);
}

TEST(Metrics, AbsentClassIsExcluded) {
    const Metrics m = compute_metrics(from_matrix({{4, 0, 0}, {0, 0, 0}, {0, 0, 0}}));
    EXPECT_EQ(m.overall_accuracy, 1.0);
    EXPECT_EQ(m.mean_iou, 1.0);
    EXPECT_FALSE(m.class_iou[1].has_value());
    EXPECT_THROW(compute_metrics(EvalAccumulator(3)), ValidationError);
}

TEST(Metrics, InvariantUnderClassRelabeling) {
    const std::vector<std::vector<int>> a{{5, 1, 2}, {0, 4, 3}, {2, 2, 6}};
    const std::vector<int> perm{2, 0, 1};
    std::vector<std::vector<int>> b(3, std::vector<int>(3));
    for (int t = 0; t < 3; ++t)
        for (int p = 0; p < 3; ++p) b[perm[t]][perm[p]] = a[t][p];
    const Metrics ma = compute_metrics(from_matrix(a)), mb = compute_metrics(from_matrix(b));
    EXPECT_NEAR(ma.mean_iou, mb.mean_iou, 1e-15);
    EXPECT_NEAR(ma.mean_accuracy, mb.mean_accuracy, 1e-15);
    EXPECT_EQ(ma.overall_accuracy, mb.overall_accuracy);
    for (int c = 0; c < 3; ++c) EXPECT_LE(*ma.class_iou[c], *ma.class_accuracy[c]);
}

TEST(Metrics, MergeEqualsSingleAccumulator) {
    EvalAccumulator a(3), b(3), all(3);
    const std::vector<int> t{0, 1, 2, 2, 1, 0}, p{0, 2, 2, 1, 1, 0};
    a.add(std::span(t).first(3), std::span(p).first(3));
    b.add(std::span(t).subspan(3), std::span(p).subspan(3));
    all.add(t, p);
    a.merge(b);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(a.at(i, j), all.at(i, j));
    EXPECT_EQ(a.total(), 6u);
    EXPECT_THROW(a.add(3, 0), ValidationError);
    EXPECT_THROW(a.merge(EvalAccumulator(2)), ValidationError);
}

TEST(Metrics, FormatUsesFourDecimals) {
    const std::string s = format_metrics(compute_metrics(from_matrix({{3, 1}, {1, 3}})));
    EXPECT_NE(s.find("OA 0.7500"), std::string::npos) << s;
    EXPECT_NE(s.find("mAcc 0.7500"), std::string::npos);
    EXPECT_NE(s.find("mIoU 0.6000"), std::string::npos);
}
