#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "totstab/bounds.hpp"

using namespace totstab;

namespace {

GroundSpace line(int m, double step = 0.6) {
    Matrix pts(1, m);
    for (int i = 0; i < m; ++i) pts(0, i) = step * i;
    return GroundSpace(pts);
}

DiscreteMeasure binary_measure(const GroundSpace& s) {
    return DiscreteMeasure::uniform(s, {{0, 1.0}, {1, -1.0}, {2, 1.0}, {3, -1.0}, {4, 1.0}});
}

Scenario make(Theorem t, const DiscreteMeasure& p, double l1, const DiscreteMeasure& q, double l2, const Kernel& k1,
              const Kernel& k2, AnyLoss loss) {
    return Scenario{to_string(t), Triple{p, l1, k1}, Triple{q, l2, k2}, std::move(loss), t, std::nullopt};
}

AnyLoss default_loss(Theorem t) {
    switch (t) {
    case Theorem::thm3_h1_part2:
        return Loss::hinge();
    case Theorem::thm5_pair_h1_part2:
        return PairwiseLoss::absolute();
    default:
        return is_pairwise(t) ? AnyLoss(PairwiseLoss::r_logistic()) : AnyLoss(Loss::c_logistic());
    }
}

} // namespace

TEST(Theorem, NamesRoundTrip) {
    EXPECT_EQ(all_theorems().size(), 11u);
    for (Theorem t : all_theorems()) EXPECT_EQ(theorem_from_string(to_string(t)), t);
    EXPECT_THROW(theorem_from_string("thm9"), ArgumentError);
}

TEST(Constants, ClassicalExamples) {
    GroundSpace s = line(5);
    auto p = binary_measure(s);
    Kernel k(GaussianRbf{1.0});
    auto c = constants_for(make(Theorem::thm2_sup, p, 0.5, p, 0.5, k, k, Loss::c_logistic()));
    EXPECT_EQ(c.kappa, 1.0);
    EXPECT_EQ(c.r, 0.125);
    EXPECT_EQ(c.tv_coef, 8.0);
    EXPECT_EQ(c.lambda_coef, 64.0);
    EXPECT_EQ(c.kernel_coef, 1.0 / (2.0 * (0.5 - 0.125)));

    auto t1 = constants_for(make(Theorem::thm1_lambda, p, 0.3, p, 0.4, k, k, Loss::c_logistic()));
    EXPECT_EQ(t1.r, 0.3);
    EXPECT_NEAR(*t1.lambda_coef * 0.1, 0.1 / 0.09, 1e-15);

    auto cr = constants_for(make(Theorem::cor1_risk, p, 0.5, p, 0.6, k, k, Loss::c_logistic()));
    EXPECT_EQ(cr.tv_coef, 16.0);
    EXPECT_EQ(cr.s, (0.5 - 0.125) / 2);

    EXPECT_THROW(constants_for(make(Theorem::thm2_sup, p, 0.5, p, 0.5, k, k, Loss::hinge())), CapabilityError);
    EXPECT_THROW(constants_for(make(Theorem::thm3_h1_part1, p, 0.5, p, 0.5, k, k, Loss::pinball(0.5))),
                 CapabilityError);
    EXPECT_NO_THROW(constants_for(make(Theorem::thm3_h1_part2, p, 0.5, p, 0.5, k, k, Loss::pinball(0.5))));
    EXPECT_THROW(constants_for(make(Theorem::thm2_sup, p, 0.5, p, 0.5, k, k, PairwiseLoss::r_logistic())),
                 ArgumentError);
}

TEST(Constants, PairwiseExamples) {
    GroundSpace s = line(5);
    auto p = binary_measure(s);
    Kernel k(GaussianRbf{1.0});
    auto c = constants_for(make(Theorem::thm4_pair_sup, p, 2.0, p, 2.0, k, k, PairwiseLoss::r_logistic()));
    EXPECT_EQ(c.d_l, 1.0);
    EXPECT_EQ(c.threshold, 1.0);
    EXPECT_EQ(c.tv_coef, 4.0);
    EXPECT_EQ(c.lambda_coef, 1.0); // |L|_1 / d_L
    EXPECT_EQ(c.kernel_coef, 1.0 / (2.0 - 1.0));
    EXPECT_THROW(constants_for(make(Theorem::thm4_pair_sup, p, 2.0, p, 2.0, k, k, PairwiseLoss::huber(1.0))),
                 CapabilityError);
    auto t5 = constants_for(make(Theorem::thm5_pair_h1_part2, p, 0.5, p, 0.25, k, k, PairwiseLoss::pinball(0.3)));
    EXPECT_NEAR(*t5.kernel_coef, 0.7 / 0.25, 1e-15);
}

TEST(Verify, IdenticalTriplesGiveZero) {
    GroundSpace s = line(5);
    auto p = binary_measure(s);
    Kernel k(GaussianRbf{1.0});
    for (Theorem t : all_theorems()) {
        auto rep = verify(make(t, p, 2.0, p, 2.0, k, k, default_loss(t)));
        ASSERT_TRUE(rep.precondition_ok) << to_string(t) << ": " << rep.precondition_note;
        EXPECT_EQ(rep.lhs, 0.0) << to_string(t);
        EXPECT_EQ(rep.margin, rep.rhs_total);
        EXPECT_GE(rep.margin, 0.0);
        EXPECT_TRUE(rep.passed());
    }
}

TEST(Verify, LambdaExample) {
    GroundSpace s = line(5);
    auto p = binary_measure(s);
    Kernel k(GaussianRbf{1.0});
    auto rep = verify(make(Theorem::thm1_lambda, p, 0.3, p, 0.4, k, k, Loss::c_logistic()));
    ASSERT_TRUE(rep.precondition_ok);
    EXPECT_NEAR(rep.rhs_total, 0.1 / 0.09, 1e-14);
    EXPECT_GT(rep.lhs, 0.0);
    EXPECT_TRUE(rep.passed());

    auto q = DiscreteMeasure::uniform(s, {{0, 1.0}});
    auto bad = verify(make(Theorem::thm1_lambda, p, 0.3, q, 0.4, k, k, Loss::c_logistic()));
    EXPECT_FALSE(bad.precondition_ok);
}

TEST(Verify, BelowThresholdIsFlagged) {
    GroundSpace s = line(5);
    auto p = binary_measure(s);
    Kernel k(GaussianRbf{1.0});
    auto rep = verify(make(Theorem::thm2_sup, p, 0.1, p, 0.5, k, k, Loss::c_logistic()));
    EXPECT_FALSE(rep.precondition_ok);
    EXPECT_FALSE(rep.passed());
    EXPECT_NE(rep.precondition_note.find("r = 0.125"), std::string::npos);

    auto pair = verify(make(Theorem::cor2_pair_func, p, 0.9, p, 3.0, k, k, PairwiseLoss::r_logistic()));
    EXPECT_FALSE(pair.precondition_ok);

    Scenario bad_s = make(Theorem::cor1_func, p, 0.5, p, 0.5, k, k, Loss::c_logistic());
    bad_s.s = 0.5;
    EXPECT_FALSE(verify(bad_s).precondition_ok);
}

TEST(Verify, MarginLossesNeedBinaryLabels) {
    GroundSpace s = line(3);
    auto p = DiscreteMeasure::uniform(s, {{0, 2.0}, {1, -1.0}});
    Kernel k(GaussianRbf{1.0});
    EXPECT_FALSE(verify(make(Theorem::thm2_sup, p, 1.0, p, 1.0, k, k, Loss::c_logistic())).precondition_ok);
}

TEST(Verify, TermDecomposition) {
    GroundSpace s = line(6);
    auto p = DiscreteMeasure::uniform(s, {{0, 1.0}, {1, -1.0}, {2, 1.0}, {3, -1.0}, {4, 1.0}});
    auto q = contaminate(p, 1, {{5, -1.0}});
    Kernel k1(GaussianRbf{0.8}), k2(GaussianRbf{0.9});
    struct Case {
        DiscreteMeasure q;
        double l2;
        Kernel k2;
        bool tv, lam, ker;
    };
    std::vector<Case> cases{{p, 0.7, k2, false, true, true}, {q, 0.5, k2, true, false, true},
                            {q, 0.7, k1, true, true, false}};
    for (Theorem t : {Theorem::thm2_sup, Theorem::cor1_risk, Theorem::thm3_h1_part1, Theorem::thm4_pair_sup,
                      Theorem::thm5_pair_h1_part1}) {
        double lam = is_pairwise(t) ? 1.5 : 0.5;
        for (const auto& c : cases) {
            auto rep = verify(make(t, p, lam, c.q, c.l2 - 0.5 + lam, k1, c.k2, default_loss(t)));
            ASSERT_TRUE(rep.precondition_ok) << rep.precondition_note;
            EXPECT_EQ(rep.rhs_terms.tv_term > 0.0, c.tv) << to_string(t);
            EXPECT_EQ(rep.rhs_terms.lambda_term > 0.0, c.lam) << to_string(t);
            EXPECT_EQ(rep.rhs_terms.kernel_term > 0.0, c.ker) << to_string(t);
            EXPECT_EQ(rep.rhs_total, rep.rhs_terms.tv_term + rep.rhs_terms.lambda_term + rep.rhs_terms.kernel_term);
            EXPECT_TRUE(rep.passed());
        }
    }
}

TEST(Verify, LambdaLadderSlope) {
    GroundSpace s = line(6);
    auto p = DiscreteMeasure::uniform(s, {{0, 1.0}, {1, -1.0}, {2, 1.0}, {3, -1.0}, {5, 1.0}});
    Kernel k(GaussianRbf{0.8});
    std::vector<double> gaps{0.04, 0.02, 0.01, 0.005, 0.0025}, lhs;
    for (double g : gaps) {
        auto rep = verify(make(Theorem::thm2_sup, p, 0.5, p, 0.5 + g, k, k, Loss::c_logistic()));
        ASSERT_TRUE(rep.passed());
        EXPECT_LE(rep.lhs, *rep.constants.lambda_coef * g + rep.eps_solve);
        lhs.push_back(rep.lhs);
    }
    double slope = (std::log(lhs.front()) - std::log(lhs.back())) / (std::log(gaps.front()) - std::log(gaps.back()));
    EXPECT_NEAR(slope, 1.0, 0.1);
}

TEST(Verify, RiskOrderReversal) {
    GroundSpace s = line(6);
    auto p = DiscreteMeasure::uniform(s, {{0, 1.0}, {1, -1.0}, {2, 1.0}, {3, -1.0}});
    auto q = contaminate(p, 1, {{5, 1.0}});
    Kernel k(GaussianRbf{0.8});
    auto a = verify(make(Theorem::cor1_risk, p, 0.5, q, 0.6, k, k, Loss::c_logistic()));
    auto b = verify(make(Theorem::cor1_risk, q, 0.6, p, 0.5, k, k, Loss::c_logistic()));
    EXPECT_EQ(a.signed_difference, -b.signed_difference);
    EXPECT_EQ(a.lhs, b.lhs);
    EXPECT_GT(a.lhs, 0.0);
}

TEST(Verify, SmallLambdaH1) {
    GroundSpace s = line(6);
    auto p = DiscreteMeasure::uniform(s, {{0, 1.0}, {1, -1.0}, {2, 1.0}, {3, -1.0}, {4, 1.0}});
    auto q = contaminate(p, 2, {{5, -1.0}, {0, -1.0}});
    Kernel k1(GaussianRbf{0.5}), k2(GaussianRbf{0.6});
    for (Theorem t : {Theorem::thm3_h1_part1, Theorem::thm3_h1_part2, Theorem::thm5_pair_h1_part1,
                      Theorem::thm5_pair_h1_part2}) {
        auto rep = verify(make(t, p, 1e-3, q, 2e-3, k1, k2, default_loss(t)));
        EXPECT_TRUE(rep.precondition_ok) << rep.precondition_note;
        EXPECT_TRUE(rep.passed()) << to_string(t) << " margin " << rep.margin;
    }
    auto flagged = verify(make(Theorem::thm2_sup, p, 1e-3, q, 2e-3, k1, k2, Loss::c_logistic()));
    EXPECT_FALSE(flagged.precondition_ok);
}

TEST(Batch, Summaries) {
    EXPECT_EQ(batch_verify({}).summary.total, 0);
    EXPECT_FALSE(batch_verify({}).summary.min_margin);

    GroundSpace s = line(5);
    auto p = binary_measure(s);
    Kernel k(GaussianRbf{1.0});
    std::vector<Scenario> three(3, make(Theorem::thm2_sup, p, 1.0, p, 1.0, k, k, Loss::c_logistic()));
    auto r = batch_verify(three);
    EXPECT_EQ(r.summary.passed, 3);
    for (const auto& rep : r.reports) EXPECT_EQ(rep.lhs, 0.0);

    std::vector<Scenario> mixed{make(Theorem::thm2_sup, p, 1.0, p, 1.2, k, k, Loss::c_logistic()),
                                make(Theorem::thm2_sup, p, 0.1, p, 1.2, k, k, Loss::c_logistic()),
                                make(Theorem::thm2_sup, p, 1.0, p, 1.2, k, k, Loss::hinge())};
    auto m = batch_verify(mixed);
    EXPECT_EQ(m.summary.total, 3);
    EXPECT_EQ(m.summary.passed, 1);
    EXPECT_EQ(m.summary.flagged, 1);
    EXPECT_EQ(m.summary.errors, 1);
    EXPECT_TRUE(m.reports[2].error);
}

TEST(Batch, RandomScenariosAllTheoremsAndJobs) {
    std::vector<Scenario> all;
    for (Theorem t : all_theorems()) {
        RandomScenarioConfig cfg;
        cfg.max_points = 8;
        cfg.max_atoms = 10;
        auto v = random_scenarios(t, 4, 100 + static_cast<int>(t), cfg);
        all.insert(all.end(), v.begin(), v.end());
    }
    auto one = batch_verify(all, {}, 1);
    auto many = batch_verify(all, {}, 3);
    EXPECT_EQ(one.summary.errors, 0);
    EXPECT_EQ(one.summary.passed, one.summary.checked);
    ASSERT_EQ(one.reports.size(), many.reports.size());
    for (std::size_t i = 0; i < one.reports.size(); ++i) {
        EXPECT_EQ(one.reports[i].name, many.reports[i].name);
        EXPECT_EQ(one.reports[i].margin, many.reports[i].margin);
    }
    auto again = random_scenarios(Theorem::thm2_sup, 3, 5);
    auto same = random_scenarios(Theorem::thm2_sup, 3, 5);
    for (std::size_t i = 0; i < again.size(); ++i) {
        EXPECT_EQ(again[i].first.lambda, same[i].first.lambda);
        EXPECT_EQ(again[i].first.measure.weights(), same[i].first.measure.weights());
    }
}
