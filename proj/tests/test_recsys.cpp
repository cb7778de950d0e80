#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "shiftrec/io.hpp"
#include "shiftrec/recsys.hpp"

using namespace shiftrec;
using testutil::sparse_matrix;

TEST_CASE("recommend passes ratings through and imputes the rest") {
    auto t = sparse_matrix(2, 2, {{1, 2, 2.0}, {2, 1, 3.0}, {2, 2, 4.0}});
    Recommender sc(t, Method::sc);
    CHECK(sc.recommend(Coord{1, 2}) == 2.0);
    CHECK(std::abs(sc.recommend(Coord{1, 1}) - 1.0) < 1e-8);
    CHECK_THROWS_AS(sc.recommend(Coord{5, 1}), ConfigError);

    // multiplicative example under uc: r=(1,2), c=(3,4) with (1,1) removed
    auto mult = sparse_matrix(2, 2, {{1, 2, 4.0}, {2, 1, 6.0}, {2, 2, 8.0}});
    Recommender uc(mult, Method::uc);
    CHECK(std::abs(uc.recommend(Coord{1, 1}) - 3.0) < 1e-8);
}

TEST_CASE("top_n ranks only unrated items") {
    // user 1 rated everything -> empty list
    auto t = sparse_matrix(2, 4,
                           {{1, 1, 5.0}, {1, 2, 4.0}, {1, 3, 3.0}, {1, 4, 2.0}, {2, 1, 5.0}, {2, 2, 4.0}});
    Recommender r(t, Method::sc);
    CHECK(top_n(r, 1, 3).items.empty());

    // user 2's imputations: item3 tracks user 1's 3.0, item4 tracks 2.0
    auto t1 = top_n(r, 2, 1);
    REQUIRE(t1.items.size() == 1);
    CHECK(t1.items[0] == 3);
    auto t2 = top_n(r, 2, 10);
    CHECK(t2.items == std::vector<Index>{3, 4});

    CHECK_THROWS_AS(top_n(r, 2, 0), ConfigError);
    CHECK_THROWS_AS(top_n(r, 9, 1), ConfigError);
}

TEST_CASE("top_n breaks prediction ties by ascending item id") {
    // symmetric columns force equal imputations for items 2 and 3
    auto t = sparse_matrix(2, 3, {{1, 1, 2.0}, {2, 2, 3.0}, {2, 3, 3.0}, {2, 1, 2.0}});
    Recommender r(t, Method::sc);
    auto ranked = top_n(r, 1, 2);
    REQUIRE(ranked.items.size() == 2);
    CHECK(r.recommend(Coord{1, 2}) == r.recommend(Coord{1, 3}));
    CHECK(ranked.items == std::vector<Index>{2, 3});
}

TEST_CASE("top_n is identical across independently built recommenders") {
    auto inst = generate({Shape({9, 7}), SyntheticModel::additive, 0.5, 2.5, 0.3, 0.5}, 13);
    Recommender a(inst.masked, Method::sc), b(inst.masked, Method::sc);
    for (Index user = 1; user <= 9; ++user) {
        CHECK(top_n(a, user, 5).items == top_n(b, user, 5).items);
    }
}

TEST_CASE("consensus ordering on a product permutation") {
    // users 1-3 rate items 1,2 with unanimous item1 < item2; users 4,5 rated
    // neither
    auto t = sparse_matrix(5, 2,
                           {{1, 1, 1.0}, {1, 2, 2.0},
                            {2, 1, 2.5}, {2, 2, 3.5},
                            {3, 1, 1.5}, {3, 2, 4.0}});
    Recommender r(t, Method::sc);
    ConsensusCheck check = verify_consensus(r, {2, {1, 2}});
    CHECK(check.pattern_valid);
    CHECK(check.common_known == 3);
    CHECK(check.common_unknown == 2);
    CHECK(check.violations.empty());
    for (Index u : {Index{4}, Index{5}}) {
        CHECK(r.recommend(Coord{u, 1}) < r.recommend(Coord{u, 2}));
    }
}

TEST_CASE("consensus ordering over users via the transposed axis") {
    auto t = sparse_matrix(2, 5,
                           {{1, 1, 1.0}, {2, 1, 2.0},
                            {1, 2, 2.5}, {2, 2, 3.5},
                            {1, 3, 1.5}, {2, 3, 4.0}});
    Recommender r(t, Method::sc);
    ConsensusCheck check = verify_consensus(r, {1, {1, 2}});
    CHECK(check.pattern_valid);
    CHECK(check.violations.empty());
}

TEST_CASE("consensus ordering on a planted 3-D attribute pattern") {
    auto planted = plant_consensus_instance(Shape({4, 3, 3}), 3, 3, 77);
    Recommender r(planted.tensor, Method::sc);
    ConsensusCheck check = verify_consensus(r, planted.pattern);
    CHECK(check.pattern_valid);
    CHECK(check.common_unknown > 0);
    CHECK(check.violations.empty());
}

TEST_CASE("malformed patterns are precondition failures, not violations") {
    auto t = sparse_matrix(3, 2, {{1, 1, 1.0}, {1, 2, 2.0}, {2, 1, 3.0}});
    Recommender r(t, Method::sc);

    // unequal known sets
    ConsensusCheck unequal = verify_consensus(r, {2, {1, 2}});
    CHECK(!unequal.pattern_valid);
    CHECK(unequal.precondition_error.find("known sets") != std::string::npos);

    // ties are rejected rather than guessed
    auto tied = sparse_matrix(3, 2, {{1, 1, 2.0}, {1, 2, 2.0}, {2, 1, 3.0}, {2, 2, 4.0}});
    Recommender rt(tied, Method::sc);
    ConsensusCheck tie_check = verify_consensus(rt, {2, {1, 2}});
    CHECK(!tie_check.pattern_valid);
    CHECK(tie_check.precondition_error.find("strictly ordered") != std::string::npos);

    ConsensusCheck dup = verify_consensus(r, {2, {1, 1}});
    CHECK(!dup.pattern_valid);
}

TEST_CASE("pattern search recovers a planted pattern") {
    auto planted = plant_consensus_instance(Shape({6, 4}), 2, 3, 5);
    auto found = find_consensus_patterns(planted.tensor, 2);
    REQUIRE(!found.empty());
    bool contains = false;
    for (const auto& pat : found) {
        if (pat.gamma == planted.pattern.gamma) contains = true;
    }
    CHECK(contains);
    Recommender r(planted.tensor, Method::sc);
    for (const auto& pat : found) {
        ConsensusCheck check = verify_consensus(r, pat);
        CHECK(check.pattern_valid);
        CHECK(check.violations.empty());
    }
}

TEST_CASE("randomized consensus patterns hold across shapes") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        for (const Shape& shape : {Shape({6, 5}), Shape({4, 3, 3})}) {
            const Index axis = 1 + static_cast<Index>(seed % static_cast<std::uint64_t>(shape.dim()));
            auto planted = plant_consensus_instance(shape, axis, 3, seed * 101);
            Recommender r(planted.tensor, Method::sc);
            ConsensusCheck check = verify_consensus(r, planted.pattern);
            REQUIRE(check.pattern_valid);
            CHECK(check.violations.empty());
            ++checked;
        }
    }
    CHECK(checked == 200);
}

TEST_CASE("fairness probe: shifting one user leaves others untouched") {
    auto inst = generate({Shape({12, 9}), SyntheticModel::additive, 0.5, 2.5, 0.3, 0.5,
                          RatingScale{1.0, 5.0, 1.0}},
                         3);
    ConvergenceConfig cfg;
    cfg.epsilon = 1e-24;
    cfg.max_sweeps = 100000;
    std::vector<Index> ns{1, 2, 3, 4, 5};
    auto rep = fairness_probe(inst.masked, 2, 1.0, ns, Method::sc, cfg);
    CHECK(rep.max_other_deviation <= 1e-9);
    for (Index c : rep.changed_counts) CHECK(c == 0);
    // the shifted user's own predictions move by exactly the delta
    CHECK(rep.max_self_deviation <= 1e-9);
}

TEST_CASE("fairness probe with zero delta is exactly unchanged") {
    auto inst = generate({Shape({8, 6}), SyntheticModel::additive, 0.5, 2.5, 0.2, 0.6}, 11);
    std::vector<Index> ns{1, 3};
    auto rep = fairness_probe(inst.masked, 1, 0.0, ns, Method::sc);
    CHECK(rep.max_other_deviation == 0.0);
    CHECK(rep.max_self_deviation == 0.0);
    for (Index c : rep.changed_counts) CHECK(c == 0);
}

TEST_CASE("fairness probe rejects users without ratings") {
    auto t = sparse_matrix(3, 3, {{1, 1, 1.0}, {1, 2, 2.0}, {3, 1, 2.0}, {3, 3, 1.0}});
    std::vector<Index> ns{1};
    CHECK_THROWS_AS(fairness_probe(t, 2, 1.0, ns, Method::sc), ConfigError);
}

TEST_CASE("fairness probe under uc scales one user and spares the rest") {
    auto inst = generate({Shape({12, 9}), SyntheticModel::multiplicative, 0.8, 3.0, 0.2, 0.5}, 23);
    ConvergenceConfig cfg;
    cfg.epsilon = 1e-24;
    cfg.max_sweeps = 100000;
    std::vector<Index> ns{1, 2, 3};
    // automatic mode applies a scale factor for uc
    auto rep = fairness_probe(inst.masked, 1, 1.25, ns, Method::uc, cfg);
    CHECK(rep.mode == DeltaMode::scale);
    CHECK(rep.max_other_deviation <= 1e-9);
    CHECK(rep.max_self_deviation <= 1e-9);  // own predictions scale by exactly 1.25
    for (Index c : rep.changed_counts) CHECK(c == 0);
}

TEST_CASE("additive shifts do break unit-consistent rankings") {
    // the shift-fairness property is specific to sc; running uc in add mode
    // must register deviations, otherwise the probe is vacuous
    auto inst = generate({Shape({10, 8}), SyntheticModel::multiplicative, 0.8, 3.0, 0.2, 0.6}, 19);
    std::vector<Index> ns{1, 2, 3};
    auto rep = fairness_probe(inst.masked, 1, 1.0, ns, Method::uc, {}, DeltaMode::add);
    CHECK(rep.max_other_deviation > 1e-6);
}

TEST_CASE("default fairness user picks max rating one below scale max") {
    auto t = sparse_matrix(3, 2, {{1, 1, 5.0}, {2, 1, 4.0}, {2, 2, 2.0}, {3, 1, 4.0}});
    CHECK(default_fairness_user(t, 5.0) == 2);
}

TEST_CASE("fairness csv columns") {
    FairnessReport rep;
    rep.ns = {1, 2};
    rep.changed_counts = {0, 0};
    CHECK(fairness_csv(rep) == "N,changed_user_count\n1,0\n2,0\n");
}
