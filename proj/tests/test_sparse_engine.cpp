#include <doctest.h>

#include <random>

#include "support/random_games.hpp"
#include "tsg/sparse_engine.hpp"

using namespace tsg;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

ExplicitResult run(const ExplicitTsg& g, const std::string& prop, SolverConfig cfg = {}) {
    SparseEngine eng(g);
    auto f = parse_property(prop, eng.context());
    return eng.check(f, cfg);
}
}  // namespace

TEST_CASE("fig1 reachability probabilities") {
    ExplicitTsg g = fig1_game();
    auto r1 = run(g, "<<p1>> Pmax=? [ F \"goal\" ]");
    CHECK(r1.values[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r1.values[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r1.values[2] == doctest::Approx(1.0).epsilon(1e-9));
    // strategy at s0 includes action b (rank 1)
    REQUIRE(r1.strategy.count(0));
    CHECK(std::find(r1.strategy[0].begin(), r1.strategy[0].end(), 1) != r1.strategy[0].end());

    auto r2 = run(g, "<<p2>> Pmax=? [ F \"goal\" ]");
    CHECK(r2.values[0] == doctest::Approx(0.0));
    CHECK(r2.values[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r2.values[2] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fig1 precomputation sets") {
    ExplicitTsg g = fig1_game();
    SparseEngine eng(g);
    BitSet target = eng.label_set("goal");
    BitSet all(g.num_states(), 1);
    SUBCASE("prob0") {
        CHECK(eng.prob0(Coalition::of({0}), target, all) == BitSet{0, 0, 0});
        CHECK(eng.prob0(Coalition::of({1}), target, all) == BitSet{1, 0, 0});
        CHECK(eng.prob0(Coalition::of({0}), all, all) == BitSet{0, 0, 0});
    }
    SUBCASE("prob1") {
        CHECK(eng.prob1(Coalition::of({0}), target, all) == BitSet{1, 1, 1});
        CHECK(eng.prob1(Coalition::of({1}), target, all) == BitSet{0, 1, 1});
        BitSet empty(g.num_states(), 0);
        CHECK(eng.prob1(Coalition::of({0}), empty, all) == empty);
    }
}

TEST_CASE("fig1 rewards") {
    ExplicitTsg g = fig1_game();
    auto rmin = run(g, "<<p1>> R{\"r\"}min=? [ F \"goal\" ]");
    CHECK(rmin.values[0] == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(rmin.values[1] == doctest::Approx(10.0 / 9.0).epsilon(1e-5));
    CHECK(rmin.values[2] == doctest::Approx(0.0));

    auto rmax = run(g, "<<p1>> R{\"r\"}max=? [ F \"goal\" ]");
    CHECK(rmax.values[0] == kInf);  // player 1 loops on a forever

    auto i0 = run(g, "<<p1>> R{\"r\"}max=? [ I=0 ]");
    CHECK(i0.values == std::vector<double>{1.0, 1.0, 0.0});
}

TEST_CASE("fig1 bounded operators") {
    ExplicitTsg g = fig1_game();
    auto f1 = run(g, "<<p1>> Pmax=? [ F<=1 \"goal\" ]");
    CHECK(f1.values[0] == doctest::Approx(0.1).epsilon(1e-12));
    auto f2 = run(g, "<<p1>> Pmax=? [ F<=2 \"goal\" ]");
    CHECK(f2.values[0] == doctest::Approx(0.91).epsilon(1e-12));
    auto f0 = run(g, "<<p1>> Pmax=? [ F<=0 \"goal\" ]");
    CHECK(f0.values == std::vector<double>{0.0, 0.0, 1.0});

    auto x1 = run(g, "<<p1>> Pmax=? [ X \"one\" ]");
    CHECK(x1.values[0] == doctest::Approx(0.9).epsilon(1e-12));
    auto x2 = run(g, "<<p2>> Pmax=? [ X \"one\" ]");
    CHECK(x2.values[0] == doctest::Approx(0.0));
}

TEST_CASE("threshold and propositional handling") {
    ExplicitTsg g = fig1_game();
    auto t = run(g, "<<p1>> P>=0.5 [ F \"goal\" ]");
    CHECK(t.sat == BitSet{1, 1, 1});
    auto t2 = run(g, "<<p2>> P>=0.5 [ F \"goal\" ]");
    CHECK(t2.sat == BitSet{0, 1, 1});
    auto p = run(g, "!\"goal\" & true");
    CHECK(p.sat == BitSet{1, 1, 0});
}

TEST_CASE("globally via inverted reachability") {
    ExplicitTsg g = fig1_game();
    // P1 can stay away from the goal forever by looping on a
    auto gmax = run(g, "<<p1>> Pmax=? [ G !\"goal\" ]");
    CHECK(gmax.values[0] == doctest::Approx(1.0).epsilon(1e-9));
    auto gmin = run(g, "<<p2>> Pmax=? [ G !\"goal\" ]");
    CHECK(gmin.values[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("non-convergence raises") {
    ExplicitTsg h;
    h.players = {"p1", "p2"};
    h.var_names = {"s"};
    h.states = {{0}, {1}, {2}};
    h.owner = {0, 1, 0};
    h.init = 0;
    h.actions = {"a", "b"};
    h.delta.resize(3);
    h.delta[0][0] = {{0, 0.5}, {1, 0.25}, {2, 0.25}};
    h.delta[1][0] = {{1, 1.0}};  // sink: s0 is a genuine maybe-state
    h.delta[2][0] = {{2, 1.0}};
    h.labels["goal"] = {2};
    SolverConfig cfg;
    cfg.max_iters = 1;
    SparseEngine eng(h);
    auto f = parse_property("<<p1>> Pmax=? [ F \"goal\" ]", eng.context());
    CHECK_THROWS_AS(eng.check(f, cfg), NonConvergenceError);
}

TEST_CASE("degenerate coalitions reduce to MDP solves") {
    ExplicitTsg g = fig1_game();
    auto all = run(g, "<<p1,p2>> Pmax=? [ F \"goal\" ]");
    CHECK(all.values[0] == doctest::Approx(1.0).epsilon(1e-9));
    auto none = run(g, "<<>> Pmax=? [ F \"goal\" ]");
    CHECK(none.values[0] == doctest::Approx(0.0));  // everyone minimises
}

TEST_CASE("brute force agrees with value iteration on small games") {
    std::mt19937 rng(2024);
    testing::GameGenConfig cfg;
    cfg.min_states = 2;
    cfg.max_states = 6;
    SolverConfig scfg;
    for (int round = 0; round < 15; ++round) {
        ExplicitTsg g = testing::random_game(rng, cfg);
        SparseEngine eng(g);
        BitSet target = eng.label_set("g");
        BitSet all(g.num_states(), 1);
        Coalition c = Coalition::of({0});

        auto iter = eng.reach_probability(c, target, all, scfg);
        oracle::UnboundedSpec spec;
        spec.is_reward = false;
        spec.target = target;
        spec.stay = all;
        auto bf = oracle::brute_force_unbounded(g, c, spec);
        for (std::size_t s = 0; s < g.num_states(); ++s)
            CHECK(iter.values[s] == doctest::Approx(bf[s]).epsilon(1e-6));

        // bounded until via expectimax
        oracle::BoundedSpec bspec;
        bspec.kind = oracle::BoundedSpec::Kind::BoundedUntil;
        bspec.target = target;
        bspec.stay = all;
        bspec.k = 3;
        auto bfb = oracle::brute_force_bounded(g, c, bspec);
        auto vib = eng.bounded_until(c, all, target, 3);
        for (std::size_t s = 0; s < g.num_states(); ++s)
            CHECK(vib[s] == doctest::Approx(bfb[s]).epsilon(1e-9));
    }
}

TEST_CASE("brute force trivial cases") {
    ExplicitTsg g = fig1_game();
    SparseEngine eng(g);
    // no path to an empty target
    oracle::UnboundedSpec spec;
    spec.target.assign(3, 0);
    spec.stay.assign(3, 1);
    auto v = oracle::brute_force_unbounded(g, Coalition::of({0}), spec);
    CHECK(v == std::vector<double>{0.0, 0.0, 0.0});
    // fig1 target {s2}
    spec.target = eng.label_set("goal");
    auto w = oracle::brute_force_unbounded(g, Coalition::of({0}), spec);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w[1] == doctest::Approx(1.0));
}

TEST_CASE("fig1 equilibrium and best response") {
    ExplicitTsg g = fig1_game();
    SparseEngine eng(g);
    auto f = parse_property("<<p1:p2>> max=? ( P[ F \"two\" ] + P[ F \"one\" ] )", eng.context());
    SolverConfig cfg;
    auto res = eng.check(f, cfg);
    CHECK(res.nash_values1[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.nash_values2[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(res.values[0] == doctest::Approx(1.9).epsilon(1e-6));
    // profile plays b at s0
    REQUIRE(res.strategy.count(0));
    CHECK(res.strategy[0] == std::vector<int>{1});

    // the returned profile admits no improving deviation
    auto o1 = eng.resolve_objective(f->objectives[0], cfg);
    auto o2 = eng.resolve_objective(f->objectives[1], cfg);
    std::vector<int> profile(g.num_states(), 0);
    for (auto& [s, acts] : res.strategy) profile[s] = acts[0];
    auto [g1, g2] = oracle::check_best_response(g, Coalition::of({0}), profile, o1, o2, true);
    CHECK(g1 <= 1e-6);
    CHECK(g2 <= 1e-6);

    // profile (a at s0) is not an equilibrium: player 1 gains 1.0 by b
    std::vector<int> bad = profile;
    bad[0] = 0;
    auto [b1, b2] = oracle::check_best_response(g, Coalition::of({0}), bad, o1, o2, true);
    CHECK(b1 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("single state equilibrium converges immediately") {
    ExplicitTsg g;
    g.players = {"p1", "p2"};
    g.var_names = {"s"};
    g.states = {{0}};
    g.owner = {0};
    g.init = 0;
    g.actions = {"a"};
    g.delta.resize(1);
    g.delta[0][0] = {{0, 1.0}};
    g.labels["both"] = {0};
    SparseEngine eng(g);
    auto f = parse_property("<<p1:p2>> max=? ( P[ F \"both\" ] + P[ F \"both\" ] )", eng.context());
    auto res = eng.check(f, SolverConfig{});
    CHECK(res.values[0] == doctest::Approx(2.0));
    CHECK(res.stats.iterations <= 10);
}
