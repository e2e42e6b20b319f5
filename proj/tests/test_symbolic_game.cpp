#include <doctest.h>

#include <random>

#include "support/random_games.hpp"
#include "tsg/symbolic_game.hpp"

using namespace tsg;

namespace {

// Expands partial path valuations to full rows over the given variables.
std::vector<std::pair<dd::Valuation, double>> full_rows(const dd::Manager& m, const dd::Mtbdd& f,
                                                        const std::vector<dd::VarId>& vars) {
    std::vector<std::pair<dd::Valuation, double>> out;
    for (auto& [pv, val] : m.enumerate_paths(f)) {
        std::vector<dd::Valuation> todo{pv};
        for (dd::VarId v : vars) {
            std::vector<dd::Valuation> next;
            for (auto& q : todo) {
                if (q.is_set(v)) {
                    next.push_back(q);
                } else {
                    dd::Valuation q0 = q, q1 = q;
                    q0.set(v, false);
                    q1.set(v, true);
                    next.push_back(q0);
                    next.push_back(q1);
                }
            }
            todo = std::move(next);
        }
        for (auto& q : todo) out.emplace_back(q, val);
    }
    return out;
}

}  // namespace

TEST_CASE("fig1 encodes to the six-row transition MTBDD") {
    SymbolicTsg sym = encode(fig1_game());
    auto& m = *sym.mgr;
    REQUIRE(sym.wvars.size() == 2);
    REQUIRE(sym.zvars.size() == 1);
    REQUIRE(sym.xvars.size() == 2);

    std::vector<dd::VarId> all{sym.wvars[0], sym.wvars[1], sym.zvars[0],
                               sym.xvars[0], sym.yvars[0], sym.xvars[1], sym.yvars[1]};
    auto rows = full_rows(m, sym.trans, all);
    REQUIRE(rows.size() == 6);

    // expected rows: (w1,w2, z1, x1,x2, y1,y2) -> prob
    struct Row {
        int w1, w2, z1, x1, x2, y1, y2;
        double p;
    };
    const Row expect[] = {
        {1, 0, 0, 0, 0, 0, 0, 1.0},  // pl.1, a, s0 -> s0
        {1, 0, 1, 0, 0, 0, 1, 0.9},  // pl.1, b, s0 -> s1
        {1, 0, 1, 0, 0, 1, 0, 0.1},  // pl.1, b, s0 -> s2
        {0, 1, 0, 0, 1, 0, 1, 0.1},  // pl.2, a, s1 -> s1
        {0, 1, 0, 0, 1, 1, 0, 0.9},  // pl.2, a, s1 -> s2
        {1, 0, 0, 1, 0, 1, 0, 1.0},  // pl.1, a, s2 -> s2
    };
    for (const Row& e : expect) {
        bool found = false;
        for (auto& [v, p] : rows) {
            if (v.value(sym.wvars[0]) == (e.w1 == 1) && v.value(sym.wvars[1]) == (e.w2 == 1) &&
                v.value(sym.zvars[0]) == (e.z1 == 1) && v.value(sym.xvars[0]) == (e.x1 == 1) &&
                v.value(sym.xvars[1]) == (e.x2 == 1) && v.value(sym.yvars[0]) == (e.y1 == 1) &&
                v.value(sym.yvars[1]) == (e.y2 == 1)) {
                CHECK(p == e.p);  // bit-exact
                found = true;
            }
        }
        CHECK(found);
    }

    // direct evaluation of the table row s0 -b-> s1
    dd::Valuation v;
    v.set(sym.wvars[0], true);
    v.set(sym.wvars[1], false);
    v.set(sym.zvars[0], true);
    v.set(sym.xvars[0], false);
    v.set(sym.xvars[1], false);
    v.set(sym.yvars[0], false);
    v.set(sym.yvars[1], true);
    CHECK(m.evaluate(sym.trans, v) == 0.9);
}

TEST_CASE("row sums and ownership invariants") {
    SymbolicTsg sym = encode(fig1_game());
    auto& m = *sym.mgr;
    dd::Mtbdd row_sums = m.abstract_(dd::AbstractOp::Plus, sym.yvars, sym.trans);
    // enabled rows sum to one
    dd::Mtbdd on_enabled = m.apply(dd::BinOp::Times, row_sums, sym.enabled);
    CHECK(m.sup_norm(on_enabled, dd::Mtbdd(sym.enabled), false) <= 1e-9);
    // abstract(+, y, trans) restricted to (player 1, b, s0) equals 0.9 + 0.1
    dd::Valuation v;
    v.set(sym.wvars[0], true);
    v.set(sym.wvars[1], false);
    v.set(sym.zvars[0], true);
    v.set(sym.xvars[0], false);
    v.set(sym.xvars[1], false);
    CHECK(m.evaluate(row_sums, v) == doctest::Approx(1.0).epsilon(1e-12));
    // rows under the wrong player cube vanish
    dd::Mtbdd wrong = m.apply(dd::BinOp::Times, sym.trans, m.not_(sym.player_cubes[0]));
    dd::Mtbdd s0rows = m.apply(dd::BinOp::Times, wrong, sym.state_cube({0}, sym.xvars));
    CHECK(m.max_terminal(s0rows) == 0.0);
}

TEST_CASE("reachable matches explicit BFS") {
    SymbolicTsg sym = encode(fig1_game());
    CHECK(sym.count_states(sym.reach) == 3.0);

    std::mt19937 rng(99);
    testing::GameGenConfig cfg;
    cfg.min_states = 3;
    cfg.max_states = 20;
    for (int round = 0; round < 20; ++round) {
        ExplicitTsg g = testing::random_game(rng, cfg);
        SymbolicTsg s = encode(g);
        auto bfs = g.bfs_reachable();
        std::size_t n = 0;
        for (bool b : bfs) n += b;
        CHECK(s.count_states(s.reach) == static_cast<double>(n));
        for (std::size_t st = 0; st < g.num_states(); ++st) {
            dd::Valuation v;
            s.state_bits(g.states[st], s.xvars, v);
            CHECK(s.mgr->evaluate(s.reach, v) == (bfs[st] ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("encode/decode round trip") {
    SUBCASE("fig1") {
        ExplicitTsg g = fig1_game();
        ExplicitTsg h = decode(encode(g));
        CHECK(games_equal(g, h));
        CHECK(h.num_transitions() == 6);
    }
    SUBCASE("single self-loop game") {
        ExplicitTsg g;
        g.players = {"p1"};
        g.var_names = {"s"};
        g.states = {{0}};
        g.owner = {0};
        g.init = 0;
        g.actions = {"a"};
        g.delta.resize(1);
        g.delta[0][0] = {{0, 1.0}};
        SymbolicTsg sym = encode(g);
        // trans is a single cube with terminal 1
        auto paths = sym.mgr->enumerate_paths(sym.trans);
        REQUIRE(paths.size() == 1);
        CHECK(paths[0].second == 1.0);
        CHECK(games_equal(g, decode(sym)));
    }
    SUBCASE("random 20-state games") {
        std::mt19937 rng(123);
        testing::GameGenConfig cfg;
        cfg.min_states = 5;
        cfg.max_states = 20;
        for (int round = 0; round < 15; ++round) {
            ExplicitTsg g = testing::random_game(rng, cfg);
            ExplicitTsg h = decode(encode(g));
            CHECK(games_equal(g, h));
        }
    }
}

TEST_CASE("player partition bdds") {
    SymbolicTsg sym = encode(fig1_game());
    auto& m = *sym.mgr;
    SUBCASE("singleton coalition") {
        auto [p1, p2] = player_partition_bdds(sym, Coalition::of({0}));
        dd::Valuation w10, w01;
        w10.set(sym.wvars[0], true);
        w10.set(sym.wvars[1], false);
        w01.set(sym.wvars[0], false);
        w01.set(sym.wvars[1], true);
        CHECK(m.evaluate(p1, w10) == 1.0);
        CHECK(m.evaluate(p1, w01) == 0.0);
        CHECK(m.evaluate(p2, w01) == 1.0);
        CHECK(m.and_(p1, p2) == m.false_());
    }
    SUBCASE("degenerate coalitions") {
        auto [pAll, pNone] = player_partition_bdds(sym, Coalition::of({0, 1}));
        CHECK(pNone == m.false_());
        auto [pEmpty, pFull] = player_partition_bdds(sym, Coalition::of({}));
        CHECK(pEmpty == m.false_());
        CHECK(pFull == pAll);
    }
}

TEST_CASE("decode detects mixed ownership") {
    SymbolicTsg sym = encode(fig1_game());
    auto& m = *sym.mgr;
    // corrupt: add a player-2 row for state s0 (owned by player 1)
    dd::Bdd row = m.and_(m.and_(sym.player_cubes[1], sym.action_cube(0)),
                         m.and_(sym.state_cube({0}, sym.xvars), sym.state_cube({0}, sym.yvars)));
    sym.trans = m.apply(dd::BinOp::Plus, sym.trans, row);
    sym.finalize();
    CHECK_THROWS_AS(decode(sym), ModelError);
}

TEST_CASE("dot export of the game diagram mentions variable names") {
    SymbolicTsg sym = encode(fig1_game());
    std::string dot = sym.mgr->to_dot(sym.trans, "trans");
    CHECK(dot.find("w1") != std::string::npos);
    CHECK(dot.find("y2") != std::string::npos);
}
