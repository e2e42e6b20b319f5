// Command-line front end: build game models, check properties with the
// symbolic or explicit engine, export strategies, and run the benchmark
// harness. Exit codes: 0 success, 1 threshold violation under --assert,
// 2 usage/model errors, 3 numeric non-convergence.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "tsg/bench.hpp"
#include "tsg/check.hpp"
#include "tsg/model_build.hpp"
#include "tsg/sparse_engine.hpp"

namespace {

using namespace tsg;

dd::ManagerConfig manager_config() {
    dd::ManagerConfig cfg;
    if (const char* cap = std::getenv("TSGCHECK_NODE_LIMIT")) {
        try {
            cfg.max_nodes = std::stoull(cap);
        } catch (...) {
            throw ModelError("TSGCHECK_NODE_LIMIT is not a number");
        }
    }
    return cfg;
}

void print_stats(const CheckStats& s) {
    std::cout << "iterations=" << s.iterations << "\n";
    std::cout << "final_norm=" << s.final_norm << "\n";
    std::cout << "prob0_states=" << s.prob0_states << "\n";
    std::cout << "prob1_states=" << s.prob1_states << "\n";
    std::cout << "inf_states=" << s.inf_states << "\n";
    std::cout << "qual_seconds=" << s.qual_seconds << "\n";
    std::cout << "quant_seconds=" << s.quant_seconds << "\n";
    std::cout << "value_nodes=" << s.value_nodes << "\n";
    std::cout << "strategy_size=" << s.strategy_size << "\n";
}

struct CheckFlags {
    bool any_nonconvergence = false;
    bool any_violation = false;
    bool any_error = false;
};

void check_symbolic(const ModelSource& src, const Overrides& overrides, const std::string& props_path,
                    const SolverConfig& cfg, bool stats, bool full_vector,
                    const std::string& strategy_path, const std::string& strategy_format,
                    CheckFlags& flags) {
    SymbolicTsg sym = build_symbolic_from(src, overrides, manager_config());
    SymbolicChecker checker(sym);
    std::ifstream pf(props_path);
    if (!pf) throw ModelError("cannot open " + props_path);
    auto props = parse_property_file(pf, checker.context());
    for (auto& [name, formula] : props) {
        std::cout << name << ": " << to_string(*formula, sym.players) << "\n";
        try {
            CheckResult res = checker.check(formula, cfg);
            if (formula->bound.numeric)
                std::cout << "  value = " << format_value(res.initial_value) << "\n";
            if (!formula->bound.numeric && res.sat.valid()) {
                dd::Valuation iv;
                sym.state_bits(sym.init_state, sym.xvars, iv);
                bool holds = sym.mgr->evaluate(res.sat, iv) != 0.0;
                std::cout << "  satisfied at the initial state = " << (holds ? "true" : "false") << "\n";
                if (!holds) flags.any_violation = true;
            }
            if (full_vector) {
                ExplicitTsg dec = decode(sym);
                for (std::size_t s = 0; s < dec.num_states(); ++s) {
                    dd::Valuation v;
                    sym.state_bits(dec.states[s], sym.xvars, v);
                    std::cout << "  " << dec.state_string(static_cast<int>(s)) << " = "
                              << format_value(sym.mgr->evaluate(res.values, v)) << "\n";
                }
            }
            if (!strategy_path.empty() && res.strategy) {
                std::ofstream out(strategy_path);
                if (!out) throw ModelError("cannot write " + strategy_path);
                if (strategy_format == "dot")
                    out << sym.mgr->to_dot(res.strategy->rows, "strategy");
                else
                    export_strategy_text(sym, checker, res.profile_rows, out);
                std::cout << "  strategy written to " << strategy_path << "\n";
            }
            if (stats) print_stats(res.stats);
        } catch (const NonConvergenceError& e) {
            std::cout << "  error: " << e.what() << "\n";
            flags.any_nonconvergence = true;
        } catch (const std::exception& e) {
            std::cout << "  error: " << e.what() << "\n";
            flags.any_error = true;
        }
    }
}

void check_explicit(const ModelSource& src, const Overrides& overrides, const std::string& props_path,
                    const SolverConfig& cfg, bool stats, bool full_vector,
                    const std::string& strategy_path, CheckFlags& flags) {
    ExplicitTsg game = build_explicit_from(src, overrides);
    SparseEngine eng(game);
    std::ifstream pf(props_path);
    if (!pf) throw ModelError("cannot open " + props_path);
    auto props = parse_property_file(pf, eng.context());
    for (auto& [name, formula] : props) {
        std::cout << name << ": " << to_string(*formula, game.players) << "\n";
        try {
            ExplicitResult res = eng.check(formula, cfg);
            if (formula->bound.numeric) std::cout << "  value = " << format_value(res.initial_value) << "\n";
            if (!formula->bound.numeric && !res.sat.empty()) {
                bool holds = res.sat[game.init];
                std::cout << "  satisfied at the initial state = " << (holds ? "true" : "false") << "\n";
                if (!holds) flags.any_violation = true;
            }
            if (full_vector)
                for (std::size_t s = 0; s < game.num_states(); ++s)
                    std::cout << "  " << game.state_string(static_cast<int>(s)) << " = "
                              << format_value(res.values[s]) << "\n";
            if (!strategy_path.empty() && !res.strategy.empty()) {
                std::ofstream out(strategy_path);
                if (!out) throw ModelError("cannot write " + strategy_path);
                for (auto& [s, acts] : res.strategy) {
                    out << game.state_string(s) << " ->";
                    for (int a : acts) out << " " << game.actions[a];
                    out << "\n";
                }
                std::cout << "  strategy written to " << strategy_path << "\n";
            }
            if (stats) print_stats(res.stats);
        } catch (const NonConvergenceError& e) {
            std::cout << "  error: " << e.what() << "\n";
            flags.any_nonconvergence = true;
        } catch (const std::exception& e) {
            std::cout << "  error: " << e.what() << "\n";
            flags.any_error = true;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace tsg;
    CLI::App app{"tsgcheck - symbolic verification of turn-based stochastic games"};
    app.require_subcommand(1);

    std::string model_path, props_path, engine = "symbolic", out_csv, models_dir;
    std::string manifest = "bench.manifest";
    std::string strategy_path, strategy_format = "text", dot_path;
    std::vector<std::string> const_pairs;
    bool stats = false, full_vector = false, do_assert = false, absolute = false;
    SolverConfig cfg;

    auto* build = app.add_subcommand("build", "build a model and report its size");
    build->add_option("model", model_path, "model file (.tsg or .tsgx)")->required();
    build->add_option("-c,--const", const_pairs, "constant override NAME=value");
    build->add_option("--engine", engine, "symbolic | explicit | both");
    build->add_flag("--stats", stats, "print manager statistics");
    build->add_option("--dot", dot_path, "write the transition diagram in DOT form");

    auto* check = app.add_subcommand("check", "check properties against a model");
    check->add_option("model", model_path, "model file (.tsg or .tsgx)")->required();
    check->add_option("--props", props_path, "property file")->required();
    check->add_option("-c,--const", const_pairs, "constant override NAME=value");
    check->add_option("--engine", engine, "symbolic | explicit");
    check->add_option("--epsilon", cfg.epsilon, "convergence threshold");
    check->add_option("--max-iters", cfg.max_iters, "iteration cap");
    check->add_flag("--absolute", absolute, "absolute instead of relative convergence");
    check->add_flag("--stats", stats, "print per-property statistics");
    check->add_flag("--full-vector", full_vector, "print values for every state");
    check->add_flag("--assert", do_assert, "exit 1 when a threshold property fails at the initial state");
    check->add_option("--export-strategy", strategy_path, "write the synthesised strategy here");
    check->add_option("--strategy-format", strategy_format, "text | dot");

    auto* bench = app.add_subcommand("bench", "run the benchmark manifest");
    bench->add_option("--models", models_dir, "directory with models and a manifest")->required();
    bench->add_option("--out", out_csv, "CSV output path")->required();
    bench->add_option("--manifest", manifest, "manifest file name");
    bench->add_option("--epsilon", cfg.epsilon, "convergence threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    cfg.relative = !absolute;

    try {
        if (app.got_subcommand(build)) {
            ModelSource src = load_model_source(model_path);
            Overrides overrides = parse_overrides(const_pairs);
            bool want_sym = engine == "symbolic" || engine == "both";
            bool want_exp = engine == "explicit" || engine == "both";
            if (!want_sym && !want_exp) throw ModelError("unknown engine: " + engine);
            if (want_sym) {
                double t0 = detail::now_seconds();
                SymbolicTsg sym = build_symbolic_from(src, overrides, manager_config());
                double dt = detail::now_seconds() - t0;
                std::cout << "engine=symbolic\n";
                std::cout << "states=" << static_cast<std::size_t>(sym.count_states(sym.reach)) << "\n";
                std::cout << "mtbdd_nodes=" << sym.mgr->node_count(sym.trans) << "\n";
                std::cout << "construct_seconds=" << dt << "\n";
                if (stats) {
                    std::cout << "live_nodes=" << sym.mgr->live_nodes() << "\n";
                    std::cout << "peak_nodes=" << sym.mgr->stats().peak_nodes << "\n";
                    std::cout << "apply_calls=" << sym.mgr->stats().apply_calls << "\n";
                    std::cout << "cache_hits=" << sym.mgr->stats().cache_hits << "\n";
                }
                if (!dot_path.empty()) {
                    std::ofstream out(dot_path);
                    if (!out) throw ModelError("cannot write " + dot_path);
                    out << sym.mgr->to_dot(sym.trans, "trans");
                }
            }
            if (want_exp) {
                double t0 = detail::now_seconds();
                ExplicitTsg game = build_explicit_from(src, overrides);
                double dt = detail::now_seconds() - t0;
                std::cout << "engine=explicit\n";
                std::cout << "states=" << game.num_states() << "\n";
                std::cout << "transitions=" << game.num_transitions() << "\n";
                std::cout << "construct_seconds=" << dt << "\n";
            }
            return 0;
        }
        if (app.got_subcommand(check)) {
            ModelSource src = load_model_source(model_path);
            Overrides overrides = parse_overrides(const_pairs);
            CheckFlags flags;
            if (engine == "symbolic")
                check_symbolic(src, overrides, props_path, cfg, stats, full_vector, strategy_path,
                               strategy_format, flags);
            else if (engine == "explicit")
                check_explicit(src, overrides, props_path, cfg, stats, full_vector, strategy_path, flags);
            else
                throw ModelError("unknown engine: " + engine);
            if (flags.any_nonconvergence) return 3;
            if (do_assert && flags.any_violation) return 1;
            return 0;
        }
        if (app.got_subcommand(bench)) {
            auto rows = run_bench(models_dir, manifest, cfg);
            std::ofstream out(out_csv);
            if (!out) throw ModelError("cannot write " + out_csv);
            out << csv_header() << "\n";
            for (const auto& r : rows) out << csv_row(r) << "\n";
            std::cout << "wrote " << rows.size() << " rows to " << out_csv << "\n";
            return 0;
        }
    } catch (const NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
