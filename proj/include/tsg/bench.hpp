#pragma once

// Benchmark harness: builds model instances with both engines, runs the
// bundled properties and emits one CSV row per construction and per
// (instance, property, engine). Per-instance failures are recorded in the
// CSV and the run continues.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsg/check.hpp"
#include "tsg/model_build.hpp"
#include "tsg/sparse_engine.hpp"

namespace tsg {

struct RunReport {
    std::string model_id;
    std::string params;
    std::string engine;    // symbolic | explicit
    std::string property;  // "-" for construction rows
    std::size_t states = 0;
    std::size_t transitions = 0;
    std::size_t mtbdd_nodes = 0;  // symbolic rows only
    double construct_s = 0.0;
    double qual_s = 0.0;
    double quant_s = 0.0;
    double total_s = 0.0;
    std::size_t strategy_size = 0;
    std::string value;
    std::string status = "ok";
};

inline std::string csv_header() {
    return "model,params,engine,property,states,transitions,mtbdd_nodes,"
           "construct_s,qual_s,quant_s,total_s,strategy_size,value,status";
}

inline std::string csv_row(const RunReport& r) {
    auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(6);
        os << std::fixed << v;
        return os.str();
    };
    std::ostringstream os;
    os << r.model_id << "," << r.params << "," << r.engine << "," << r.property << "," << r.states << ","
       << r.transitions << ",";
    if (r.engine == "symbolic") os << r.mtbdd_nodes;
    os << "," << fmt(r.construct_s) << "," << fmt(r.qual_s) << "," << fmt(r.quant_s) << ","
       << fmt(r.total_s) << "," << r.strategy_size << "," << r.value << "," << r.status;
    return os.str();
}

// A model file is either guarded-command text (.tsg) or the explicit
// line-oriented format (.tsgx).
struct ModelSource {
    bool explicit_format = false;
    ModelAst ast;
    ExplicitTsg game;  // for explicit-format sources
    std::string path;
};

inline ModelSource load_model_source(const std::string& path) {
    ModelSource src;
    src.path = path;
    if (path.size() > 5 && path.substr(path.size() - 5) == ".tsgx") {
        src.explicit_format = true;
        src.game = load_explicit_tsg(path);
    } else {
        src.ast = parse_model_file(path);
    }
    return src;
}

inline ExplicitTsg build_explicit_from(const ModelSource& src, const Overrides& overrides) {
    if (src.explicit_format) {
        if (!overrides.empty()) throw ModelError("explicit-format models take no constants");
        return src.game;
    }
    return build_explicit(src.ast, overrides);
}

inline SymbolicTsg build_symbolic_from(const ModelSource& src, const Overrides& overrides,
                                       dd::ManagerConfig cfg = {}) {
    if (src.explicit_format) {
        if (!overrides.empty()) throw ModelError("explicit-format models take no constants");
        return encode(src.game, cfg);
    }
    return build_symbolic(src.ast, overrides, cfg);
}

inline std::string format_value(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// ---- manifest ---------------------------------------------------------------
//
//   [model dice]
//   file = dice.tsg
//   props = dice.props
//   consts = N=2
//   consts = N=3
//   engines = symbolic,explicit

struct ManifestEntry {
    std::string id;
    std::string file;
    std::string props;
    std::vector<std::string> const_sets;  // each "N=2,K=3"; empty = one run without overrides
    std::vector<std::string> engines{"symbolic", "explicit"};
};

inline std::vector<ManifestEntry> parse_manifest(std::istream& in) {
    std::vector<ManifestEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.compare(0, 7, "[model ") != 0)
                throw ModelError("manifest line " + std::to_string(lineno) + ": expected [model <id>]");
            ManifestEntry e;
            e.id = trim(t.substr(7, t.size() - 8));
            entries.push_back(std::move(e));
            continue;
        }
        if (entries.empty()) throw ModelError("manifest: key outside a [model] section");
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ModelError("manifest line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        ManifestEntry& e = entries.back();
        if (key == "file") {
            e.file = value;
        } else if (key == "props") {
            e.props = value;
        } else if (key == "consts") {
            e.const_sets.push_back(value);
        } else if (key == "engines") {
            e.engines.clear();
            std::istringstream ss(value);
            std::string eng;
            while (std::getline(ss, eng, ',')) e.engines.push_back(trim(eng));
        } else {
            throw ModelError("manifest line " + std::to_string(lineno) + ": unknown key " + key);
        }
    }
    for (const auto& e : entries)
        if (e.file.empty()) throw ModelError("manifest: [model " + e.id + "] has no file");
    return entries;
}

inline Overrides overrides_from_string(const std::string& s) {
    Overrides o;
    std::istringstream ss(s);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
        if (pair.empty()) continue;
        auto eq = pair.find('=');
        if (eq == std::string::npos) throw ModelError("bad constant assignment: " + pair);
        o[pair.substr(0, eq)] = pair.substr(eq + 1);
    }
    return o;
}

// Runs one (instance, engine) pair: a construction row followed by one row
// per property.
inline std::vector<RunReport> run_instance(const ModelSource& src, const ManifestEntry& entry,
                                           const std::string& const_set, const std::string& engine,
                                           const std::string& props_path, const SolverConfig& cfg) {
    std::vector<RunReport> rows;
    RunReport build_row;
    build_row.model_id = entry.id;
    build_row.params = const_set;
    build_row.engine = engine;
    build_row.property = "-";
    Overrides overrides = overrides_from_string(const_set);

    try {
        double t0 = detail::now_seconds();
        if (engine == "symbolic") {
            SymbolicTsg sym = build_symbolic_from(src, overrides);
            build_row.construct_s = detail::now_seconds() - t0;
            build_row.states = static_cast<std::size_t>(sym.count_states(sym.reach));
            build_row.mtbdd_nodes = sym.mgr->node_count(sym.trans);
            build_row.total_s = build_row.construct_s;
            rows.push_back(build_row);

            SymbolicChecker checker(sym);
            if (!props_path.empty()) {
                std::ifstream pf(props_path);
                if (!pf) throw ModelError("cannot open " + props_path);
                for (auto& [name, formula] : parse_property_file(pf, checker.context())) {
                    RunReport row = build_row;
                    row.property = name;
                    row.construct_s = 0.0;
                    try {
                        double t1 = detail::now_seconds();
                        CheckResult res = checker.check(formula, cfg);
                        row.total_s = detail::now_seconds() - t1;
                        row.qual_s = res.stats.qual_seconds;
                        row.quant_s = res.stats.quant_seconds;
                        row.strategy_size = res.stats.strategy_size;
                        row.value = format_value(res.initial_value);
                        if (!formula->bound.numeric && res.sat.valid()) {
                            dd::Valuation iv;
                            sym.state_bits(sym.init_state, sym.xvars, iv);
                            row.value = sym.mgr->evaluate(res.sat, iv) != 0.0 ? "true" : "false";
                        }
                    } catch (const std::exception& e) {
                        row.status = std::string("error:") + e.what();
                    }
                    rows.push_back(row);
                }
            }
        } else {
            ExplicitTsg game = build_explicit_from(src, overrides);
            build_row.construct_s = detail::now_seconds() - t0;
            build_row.states = game.num_states();
            build_row.transitions = game.num_transitions();
            build_row.total_s = build_row.construct_s;
            rows.push_back(build_row);

            SparseEngine eng(game);
            if (!props_path.empty()) {
                std::ifstream pf(props_path);
                if (!pf) throw ModelError("cannot open " + props_path);
                for (auto& [name, formula] : parse_property_file(pf, eng.context())) {
                    RunReport row = build_row;
                    row.property = name;
                    row.construct_s = 0.0;
                    try {
                        double t1 = detail::now_seconds();
                        ExplicitResult res = eng.check(formula, cfg);
                        row.total_s = detail::now_seconds() - t1;
                        row.qual_s = res.stats.qual_seconds;
                        row.quant_s = res.stats.quant_seconds;
                        row.strategy_size = res.strategy.size();
                        row.value = format_value(res.initial_value);
                        if (!formula->bound.numeric && !res.sat.empty())
                            row.value = res.sat[game.init] ? "true" : "false";
                    } catch (const std::exception& e) {
                        row.status = std::string("error:") + e.what();
                    }
                    rows.push_back(row);
                }
            }
        }
    } catch (const std::exception& e) {
        build_row.status = std::string("error:") + e.what();
        rows.push_back(build_row);
    }
    return rows;
}

inline std::vector<RunReport> run_bench(const std::string& models_dir, const std::string& manifest_name,
                                        const SolverConfig& cfg) {
    namespace fs = std::filesystem;
    fs::path dir(models_dir);
    std::ifstream mf(dir / manifest_name);
    if (!mf) throw ModelError("cannot open manifest " + (dir / manifest_name).string());
    auto entries = parse_manifest(mf);
    std::vector<RunReport> rows;
    for (const auto& entry : entries) {
        ModelSource src = load_model_source((dir / entry.file).string());
        std::string props = entry.props.empty() ? "" : (dir / entry.props).string();
        std::vector<std::string> const_sets = entry.const_sets;
        if (const_sets.empty()) const_sets.push_back("");
        for (const auto& cs : const_sets)
            for (const auto& engine : entry.engines)
                for (auto& r : run_instance(src, entry, cs, engine, props, cfg)) rows.push_back(r);
    }
    return rows;
}

}  // namespace tsg
