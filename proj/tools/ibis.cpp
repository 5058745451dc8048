#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ibis/bisim.hpp"
#include "ibis/fixtures.hpp"
#include "ibis/json_io.hpp"
#include "ibis/mc.hpp"
#include "ibis/repro.hpp"
#include "ibis/threeballot.hpp"

using namespace ibis;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

Icgs load_model_or_fixture(const std::string& ref) {
    if (ref.size() > 5 && ref.substr(ref.size() - 5) == ".json") return load_model_file(ref);
    return load_fixture(ref);
}

Semantics parse_semantics(const std::string& s) {
    auto sem = semantics_from_name(s);
    if (!sem) throw Error("unknown semantics '" + s + "' (subjective|objective|perfect)");
    return *sem;
}

int cmd_validate(const std::string& model_path) {
    ModelDoc doc = model_doc_from_json(read_text_file(model_path));
    ValidationReport rep = validate(doc);
    if (rep.ok()) {
        std::cout << "valid\n";
        return kOk;
    }
    std::cout << rep.to_string();
    return kCheckFailed;
}

int cmd_check(const std::string& model_ref, const std::string& formula,
              const std::string& formula_file, const std::string& sem_name,
              const std::string& state, bool want_witness, bool label_mode, unsigned jobs) {
    Icgs m = load_model_or_fixture(model_ref);
    Semantics sem = parse_semantics(sem_name);
    std::vector<FormulaPtr> formulas;
    if (!formula.empty()) formulas.push_back(parse_formula(formula));
    if (!formula_file.empty()) {
        auto fs = parse_formula_file(read_text_file(formula_file));
        formulas.insert(formulas.end(), fs.begin(), fs.end());
    }
    if (formulas.empty()) throw Error("no formula given (use --formula or --formula-file)");
    StateId s = state.empty() ? m.initial : m.state_or_throw(state);

    McOptions opt;
    opt.jobs = jobs;
    Labeler lab(m, sem, opt);
    for (const auto& f : formulas) {
        if (label_mode) {
            const StateSet& set = lab.label(f);
            std::cout << print_formula(f) << "\t";
            bool first = true;
            set.for_each([&](StateId t) {
                std::cout << (first ? "" : " ") << m.state_names[t];
                first = false;
            });
            std::cout << "\n";
            continue;
        }
        if (want_witness) {
            CheckResult r = lab.check_with_witness(s, f);
            std::cout << print_formula(f) << "\t" << (r.value ? "true" : "false");
            if (r.witness) std::cout << "\t" << strategy_to_json(m, *r.witness);
            std::cout << "\n";
        } else {
            std::cout << print_formula(f) << "\t" << (lab.check(s, f) ? "true" : "false") << "\n";
        }
    }
    return kOk;
}

int cmd_bisim(const std::string& model_a, const std::string& model_b,
              const std::string& relation_path, const std::string& coalition_csv,
              const std::string& mode, uint64_t budget, const std::string& state_a,
              const std::string& state_b, bool witness) {
    Icgs m = load_model_or_fixture(model_a);
    Icgs mp = load_model_or_fixture(model_b);

    std::vector<std::string> coalition_names;
    if (!coalition_csv.empty()) {
        std::string cur;
        for (char c : coalition_csv + ",") {
            if (c == ',') {
                if (!cur.empty()) coalition_names.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
    }

    if (mode == "decide") {
        if (coalition_names.empty()) throw Error("decide mode needs --coalition");
        Coalition a = m.coalition_from_names(coalition_names);
        StateId q = state_a.empty() ? m.initial : m.state_or_throw(state_a);
        StateId qp = state_b.empty() ? mp.initial : mp.state_or_throw(state_b);
        DecideResult r = decide_bisimilarity(m, q, mp, qp, a, budget);
        switch (r.kind) {
            case DecideResult::Bisimilar: {
                std::cout << "bisimilar\n";
                if (witness && r.relation) {
                    BisimRelation rel;
                    rel.coalition = coalition_names;
                    rel.pairs = *r.relation;
                    std::cout << relation_to_json(rel, m, mp);
                }
                return kOk;
            }
            case DecideResult::NotBisimilar:
                std::cout << "not-bisimilar";
                if (r.refutation) std::cout << "\tdistinguished-by\t" << print_formula(*r.refutation);
                std::cout << "\n";
                return kOk;
            case DecideResult::BudgetExceeded:
                std::cout << "budget-exceeded\n";
                return kCheckFailed;
        }
        return kUsage;
    }

    if (relation_path.empty()) throw Error("verify modes need --relation");
    BisimRelation rel = load_relation_file(relation_path, m, mp);
    if (!coalition_names.empty()) rel.coalition = coalition_names;
    Coalition a = m.coalition_from_names(rel.coalition);
    Verdict v;
    if (mode == "verify") {
        v = verify_bisimulation(m, mp, a, rel.pairs);
    } else if (mode == "verify-pre") {
        v = verify_pre_bisimulation(m, mp, a, rel.pairs);
    } else if (mode == "verify-sim") {
        v = verify_simulation(m, mp, a, rel.pairs);
    } else {
        throw Error("unknown mode '" + mode + "'");
    }
    std::cout << verdict_to_json(v, m, mp, witness);
    return v.pass ? kOk : kCheckFailed;
}

int cmd_distinguish(const std::string& model_a, const std::string& model_b,
                    const std::string& state_a, const std::string& state_b,
                    const std::string& coalition_csv, const std::string& sem_name,
                    size_t max_size) {
    Icgs m = load_model_or_fixture(model_a);
    Icgs mp = load_model_or_fixture(model_b);
    std::vector<std::string> names;
    {
        std::string cur;
        for (char c : coalition_csv + ",") {
            if (c == ',') {
                if (!cur.empty()) names.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
    }
    Coalition a = m.coalition_from_names(names);
    StateId q = state_a.empty() ? m.initial : m.state_or_throw(state_a);
    StateId qp = state_b.empty() ? mp.initial : mp.state_or_throw(state_b);
    auto f = find_distinguishing_formula(m, q, mp, qp, a, parse_semantics(sem_name), max_size);
    if (f) {
        std::cout << print_formula(*f) << "\n";
        return kOk;
    }
    std::cout << "none\n";
    return kOk;
}

int cmd_threeballot_gen(unsigned voters, unsigned candidates, const std::string& variant_name,
                        const std::string& out_dir, bool emit_model, bool emit_relations,
                        uint64_t cap) {
    ThreeBallotConfig cfg{voters, candidates, TbVariant::Count, cap ? cap : default_state_cap()};
    std::string stem = out_dir + "/threeballot_" + std::to_string(voters) + "v" +
                       std::to_string(candidates) + "c";

    std::vector<TbVariant> variants;
    if (variant_name == "all") {
        variants = {TbVariant::Count, TbVariant::Lex, TbVariant::Tot};
    } else {
        auto variant = tb_variant_from_name(variant_name);
        if (!variant) throw Error("unknown variant '" + variant_name + "' (tot|lex|count|all)");
        variants = {*variant};
    }

    std::map<TbVariant, TbModel> built;
    auto get = [&](TbVariant v) -> TbModel& {
        auto it = built.find(v);
        if (it != built.end()) return it->second;
        ThreeBallotConfig c = cfg;
        c.variant = v;
        return built.emplace(v, build(c)).first->second;
    };

    for (TbVariant v : variants) {
        TbModel& tb = get(v);
        std::cout << "reachable states (" << tb_variant_name(v) << "): " << tb.model.n_states()
                  << "\n";
        if (emit_model) {
            std::string path = stem + "_" + tb_variant_name(v) + ".json";
            save_model_file(tb.model, path);
            std::cout << "model: " << path << "\n";
        }
    }

    // formula file for every honest voter
    {
        std::string path = stem + "_formulas.txt";
        std::string content = "# coercion and anonymity properties\n";
        for (unsigned i = 1; i < voters; ++i) {
            content += print_formula(coercion_formula(cfg, i)) + "\n";
            content += print_formula(anonymity_formula(cfg, i)) + "\n";
        }
        write_text_file(path, content);
        std::cout << "formulas: " << path << "\n";
    }

    if (emit_relations) {
        auto emit_rel = [&](TbVariant left, TbVariant right) {
            TbModel& l = get(left);
            TbModel& r = get(right);
            BisimRelation rel = (left == TbVariant::Tot) ? relation_tot_lex(l, r)
                                                         : relation_lex_count(l, r);
            std::string path = stem + "_rel_" + tb_variant_name(left) + "_" +
                               tb_variant_name(right) + ".json";
            write_text_file(path, relation_to_json(rel, l.model, r.model));
            std::cout << "relation: " << path << " (" << rel.pairs.size() << " pairs)\n";
        };
        if (variant_name == "all") {
            emit_rel(TbVariant::Tot, TbVariant::Lex);
            emit_rel(TbVariant::Lex, TbVariant::Count);
        } else if (variants[0] == TbVariant::Tot) {
            emit_rel(TbVariant::Tot, TbVariant::Lex);
        } else if (variants[0] == TbVariant::Lex) {
            emit_rel(TbVariant::Lex, TbVariant::Count);
        }
    }
    return kOk;
}

int cmd_repro(const std::string& suite, bool slow, const std::string& csv_path, unsigned jobs) {
    ReproResult all;
    if (suite == "figures" || suite == "all") {
        ReproResult r = run_figures_suite();
        all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    }
    if (suite == "threeballot" || suite == "all") {
        ReproResult r = run_threeballot_suite(slow, jobs);
        all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    }
    if (suite != "figures" && suite != "threeballot" && suite != "all" && suite != "none")
        throw Error("unknown suite '" + suite + "' (figures|threeballot|all)");
    std::cout << repro_table(all);
    if (!csv_path.empty()) write_text_file(csv_path, repro_csv(all));
    return all.all_ok() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explicit-state checker for strategic abilities under imperfect information"};
    app.require_subcommand(1);

    std::string model_a, model_b, formula, formula_file, semantics = "subjective", state,
                state_b, relation, coalition, mode = "verify", suite = "all", out_dir = ".",
                csv_path, variant = "count";
    bool witness = false, slow = false, emit_model = true, emit_relations = false;
    uint64_t budget = 10'000'000, cap = 0;
    unsigned voters = 2, candidates = 2, jobs = 1;
    size_t max_size = 5;

    auto* validate_cmd = app.add_subcommand("validate", "check a model file against the invariants");
    validate_cmd->add_option("model", model_a, "model file")->required();

    auto* check_cmd = app.add_subcommand("check", "evaluate formulas at a state");
    check_cmd->add_option("model", model_a, "model file or fixture name")->required();
    check_cmd->add_option("--formula", formula, "formula text");
    check_cmd->add_option("--formula-file", formula_file, "file with one formula per line");
    check_cmd->add_option("--semantics", semantics, "subjective|objective|perfect");
    check_cmd->add_option("--state", state, "state id (default: initial)");
    check_cmd->add_option("--jobs", jobs, "worker threads for the strategy search");
    check_cmd->add_flag("--witness", witness, "print a witness strategy for satisfied modalities");

    auto* label_cmd = app.add_subcommand("label", "list all states satisfying formulas");
    label_cmd->add_option("model", model_a, "model file or fixture name")->required();
    label_cmd->add_option("--formula", formula, "formula text");
    label_cmd->add_option("--formula-file", formula_file, "file with one formula per line");
    label_cmd->add_option("--semantics", semantics, "subjective|objective|perfect");
    label_cmd->add_option("--jobs", jobs, "worker threads for the strategy search");

    auto* bisim_cmd = app.add_subcommand("bisim", "verify or decide relations between two models");
    bisim_cmd->add_option("modelA", model_a, "left model")->required();
    bisim_cmd->add_option("modelB", model_b, "right model")->required();
    bisim_cmd->add_option("--relation", relation, "relation file");
    bisim_cmd->add_option("--coalition", coalition, "comma-separated agents");
    bisim_cmd->add_option("--mode", mode, "verify|verify-pre|verify-sim|decide");
    bisim_cmd->add_option("--budget", budget, "search budget for decide mode");
    bisim_cmd->add_option("--state-a", state, "left state for decide (default: initial)");
    bisim_cmd->add_option("--state-b", state_b, "right state for decide (default: initial)");
    bisim_cmd->add_flag("--witness", witness, "include witness details in the output");

    auto* dist_cmd = app.add_subcommand("distinguish", "search for a distinguishing formula");
    dist_cmd->add_option("modelA", model_a, "left model")->required();
    dist_cmd->add_option("modelB", model_b, "right model")->required();
    dist_cmd->add_option("--state-a", state, "left state (default: initial)");
    dist_cmd->add_option("--state-b", state_b, "right state (default: initial)");
    dist_cmd->add_option("--coalition", coalition, "comma-separated agents")->required();
    dist_cmd->add_option("--semantics", semantics, "subjective|objective|perfect");
    dist_cmd->add_option("--max-size", max_size, "formula size bound");

    auto* tb_cmd = app.add_subcommand("threeballot-gen", "generate voting-protocol models");
    tb_cmd->add_option("--voters", voters, "number of voters (last one is the attacker)");
    tb_cmd->add_option("--candidates", candidates, "number of candidates");
    tb_cmd->add_option("--variant", variant, "tot|lex|count|all");
    tb_cmd->add_option("--out-dir", out_dir, "output directory");
    tb_cmd->add_option("--cap", cap, "state-space cap (default: IBIS_STATE_CAP or 25000000)");
    tb_cmd->add_flag("--relations", emit_relations,
                     "also build the neighbour variant and emit the relation file");
    tb_cmd->add_flag("!--no-model", emit_model, "skip writing the model file");

    auto* repro_cmd = app.add_subcommand("repro", "run the bundled result tables");
    repro_cmd->add_option("--suite", suite, "figures|threeballot|all");
    repro_cmd->add_flag("--slow", slow, "include the larger instances");
    repro_cmd->add_option("--csv", csv_path, "also write the table as CSV");
    repro_cmd->add_option("--jobs", jobs, "worker threads for the strategy search");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kUsage : kOk;
    }

    try {
        if (validate_cmd->parsed()) return cmd_validate(model_a);
        if (check_cmd->parsed())
            return cmd_check(model_a, formula, formula_file, semantics, state, witness, false, jobs);
        if (label_cmd->parsed())
            return cmd_check(model_a, formula, formula_file, semantics, state, false, true, jobs);
        if (bisim_cmd->parsed())
            return cmd_bisim(model_a, model_b, relation, coalition, mode, budget, state, state_b,
                             witness);
        if (dist_cmd->parsed())
            return cmd_distinguish(model_a, model_b, state, state_b, coalition, semantics, max_size);
        if (tb_cmd->parsed())
            return cmd_threeballot_gen(voters, candidates, variant, out_dir, emit_model,
                                       emit_relations, cap);
        if (repro_cmd->parsed()) return cmd_repro(suite, slow, csv_path, jobs);
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
