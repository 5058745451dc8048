#include "ibis/json_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ibis {

using json = nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
}

ModelDoc model_doc_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw Error(std::string("model file is not valid JSON: ") + e.what());
    }
    ModelDoc doc;
    try {
        doc.agents = j.at("agents").get<std::vector<std::string>>();
        doc.atoms = j.value("atoms", std::vector<std::string>{});
        doc.actions = j.at("actions").get<std::vector<std::string>>();
        for (const auto& s : j.at("states")) {
            ModelDoc::StateDecl d;
            d.id = s.at("id").get<std::string>();
            d.label = s.value("label", std::vector<std::string>{});
            doc.states.push_back(std::move(d));
        }
        doc.initial = j.at("initial").get<std::string>();
        for (const auto& [agent, per_state] : j.at("protocol").items())
            for (const auto& [state, acts] : per_state.items())
                doc.protocol[agent][state] = acts.get<std::vector<std::string>>();
        for (const auto& t : j.at("transitions")) {
            ModelDoc::TransDecl d;
            d.from = t.at("from").get<std::string>();
            d.joint = t.at("joint").get<std::vector<std::string>>();
            d.to = t.at("to").get<std::string>();
            doc.transitions.push_back(std::move(d));
        }
        if (j.contains("indist"))
            for (const auto& [agent, blocks] : j.at("indist").items())
                doc.indist[agent] = blocks.get<std::vector<std::vector<std::string>>>();
    } catch (const json::exception& e) {
        throw Error(std::string("malformed model document: ") + e.what());
    }
    return doc;
}

std::string model_doc_to_json(const ModelDoc& doc) {
    json j;
    j["agents"] = doc.agents;
    j["atoms"] = doc.atoms;
    j["actions"] = doc.actions;
    j["states"] = json::array();
    for (const auto& s : doc.states) j["states"].push_back({{"id", s.id}, {"label", s.label}});
    j["initial"] = doc.initial;
    j["protocol"] = json::object();
    for (const auto& [agent, per_state] : doc.protocol) {
        json p = json::object();
        for (const auto& [state, acts] : per_state) p[state] = acts;
        j["protocol"][agent] = std::move(p);
    }
    j["transitions"] = json::array();
    for (const auto& t : doc.transitions)
        j["transitions"].push_back({{"from", t.from}, {"joint", t.joint}, {"to", t.to}});
    j["indist"] = json::object();
    for (const auto& [agent, blocks] : doc.indist) j["indist"][agent] = blocks;
    return j.dump(2) + "\n";
}

Icgs load_model_file(const std::string& path) {
    ModelDoc doc = model_doc_from_json(read_text_file(path));
    ValidationReport rep = validate(doc);
    if (!rep.ok()) throw Error("invalid model '" + path + "':\n" + rep.to_string());
    return compile(doc);
}

void save_model_file(const Icgs& m, const std::string& path) {
    write_text_file(path, model_doc_to_json(to_doc(m)));
}

BisimRelation load_relation_file(const std::string& path, const Icgs& m, const Icgs& mp) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const std::exception& e) {
        throw Error(std::string("relation file is not valid JSON: ") + e.what());
    }
    BisimRelation rel;
    rel.coalition = j.at("coalition").get<std::vector<std::string>>();
    for (const auto& p : j.at("pairs")) {
        if (!p.is_array() || p.size() != 2) throw Error("relation pair must be a two-element array");
        rel.pairs.emplace_back(m.state_or_throw(p[0].get<std::string>()),
                               mp.state_or_throw(p[1].get<std::string>()));
    }
    return rel;
}

std::string relation_to_json(const BisimRelation& rel, const Icgs& m, const Icgs& mp) {
    json j;
    j["coalition"] = rel.coalition;
    j["pairs"] = json::array();
    for (const auto& [a, b] : rel.pairs)
        j["pairs"].push_back({m.state_names[a], mp.state_names[b]});
    return j.dump(2) + "\n";
}

std::string strategy_to_json(const Icgs& m, const PartialStrategy& s) {
    json j = json::object();
    for (const auto& p : s.pieces) {
        StateId rep = m.block_members(p.agent, p.block).front();
        j[m.agents[p.agent]][m.state_names[rep]] = m.actions[p.action];
    }
    return j.dump();
}

std::string verdict_to_json(const Verdict& v, const Icgs& m, const Icgs& mp,
                            bool include_simulator) {
    json j;
    j["pass"] = v.pass;
    j["violated"] = v.pass ? json(nullptr) : json(bisim_cond_name(v.violated));
    if (v.witness) {
        const Icgs& left = v.converse ? mp : m;
        const Icgs& right = v.converse ? m : mp;
        const auto& w = *v.witness;
        json wj;
        wj["direction"] = v.converse ? "converse" : "forward";
        wj["pair"] = {left.state_names[w.q], right.state_names[w.qp]};
        switch (v.violated) {
            case BisimCond::C1b:
                wj["agent"] = w.agent;
                wj["unmatched_neighbour"] = right.state_names[w.rp];
                break;
            case BisimCond::C1c:
            case BisimCond::PreC:
                wj["linked_pair"] = {left.state_names[w.r], right.state_names[w.rp]};
                wj["unmatched_successor"] = right.state_names[w.sp];
                if (w.strategy)
                    wj["strategy"] = json::parse(strategy_to_json(left, *w.strategy));
                break;
            case BisimCond::C2:
                wj["shared_partner"] = right.state_names[w.rp];
                wj["left_states"] = {left.state_names[w.q], left.state_names[*w.q2]};
                break;
            default: break;
        }
        j["witness"] = std::move(wj);
    } else {
        j["witness"] = nullptr;
    }
    if (include_simulator && v.simulator) {
        j["simulator_entries"] = v.simulator->entries.size();
    }
    return j.dump(2) + "\n";
}

}  // namespace ibis
