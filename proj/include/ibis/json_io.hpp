#pragma once

#include <string>
#include <utility>

#include "ibis/bisim.hpp"
#include "ibis/icgs.hpp"

namespace ibis {

ModelDoc model_doc_from_json(const std::string& text);
std::string model_doc_to_json(const ModelDoc& doc);

/// Parse + validate + compile; throws Error with the full report on invalid
/// input.
Icgs load_model_file(const std::string& path);
void save_model_file(const Icgs& m, const std::string& path);

/// Relation file: {"coalition": [agents], "pairs": [[stateM, stateM'], ...]}.
/// State names resolved against the two models; dangling names throw.
BisimRelation load_relation_file(const std::string& path, const Icgs& m, const Icgs& mp);
std::string relation_to_json(const BisimRelation& rel, const Icgs& m, const Icgs& mp);

std::string verdict_to_json(const Verdict& v, const Icgs& m, const Icgs& mp,
                            bool include_simulator = false);

/// Witness strategy: map agent -> block representative state -> action.
std::string strategy_to_json(const Icgs& m, const PartialStrategy& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ibis
