#pragma once

#include <string>
#include <vector>

#include "ibis/bisim.hpp"
#include "ibis/icgs.hpp"

namespace ibis {

/// Directory holding the bundled model and relation files. Compile-time
/// default, overridable with IBIS_FIXTURES.
std::string fixture_dir();

Icgs load_fixture(const std::string& name);  // name without .json
BisimRelation load_fixture_relation(const std::string& name, const Icgs& m, const Icgs& mp);

std::vector<std::string> fixture_names();

}  // namespace ibis
