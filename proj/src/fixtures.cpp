#include "ibis/fixtures.hpp"

#include <cstdlib>

#include "ibis/json_io.hpp"

namespace ibis {

std::string fixture_dir() {
    if (const char* env = std::getenv("IBIS_FIXTURES")) return env;
#ifdef IBIS_FIXTURE_DIR
    return IBIS_FIXTURE_DIR;
#else
    return "fixtures";
#endif
}

Icgs load_fixture(const std::string& name) {
    return load_model_file(fixture_dir() + "/" + name + ".json");
}

BisimRelation load_fixture_relation(const std::string& name, const Icgs& m, const Icgs& mp) {
    return load_relation_file(fixture_dir() + "/" + name + ".json", m, mp);
}

std::vector<std::string> fixture_names() {
    return {"fig1",    "fig2a",   "fig2b",   "fig3_g1", "fig3_g2", "fig4_g3",   "fig4_g4",
            "fig5_g5", "fig5_g6", "fig7_g7", "fig8_g8", "timed_left", "timed_right"};
}

}  // namespace ibis
