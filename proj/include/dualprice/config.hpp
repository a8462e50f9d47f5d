#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dualprice/model.hpp"

namespace dualprice {

/// Parsed value of the key/value instance format: TOML-style sections with
/// numbers, booleans, quoted strings and flat numeric arrays. Decimal
/// parsing is locale-independent.
using ConfigValue =
    std::variant<bool, double, std::string, std::vector<double>>;

/// Flat map keyed by "section.key".
using ConfigMap = std::map<std::string, ConfigValue>;

ConfigMap parse_config(std::string_view text);

struct GridConfig {
    bool set = false;
    double I_min = 0.0;
    double I_max = 0.0;
    double step = 0.05;
};

struct LoadedInstance {
    ProblemSpec spec;
    GridConfig grid;
    int nodes = 32;
    uint64_t hash = 0;  // content hash, embedded in artifacts
};

LoadedInstance load_instance_text(std::string_view text);
LoadedInstance load_instance_file(const std::string& path);

uint64_t fnv1a64(std::string_view data);

/// The bundled two-period reference instance (linear curves, truncated
/// normal multiplicative noise); used by the figure export when no spec
/// file is given.
const char* bundled_example_config();

}  // namespace dualprice
