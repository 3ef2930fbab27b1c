#pragma once

// Run configuration: a TOML subset (sections, dotted section names, numbers,
// strings, booleans, one-line arrays, # comments) mapped onto a validated
// RunConfig.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "timeorder/grid.hpp"
#include "timeorder/magnus.hpp"
#include "timeorder/model.hpp"
#include "timeorder/oracle.hpp"
#include "timeorder/physparams.hpp"

namespace timeorder {

struct TomlValue {
    enum class Kind { Number, Bool, String, Array };
    Kind kind = Kind::Number;
    double number = 0.0;
    bool boolean = false;
    std::string string;
    std::vector<TomlValue> array;
    int line = 0;
};

// section name ("" for keys before the first header) -> key -> value
using TomlDocument = std::map<std::string, std::map<std::string, TomlValue>>;

TomlDocument parse_toml(std::string_view text);

struct OutputSection {
    std::string directory = "out";
    std::vector<std::string> formats{"csv"};
    bool render = false;
    std::vector<std::string> channels{"abs", "phase"};
};

struct OracleSection {
    double time_span = 16.0;
    std::size_t steps = 4000;
    double pump_window = 8.0;
    std::vector<double> epsilons;  // empty: {eps, eps/2, eps/4}
};

struct RunConfig {
    ProcessSpec spec;
    FrequencyGrid ga, gb;
    KernelOptions quadrature;
    OutputSection output;
    std::optional<OracleSection> oracle;
    std::optional<LabParameters> lab;  // set when epsilon came from lab parameters
    std::string source_text;
};

// Throws ParseError for syntax problems and ValidationError listing every
// schema violation.
RunConfig config_from_text(std::string_view text);
RunConfig parse_config(const std::string& path);

} // namespace timeorder
