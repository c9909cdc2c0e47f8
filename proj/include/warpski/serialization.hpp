#pragma once

#include <json.hpp>
#include <string>

#include "warpski/gp.hpp"

namespace warpski {

using Json = nlohmann::ordered_json;

// Every *_from_json function throws ConfigError naming the offending field
// path (e.g. "components[1].kernel.lengthscale") on missing or invalid input.

Json to_json(const StationaryKernel& kernel);
StationaryKernel kernel_from_json(const Json& j, const std::string& path = "kernel");

Json to_json(const Warp1D& warp);
Warp1D warp1d_from_json(const Json& j, const std::string& path = "warp");

/// A 1-D warp is written as its Warp1D form, other warps carry a "type" of
/// "elementwise" or "affine".
Json to_json(const Warp& warp);
Warp warp_from_json(const Json& j, const std::string& path = "warp");

Json to_json(const GridSpec& grid);
GridSpec grid_spec_from_json(const Json& j, const std::string& path = "grid");

Json to_json(const ComponentSpec& component);
ComponentSpec component_from_json(const Json& j, const std::string& path = "component");

/// {"components": [...], "noise_std": s, "fixed": [names], "priors": {name: {mode, log_std}}}
Json to_json(const GpModel& model);
GpModel model_from_json(const Json& j, const std::string& path = "model");

Json to_json(const FitResult& fit);

/// Reads a JSON document; IoError names the path on failure.
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

// Small typed accessors shared by the config readers.
namespace cfg {
double number(const Json& j, const std::string& key, const std::string& path);
double number_or(const Json& j, const std::string& key, double fallback, const std::string& path);
long long integer_or(const Json& j, const std::string& key, long long fallback,
                     const std::string& path);
std::vector<double> numbers(const Json& j, const std::string& key, const std::string& path);
std::string string_or(const Json& j, const std::string& key, const std::string& fallback,
                      const std::string& path);
bool boolean_or(const Json& j, const std::string& key, bool fallback, const std::string& path);
}  // namespace cfg

}  // namespace warpski
