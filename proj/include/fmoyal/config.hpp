#pragma once

// Run configuration shared by the command-line tools. Values come from
// defaults, then an optional JSON file, then explicit flags.

#include <cstdint>
#include <string>
#include <vector>

#include "fmoyal/fock.hpp"
#include "fmoyal/io.hpp"
#include "fmoyal/random.hpp"
#include "fmoyal/weyl.hpp"

namespace fmoyal {

struct RunConfig {
  std::size_t dim = 128;
  std::vector<double> damping{0.4, 0.2, 0.1, 0.05};
  std::size_t extrapolation_order = 2;
  PhaseGrid grid;
  std::uint64_t seed = kDefaultSeed;
  std::string out;         // primary output; empty means stdout where allowed
  std::string provenance;  // empty means <out stem>.provenance.json or provenance.json

  DampingSchedule schedule() const { return {damping, extrapolation_order}; }

  /// Overlays the keys present in `j`; unknown keys are rejected.
  void merge(const io::json& j, const std::string& where) {
    io::reject_unknown_keys(
        j, {"dim", "damping", "extrapolation_order", "grid", "seed", "out", "provenance"}, where);
    auto require_count = [&](const char* key) {
      if (!j.at(key).is_number_unsigned()) {
        throw ValidationError(where + ": '" + key + "' must be a non-negative integer");
      }
      return j.at(key).get<std::uint64_t>();
    };
    auto require_string = [&](const char* key) {
      if (!j.at(key).is_string()) throw ValidationError(where + ": '" + key + "' must be a string");
      return j.at(key).get<std::string>();
    };
    if (j.contains("dim")) dim = require_count("dim");
    if (j.contains("extrapolation_order")) extrapolation_order = require_count("extrapolation_order");
    if (j.contains("seed")) seed = require_count("seed");
    if (j.contains("damping")) {
      if (!j.at("damping").is_array()) throw ValidationError(where + ": 'damping' must be an array");
      damping.clear();
      for (const auto& v : j.at("damping")) {
        if (!v.is_number()) throw ValidationError(where + ": damping entries must be numbers");
        damping.push_back(v.get<double>());
      }
    }
    if (j.contains("grid")) grid = io::grid_from_json(j.at("grid"), where + " grid");
    if (j.contains("out")) out = require_string("out");
    if (j.contains("provenance")) provenance = require_string("provenance");
  }

  /// Checks cross-field constraints; throws InputError subclasses.
  void validate() const {
    detail::require_dim(dim);
    (void)schedule();
  }

  io::json to_json() const {
    return io::json{{"dim", dim},
                    {"damping", damping},
                    {"extrapolation_order", extrapolation_order},
                    {"grid", io::grid_to_json(grid)},
                    {"seed", seed},
                    {"out", out},
                    {"provenance", provenance}};
  }
};

}  // namespace fmoyal
