#pragma once

// Registry of generator builders: named models with documented parameters,
// closed-form facts locked by oracle tests, and fully deterministic
// construction (random blocks are seeded per site-label pair, so nested
// volumes draw identical shared terms).

#include <map>
#include <string>
#include <vector>

#include "qlocal/generator.hpp"

namespace qlocal::models {

using algebra::Volume;
using generator::GeneratorSpec;
using Params = std::map<std::string, double>;

struct ModelParam {
  std::string name;
  double value = 0.0;  // default
  std::string doc;
};

struct ModelCard {
  std::string name;
  std::string summary;
  std::vector<ModelParam> params;
  std::string volume_note;
  std::string facts;     // closed forms usable as oracles
  std::string stresses;  // which structural checks the model leans on
};

const std::vector<ModelCard>& cards();
const ModelCard& card(const std::string& name);  // throws on unknown name

// Spec for a registered model on the given volume. overrides replaces
// defaults key by key; unknown keys and domain violations (negative rates,
// mu <= 0) throw. Decay constants are analytic on chain and grid volumes and
// finite-graph estimates otherwise. The returned spec is normalized.
GeneratorSpec build(const std::string& name, const Params& overrides,
                    const Volume& v);

}  // namespace qlocal::models
