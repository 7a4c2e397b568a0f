#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "qmwalk/harmonic.hpp"
#include "qmwalk/measure.hpp"
#include "qmwalk/quasimorphism.hpp"

namespace qmwalk {

using Json = nlohmann::json;

// A parsed experiment configuration: group, step measure, quasimorphism,
// seed. The hash covers the canonical dump of everything that affects
// results (output paths and thread counts are excluded) and is embedded in
// every report so outputs are traceable to their exact configuration.
struct ExperimentConfig {
  Json raw;
  Alphabet alphabet;
  FiniteMeasure mu;
  QmPtr phi_base;   // as declared, before homogenization
  QmPtr phi;        // effective evaluator (homogenized when requested)
  std::uint64_t seed = 0;
  int threads = 1;
  std::string config_hash;

  bool homogenized() const { return phi != phi_base; }
};

Alphabet parse_alphabet(const Json& group_spec);
FiniteMeasure parse_measure(const Alphabet& a, const Json& measure_spec);

struct ParsedQm {
  QmPtr base;
  QmPtr effective;
};
ParsedQm parse_quasimorphism(const Alphabet& a, const Json& qm_spec);

ExperimentConfig load_config(const Json& doc);
ExperimentConfig load_config_file(const std::string& path);

// Drift used by walk experiments: {"source":"supplied","value":v,"error":e}
// or {"source":"computed","N":8,"mode":"exact"|"mc",...}, resolved against
// the effective quasimorphism.
struct EllEstimate {
  double value = 0;
  double error = 0;
  std::string source = "supplied";
};
EllEstimate resolve_ell(const ExperimentConfig& cfg, const Json& ell_spec);

// PsiOptions from a JSON block {"mode":"exact"|"mc","mc_samples":..,
// "mc_seed":..,"tau":..,"support_cap":..}; missing fields take defaults.
PsiOptions parse_psi_options(const Json& spec, std::uint64_t default_seed);

// FNV-1a over the canonical dump, excluding volatile/non-semantic keys.
std::string config_hash(const Json& doc);

// Deterministic shortest-round-trip-ish formatting used in CSV output.
std::string format_double(double v);

}  // namespace qmwalk
