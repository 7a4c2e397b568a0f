#include "qmwalk/config.hpp"

#include <cstdio>
#include <fstream>

namespace qmwalk {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

double weight_as_double(const Json& w) {
  if (w.is_number()) return w.get<double>();
  if (w.is_string()) {
    auto r = Rational::parse(w.get<std::string>());
    if (r) return r->value();
  }
  bad("measure", "weight must be a number or a rational string like \"1/4\"");
}

std::optional<Rational> weight_as_rational(const Json& w) {
  if (w.is_string()) return Rational::parse(w.get<std::string>());
  if (w.is_number_integer()) return Rational::integer(w.get<std::int64_t>());
  return std::nullopt;
}

}  // namespace

Alphabet parse_alphabet(const Json& spec) {
  if (!spec.is_object()) bad("group", "expected an object");
  std::string kind = spec.value("kind", "free");
  std::vector<std::string> names;
  if (spec.contains("generators")) {
    for (const auto& g : spec.at("generators")) names.push_back(g.get<std::string>());
  } else if (spec.contains("rank")) {
    int rank = spec.at("rank").get<int>();
    if (rank < 1 || rank > 26) bad("group", "rank must be in [1, 26] without explicit names");
    for (int i = 0; i < rank; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  } else {
    bad("group", "need either generators or rank");
  }
  if (kind == "free") return Alphabet::free_group(std::move(names));
  if (kind == "free-abelian") return Alphabet::free_abelian(std::move(names));
  bad("group", "kind must be free or free-abelian");
}

FiniteMeasure parse_measure(const Alphabet& a, const Json& spec) {
  if (!spec.is_object() || !spec.contains("entries"))
    bad("measure", "expected an object with entries");
  std::string mode = spec.value("mode", "auto");

  std::vector<std::pair<GroupElement, Rational>> rat_entries;
  std::vector<std::pair<GroupElement, double>> dbl_entries;
  bool all_rational = true;
  for (const auto& entry : spec.at("entries")) {
    GroupElement g = parse_element(a, entry.at("element").get<std::string>());
    const Json& w = entry.at("weight");
    auto r = weight_as_rational(w);
    if (r)
      rat_entries.emplace_back(g, *r);
    else
      all_rational = false;
    dbl_entries.emplace_back(g, weight_as_double(w));
  }

  bool exact = mode == "exact" || (mode == "auto" && all_rational);
  if (mode == "exact" && !all_rational)
    bad("measure", "exact mode requires rational weights (\"p/q\" strings)");

  FiniteMeasure mu = exact ? FiniteMeasure::from_rational(a, std::move(rat_entries))
                           : FiniteMeasure::from_floating(a, std::move(dbl_entries));
  if (spec.value("symmetric", false)) mu = symmetrize(mu);
  return mu;
}

ParsedQm parse_quasimorphism(const Alphabet& a, const Json& spec) {
  if (!spec.is_object() || !spec.contains("type"))
    bad("quasimorphism", "expected an object with a type");
  std::string type = spec.at("type").get<std::string>();

  QmPtr base;
  if (type == "hom") {
    std::vector<double> coeffs(static_cast<std::size_t>(a.rank()), 0.0);
    const Json& c = spec.at("coefficients");
    if (c.is_array()) {
      if (static_cast<int>(c.size()) != a.rank())
        bad("quasimorphism", "coefficient count does not match the rank");
      for (int i = 0; i < a.rank(); ++i)
        coeffs[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)].get<double>();
    } else if (c.is_object()) {
      for (const auto& [name, v] : c.items()) {
        bool found = false;
        for (int i = 0; i < a.rank(); ++i) {
          if (a.name(i) == name) {
            coeffs[static_cast<std::size_t>(i)] = v.get<double>();
            found = true;
          }
        }
        if (!found) bad("quasimorphism", "unknown generator '" + name + "' in coefficients");
      }
    } else {
      bad("quasimorphism", "coefficients must be an array or an object");
    }
    base = make_homomorphism(a, std::move(coeffs));
  } else if (type == "brooks") {
    GroupElement w = parse_element(a, spec.at("word").get<std::string>());
    std::optional<double> declared;
    if (spec.contains("defect_bound")) declared = spec.at("defect_bound").get<double>();
    base = make_brooks(a, w, declared);
  } else if (type == "bounded-noise") {
    base = make_bounded_noise(a, spec.at("amplitude").get<double>(),
                              spec.value("seed", std::uint64_t{0}));
  } else if (type == "combine") {
    std::vector<std::pair<double, QmPtr>> terms;
    for (const auto& term : spec.at("terms")) {
      double c = term.at("coefficient").get<double>();
      auto inner = parse_quasimorphism(a, term.at("of"));
      terms.emplace_back(c, inner.effective);
    }
    base = combine(std::move(terms));
  } else {
    bad("quasimorphism", "unknown type '" + type + "'");
  }

  QmPtr effective = base;
  if (spec.value("homogenize", false)) {
    int depth = spec.value("doubling_depth", 6);
    effective = homogenize(base, depth).qm;
  }
  return {base, effective};
}

ExperimentConfig load_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  for (const char* key : {"group", "measure", "quasimorphism"}) {
    if (!doc.contains(key))
      throw ConfigError(std::string("config is missing the '") + key + "' section");
  }
  Alphabet a = parse_alphabet(doc.at("group"));
  FiniteMeasure mu = parse_measure(a, doc.at("measure"));
  auto qm = parse_quasimorphism(a, doc.at("quasimorphism"));
  ExperimentConfig cfg{doc,      std::move(a), std::move(mu), qm.base, qm.effective,
                       doc.value("seed", std::uint64_t{0}),
                       doc.value("threads", 0), config_hash(doc)};
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc;
  try {
    in >> doc;
  } catch (const Json::parse_error& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return load_config(doc);
}

EllEstimate resolve_ell(const ExperimentConfig& cfg, const Json& ell_spec) {
  if (ell_spec.is_null())
    throw ConfigError("drift ell is required: supply {\"source\":\"supplied\",...} or "
                      "{\"source\":\"computed\",...}");
  std::string source = ell_spec.value("source", "computed");
  if (source == "supplied") {
    if (!ell_spec.contains("value")) bad("ell", "supplied drift needs a value");
    return {ell_spec.at("value").get<double>(), ell_spec.value("error", 0.0), "supplied"};
  }
  if (source != "computed") bad("ell", "source must be supplied or computed");
  int N = ell_spec.value("N", 8);
  PsiOptions opts = parse_psi_options(ell_spec, cfg.seed);
  auto est = distortion(*cfg.phi, cfg.mu, N, opts);
  return {est.ell, est.error_bound, "computed"};
}

PsiOptions parse_psi_options(const Json& spec, std::uint64_t default_seed) {
  PsiOptions opts;
  std::string mode = spec.is_object() ? spec.value("mode", "exact") : "exact";
  if (mode == "exact")
    opts.mode = EvalMode::exact;
  else if (mode == "mc" || mode == "monte-carlo")
    opts.mode = EvalMode::monte_carlo;
  else
    bad("mode", "must be exact or mc");
  if (spec.is_object()) {
    opts.mc_samples = spec.value("mc_samples", 64);
    opts.mc_seed = spec.value("mc_seed", default_seed);
    opts.tau = spec.value("tau", 0.0);
    opts.support_cap = spec.value("support_cap", std::size_t{4'000'000});
  } else {
    opts.mc_seed = default_seed;
  }
  return opts;
}

std::string config_hash(const Json& doc) {
  Json semantic = doc;
  semantic.erase("output");
  semantic.erase("threads");
  std::string dump = semantic.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace qmwalk
