#include <doctest.h>

#include "qmwalk/config.hpp"

using namespace qmwalk;

TEST_SUITE_BEGIN("config");

namespace {

Json minimal() {
  return Json::parse(R"({
    "group": {"kind": "free", "generators": ["a", "b"]},
    "measure": {"mode": "exact", "entries": [
      {"element": "a", "weight": "1/4"}, {"element": "a^-1", "weight": "1/4"},
      {"element": "b", "weight": "1/4"}, {"element": "b^-1", "weight": "1/4"}]},
    "quasimorphism": {"type": "brooks", "word": "a b"},
    "seed": 42
  })");
}

}  // namespace

TEST_CASE("minimal config loads") {
  auto cfg = load_config(minimal());
  CHECK(cfg.alphabet.is_free());
  CHECK(cfg.mu.size() == 4);
  CHECK(cfg.seed == 42);
  CHECK(cfg.phi == cfg.phi_base);
  CHECK(cfg.phi->eval(parse_element(cfg.alphabet, "a b a b")) == 2.0);
  CHECK(cfg.config_hash.size() == 16);
}

TEST_CASE("homogenization and defect overrides apply") {
  auto doc = minimal();
  doc["quasimorphism"]["homogenize"] = true;
  doc["quasimorphism"]["doubling_depth"] = 4;
  doc["quasimorphism"]["defect_bound"] = 5.0;
  auto cfg = load_config(doc);
  CHECK(cfg.homogenized());
  CHECK(*cfg.phi_base->defect_bound() == 5.0);
  CHECK(*cfg.phi->homogeneity_tolerance() == doctest::Approx(5.0 / 16));
}

TEST_CASE("quasimorphism spec variants") {
  auto doc = minimal();
  doc["quasimorphism"] = Json::parse(R"({"type": "hom", "coefficients": {"a": 2.0}})");
  auto hom_cfg = load_config(doc);
  CHECK(hom_cfg.phi->eval(parse_element(hom_cfg.alphabet, "a a b")) == 4.0);

  doc["quasimorphism"] =
      Json::parse(R"({"type": "bounded-noise", "amplitude": 0.5, "seed": 3})");
  auto noise_cfg = load_config(doc);
  CHECK(*noise_cfg.phi->defect_bound() == 1.5);

  doc["quasimorphism"] = Json::parse(R"({"type": "combine", "terms": [
    {"coefficient": 2.0, "of": {"type": "brooks", "word": "a b"}},
    {"coefficient": -1.0, "of": {"type": "brooks", "word": "b a"}}]})");
  auto combo_cfg = load_config(doc);
  auto g = parse_element(combo_cfg.alphabet, "a b a b");
  CHECK(combo_cfg.phi->eval(g) == 2.0 * 2.0 - 1.0 * 1.0);

  doc["quasimorphism"] = Json::parse(R"({"type": "mystery"})");
  CHECK_THROWS_AS(load_config(doc), ConfigError);
}

TEST_CASE("measure spec: symmetrize flag and decimal weights") {
  auto doc = minimal();
  doc["measure"] = Json::parse(R"({"entries": [{"element": "a", "weight": "1"}],
                                   "symmetric": true})");
  auto cfg = load_config(doc);
  CHECK(cfg.mu.size() == 2);
  CHECK(cfg.mu.rational_weight(0) == Rational(1, 2));

  doc["measure"] = Json::parse(R"({"entries": [
    {"element": "a", "weight": "0.25"}, {"element": "a^-1", "weight": "3/4"}]})");
  auto dec = load_config(doc);
  CHECK(dec.mu.exact());
  CHECK(dec.mu.mass_of(parse_element(dec.alphabet, "a")) == 0.25);
}

TEST_CASE("config hash ignores output paths and threads, tracks semantics") {
  auto doc = minimal();
  auto base = config_hash(doc);
  doc["threads"] = 16;
  doc["output"] = Json::parse(R"({"json": "x.json"})");
  CHECK(config_hash(doc) == base);
  doc["seed"] = 43;
  CHECK(config_hash(doc) != base);
}

TEST_CASE("ell resolution") {
  auto cfg = load_config(minimal());
  auto supplied = resolve_ell(cfg, Json::parse(R"({"source": "supplied", "value": 0.5})"));
  CHECK(supplied.value == 0.5);
  CHECK(supplied.error == 0.0);

  auto computed = resolve_ell(cfg, Json::parse(R"({"source": "computed", "N": 4})"));
  CHECK(computed.value == 0.0);  // symmetric measure, odd Brooks
  CHECK(computed.error > 0.0);

  CHECK_THROWS_AS(resolve_ell(cfg, Json()), ConfigError);
}

TEST_CASE("missing sections produce config errors") {
  auto doc = minimal();
  doc.erase("measure");
  CHECK_THROWS_AS(load_config(doc), ConfigError);
  CHECK_THROWS_AS(parse_alphabet(Json::parse(R"({"kind": "solvable", "rank": 2})")),
                  ConfigError);
}

TEST_SUITE_END();
