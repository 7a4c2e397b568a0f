// qmwalk: quasimorphisms along random walks on free and free-abelian
// groups. Subcommands run one experiment each from a JSON config and write
// machine-readable JSON/CSV reports; --check turns the run into a pass/fail
// gate (exit 4 on a missed threshold).

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "qmwalk/boundary.hpp"
#include "qmwalk/config.hpp"
#include "qmwalk/montecarlo.hpp"
#include "qmwalk/parallel.hpp"

using namespace qmwalk;

namespace {

struct Cli {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::int64_t> n, M;
  std::string out_json, out_csv;
  bool check = false;
};

struct CheckFailure {
  std::vector<std::string> reasons;
  void require(bool ok, const std::string& what) {
    if (!ok) reasons.push_back(what);
  }
  bool failed() const { return !reasons.empty(); }
};

Json load_doc(const Cli& cli) {
  std::ifstream in(cli.config_path);
  if (!in) throw ConfigError("cannot open config file '" + cli.config_path + "'");
  Json doc;
  try {
    in >> doc;
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (cli.seed) doc["seed"] = *cli.seed;
  if (cli.threads) doc["threads"] = *cli.threads;
  return doc;
}

void write_file(const std::string& path, const std::string& content) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write to '" + path + "'");
  out << content;
}

std::string out_path(const Cli& cli, const Json& doc, const char* kind) {
  if (kind == std::string("json") && !cli.out_json.empty()) return cli.out_json;
  if (kind == std::string("csv") && !cli.out_csv.empty()) return cli.out_csv;
  if (doc.contains("output") && doc.at("output").contains(kind))
    return doc.at("output").at(kind).get<std::string>();
  return "";
}

void stamp(Json& report, const ExperimentConfig& cfg) {
  report["config_hash"] = cfg.config_hash;
  report["seed"] = cfg.seed;
}

void emit(const Cli& cli, const Json& doc, Json report, const std::string& csv = "") {
  std::string jpath = out_path(cli, doc, "json");
  std::string dump = report.dump(2) + "\n";
  if (!jpath.empty()) write_file(jpath, dump);
  std::string cpath = out_path(cli, doc, "csv");
  if (!cpath.empty() && !csv.empty()) write_file(cpath, csv);
  std::cout << dump;
}

int finish(const CheckFailure& check) {
  if (check.failed()) {
    Json err;
    err["error"] = "check";
    err["failures"] = check.reasons;
    std::cerr << err.dump() << "\n";
    return static_cast<int>(ErrorCode::check);
  }
  return 0;
}

WalkScenario make_scenario(const ExperimentConfig& cfg, const Json& doc, const Cli& cli,
                           const char* block_name) {
  const Json block = doc.value(block_name, Json::object());
  WalkScenario sc{cfg.alphabet, cfg.mu, cfg.phi};
  sc.n = cli.n.value_or(block.value("n", std::int64_t{1024}));
  sc.M = cli.M.value_or(block.value("M", std::int64_t{1000}));
  sc.seed = cfg.seed;
  sc.threads = cfg.threads;
  sc.degeneracy_floor = block.value("degeneracy_floor", 1e-9);
  auto ell = resolve_ell(cfg, doc.value("ell", Json()));
  sc.ell = ell.value;
  sc.ell_error = ell.error;
  sc.ell_source = ell.source;
  return sc;
}

std::string provenance(const ExperimentConfig& cfg) {
  return "# config_hash=" + cfg.config_hash + " seed=" + std::to_string(cfg.seed) + "\n";
}

std::string samples_csv(const ExperimentConfig& cfg, const CltReport& rep) {
  std::string csv = provenance(cfg) + "trial,phi_zn,x\n";
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    csv += std::to_string(i);
    csv += ',';
    csv += format_double(rep.phi_values[i]);
    csv += ',';
    csv += format_double(rep.samples[i]);
    csv += '\n';
  }
  return csv;
}

Json clt_report_json(const ExperimentConfig& cfg, const WalkScenario& sc,
                     const CltReport& rep) {
  Json j;
  stamp(j, cfg);
  j["n"] = rep.n;
  j["M"] = rep.M;
  j["sigma_hat"] = rep.sigma_hat;
  j["ks"] = rep.ks;
  j["ks_valid"] = rep.ks_valid;
  j["ks_band"] = rep.ks_band;
  j["ell"] = rep.ell;
  j["ell_err"] = rep.ell_error;
  j["ell_source"] = sc.ell_source;
  j["verdict"] = rep.degenerate ? "degenerate" : "non-degenerate";
  j["mean_x"] = rep.mean_x;
  j["se_mean"] = rep.se_mean;
  j["wall_time_ms"] = rep.wall_ms;
  return j;
}

int cmd_walk(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  auto sc = make_scenario(cfg, doc, cli, "walk");
  auto rep = clt_experiment(sc);
  Json j = clt_report_json(cfg, sc, rep);
  emit(cli, doc, j, samples_csv(cfg, rep));
  return 0;
}

int cmd_clt(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  auto sc = make_scenario(cfg, doc, cli, "clt");
  auto rep = clt_experiment(sc);
  Json j = clt_report_json(cfg, sc, rep);
  emit(cli, doc, j, samples_csv(cfg, rep));

  CheckFailure check;
  if (cli.check) {
    Json c = doc.value("check", Json::object());
    if (c.contains("sigma_range")) {
      double lo = c["sigma_range"][0].get<double>(), hi = c["sigma_range"][1].get<double>();
      check.require(rep.sigma_hat >= lo && rep.sigma_hat <= hi,
                    "sigma_hat " + format_double(rep.sigma_hat) + " outside [" +
                        format_double(lo) + ", " + format_double(hi) + "]");
    }
    if (c.contains("ks_max"))
      check.require(rep.ks <= c["ks_max"].get<double>(),
                    "ks " + format_double(rep.ks) + " above " +
                        format_double(c["ks_max"].get<double>()));
    if (c.value("expect_degenerate", false)) {
      check.require(rep.degenerate, "expected a degenerate verdict");
      bool all_zero = true;
      for (double x : rep.samples) all_zero = all_zero && x == 0.0;
      check.require(all_zero, "expected every sample to be exactly 0");
    }
    if (c.contains("sigma_min"))
      check.require(rep.sigma_hat > c["sigma_min"].get<double>(),
                    "sigma_hat below the configured minimum");
  }
  return finish(check);
}

int cmd_lil(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  auto sc = make_scenario(cfg, doc, cli, "lil");
  const Json block = doc.value("lil", Json::object());
  std::int64_t n_total = block.value("n_total", std::int64_t{1'000'000});
  std::int64_t n0 = block.value("n0", std::int64_t{1000});
  auto curve = lil_track(sc, n_total, n0);

  std::string csv = provenance(cfg) + "N,r_plain,r_sqrt2\n";
  for (const auto& pt : curve.points) {
    csv += std::to_string(pt.n);
    csv += ',';
    csv += format_double(pt.r_plain);
    csv += ',';
    csv += format_double(pt.r_sqrt2);
    csv += '\n';
  }
  Json j;
  stamp(j, cfg);
  j["n_total"] = n_total;
  j["n0"] = n0;
  j["ell"] = sc.ell;
  bool monotone = true;
  for (std::size_t i = 1; i < curve.points.size(); ++i)
    monotone = monotone && curve.points[i].r_plain >= curve.points[i - 1].r_plain;
  j["monotone"] = monotone;
  if (!curve.points.empty()) {
    j["final_r_plain"] = curve.points.back().r_plain;
    j["final_r_sqrt2"] = curve.points.back().r_sqrt2;
  }
  emit(cli, doc, j, csv);

  CheckFailure check;
  if (cli.check) {
    Json c = doc.value("check", Json::object());
    check.require(monotone, "running max must be nondecreasing");
    if (c.contains("r_sqrt2_range")) {
      double lo = c["r_sqrt2_range"][0].get<double>(), hi = c["r_sqrt2_range"][1].get<double>();
      double r = curve.points.back().r_sqrt2;
      check.require(r >= lo && r <= hi, "final r_sqrt2 " + format_double(r) + " outside band");
    }
    if (c.value("expect_zero", false)) {
      bool zero = true;
      for (const auto& pt : curve.points) zero = zero && pt.r_plain == 0.0;
      check.require(zero, "expected the identically-zero curve");
    }
  }
  return finish(check);
}

int cmd_distortion(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  const Json block = doc.value("distortion", Json::object());
  int N = block.value("N", 8);
  auto opts = parse_psi_options(block, cfg.seed);
  auto est = distortion(*cfg.phi, cfg.mu, N, opts);
  Json j;
  stamp(j, cfg);
  j["N"] = N;
  j["mode"] = est.mode == EvalMode::exact ? "exact" : "mc";
  j["a"] = est.a;
  j["se"] = est.se;
  j["ell"] = est.ell;
  j["ell_error"] = est.error_bound;
  j["truncation_slack"] = est.truncation_slack;
  emit(cli, doc, j);

  CheckFailure check;
  if (cli.check) {
    double d_plus = require_defect_bound(*cfg.phi);
    for (std::size_t m = 1; m < est.a.size(); ++m) {
      for (std::size_t n = 1; m + n < est.a.size(); ++n) {
        double gap = std::abs(est.a[m + n] - est.a[m] - est.a[n]);
        check.require(gap <= d_plus + 1e-9,
                      "subadditivity gap " + format_double(gap) + " above defect bound at (" +
                          std::to_string(m) + "," + std::to_string(n) + ")");
      }
    }
  }
  return finish(check);
}

int cmd_defect(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  const Json block = doc.value("defect", Json::object());
  DefectSearch search;
  search.ball_radius = block.value("radius", 3);
  search.random_pairs = block.value("random_pairs", 0);
  search.seed = cfg.seed;
  auto probe = defect_lower_bound(*cfg.phi, search);
  Json j;
  stamp(j, cfg);
  j["floor"] = probe.floor;
  j["witness_g"] = format_element(cfg.alphabet, probe.witness_g);
  j["witness_h"] = format_element(cfg.alphabet, probe.witness_h);
  if (cfg.phi->defect_bound()) j["declared_bound"] = *cfg.phi->defect_bound();
  emit(cli, doc, j);

  CheckFailure check;
  if (cli.check) {
    if (cfg.phi->defect_bound())
      check.require(probe.floor <= *cfg.phi->defect_bound(),
                    "probed floor exceeds the declared defect bound");
    Json c = doc.value("check", Json::object());
    if (c.contains("floor_min"))
      check.require(probe.floor >= c["floor_min"].get<double>(),
                    "defect floor below the expected minimum");
  }
  return finish(check);
}

int cmd_harmonic(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  const Json block = doc.value("harmonic", Json::object());
  int N = block.value("N", 8);
  int radius = block.value("eval_radius", 3);
  auto opts = parse_psi_options(block, cfg.seed);
  BiharmonicEvaluator ev(cfg.phi, cfg.mu, N, opts);

  auto core = enumerate_ball(cfg.alphabet, radius, opts.support_cap);
  auto table = tabulate(ev, closed_eval_set(cfg.alphabet, core, cfg.mu), cfg.threads);
  auto right = residuals(table, cfg.mu, core, ResidualSide::right);
  auto left = residuals(table, cfg.mu, core, ResidualSide::left);

  Json j;
  stamp(j, cfg);
  j["ell"] = ev.ell();
  j["ell_error"] = ev.ell_error();
  j["N"] = N;
  j["mode"] = opts.mode == EvalMode::exact ? "exact" : "mc";
  j["defect_assumed"] = ev.defect_assumed();
  j["right_budget"] = right.budget;
  Json rows = Json::array();
  for (std::size_t i = 0; i < right.rows.size(); ++i) {
    Json row;
    row["g"] = format_element(cfg.alphabet, right.rows[i].g);
    row["right"] = right.rows[i].value;
    row["left"] = left.rows[i].value;
    rows.push_back(row);
  }
  j["residuals"] = rows;
  j["max_right"] = right.max_abs;
  j["max_left"] = left.max_abs;

  std::string csv = provenance(cfg) + "g,value\n";
  for (std::size_t i = 0; i < table.eval_set.size(); ++i) {
    csv += '"' + format_element(cfg.alphabet, table.eval_set[i]) + "\",";
    csv += format_double(table.values[i]);
    csv += '\n';
  }
  emit(cli, doc, j, csv);

  CheckFailure check;
  if (cli.check) {
    double tol = doc.value("check", Json::object()).value("identity_tol", 1e-9);
    check.require(opts.mode == EvalMode::exact,
                  "the residual identity gate needs exact mode");
    for (const auto& row : right.rows) {
      double predicted = ev.psi(N, row.g).value / N + (ev.a(N) / N - ev.ell());
      check.require(std::abs(row.value - predicted) <= tol,
                    "residual identity misses at g = " + format_element(cfg.alphabet, row.g));
      check.require(std::abs(row.value) <= right.budget + 1e-12,
                    "right residual above 2 D-hat / N at g = " +
                        format_element(cfg.alphabet, row.g));
    }
  }
  return finish(check);
}

int cmd_tame(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  const Json block = doc.value("tame", Json::object());
  TamenessOptions opts;
  opts.horizon = block.value("horizon", 8);
  opts.threshold = block.value("threshold", 3.0);
  opts.support_cap = block.value("support_cap", std::size_t{4'000'000});
  if (doc.contains("ell") && doc["ell"].value("source", "") == "supplied")
    opts.ell_supplied = doc["ell"].at("value").get<double>();
  auto res = tameness_check(*cfg.phi, cfg.mu, opts);

  Json j;
  stamp(j, cfg);
  j["verdict"] = res.tame ? "tame-to-horizon" : "non-tame-witness";
  j["horizon"] = res.horizon;
  j["ell"] = res.ell_used;
  j["flag_level"] = res.flag_level;
  j["s"] = res.s;
  if (res.tame) {
    j["C"] = res.C;
  } else {
    j["witness_n"] = res.witness_n;
    j["witness_g"] = format_element(cfg.alphabet, res.witness_g);
    j["witness_value"] = res.witness_value;
  }
  emit(cli, doc, j);

  CheckFailure check;
  if (cli.check) {
    std::string expect = doc.value("check", Json::object()).value("expect", "");
    if (expect == "non-tame") check.require(!res.tame, "expected a non-tame witness");
    if (expect == "tame") check.require(res.tame, "expected tame-to-horizon");
  }
  return finish(check);
}

// The evaluator for boundary/martingale runs takes its psi options from the
// experiment block's "psi" entry when present, else from the harmonic block.
BiharmonicEvaluator make_evaluator(const ExperimentConfig& cfg, const Json& doc,
                                   const Json& block = Json()) {
  Json spec = block.is_object() && block.contains("psi") ? block.at("psi")
                                                         : doc.value("harmonic", Json::object());
  int N = spec.value("N", doc.value("harmonic", Json::object()).value("N", 8));
  auto opts = parse_psi_options(spec, cfg.seed);
  return BiharmonicEvaluator(cfg.phi, cfg.mu, N, opts);
}

int cmd_martingale(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  const Json block = doc.value("martingale", Json::object());
  int K = block.value("K", 256);
  std::int64_t M = cli.M.value_or(block.value("M", std::int64_t{10000}));
  auto ev = make_evaluator(cfg, doc, block);
  auto ms = martingale_sigma(ev, K, M, cfg.seed, cfg.threads);

  Json j;
  stamp(j, cfg);
  j["K"] = K;
  j["M"] = M;
  j["sigma_hat"] = ms.sigma_hat;
  j["se_sigma"] = ms.se_sigma;
  j["sigma_half"] = ms.sigma_half;
  j["cauchy_gap"] = ms.cauchy_gap;
  j["mean_delta"] = ms.mean_delta;
  j["se_mean"] = ms.se_mean;
  j["ell"] = ev.ell();

  std::string csv = provenance(cfg) + "sample,delta,delta_half\n";
  for (std::size_t i = 0; i < ms.deltas.size(); ++i) {
    csv += std::to_string(i);
    csv += ',';
    csv += format_double(ms.deltas[i]);
    csv += ',';
    csv += format_double(ms.deltas_half[i]);
    csv += '\n';
  }
  emit(cli, doc, j, csv);

  CheckFailure check;
  if (cli.check) {
    Json c = doc.value("check", Json::object());
    if (c.contains("sigma_min"))
      check.require(ms.sigma_hat > c["sigma_min"].get<double>(), "sigma_hat too small");
    if (c.contains("sigma_exact"))
      check.require(ms.sigma_hat == c["sigma_exact"].get<double>(),
                    "sigma_hat must match exactly");
    if (c.value("mean_within_3se", true) && ms.sigma_hat > 0)
      check.require(std::abs(ms.mean_delta) <= 3.0 * ms.se_mean,
                    "mean increment outside 3 SE of zero");
  }
  return finish(check);
}

int cmd_boundary(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  const Json block = doc.value("boundary", Json::object());
  std::int64_t L = block.value("L", std::int64_t{128});
  std::size_t n_rays = block.value("rays", std::size_t{2000});
  RayMode mode = block.value("mode", "hitting") == std::string("hitting")
                     ? RayMode::hitting
                     : RayMode::trajectory_limit;
  int window = block.value("window", 64);
  auto sections = block.value("sections",
                              std::vector<std::string>{"cylinders", "stationarity",
                                                       "integral", "variance", "cocycle"});
  auto has = [&](const char* s) {
    return std::find(sections.begin(), sections.end(), s) != sections.end();
  };

  auto ev = make_evaluator(cfg, doc, block);
  Json j;
  stamp(j, cfg);
  j["L"] = L;
  j["rays"] = n_rays;
  j["mode"] = mode == RayMode::hitting ? "hitting" : "trajectory-limit";
  j["ell"] = ev.ell();
  CheckFailure check;
  Json c = doc.value("check", Json::object());
  std::string csv;

  if (has("cylinders") && mode == RayMode::hitting) {
    std::size_t cyl_rays = block.value("cylinder_rays", std::size_t{100000});
    Json cylinders = Json::array();
    auto ball = enumerate_ball(cfg.alphabet, 2);
    std::vector<std::size_t> counts(ball.size(), 0);
    for (std::size_t i = 0; i < cyl_rays; ++i) {
      auto ray = sample_ray(cfg.mu, mode, cfg.seed ^ 0xC1Dull, i, window);
      auto p = ray.prefix_element(2);
      for (std::size_t b = 0; b < ball.size(); ++b) {
        const auto& w = ball[b];
        if (w.is_identity() || w.length() > 2) continue;
        const auto& wd = w.data();
        const auto& pd = p.data();
        if (pd.size() >= wd.size() && std::equal(wd.begin(), wd.end(), pd.begin()))
          ++counts[b];
      }
    }
    for (std::size_t b = 0; b < ball.size(); ++b) {
      const auto& w = ball[b];
      if (w.is_identity()) continue;
      double expect = cylinder_mass(cfg.alphabet.rank(), w.length());
      double freq = static_cast<double>(counts[b]) / static_cast<double>(cyl_rays);
      double se = std::sqrt(expect * (1 - expect) / static_cast<double>(cyl_rays));
      Json row;
      row["cylinder"] = format_element(cfg.alphabet, w);
      row["expected"] = expect;
      row["observed"] = freq;
      row["se"] = se;
      cylinders.push_back(row);
      if (cli.check)
        check.require(std::abs(freq - expect) <= 3.0 * se,
                      "cylinder frequency outside binomial 3 SE at " +
                          format_element(cfg.alphabet, w));
    }
    j["cylinders"] = cylinders;
  }

  if (has("stationarity") && mode == RayMode::hitting) {
    auto rep = stationarity_check_exact(cfg.mu, block.value("stationarity_len", 3));
    j["stationarity_max_residual"] = rep.max_residual;
    if (cli.check)
      check.require(rep.max_residual <= c.value("stationarity_tol", 1e-12),
                    "exact stationarity residual above tolerance");
  }

  if (has("integral") || has("variance")) {
    RaySet rays(cfg.mu, mode, cfg.seed, n_rays, window);
    if (has("integral")) {
      std::vector<GroupElement> gs;
      if (block.contains("elements")) {
        for (const auto& t : block.at("elements"))
          gs.push_back(parse_element(cfg.alphabet, t.get<std::string>()));
      } else {
        gs = enumerate_ball(cfg.alphabet, 2);
      }
      auto rows = integral_representation_check(ev, gs, rays, L, cfg.threads);
      Json arr = Json::array();
      csv = provenance(cfg) + "sample,g,alpha\n";
      for (const auto& row : rows) {
        Json r;
        r["g"] = format_element(cfg.alphabet, row.g);
        r["phi_tilde"] = row.phi_tilde;
        r["se_point"] = row.se_point;
        r["mean_alpha"] = row.mean;
        r["se"] = row.se;
        r["se_combined"] = row.se_combined;
        r["discrepancy"] = row.discrepancy;
        arr.push_back(r);
        for (std::size_t i = 0; i < row.alphas.size(); ++i) {
          csv += std::to_string(i);
          csv += ",\"";
          csv += format_element(cfg.alphabet, row.g);
          csv += "\",";
          csv += format_double(row.alphas[i]);
          csv += '\n';
        }
        if (cli.check)
          check.require(
              row.discrepancy <= c.value("intrep_se_mult", 3.0) * row.se_combined + 1e-12,
              "integral representation misses at g = " +
                  format_element(cfg.alphabet, row.g));
      }
      j["integral_representation"] = arr;
    }
    if (has("variance")) {
      auto bv = boundary_variance(ev, rays, L, cfg.seed, cfg.threads);
      j["boundary_variance"] = bv.sigma2;
      j["boundary_variance_se"] = bv.se;
      j["boundary_sigma"] = std::sqrt(std::max(0.0, bv.sigma2));
    }
  }

  if (has("cocycle")) {
    int triples = block.value("triples", 100);
    auto ball = enumerate_ball(cfg.alphabet, 2);
    RngStream pick(cfg.seed, stream_id(StreamPurpose::generic, 0xC0C));
    std::vector<std::pair<GroupElement, GroupElement>> pairs;
    for (int i = 0; i < triples; ++i)
      pairs.emplace_back(ball[pick.next_below(ball.size())],
                         ball[pick.next_below(ball.size())]);
    RaySet rays(cfg.mu, mode, cfg.seed ^ 0xABCDull, pairs.size(), window);
    auto rep = cocycle_identity_check(ev, pairs, rays, L);
    j["cocycle_max_residual"] = rep.max_residual;
    j["cocycle_total_gap"] = rep.total_gap;
    if (cli.check)
      check.require(rep.max_residual <= rep.total_gap + 1e-9,
                    "cocycle identity residual above the summed stabilization gaps");
  }

  emit(cli, doc, j, csv);
  return finish(check);
}

int cmd_rn_kernel(const Cli& cli) {
  Json doc = load_doc(cli);
  auto cfg = load_config(doc);
  const Json block = doc.value("rn_kernel", Json::object());
  std::int64_t L = block.value("L", std::int64_t{64});
  std::size_t n_rays = block.value("rays", std::size_t{2000});
  int depth = block.value("cesaro_depth", 8);
  GroupElement g = block.contains("element")
                       ? parse_element(cfg.alphabet, block.at("element").get<std::string>())
                       : parse_element(cfg.alphabet, "a b");
  auto ev = make_evaluator(cfg, doc, block);
  RaySet rays(cfg.mu, RayMode::hitting, cfg.seed, n_rays);
  auto rc = rn_kernel_check(ev, g, rays, L, depth, cfg.threads);

  Json j;
  stamp(j, cfg);
  j["g"] = format_element(cfg.alphabet, g);
  j["reconstruction"] = rc.reconstruction;
  j["se"] = rc.se;
  j["target_phi_hat"] = rc.target;
  j["discrepancy"] = rc.discrepancy;
  j["reconstruction_half_depth"] = rc.reconstruction_half;
  j["mean_sigma"] = rc.mean_sigma;
  j["L"] = L;
  j["cesaro_depth"] = depth;
  emit(cli, doc, j);

  CheckFailure check;
  if (cli.check) {
    double mult = doc.value("check", Json::object()).value("rn_se_mult", 3.0);
    check.require(rc.discrepancy <= mult * rc.se + 1e-9,
                  "rn kernel reconstruction misses phi_hat");
  }
  return finish(check);
}

int cmd_report(const Cli& cli, const std::vector<std::string>& inputs) {
  std::vector<CltReport> reports;
  Json merged_inputs = Json::array();
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open report '" + path + "'");
    Json j;
    in >> j;
    merged_inputs.push_back(j);
    CltReport r;
    r.n = j.at("n").get<std::int64_t>();
    r.M = j.at("M").get<std::int64_t>();
    r.seed = j.value("seed", std::uint64_t{0});
    r.sigma_hat = j.at("sigma_hat").get<double>();
    r.ell = j.value("ell", 0.0);
    r.ell_error = j.value("ell_err", 0.0);
    r.mean_x = j.value("mean_x", 0.0);
    reports.push_back(std::move(r));
  }
  auto pooled = aggregate_reports(reports);
  Json j;
  j["n"] = pooled.n;
  j["M"] = pooled.M;
  j["sigma_hat"] = pooled.sigma_hat;
  j["mean_x"] = pooled.mean_x;
  j["ks_valid"] = pooled.ks_valid;
  j["inputs"] = inputs;
  std::cout << j.dump(2) << "\n";
  if (!cli.out_json.empty()) write_file(cli.out_json, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasimorphisms along random walks: simulation and verification"};
  app.require_subcommand(1);

  Cli cli;
  std::vector<std::string> report_inputs;

  auto add_common = [&](CLI::App* sub, bool with_walk_sizes = false) {
    sub->add_option("--config", cli.config_path, "JSON experiment config")->required();
    sub->add_option("--seed", cli.seed, "override the master seed");
    sub->add_option("--threads", cli.threads, "worker threads (0 = auto)");
    sub->add_option("--out-json", cli.out_json, "report JSON path");
    sub->add_option("--out-csv", cli.out_csv, "samples CSV path");
    sub->add_flag("--check", cli.check, "verify configured thresholds; exit 4 on failure");
    if (with_walk_sizes) {
      sub->add_option("--n", cli.n, "walk length override");
      sub->add_option("--M", cli.M, "trial count override");
    }
  };

  add_common(app.add_subcommand("walk", "run walk trials, emit endpoint samples"), true);
  add_common(app.add_subcommand("clt", "central limit experiment"), true);
  add_common(app.add_subcommand("lil", "law-of-iterated-logarithm tracking"));
  add_common(app.add_subcommand("distortion", "drift ell and the a_n table"));
  add_common(app.add_subcommand("defect", "defect lower-bound probe"));
  add_common(app.add_subcommand("harmonic", "quasi-biharmonic table and residuals"));
  add_common(app.add_subcommand("tame", "tameness semi-decision"));
  add_common(app.add_subcommand("martingale", "backward-product increment variance"), true);
  add_common(app.add_subcommand("boundary", "boundary cocycle suite"));
  add_common(app.add_subcommand("rn-kernel", "Radon-Nikodym kernel reconstruction"));
  auto* rep = app.add_subcommand("report", "pool clt reports");
  rep->add_option("inputs", report_inputs, "report JSON files")->required();
  rep->add_option("--out-json", cli.out_json, "pooled report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    Json err;
    err["error"] = "config";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    std::cerr << app.help() << "\n";
    return static_cast<int>(ErrorCode::config);
  }

  try {
    if (app.got_subcommand("walk")) return cmd_walk(cli);
    if (app.got_subcommand("clt")) return cmd_clt(cli);
    if (app.got_subcommand("lil")) return cmd_lil(cli);
    if (app.got_subcommand("distortion")) return cmd_distortion(cli);
    if (app.got_subcommand("defect")) return cmd_defect(cli);
    if (app.got_subcommand("harmonic")) return cmd_harmonic(cli);
    if (app.got_subcommand("tame")) return cmd_tame(cli);
    if (app.got_subcommand("martingale")) return cmd_martingale(cli);
    if (app.got_subcommand("boundary")) return cmd_boundary(cli);
    if (app.got_subcommand("rn-kernel")) return cmd_rn_kernel(cli);
    if (app.got_subcommand("report")) return cmd_report(cli, report_inputs);
  } catch (const Error& e) {
    Json err;
    err["error"] = e.code() == ErrorCode::config     ? "config"
                   : e.code() == ErrorCode::capacity ? "capacity"
                                                     : "check";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    Json err;
    err["error"] = "config";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return static_cast<int>(ErrorCode::config);
  }
  return 0;
}
