#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qmwalk/boundary.hpp"
#include "qmwalk/config.hpp"
#include "qmwalk/montecarlo.hpp"

namespace py = pybind11;
using namespace qmwalk;

namespace {

PsiOptions psi_options(const std::string& mode, int mc_samples, std::uint64_t mc_seed,
                       double tau) {
  PsiOptions opts;
  if (mode == "exact")
    opts.mode = EvalMode::exact;
  else if (mode == "mc")
    opts.mode = EvalMode::monte_carlo;
  else
    throw ConfigError("mode must be 'exact' or 'mc'");
  opts.mc_samples = mc_samples;
  opts.mc_seed = mc_seed;
  opts.tau = tau;
  return opts;
}

py::dict clt_dict(const CltReport& rep) {
  py::dict d;
  d["n"] = rep.n;
  d["M"] = rep.M;
  d["sigma_hat"] = rep.sigma_hat;
  d["ks"] = rep.ks;
  d["ks_band"] = rep.ks_band;
  d["degenerate"] = rep.degenerate;
  d["ell"] = rep.ell;
  d["ell_error"] = rep.ell_error;
  d["mean_x"] = rep.mean_x;
  d["se_mean"] = rep.se_mean;
  d["samples"] = rep.samples;
  d["phi_values"] = rep.phi_values;
  return d;
}

// pybind11 holders do not support shared_ptr-to-const; a small value
// wrapper carries the quasimorphism handle instead.
struct PyQm {
  QmPtr ptr;
  const Quasimorphism& ref() const { return *ptr; }
};

}  // namespace

PYBIND11_MODULE(_qmwalk, m) {
  m.doc() = "quasimorphisms along random walks: reduced-word groups, sparse "
            "measures, biharmonic representatives, boundary cocycles, CLT/LIL "
            "experiments";

  py::register_exception<ConfigError>(m, "ConfigurationError");
  py::register_exception<CapacityError>(m, "CapacityLimitError");

  py::class_<Alphabet>(m, "Alphabet")
      .def_static("free_group", &Alphabet::free_group, py::arg("generators"))
      .def_static("free_abelian", &Alphabet::free_abelian, py::arg("generators"))
      .def_property_readonly("rank", &Alphabet::rank)
      .def_property_readonly("is_free", &Alphabet::is_free)
      .def_property_readonly("generators", &Alphabet::names)
      .def("__repr__", &Alphabet::describe)
      .def("__eq__", [](const Alphabet& a, const Alphabet& b) { return a == b; });

  py::class_<GroupElement>(m, "GroupElement")
      .def_property_readonly("length", &GroupElement::length)
      .def_property_readonly("is_identity", &GroupElement::is_identity)
      .def("__eq__", [](const GroupElement& a, const GroupElement& b) { return a == b; })
      .def("__lt__", [](const GroupElement& a, const GroupElement& b) { return a < b; })
      .def("__hash__", &GroupElement::hash);

  m.def("parse", &parse_element, py::arg("alphabet"), py::arg("text"));
  m.def("format", &format_element, py::arg("alphabet"), py::arg("element"));
  m.def("identity", &GroupElement::identity);
  m.def("multiply", &multiply);
  m.def("invert", &invert);
  m.def("power", &power);
  m.def("ball", [](const Alphabet& a, int radius) { return enumerate_ball(a, radius); });

  py::class_<FiniteMeasure>(m, "FiniteMeasure")
      .def_static(
          "from_entries",
          [](const Alphabet& a, const std::vector<std::pair<std::string, std::string>>& entries,
             bool symmetric) {
            std::vector<std::pair<GroupElement, Rational>> parsed;
            for (const auto& [el, w] : entries) {
              auto r = Rational::parse(w);
              if (!r) throw ConfigError("weight '" + w + "' is not a rational");
              parsed.emplace_back(parse_element(a, el), *r);
            }
            auto mu = FiniteMeasure::from_rational(a, std::move(parsed));
            return symmetric ? symmetrize(mu) : mu;
          },
          py::arg("alphabet"), py::arg("entries"), py::arg("symmetric") = false)
      .def_static("uniform",
                  [](const Alphabet& a, const std::vector<std::string>& support) {
                    std::vector<GroupElement> elems;
                    for (const auto& s : support) elems.push_back(parse_element(a, s));
                    return FiniteMeasure::uniform(a, elems);
                  })
      .def_static("dirac", [](const Alphabet& a, const GroupElement& g) {
        return FiniteMeasure::dirac(a, g);
      })
      .def_property_readonly("size", &FiniteMeasure::size)
      .def("entries",
           [](const FiniteMeasure& mu) {
             std::vector<std::pair<GroupElement, double>> out;
             for (std::size_t i = 0; i < mu.size(); ++i)
               out.emplace_back(mu.element(i), mu.weight(i));
             return out;
           })
      .def("mass_of", &FiniteMeasure::mass_of)
      .def("is_symmetric", [](const FiniteMeasure& mu) { return is_symmetric(mu); })
      .def("symmetrize", [](const FiniteMeasure& mu) { return symmetrize(mu); })
      .def(
          "sample",
          [](const FiniteMeasure& mu, std::uint64_t seed, std::size_t count) {
            MeasureSampler sampler(mu);
            RngStream rng(seed, stream_id(StreamPurpose::generic, 0));
            std::vector<GroupElement> out;
            out.reserve(count);
            for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.draw(rng));
            return out;
          },
          py::arg("seed"), py::arg("count") = 1)
      .def("support_generates", [](const FiniteMeasure& mu, int horizon) {
        return support_generates(mu, horizon).describe();
      });

  m.def("convolve", &convolve);
  m.def(
      "convolve_power",
      [](const FiniteMeasure& mu, int n, double tau) {
        auto out = convolve_power(mu, n, tau);
        return py::make_tuple(out.measure, out.retained_mass);
      },
      py::arg("mu"), py::arg("n"), py::arg("tau") = 0.0);

  py::class_<PyQm>(m, "Quasimorphism")
      .def("__call__", [](const PyQm& q, const GroupElement& g) { return q.ref().eval(g); })
      .def("eval", [](const PyQm& q, const GroupElement& g) { return q.ref().eval(g); })
      .def_property_readonly("description",
                             [](const PyQm& q) { return q.ref().description(); })
      .def_property_readonly("defect_bound", [](const PyQm& q) { return q.ref().defect_bound(); })
      .def_property_readonly("defect_floor", [](const PyQm& q) { return q.ref().defect_floor(); })
      .def_property_readonly("homogeneous", [](const PyQm& q) { return q.ref().homogeneous(); })
      .def_property_readonly("homogeneity_tolerance",
                             [](const PyQm& q) { return q.ref().homogeneity_tolerance(); });

  m.def(
      "homomorphism",
      [](const Alphabet& a, std::vector<double> values) {
        return PyQm{make_homomorphism(a, std::move(values))};
      },
      py::arg("alphabet"), py::arg("values"));
  m.def(
      "brooks",
      [](const Alphabet& a, const std::string& word, std::optional<double> defect_bound) {
        return PyQm{make_brooks(a, parse_element(a, word), defect_bound)};
      },
      py::arg("alphabet"), py::arg("word"), py::arg("defect_bound") = std::nullopt);
  m.def(
      "bounded_noise",
      [](const Alphabet& a, double amplitude, std::uint64_t seed) {
        return PyQm{make_bounded_noise(a, amplitude, seed)};
      },
      py::arg("alphabet"), py::arg("amplitude"), py::arg("seed"));
  m.def(
      "combine",
      [](const std::vector<std::pair<double, PyQm>>& terms) {
        std::vector<std::pair<double, QmPtr>> inner;
        for (const auto& [c, qm] : terms) inner.emplace_back(c, qm.ptr);
        return PyQm{combine(std::move(inner))};
      },
      py::arg("terms"));
  m.def(
      "homogenize",
      [](const PyQm& phi, int depth) {
        auto h = homogenize(phi.ptr, depth);
        return py::make_tuple(PyQm{h.qm}, h.tolerance);
      },
      py::arg("phi"), py::arg("doubling_depth") = 6);
  m.def("differential", [](const PyQm& phi, const GroupElement& g, const GroupElement& h) {
    return differential(phi.ref(), g, h);
  });
  m.def(
      "defect_lower_bound",
      [](const PyQm& phi, int radius, int random_pairs, std::uint64_t seed) {
        auto probe = defect_lower_bound(phi.ref(), {radius, random_pairs, seed, 200'000});
        py::dict d;
        d["floor"] = probe.floor;
        d["witness_g"] = probe.witness_g;
        d["witness_h"] = probe.witness_h;
        return d;
      },
      py::arg("phi"), py::arg("radius") = 3, py::arg("random_pairs") = 0, py::arg("seed") = 0);

  m.def(
      "distortion",
      [](const PyQm& phi, const FiniteMeasure& mu, int N, const std::string& mode,
         int mc_samples, std::uint64_t mc_seed, double tau) {
        auto est = distortion(phi.ref(), mu, N, psi_options(mode, mc_samples, mc_seed, tau));
        py::dict d;
        d["a"] = est.a;
        d["se"] = est.se;
        d["ell"] = est.ell;
        d["error_bound"] = est.error_bound;
        return d;
      },
      py::arg("phi"), py::arg("mu"), py::arg("N") = 8, py::arg("mode") = "exact",
      py::arg("mc_samples") = 64, py::arg("mc_seed") = 0, py::arg("tau") = 0.0);

  py::class_<BiharmonicEvaluator>(m, "BiharmonicEvaluator")
      .def(py::init([](const PyQm& phi, const FiniteMeasure& mu, int N,
                       const std::string& mode, int mc_samples, std::uint64_t mc_seed,
                       double tau) {
             return BiharmonicEvaluator(phi.ptr, mu, N,
                                        psi_options(mode, mc_samples, mc_seed, tau));
           }),
           py::arg("phi_hat"), py::arg("mu"), py::arg("N") = 8, py::arg("mode") = "exact",
           py::arg("mc_samples") = 64, py::arg("mc_seed") = 0, py::arg("tau") = 0.0)
      .def("__call__", &BiharmonicEvaluator::eval)
      .def("eval", &BiharmonicEvaluator::eval)
      .def("eval_with_se",
           [](const BiharmonicEvaluator& ev, const GroupElement& g) {
             auto v = ev.eval_with_se(g);
             return py::make_tuple(v.value, v.se);
           })
      .def("psi",
           [](const BiharmonicEvaluator& ev, int n, const GroupElement& g) {
             auto v = ev.psi(n, g);
             return py::make_tuple(v.value, v.se);
           })
      .def("a", &BiharmonicEvaluator::a)
      .def_property_readonly("ell", &BiharmonicEvaluator::ell)
      .def_property_readonly("ell_error", &BiharmonicEvaluator::ell_error)
      .def_property_readonly("defect_assumed", &BiharmonicEvaluator::defect_assumed)
      .def_property_readonly("right_residual_budget",
                             &BiharmonicEvaluator::right_residual_budget);

  m.def(
      "harmonic_residuals",
      [](const BiharmonicEvaluator& ev, int radius, int threads) {
        const Alphabet& a = ev.alphabet();
        auto core = enumerate_ball(a, radius);
        auto table = tabulate(ev, closed_eval_set(a, core, ev.mu()), threads);
        auto right = residuals(table, ev.mu(), core, ResidualSide::right);
        auto left = residuals(table, ev.mu(), core, ResidualSide::left);
        py::list rows;
        for (std::size_t i = 0; i < right.rows.size(); ++i) {
          py::dict row;
          row["g"] = right.rows[i].g;
          row["right"] = right.rows[i].value;
          row["left"] = left.rows[i].value;
          rows.append(row);
        }
        py::dict d;
        d["rows"] = rows;
        d["max_right"] = right.max_abs;
        d["max_left"] = left.max_abs;
        d["right_budget"] = right.budget;
        return d;
      },
      py::arg("evaluator"), py::arg("radius") = 2, py::arg("threads") = 1);

  m.def(
      "tameness_check",
      [](const PyQm& phi, const FiniteMeasure& mu, int horizon, double threshold) {
        TamenessOptions opts;
        opts.horizon = horizon;
        opts.threshold = threshold;
        auto res = tameness_check(phi.ref(), mu, opts);
        py::dict d;
        d["tame"] = res.tame;
        d["s"] = res.s;
        d["C"] = res.C;
        d["ell"] = res.ell_used;
        d["flag_level"] = res.flag_level;
        if (!res.tame) {
          d["witness_n"] = res.witness_n;
          d["witness_g"] = res.witness_g;
          d["witness_value"] = res.witness_value;
        }
        return d;
      },
      py::arg("phi"), py::arg("mu"), py::arg("horizon") = 8, py::arg("threshold") = 3.0);

  py::class_<BoundaryRay>(m, "BoundaryRay")
      .def("prefix", &BoundaryRay::prefix_element, py::arg("length"))
      .def_property_readonly("retraction_events", &BoundaryRay::retraction_events);

  m.def(
      "sample_ray",
      [](const FiniteMeasure& mu, const std::string& mode, std::uint64_t seed,
         std::uint64_t index, int window) {
        RayMode rm = mode == "hitting" ? RayMode::hitting : RayMode::trajectory_limit;
        return sample_ray(mu, rm, seed, index, window);
      },
      py::arg("mu"), py::arg("mode") = "hitting", py::arg("seed") = 0, py::arg("index") = 0,
      py::arg("window") = 64);

  m.def(
      "cocycle",
      [](const BiharmonicEvaluator& ev, const GroupElement& g, BoundaryRay& xi,
         std::int64_t L) {
        auto v = cocycle(ev, g, xi, L);
        return py::make_tuple(v.value, v.gap);
      },
      py::arg("evaluator"), py::arg("g"), py::arg("ray"), py::arg("L") = 128);

  m.def("cylinder_mass", &cylinder_mass, py::arg("rank"), py::arg("length"));
  m.def("preimage_mass", &preimage_mass, py::arg("alphabet"), py::arg("g"),
        py::arg("cylinder"));

  m.def(
      "martingale_sigma",
      [](const BiharmonicEvaluator& ev, int K, std::int64_t M, std::uint64_t seed,
         int threads) {
        auto ms = martingale_sigma(ev, K, M, seed, threads);
        py::dict d;
        d["sigma_hat"] = ms.sigma_hat;
        d["se_sigma"] = ms.se_sigma;
        d["sigma_half"] = ms.sigma_half;
        d["cauchy_gap"] = ms.cauchy_gap;
        d["mean_delta"] = ms.mean_delta;
        d["se_mean"] = ms.se_mean;
        return d;
      },
      py::arg("evaluator"), py::arg("K") = 256, py::arg("M") = 1000, py::arg("seed") = 0,
      py::arg("threads") = 1);

  m.def(
      "boundary_variance",
      [](const BiharmonicEvaluator& ev, std::size_t rays, std::int64_t L, std::uint64_t seed,
         int threads) {
        RaySet rs(ev.mu(), RayMode::hitting, seed, rays);
        auto bv = boundary_variance(ev, rs, L, seed, threads);
        py::dict d;
        d["sigma2"] = bv.sigma2;
        d["se"] = bv.se;
        return d;
      },
      py::arg("evaluator"), py::arg("rays") = 1000, py::arg("L") = 64, py::arg("seed") = 0,
      py::arg("threads") = 1);

  m.def(
      "integral_representation_check",
      [](const BiharmonicEvaluator& ev, const std::vector<GroupElement>& gs, std::size_t rays,
         std::int64_t L, std::uint64_t seed, int threads) {
        RaySet rs(ev.mu(), RayMode::hitting, seed, rays);
        auto rows = integral_representation_check(ev, gs, rs, L, threads);
        py::list out;
        for (const auto& row : rows) {
          py::dict d;
          d["g"] = row.g;
          d["phi_tilde"] = row.phi_tilde;
          d["mean_alpha"] = row.mean;
          d["se"] = row.se;
          d["se_combined"] = row.se_combined;
          d["discrepancy"] = row.discrepancy;
          out.append(d);
        }
        return out;
      },
      py::arg("evaluator"), py::arg("elements"), py::arg("rays") = 1000, py::arg("L") = 64,
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "stationarity_check",
      [](const FiniteMeasure& mu, int max_len) {
        auto rep = stationarity_check_exact(mu, max_len);
        py::dict d;
        d["max_residual"] = rep.max_residual;
        d["cylinders"] = rep.rows.size();
        return d;
      },
      py::arg("mu"), py::arg("max_len") = 3);

  m.def(
      "rn_kernel_check",
      [](const BiharmonicEvaluator& ev, const GroupElement& g, std::size_t rays,
         std::int64_t L, int cesaro_depth, std::uint64_t seed, int threads) {
        RaySet rs(ev.mu(), RayMode::hitting, seed, rays);
        auto rc = rn_kernel_check(ev, g, rs, L, cesaro_depth, threads);
        py::dict d;
        d["reconstruction"] = rc.reconstruction;
        d["se"] = rc.se;
        d["target_phi_hat"] = rc.target;
        d["discrepancy"] = rc.discrepancy;
        d["mean_sigma"] = rc.mean_sigma;
        return d;
      },
      py::arg("evaluator"), py::arg("g"), py::arg("rays") = 1000, py::arg("L") = 64,
      py::arg("cesaro_depth") = 8, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "clt_experiment",
      [](const FiniteMeasure& mu, const PyQm& phi, std::int64_t n, std::int64_t M,
         std::uint64_t seed, double ell, double ell_error, int threads) {
        WalkScenario sc{phi.ref().alphabet(), mu, phi.ptr};
        sc.n = n;
        sc.M = M;
        sc.seed = seed;
        sc.ell = ell;
        sc.ell_error = ell_error;
        sc.threads = threads;
        return clt_dict(clt_experiment(sc));
      },
      py::arg("mu"), py::arg("phi"), py::arg("n") = 1024, py::arg("M") = 1000,
      py::arg("seed") = 0, py::arg("ell") = 0.0, py::arg("ell_error") = 0.0,
      py::arg("threads") = 1);

  m.def("ks_statistic", &ks_statistic, py::arg("samples"), py::arg("sigma") = 1.0);

  m.def(
      "lil_track",
      [](const FiniteMeasure& mu, const PyQm& phi, std::int64_t n_total, std::int64_t n0,
         std::uint64_t seed, double ell) {
        WalkScenario sc{phi.ref().alphabet(), mu, phi.ptr};
        sc.seed = seed;
        sc.ell = ell;
        auto curve = lil_track(sc, n_total, n0);
        py::list pts;
        for (const auto& pt : curve.points)
          pts.append(py::make_tuple(pt.n, pt.r_plain, pt.r_sqrt2));
        return pts;
      },
      py::arg("mu"), py::arg("phi"), py::arg("n_total") = 100000, py::arg("n0") = 1000,
      py::arg("seed") = 0, py::arg("ell") = 0.0);
}
