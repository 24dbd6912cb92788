#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stmix/euler2d.hpp"
#include "stmix/orbits.hpp"
#include "stmix/runner.hpp"
#include "stmix/spde.hpp"
#include "stmix/spectrum.hpp"

namespace py = pybind11;
using namespace stmix;

namespace {

ThetaSpec spec_from_kwargs(const std::string& family, double alpha, int cutoff, double radius) {
  ThetaSpec s;
  s.family = family;
  s.alpha = alpha;
  s.cutoff = cutoff;
  s.radius = radius;
  return s;
}

py::dict constants_dict(const MixingConstants& mc) {
  py::dict d;
  d["dim"] = mc.dim;
  d["kappa"] = mc.kappa;
  d["C_d"] = mc.c_d;
  d["h_minus1"] = mc.h_minus1;
  d["h_plus1"] = mc.h_plus1;
  d["C_theta_d"] = mc.c_theta_d;
  d["D_theta_d"] = mc.d_theta_d;
  d["t0"] = mc.t0;
  return d;
}

}  // namespace

PYBIND11_MODULE(_stmix, m) {
  m.doc() = "Spectral mixing toolkit for divergence-free transport noise";

  py::class_<LatticeBox>(m, "LatticeBox")
      .def(py::init<int, int>(), py::arg("dimension"), py::arg("radius"))
      .def_property_readonly("dim", &LatticeBox::dim)
      .def_property_readonly("radius", &LatticeBox::radius)
      .def("__len__", &LatticeBox::size)
      .def("point", [](const LatticeBox& b, int id) {
        auto p = b.point(id);
        return IVec(p.begin(), p.end());
      })
      .def("find", [](const LatticeBox& b, const IVec& k) { return b.find(k); })
      .def("mirror", &LatticeBox::mirror)
      .def("representatives", &LatticeBox::representatives);

  m.def("basis_vectors",
        [](const IVec& k) { return basis_vectors(k, int(k.size())); },
        py::arg("k"));
  m.def("perp_proj_sq",
        [](const IVec& k, const IVec& l) { return perp_proj_sq(k, l); },
        py::arg("k"), py::arg("l"));

  py::class_<ThetaCoefficients>(m, "ThetaCoefficients")
      .def("hnorm_sq", &ThetaCoefficients::hnorm_sq, py::arg("beta"))
      .def_property_readonly("support_radius", &ThetaCoefficients::support_radius)
      .def("entries", [](const ThetaCoefficients& t) {
        std::vector<std::pair<IVec, double>> out;
        for (const auto& e : t.entries()) out.emplace_back(e.k, e.value);
        return out;
      })
      .def("to_csv", &theta_to_csv);

  m.def(
      "make_theta",
      [](const LatticeBox& box, const std::string& family, double alpha, int cutoff,
         double radius) { return make_theta(spec_from_kwargs(family, alpha, cutoff, radius), box); },
      py::arg("lattice"), py::arg("family") = "unit_shell", py::arg("alpha") = 1.0,
      py::arg("cutoff") = 1, py::arg("radius") = 1.0);

  m.def(
      "mixing_constants",
      [](const ThetaCoefficients& theta, int dim, double kappa) {
        return constants_dict(mixing_constants(theta, dim, kappa));
      },
      py::arg("theta"), py::arg("dimension"), py::arg("kappa"));

  m.def("poincare_gap", [](const std::vector<double>& a, double p) {
    PoincareGap g = poincare_gap(a, p);
    return py::make_tuple(g.lhs, g.rhs);
  });

  py::class_<SpectrumState>(m, "SpectrumState")
      .def(py::init<const LatticeBox&>(), py::keep_alive<1, 2>())
      .def("set_pair", [](SpectrumState& s, const IVec& k, double v) { s.set_pair(k, v); })
      .def("init_shell", &SpectrumState::init_shell)
      .def("sum", &SpectrumState::sum)
      .def_readwrite("values", &SpectrumState::values);

  m.def(
      "h_minus1_drift",
      [](const SpectrumState& y, const ThetaCoefficients& theta, double kappa) {
        DriftResult r = h_minus1_drift(y, theta, kappa);
        return py::make_tuple(r.value, r.boundary_warning);
      },
      py::arg("state"), py::arg("theta"), py::arg("kappa"));

  m.def(
      "dirichlet_ratio",
      [](const SpectrumState& y, const ThetaCoefficients& theta, double p) {
        DirichletRatio r = dirichlet_ratio(y, theta, p);
        py::dict d;
        d["dirichlet"] = r.dirichlet;
        d["sum_p"] = r.sum_p;
        d["ratio"] = r.ratio;
        d["undefined"] = r.undefined;
        return d;
      },
      py::arg("state"), py::arg("theta"), py::arg("p"));

  m.def(
      "integrate_spectrum",
      [](int dimension, int radius, const std::string& family, double kappa, double lambda,
         double nu, double T, const std::string& truncation, std::int64_t init_shell,
         double safety, int sample_every) {
        LatticeBox box(dimension, radius);
        ThetaCoefficients theta = make_theta(ThetaSpec{family}, box);
        TruncationPolicy pol{truncation == "absorbing" ? Truncation::absorbing
                                                       : Truncation::conservative,
                             0};
        SpectrumOperator op(box, theta, kappa, lambda, nu, pol);
        SpectrumState y0(box);
        y0.init_shell(init_shell, 1.0);
        IntegrateOptions opt;
        opt.T = T;
        opt.safety = safety;
        opt.sample_every = sample_every;
        opt.p_list = {1.0, 2.0};
        opt.beta_list = {-1.0, 1.0};
        Trajectory tr = integrate(y0, op, opt);
        py::dict d;
        std::vector<double> t, sum, l2, h1, hm1, bmass;
        for (const auto& r : tr.samples) {
          t.push_back(r.t);
          sum.push_back(r.sum);
          l2.push_back(r.lp[1]);
          hm1.push_back(r.hbeta[0]);
          h1.push_back(r.hbeta[1]);
          bmass.push_back(r.boundary_mass);
        }
        d["t"] = t;
        d["sum"] = sum;
        d["l2"] = l2;
        d["hm1"] = hm1;
        d["h1"] = h1;
        d["boundary_mass"] = bmass;
        return d;
      },
      py::arg("dimension") = 2, py::arg("radius") = 12, py::arg("family") = "unit_shell",
      py::arg("kappa") = 1.0, py::arg("lambda") = 0.0, py::arg("nu") = 0.0, py::arg("T") = 0.02,
      py::arg("truncation") = "conservative", py::arg("init_shell") = 2, py::arg("safety") = 0.5,
      py::arg("sample_every") = 10);

  m.def("fit_decay_rate",
        [](const std::vector<double>& t, const std::vector<double>& v, double t_a, double t_b) {
          std::vector<std::pair<double, double>> series;
          for (std::size_t i = 0; i < t.size(); ++i) series.emplace_back(t[i], v[i]);
          RateFit f = fit_decay_rate(series, t_a, t_b);
          py::dict d;
          d["rate"] = f.fitted_rate;
          d["intercept"] = f.intercept;
          d["residual_rms"] = f.residual_rms;
          d["n_samples"] = f.n_samples;
          return d;
        });

  m.def(
      "orbit_cover_summary",
      [](const IVec& l, int box_radius, int margin) {
        LatticeBox box(2, box_radius);
        auto fam = build_orbits_2d(l, box);
        std::vector<OrbitFamily> fams{fam};
        CoverReport rep = cover_multiplicity(fams, box, margin);
        double min_ratio = std::numeric_limits<double>::infinity();
        for (const auto& o : fam.orbits)
          if (!o.points.empty()) min_ratio = std::min(min_ratio, projection_bound_margin(o));
        py::dict d;
        d["certified_points"] = rep.certified_points;
        d["violations"] = rep.violations.size();
        d["certified_radius"] = rep.certified_radius;
        d["min_projection_ratio"] = min_ratio;
        return d;
      },
      py::arg("l"), py::arg("box") = 20, py::arg("margin") = 3);

  m.def("kappa_for_target_rate", &kappa_for_target_rate, py::arg("lambda"), py::arg("R"),
        py::arg("alpha"), py::arg("cutoff"));

  m.def("parse_config_errors", [](const std::string& text) {
    ParseResult r = parse_config(text);
    return py::make_tuple(r.errors, r.warnings);
  });

  m.def("run_command_json", [](const std::string& text) {
    ParseResult r = parse_config(text);
    if (!r.ok()) throw std::invalid_argument("invalid config: " + r.errors.front());
    RunReport rep = run_command(r.config);
    return py::make_tuple(rep.exit_code, rep.to_json());
  });
}
