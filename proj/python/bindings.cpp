#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "afcmem/afc.hpp"
#include "afcmem/cavity.hpp"
#include "afcmem/core.hpp"
#include "afcmem/echo.hpp"
#include "afcmem/fit.hpp"
#include "afcmem/routing.hpp"
#include "afcmem/stats.hpp"

namespace py = pybind11;
using namespace afcmem;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

py::dict waveform_dict(const Waveform& w) {
  std::vector<double> t(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) t[i] = w.time(i);
  py::dict d;
  d["t"] = to_array(t);
  d["field"] = to_array(w.samples);
  return d;
}

// Uniform grid from an evenly spaced frequency array.
FrequencyGrid grid_of(const std::vector<double>& f) {
  if (f.size() < 2) fail(ErrorCode::GridMismatch, "need at least two frequencies");
  FrequencyGrid g;
  g.f0 = f.front();
  g.df = (f.back() - f.front()) / static_cast<double>(f.size() - 1);
  g.n = f.size();
  return validate(g);
}

}  // namespace

PYBIND11_MODULE(_afcmem, m) {
  m.doc() = "Cavity-enhanced atomic frequency comb memory simulator";
  m.attr("__version__") = AFCMEM_VERSION;

  // Raised for every library failure; `code` names the violated invariant.
  static PyObject* error_type = py::exception<Error>(m, "AfcmemError").release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  py::class_<CavityParams>(m, "CavityParams")
      .def(py::init([](double kappa_ext, double kappa_loss, double kappa_ions, double f_res) {
             return validate(CavityParams{kappa_ext, kappa_loss, kappa_ions, f_res});
           }),
           py::arg("kappa_ext"), py::arg("kappa_loss"), py::arg("kappa_ions") = 0.0, py::arg("f_res") = 195.69e12)
      .def_readwrite("kappa_ext", &CavityParams::kappa_ext)
      .def_readwrite("kappa_loss", &CavityParams::kappa_loss)
      .def_readwrite("kappa_ions", &CavityParams::kappa_ions)
      .def_readwrite("f_res", &CavityParams::f_res)
      .def_property_readonly("kappa_total", &CavityParams::kappa_total);

  py::class_<CombSpec>(m, "CombSpec")
      .def(py::init([](int n_teeth, double delta, double finesse, const std::string& shape, double eta_spectral,
                       double center_offset) {
             if (shape != "gaussian" && shape != "square")
               fail(ErrorCode::DomainError, "tooth_shape must be 'gaussian' or 'square'");
             return validate(CombSpec{n_teeth, delta, finesse,
                                      shape == "square" ? ToothShape::Square : ToothShape::Gaussian, eta_spectral,
                                      center_offset});
           }),
           py::arg("n_teeth") = 21, py::arg("delta") = 10e6, py::arg("finesse") = 4.86,
           py::arg("tooth_shape") = "gaussian", py::arg("eta_spectral") = 0.95, py::arg("center_offset") = 0.0)
      .def_readwrite("n_teeth", &CombSpec::n_teeth)
      .def_readwrite("delta", &CombSpec::delta)
      .def_readwrite("finesse", &CombSpec::finesse)
      .def_readwrite("eta_spectral", &CombSpec::eta_spectral)
      .def_readwrite("center_offset", &CombSpec::center_offset);

  m.def("field_transmission", &cavity::field_transmission, py::arg("params"), py::arg("kappa_ions_eff"),
        py::arg("detuning"));

  m.def(
      "power_transmission",
      [](const CavityParams& p, py::array_t<double, py::array::c_style | py::array::forcecast> detuning,
         double kappa_ions_eff) {
        return to_array(cavity::power_transmission(p, grid_of(to_vector(detuning)), kappa_ions_eff).values);
      },
      py::arg("params"), py::arg("detuning"), py::arg("kappa_ions_eff"),
      "|t|^2 on an evenly spaced detuning array (Hz).");

  m.def(
      "fano_extract",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> detuning,
         py::array_t<double, py::array::c_style | py::array::forcecast> power, double carrier_hz) {
        PowerSpectrum s;
        s.carrier_hz = carrier_hz;
        s.grid = grid_of(to_vector(detuning));
        s.values = to_vector(power);
        const auto r = cavity::fano_extract(s);
        py::dict d;
        d["q_loaded"] = r.q_loaded;
        d["fwhm"] = r.fwhm;
        d["f_center"] = r.f_center;
        d["extinction_ratio"] = r.extinction_ratio;
        d["extinction_db"] = r.extinction_ratio_db();
        d["fano_q"] = r.fano_q;
        d["depth"] = r.depth;
        return d;
      },
      py::arg("detuning"), py::arg("power"), py::arg("carrier_hz") = 195.69e12);

  m.def(
      "afc_efficiency",
      [](const CavityParams& p, const CombSpec& c) {
        const auto b = echo::afc_efficiency_analytic(p, c);
        py::dict d;
        d["eta"] = b.eta_total;
        d["eta_d"] = b.eta_d;
        d["C"] = b.c_bare;
        d["C_eff"] = b.c_eff;
        d["K"] = b.k_match;
        d["bracket"] = b.bracket;
        return d;
      },
      py::arg("params"), py::arg("comb"), "Closed-form storage efficiency and its factors.");

  m.def(
      "sweep_finesse",
      [](const CavityParams& p, const CombSpec& c, py::array_t<double, py::array::c_style | py::array::forcecast> f) {
        const auto grid = to_vector(f);
        const auto s = echo::sweep_finesse(p, c, grid);
        std::vector<double> eta, k, ce;
        for (const auto& pt : s.points) {
          eta.push_back(pt.eta);
          k.push_back(pt.k_match);
          ce.push_back(pt.c_eff);
        }
        py::dict d;
        d["F"] = to_array(grid);
        d["eta"] = to_array(eta);
        d["K"] = to_array(k);
        d["C_eff"] = to_array(ce);
        d["argmax"] = s.argmax_finesse;
        d["peak"] = s.peak_eta;
        return d;
      },
      py::arg("params"), py::arg("comb"), py::arg("finesse"));

  m.def("residual_weight", &echo::residual_weight, py::arg("comb"));

  m.def(
      "store",
      [](const CavityParams& p, const CombSpec& c, double fwhm, double center, double dt, std::size_t n,
         double window) {
        EnsembleParams ens;
        const double half = (c.n_teeth / 2.0 + 8.0) * c.delta + std::abs(c.center_offset);
        const auto s0 = afc::inhomogeneous_profile(ens, p.kappa_ions, FrequencyGrid::symmetric(0.0, half, c.delta / 64));
        afc::SideholeSpec none;
        none.relative_depth = 0.0;
        const echo::EnsembleResponse resp(afc::build_comb(s0, c, none, 0.0), ens.gamma_h);
        const auto in = gaussian_pulse(0.0, dt, n, center, fwhm, 1.0);
        const auto out = echo::store_fft(p, resp, in);
        py::dict d = waveform_dict(out);
        d["input"] = to_array(in.samples);
        d["eta"] = echo::efficiency_from_trace(out, in, center + 1.0 / c.delta, window);
        return d;
      },
      py::arg("params"), py::arg("comb"), py::arg("fwhm") = 15e-9, py::arg("center") = 40e-9,
      py::arg("dt") = 0.1e-9, py::arg("n") = 32000, py::arg("window") = 30e-9,
      "Stores a Gaussian pulse with the spectral solver; returns the output trace and the echo efficiency.");

  m.def(
      "optimize_field",
      [](double delta, double b_lo, double b_hi, double slope_nb, double slope_li) {
        afc::SideholeSpec s;
        s.slope_nb = slope_nb;
        s.slope_li = slope_li;
        return afc::optimize_field(delta, afc::validate(s), b_lo, b_hi);
      },
      py::arg("delta"), py::arg("b_lo"), py::arg("b_hi"), py::arg("slope_nb") = afc::SideholeSpec{}.slope_nb,
      py::arg("slope_li") = afc::SideholeSpec{}.slope_li);

  m.def("lorentzian_crosstalk", &routing::lorentzian_crosstalk, py::arg("linewidth"), py::arg("separation"));

  m.def(
      "witness",
      [](std::pair<double, double> g2, std::pair<double, double> v1, std::pair<double, double> v2) {
        const auto w = stats::witness({g2.first, g2.second}, {v1.first, v1.second}, {v2.first, v2.second});
        return std::make_pair(w.w, w.sigma_w);
      },
      py::arg("g2"), py::arg("v1"), py::arg("v2"), "Witness value and its 1-sigma uncertainty from (value, sigma) pairs.");

  m.def(
      "fit",
      [](const std::string& model, py::array_t<double, py::array::c_style | py::array::forcecast> x,
         py::array_t<double, py::array::c_style | py::array::forcecast> y, std::vector<double> guess,
         std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>> sigma) {
        const auto mdl = fit::model_by_name(model);
        if (!mdl) fail(ErrorCode::InvalidProblem, "unknown model '" + model + "'");
        const auto r = fit::fit({*mdl, to_vector(x), to_vector(y), sigma ? to_vector(*sigma) : std::vector<double>{},
                                 std::move(guess), std::nullopt});
        py::dict params, errors;
        for (std::size_t i = 0; i < r.params.size(); ++i) {
          params[py::str(mdl->param_names[i])] = r.params[i];
          errors[py::str(mdl->param_names[i])] = r.stderr_of(i);
        }
        py::dict d;
        d["params"] = params;
        d["stderr"] = errors;
        d["chi2"] = r.chi2;
        d["reduced_chi2"] = r.reduced_chi2;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("guess"), py::arg("sigma") = py::none());
}
