#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "zpl/correlator.hpp"
#include "zpl/detection.hpp"
#include "zpl/emission.hpp"
#include "zpl/experiment.hpp"
#include "zpl/fit.hpp"
#include "zpl/photophysics.hpp"
#include "zpl/sil.hpp"
#include "zpl/timetag.hpp"

namespace py = pybind11;
using namespace zpl;

namespace {

py::array_t<std::int64_t> stream_times(const PhotonStream& s) {
  py::array_t<std::int64_t> out(static_cast<py::ssize_t>(s.tags.size()));
  auto view = out.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < view.shape(0); ++i)
    view(i) = s.tags[static_cast<std::size_t>(i)].time_ps;
  return out;
}

py::array_t<std::uint64_t> hist_counts(const CoincidenceHistogram& h) {
  py::array_t<std::uint64_t> out(static_cast<py::ssize_t>(h.counts.size()));
  auto view = out.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < view.shape(0); ++i) view(i) = h.counts[static_cast<std::size_t>(i)];
  return out;
}

py::dict fit_to_dict(const FitResult& fit) {
  py::dict params, errors;
  for (const auto& [k, v] : fit.params) params[py::str(k)] = v;
  for (const auto& [k, v] : fit.std_errors) errors[py::str(k)] = v;
  py::dict d;
  d["params"] = params;
  d["std_errors"] = errors;
  d["chi2"] = fit.chi2;
  d["reduced_chi2"] = fit.reduced_chi2;
  d["n_iterations"] = fit.n_iterations;
  d["converged"] = fit.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Single-molecule single-photon source simulator: quantum-jump photon "
            "streams, HBT correlation, curve fitting and Weierstrass SIL optics.";

  py::class_<SpectralLine>(m, "SpectralLine")
      .def(py::init<double, double, double>(), py::arg("center_nm"), py::arg("weight"),
           py::arg("fwhm_ghz"))
      .def_readwrite("center_nm", &SpectralLine::center_nm)
      .def_readwrite("weight", &SpectralLine::weight)
      .def_readwrite("fwhm_ghz", &SpectralLine::fwhm_ghz);

  py::class_<MoleculeModel>(m, "MoleculeModel")
      .def(py::init(&MoleculeModel::dbt_defaults))
      .def_readwrite("tau_f_ns", &MoleculeModel::tau_f_ns)
      .def_readwrite("p_sat_mw", &MoleculeModel::p_sat_mw)
      .def_readwrite("zpl_fraction", &MoleculeModel::zpl_fraction)
      .def_readwrite("isc_yield", &MoleculeModel::isc_yield)
      .def_readwrite("vibronic_relax_ps", &MoleculeModel::vibronic_relax_ps)
      .def_readwrite("lines", &MoleculeModel::lines)
      .def("validate", &MoleculeModel::validate)
      .def_static("dbt_defaults", &MoleculeModel::dbt_defaults);

  py::class_<SaturationCurve>(m, "SaturationCurve")
      .def(py::init<double, double>(), py::arg("s_inf_cps"), py::arg("p_sat_mw"))
      .def_readwrite("s_inf_cps", &SaturationCurve::s_inf_cps)
      .def_readwrite("p_sat_mw", &SaturationCurve::p_sat_mw);

  m.def("saturation_signal", &saturation_signal, py::arg("power_mw"), py::arg("curve"));
  m.def("analytic_g2_cw", &analytic_g2_cw, py::arg("tau_ns"), py::arg("dip"), py::arg("tau_f_ns"),
        py::arg("s"), py::arg("c_inf"));
  m.def("excitation_lineshape", &excitation_lineshape, py::arg("detuning_mhz"),
        py::arg("fwhm0_mhz"), py::arg("s"));
  m.def("lifetime_limited_linewidth_mhz", &lifetime_limited_linewidth_mhz, py::arg("tau_f_ns"));
  m.def("pump_rate_from_power", &pump_rate_from_power, py::arg("power_mw"), py::arg("molecule"));
  m.def("two_photon_per_pulse_prob", &two_photon_per_pulse_prob, py::arg("pulse_duration_ns"),
        py::arg("tau_f_ns"), py::arg("p_exc"));

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init([](std::uint64_t seed, double duration_s, std::uint32_t resolution) {
             return SimConfig{seed, duration_s, resolution};
           }),
           py::arg("seed"), py::arg("duration_s"), py::arg("time_resolution_ps") = 1)
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("duration_s", &SimConfig::duration_s)
      .def_readwrite("time_resolution_ps", &SimConfig::time_resolution_ps)
      .def_readwrite("max_tags", &SimConfig::max_tags);

  py::class_<PulseTrain>(m, "PulseTrain")
      .def(py::init([](double rep, double dur, double p, std::uint64_t n) {
             return PulseTrain{rep, dur, p, n};
           }),
           py::arg("rep_rate_mhz"), py::arg("pulse_duration_ns"), py::arg("p_exc"),
           py::arg("n_pulses"))
      .def_readwrite("rep_rate_mhz", &PulseTrain::rep_rate_mhz)
      .def_readwrite("pulse_duration_ns", &PulseTrain::pulse_duration_ns)
      .def_readwrite("p_exc", &PulseTrain::p_exc)
      .def_readwrite("n_pulses", &PulseTrain::n_pulses)
      .def("period_ns", &PulseTrain::period_ns);

  py::class_<PhotonStream>(m, "PhotonStream")
      .def(py::init<>())
      .def_readonly("duration_ps", &PhotonStream::duration_ps)
      .def("__len__", [](const PhotonStream& s) { return s.tags.size(); })
      .def("rate_cps", &PhotonStream::rate_cps)
      .def("times_ps", &stream_times, "time tags as an int64 numpy array")
      .def("origins", [](const PhotonStream& s) {
        py::array_t<std::uint8_t> out(static_cast<py::ssize_t>(s.tags.size()));
        auto view = out.mutable_unchecked<1>();
        for (py::ssize_t i = 0; i < view.shape(0); ++i)
          view(i) = static_cast<std::uint8_t>(s.tags[static_cast<std::size_t>(i)].origin);
        return out;
      });

  m.def("simulate_cw_stream", &simulate_cw_stream, py::arg("molecule"), py::arg("power_mw"),
        py::arg("cfg"));
  m.def("simulate_cw_detected",
        py::overload_cast<const MoleculeModel&, double, double, const SimConfig&>(
            &simulate_cw_detected),
        py::arg("molecule"), py::arg("power_mw"), py::arg("keep_prob"), py::arg("cfg"));
  m.def("simulate_pulsed_stream", &simulate_pulsed_stream, py::arg("molecule"), py::arg("train"),
        py::arg("cfg"), py::arg("allow_reexcitation") = false);

  py::class_<PulsedResult>(m, "PulsedResult")
      .def_readonly("stream", &PulsedResult::stream)
      .def_readonly("n_pulses", &PulsedResult::n_pulses)
      .def_readonly("multiplicity", &PulsedResult::multiplicity)
      .def("fraction_multi", &PulsedResult::fraction_multi);
  m.def("simulate_pulsed", &simulate_pulsed, py::arg("molecule"), py::arg("train"), py::arg("cfg"),
        py::arg("allow_reexcitation") = false);

  py::class_<SpectralWindow>(m, "SpectralWindow")
      .def_static("band_pass", &SpectralWindow::band_pass, py::arg("center_nm"),
                  py::arg("width_nm"))
      .def_static("long_pass", &SpectralWindow::long_pass, py::arg("cutoff_nm"))
      .def_static("all_pass", &SpectralWindow::all_pass)
      .def("passes", &SpectralWindow::passes, py::arg("wavelength_nm"));

  py::class_<DetectorModel>(m, "DetectorModel")
      .def(py::init([](double eff, double dead, double jitter, double dark) {
             return DetectorModel{eff, dead, jitter, dark};
           }),
           py::arg("efficiency") = 1.0, py::arg("dead_time_ns") = 0.0,
           py::arg("jitter_sigma_ps") = 0.0, py::arg("dark_rate_cps") = 0.0)
      .def_readwrite("efficiency", &DetectorModel::efficiency)
      .def_readwrite("dead_time_ns", &DetectorModel::dead_time_ns)
      .def_readwrite("jitter_sigma_ps", &DetectorModel::jitter_sigma_ps)
      .def_readwrite("dark_rate_cps", &DetectorModel::dark_rate_cps);

  m.def("apply_spectral_filter", &apply_spectral_filter, py::arg("stream"), py::arg("window"),
        py::arg("molecule"));
  m.def("add_background", &add_background, py::arg("stream"), py::arg("rate_cps"), py::arg("cfg"));
  m.def("apply_detector", &apply_detector, py::arg("stream"), py::arg("detector"), py::arg("cfg"));

  py::class_<CoincidenceHistogram>(m, "CoincidenceHistogram")
      .def_readonly("bin_width_ps", &CoincidenceHistogram::bin_width_ps)
      .def_readonly("tau_min_ps", &CoincidenceHistogram::tau_min_ps)
      .def_readonly("tau_max_ps", &CoincidenceHistogram::tau_max_ps)
      .def_readonly("n_starts", &CoincidenceHistogram::n_starts)
      .def("counts", &hist_counts)
      .def("bin_center_ps", &CoincidenceHistogram::bin_center_ps)
      .def("total_counts", &CoincidenceHistogram::total_counts);

  m.def("beamsplit", &beamsplit, py::arg("stream"), py::arg("reflectance"), py::arg("seed"));
  m.def("start_stop_histogram", &start_stop_histogram, py::arg("starts"), py::arg("stops"),
        py::arg("bin_width_ps"), py::arg("tau_max_ps"));
  m.def("symmetric_start_stop_histogram", &symmetric_start_stop_histogram, py::arg("a"),
        py::arg("b"), py::arg("bin_width_ps"), py::arg("tau_max_ps"));
  m.def("full_correlation_histogram", &full_correlation_histogram, py::arg("a"), py::arg("b"),
        py::arg("bin_width_ps"), py::arg("tau_min_ps"), py::arg("tau_max_ps"));

  py::class_<PeakEntry>(m, "PeakEntry")
      .def_readonly("index", &PeakEntry::index)
      .def_readonly("center_ps", &PeakEntry::center_ps)
      .def_readonly("area", &PeakEntry::area);
  py::class_<PeakTable>(m, "PeakTable")
      .def_readonly("peaks", &PeakTable::peaks)
      .def_readonly("central_to_lateral_ratio", &PeakTable::central_to_lateral_ratio)
      .def_readonly("lateral_peaks_used", &PeakTable::lateral_peaks_used);
  m.def("peak_areas", &peak_areas, py::arg("hist"), py::arg("rep_period_ps"), py::arg("window_ps"),
        py::arg("lateral_peaks") = 4);

  m.def("fit_saturation", [](const std::vector<std::array<double, 3>>& pts) {
    std::vector<SaturationPoint> points;
    for (const auto& p : pts) points.push_back({p[0], p[1], p[2]});
    return fit_to_dict(fit_saturation(points));
  });
  m.def("fit_antibunching", [](const CoincidenceHistogram& hist, double s) {
    return fit_to_dict(fit_antibunching(hist, s));
  });
  m.def("fit_lorentzian", [](const std::vector<std::array<double, 3>>& pts) {
    std::vector<ScanPoint> points;
    for (const auto& p : pts) points.push_back({p[0], p[1], p[2]});
    return fit_to_dict(fit_lorentzian(points));
  });
  m.def("fit_lateral_peak_decay",
        [](const PeakTable& table, const CoincidenceHistogram& hist, std::int64_t period_ps) {
          return fit_to_dict(fit_lateral_peak_decay(table, hist, period_ps));
        });
  m.def("fit_gaussian_spot", [](const ScanImage& img, double pixel_size_nm) {
    return fit_to_dict(fit_gaussian_spot(img, pixel_size_nm));
  });

  py::class_<SilSystem>(m, "SilSystem")
      .def(py::init([](double n, double d, double na, double f, double wl) {
             return SilSystem{n, d, na, f, wl};
           }),
           py::arg("n_sil") = 1.8, py::arg("diameter_mm") = 1.0, py::arg("lens_na") = 0.55,
           py::arg("lens_focal_mm") = 4.5, py::arg("wavelength_nm") = 785.0)
      .def_readwrite("n_sil", &SilSystem::n_sil)
      .def_readwrite("diameter_mm", &SilSystem::diameter_mm)
      .def_readwrite("lens_na", &SilSystem::lens_na)
      .def_readwrite("lens_focal_mm", &SilSystem::lens_focal_mm)
      .def_readwrite("wavelength_nm", &SilSystem::wavelength_nm)
      .def("thickness_mm", &SilSystem::thickness_mm);

  m.def("weierstrass_output_na", &weierstrass_output_na, py::arg("n_sil"));
  m.def("effective_na", &effective_na, py::arg("sys"));
  m.def("diffraction_resolution_nm", &diffraction_resolution_nm, py::arg("wavelength_nm"),
        py::arg("n_sil"));
  m.def("trace_meridional_ray", &trace_meridional_ray, py::arg("sys"),
        py::arg("source_angle_rad"));

  py::class_<Emitter>(m, "Emitter")
      .def(py::init([](double x, double y, double b) { return Emitter{x, y, b}; }),
           py::arg("x_um"), py::arg("y_um"), py::arg("brightness"))
      .def_readwrite("x_um", &Emitter::x_um)
      .def_readwrite("y_um", &Emitter::y_um)
      .def_readwrite("brightness", &Emitter::brightness);

  py::class_<ScanGeometry>(m, "ScanGeometry")
      .def(py::init([](double x, double y, double pix) { return ScanGeometry{x, y, pix}; }),
           py::arg("extent_x_um") = 5.0, py::arg("extent_y_um") = 5.0,
           py::arg("pixel_size_nm") = 50.0);

  py::class_<ScanImage>(m, "ScanImage")
      .def_readonly("nx", &ScanImage::nx)
      .def_readonly("ny", &ScanImage::ny)
      .def_readonly("pixel_size_nm", &ScanImage::pixel_size_nm)
      .def("total_counts", &ScanImage::total_counts)
      .def("pixels", [](const ScanImage& img) {
        py::array_t<std::uint64_t> out({static_cast<py::ssize_t>(img.ny),
                                        static_cast<py::ssize_t>(img.nx)});
        auto view = out.mutable_unchecked<2>();
        for (py::ssize_t iy = 0; iy < view.shape(0); ++iy)
          for (py::ssize_t ix = 0; ix < view.shape(1); ++ix)
            view(iy, ix) = img.at(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
        return out;
      });

  m.def("simulate_confocal_scan", &simulate_confocal_scan, py::arg("emitters"), py::arg("sys"),
        py::arg("geometry"), py::arg("background_per_pixel"), py::arg("dwell_ms"), py::arg("cfg"));

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(config_json));
        const ExperimentResult res = run_experiment(cfg);
        py::dict d;
        d["out_dir"] = res.out_dir;
        d["artifacts"] = res.artifacts;
        d["report"] = res.report.dump();
        d["manifest_path"] = res.manifest_path;
        return d;
      },
      py::arg("config_json"), "run an experiment from a JSON config string");
  m.def("preset_names", &preset_names);
  m.def("preset_config", [](const std::string& name) { return preset_config(name).dump(2); });

  m.def("write_tag_file_from_streams",
        [](const std::string& path, const PhotonStream& a, const PhotonStream& b) {
          write_tag_file(path, tag_file_from_streams({&a, &b}, 1));
        });

#ifdef ZPLSIM_VERSION
  m.attr("__version__") = ZPLSIM_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
