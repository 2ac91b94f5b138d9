#include "zpl/sil.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "zpl/random.hpp"
#include "zpl/units.hpp"

namespace zpl {

void SilSystem::validate() const {
  if (n_sil <= 1.0) throw std::invalid_argument("SilSystem.n_sil: must be > 1");
  if (diameter_mm <= 0.0) throw std::invalid_argument("SilSystem.diameter: must be > 0");
  if (lens_na <= 0.0 || lens_na >= 1.0) throw std::invalid_argument("SilSystem.lens_na: must be in (0,1)");
  if (lens_focal_mm <= 0.0) throw std::invalid_argument("SilSystem.lens_focal: must be > 0");
  if (wavelength_nm <= 0.0) throw std::invalid_argument("SilSystem.wavelength: must be > 0");
}

double weierstrass_output_na(double n_sil) {
  if (n_sil <= 1.0) throw std::invalid_argument("weierstrass_output_na: n_sil must be > 1");
  return 1.0 / n_sil;
}

double effective_na(const SilSystem& sys) {
  sys.validate();
  // Aplanatic angular compression maps lens_na back to n^2 * lens_na on the
  // object side, clamped at the half-space bound n.
  return std::min(sys.n_sil * sys.n_sil * sys.lens_na, sys.n_sil);
}

double diffraction_resolution_nm(double wavelength_nm, double n_sil) {
  if (wavelength_nm <= 0.0)
    throw std::invalid_argument("diffraction_resolution: wavelength must be > 0");
  if (n_sil <= 1.0) throw std::invalid_argument("diffraction_resolution: n_sil must be > 1");
  return 0.61 * wavelength_nm / n_sil;
}

MeridionalTrace trace_meridional_ray_detail(const SilSystem& sys, double source_angle_rad) {
  sys.validate();
  if (std::abs(source_angle_rad) > kPi / 2.0 + 1e-12)
    throw std::invalid_argument("trace_meridional_ray: |source_angle| must be <= pi/2");

  const double n = sys.n_sil;
  // Work in units of the sphere radius; center at the origin, axis along z,
  // source at the aplanatic point (0, -1/n).
  const double px = 0.0, pz = -1.0 / n;
  const double dx = std::sin(source_angle_rad), dz = std::cos(source_angle_rad);

  const double pd = px * dx + pz * dz;
  const double disc = pd * pd - (px * px + pz * pz - 1.0);
  const double t = -pd + std::sqrt(disc);
  const double qx = px + t * dx, qz = pz + t * dz;  // on the unit sphere

  // Incidence sine from the sine rule in the center-source-hit triangle with
  // the exact side lengths 1/n and 1. The dot-product route loses half the
  // significant digits at grazing incidence.
  const double sin_i = dx / n;  // signed
  if (std::abs(n * sin_i) > 1.0 + 1e-12)
    throw std::logic_error("trace_meridional_ray: total internal reflection from the aplanatic point");
  const double sin_t = std::min(1.0, std::max(-1.0, n * sin_i));
  const double cos_t = std::sqrt((1.0 - sin_t) * (1.0 + sin_t));

  // Refracted direction: cos_t along the outward normal, sin_t along the
  // tangent the ray sweeps, which is (q_z, -q_x) against the signed sine.
  double tx = cos_t * qx - sin_t * qz;
  double tz = cos_t * qz + sin_t * qx;
  const double norm = std::sqrt(tx * tx + tz * tz);
  tx /= norm;
  tz /= norm;

  MeridionalTrace tr;
  tr.exit_angle_rad = std::atan2(tx, tz);
  tr.hit_x = qx;
  tr.hit_z = qz;
  tr.dir_x = tx;
  tr.dir_z = tz;
  tr.incidence_rad = std::asin(std::abs(sin_i));
  return tr;
}

double trace_meridional_ray(const SilSystem& sys, double source_angle_rad) {
  return trace_meridional_ray_detail(sys, source_angle_rad).exit_angle_rad;
}

void EfficiencyBudget::validate() const {
  if (stages.empty()) throw std::invalid_argument("EfficiencyBudget: no stages");
  for (const auto& [name, transmission] : stages)
    if (transmission < 0.0 || transmission > 1.0)
      throw std::invalid_argument("EfficiencyBudget." + name + ": transmission must be in [0,1]");
}

double EfficiencyBudget::overall() const {
  double p = 1.0;
  for (const auto& [name, transmission] : stages) p *= transmission;
  return p;
}

EfficiencyBudget EfficiencyBudget::default_budget() {
  return {{{"half_space_collection", 0.5}, {"optics_and_filters", 0.4}, {"apd_quantum_efficiency", 0.6}}};
}

double detection_efficiency_budget(const EfficiencyBudget& budget) {
  budget.validate();
  return budget.overall();
}

void ScanGeometry::validate() const {
  if (pixel_size_nm <= 0.0) throw std::invalid_argument("ScanGeometry.pixel_size: must be > 0");
  if (extent_x_um <= 0.0 || extent_y_um <= 0.0)
    throw std::invalid_argument("ScanGeometry.extent: must be > 0");
  if (extent_x_um > 35.0 || extent_y_um > 35.0)
    throw std::invalid_argument("ScanGeometry.extent: exceeds the 35 x 35 um^2 objective field");
  if (nx() < 2 || ny() < 2) throw std::invalid_argument("ScanGeometry: fewer than 2 pixels per axis");
}

std::size_t ScanGeometry::nx() const {
  return static_cast<std::size_t>(std::llround(extent_x_um * 1e3 / pixel_size_nm));
}

std::size_t ScanGeometry::ny() const {
  return static_cast<std::size_t>(std::llround(extent_y_um * 1e3 / pixel_size_nm));
}

std::uint64_t ScanImage::total_counts() const {
  std::uint64_t total = 0;
  for (std::uint64_t v : pixels) total += v;
  return total;
}

ScanImage simulate_confocal_scan(const std::vector<Emitter>& emitters, const SilSystem& sys,
                                 const ScanGeometry& geom, double background_per_pixel,
                                 double dwell_ms, const SimConfig& cfg) {
  sys.validate();
  geom.validate();
  if (background_per_pixel < 0.0)
    throw std::invalid_argument("simulate_confocal_scan: background must be >= 0");
  if (dwell_ms <= 0.0) throw std::invalid_argument("simulate_confocal_scan: dwell must be > 0");
  for (const Emitter& e : emitters)
    if (e.brightness < 0.0)
      throw std::invalid_argument("simulate_confocal_scan: emitter brightness must be >= 0");

  ScanImage img;
  img.nx = geom.nx();
  img.ny = geom.ny();
  img.pixel_size_nm = geom.pixel_size_nm;
  img.extent_x_um = geom.extent_x_um;
  img.extent_y_um = geom.extent_y_um;
  img.pixels.assign(img.nx * img.ny, 0);

  const double fwhm_nm = diffraction_resolution_nm(sys.wavelength_nm, sys.n_sil);
  const double sigma_nm = fwhm_nm / 2.3548200450309493;
  const double psf_norm = geom.pixel_size_nm * geom.pixel_size_nm / (2.0 * kPi * sigma_nm * sigma_nm);

  for (std::size_t iy = 0; iy < img.ny; ++iy) {
    Rng rng(Rng::derive(cfg.seed, iy));
    const double y_nm = (static_cast<double>(iy) + 0.5) * geom.pixel_size_nm;
    for (std::size_t ix = 0; ix < img.nx; ++ix) {
      const double x_nm = (static_cast<double>(ix) + 0.5) * geom.pixel_size_nm;
      double mean = background_per_pixel;
      for (const Emitter& e : emitters) {
        const double dx = x_nm - e.x_um * 1e3;
        const double dy = y_nm - e.y_um * 1e3;
        mean += e.brightness * dwell_ms * psf_norm *
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_nm * sigma_nm));
      }
      img.pixels[iy * img.nx + ix] = rng.poisson(mean);
    }
  }
  return img;
}

void write_scan_txt(const std::string& path, const ScanImage& image) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_scan_txt: cannot open " + path);
  for (std::size_t iy = 0; iy < image.ny; ++iy) {
    for (std::size_t ix = 0; ix < image.nx; ++ix)
      std::fprintf(f, "%llu%c", static_cast<unsigned long long>(image.at(ix, iy)),
                   ix + 1 == image.nx ? '\n' : ' ');
  }
  std::fclose(f);
}

void write_scan_pgm(const std::string& path, const ScanImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_scan_pgm: cannot open " + path);
  std::uint64_t max_count = 1;
  for (std::uint64_t v : image.pixels) max_count = std::max(max_count, v);
  os << "P5\n" << image.nx << " " << image.ny << "\n65535\n";
  for (std::uint64_t v : image.pixels) {
    const auto scaled = static_cast<std::uint16_t>(v * 65535 / max_count);
    const unsigned char bytes[2] = {static_cast<unsigned char>(scaled >> 8),
                                    static_cast<unsigned char>(scaled & 0xff)};
    os.write(reinterpret_cast<const char*>(bytes), 2);
  }
}

}  // namespace zpl
