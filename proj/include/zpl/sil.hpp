#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zpl/emission.hpp"

namespace zpl {

/// Weierstrass solid-immersion-lens objective: truncated sphere of index
/// n_sil with the flat face through the aplanatic point (r/n_sil below the
/// sphere center), collected by an aspheric lens of NA lens_na.
struct SilSystem {
  double n_sil = 1.8;
  double diameter_mm = 1.0;
  double lens_na = 0.55;
  double lens_focal_mm = 4.5;
  double wavelength_nm = 785.0;

  void validate() const;
  double radius_mm() const { return 0.5 * diameter_mm; }
  /// Truncation thickness r(1 + 1/n): flat face through the aplanatic point.
  double thickness_mm() const { return radius_mm() * (1.0 + 1.0 / n_sil); }
};

/// NA of the output beam for a source at the Weierstrass point: 1/n_sil.
double weierstrass_output_na(double n_sil);

/// Object-side NA collected through the lens: min(n_sil^2 * lens_na, n_sil).
double effective_na(const SilSystem& sys);

/// Diffraction-limited spot scale 0.61 * lambda / n_sil, in nm.
double diffraction_resolution_nm(double wavelength_nm, double n_sil);

struct MeridionalTrace {
  double exit_angle_rad = 0.0;  // vs the optical axis, signed
  double hit_x = 0.0, hit_z = 0.0;      // intersection on the sphere (units of r)
  double dir_x = 0.0, dir_z = 0.0;      // refracted direction (unit)
  double incidence_rad = 0.0;
};

/// Exact Snell refraction of a meridional ray from the aplanatic point at
/// the spherical surface. Geometry is aberration-free: every exit ray
/// extended backward crosses the axis at n_sil * r (the virtual image), and
/// sin(exit) = sin(source)/n_sil.
MeridionalTrace trace_meridional_ray_detail(const SilSystem& sys, double source_angle_rad);
double trace_meridional_ray(const SilSystem& sys, double source_angle_rad);

/// Ordered transmission stages multiplying to the detection efficiency.
struct EfficiencyBudget {
  std::vector<std::pair<std::string, double>> stages;

  void validate() const;
  double overall() const;

  /// Half-space collection, optics/filters, APD quantum efficiency.
  static EfficiencyBudget default_budget();
};

double detection_efficiency_budget(const EfficiencyBudget& budget);

struct Emitter {
  double x_um = 0.0;
  double y_um = 0.0;
  double brightness = 0.0;  // expected detected counts per ms of dwell
};

struct ScanGeometry {
  double extent_x_um = 5.0;
  double extent_y_um = 5.0;
  double pixel_size_nm = 50.0;

  void validate() const;
  std::size_t nx() const;
  std::size_t ny() const;
};

/// Confocal raster image: Poisson counts per pixel.
struct ScanImage {
  std::vector<std::uint64_t> pixels;  // row-major, ny rows of nx
  std::size_t nx = 0, ny = 0;
  double pixel_size_nm = 0.0;
  double extent_x_um = 0.0, extent_y_um = 0.0;

  std::uint64_t at(std::size_t ix, std::size_t iy) const { return pixels[iy * nx + ix]; }
  std::uint64_t total_counts() const;
};

/// Pixel mean = background + sum over emitters of brightness * dwell *
/// normalized Gaussian PSF of FWHM diffraction_resolution(sys). Rows use
/// seeds derived from (cfg.seed, row), so the image is independent of any
/// row scheduling. Extent is bounded by the 35 x 35 um^2 objective field.
ScanImage simulate_confocal_scan(const std::vector<Emitter>& emitters, const SilSystem& sys,
                                 const ScanGeometry& geom, double background_per_pixel,
                                 double dwell_ms, const SimConfig& cfg);

/// Plain text matrix (rows of counts) for external plotting.
void write_scan_txt(const std::string& path, const ScanImage& image);

/// 16-bit binary portable graymap (P5), counts scaled to full range.
void write_scan_pgm(const std::string& path, const ScanImage& image);

}  // namespace zpl
