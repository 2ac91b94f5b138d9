#include "zpl/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zpl/sil.hpp"
#include "zpl/units.hpp"

namespace zpl {

namespace models {

double saturation(double power_mw, double s_inf, double p_sat, double* d2) {
  const double x = power_mw / p_sat;
  const double f = x / (1.0 + x);
  if (d2) {
    d2[0] = f;
    d2[1] = -s_inf * x / (p_sat * (1.0 + x) * (1.0 + x));
  }
  return s_inf * f;
}

double antibunching(double tau_ns, double s, double c_inf, double dip, double tau_f_ns,
                    double* d3) {
  const double a = std::abs(tau_ns) * (1.0 + s);
  const double e = std::exp(-a / tau_f_ns);
  if (d3) {
    d3[0] = 1.0 - dip * e;
    d3[1] = -c_inf * e;
    d3[2] = -c_inf * dip * e * a / (tau_f_ns * tau_f_ns);
  }
  return c_inf * (1.0 - dip * e);
}

double lorentzian(double x, double center, double fwhm, double amplitude, double offset,
                  double* d4) {
  const double u = 2.0 * (x - center) / fwhm;
  const double den = 1.0 + u * u;
  if (d4) {
    d4[0] = 4.0 * amplitude * u / (fwhm * den * den);
    d4[1] = 2.0 * amplitude * u * u / (fwhm * den * den);
    d4[2] = 1.0 / den;
    d4[3] = 1.0;
  }
  return offset + amplitude / den;
}

double shifted_exp_peak(double delta_ns, double amplitude, double tau_f_ns, double floor,
                        double* d3) {
  const double e = std::exp(-std::abs(delta_ns) / tau_f_ns);
  if (d3) {
    d3[0] = e;
    d3[1] = amplitude * e * std::abs(delta_ns) / (tau_f_ns * tau_f_ns);
    d3[2] = 1.0;
  }
  return amplitude * e + floor;
}

double gaussian_spot(double x_nm, double y_nm, double x0, double y0, double fwhm, double amplitude,
                     double offset, double* d5) {
  constexpr double k = 2.3548200450309493;  // fwhm = k * sigma
  const double sigma = fwhm / k;
  const double dx = x_nm - x0, dy = y_nm - y0;
  const double rho2 = dx * dx + dy * dy;
  const double e = std::exp(-rho2 / (2.0 * sigma * sigma));
  if (d5) {
    d5[0] = amplitude * e * dx / (sigma * sigma);
    d5[1] = amplitude * e * dy / (sigma * sigma);
    d5[2] = amplitude * e * rho2 / (sigma * sigma * sigma * k);
    d5[3] = e;
    d5[4] = 1.0;
  }
  return offset + amplitude * e;
}

}  // namespace models

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTiny = 1e-12;

double poisson_sigma(double count) { return std::sqrt(std::max(count, 1.0)); }

}  // namespace

FitResult fit_saturation(std::vector<SaturationPoint> points, const LmOptions& opts) {
  if (points.size() < 3) throw FitDataError("fit_saturation: need at least 3 points");
  for (const auto& pt : points)
    if (pt.sigma <= 0.0) throw FitDataError("fit_saturation: point sigma must be > 0");
  std::sort(points.begin(), points.end(), [](const SaturationPoint& a, const SaturationPoint& b) {
    return a.power_mw < b.power_mw || (a.power_mw == b.power_mw && a.rate_cps < b.rate_cps);
  });

  double max_rate = 0.0;
  for (const auto& pt : points) max_rate = std::max(max_rate, pt.rate_cps);
  if (max_rate <= 0.0) throw FitDataError("fit_saturation: all rates are zero");
  const double s_inf0 = 1.2 * max_rate;
  // Initial saturation power: the power whose rate is closest to half max.
  double p_sat0 = points.front().power_mw;
  double best = kInf;
  for (const auto& pt : points) {
    const double miss = std::abs(pt.rate_cps - 0.5 * s_inf0);
    if (miss < best && pt.power_mw > 0.0) {
      best = miss;
      p_sat0 = pt.power_mw;
    }
  }
  if (points.front().power_mw >= p_sat0 || points.back().power_mw <= p_sat0)
    throw FitDataError("fit_saturation: points must span both sides of the saturation power");

  LmProblem prob;
  prob.names = {"s_inf", "p_sat"};
  prob.p0 = {s_inf0, p_sat0};
  prob.lower = {kTiny, kTiny};
  prob.upper = {kInf, kInf};
  prob.n_residuals = points.size();
  prob.eval = [&points](const double* p, double* r, double* J) {
    double d[2];
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double m = models::saturation(points[i].power_mw, p[0], p[1], J ? d : nullptr);
      r[i] = (m - points[i].rate_cps) / points[i].sigma;
      if (J) {
        J[i * 2 + 0] = d[0] / points[i].sigma;
        J[i * 2 + 1] = d[1] / points[i].sigma;
      }
    }
  };
  return lm_fit(prob, opts);
}

FitResult fit_antibunching(const CoincidenceHistogram& hist, double s, const LmOptions& opts) {
  if (s < 0.0) throw std::invalid_argument("fit_antibunching: s must be >= 0");
  if (hist.n_bins() < 8) throw FitDataError("fit_antibunching: too few bins");

  std::vector<double> tau_ns(hist.n_bins()), count(hist.n_bins());
  for (std::size_t i = 0; i < hist.n_bins(); ++i) {
    tau_ns[i] = hist.bin_center_ps(i) / kPsPerNs;
    count[i] = static_cast<double>(hist.counts[i]);
  }
  const double span_pos = static_cast<double>(hist.tau_max_ps) / kPsPerNs;
  const double span_neg = -static_cast<double>(hist.tau_min_ps) / kPsPerNs;
  const double span = std::max(span_pos, span_neg);

  // Deterministic data-driven start: tail mean, central depth, 1/e crossing.
  double tail_sum = 0.0, center_min = kInf;
  std::size_t tail_n = 0;
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (std::abs(tau_ns[i]) >= 0.7 * span) {
      tail_sum += count[i];
      ++tail_n;
    }
    if (std::abs(tau_ns[i]) < center_min) center_min = std::abs(tau_ns[i]);
  }
  if (tail_n == 0) throw FitDataError("fit_antibunching: no tail bins");
  const double c0 = std::max(tail_sum / static_cast<double>(tail_n), 1.0);

  double center_sum = 0.0;
  std::size_t center_n = 0;
  const double bin_ns = static_cast<double>(hist.bin_width_ps) / kPsPerNs;
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (std::abs(tau_ns[i]) <= center_min + 1.5 * bin_ns) {
      center_sum += count[i];
      ++center_n;
    }
  }
  const double dip0 =
      std::clamp(1.0 - center_sum / static_cast<double>(center_n) / c0, 0.0, 1.0);

  double tau_f0 = std::max(bin_ns, span / 10.0);
  if (dip0 > 0.05) {
    const double target = c0 * (1.0 - dip0 * std::exp(-1.0));
    std::vector<std::size_t> order(count.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(tau_ns[a]) < std::abs(tau_ns[b]); });
    for (std::size_t i : order) {
      if (count[i] >= target && std::abs(tau_ns[i]) > 0.0) {
        tau_f0 = std::abs(tau_ns[i]) * (1.0 + s);
        break;
      }
    }
  }

  const double reach = 5.0 * tau_f0 / (1.0 + s);
  if (span_pos < reach || span_neg < reach)
    throw FitDataError("fit_antibunching: histogram must span 5*tau_f/(1+s) on both sides");

  LmProblem prob;
  prob.names = {"c_inf", "dip", "tau_f"};
  prob.p0 = {c0, dip0, tau_f0};
  prob.lower = {kTiny, 0.0, 1e-4};
  prob.upper = {kInf, 1.0, kInf};
  prob.n_residuals = count.size();
  prob.eval = [&tau_ns, &count, s](const double* p, double* r, double* J) {
    double d[3];
    for (std::size_t i = 0; i < count.size(); ++i) {
      const double sigma = poisson_sigma(count[i]);
      const double m = models::antibunching(tau_ns[i], s, p[0], p[1], p[2], J ? d : nullptr);
      r[i] = (m - count[i]) / sigma;
      if (J)
        for (int j = 0; j < 3; ++j) J[i * 3 + j] = d[j] / sigma;
    }
  };
  return lm_fit(prob, opts);
}

FitResult fit_lorentzian(std::vector<ScanPoint> points, const LmOptions& opts) {
  if (points.size() < 5) throw FitDataError("fit_lorentzian: need at least 5 points");
  for (const auto& pt : points)
    if (pt.sigma <= 0.0) throw FitDataError("fit_lorentzian: point sigma must be > 0");
  std::sort(points.begin(), points.end(), [](const ScanPoint& a, const ScanPoint& b) {
    return a.detuning_mhz < b.detuning_mhz || (a.detuning_mhz == b.detuning_mhz && a.rate < b.rate);
  });

  double lo = kInf, hi = -kInf;
  for (const auto& pt : points) {
    lo = std::min(lo, pt.rate);
    hi = std::max(hi, pt.rate);
  }
  if (hi <= lo) throw FitDataError("fit_lorentzian: data has no amplitude");
  const double offset0 = lo;
  const double amp0 = hi - lo;

  double wsum = 0.0, xsum = 0.0;
  for (const auto& pt : points) {
    const double w = std::max(pt.rate - offset0, 0.0);
    wsum += w;
    xsum += w * pt.detuning_mhz;
  }
  const double center0 = wsum > 0.0 ? xsum / wsum
                                    : 0.5 * (points.front().detuning_mhz + points.back().detuning_mhz);

  // Half-maximum crossings, linearly interpolated between samples.
  const double half = offset0 + 0.5 * amp0;
  double left = points.front().detuning_mhz, right = points.back().detuning_mhz;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i - 1].rate < half && points[i].rate >= half) {
      const double f = (half - points[i - 1].rate) / (points[i].rate - points[i - 1].rate);
      left = points[i - 1].detuning_mhz + f * (points[i].detuning_mhz - points[i - 1].detuning_mhz);
      break;
    }
  }
  for (std::size_t i = points.size(); i-- > 1;) {
    if (points[i].rate < half && points[i - 1].rate >= half) {
      const double f = (half - points[i].rate) / (points[i - 1].rate - points[i].rate);
      right = points[i].detuning_mhz - f * (points[i].detuning_mhz - points[i - 1].detuning_mhz);
      break;
    }
  }
  const double spacing = (points.back().detuning_mhz - points.front().detuning_mhz) /
                         static_cast<double>(points.size() - 1);
  const double fwhm0 = std::max(right - left, std::max(spacing, kTiny));

  if (points.back().detuning_mhz - points.front().detuning_mhz < 2.0 * fwhm0)
    throw FitDataError("fit_lorentzian: points must span at least 2x the linewidth");

  LmProblem prob;
  prob.names = {"center", "fwhm", "amplitude", "offset"};
  prob.p0 = {center0, fwhm0, amp0, offset0};
  prob.lower = {-kInf, kTiny, 0.0, -kInf};
  prob.upper = {kInf, kInf, kInf, kInf};
  prob.n_residuals = points.size();
  prob.eval = [&points](const double* p, double* r, double* J) {
    double d[4];
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double m =
          models::lorentzian(points[i].detuning_mhz, p[0], p[1], p[2], p[3], J ? d : nullptr);
      r[i] = (m - points[i].rate) / points[i].sigma;
      if (J)
        for (int j = 0; j < 4; ++j) J[i * 4 + j] = d[j] / points[i].sigma;
    }
  };
  return lm_fit(prob, opts);
}

FitResult fit_lateral_peak_decay(const PeakTable& table, const CoincidenceHistogram& hist,
                                 std::int64_t rep_period_ps, const LmOptions& opts) {
  if (rep_period_ps <= 0) throw std::invalid_argument("fit_lateral_peak_decay: rep_period must be > 0");

  std::vector<int> lateral;
  for (const PeakEntry& p : table.peaks)
    if (p.index != 0 && p.area >= 100) lateral.push_back(p.index);
  if (lateral.size() < 2)
    throw FitDataError("fit_lateral_peak_decay: need >= 2 lateral peaks with >= 100 counts");
  std::sort(lateral.begin(), lateral.end());

  // Bin rows near each selected peak, keyed by the offset from the peak center.
  struct Row {
    double delta_ns;
    double count;
    std::size_t peak;  // index into `lateral`
  };
  std::vector<Row> rows;
  const double period_ps = static_cast<double>(rep_period_ps);
  for (std::size_t i = 0; i < hist.n_bins(); ++i) {
    const double c = hist.bin_center_ps(i);
    const int k = static_cast<int>(std::llround(c / period_ps));
    const auto it = std::lower_bound(lateral.begin(), lateral.end(), k);
    if (it == lateral.end() || *it != k) continue;
    const double delta_ps = c - static_cast<double>(k) * period_ps;
    if (std::abs(delta_ps) > 0.5 * period_ps) continue;
    rows.push_back({delta_ps / kPsPerNs, static_cast<double>(hist.counts[i]),
                    static_cast<std::size_t>(it - lateral.begin())});
  }
  if (rows.size() < lateral.size() + 2) throw FitDataError("fit_lateral_peak_decay: too few bins");

  const double half_period_ns = 0.5 * period_ps / kPsPerNs;
  double floor_sum = 0.0;
  std::size_t floor_n = 0;
  for (const Row& row : rows) {
    if (std::abs(row.delta_ns) > 0.7 * half_period_ns) {
      floor_sum += row.count;
      ++floor_n;
    }
  }
  const double floor0 = floor_n > 0 ? floor_sum / static_cast<double>(floor_n) : 0.0;

  std::vector<double> amp0(lateral.size(), 0.0);
  double m1 = 0.0, m0 = 0.0;
  for (const Row& row : rows) {
    const double w = std::max(row.count - floor0, 0.0);
    m1 += w * std::abs(row.delta_ns);
    m0 += w;
    amp0[row.peak] = std::max(amp0[row.peak], row.count - floor0);
  }
  if (m0 <= 0.0) throw FitDataError("fit_lateral_peak_decay: peaks have no counts above floor");
  const double tau_f0 = m1 / m0;  // mean |delta| of a two-sided exponential
  const double bin_ns = static_cast<double>(hist.bin_width_ps) / kPsPerNs;
  if (tau_f0 < bin_ns)
    throw FitDataError("fit_lateral_peak_decay: decay time below one bin width, unresolvable");

  LmProblem prob;
  prob.names = {"tau_f", "floor"};
  prob.p0 = {tau_f0, std::max(floor0, 0.0)};
  prob.lower = {1e-4, 0.0};
  prob.upper = {kInf, kInf};
  for (std::size_t j = 0; j < lateral.size(); ++j) {
    prob.names.push_back("amp_" + std::to_string(lateral[j]));
    prob.p0.push_back(std::max(amp0[j], 1.0));
    prob.lower.push_back(0.0);
    prob.upper.push_back(kInf);
  }
  prob.n_residuals = rows.size();
  const std::size_t m = prob.p0.size();
  prob.eval = [&rows, m](const double* p, double* r, double* J) {
    double d[3];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double sigma = poisson_sigma(rows[i].count);
      const double amp = p[2 + rows[i].peak];
      const double mval = models::shifted_exp_peak(rows[i].delta_ns, amp, p[0], p[1], J ? d : nullptr);
      r[i] = (mval - rows[i].count) / sigma;
      if (J) {
        for (std::size_t j = 0; j < m; ++j) J[i * m + j] = 0.0;
        J[i * m + 0] = d[1] / sigma;
        J[i * m + 1] = d[2] / sigma;
        J[i * m + 2 + rows[i].peak] = d[0] / sigma;
      }
    }
  };
  return lm_fit(prob, opts);
}

FitResult fit_gaussian_spot(const ScanImage& image, double pixel_size_nm, const LmOptions& opts) {
  if (pixel_size_nm <= 0.0) throw std::invalid_argument("fit_gaussian_spot: pixel_size must be > 0");
  if (image.nx < 4 || image.ny < 4) throw FitDataError("fit_gaussian_spot: image too small");

  double border_sum = 0.0;
  std::size_t border_n = 0;
  for (std::size_t iy = 0; iy < image.ny; ++iy) {
    for (std::size_t ix = 0; ix < image.nx; ++ix) {
      if (iy == 0 || iy + 1 == image.ny || ix == 0 || ix + 1 == image.nx) {
        border_sum += static_cast<double>(image.at(ix, iy));
        ++border_n;
      }
    }
  }
  const double offset0 = border_sum / static_cast<double>(border_n);
  const double bg_sigma = std::sqrt(std::max(offset0, 1.0));

  double peak = 0.0;
  std::size_t peak_ix = 0, peak_iy = 0;
  for (std::size_t iy = 0; iy < image.ny; ++iy) {
    for (std::size_t ix = 0; ix < image.nx; ++ix) {
      const double v = static_cast<double>(image.at(ix, iy));
      if (v > peak) {
        peak = v;
        peak_ix = ix;
        peak_iy = iy;
      }
    }
  }
  if (peak < offset0 + 3.0 * bg_sigma)
    throw FitDataError("fit_gaussian_spot: no maximum above background + 3 sigma");

  // Clipped moments: suppress background shot noise in the initial widths.
  const double clip = offset0 + 2.0 * bg_sigma;
  double wsum = 0.0, xsum = 0.0, ysum = 0.0;
  for (std::size_t iy = 0; iy < image.ny; ++iy) {
    for (std::size_t ix = 0; ix < image.nx; ++ix) {
      const double w = std::max(static_cast<double>(image.at(ix, iy)) - clip, 0.0);
      wsum += w;
      xsum += w * (static_cast<double>(ix) + 0.5) * pixel_size_nm;
      ysum += w * (static_cast<double>(iy) + 0.5) * pixel_size_nm;
    }
  }
  double x00, y00, fwhm0;
  if (wsum > 0.0) {
    x00 = xsum / wsum;
    y00 = ysum / wsum;
    double var = 0.0;
    for (std::size_t iy = 0; iy < image.ny; ++iy) {
      for (std::size_t ix = 0; ix < image.nx; ++ix) {
        const double w = std::max(static_cast<double>(image.at(ix, iy)) - clip, 0.0);
        const double dx = (static_cast<double>(ix) + 0.5) * pixel_size_nm - x00;
        const double dy = (static_cast<double>(iy) + 0.5) * pixel_size_nm - y00;
        var += w * (dx * dx + dy * dy);
      }
    }
    var /= 2.0 * wsum;  // per-axis variance of a symmetric spot
    fwhm0 = 2.3548200450309493 * std::sqrt(var);
  } else {
    x00 = (static_cast<double>(peak_ix) + 0.5) * pixel_size_nm;
    y00 = (static_cast<double>(peak_iy) + 0.5) * pixel_size_nm;
    fwhm0 = 0.0;
  }
  if (fwhm0 < pixel_size_nm)
    throw FitDataError("fit_gaussian_spot: spot narrower than one pixel, unresolvable");

  LmProblem prob;
  prob.names = {"x0", "y0", "fwhm", "amplitude", "offset"};
  prob.p0 = {x00, y00, fwhm0, std::max(peak - offset0, 1.0), offset0};
  prob.lower = {0.0, 0.0, 0.1 * pixel_size_nm, 0.0, 0.0};
  prob.upper = {static_cast<double>(image.nx) * pixel_size_nm,
                static_cast<double>(image.ny) * pixel_size_nm, kInf, kInf, kInf};
  prob.n_residuals = image.pixels.size();
  prob.eval = [&image, pixel_size_nm](const double* p, double* r, double* J) {
    double d[5];
    std::size_t i = 0;
    for (std::size_t iy = 0; iy < image.ny; ++iy) {
      const double y = (static_cast<double>(iy) + 0.5) * pixel_size_nm;
      for (std::size_t ix = 0; ix < image.nx; ++ix, ++i) {
        const double x = (static_cast<double>(ix) + 0.5) * pixel_size_nm;
        const double count = static_cast<double>(image.pixels[iy * image.nx + ix]);
        const double sigma = poisson_sigma(count);
        const double m = models::gaussian_spot(x, y, p[0], p[1], p[2], p[3], p[4], J ? d : nullptr);
        r[i] = (m - count) / sigma;
        if (J)
          for (int j = 0; j < 5; ++j) J[i * 5 + j] = d[j] / sigma;
      }
    }
  };
  return lm_fit(prob, opts);
}

}  // namespace zpl
