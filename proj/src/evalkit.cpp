#include "smk/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "smk/parallel.hpp"

namespace smk {

namespace {

void check_same_shape(const ComplexImage& gt, const ComplexImage& test, const char* what) {
  if (!(gt.shape() == test.shape()))
    throw DataError(std::string(what) + ": shape mismatch " + to_string(gt.shape()) + " vs " + to_string(test.shape()));
}

double max_abs(const ComplexImage& img) {
  double m = 0.0;
  for (const auto& v : img.values()) m = std::max(m, std::abs(v));
  return m;
}

constexpr int kRadius = 5;

std::array<double, 2 * kRadius + 1> gaussian_taps() {
  std::array<double, 2 * kRadius + 1> w{};
  double sum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    w[i + kRadius] = std::exp(-0.5 * (i * i) / (1.5 * 1.5));
    sum += w[i + kRadius];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Half-sample symmetric reflection (d c b a | a b c d); valid for n > kRadius.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
  if (i < 0) return static_cast<std::size_t>(-i - 1);
  if (i >= sn) return static_cast<std::size_t>(2 * sn - i - 1);
  return static_cast<std::size_t>(i);
}

// Separable Gaussian blur along every axis with more than one sample.
std::vector<double> blur(std::vector<double> v, const Shape3& s) {
  static const auto taps = gaussian_taps();
  std::vector<double> tmp(v.size());
  const std::size_t stride[3] = {s.ny * s.nx, s.nx, 1};
  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t n = s[axis];
    if (n <= 1) continue;
    for (std::size_t z = 0; z < s.nz; ++z) {
      for (std::size_t y = 0; y < s.ny; ++y) {
        for (std::size_t x = 0; x < s.nx; ++x) {
          const std::size_t idx = s.index(z, y, x);
          const std::size_t pos = axis == 0 ? z : axis == 1 ? y : x;
          const std::size_t base = idx - pos * stride[axis];
          double acc = 0.0;
          for (int t = -kRadius; t <= kRadius; ++t) {
            acc += taps[t + kRadius] * v[base + reflect(std::ptrdiff_t(pos) + t, n) * stride[axis]];
          }
          tmp[idx] = acc;
        }
      }
    }
    v.swap(tmp);
  }
  return v;
}

double ssim_channel(const std::vector<double>& x, const std::vector<double>& y, const Shape3& s, double c1, double c2) {
  std::vector<double> xx(x.size());
  std::vector<double> yy(x.size());
  std::vector<double> xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const std::vector<double> mx = blur(x, s);
  const std::vector<double> my = blur(y, s);
  const std::vector<double> mxx = blur(std::move(xx), s);
  const std::vector<double> myy = blur(std::move(yy), s);
  const std::vector<double> mxy = blur(std::move(xy), s);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    sum += num / den;
  }
  return sum / static_cast<double>(x.size());
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

const ProvenanceStep* last_corruption(const SystemMatrix& sm) {
  for (auto it = sm.provenance.rbegin(); it != sm.provenance.rend(); ++it) {
    if (it->kind == ProvenanceStep::Kind::Corrupted) return &*it;
  }
  return nullptr;
}

nlohmann::json aggregate_json(const std::vector<double>& values) {
  if (values.empty()) return nullptr;
  if (values.size() == 1) return {{"mean", values[0]}, {"ci95", nullptr}, {"count", 1}};
  const Aggregate a = aggregate(values);
  return {{"mean", a.mean}, {"ci95", a.ci95}, {"count", a.count}};
}

}  // namespace

double psnr(const ComplexImage& gt, const ComplexImage& test) {
  check_same_shape(gt, test, "psnr");
  const double range = max_abs(gt);
  if (!(range > 0.0)) throw DataError("psnr: ground truth is identically zero");
  double se = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) se += std::norm(gt[i] - test[i]);
  const double mse = se / (2.0 * static_cast<double>(gt.size()));
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(range * range / mse));
}

double ssim(const ComplexImage& gt, const ComplexImage& test) {
  check_same_shape(gt, test, "ssim");
  const Shape3& s = gt.shape();
  if (s.active_axes() == 0) throw DataError("ssim: image has no spatial extent");
  for (int a = 0; a < 3; ++a) {
    if (s[a] > 1 && s[a] < 7)
      throw DataError("ssim: image " + to_string(s) + " is smaller than the 7-pixel minimum on an active axis");
  }
  const double range = max_abs(gt);
  if (!(range > 0.0)) throw DataError("ssim: ground truth is identically zero");
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  std::vector<double> gr(gt.size());
  std::vector<double> gi(gt.size());
  std::vector<double> tr(gt.size());
  std::vector<double> ti(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gr[i] = gt[i].real();
    gi[i] = gt[i].imag();
    tr[i] = test[i].real();
    ti[i] = test[i].imag();
  }
  return 0.5 * (ssim_channel(gr, tr, s, c1, c2) + ssim_channel(gi, ti, s, c1, c2));
}

Aggregate aggregate(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw DataError("aggregate needs at least two values, got " + std::to_string(n));
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return Aggregate{mean, 1.96 * sd / std::sqrt(static_cast<double>(n)), n};
}

GroupBy group_by_from_string(const std::string& s) {
  if (s.empty() || s == "none") return GroupBy::None;
  if (s == "sigma") return GroupBy::Sigma;
  if (s == "scale") return GroupBy::Scale;
  if (s == "size") return GroupBy::Size;
  throw ConfigError("group-by must be one of sigma, scale, size; got '" + s + "'");
}

std::string group_key(const SystemMatrix& test, GroupBy by) {
  switch (by) {
    case GroupBy::None: return "all";
    case GroupBy::Sigma: {
      const ProvenanceStep* c = last_corruption(test);
      if (c == nullptr || !c->descriptor.contains("sigma")) return "sigma=none";
      return "sigma=" + format_number(c->descriptor["sigma"].get<double>());
    }
    case GroupBy::Scale: {
      const ProvenanceStep* c = last_corruption(test);
      if (c == nullptr || !c->descriptor.contains("factors")) return "scale=1";
      const auto f = c->descriptor["factors"].get<std::vector<int>>();
      return "scale=" + std::to_string(*std::max_element(f.begin(), f.end()));
    }
    case GroupBy::Size: {
      const std::size_t m = std::max({test.grid.nx, test.grid.ny, test.grid.nz});
      if (m <= 16) return "size<=16";
      if (m <= 32) return "size=17-32";
      if (m <= 48) return "size=33-48";
      return "size>48";
    }
  }
  return "all";
}

std::vector<ComponentMetrics> evaluate_pair(const SystemMatrix& gt, const SystemMatrix& test, bool want_psnr, bool want_ssim,
                                            int threads, std::size_t* skipped_zero) {
  if (gt.n_channels != test.n_channels || gt.n_freq != test.n_freq || !(gt.grid == test.grid)) {
    throw DataError("evaluate: ground truth dims (L=" + std::to_string(gt.n_channels) + ", K=" + std::to_string(gt.n_freq) +
                    ", grid " + to_string(gt.grid) + ") differ from test dims (L=" + std::to_string(test.n_channels) +
                    ", K=" + std::to_string(test.n_freq) + ", grid " + to_string(test.grid) + "); restore to the ground-truth grid first");
  }
  const std::size_t n = gt.n_components();
  std::vector<std::optional<ComponentMetrics>> out(n);
  parallel_for(n, threads, [&](std::size_t row) {
    const std::size_t l = row / gt.n_freq;
    const std::size_t k = row % gt.n_freq;
    if (gt.component_max_abs(l, k) == 0.0) return;
    const ComplexImage g = to_reference_units(gt, l, k);
    const ComplexImage t = to_reference_units(test, l, k);
    ComponentMetrics m;
    m.channel = l;
    m.freq = k;
    if (want_psnr) m.psnr = psnr(g, t);
    if (want_ssim) m.ssim = ssim(g, t);
    out[row] = m;
  });
  std::vector<ComponentMetrics> result;
  std::size_t skipped = 0;
  for (auto& m : out) {
    if (m) {
      result.push_back(*m);
    } else {
      ++skipped;
    }
  }
  if (skipped_zero != nullptr) *skipped_zero += skipped;
  return result;
}

nlohmann::json MetricReport::to_json() const {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<double> all_psnr;
  std::vector<double> all_ssim;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : components) {
    auto& g = groups[c.group];
    nlohmann::json e{{"source", c.source}, {"channel", c.channel}, {"freq", c.freq}, {"group", c.group}};
    if (c.psnr) {
      g.first.push_back(*c.psnr);
      all_psnr.push_back(*c.psnr);
      e["psnr"] = *c.psnr;
    }
    if (c.ssim) {
      g.second.push_back(*c.ssim);
      all_ssim.push_back(*c.ssim);
      e["ssim"] = *c.ssim;
    }
    comps.push_back(std::move(e));
  }
  nlohmann::json gj = nlohmann::json::array();
  for (const auto& [key, vals] : groups) {
    nlohmann::json e{{"key", key}};
    if (!vals.first.empty()) e["psnr"] = aggregate_json(vals.first);
    if (!vals.second.empty()) e["ssim"] = aggregate_json(vals.second);
    gj.push_back(std::move(e));
  }
  nlohmann::json overall = nlohmann::json::object();
  if (!all_psnr.empty()) overall["psnr"] = aggregate_json(all_psnr);
  if (!all_ssim.empty()) overall["ssim"] = aggregate_json(all_ssim);
  return {{"metrics", metrics},
          {"group_by", group_by},
          {"psnr_cap_db", kPsnrCap},
          {"skipped_zero_components", skipped_zero},
          {"overall", overall},
          {"groups", gj},
          {"components", comps}};
}

}  // namespace smk
