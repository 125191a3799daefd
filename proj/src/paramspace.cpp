#include "smk/paramspace.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "smk/storage.hpp"

namespace smk {

namespace {

using nlohmann::json;

constexpr double kFwhmConstant = 4.16;

void check_interval(const Interval& i, const char* name) {
  if (!std::isfinite(i.lo) || !std::isfinite(i.hi) || i.lo > i.hi)
    throw ConfigError(std::string("sampling: '") + name + "' bounds must be finite with lo <= hi");
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(std::string("sampling: '") + name + "' must be [lo, hi]");
  return Interval{j[0].get<double>(), j[1].get<double>()};
}

std::uint64_t split_code(Split s) {
  switch (s) {
    case Split::Train: return 1;
    case Split::Val: return 2;
    case Split::Test: return 3;
  }
  return 0;
}

std::size_t split_count(const SamplingConfig& cfg, Split s) {
  switch (s) {
    case Split::Train: return cfg.n_train;
    case Split::Val: return cfg.n_val;
    case Split::Test: return cfg.n_test;
  }
  return 0;
}

}  // namespace

SamplingConfig default_sampling_config(int dimensionality) {
  SamplingConfig cfg;
  cfg.dimensionality = dimensionality;
  if (dimensionality == 3) {
    cfg.n_train = 50;
    cfg.n_val = 15;
    cfg.n_test = 15;
  }
  return cfg;
}

void validate(const SamplingConfig& cfg) {
  if (cfg.dimensionality != 2 && cfg.dimensionality != 3) throw ConfigError("sampling: dimensionality must be 2 or 3");
  check_interval(cfg.core_diameter_nm, "core_diameter_nm");
  check_interval(cfg.log10_anisotropy, "log10_anisotropy");
  check_interval(cfg.q, "q");
  check_interval(cfg.gradient_tpm, "gradient_tpm");
  check_interval(cfg.amplitude_mt, "amplitude_mt");
  check_interval(cfg.fov_factor, "fov_factor");
  check_interval(cfg.resolution_factor, "resolution_factor");
  if (!(cfg.core_diameter_nm.lo > 0.0)) throw ConfigError("sampling: core diameters must be positive");
  if (!(cfg.gradient_tpm.lo > 0.0)) throw ConfigError("sampling: gradients must be positive");
  if (!(cfg.amplitude_mt.lo > 0.0)) throw ConfigError("sampling: drive amplitudes must be positive");
  if (!(cfg.fov_factor.lo >= 1.0)) throw ConfigError("sampling: fov_factor must be >= 1 so the calibration covers the drive FOV");
  if (!(cfg.resolution_factor.lo > 0.0)) throw ConfigError("sampling: resolution_factor must be positive");
  if (!(cfg.q.lo > 0.0)) throw ConfigError("sampling: q must be positive");
  if (!(cfg.p_fluid >= 0.0 && cfg.p_fluid <= 1.0)) throw ConfigError("sampling: p_fluid must lie in [0, 1]");
  if (!(cfg.temperature > 0.0) || !(cfg.saturation_magnetization > 0.0))
    throw ConfigError("sampling: temperature and saturation magnetization must be positive");
  if (cfg.min_grid < 2 || cfg.max_grid < cfg.min_grid) throw ConfigError("sampling: need 2 <= min_grid <= max_grid");
  if (cfg.quad_order < 2) throw ConfigError("sampling: quad_order must be at least 2");
}

json to_json(const SamplingConfig& c) {
  return {{"seed", c.seed},
          {"dimensionality", c.dimensionality},
          {"counts", {{"train", c.n_train}, {"val", c.n_val}, {"test", c.n_test}}},
          {"core_diameter_nm", interval_json(c.core_diameter_nm)},
          {"log10_anisotropy", interval_json(c.log10_anisotropy)},
          {"p_fluid", c.p_fluid},
          {"q", interval_json(c.q)},
          {"temperature", c.temperature},
          {"saturation_magnetization", c.saturation_magnetization},
          {"gradient_tpm", interval_json(c.gradient_tpm)},
          {"amplitude_mt", interval_json(c.amplitude_mt)},
          {"fov_factor", interval_json(c.fov_factor)},
          {"resolution_factor", interval_json(c.resolution_factor)},
          {"min_grid", c.min_grid},
          {"max_grid", c.max_grid},
          {"quad_order", c.quad_order}};
}

SamplingConfig sampling_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("sampling: expected a JSON object");
  static const std::set<std::string> known{"seed",         "dimensionality", "counts",         "core_diameter_nm",
                                           "log10_anisotropy", "p_fluid",    "q",              "temperature",
                                           "saturation_magnetization", "gradient_tpm", "amplitude_mt", "fov_factor",
                                           "resolution_factor", "min_grid",  "max_grid",       "quad_order"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("sampling: unknown key '" + key + "'");
  }
  try {
    const int dims = j.value("dimensionality", 2);
    SamplingConfig c = default_sampling_config(dims);
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("counts")) {
      const json& n = j["counts"];
      if (!n.is_object()) throw ConfigError("sampling: 'counts' must be an object with train/val/test");
      for (const auto& [key, _] : n.items()) {
        if (key != "train" && key != "val" && key != "test") throw ConfigError("sampling: unknown split '" + key + "' in counts");
      }
      c.n_train = n.value("train", c.n_train);
      c.n_val = n.value("val", c.n_val);
      c.n_test = n.value("test", c.n_test);
    }
    auto iv = [&](const char* key, Interval& dst) {
      if (j.contains(key)) dst = interval_from(j[key], key);
    };
    iv("core_diameter_nm", c.core_diameter_nm);
    iv("log10_anisotropy", c.log10_anisotropy);
    iv("q", c.q);
    iv("gradient_tpm", c.gradient_tpm);
    iv("amplitude_mt", c.amplitude_mt);
    iv("fov_factor", c.fov_factor);
    iv("resolution_factor", c.resolution_factor);
    c.p_fluid = j.value("p_fluid", c.p_fluid);
    c.temperature = j.value("temperature", c.temperature);
    c.saturation_magnetization = j.value("saturation_magnetization", c.saturation_magnetization);
    c.min_grid = j.value("min_grid", c.min_grid);
    c.max_grid = j.value("max_grid", c.max_grid);
    c.quad_order = j.value("quad_order", c.quad_order);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sampling: bad value: ") + e.what());
  }
}

ParticleSpec sample_particle(CounterRng& rng, const SamplingConfig& cfg) {
  ParticleSpec p;
  const double lo3 = std::pow(cfg.core_diameter_nm.lo, 3);
  const double hi3 = std::pow(cfg.core_diameter_nm.hi, 3);
  p.core_diameter = std::cbrt(rng.uniform(lo3, hi3)) * 1e-9;
  p.anisotropy_constant = std::pow(10.0, rng.uniform(cfg.log10_anisotropy.lo, cfg.log10_anisotropy.hi));
  p.temperature = cfg.temperature;
  p.saturation_magnetization = cfg.saturation_magnetization;
  if (rng.bernoulli(cfg.p_fluid)) {
    p.mobility = FluidParticle{rng.uniform(cfg.q.lo, cfg.q.hi)};
  } else {
    p.mobility = ImmobilizedParticle{rng.unit_vector()};
  }
  return p;
}

ScannerSpec sample_scanner(CounterRng& rng, int dimensionality, const SamplingConfig& cfg) {
  if (dimensionality != 2 && dimensionality != 3) throw ConfigError("dimensionality must be 2 or 3");
  ScannerSpec s;
  const double gx = rng.uniform(cfg.gradient_tpm.lo, cfg.gradient_tpm.hi);
  const double gy = rng.uniform(cfg.gradient_tpm.lo, cfg.gradient_tpm.hi);
  s.gradients = Vec3(gradient_from_tesla_per_meter(gx), gradient_from_tesla_per_meter(gy), -gradient_from_tesla_per_meter(gx + gy));
  // All three amplitudes are drawn so 2D and 3D draws consume the same stream.
  Vec3 a;
  for (int i = 0; i < 3; ++i) a[i] = field_from_millitesla(rng.uniform(cfg.amplitude_mt.lo, cfg.amplitude_mt.hi));
  if (dimensionality == 2) a[2] = 0.0;
  s.df_amplitudes = a;
  return s;
}

double fwhm_resolution(double beta, double gradient) { return kFwhmConstant / (beta * std::abs(gradient)); }

std::size_t calibration_size(double fov, double resolution, double factor, std::size_t min_grid, std::size_t max_grid) {
  const double n = round_half_even(fov / resolution * factor);
  return std::clamp<std::size_t>(n < 0.0 ? 0 : static_cast<std::size_t>(n), min_grid, max_grid);
}

CalibrationSpec sample_calibration(CounterRng& rng, const ScannerSpec& scanner, const ParticleSpec& particle,
                                   const SamplingConfig& cfg) {
  const DerivedParticleParams params = derive_params(particle);
  const Vec3 df = df_fov(scanner);
  CalibrationSpec c;
  for (int i = 0; i < 3; ++i) {
    if (!scanner.axis_active(i)) {
      c.fov[i] = 0.0;
      c.center[i] = 0.0;
      c.grid_size[i] = 1;
      continue;
    }
    c.fov[i] = df[i] * rng.uniform(cfg.fov_factor.lo, cfg.fov_factor.hi);
    const double margin = 0.5 * (c.fov[i] - df[i]);
    c.center[i] = rng.uniform(-margin, margin);
    const double r = fwhm_resolution(params.beta, scanner.gradients[i]);
    c.grid_size[i] = calibration_size(c.fov[i], r, rng.uniform(cfg.resolution_factor.lo, cfg.resolution_factor.hi), cfg.min_grid,
                                      cfg.max_grid);
  }
  return c;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw ConfigError("split must be train, val or test; got '" + s + "'");
}

std::string entry_id(Split split, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", index);
  return to_string(split) + "-" + buf;
}

std::uint64_t entry_seed(std::uint64_t seed, Split split, std::size_t index) {
  return CounterRng(seed).split(split_code(split)).split(index).key();
}

ManifestEntry make_entry(const SamplingConfig& cfg, Split split, std::size_t index) {
  ManifestEntry e;
  e.id = entry_id(split, index);
  e.split = split;
  e.seed = entry_seed(cfg.seed, split, index);
  const CounterRng root(e.seed);
  CounterRng pr = root.split(1);
  CounterRng sr = root.split(2);
  CounterRng cr = root.split(3);
  e.particle = sample_particle(pr, cfg);
  e.scanner = sample_scanner(sr, cfg.dimensionality, cfg);
  e.calibration = sample_calibration(cr, e.scanner, e.particle, cfg);
  return e;
}

ManifestEntry regenerate_entry(const SamplingConfig& cfg, const std::string& id) {
  const auto dash = id.rfind('-');
  if (dash == std::string::npos || dash + 1 >= id.size()) throw ConfigError("malformed entry id '" + id + "'");
  const Split split = split_from_string(id.substr(0, dash));
  std::size_t index = 0;
  try {
    std::size_t used = 0;
    index = std::stoull(id.substr(dash + 1), &used);
    if (used != id.size() - dash - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("malformed entry id '" + id + "'");
  }
  return make_entry(cfg, split, index);
}

DatasetManifest build_manifest(const SamplingConfig& cfg) {
  validate(cfg);
  DatasetManifest m;
  m.config = cfg;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    const std::size_t n = split_count(cfg, s);
    for (std::size_t i = 0; i < n; ++i) m.entries.push_back(make_entry(cfg, s, i));
  }
  return m;
}

json to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"id", e.id},
                       {"split", to_string(e.split)},
                       {"seed", e.seed},
                       {"particle", to_json(e.particle)},
                       {"scanner", to_json(e.scanner)},
                       {"calibration", to_json(e.calibration)}});
  }
  return {{"schema_version", kSchemaVersion}, {"sampling", to_json(m.config)}, {"entries", entries}};
}

DatasetManifest manifest_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version") || !j.contains("sampling") || !j.contains("entries"))
    throw DataError("manifest: expected schema_version, sampling and entries");
  if (j["schema_version"].get<int>() > kSchemaVersion)
    throw DataError("manifest schema_version " + std::to_string(j["schema_version"].get<int>()) + " is newer than supported " +
                    std::to_string(kSchemaVersion));
  DatasetManifest m;
  m.config = sampling_config_from_json(j["sampling"]);
  for (const auto& e : j["entries"]) {
    ManifestEntry me;
    me.id = e.at("id").get<std::string>();
    me.split = split_from_string(e.at("split").get<std::string>());
    me.seed = e.at("seed").get<std::uint64_t>();
    me.particle = particle_from_json(e.at("particle"));
    me.scanner = scanner_from_json(e.at("scanner"));
    me.calibration = calibration_from_json(e.at("calibration"));
    m.entries.push_back(std::move(me));
  }
  return m;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DataError("KS statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace smk
