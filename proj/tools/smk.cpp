// smk: command-line front end for simulation, corruption, restoration,
// reconstruction and evaluation of MPI system matrices.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "smk/corrupt.hpp"
#include "smk/evalkit.hpp"
#include "smk/paramspace.hpp"
#include "smk/recon.hpp"
#include "smk/restore.hpp"
#include "smk/smsim.hpp"
#include "smk/storage.hpp"

namespace fs = std::filesystem;
using namespace smk;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, std::size_t expected, const std::string& what) {
  const auto parts = split_csv(s);
  if (parts.size() != expected)
    throw ConfigError(what + " needs " + std::to_string(expected) + " comma-separated values, got '" + s + "'");
  std::vector<T> out;
  for (const auto& p : parts) {
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) {
        out.push_back(static_cast<T>(std::stod(p, &used)));
      } else {
        if (!p.empty() && p[0] == '-') throw std::invalid_argument("negative");
        out.push_back(static_cast<T>(std::stoull(p, &used)));
      }
      if (used != p.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(what + ": cannot parse '" + p + "'");
    }
  }
  return out;
}

std::array<std::size_t, 3> parse_triplet(const std::string& s, const std::string& what) {
  const auto v = parse_list<std::size_t>(s, 3, what);
  return {v[0], v[1], v[2]};
}

void require_sm_dir(const fs::path& dir, const std::string& flag) {
  if (!fs::is_directory(dir)) throw DataError(flag + ": '" + dir.string() + "' is not a system-matrix directory");
}

const ProvenanceStep* last_corruption(const SystemMatrix& sm) {
  for (auto it = sm.provenance.rbegin(); it != sm.provenance.rend(); ++it) {
    if (it->kind == ProvenanceStep::Kind::Corrupted) return &*it;
  }
  return nullptr;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scanner, particle, calib, receive, out;
  int quad_order = 48;
  int threads = 0;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
  const ScannerSpec scanner = scanner_from_json(read_json_file(a.scanner));
  const ParticleSpec particle = particle_from_json(read_json_file(a.particle));
  const CalibrationSpec calib = calibration_from_json(read_json_file(a.calib));
  const ReceiveChain receive = a.receive.empty() ? default_receive(scanner) : receive_from_json(read_json_file(a.receive));
  SimulationOptions opt;
  opt.quad_order = a.quad_order;
  opt.threads = resolve_threads(a.threads);
  const SystemMatrix sm = simulate_system_matrix(scanner, particle, calib, receive, opt, a.seed);
  write_sm(a.out, sm);
  std::cout << "wrote " << a.out << ": L=" << sm.n_channels << " K=" << sm.n_freq << " grid " << to_string(sm.grid) << "\n";
  return 0;
}

// ---------------------------------------------------------------- dataset

struct DatasetArgs {
  std::string config, out, split;
  int threads = 0;
};

int run_dataset(const DatasetArgs& a) {
  const SamplingConfig cfg = sampling_config_from_json(read_json_file(a.config));
  const Split split = split_from_string(a.split);
  const DatasetManifest full = build_manifest(cfg);
  DatasetManifest m;
  m.config = cfg;
  for (const auto& e : full.entries) {
    if (e.split == split) m.entries.push_back(e);
  }
  fs::create_directories(a.out);
  write_json_file(fs::path(a.out) / "manifest.json", to_json(m));
  SimulationOptions opt;
  opt.quad_order = cfg.quad_order;
  opt.threads = resolve_threads(a.threads);
  for (const auto& e : m.entries) {
    const SystemMatrix sm = simulate_system_matrix(e.scanner, e.particle, e.calibration, default_receive(e.scanner), opt, e.seed);
    write_sm(fs::path(a.out) / e.id, sm);
    std::cout << e.id << ": grid " << to_string(sm.grid) << "\n";
  }
  std::cout << "wrote " << m.entries.size() << " " << a.split << " entries to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- corrupt

struct CorruptArgs {
  std::string in, task, factors, noise = "synthetic", mixture, out;
  double sigma = 0.0;
  double mask_ratio = 0.0;
  int mask_blocks = 1;
  bool random_phase = false;
  std::uint64_t seed = 0;
  int threads = 0;
};

int run_corrupt(const CorruptArgs& a) {
  require_sm_dir(a.in, "--in");
  const SystemMatrix sm = read_sm(a.in);
  CorruptionTask t;
  t.kind = corruption_kind_from_string(a.task);
  t.noise.sigma = a.sigma;
  t.random_phase = a.random_phase;
  if (a.noise.rfind("bg:", 0) == 0) {
    t.noise.source = NoiseConfig::Source::BackgroundFile;
    t.noise.background_path = a.noise.substr(3);
    if (!fs::exists(t.noise.background_path)) throw DataError("--noise: background file '" + t.noise.background_path + "' not found");
  } else if (a.noise != "synthetic") {
    throw ConfigError("--noise must be 'synthetic' or 'bg:FILE', got '" + a.noise + "'");
  }
  if (!a.mixture.empty()) {
    const auto w = parse_list<double>(a.mixture, 3, "--mixture");
    t.noise.mixture = {w[0], w[1], w[2]};
  }
  if (t.kind == CorruptionKind::Downsample) {
    if (a.factors.empty()) throw ConfigError("downsample needs --factors X,Y,Z");
    t.factors = parse_triplet(a.factors, "--factors");
  } else if (!a.factors.empty()) {
    throw ConfigError("--factors only applies to --task downsample");
  }
  if (t.kind == CorruptionKind::Inpaint) {
    if (!(a.mask_ratio > 0.0)) throw ConfigError("inpaint needs --mask-ratio in (0, 1)");
    // Mask stream is separate from the per-component noise streams.
    CounterRng mrng = CounterRng(a.seed).split(0x4D41534BULL);
    t.mask = generate_mask(sm.grid, a.mask_ratio, a.mask_blocks, mrng);
  } else if (a.mask_ratio != 0.0) {
    throw ConfigError("--mask-ratio only applies to --task inpaint");
  }
  SystemMatrix out = apply(t, sm, a.seed, resolve_threads(a.threads));
  if (t.kind == CorruptionKind::Inpaint) {
    out.provenance.back().descriptor["mask_ratio"] = a.mask_ratio;
    out.provenance.back().descriptor["mask_blocks"] = a.mask_blocks;
  }
  write_sm(a.out, out);
  if (t.kind == CorruptionKind::Inpaint) write_mask(fs::path(a.out) / "mask.bin", t.mask);
  std::cout << "wrote " << a.out << " (" << a.task << ", sigma " << a.sigma << ")\n";
  return 0;
}

// ---------------------------------------------------------------- restore

struct RestoreArgs {
  std::string in, method, sigma = "auto", target, mask, background, out;
  double omega = kDefaultOmega;
  double sigma_coefficient = kDefaultSigmaCoefficient;
  int threads = 0;
};

int run_restore(const RestoreArgs& a) {
  require_sm_dir(a.in, "--in");
  const SystemMatrix sm = read_sm(a.in);
  RestoreMethod m;
  m.kind = restore_kind_from_string(a.method);
  m.omega = a.omega;
  if (m.kind == RestoreKind::DctF) {
    if (a.sigma == "auto") {
      if (!a.background.empty()) {
        m.sigma = sigma_from_background(a.background, sm.n_components(), a.sigma_coefficient);
        m.sigma_in_reference_units = true;
      } else if (const ProvenanceStep* c = last_corruption(sm); c != nullptr && c->descriptor.contains("sigma")) {
        m.sigma = {c->descriptor["sigma"].get<double>()};
      } else {
        throw ConfigError("--sigma auto needs --background FILE or a corrupted input that records its sigma");
      }
    } else {
      m.sigma = parse_list<double>(a.sigma, 1, "--sigma");
    }
  }
  if (!a.target.empty()) {
    if (m.kind != RestoreKind::Cubic) throw ConfigError("--target only applies to --method cubic");
    m.target = parse_triplet(a.target, "--target");
  }
  if (m.kind == RestoreKind::Biharmonic) {
    const fs::path mask = a.mask.empty() ? fs::path(a.in) / "mask.bin" : fs::path(a.mask);
    if (!fs::exists(mask)) throw DataError("biharmonic needs a mask: '" + mask.string() + "' not found (use --mask FILE)");
    m.mask = read_mask(mask);
  }
  const SystemMatrix out = restore(sm, m, resolve_threads(a.threads));
  write_sm(a.out, out);
  std::cout << "wrote " << a.out << " (" << a.method << ")\n";
  return 0;
}

// ---------------------------------------------------------------- measure

struct MeasureArgs {
  std::string sm, phantom, delta, out;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

int run_measure(const MeasureArgs& a) {
  require_sm_dir(a.sm, "--sm");
  const SystemMatrix sm = read_sm(a.sm);
  RealImage c;
  if (!a.phantom.empty() == !a.delta.empty()) throw ConfigError("give exactly one of --phantom FILE or --delta X,Y,Z");
  if (!a.phantom.empty()) {
    c = read_real_volume(a.phantom);
  } else {
    const auto p = parse_triplet(a.delta, "--delta");
    if (p[0] >= sm.grid.nx || p[1] >= sm.grid.ny || p[2] >= sm.grid.nz)
      throw DataError("--delta position lies outside grid " + to_string(sm.grid));
    c = RealImage(sm.grid, 0.0);
    c.at(p[2], p[1], p[0]) = 1.0;
  }
  std::optional<MeasurementNoise> noise;
  if (a.noise_sigma > 0.0) noise = MeasurementNoise{a.noise_sigma, a.seed};
  const std::vector<cdouble> u = simulate_measurement(sm, c, noise);
  std::vector<cfloat> f(u.begin(), u.end());
  write_complex64(a.out, {sm.n_channels, sm.n_freq}, f);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
  std::string sm, meas, background, out;
  double snr_threshold = 1.5;
  double lambda = 0.3;
  double noise_sigma = 0.0;
  int iters = 1000;
  bool no_nonneg = false;
};

int run_reconstruct(const ReconstructArgs& a) {
  require_sm_dir(a.sm, "--sm");
  const SystemMatrix sm = read_sm(a.sm);
  std::vector<std::uint64_t> dims;
  const std::vector<cfloat> raw = read_complex64(a.meas, dims);
  if (raw.size() != sm.n_components())
    throw DataError("--meas has " + std::to_string(raw.size()) + " entries, the system matrix needs L·K = " +
                    std::to_string(sm.n_components()));
  const std::vector<cdouble> u(raw.begin(), raw.end());
  std::vector<double> sigma;
  if (!a.background.empty()) {
    std::vector<std::uint64_t> bd;
    const std::vector<cfloat> frames = read_complex64(a.background, bd);
    if (bd.size() != 3 || bd[1] * bd[2] != sm.n_components())
      throw DataError("--background must have dims (F, L, K) matching the system matrix");
    sigma = noise_std_from_frames(frames, bd[0], sm.n_components());
  } else if (a.noise_sigma > 0.0) {
    sigma = {a.noise_sigma};
  } else if (a.snr_threshold == 0.0) {
    sigma = {1.0};
  } else {
    throw ConfigError("SNR selection needs --noise-sigma F or --background FILE (or --snr-threshold 0)");
  }
  ReconstructionConfig cfg;
  cfg.snr_threshold = a.snr_threshold;
  cfg.lambda = a.lambda;
  cfg.n_iter = a.iters;
  cfg.nonneg = !a.no_nonneg;
  ReconstructionInfo info;
  const RealImage c = reconstruct(sm, u, cfg, sigma, &info);
  if (info.skipped_rows > 0) std::cerr << "warning: skipped " << info.skipped_rows << " all-zero rows\n";
  write_real_volume(a.out, c);
  std::cout << "wrote " << a.out << " (" << info.kept_rows << " rows kept)\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string gt, test, metrics = "psnr,ssim", group_by = "none", out;
  int threads = 0;
};

bool is_sm_dir(const fs::path& p) { return fs::exists(p / "meta.json"); }

int run_evaluate(const EvaluateArgs& a) {
  bool want_psnr = false;
  bool want_ssim = false;
  for (const auto& m : split_csv(a.metrics)) {
    if (m == "psnr") {
      want_psnr = true;
    } else if (m == "ssim") {
      want_ssim = true;
    } else {
      throw ConfigError("--metrics accepts psnr and ssim, got '" + m + "'");
    }
  }
  if (!want_psnr && !want_ssim) throw ConfigError("--metrics is empty");
  const GroupBy by = group_by_from_string(a.group_by);
  require_sm_dir(a.gt, "--gt");
  require_sm_dir(a.test, "--test");

  // Either two matrix directories or two dataset directories paired by entry name.
  std::vector<std::pair<fs::path, fs::path>> pairs;
  std::vector<std::string> names;
  if (is_sm_dir(a.gt) || is_sm_dir(a.test)) {
    pairs.emplace_back(a.gt, a.test);
    names.push_back(fs::path(a.test).filename().string());
  } else {
    std::vector<fs::path> entries;
    for (const auto& d : fs::directory_iterator(a.test)) {
      if (d.is_directory() && is_sm_dir(d.path())) entries.push_back(d.path());
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& t : entries) {
      const fs::path g = fs::path(a.gt) / t.filename();
      if (!is_sm_dir(g)) throw DataError("--gt has no entry '" + t.filename().string() + "' to pair with the test set");
      pairs.emplace_back(g, t);
      names.push_back(t.filename().string());
    }
    if (pairs.empty()) throw DataError("--test contains no system-matrix directories");
  }

  MetricReport report;
  report.group_by = a.group_by;
  if (want_psnr) report.metrics.push_back("psnr");
  if (want_ssim) report.metrics.push_back("ssim");
  const int threads = resolve_threads(a.threads);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SystemMatrix gt = read_sm(pairs[i].first);
    const SystemMatrix test = read_sm(pairs[i].second);
    const std::string key = group_key(test, by);
    for (auto& c : evaluate_pair(gt, test, want_psnr, want_ssim, threads, &report.skipped_zero)) {
      c.source = names[i];
      c.group = key;
      report.components.push_back(std::move(c));
    }
  }
  const nlohmann::json j = report.to_json();
  write_json_file(a.out, j);
  const auto& o = j["overall"];
  if (o.contains("psnr")) std::cout << "psnr mean " << o["psnr"]["mean"].get<double>() << " dB\n";
  if (o.contains("ssim")) std::cout << "ssim mean " << o["ssim"]["mean"].get<double>() << "\n";
  std::cout << "wrote " << a.out << " (" << report.components.size() << " components)\n";
  return 0;
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  std::string in, component, recon_slice, out;
  std::size_t z_slice = 0;
};

int run_plot(const PlotArgs& a) {
  if (a.component.empty() == a.recon_slice.empty()) throw ConfigError("give exactly one of --component L,K or --recon-slice AXIS,INDEX");
  if (!a.component.empty()) {
    require_sm_dir(a.in, "--in");
    const SystemMatrix sm = read_sm(a.in);
    const auto lk = parse_list<std::size_t>(a.component, 2, "--component");
    if (lk[0] >= sm.n_channels || lk[1] >= sm.n_freq)
      throw DataError("--component " + a.component + " is outside L=" + std::to_string(sm.n_channels) + ", K=" + std::to_string(sm.n_freq));
    if (a.z_slice >= sm.grid.nz) throw DataError("--z-slice is outside the grid");
    emit_component_plot(sm, lk[0], lk[1], a.z_slice, a.out);
  } else {
    const auto parts = split_csv(a.recon_slice);
    if (parts.size() != 2) throw ConfigError("--recon-slice needs AXIS,INDEX (axis x, y or z)");
    int axis = -1;
    if (parts[0] == "z") axis = 0;
    if (parts[0] == "y") axis = 1;
    if (parts[0] == "x") axis = 2;
    if (axis < 0) throw ConfigError("--recon-slice axis must be x, y or z, got '" + parts[0] + "'");
    const auto idx = parse_list<std::size_t>(parts[1], 1, "--recon-slice index");
    const RealImage v = read_real_volume(a.in);
    if (idx[0] >= v.shape()[axis]) throw DataError("--recon-slice index is outside the volume " + to_string(v.shape()));
    emit_volume_slice(v, axis, idx[0], a.out);
  }
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPI system-matrix simulation and restoration toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a system matrix from scanner/particle/calibration JSON");
  s->add_option("--scanner", sim.scanner, "Scanner JSON")->required();
  s->add_option("--particle", sim.particle, "Particle JSON")->required();
  s->add_option("--calib", sim.calib, "Calibration JSON")->required();
  s->add_option("--receive", sim.receive, "Receive-chain JSON (default: one ideal coil per active axis)");
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--quad-order", sim.quad_order, "Sphere quadrature order");
  s->add_option("--threads", sim.threads, "Worker threads (0 = all cores; SMK_THREADS overrides)");
  s->add_option("--seed", sim.seed, "Seed recorded in provenance");

  DatasetArgs ds;
  auto* d = app.add_subcommand("dataset", "Sample a manifest and simulate one split");
  d->add_option("--config", ds.config, "Sampling config JSON")->required();
  d->add_option("--out", ds.out, "Output directory")->required();
  d->add_option("--split", ds.split, "train, val or test")->required();
  d->add_option("--threads", ds.threads, "Worker threads");

  CorruptArgs co;
  auto* c = app.add_subcommand("corrupt", "Apply a corruption operator plus noise");
  c->add_option("--in", co.in, "Input system-matrix directory")->required();
  c->add_option("--task", co.task, "denoise, downsample or inpaint")->required();
  c->add_option("--sigma", co.sigma, "Noise std per real/imaginary part (unit-max GT)");
  c->add_option("--factors", co.factors, "Downsampling factors X,Y,Z");
  c->add_option("--mask-ratio", co.mask_ratio, "Missing fraction for inpainting");
  c->add_option("--mask-blocks", co.mask_blocks, "Number of contiguous mask blocks");
  c->add_option("--noise", co.noise, "synthetic or bg:FILE");
  c->add_option("--mixture", co.mixture, "Synthetic white,drift,burst weights");
  c->add_flag("--random-phase", co.random_phase, "Rotate each component by a random global phase");
  c->add_option("--seed", co.seed, "Seed")->required();
  c->add_option("--out", co.out, "Output directory")->required();
  c->add_option("--threads", co.threads, "Worker threads");

  RestoreArgs re;
  auto* r = app.add_subcommand("restore", "Classical restoration baselines");
  r->add_option("--in", re.in, "Input system-matrix directory")->required();
  r->add_option("--method", re.method, "dctf, cubic or biharmonic")->required();
  r->add_option("--omega", re.omega, "DCT-F threshold multiplier");
  r->add_option("--sigma", re.sigma, "Noise std or 'auto'");
  r->add_option("--background", re.background, "Background frames (F,L,K) for --sigma auto");
  r->add_option("--sigma-coefficient", re.sigma_coefficient, "Multiplier on background-estimated sigma");
  r->add_option("--target", re.target, "Cubic target grid X,Y,Z");
  r->add_option("--mask", re.mask, "Inpainting mask (default IN/mask.bin)");
  r->add_option("--out", re.out, "Output directory")->required();
  r->add_option("--threads", re.threads, "Worker threads");

  MeasureArgs me;
  auto* m = app.add_subcommand("measure", "Synthesize a measurement u = S c");
  m->add_option("--sm", me.sm, "System-matrix directory")->required();
  m->add_option("--phantom", me.phantom, "Concentration volume file");
  m->add_option("--delta", me.delta, "Unit delta at grid index X,Y,Z");
  m->add_option("--noise-sigma", me.noise_sigma, "Complex white noise std per part");
  m->add_option("--seed", me.seed, "Noise seed");
  m->add_option("--out", me.out, "Output measurement file")->required();

  ReconstructArgs rc;
  auto* k = app.add_subcommand("reconstruct", "Kaczmarz reconstruction of a measurement");
  k->add_option("--sm", rc.sm, "System-matrix directory")->required();
  k->add_option("--meas", rc.meas, "Measurement file (L,K)")->required();
  k->add_option("--snr-threshold", rc.snr_threshold, "Keep rows with SNR >= threshold");
  k->add_option("--lambda", rc.lambda, "Tikhonov weight");
  k->add_option("--iters", rc.iters, "Kaczmarz sweeps");
  k->add_option("--noise-sigma", rc.noise_sigma, "Noise std for SNR estimation");
  k->add_option("--background", rc.background, "Background frames (F,L,K) for SNR estimation");
  k->add_flag("--no-nonneg", rc.no_nonneg, "Disable the non-negativity projection");
  k->add_option("--out", rc.out, "Output volume file")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "PSNR/SSIM of a test set against ground truth");
  e->add_option("--gt", ev.gt, "Ground-truth matrix or dataset directory")->required();
  e->add_option("--test", ev.test, "Test matrix or dataset directory")->required();
  e->add_option("--metrics", ev.metrics, "psnr,ssim");
  e->add_option("--group-by", ev.group_by, "none, sigma, scale or size");
  e->add_option("--out", ev.out, "Report JSON")->required();
  e->add_option("--threads", ev.threads, "Worker threads");

  PlotArgs pl;
  auto* p = app.add_subcommand("plot", "Write a PGM magnitude image");
  p->add_option("--in", pl.in, "System-matrix directory or reconstruction file")->required();
  p->add_option("--component", pl.component, "Component L,K");
  p->add_option("--z-slice", pl.z_slice, "z index for 3D components");
  p->add_option("--recon-slice", pl.recon_slice, "AXIS,INDEX of a reconstruction");
  p->add_option("--out", pl.out, "Output .pgm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfig;
  }

  try {
    if (s->parsed()) return run_simulate(sim);
    if (d->parsed()) return run_dataset(ds);
    if (c->parsed()) return run_corrupt(co);
    if (r->parsed()) return run_restore(re);
    if (m->parsed()) return run_measure(me);
    if (k->parsed()) return run_reconstruct(rc);
    if (e->parsed()) return run_evaluate(ev);
    if (p->parsed()) return run_plot(pl);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
