#include "smk/storage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace smk {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'M', 'K', '1'};

template <typename T>
void append_le(std::vector<std::byte>& out, T value) {
  std::array<std::byte, sizeof(T)> bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <typename T>
T load_le(const std::byte* p) {
  std::array<std::byte, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

// Payload elements are stored little-endian; `scalar` is the size of one real scalar.
void to_le_inplace(std::span<std::byte> data, std::size_t scalar) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i + scalar <= data.size(); i += scalar) std::reverse(data.begin() + i, data.begin() + i + scalar);
  } else {
    (void)data;
    (void)scalar;
  }
}

std::size_t scalar_size(DType t) { return t == DType::Complex64 ? 4 : dtype_size(t); }

std::vector<std::byte> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw DataError("failed reading '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const fs::path& path, std::span<const std::byte> header, std::span<const std::byte> payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

template <typename T>
TensorFile make_tensor(DType dtype, const std::vector<std::uint64_t>& dims, std::span<const T> values) {
  TensorFile t;
  t.dtype = dtype;
  t.dims = dims;
  if (t.element_count() != values.size())
    throw DataError("tensor dims imply " + std::to_string(t.element_count()) + " elements, got " + std::to_string(values.size()));
  t.payload.resize(values.size_bytes());
  std::memcpy(t.payload.data(), values.data(), values.size_bytes());
  to_le_inplace(t.payload, scalar_size(dtype));
  return t;
}

template <typename T>
std::vector<T> unpack_tensor(TensorFile& t, DType expected, const fs::path& path, std::vector<std::uint64_t>& dims) {
  if (t.dtype != expected)
    throw DataError("'" + path.string() + "' holds " + to_string(t.dtype) + ", expected " + to_string(expected));
  to_le_inplace(t.payload, scalar_size(expected));
  std::vector<T> out(t.element_count());
  std::memcpy(out.data(), t.payload.data(), t.payload.size());
  dims = t.dims;
  return out;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw ConfigError(what + ": unknown key '" + key + "'");
  }
}

template <typename T>
T required(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw ConfigError(what + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(what + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T optional(const json& j, const char* key, T fallback, const std::string& what) {
  if (!j.contains(key)) return fallback;
  return required<T>(j, key, what);
}

Vec3 vec3_from(const json& j, const char* key, const std::string& what) {
  const auto v = required<std::vector<double>>(j, key, what);
  if (v.size() != 3) throw ConfigError(what + ": '" + key + "' must have 3 entries");
  return Vec3(v[0], v[1], v[2]);
}

json vec3_to(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::Complex64: return 8;
    case DType::Float32: return 4;
    case DType::UInt8: return 1;
    case DType::Float64: return 8;
  }
  throw DataError("unknown dtype");
}

std::string to_string(DType t) {
  switch (t) {
    case DType::Complex64: return "complex64";
    case DType::Float32: return "float32";
    case DType::UInt8: return "uint8";
    case DType::Float64: return "float64";
  }
  return "unknown";
}

std::size_t TensorFile::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

void write_tensor(const fs::path& path, const TensorFile& tensor) {
  if (tensor.payload.size() != tensor.element_count() * dtype_size(tensor.dtype))
    throw DataError("tensor payload size does not match its dims");
  std::vector<std::byte> header;
  for (char c : kMagic) header.push_back(std::byte(c));
  append_le<std::uint32_t>(header, static_cast<std::uint32_t>(tensor.dtype));
  append_le<std::uint32_t>(header, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) append_le<std::uint64_t>(header, d);
  write_file_bytes(path, header, tensor.payload);
}

TensorFile read_tensor(const fs::path& path) {
  const std::vector<std::byte> bytes = read_file_bytes(path);
  const std::string where = "'" + path.string() + "'";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError(where + " is not a tensor file (bad magic)");
  const auto code = load_le<std::uint32_t>(bytes.data() + 4);
  const auto ndim = load_le<std::uint32_t>(bytes.data() + 8);
  if (code < 1 || code > 4) throw DataError(where + ": unknown dtype code " + std::to_string(code) + " (foreign byte order?)");
  if (ndim > 16) throw DataError(where + ": implausible rank " + std::to_string(ndim) + " (foreign byte order?)");
  TensorFile t;
  t.dtype = static_cast<DType>(code);
  const std::size_t header = 12 + 8 * std::size_t(ndim);
  if (bytes.size() < header) throw DataError(where + ": truncated header");
  // Guard the element count against overflow before trusting it.
  std::size_t count = 1;
  const std::size_t limit = bytes.size();
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const auto d = load_le<std::uint64_t>(bytes.data() + 12 + 8 * i);
    t.dims.push_back(d);
    if (d != 0 && count > limit / d) throw DataError(where + ": dims exceed file size (truncated or corrupt)");
    count *= static_cast<std::size_t>(d);
  }
  const std::size_t expected = count * dtype_size(t.dtype);
  if (bytes.size() - header != expected)
    throw DataError(where + ": payload has " + std::to_string(bytes.size() - header) + " bytes, dims imply " + std::to_string(expected) +
                    " (truncated or corrupt file)");
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

void write_complex64(const fs::path& path, const std::vector<std::uint64_t>& dims, std::span<const cfloat> values) {
  write_tensor(path, make_tensor(DType::Complex64, dims, values));
}

std::vector<cfloat> read_complex64(const fs::path& path, std::vector<std::uint64_t>& dims) {
  TensorFile t = read_tensor(path);
  return unpack_tensor<cfloat>(t, DType::Complex64, path, dims);
}

void write_float32(const fs::path& path, const std::vector<std::uint64_t>& dims, std::span<const float> values) {
  write_tensor(path, make_tensor(DType::Float32, dims, values));
}

std::vector<float> read_float32(const fs::path& path, std::vector<std::uint64_t>& dims) {
  TensorFile t = read_tensor(path);
  return unpack_tensor<float>(t, DType::Float32, path, dims);
}

void write_float64(const fs::path& path, const std::vector<std::uint64_t>& dims, std::span<const double> values) {
  write_tensor(path, make_tensor(DType::Float64, dims, values));
}

std::vector<double> read_float64(const fs::path& path, std::vector<std::uint64_t>& dims) {
  TensorFile t = read_tensor(path);
  return unpack_tensor<double>(t, DType::Float64, path, dims);
}

void write_mask(const fs::path& path, const Mask& mask) {
  const Shape3& s = mask.shape();
  write_tensor(path, make_tensor(DType::UInt8, {s.nz, s.ny, s.nx}, std::span<const std::uint8_t>(mask.values())));
}

Mask read_mask(const fs::path& path) {
  TensorFile t = read_tensor(path);
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> v = unpack_tensor<std::uint8_t>(t, DType::UInt8, path, dims);
  if (dims.size() != 3) throw DataError("'" + path.string() + "': mask must have 3 dims (N_z, N_y, N_x)");
  for (auto b : v) {
    if (b > 1) throw DataError("'" + path.string() + "': mask values must be 0 or 1");
  }
  return Mask(Shape3{dims[0], dims[1], dims[2]}, std::move(v));
}

void write_real_volume(const fs::path& path, const RealImage& image) {
  std::vector<float> v(image.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(image[i]);
  const Shape3& s = image.shape();
  write_float32(path, {s.nz, s.ny, s.nx}, v);
}

RealImage read_real_volume(const fs::path& path) {
  std::vector<std::uint64_t> dims;
  const std::vector<float> v = read_float32(path, dims);
  if (dims.size() != 3) throw DataError("'" + path.string() + "': volume must have 3 dims (N_z, N_y, N_x)");
  RealImage img(Shape3{dims[0], dims[1], dims[2]});
  for (std::size_t i = 0; i < v.size(); ++i) img[i] = v[i];
  return img;
}

json to_json(const ScannerSpec& s) {
  return json{{"gradients", vec3_to(s.gradients)},
              {"gradient_unit", "A/m^2"},
              {"df_amplitudes", vec3_to(s.df_amplitudes)},
              {"amplitude_unit", "A/m"},
              {"df_dividers", s.df_dividers},
              {"base_frequency", s.base_frequency},
              {"sampling_rate", s.sampling_rate}};
}

ScannerSpec scanner_from_json(const json& j) {
  const std::string what = "scanner";
  check_keys(j, {"gradients", "gradient_unit", "df_amplitudes", "amplitude_unit", "df_dividers", "base_frequency", "sampling_rate"},
             what);
  ScannerSpec s;
  const std::string gu = optional<std::string>(j, "gradient_unit", "T/m/mu0", what);
  const std::string au = optional<std::string>(j, "amplitude_unit", "mT/mu0", what);
  Vec3 g = vec3_from(j, "gradients", what);
  Vec3 a = vec3_from(j, "df_amplitudes", what);
  if (gu == "T/m/mu0") {
    for (int i = 0; i < 3; ++i) g[i] = gradient_from_tesla_per_meter(g[i]);
  } else if (gu != "A/m^2") {
    throw ConfigError("scanner: gradient_unit must be 'T/m/mu0' or 'A/m^2', got '" + gu + "'");
  }
  if (au == "mT/mu0") {
    for (int i = 0; i < 3; ++i) a[i] = field_from_millitesla(a[i]);
  } else if (au != "A/m") {
    throw ConfigError("scanner: amplitude_unit must be 'mT/mu0' or 'A/m', got '" + au + "'");
  }
  s.gradients = g;
  s.df_amplitudes = a;
  if (j.contains("df_dividers")) {
    const auto d = required<std::vector<std::int64_t>>(j, "df_dividers", what);
    if (d.size() != 3) throw ConfigError("scanner: 'df_dividers' must have 3 entries");
    for (int i = 0; i < 3; ++i) {
      if (d[i] <= 0) throw ConfigError("scanner: dividers must be positive integers");
      s.df_dividers[i] = static_cast<std::uint32_t>(d[i]);
    }
  }
  s.base_frequency = optional<double>(j, "base_frequency", s.base_frequency, what);
  s.sampling_rate = optional<double>(j, "sampling_rate", s.sampling_rate, what);
  validate(s);
  return s;
}

json to_json(const ParticleSpec& p) {
  json j{{"core_diameter", p.core_diameter},
         {"saturation_magnetization", p.saturation_magnetization},
         {"temperature", p.temperature},
         {"anisotropy_constant", p.anisotropy_constant}};
  if (const auto* f = std::get_if<FluidParticle>(&p.mobility)) {
    j["mobility"] = "fluid";
    j["q"] = f->q;
  } else {
    j["mobility"] = "immobilized";
    j["easy_axis"] = vec3_to(std::get<ImmobilizedParticle>(p.mobility).easy_axis);
  }
  return j;
}

ParticleSpec particle_from_json(const json& j) {
  const std::string what = "particle";
  check_keys(j, {"core_diameter", "saturation_magnetization", "temperature", "anisotropy_constant", "mobility", "q", "easy_axis"}, what);
  ParticleSpec p;
  p.core_diameter = required<double>(j, "core_diameter", what);
  p.saturation_magnetization = optional<double>(j, "saturation_magnetization", p.saturation_magnetization, what);
  p.temperature = optional<double>(j, "temperature", p.temperature, what);
  p.anisotropy_constant = optional<double>(j, "anisotropy_constant", p.anisotropy_constant, what);
  const std::string mob = optional<std::string>(j, "mobility", "immobilized", what);
  if (mob == "fluid") {
    if (j.contains("easy_axis")) throw ConfigError("particle: 'easy_axis' only applies to immobilized particles");
    p.mobility = FluidParticle{optional<double>(j, "q", 1.0, what)};
  } else if (mob == "immobilized") {
    if (j.contains("q")) throw ConfigError("particle: 'q' only applies to fluid particles");
    p.mobility = ImmobilizedParticle{j.contains("easy_axis") ? vec3_from(j, "easy_axis", what) : Vec3(Vec3::UnitZ())};
  } else {
    throw ConfigError("particle: mobility must be 'fluid' or 'immobilized', got '" + mob + "'");
  }
  validate(p);
  return p;
}

json to_json(const CalibrationSpec& c) {
  return json{{"fov", vec3_to(c.fov)}, {"center", vec3_to(c.center)}, {"grid_size", c.grid_size}};
}

CalibrationSpec calibration_from_json(const json& j) {
  const std::string what = "calibration";
  check_keys(j, {"fov", "center", "grid_size"}, what);
  CalibrationSpec c;
  c.fov = vec3_from(j, "fov", what);
  if (j.contains("center")) c.center = vec3_from(j, "center", what);
  const auto g = required<std::vector<std::int64_t>>(j, "grid_size", what);
  if (g.size() != 3) throw ConfigError("calibration: 'grid_size' must have 3 entries (x, y, z)");
  for (int i = 0; i < 3; ++i) {
    if (g[i] <= 0) throw ConfigError("calibration: grid sizes must be positive");
    c.grid_size[i] = static_cast<std::size_t>(g[i]);
  }
  validate(c);
  return c;
}

json to_json(const ReceiveChain& r) {
  json coils = json::array();
  for (const auto& p : r.coil_sensitivities) coils.push_back(vec3_to(p));
  json j{{"coil_sensitivities", coils}};
  if (!r.transfer_function.empty()) {
    json tf = json::array();
    for (const auto& a : r.transfer_function) tf.push_back(json::array({a.real(), a.imag()}));
    j["transfer_function"] = tf;
  }
  return j;
}

ReceiveChain receive_from_json(const json& j) {
  const std::string what = "receive";
  check_keys(j, {"coil_sensitivities", "transfer_function"}, what);
  ReceiveChain r;
  for (const auto& c : required<std::vector<std::vector<double>>>(j, "coil_sensitivities", what)) {
    if (c.size() != 3) throw ConfigError("receive: coil sensitivities must have 3 entries");
    r.coil_sensitivities.emplace_back(c[0], c[1], c[2]);
  }
  if (j.contains("transfer_function")) {
    for (const auto& a : required<std::vector<std::vector<double>>>(j, "transfer_function", what)) {
      if (a.size() != 2) throw ConfigError("receive: transfer function entries must be [re, im]");
      r.transfer_function.emplace_back(a[0], a[1]);
    }
  }
  return r;
}

json to_json(const ProvenanceStep& step) {
  return json{{"kind", to_string(step.kind)}, {"seed", step.seed}, {"descriptor", step.descriptor}};
}

ProvenanceStep provenance_from_json(const json& j) {
  ProvenanceStep s;
  try {
    s.kind = provenance_kind_from_string(j.at("kind").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.descriptor = j.at("descriptor");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed provenance entry: ") + e.what());
  }
  return s;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

json sm_metadata(const SystemMatrix& sm) {
  json prov = json::array();
  json seeds = json::array();
  for (const auto& p : sm.provenance) {
    prov.push_back(to_json(p));
    seeds.push_back(p.seed);
  }
  return json{{"schema_version", kSchemaVersion},
              {"dtype", "complex64"},
              {"dims", {sm.n_channels, sm.n_freq, sm.grid.nz, sm.grid.ny, sm.grid.nx}},
              {"dim_names", {"channel", "frequency", "z", "y", "x"}},
              {"scanner", to_json(sm.scanner)},
              {"particle", to_json(sm.particle)},
              {"calibration", to_json(sm.calibration)},
              {"receive", to_json(sm.receive)},
              {"provenance", prov},
              {"seeds", seeds},
              {"has_scales", !sm.scales.empty()},
              {"units",
               {{"data", "V/(A/m) per unit concentration (mu0 * dm/dt spectrum)"},
                {"gradients", "A/m^2"},
                {"df_amplitudes", "A/m"},
                {"frequencies", "Hz"},
                {"lengths", "m"},
                {"core_diameter", "m"},
                {"saturation_magnetization", "A/m"},
                {"temperature", "K"},
                {"anisotropy_constant", "J/m^3"}}}};
}

void write_sm(const fs::path& dir, const SystemMatrix& sm) {
  sm.check_consistency();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
  write_json_file(dir / "meta.json", sm_metadata(sm));
  write_complex64(dir / "data.bin", {sm.n_channels, sm.n_freq, sm.grid.nz, sm.grid.ny, sm.grid.nx}, sm.data);
  if (!sm.scales.empty()) {
    std::vector<double> s;
    s.reserve(sm.scales.size() * 3);
    for (const auto& c : sm.scales) {
      s.push_back(c.gt_scale);
      s.push_back(c.renorm);
      s.push_back(c.phase);
    }
    write_float64(dir / "scales.bin", {sm.n_channels, sm.n_freq, 3}, s);
  } else {
    fs::remove(dir / "scales.bin", ec);
  }
}

SystemMatrix read_sm(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a system-matrix directory");
  json meta;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) throw DataError("'" + (dir / "meta.json").string() + "' is missing");
    try {
      meta = json::parse(in);
    } catch (const json::parse_error& e) {
      throw DataError("meta.json is not valid JSON: " + std::string(e.what()));
    }
  }
  if (!meta.is_object() || !meta.contains("schema_version") || !meta["schema_version"].is_number_integer())
    throw DataError("meta.json has no integer schema_version");
  const int version = meta["schema_version"].get<int>();
  if (version > kSchemaVersion)
    throw DataError("meta.json has schema_version " + std::to_string(version) + ", newer than supported version " +
                    std::to_string(kSchemaVersion) + "; upgrade the toolkit");
  if (version < 1) throw DataError("meta.json has invalid schema_version " + std::to_string(version));

  SystemMatrix sm;
  std::vector<std::uint64_t> dims;
  try {
    sm.scanner = scanner_from_json(meta.at("scanner"));
    sm.particle = particle_from_json(meta.at("particle"));
    sm.calibration = calibration_from_json(meta.at("calibration"));
    sm.receive = receive_from_json(meta.at("receive"));
    for (const auto& p : meta.at("provenance")) sm.provenance.push_back(provenance_from_json(p));
    dims = meta.at("dims").get<std::vector<std::uint64_t>>();
  } catch (const ConfigError& e) {
    throw DataError(std::string("meta.json: ") + e.what());
  } catch (const json::exception& e) {
    throw DataError(std::string("meta.json: ") + e.what());
  }
  if (dims.size() != 5) throw DataError("meta.json: dims must have 5 entries (L, K, N_z, N_y, N_x)");

  std::vector<std::uint64_t> data_dims;
  std::vector<cfloat> data = read_complex64(dir / "data.bin", data_dims);
  if (data_dims != dims) throw DataError("data.bin dims disagree with meta.json");
  sm.n_channels = dims[0];
  sm.n_freq = dims[1];
  sm.grid = Shape3{dims[2], dims[3], dims[4]};
  sm.data = std::move(data);

  if (meta.value("has_scales", false)) {
    std::vector<std::uint64_t> sdims;
    const std::vector<double> s = read_float64(dir / "scales.bin", sdims);
    if (sdims != std::vector<std::uint64_t>{dims[0], dims[1], 3}) throw DataError("scales.bin dims disagree with meta.json");
    sm.scales.resize(dims[0] * dims[1]);
    for (std::size_t i = 0; i < sm.scales.size(); ++i) sm.scales[i] = ComponentScale{s[3 * i], s[3 * i + 1], s[3 * i + 2]};
  }
  sm.check_consistency();
  return sm;
}

void write_pgm(const fs::path& path, std::span<const double> values, std::size_t width, std::size_t height) {
  if (values.size() != width * height) throw DataError("plot: value count does not match width × height");
  double lo = 0.0;
  double hi = 0.0;
  if (!values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  std::vector<std::byte> pixels(values.size(), std::byte{0});
  if (hi > lo) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      pixels[i] = std::byte(static_cast<unsigned char>(std::lround(255.0 * (values[i] - lo) / (hi - lo))));
    }
  }
  std::ostringstream header;
  header << "P5\n" << width << " " << height << "\n255\n";
  const std::string h = header.str();
  write_file_bytes(path, std::as_bytes(std::span(h.data(), h.size())), pixels);
}

void emit_component_plot(const SystemMatrix& sm, std::size_t l, std::size_t k, std::size_t z_slice, const fs::path& path) {
  if (l >= sm.n_channels || k >= sm.n_freq)
    throw DataError("plot: component (" + std::to_string(l) + "," + std::to_string(k) + ") out of range (L=" +
                    std::to_string(sm.n_channels) + ", K=" + std::to_string(sm.n_freq) + ")");
  if (z_slice >= sm.grid.nz) throw DataError("plot: z slice " + std::to_string(z_slice) + " out of range");
  const std::size_t off = sm.component_offset(l, k) + z_slice * sm.grid.ny * sm.grid.nx;
  std::vector<double> mag(sm.grid.ny * sm.grid.nx);
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(cdouble(sm.data[off + i]));
  write_pgm(path, mag, sm.grid.nx, sm.grid.ny);
}

void emit_volume_slice(const RealImage& volume, int axis, std::size_t index, const fs::path& path) {
  const Shape3& s = volume.shape();
  if (axis < 0 || axis > 2) throw ConfigError("plot: slice axis must be 0 (z), 1 (y) or 2 (x)");
  if (index >= s[axis]) throw DataError("plot: slice index " + std::to_string(index) + " out of range for axis of size " + std::to_string(s[axis]));
  std::vector<double> v;
  std::size_t w = 0;
  std::size_t h = 0;
  if (axis == 0) {
    w = s.nx;
    h = s.ny;
    for (std::size_t y = 0; y < s.ny; ++y)
      for (std::size_t x = 0; x < s.nx; ++x) v.push_back(std::abs(volume.at(index, y, x)));
  } else if (axis == 1) {
    w = s.nx;
    h = s.nz;
    for (std::size_t z = 0; z < s.nz; ++z)
      for (std::size_t x = 0; x < s.nx; ++x) v.push_back(std::abs(volume.at(z, index, x)));
  } else {
    w = s.ny;
    h = s.nz;
    for (std::size_t z = 0; z < s.nz; ++z)
      for (std::size_t y = 0; y < s.ny; ++y) v.push_back(std::abs(volume.at(z, y, index)));
  }
  write_pgm(path, v, w, h);
}

}  // namespace smk
