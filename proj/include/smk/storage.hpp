#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smk/system_matrix.hpp"

namespace smk {

namespace fs = std::filesystem;

// Binary tensor files: "SMK1", u32 dtype, u32 ndim, ndim × u64 dims, payload.
// Everything little-endian; complex values interleaved (re, im).
enum class DType : std::uint32_t { Complex64 = 1, Float32 = 2, UInt8 = 3, Float64 = 4 };

std::size_t dtype_size(DType t);
std::string to_string(DType t);

struct TensorFile {
  DType dtype = DType::Float32;
  std::vector<std::uint64_t> dims;
  std::vector<std::byte> payload;

  std::size_t element_count() const;
};

void write_tensor(const fs::path& path, const TensorFile& tensor);
TensorFile read_tensor(const fs::path& path);

void write_complex64(const fs::path& path, const std::vector<std::uint64_t>& dims, std::span<const cfloat> values);
std::vector<cfloat> read_complex64(const fs::path& path, std::vector<std::uint64_t>& dims);
void write_float32(const fs::path& path, const std::vector<std::uint64_t>& dims, std::span<const float> values);
std::vector<float> read_float32(const fs::path& path, std::vector<std::uint64_t>& dims);
void write_float64(const fs::path& path, const std::vector<std::uint64_t>& dims, std::span<const double> values);
std::vector<double> read_float64(const fs::path& path, std::vector<std::uint64_t>& dims);

void write_mask(const fs::path& path, const Mask& mask);
Mask read_mask(const fs::path& path);

/// Real volume as float32 with dims (N_z, N_y, N_x).
void write_real_volume(const fs::path& path, const RealImage& image);
RealImage read_real_volume(const fs::path& path);

// Spec documents. Files written by the toolkit use SI units (A/m², A/m, m); user files
// may instead give gradients in T/m/μ₀ and amplitudes in mT/μ₀ via the unit fields.
nlohmann::json to_json(const ScannerSpec& s);
nlohmann::json to_json(const ParticleSpec& p);
nlohmann::json to_json(const CalibrationSpec& c);
nlohmann::json to_json(const ReceiveChain& r);
nlohmann::json to_json(const ProvenanceStep& step);
ScannerSpec scanner_from_json(const nlohmann::json& j);
ParticleSpec particle_from_json(const nlohmann::json& j);
CalibrationSpec calibration_from_json(const nlohmann::json& j);
ReceiveChain receive_from_json(const nlohmann::json& j);
ProvenanceStep provenance_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const fs::path& path);
/// Deterministic formatting (sorted keys, two-space indent, trailing newline).
void write_json_file(const fs::path& path, const nlohmann::json& j);

inline constexpr int kSchemaVersion = 1;

nlohmann::json sm_metadata(const SystemMatrix& sm);

/// Directory with meta.json, data.bin and, for corrupted/restored matrices, scales.bin.
void write_sm(const fs::path& dir, const SystemMatrix& sm);
SystemMatrix read_sm(const fs::path& dir);

/// Binary PGM (P5, maxval 255), row-major, min-max scaled. A constant image maps to 0.
void write_pgm(const fs::path& path, std::span<const double> values, std::size_t width, std::size_t height);

/// Magnitude of one (l, k) component; 3D grids show the slice z = `z_slice`.
void emit_component_plot(const SystemMatrix& sm, std::size_t l, std::size_t k, std::size_t z_slice, const fs::path& path);
/// Slice of a real volume perpendicular to `axis` (0 = z, 1 = y, 2 = x) at `index`.
void emit_volume_slice(const RealImage& volume, int axis, std::size_t index, const fs::path& path);

}  // namespace smk
