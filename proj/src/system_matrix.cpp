#include "smk/system_matrix.hpp"

#include <algorithm>
#include <cmath>

namespace smk {

ReceiveChain default_receive(const ScannerSpec& scanner) {
  ReceiveChain rc;
  for (int i = 0; i < 3; ++i) {
    if (scanner.axis_active(i)) rc.coil_sensitivities.push_back(Vec3::Unit(i));
  }
  return rc;
}

void validate(const ReceiveChain& receive, std::size_t n_freq) {
  if (receive.coil_sensitivities.empty() || receive.coil_sensitivities.size() > 3)
    throw ConfigError("receive: between 1 and 3 coil channels are supported");
  for (const auto& p : receive.coil_sensitivities) {
    if (std::abs(p.norm() - 1.0) > 1e-12) throw ConfigError("receive: coil sensitivities must be unit vectors");
  }
  if (!receive.transfer_function.empty() && receive.transfer_function.size() != n_freq)
    throw ConfigError("receive: transfer function has " + std::to_string(receive.transfer_function.size()) +
                      " entries, expected " + std::to_string(n_freq));
}

std::string to_string(ProvenanceStep::Kind kind) {
  switch (kind) {
    case ProvenanceStep::Kind::Simulated: return "simulated";
    case ProvenanceStep::Kind::Corrupted: return "corrupted";
    case ProvenanceStep::Kind::Restored: return "restored";
  }
  return "unknown";
}

ProvenanceStep::Kind provenance_kind_from_string(const std::string& s) {
  if (s == "simulated") return ProvenanceStep::Kind::Simulated;
  if (s == "corrupted") return ProvenanceStep::Kind::Corrupted;
  if (s == "restored") return ProvenanceStep::Kind::Restored;
  throw DataError("unknown provenance kind '" + s + "'");
}

void SystemMatrix::allocate(std::size_t channels, std::size_t freqs, Shape3 shape) {
  n_channels = channels;
  n_freq = freqs;
  grid = shape;
  data.assign(channels * freqs * shape.size(), cfloat(0.0f, 0.0f));
}

ComplexImage SystemMatrix::component(std::size_t l, std::size_t k) const {
  ComplexImage img(grid);
  const std::size_t off = component_offset(l, k);
  for (std::size_t i = 0; i < grid.size(); ++i) img[i] = cdouble(data[off + i]);
  return img;
}

void SystemMatrix::set_component(std::size_t l, std::size_t k, const ComplexImage& img) {
  if (!(img.shape() == grid)) throw DataError("component shape " + to_string(img.shape()) + " does not match grid " + to_string(grid));
  const std::size_t off = component_offset(l, k);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    data[off + i] = cfloat(static_cast<float>(img[i].real()), static_cast<float>(img[i].imag()));
  }
}

double SystemMatrix::component_max_abs(std::size_t l, std::size_t k) const {
  const std::size_t off = component_offset(l, k);
  double m = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) m = std::max(m, double(std::abs(data[off + i])));
  return m;
}

void SystemMatrix::check_consistency() const {
  if (data.size() != n_channels * n_freq * grid.size())
    throw DataError("system matrix payload has " + std::to_string(data.size()) + " entries, dims imply " +
                    std::to_string(n_channels * n_freq * grid.size()));
  if (!(calibration.shape() == grid))
    throw DataError("system matrix grid " + to_string(grid) + " disagrees with calibration grid " + to_string(calibration.shape()));
  if (receive.n_channels() != n_channels)
    throw DataError("system matrix has " + std::to_string(n_channels) + " channels but receive chain has " +
                    std::to_string(receive.n_channels()));
  if (!scales.empty() && scales.size() != n_components())
    throw DataError("component scale table has wrong length");
  for (const auto& v : data) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DataError("system matrix contains non-finite values");
  }
}

ComplexImage to_reference_units(const SystemMatrix& sm, std::size_t l, std::size_t k) {
  ComplexImage img = sm.component(l, k);
  if (sm.scales.empty()) return img;
  const cdouble f = sm.scales[l * sm.n_freq + k].forward();
  if (f == cdouble(0.0)) return img;
  for (auto& v : img.values()) v /= f;
  return img;
}

}  // namespace smk
