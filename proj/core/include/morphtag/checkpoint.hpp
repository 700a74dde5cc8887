#pragma once

// Binary checkpoint container:
//
//   "MTCK"  u32 version  u64 metadata_length  metadata (UTF-8 JSON)
//   u64 tensor_count
//   per tensor: u32 name_length, name, u8 dtype (0 = f32, 1 = f64),
//               u32 rank, u64 dims[rank], row-major data
//
// All integers and floats are little-endian.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphtag/error.hpp"
#include "morphtag/graph.hpp"
#include "morphtag/tensor.hpp"

namespace morphtag {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "MTCK";

// Values are widened to double in memory; narrowing back to f32 on write
// is exact.
struct TensorRecord {
  std::string name;
  DType dtype = DType::f32;
  Shape shape;
  std::vector<double> values;
};

struct CheckpointData {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const;
};

std::string serialize_checkpoint(const CheckpointData& data);
// Throws CheckpointError; nothing is returned unless the whole file parsed.
CheckpointData deserialize_checkpoint(std::string_view bytes, const std::string& source = "<memory>");

void write_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::string& path);

template <typename T>
TensorRecord to_record(const Parameter<T>& p) {
  TensorRecord r{p.name, dtype_of<T>(), p.value.shape(), {}};
  r.values.assign(p.value.data().begin(), p.value.data().end());
  return r;
}

template <typename T>
void assign_record(const TensorRecord& r, Parameter<T>& p) {
  if (r.shape != p.value.shape()) {
    throw CheckpointError(CheckpointError::Kind::malformed, "tensor '" + r.name + "' has shape " +
                                                                shape_string(r.shape) + ", model expects " +
                                                                shape_string(p.value.shape()));
  }
  for (std::size_t i = 0; i < r.values.size(); ++i) p.value[i] = T(r.values[i]);
}

}  // namespace morphtag
