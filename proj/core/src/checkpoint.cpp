#include "morphtag/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "morphtag/corpus.hpp"

namespace morphtag {

namespace {

template <typename U>
void put(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out += char((value >> (8 * i)) & 0xFF);
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= U(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return value;
  }

  std::string_view take(std::uint64_t n, const char* what) {
    need(n, what);
    const auto out = bytes_.substr(pos_, std::size_t(n));
    pos_ += std::size_t(n);
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n, const char* what) {
    if (n > bytes_.size() - pos_) {
      throw CheckpointError(CheckpointError::Kind::truncated,
                            source_ + ": truncated checkpoint while reading " + what);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::string source_;
};

}  // namespace

const TensorRecord* CheckpointData::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string serialize_checkpoint(const CheckpointData& data) {
  std::string out(kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = data.metadata.dump();
  put<std::uint64_t>(out, meta.size());
  out += meta;
  put<std::uint64_t>(out, data.tensors.size());
  for (const auto& t : data.tensors) {
    if (shape_size(t.shape) != t.values.size()) throw DimensionError("tensor '" + t.name + "' shape/data mismatch");
    put<std::uint32_t>(out, std::uint32_t(t.name.size()));
    out += t.name;
    put<std::uint8_t>(out, std::uint8_t(t.dtype));
    put<std::uint32_t>(out, std::uint32_t(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(out, d);
    for (double v : t.values) {
      if (t.dtype == DType::f32) {
        put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(float(v)));
      } else {
        put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  return out;
}

CheckpointData deserialize_checkpoint(std::string_view bytes, const std::string& source) {
  if (bytes.size() < kCheckpointMagic.size() || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw CheckpointError(CheckpointError::Kind::bad_magic, source + ": bad magic, not a morphtag checkpoint");
  }
  Reader in(bytes.substr(kCheckpointMagic.size()), source);
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::version_mismatch,
                          source + ": checkpoint format version " + std::to_string(version) +
                              " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  CheckpointData data;
  const auto meta_len = in.get<std::uint64_t>("metadata length");
  const auto meta = in.take(meta_len, "metadata");
  data.metadata = nlohmann::json::parse(meta, nullptr, false);
  if (data.metadata.is_discarded()) {
    throw CheckpointError(CheckpointError::Kind::malformed, source + ": checkpoint metadata is not valid JSON");
  }
  const auto count = in.get<std::uint64_t>("tensor count");
  for (std::uint64_t k = 0; k < count; ++k) {
    TensorRecord t;
    const auto name_len = in.get<std::uint32_t>("tensor name length");
    t.name = std::string(in.take(name_len, "tensor name"));
    const auto dtype = in.get<std::uint8_t>("dtype");
    if (dtype > 1) {
      throw CheckpointError(CheckpointError::Kind::malformed,
                            source + ": tensor '" + t.name + "' has unknown dtype " + std::to_string(dtype));
    }
    t.dtype = DType(dtype);
    const auto rank = in.get<std::uint32_t>("rank");
    std::uint64_t elements = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = in.get<std::uint64_t>("dims");
      t.shape.push_back(std::size_t(d));
      elements *= d;
    }
    const std::uint64_t width = t.dtype == DType::f32 ? 4 : 8;
    if (elements > bytes.size() / width + 1) {
      throw CheckpointError(CheckpointError::Kind::truncated, source + ": truncated checkpoint in tensor '" + t.name + "'");
    }
    t.values.resize(std::size_t(elements));
    for (auto& v : t.values) {
      if (t.dtype == DType::f32) {
        v = double(std::bit_cast<float>(in.get<std::uint32_t>("tensor data")));
      } else {
        v = std::bit_cast<double>(in.get<std::uint64_t>("tensor data"));
      }
    }
    data.tensors.push_back(std::move(t));
  }
  if (!in.done()) throw CheckpointError(CheckpointError::Kind::malformed, source + ": trailing bytes after tensor table");
  return data;
}

void write_checkpoint(const std::string& path, const CheckpointData& data) {
  write_file(path, serialize_checkpoint(data));
}

CheckpointData read_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path), path); }

}  // namespace morphtag
