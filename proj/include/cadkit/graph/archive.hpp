#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cadkit::graph {

enum class DType { F32, F64 };
const char* to_string(DType t);

struct Tensor {
  std::string name;
  DType dtype = DType::F32;
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major; F32 tensors hold float-representable values

  std::size_t numel() const;
};

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensors stored as a JSON header plus one little-endian row-major blob.
/// The header lists {name, dtype, shape, byte_offset} per tensor and the
/// blob's file name, which sits next to the header.
struct TensorArchive {
  std::vector<Tensor> tensors;

  const Tensor* find(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
};

/// Writes `header` and its blob (same stem, ".bin"). Values of F32 tensors
/// are rounded to float.
void write_archive(const TensorArchive& archive, const std::filesystem::path& header);
TensorArchive read_archive(const std::filesystem::path& header);

std::filesystem::path blob_path_for(const std::filesystem::path& header);

}  // namespace cadkit::graph
