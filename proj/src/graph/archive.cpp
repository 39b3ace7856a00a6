#include "cadkit/graph/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace cadkit::graph {

namespace {

std::size_t dtype_size(DType t) { return t == DType::F32 ? 4 : 8; }

DType dtype_from(const std::string& s) {
  if (s == "f32") return DType::F32;
  if (s == "f64") return DType::F64;
  throw ArchiveError("unsupported dtype '" + s + "'");
}

template <class U>
void put_le(std::string& out, U bits) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <class U>
U get_le(const unsigned char* p) {
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return bits;
}

}  // namespace

const char* to_string(DType t) { return t == DType::F32 ? "f32" : "f64"; }

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const Tensor* TensorArchive::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

const Tensor& TensorArchive::at(const std::string& name) const {
  if (const Tensor* t = find(name)) return *t;
  throw ArchiveError("archive has no tensor '" + name + "'");
}

std::filesystem::path blob_path_for(const std::filesystem::path& header) {
  auto p = header;
  p.replace_extension(".bin");
  return p;
}

void write_archive(const TensorArchive& archive, const std::filesystem::path& header) {
  const auto blob_path = blob_path_for(header);
  if (blob_path == header) throw ArchiveError("header path must not end in .bin");
  std::string blob;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& t : archive.tensors) {
    if (t.data.size() != t.numel())
      throw ArchiveError("tensor '" + t.name + "' has " + std::to_string(t.data.size()) +
                         " values for its shape");
    entries.push_back(
        {{"name", t.name}, {"dtype", to_string(t.dtype)}, {"shape", t.shape}, {"byte_offset", blob.size()}});
    for (double v : t.data) {
      if (t.dtype == DType::F32)
        put_le(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      else
        put_le(blob, std::bit_cast<std::uint64_t>(v));
    }
  }
  const nlohmann::json doc{{"tensors", entries}, {"blob", blob_path.filename().string()}};

  std::ofstream bin(blob_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw ArchiveError("cannot open " + blob_path.string() + " for writing");
  bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!bin) throw ArchiveError("failed writing " + blob_path.string());
  std::ofstream hdr(header, std::ios::trunc);
  if (!hdr) throw ArchiveError("cannot open " + header.string() + " for writing");
  hdr << doc.dump(2) << '\n';
  if (!hdr) throw ArchiveError("failed writing " + header.string());
}

TensorArchive read_archive(const std::filesystem::path& header) {
  std::ifstream hdr(header);
  if (!hdr) throw ArchiveError("cannot open " + header.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(hdr);
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveError(header.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("tensors") || !doc["tensors"].is_array() || !doc.contains("blob") ||
      !doc["blob"].is_string())
    throw ArchiveError(header.string() + ": header needs 'tensors' and 'blob'");

  const auto blob_path = header.parent_path() / doc["blob"].get<std::string>();
  std::ifstream bin(blob_path, std::ios::binary);
  if (!bin) throw ArchiveError("cannot open " + blob_path.string());
  const std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());

  TensorArchive archive;
  try {
    for (const auto& e : doc["tensors"]) {
      Tensor t;
      t.name = e.at("name").get<std::string>();
      t.dtype = dtype_from(e.at("dtype").get<std::string>());
      t.shape = e.at("shape").get<std::vector<std::size_t>>();
      const auto offset = e.at("byte_offset").get<std::size_t>();
      const std::size_t width = dtype_size(t.dtype);
      const std::size_t n = t.numel();
      if (offset > blob.size() || n > (blob.size() - offset) / width)
        throw ArchiveError("tensor '" + t.name + "' runs past the end of " + blob_path.string());
      t.data.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* p = bytes + offset + i * width;
        t.data[i] = t.dtype == DType::F32 ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)))
                                          : std::bit_cast<double>(get_le<std::uint64_t>(p));
      }
      archive.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveError(header.string() + ": " + e.what());
  }
  return archive;
}

}  // namespace cadkit::graph
