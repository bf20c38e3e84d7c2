#include "ria/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ria/error.hpp"

namespace ria {

namespace {

class ByteWriter {
 public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, const char* what) : data_(data), what_(what) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("truncated");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }

  std::size_t remaining() const { return data_.size() - pos_; }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorKind::format, std::string(what_) + ": " + why);
  }

 private:
  std::span<const std::uint8_t> data_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* field) {
  if (v > 0xFFFFFFFFu) throw Error(ErrorKind::format, std::string(field) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

// ---------------------------------------------------------------------------
// RIAF

std::vector<std::uint8_t> encode_feature_file(const Matrix& features) {
  ByteWriter w;
  w.bytes("RIAF");
  w.u16(kFeatureFileVersion);
  w.u32(checked_u32(features.rows(), "n_patches"));
  w.u32(checked_u32(features.cols(), "dim_in"));
  for (double v : features.data()) w.f32(v);
  return w.take();
}

FeatureMatrix decode_feature_file(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "RIAF");
  if (r.bytes(4) != "RIAF") r.fail("bad magic (expected RIAF)");
  const std::uint16_t version = r.u16();
  if (version != kFeatureFileVersion) r.fail("unsupported version " + std::to_string(version));
  const std::uint64_t n = r.u32();
  const std::uint64_t dim = r.u32();
  if (r.remaining() != n * dim * 4) {
    std::ostringstream msg;
    msg << "payload is " << r.remaining() << " bytes, header declares " << n << "x" << dim
        << " float32 (" << n * dim * 4 << " bytes)";
    r.fail(msg.str());
  }
  Matrix m(n, dim);
  for (double& v : m.data()) {
    v = r.f32();
    if (!std::isfinite(v)) r.fail("non-finite value in payload");
  }
  try {
    return FeatureMatrix(std::move(m));
  } catch (const Error& e) {
    r.fail(e.what());
  }
}

FeatureMatrix read_feature_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_feature_file(bytes);
  } catch (const Error& e) {
    throw e.with_stage(path.filename().string());
  }
}

void write_feature_file(const std::filesystem::path& path, const Matrix& features) {
  write_file_atomic(path, encode_feature_file(features));
}

// ---------------------------------------------------------------------------
// RIAD

std::vector<std::uint8_t> encode_archive(const DescriptorArchive& archive) {
  const std::size_t dim = archive.items.empty() ? 0 : archive.items.front().descriptor.dim();
  nlohmann::json meta = archive.metadata;
  meta["ids"] = nlohmann::json::array();
  for (const auto& item : archive.items) {
    if (item.descriptor.dim() != dim) {
      throw Error(ErrorKind::dimension, "archive: descriptor dims differ");
    }
    meta["ids"].push_back(item.id);
  }

  ByteWriter w;
  w.bytes("RIAD");
  w.u16(kArchiveVersion);
  w.u32(checked_u32(archive.items.size(), "count"));
  w.u32(checked_u32(dim, "dim"));
  for (const auto& item : archive.items)
    for (double v : item.descriptor.values()) w.f32(v);
  const std::string text = meta.dump();
  w.u32(checked_u32(text.size(), "metadata length"));
  w.bytes(text);
  return w.take();
}

DescriptorArchive decode_archive(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "RIAD");
  if (r.bytes(4) != "RIAD") r.fail("bad magic (expected RIAD)");
  const std::uint16_t version = r.u16();
  if (version != kArchiveVersion) r.fail("unsupported version " + std::to_string(version));
  const std::uint64_t count = r.u32();
  const std::uint64_t dim = r.u32();
  r.need(count * dim * 4);

  std::vector<std::vector<double>> rows(count, std::vector<double>(dim));
  for (auto& row : rows)
    for (double& v : row) v = r.f32();

  const std::uint32_t meta_len = r.u32();
  if (r.remaining() != meta_len) r.fail("metadata length does not match trailing bytes");
  DescriptorArchive archive;
  try {
    archive.metadata = nlohmann::json::parse(r.bytes(meta_len));
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("metadata json: ") + e.what());
  }
  if (!archive.metadata.is_object() || !archive.metadata.contains("ids") ||
      !archive.metadata["ids"].is_array() || archive.metadata["ids"].size() != count) {
    r.fail("metadata must hold one id per descriptor");
  }
  const auto ids = archive.metadata["ids"].get<std::vector<std::string>>();
  archive.metadata.erase("ids");
  for (std::size_t i = 0; i < count; ++i) {
    try {
      archive.items.push_back({ids[i], GlobalDescriptor::from_unit(std::move(rows[i]))});
    } catch (const Error& e) {
      r.fail("descriptor '" + ids[i] + "': " + e.what());
    }
  }
  return archive;
}

DescriptorArchive read_archive(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_archive(bytes);
  } catch (const Error& e) {
    throw e.with_stage(path.filename().string());
  }
}

void write_archive(const std::filesystem::path& path, const DescriptorArchive& archive) {
  write_file_atomic(path, encode_archive(archive));
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::io, "cannot rename " + tmp.string() + ": " + ec.message());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace ria
