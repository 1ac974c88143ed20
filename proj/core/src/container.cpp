#include "gcap/container.hpp"

#include <cstring>
#include <fstream>

#include "gcap/common.hpp"

namespace gcap {

namespace {

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& buf, std::string file) : buf_(buf), file_(std::move(file)) {}

  uint32_t u32(const char* what) {
    if (pos_ + 4 > buf_.size()) {
      throw ValidationError(file_ + ": truncated while reading " + std::string(what));
    }
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(buf_[pos_ + i]);
    pos_ += 4;
    return v;
  }

  float f32(const char* what) {
    uint32_t bits = u32(what);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }

  std::string bytes(size_t n, const char* what) {
    if (pos_ + n > buf_.size()) {
      throw ValidationError(file_ + ": truncated while reading " + std::string(what));
    }
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  size_t remaining() const { return buf_.size() - pos_; }

 private:
  const std::string& buf_;
  std::string file_;
  size_t pos_ = 0;
};

}  // namespace

void FeatureContainer::add_tensor(const std::string& name, std::span<const float> data,
                                  uint32_t rows) {
  if (static_cast<size_t>(rows) * cols_ != data.size()) {
    throw ValidationError("FeatureContainer::add_tensor: '" + name + "' payload is " +
                          std::to_string(data.size()) + " floats, expected " +
                          std::to_string(static_cast<size_t>(rows) * cols_));
  }
  if (has(name)) {
    throw ValidationError("FeatureContainer::add_tensor: duplicate tensor '" + name + "'");
  }
  index_.push_back({name, rows_, rows});
  payload_.insert(payload_.end(), data.begin(), data.end());
  rows_ += rows;
}

bool FeatureContainer::has(const std::string& name) const {
  for (const auto& e : index_) {
    if (e.name == name) return true;
  }
  return false;
}

const FeatureContainer::IndexEntry& FeatureContainer::entry(const std::string& name) const {
  for (const auto& e : index_) {
    if (e.name == name) return e;
  }
  throw ValidationError("FeatureContainer: no tensor named '" + name + "'");
}

std::span<const float> FeatureContainer::tensor(const std::string& name) const {
  const auto& e = entry(name);
  return {payload_.data() + static_cast<size_t>(e.row_offset) * cols_,
          static_cast<size_t>(e.rows) * cols_};
}

void FeatureContainer::save(const std::filesystem::path& file) const {
  std::string out;
  out.reserve(16 + payload_.size() * 4 + 64 * index_.size());
  out += "GCAP";
  put_u32(out, kVersion);
  put_u32(out, rows_);
  put_u32(out, cols_);
  for (float f : payload_) put_f32(out, f);
  put_u32(out, static_cast<uint32_t>(index_.size()));
  for (const auto& e : index_) {
    put_u32(out, static_cast<uint32_t>(e.name.size()));
    out += e.name;
    put_u32(out, e.row_offset);
    put_u32(out, e.rows);
  }
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw ValidationError("FeatureContainer::save: cannot open " + file.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw ValidationError("FeatureContainer::save: write failed for " + file.string());
}

FeatureContainer FeatureContainer::load(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw ValidationError("FeatureContainer::load: cannot open " + file.string());
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  Reader r(buf, file.string());
  const std::string magic = r.bytes(4, "magic");
  if (magic != "GCAP") {
    throw ValidationError(file.string() + ": bad magic, not a GCAP container");
  }
  const uint32_t version = r.u32("version");
  if (version != kVersion) {
    throw ValidationError(file.string() + ": unsupported container version " +
                          std::to_string(version));
  }

  FeatureContainer c;
  c.rows_ = r.u32("rows");
  c.cols_ = r.u32("cols");
  const size_t n = static_cast<size_t>(c.rows_) * c.cols_;
  if (n > r.remaining() / 4 || r.remaining() < n * 4 + 4) {
    throw ValidationError(file.string() + ": truncated payload, header promises " +
                          std::to_string(c.rows_) + "x" + std::to_string(c.cols_) + " floats");
  }
  c.payload_.resize(n);
  for (size_t i = 0; i < n; ++i) c.payload_[i] = r.f32("payload");

  const uint32_t count = r.u32("index count");
  std::vector<uint8_t> claimed(c.rows_, 0);
  for (uint32_t i = 0; i < count; ++i) {
    IndexEntry e;
    const uint32_t name_len = r.u32("index name length");
    e.name = r.bytes(name_len, "index name");
    e.row_offset = r.u32("index row offset");
    e.rows = r.u32("index rows");
    if (static_cast<uint64_t>(e.row_offset) + e.rows > c.rows_) {
      throw ValidationError(file.string() + ": tensor '" + e.name +
                            "' extends past the payload (offset " + std::to_string(e.row_offset) +
                            " rows " + std::to_string(e.rows) + " of " + std::to_string(c.rows_) +
                            ")");
    }
    for (uint32_t rr = e.row_offset; rr < e.row_offset + e.rows; ++rr) {
      if (claimed[rr]) {
        throw ValidationError(file.string() + ": tensor '" + e.name +
                              "' overlaps a previous index entry at row " + std::to_string(rr));
      }
      claimed[rr] = 1;
    }
    c.index_.push_back(std::move(e));
  }
  return c;
}

}  // namespace gcap
