#include "blastlab/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "blastlab/error.hpp"

namespace blastlab::nn {

namespace {

constexpr char kMagic[8] = {'B', 'L', 'C', 'K', 'P', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void i32(int32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) throw DataError("checkpoint truncated");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, 4);
    return v;
  }
  int32_t i32() {
    int32_t v;
    bytes(&v, 4);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    if (n > in_.size() - pos_) throw DataError("checkpoint truncated");
    std::string s(in_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<uint32_t>(ckpt.channelLegend.size()));
  for (const auto& name : ckpt.channelLegend) w.str(name);
  const NetShape& s = ckpt.params.shape;
  for (int v : {s.height, s.width, s.inChannels, s.conv1, s.conv2, s.conv3}) w.i32(v);
  w.str(ckpt.params.initScheme);
  w.u32(static_cast<uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.str(k);
    w.str(v);
  }
  const auto& table = ckpt.params.table;
  w.u32(static_cast<uint32_t>(table.size()));
  for (const auto& t : table) {
    w.str(t.name);
    w.u32(static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) w.i32(d);
    w.u64(t.size);
  }
  for (const auto& t : table) w.bytes(ckpt.params.data.data() + t.offset, t.size * sizeof(float));
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("not a blastlab checkpoint");
  uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  uint32_t nlegend = r.u32();
  if (nlegend > 64) throw DataError("checkpoint legend too long");
  for (uint32_t i = 0; i < nlegend; ++i) ckpt.channelLegend.push_back(r.str());
  NetShape s;
  s.height = r.i32();
  s.width = r.i32();
  s.inChannels = r.i32();
  s.conv1 = r.i32();
  s.conv2 = r.i32();
  s.conv3 = r.i32();
  if (s.height < 1 || s.width < 1 || s.inChannels < 1 || s.height > 64 || s.width > 64 || s.inChannels > 64 ||
      s.conv1 < 1 || s.conv2 < 1 || s.conv3 < 1 || s.conv1 > 1024 || s.conv2 > 1024 || s.conv3 > 1024) {
    throw DataError("checkpoint has an invalid network shape");
  }
  if (static_cast<int>(nlegend) != s.inChannels) throw DataError("checkpoint legend does not match input channels");
  ckpt.params = NetworkParams<float>(s);
  ckpt.params.initScheme = r.str();
  uint32_t nmeta = r.u32();
  for (uint32_t i = 0; i < nmeta; ++i) {
    std::string k = r.str();
    ckpt.metadata[k] = r.str();
  }
  const auto& table = ckpt.params.table;
  if (r.u32() != table.size()) throw DataError("checkpoint tensor count mismatch");
  for (const auto& t : table) {
    std::string name = r.str();
    uint32_t ndim = r.u32();
    if (name != t.name || ndim != t.shape.size()) throw DataError("checkpoint shape table mismatch at " + t.name);
    for (int d : t.shape) {
      if (r.i32() != d) throw DataError("checkpoint dimension mismatch at " + t.name);
    }
    if (r.u64() != t.size) throw DataError("checkpoint size mismatch at " + t.name);
  }
  for (const auto& t : table) r.bytes(ckpt.params.data.data() + t.offset, t.size * sizeof(float));
  if (!r.done()) throw DataError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace blastlab::nn
