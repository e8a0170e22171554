// Copyright 2026 The srinit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "srinit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "srinit/errors.hpp"

namespace srinit {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr char kMagic[8] = {'S', 'R', 'I', 'N', 'I', 'T', 'C', 'K'};

class Writer {
 public:
  template <class T>
  void put(const T& v) {
    bytes(&v, sizeof(T));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<char>& buffer() { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::size_t end, std::string file)
      : buf_(buf), end_(end), file_(std::move(file)) {}

  template <class T>
  T get() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* p, std::size_t n) {
    if (n > end_ - pos_) throw FormatError("checkpoint '" + file_ + "' is truncated");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  const std::vector<char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string file_;
};

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t hash) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void save_checkpoint(const ModelState& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["spec"] = model.spec();
  std::vector<int> ids;
  for (const auto& u : model.units()) ids.push_back(u.id);
  header["units"] = ids;
  header["mode"] = model.mode() == Mode::kTrain ? "train" : "eval";
  const std::string header_text = header.dump();

  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(header_text.size());
  w.bytes(header_text.data(), header_text.size());
  const auto params = model.named_parameters();
  w.put<std::uint64_t>(params.size());
  for (const auto& p : params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.tensor->rank()));
    for (auto d : p.tensor->shape) w.put<std::int64_t>(d);
    w.bytes(p.tensor->ptr(), p.tensor->data.size() * sizeof(float));
  }
  const std::uint64_t checksum = fnv1a64(w.buffer().data(), w.buffer().size());
  w.put(checksum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string file = path.string();
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("'" + file + "' is not a srinit checkpoint (bad magic)");
  }
  if (buf.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
    throw FormatError("checkpoint '" + file + "' is truncated");
  }
  std::uint32_t version;
  std::memcpy(&version, buf.data() + sizeof(kMagic), sizeof(version));
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint '" + file + "' has format version " + std::to_string(version) +
                      ", expected version " + std::to_string(kCheckpointVersion));
  }
  const std::size_t body = buf.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + body, sizeof(stored));
  if (stored != fnv1a64(buf.data(), body)) {
    throw FormatError("checkpoint '" + file + "' is truncated or corrupt (checksum mismatch)");
  }

  Reader r(buf, body, file);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  r.get<std::uint32_t>();
  const auto header_len = r.get<std::uint64_t>();
  if (header_len > r.remaining()) throw FormatError("checkpoint '" + file + "' is truncated");
  std::string header_text(header_len, '\0');
  r.bytes(header_text.data(), header_len);

  NetworkSpec spec;
  std::set<int> kept;
  Mode mode;
  try {
    const auto header = nlohmann::json::parse(header_text);
    spec = header.at("spec").get<NetworkSpec>();
    for (int id : header.at("units")) kept.insert(id);
    mode = header.at("mode").get<std::string>() == "train" ? Mode::kTrain : Mode::kEval;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + file + "' has a malformed header: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("checkpoint '" + file + "' has an invalid spec: " + e.what());
  }

  ModelState model = build_architecture(spec);
  std::set<int> removed;
  for (const auto& u : model.units()) {
    if (!kept.count(u.id)) removed.insert(u.id);
  }
  auto& units = model.units();
  std::erase_if(units, [&](const UnitState& u) { return removed.count(u.id) > 0; });
  if (static_cast<std::size_t>(model.unit_count()) != kept.size()) {
    throw FormatError("checkpoint '" + file + "' lists unit ids absent from its spec");
  }
  model.set_mode(mode);

  std::map<std::string, Tensor*> slots;
  for (auto& p : model.named_parameters()) slots[p.name] = p.tensor;
  const auto count = r.get<std::uint64_t>();
  if (count != slots.size()) {
    throw FormatError("checkpoint '" + file + "' holds " + std::to_string(count) +
                      " tensors, model expects " + std::to_string(slots.size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    if (name_len > r.remaining()) throw FormatError("checkpoint '" + file + "' is truncated");
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError("checkpoint '" + file + "': tensor '" + name + "' has bad rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::int64_t>();
    auto it = slots.find(name);
    if (it == slots.end()) throw FormatError("checkpoint '" + file + "' has unexpected tensor '" + name + "'");
    if (it->second->shape != shape) {
      throw FormatError("checkpoint '" + file + "': tensor '" + name + "' has shape " +
                        shape_to_string(shape) + ", expected " + shape_to_string(it->second->shape));
    }
    r.bytes(it->second->ptr(), it->second->data.size() * sizeof(float));
  }
  if (r.remaining() != 0) throw FormatError("checkpoint '" + file + "' has trailing bytes");
  return model;
}

}  // namespace srinit
