#include "das/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "das/errors.hpp"

namespace das {

static_assert(std::endian::native == std::endian::little,
              "archive io assumes a little-endian host");

namespace {

template <class T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T take(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!f) fail(Errc::Io, "archive truncated");
  return v;
}

}  // namespace

void write_archive(const std::string& path, const NamedTensors& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::Io, "cannot open '" + path + "' for writing");
  f.write("DASM", 4);
  put<std::uint32_t>(f, kArchiveVersion);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) put<std::uint64_t>(f, e);
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!f) fail(Errc::Io, "short write to '" + path + "'");
}

NamedTensors read_archive(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::Io, "cannot open '" + path + "'");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "DASM", 4) != 0)
    fail(Errc::Io, "'" + path + "' is not a matrix archive");
  const auto version = take<std::uint32_t>(f);
  if (version != kArchiveVersion)
    fail(Errc::Io, "unsupported archive version " + std::to_string(version));
  const auto count = take<std::uint32_t>(f);
  NamedTensors out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = take<std::uint32_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const auto rank = take<std::uint32_t>(f);
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (auto& e : shape) {
      e = static_cast<std::size_t>(take<std::uint64_t>(f));
      total *= e;
    }
    std::vector<double> data(total);
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(total * sizeof(double)));
    if (!f) fail(Errc::Io, "archive truncated in '" + name + "'");
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void save_net(const std::string& path, const FeedForwardNet& net) {
  NamedTensors ts;
  Vec meta = {static_cast<double>(net.num_objects),
              net.embeddings_trainable ? 1.0 : 0.0,
              net.pad_scalar_logit ? 1.0 : 0.0,
              static_cast<double>(net.layers.size())};
  for (std::int64_t c : net.class_values) meta.push_back(static_cast<double>(c));
  ts.emplace_back("meta", Tensor({meta.size()}, meta));
  ts.emplace_back("embeddings", net.embeddings);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l + 1);
    ts.emplace_back(p + ".W", net.layers[l].W);
    ts.emplace_back(p + ".b", net.layers[l].b);
    ts.emplace_back(p + ".relu", Tensor({1}, {net.layers[l].relu ? 1.0 : 0.0}));
  }
  ts.emplace_back("head.W", net.head.W);
  ts.emplace_back("head.b", net.head.b);
  write_archive(path, ts);
}

FeedForwardNet load_net(const std::string& path) {
  NamedTensors ts = read_archive(path);
  const Tensor* meta = find_tensor(ts, "meta");
  const Tensor* emb = find_tensor(ts, "embeddings");
  if (!meta || !emb || meta->size() < 4) fail(Errc::Io, "'" + path + "' is not a net checkpoint");
  FeedForwardNet net;
  net.num_objects = static_cast<std::size_t>((*meta)[0]);
  net.embeddings_trainable = (*meta)[1] != 0.0;
  net.pad_scalar_logit = (*meta)[2] != 0.0;
  const auto num_layers = static_cast<std::size_t>((*meta)[3]);
  for (std::size_t i = 4; i < meta->size(); ++i)
    net.class_values.push_back(static_cast<std::int64_t>((*meta)[i]));
  net.embeddings = *emb;
  for (std::size_t l = 1; l <= num_layers; ++l) {
    const std::string p = "layer" + std::to_string(l);
    const Tensor* w = find_tensor(ts, p + ".W");
    const Tensor* b = find_tensor(ts, p + ".b");
    const Tensor* r = find_tensor(ts, p + ".relu");
    if (!w || !b || !r) fail(Errc::Io, "missing tensors for " + p);
    net.layers.push_back({*w, *b, (*r)[0] != 0.0});
  }
  const Tensor* hw = find_tensor(ts, "head.W");
  const Tensor* hb = find_tensor(ts, "head.b");
  if (!hw || !hb) fail(Errc::Io, "missing head tensors");
  net.head = {*hw, *hb, false};
  return net;
}

}  // namespace das
