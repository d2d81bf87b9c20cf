// Binary checkpoints. Every integer and scalar is little-endian.
//
//   magic        8 bytes  "IGLCKPT\0"
//   version      u32      (currently 1)
//   scalar_bytes u32      4 for float, 8 for double
//   task d_model encoder_layers heads iterative_layers ffn_dim max_levels max_len
//                u32 each
//   seed         u64
//   vocab_count  u32, then per word: u32 byte length + UTF-8 bytes
//   param_count  u64, then param_count scalars in layout order
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "igl/core.hpp"
#include "igl/nnet/network.hpp"

namespace igl::nnet {

inline constexpr std::array<char, 8> kCheckpointMagic = {'I', 'G', 'L', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename U>
void put_le(std::ostream& out, U v) {
  static_assert(std::is_unsigned_v<U>);
  char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, sizeof(U));
}

template <typename U>
U get_le(std::istream& in, const char* what) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char b[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(U)))
    throw ValidationError(std::string("truncated checkpoint while reading ") + what);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

template <typename T>
using ScalarBits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

inline std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw ValidationError(std::string(what) + " does not fit the checkpoint format");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

template <typename T>
void save_checkpoint(const IglNetwork<T>& net, std::ostream& out) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  const auto& c = net.config();
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, sizeof(T));
  for (std::size_t v : {static_cast<std::size_t>(c.task), c.d_model, c.encoder_layers, c.heads,
                        c.iterative_layers, c.ffn_dim, c.max_levels, c.max_len})
    detail::put_le<std::uint32_t>(out, detail::narrow(v, "config field"));
  detail::put_le<std::uint64_t>(out, c.seed);
  const auto& words = net.vocab().words();
  detail::put_le<std::uint32_t>(out, detail::narrow(words.size(), "vocabulary size"));
  for (const auto& w : words) {
    detail::put_le<std::uint32_t>(out, detail::narrow(w.size(), "vocabulary entry"));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  const auto p = net.parameters();
  detail::put_le<std::uint64_t>(out, p.size());
  for (T v : p) detail::put_le(out, std::bit_cast<detail::ScalarBits<T>>(v));
  if (!out) throw RuntimeError("failed writing checkpoint");
}

template <typename T>
IglNetwork<T> load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic)
    throw ValidationError("not a checkpoint file (bad magic)");
  const auto version = detail::get_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  const auto width = detail::get_le<std::uint32_t>(in, "scalar width");
  if (width != sizeof(T))
    throw ValidationError("checkpoint stores " + std::to_string(width) + "-byte scalars, expected " +
                          std::to_string(sizeof(T)));
  EncoderConfig c;
  const auto task = detail::get_le<std::uint32_t>(in, "task");
  if (task > 1) throw ValidationError("checkpoint has unknown task id " + std::to_string(task));
  c.task = static_cast<Task>(task);
  for (std::size_t* f : {&c.d_model, &c.encoder_layers, &c.heads, &c.iterative_layers, &c.ffn_dim,
                         &c.max_levels, &c.max_len})
    *f = detail::get_le<std::uint32_t>(in, "config");
  c.seed = detail::get_le<std::uint64_t>(in, "seed");
  c.validate();

  Vocabulary vocab;
  const auto count = detail::get_le<std::uint32_t>(in, "vocabulary size");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get_le<std::uint32_t>(in, "vocabulary entry");
    std::string w(len, '\0');
    if (!in.read(w.data(), len)) throw ValidationError("truncated checkpoint in vocabulary");
    if (vocab.insert(w) != i) throw ValidationError("checkpoint vocabulary is inconsistent at entry " + std::to_string(i));
  }

  IglNetwork<T> net(c, std::move(vocab));
  const auto n = detail::get_le<std::uint64_t>(in, "parameter count");
  if (n != net.parameter_count())
    throw ValidationError("checkpoint holds " + std::to_string(n) + " parameters, configuration needs " +
                          std::to_string(net.parameter_count()));
  std::vector<T> values(n);
  for (auto& v : values) v = std::bit_cast<T>(detail::get_le<detail::ScalarBits<T>>(in, "parameters"));
  net.set_parameters(std::move(values));
  return net;
}

template <typename T>
void save_checkpoint(const IglNetwork<T>& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write checkpoint " + path);
  save_checkpoint(net, out);
}

template <typename T>
IglNetwork<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open checkpoint " + path);
  try {
    return load_checkpoint<T>(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace igl::nnet
