#pragma once

#include <cstdint>
#include <random>

namespace vampire {

// Named sub-stream tags so independent parts of the pipeline never share a stream.
enum class RngStream : std::uint64_t {
  eye_geometry = 0x01,
  sample_noise = 0x02,
  patient_meta = 0x03,
  label_noise = 0x04,
  model_init = 0x05,
  epoch_shuffle = 0x06,
  augment = 0x07,
  fold_plan = 0x08,
  text_encoder = 0x09,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic engine for (seed, stream, index); parallel and serial callers agree.
inline std::mt19937_64 substream(std::uint64_t seed, RngStream stream, std::uint64_t index = 0,
                                 std::uint64_t index2 = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
  s = splitmix64(s ^ index);
  s = splitmix64(s ^ index2);
  return std::mt19937_64(s);
}

}  // namespace vampire
