// Copyright 2026 The dfd Authors. All Rights Reserved.
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
//
// Wire protocol between learner and workers. All frames are little-endian
// with a 1-byte tag followed by a fixed or length-prefixed body:
//
//   eval     0x01 | seed u64 | reward f64 (IEEE-754 bits) | episode_len u32
//                 | origin_update u32                      (25 bytes total)
//   policy   0x02 | update_index u32 | count u32 | count * f64
//   hello    0x03 | node_id u32
//   shutdown 0x04
//
// An evaluation frame is 25 bytes regardless of the policy dimension: the
// perturbation travels as its seed, never as a vector. Frames are
// self-delimiting, so any concatenation of frames decodes to the same message
// sequence no matter how the byte stream is chunked.

#ifndef DFD_TRANSPORT_HPP_
#define DFD_TRANSPORT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dfd/estimators.hpp"
#include "dfd/vec.hpp"

namespace dfd {

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EncodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalMsg {
  std::uint64_t seed = 0;
  double reward = 0.0;
  std::uint32_t episode_len = 0;
  std::uint32_t origin_update = 0;

  friend bool operator==(const EvalMsg& a, const EvalMsg& b) {
    // Bit-exact reward comparison; NaN payloads must round-trip too.
    return a.seed == b.seed &&
           std::bit_cast<std::uint64_t>(a.reward) ==
               std::bit_cast<std::uint64_t>(b.reward) &&
           a.episode_len == b.episode_len && a.origin_update == b.origin_update;
  }
};

struct PolicyMsg {
  std::uint32_t update_index = 0;
  Vec theta;

  friend bool operator==(const PolicyMsg& a, const PolicyMsg& b) {
    if (a.update_index != b.update_index || a.theta.size() != b.theta.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.theta.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(a.theta[i]) !=
          std::bit_cast<std::uint64_t>(b.theta[i])) {
        return false;
      }
    }
    return true;
  }
};

struct HelloMsg {
  std::uint32_t node_id = 0;
  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

struct ShutdownMsg {
  friend bool operator==(const ShutdownMsg&, const ShutdownMsg&) = default;
};

using WireMessage = std::variant<EvalMsg, PolicyMsg, HelloMsg, ShutdownMsg>;

inline constexpr std::uint8_t kTagEval = 0x01;
inline constexpr std::uint8_t kTagPolicy = 0x02;
inline constexpr std::uint8_t kTagHello = 0x03;
inline constexpr std::uint8_t kTagShutdown = 0x04;

inline constexpr std::size_t kEvalFrameSize = 25;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline double get_f64(const std::uint8_t* p) {
  return std::bit_cast<double>(get_u64(p));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const WireMessage& msg) {
  std::vector<std::uint8_t> out;
  if (const auto* e = std::get_if<EvalMsg>(&msg)) {
    out.reserve(kEvalFrameSize);
    out.push_back(kTagEval);
    detail::put_u64(out, e->seed);
    detail::put_f64(out, e->reward);
    detail::put_u32(out, e->episode_len);
    detail::put_u32(out, e->origin_update);
  } else if (const auto* p = std::get_if<PolicyMsg>(&msg)) {
    if (p->theta.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw EncodeError("policy message: dimension overflows u32");
    }
    out.reserve(9 + 8 * p->theta.size());
    out.push_back(kTagPolicy);
    detail::put_u32(out, p->update_index);
    detail::put_u32(out, static_cast<std::uint32_t>(p->theta.size()));
    for (double x : p->theta) detail::put_f64(out, x);
  } else if (const auto* h = std::get_if<HelloMsg>(&msg)) {
    out.push_back(kTagHello);
    detail::put_u32(out, h->node_id);
  } else {
    out.push_back(kTagShutdown);
  }
  return out;
}

namespace detail {

// Frame length implied by the bytes seen so far, or nullopt if even that is
// not yet known. Throws ProtocolError on an unknown tag.
inline std::optional<std::size_t> frame_size(std::span<const std::uint8_t> b) {
  if (b.empty()) return std::nullopt;
  switch (b[0]) {
    case kTagEval:
      return kEvalFrameSize;
    case kTagPolicy: {
      if (b.size() < 9) return std::nullopt;
      const std::uint64_t count = get_u32(b.data() + 5);
      return static_cast<std::size_t>(9 + 8 * count);
    }
    case kTagHello:
      return 5;
    case kTagShutdown:
      return 1;
    default:
      throw ProtocolError("unknown message tag " +
                          std::to_string(static_cast<int>(b[0])));
  }
}

inline WireMessage decode_frame(std::span<const std::uint8_t> b) {
  switch (b[0]) {
    case kTagEval: {
      EvalMsg e;
      e.seed = get_u64(b.data() + 1);
      e.reward = get_f64(b.data() + 9);
      e.episode_len = get_u32(b.data() + 17);
      e.origin_update = get_u32(b.data() + 21);
      return e;
    }
    case kTagPolicy: {
      PolicyMsg p;
      p.update_index = get_u32(b.data() + 1);
      const std::uint32_t count = get_u32(b.data() + 5);
      p.theta.resize(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        p.theta[i] = get_f64(b.data() + 9 + 8 * static_cast<std::size_t>(i));
      }
      return p;
    }
    case kTagHello: {
      HelloMsg h;
      h.node_id = get_u32(b.data() + 1);
      return h;
    }
    default:
      return ShutdownMsg{};
  }
}

}  // namespace detail

// Strict single-frame decode: the buffer must contain exactly one complete
// frame. Returns nullopt when more bytes are needed; throws ProtocolError on
// an unknown tag or trailing bytes after the frame.
inline std::optional<WireMessage> decode(std::span<const std::uint8_t> bytes) {
  const std::optional<std::size_t> need = detail::frame_size(bytes);
  if (!need.has_value() || bytes.size() < *need) return std::nullopt;
  if (bytes.size() > *need) {
    throw ProtocolError("trailing bytes after frame");
  }
  return detail::decode_frame(bytes);
}

// Incremental stream decoder. Feed arbitrary chunks; next() yields complete
// messages in order and returns nullopt while a frame is still partial.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }

  std::optional<WireMessage> next() {
    const std::span<const std::uint8_t> rest(buf_.data() + pos_,
                                             buf_.size() - pos_);
    const std::optional<std::size_t> need = detail::frame_size(rest);
    if (!need.has_value() || rest.size() < *need) {
      compact();
      return std::nullopt;
    }
    WireMessage msg = detail::decode_frame(rest.first(*need));
    pos_ += *need;
    return msg;
  }

  std::size_t buffered() const noexcept { return buf_.size() - pos_; }

 private:
  void compact() {
    if (pos_ == 0) return;
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }

  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

// Conversions between the in-memory evaluation and its wire form. Evaluation
// counters are 64-bit in memory; the wire caps them at u32.
inline EvalMsg to_wire(const Evaluation& e) {
  if (e.episode_len > std::numeric_limits<std::uint32_t>::max()) {
    throw EncodeError("evaluation: episode_len overflows u32");
  }
  if (e.origin_update > std::numeric_limits<std::uint32_t>::max()) {
    throw EncodeError("evaluation: origin_update overflows u32");
  }
  return EvalMsg{e.seed, e.reward, static_cast<std::uint32_t>(e.episode_len),
                 static_cast<std::uint32_t>(e.origin_update)};
}

inline Evaluation from_wire(const EvalMsg& m) {
  return Evaluation{m.seed, m.reward, m.episode_len, m.origin_update};
}

}  // namespace dfd

#endif  // DFD_TRANSPORT_HPP_
