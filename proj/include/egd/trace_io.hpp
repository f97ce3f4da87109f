#pragma once

// Version-1 trace files: per-step, per-layer last-token hidden states (or
// logits) of a real model run, plus its unembedding head. Little-endian
// throughout; byte layout is documented in docs/trace_format.md.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "egd/decoding.hpp"
#include "egd/errors.hpp"
#include "egd/logit_lens.hpp"

namespace egd {

inline constexpr std::array<char, 8> kTraceMagic = {'E', 'G', 'D', 'T', 'R', 'A', 'C', 'E'};
inline constexpr std::uint16_t kTraceVersion = 1;
inline constexpr std::size_t kTraceFixedHeaderBytes = 44;

enum class PayloadKind : std::uint8_t { hidden_states = 0, logits = 1 };
enum class ElementType : std::uint8_t { float32 = 0 };

inline constexpr std::uint8_t kFlagFinalNormApplied = 0x01;

struct TraceHeader {
  std::uint16_t format_version = kTraceVersion;
  PayloadKind payload_kind = PayloadKind::hidden_states;
  ElementType element_type = ElementType::float32;
  std::uint8_t layer_offset = 0;
  std::uint8_t flags = 0;
  std::uint32_t num_layers = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t vocab_size = 0;
  std::uint32_t num_steps = 0;
  std::string model_label;
  std::vector<TokenId> prompt;
  std::vector<TokenId> continuation;  // empty, or exactly num_steps ids

  bool final_norm_applied() const noexcept { return (flags & kFlagFinalNormApplied) != 0; }
  /// Floats per layer per step.
  std::size_t row_width() const noexcept {
    return payload_kind == PayloadKind::hidden_states ? hidden_dim : vocab_size;
  }

  bool operator==(const TraceHeader&) const = default;
};

struct Trace {
  TraceHeader header;
  std::vector<float> head;     // vocab_size x hidden_dim, only for hidden_states payloads
  std::vector<float> payload;  // num_steps x num_layers x row_width

  std::span<const float> row(std::size_t step, std::size_t layer) const {
    const std::size_t w = header.row_width();
    return std::span<const float>(payload).subspan((step * header.num_layers + layer) * w, w);
  }

  bool operator==(const Trace&) const = default;
};

class TraceFormatError : public DataError {
 public:
  enum class Kind { bad_magic, unsupported_version, truncated, count_mismatch, invalid_field };

  TraceFormatError(Kind kind, std::size_t offset, const std::string& msg)
      : DataError("trace format error at byte " + std::to_string(offset) + ": " + msg),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

namespace detail {

/// Checked u64 arithmetic for declared sizes; nullopt on overflow.
inline std::optional<std::uint64_t> checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::nullopt;
  return a * b;
}

inline std::optional<std::uint64_t> checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) return std::nullopt;
  return a + b;
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<std::byte>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::byte> take() { return std::move(bytes_); }
  void reserve(std::size_t n) { bytes_.reserve(n); }

 private:
  std::vector<std::byte> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }

  std::uint8_t u8() {
    need(1);
    return std::to_integer<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(std::to_integer<std::uint16_t>(data_[pos_++]) << (8 * i));
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::span<const std::byte> bytes(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw TraceFormatError(TraceFormatError::Kind::truncated, pos_,
                             "expected " + std::to_string(pos_ + n) + " bytes, stream has " +
                                 std::to_string(data_.size()));
    }
  }

  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

inline void validate_header_fields(const TraceHeader& h, std::size_t offset_base) {
  using K = TraceFormatError::Kind;
  auto fail = [&](std::size_t off, const std::string& msg) {
    throw TraceFormatError(K::invalid_field, offset_base + off, msg);
  };
  if (h.payload_kind != PayloadKind::hidden_states && h.payload_kind != PayloadKind::logits) {
    fail(10, "unknown payload kind " + std::to_string(static_cast<int>(h.payload_kind)));
  }
  if (h.element_type != ElementType::float32) {
    fail(11, "unsupported element type " + std::to_string(static_cast<int>(h.element_type)));
  }
  if (h.layer_offset > 1) fail(12, "layer_offset must be 0 or 1");
  if ((h.flags & ~kFlagFinalNormApplied) != 0) fail(13, "unknown flag bits set");
  if (h.num_layers < 1) fail(16, "num_layers must be >= 1");
  if (h.payload_kind == PayloadKind::hidden_states && h.hidden_dim < 1) {
    fail(20, "hidden_dim must be >= 1 for hidden-state payloads");
  }
  if (h.vocab_size < 2) fail(24, "vocab_size must be >= 2");
}

struct DeclaredSizes {
  std::uint64_t head_floats = 0;
  std::uint64_t payload_floats = 0;
  std::uint64_t total_bytes = 0;
};

inline std::optional<DeclaredSizes> declared_sizes(const TraceHeader& h, std::uint64_t label_len,
                                                   std::uint64_t prompt_len,
                                                   std::uint64_t cont_len) {
  DeclaredSizes s;
  if (h.payload_kind == PayloadKind::hidden_states) {
    auto head = checked_mul(h.vocab_size, h.hidden_dim);
    if (!head) return std::nullopt;
    s.head_floats = *head;
  }
  auto per_step = checked_mul(h.num_layers, h.row_width());
  if (!per_step) return std::nullopt;
  auto payload = checked_mul(*per_step, h.num_steps);
  if (!payload) return std::nullopt;
  s.payload_floats = *payload;

  std::optional<std::uint64_t> total = kTraceFixedHeaderBytes;
  total = checked_add(*total, label_len);
  if (total) total = checked_add(*total, 4 * (prompt_len + cont_len));
  auto head_bytes = checked_mul(s.head_floats, 4);
  auto payload_bytes = checked_mul(s.payload_floats, 4);
  if (!total || !head_bytes || !payload_bytes) return std::nullopt;
  total = checked_add(*total, *head_bytes);
  if (total) total = checked_add(*total, *payload_bytes);
  if (!total) return std::nullopt;
  s.total_bytes = *total;
  return s;
}

}  // namespace detail

inline void validate_trace(const Trace& t) {
  const TraceHeader& h = t.header;
  if (h.format_version != kTraceVersion) {
    throw InvalidArgument("trace: only format version 1 can be written");
  }
  detail::validate_header_fields(h, 0);
  if (!h.continuation.empty() && h.continuation.size() != h.num_steps) {
    throw InvalidArgument("trace: continuation must be empty or hold num_steps ids");
  }
  for (TokenId id : h.prompt) {
    if (id >= h.vocab_size) throw InvalidArgument("trace: prompt id outside vocabulary");
  }
  for (TokenId id : h.continuation) {
    if (id >= h.vocab_size) throw InvalidArgument("trace: continuation id outside vocabulary");
  }
  const auto sizes =
      detail::declared_sizes(h, h.model_label.size(), h.prompt.size(), h.continuation.size());
  if (!sizes) throw InvalidArgument("trace: declared sizes overflow");
  if (t.head.size() != sizes->head_floats) throw InvalidArgument("trace: head size mismatch");
  if (t.payload.size() != sizes->payload_floats) {
    throw InvalidArgument("trace: payload size mismatch");
  }
  if (h.model_label.size() > std::numeric_limits<std::uint32_t>::max() ||
      h.prompt.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("trace: label or prompt too long");
  }
}

inline std::vector<std::byte> serialize_trace(const Trace& t) {
  validate_trace(t);
  const TraceHeader& h = t.header;
  detail::ByteWriter w;
  w.reserve(kTraceFixedHeaderBytes + h.model_label.size() +
            4 * (h.prompt.size() + h.continuation.size() + t.head.size() + t.payload.size()));
  w.raw(kTraceMagic.data(), kTraceMagic.size());
  w.u16(h.format_version);
  w.u8(static_cast<std::uint8_t>(h.payload_kind));
  w.u8(static_cast<std::uint8_t>(h.element_type));
  w.u8(h.layer_offset);
  w.u8(h.flags);
  w.u16(0);
  w.u32(h.num_layers);
  w.u32(h.hidden_dim);
  w.u32(h.vocab_size);
  w.u32(h.num_steps);
  w.u32(static_cast<std::uint32_t>(h.model_label.size()));
  w.u32(static_cast<std::uint32_t>(h.prompt.size()));
  w.u32(static_cast<std::uint32_t>(h.continuation.size()));
  w.raw(h.model_label.data(), h.model_label.size());
  for (TokenId id : h.prompt) w.u32(id);
  for (TokenId id : h.continuation) w.u32(id);
  for (float v : t.head) w.f32(v);
  for (float v : t.payload) w.f32(v);
  return w.take();
}

/// Writes `t` to `sink` and returns the number of bytes written.
inline std::size_t write_trace(const Trace& t, std::ostream& sink) {
  const auto bytes = serialize_trace(t);
  sink.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw DataError("trace: sink write failed");
  return bytes.size();
}

/// Parses a complete trace. Every count is checked against the stream length
/// before anything is allocated; trailing bytes are rejected.
inline Trace parse_trace(std::span<const std::byte> data) {
  using K = TraceFormatError::Kind;
  detail::ByteReader r(data);
  if (data.size() < kTraceMagic.size() ||
      std::memcmp(data.data(), kTraceMagic.data(), kTraceMagic.size()) != 0) {
    throw TraceFormatError(K::bad_magic, 0, "bad magic");
  }
  r.bytes(kTraceMagic.size());

  Trace t;
  TraceHeader& h = t.header;
  h.format_version = r.u16();
  if (h.format_version != kTraceVersion) {
    throw TraceFormatError(K::unsupported_version, 8,
                           "unsupported format version " + std::to_string(h.format_version));
  }
  if (data.size() < kTraceFixedHeaderBytes) {
    throw TraceFormatError(K::truncated, data.size(),
                           "expected at least " + std::to_string(kTraceFixedHeaderBytes) +
                               " header bytes, stream has " + std::to_string(data.size()));
  }
  h.payload_kind = static_cast<PayloadKind>(r.u8());
  h.element_type = static_cast<ElementType>(r.u8());
  h.layer_offset = r.u8();
  h.flags = r.u8();
  if (r.u16() != 0) throw TraceFormatError(K::invalid_field, 14, "reserved bytes must be zero");
  h.num_layers = r.u32();
  h.hidden_dim = r.u32();
  h.vocab_size = r.u32();
  h.num_steps = r.u32();
  const std::uint32_t label_len = r.u32();
  const std::uint32_t prompt_len = r.u32();
  const std::uint32_t cont_len = r.u32();
  detail::validate_header_fields(h, 0);
  if (cont_len != 0 && cont_len != h.num_steps) {
    throw TraceFormatError(K::count_mismatch, 40,
                           "continuation length " + std::to_string(cont_len) +
                               " must be 0 or num_steps " + std::to_string(h.num_steps));
  }

  const auto sizes = detail::declared_sizes(h, label_len, prompt_len, cont_len);
  if (!sizes) throw TraceFormatError(K::count_mismatch, 16, "declared sizes overflow");
  if (sizes->total_bytes > data.size()) {
    throw TraceFormatError(K::truncated, data.size(),
                           "expected " + std::to_string(sizes->total_bytes) +
                               " bytes, stream has " + std::to_string(data.size()));
  }
  if (sizes->total_bytes < data.size()) {
    throw TraceFormatError(K::count_mismatch, sizes->total_bytes,
                           "expected " + std::to_string(sizes->total_bytes) +
                               " bytes, stream has " + std::to_string(data.size()) +
                               " (trailing data)");
  }

  const auto label = r.bytes(label_len);
  h.model_label.assign(reinterpret_cast<const char*>(label.data()), label.size());
  auto read_ids = [&](std::vector<TokenId>& out, std::uint32_t n) {
    out.resize(n);
    for (auto& id : out) {
      const std::size_t at = r.offset();
      id = r.u32();
      if (id >= h.vocab_size) {
        throw TraceFormatError(K::invalid_field, at,
                               "token id " + std::to_string(id) + " outside vocabulary");
      }
    }
  };
  read_ids(h.prompt, prompt_len);
  read_ids(h.continuation, cont_len);
  t.head.resize(sizes->head_floats);
  for (float& v : t.head) v = r.f32();
  t.payload.resize(sizes->payload_floats);
  for (float& v : t.payload) v = r.f32();
  return t;
}

inline Trace read_trace(std::istream& source) {
  std::vector<char> buf((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  if (source.bad()) throw DataError("trace: read failure");
  return parse_trace(std::as_bytes(std::span<const char>(buf)));
}

inline Trace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("trace: cannot open '" + path + "'");
  return read_trace(in);
}

/// Replays a trace as a decoding source. Steps are teacher-forced: step s
/// always yields the recorded hidden states of step s.
class TraceSource {
 public:
  explicit TraceSource(Trace trace) : header_(std::move(trace.header)), payload_(std::move(trace.payload)) {
    if (header_.payload_kind == PayloadKind::hidden_states) {
      head_.emplace(header_.vocab_size, header_.hidden_dim, std::move(trace.head));
    }
  }

  const TraceHeader& header() const noexcept { return header_; }
  std::size_t num_steps() const noexcept { return header_.num_steps; }
  std::size_t context_limit() const noexcept { return std::numeric_limits<std::size_t>::max(); }

  std::span<const float> row(std::size_t step, std::size_t layer) const {
    const std::size_t w = header_.row_width();
    return std::span<const float>(payload_).subspan((step * header_.num_layers + layer) * w, w);
  }

  BasicLayerStack<float> layer_stack(std::size_t step) const {
    check_step(step);
    if (!head_) throw InvalidArgument("trace holds logits, not hidden states");
    BasicLayerStack<float> stack;
    stack.layer_offset = header_.layer_offset;
    for (std::size_t k = 0; k < header_.num_layers; ++k) {
      const auto r = row(step, k);
      stack.hidden.emplace_back(r.begin(), r.end());
    }
    return stack;
  }

  std::vector<LogitVector> layer_logits(std::span<const TokenId>, std::size_t step) const {
    check_step(step);
    std::vector<LogitVector> out;
    out.reserve(header_.num_layers);
    for (std::size_t k = 0; k < header_.num_layers; ++k) {
      if (head_) {
        out.push_back(project_layer(*head_, row(step, k)));
      } else {
        const auto r = row(step, k);
        out.emplace_back(r.begin(), r.end());
      }
    }
    return out;
  }

  std::optional<TokenId> recorded_token(std::size_t step) const {
    if (step < header_.continuation.size()) return header_.continuation[step];
    return std::nullopt;
  }

 private:
  void check_step(std::size_t step) const {
    if (step >= header_.num_steps) throw TraceExhausted(step, header_.num_steps);
  }

  TraceHeader header_;
  std::vector<float> payload_;
  std::optional<BasicUnembeddingHead<float>> head_;
};

}  // namespace egd
