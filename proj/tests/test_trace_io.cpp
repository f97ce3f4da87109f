#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "egd/decoding.hpp"
#include "egd/trace_io.hpp"
#include "support/oracles.hpp"

namespace egd {
namespace {

using Kind = TraceFormatError::Kind;

Trace minimal_trace() {
  Trace t;
  t.header.num_layers = 1;
  t.header.hidden_dim = 1;
  t.header.vocab_size = 2;
  t.header.num_steps = 1;
  t.head = {1.0f, -1.0f};
  t.payload = {0.5f};
  return t;
}

std::vector<std::byte> bytes_of(const Trace& t) { return serialize_trace(t); }

Kind kind_of(std::span<const std::byte> data) {
  try {
    parse_trace(data);
  } catch (const TraceFormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "stream parsed";
  return Kind::invalid_field;
}

void put_u32(std::vector<std::byte>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::byte>((v >> (8 * i)) & 0xff);
}

TEST(WriteTrace, MinimalTraceIs56Bytes) {
  std::ostringstream os;
  EXPECT_EQ(write_trace(minimal_trace(), os), 56u);
  EXPECT_EQ(os.str().size(), 56u);
}

TEST(WriteTrace, MinimalTraceLayout) {
  const auto b = bytes_of(minimal_trace());
  EXPECT_EQ(std::memcmp(b.data(), "EGDTRACE", 8), 0);
  const std::vector<unsigned char> expected_header{
      0x01, 0x00,              // version
      0x00, 0x00, 0x00, 0x00,  // kind, element type, layer offset, flags
      0x00, 0x00,              // reserved
      1, 0, 0, 0,              // num_layers
      1, 0, 0, 0,              // hidden_dim
      2, 0, 0, 0,              // vocab_size
      1, 0, 0, 0,              // num_steps
      0, 0, 0, 0,              // label length
      0, 0, 0, 0,              // prompt length
      0, 0, 0, 0};             // continuation length
  for (std::size_t i = 0; i < expected_header.size(); ++i) {
    EXPECT_EQ(static_cast<unsigned char>(b[8 + i]), expected_header[i]) << "byte " << 8 + i;
  }
  // head row 0 = 1.0f, little-endian IEEE-754
  EXPECT_EQ(static_cast<unsigned char>(b[47]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(b[46]), 0x80);
}

TEST(WriteTrace, Deterministic) {
  std::mt19937_64 rng(3);
  const auto t = testing::random_trace(rng);
  std::ostringstream a, b;
  write_trace(t, a);
  write_trace(t, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(WriteTrace, RejectsInvalidTraces) {
  auto t = minimal_trace();
  t.payload.push_back(1.0f);
  EXPECT_THROW(bytes_of(t), InvalidArgument);
  t = minimal_trace();
  t.header.continuation = {1, 1};
  EXPECT_THROW(bytes_of(t), InvalidArgument);
  t = minimal_trace();
  t.header.prompt = {2};
  EXPECT_THROW(bytes_of(t), InvalidArgument);
  t = minimal_trace();
  t.header.layer_offset = 2;
  EXPECT_THROW(bytes_of(t), TraceFormatError);
}

TEST(WriteTrace, SinkFailure) {
  std::ostringstream os;
  os.setstate(std::ios::badbit);
  EXPECT_THROW(write_trace(minimal_trace(), os), DataError);
}

TEST(ReadTrace, RoundTripRandomShapes) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = testing::random_trace(rng);
    std::stringstream ss;
    write_trace(t, ss);
    const Trace back = read_trace(ss);
    EXPECT_EQ(back, t);
    const auto again = bytes_of(back);
    const auto orig = bytes_of(t);
    ASSERT_EQ(again.size(), orig.size());
    EXPECT_EQ(std::memcmp(again.data(), orig.data(), orig.size()), 0);
  }
}

TEST(ReadTrace, PreservesNonFiniteBitPatterns) {
  auto t = minimal_trace();
  t.payload = {std::bit_cast<float>(0x7fc00123u)};
  const auto b = bytes_of(t);
  const auto back = parse_trace(b);
  EXPECT_EQ(std::bit_cast<std::uint32_t>(back.payload[0]), 0x7fc00123u);
}

TEST(ReadTrace, CorruptMagicAtOffsetZero) {
  auto b = bytes_of(minimal_trace());
  b[3] = std::byte{'X'};
  try {
    parse_trace(b);
    FAIL();
  } catch (const TraceFormatError& e) {
    EXPECT_EQ(e.kind(), Kind::bad_magic);
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(ReadTrace, TruncatedPayloadReportsCounts) {
  auto b = bytes_of(minimal_trace());
  b.resize(54);
  try {
    parse_trace(b);
    FAIL();
  } catch (const TraceFormatError& e) {
    EXPECT_EQ(e.kind(), Kind::truncated);
    EXPECT_EQ(e.offset(), 54u);
    EXPECT_NE(std::string(e.what()).find("expected 56 bytes, stream has 54"), std::string::npos) << e.what();
  }
}

TEST(ReadTrace, EveryTruncationRejected) {
  std::mt19937_64 rng(5);
  const auto b = bytes_of(testing::random_trace(rng, 4, 4, 3, 8));
  for (std::size_t n = 0; n < b.size(); ++n) {
    const auto k = kind_of(std::span<const std::byte>(b.data(), n));
    EXPECT_TRUE(k == Kind::truncated || k == Kind::bad_magic) << n;
  }
}

TEST(ReadTrace, UnsupportedVersion) {
  auto b = bytes_of(minimal_trace());
  b[8] = std::byte{2};
  EXPECT_EQ(kind_of(b), Kind::unsupported_version);
}

TEST(ReadTrace, TrailingBytesAreCountMismatch) {
  auto b = bytes_of(minimal_trace());
  b.push_back(std::byte{0});
  EXPECT_EQ(kind_of(b), Kind::count_mismatch);
}

TEST(ReadTrace, InvalidFields) {
  const auto base = bytes_of(minimal_trace());
  for (auto [at, value] : std::vector<std::pair<std::size_t, int>>{{10, 2}, {11, 1}, {12, 2}, {13, 4}, {14, 1}}) {
    auto b = base;
    b[at] = static_cast<std::byte>(value);
    EXPECT_EQ(kind_of(b), Kind::invalid_field) << at;
  }
  auto b = base;
  put_u32(b, 16, 0);
  EXPECT_EQ(kind_of(b), Kind::invalid_field);
  b = base;
  put_u32(b, 24, 1);
  EXPECT_EQ(kind_of(b), Kind::invalid_field);
}

TEST(ReadTrace, HugeDeclaredCountsFailBeforeAllocation) {
  auto b = bytes_of(minimal_trace());
  put_u32(b, 28, 0xffffffffu);
  EXPECT_EQ(kind_of(b), Kind::truncated);
  put_u32(b, 16, 0xffffffffu);
  put_u32(b, 20, 0xffffffffu);
  EXPECT_EQ(kind_of(b), Kind::count_mismatch);  // size arithmetic overflows
  b = bytes_of(minimal_trace());
  put_u32(b, 32, 0xfffffff0u);
  EXPECT_EQ(kind_of(b), Kind::truncated);
}

TEST(ReadTrace, ContinuationLengthMustMatchSteps) {
  auto t = minimal_trace();
  t.header.num_steps = 2;
  t.payload = {0.5f, 0.25f};
  t.header.continuation = {1, 0};
  auto b = bytes_of(t);
  put_u32(b, 40, 1);
  EXPECT_EQ(kind_of(b), Kind::count_mismatch);
}

TEST(ReadTrace, TokenIdOutsideVocabulary) {
  auto t = minimal_trace();
  t.header.prompt = {1};
  auto b = bytes_of(t);
  put_u32(b, 44, 7);
  EXPECT_EQ(kind_of(b), Kind::invalid_field);
}

TEST(ReadTrace, RandomBitFlipsNeverCrash) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 3000; ++trial) {
    auto b = bytes_of(testing::random_trace(rng, 6, 6, 4, 10));
    const int flips = 1 + static_cast<int>(rng() % 4);
    for (int f = 0; f < flips; ++f) b[rng() % b.size()] ^= static_cast<std::byte>(1u << (rng() % 8));
    try {
      const Trace t = parse_trace(b);
      // A flip inside float data can leave a well-formed stream; it must then
      // re-serialize to the same bytes.
      const auto again = serialize_trace(t);
      ASSERT_EQ(again.size(), b.size());
      EXPECT_EQ(std::memcmp(again.data(), b.data(), b.size()), 0);
    } catch (const DataError&) {
    } catch (const InvalidArgument&) {
    }
  }
}

TEST(ReadTraceFile, MissingFile) {
  EXPECT_THROW(read_trace_file("/nonexistent/trace.bin"), DataError);
}

TEST(TraceSource, ReplaysHiddenStatesThroughHead) {
  Trace t;
  t.header.num_layers = 2;
  t.header.hidden_dim = 2;
  t.header.vocab_size = 3;
  t.header.num_steps = 2;
  t.header.layer_offset = 1;
  t.header.continuation = {2, 0};
  t.head = {1, 0, 0, 1, 1, 1};
  t.payload = {0, 0, 1, 2, /* step 1 */ 3, 0, 0, 0};
  const TraceSource src(parse_trace(bytes_of(t)));
  const auto stack = src.layer_stack(0);
  EXPECT_EQ(stack.layer_offset, 1u);
  EXPECT_EQ(stack.hidden[1], (std::vector<float>{1, 2}));
  const auto logits = src.layer_logits({}, 0);
  EXPECT_EQ(logits[1], (LogitVector{1, 2, 3}));
  EXPECT_EQ(src.recorded_token(1), TokenId{0});
  EXPECT_EQ(src.recorded_token(2), std::nullopt);
  EXPECT_THROW(src.layer_logits({}, 2), TraceExhausted);

  DecodeParams p;
  p.max_new_tokens = 2;
  const auto g = decode_energy(src, std::vector<TokenId>{}, p);
  // Step 1 picks layer 1 and ties tokens 0 and 2; the lower id (end of sequence) wins.
  EXPECT_EQ(g.tokens, (std::vector<TokenId>{2, 0}));
  EXPECT_EQ(g.record.steps[0].chosen_layer, 2u);
  EXPECT_EQ(g.record.steps[1].chosen_layer, 1u);
  EXPECT_EQ(g.divergences, 0u);
}

TEST(TraceSource, LogitsPayload) {
  Trace t;
  t.header.payload_kind = PayloadKind::logits;
  t.header.num_layers = 2;
  t.header.hidden_dim = 0;
  t.header.vocab_size = 3;
  t.header.num_steps = 1;
  t.payload = {0, 1, 0, 5, 0, 0};
  const auto b = bytes_of(t);
  EXPECT_EQ(b.size(), 44u + 6 * 4);
  const TraceSource src(parse_trace(b));
  EXPECT_THROW(src.layer_stack(0), InvalidArgument);
  DecodeParams p;
  p.max_new_tokens = 1;
  const auto g = decode_energy(src, std::vector<TokenId>{}, p);
  EXPECT_EQ(g.record.steps[0].chosen_layer, 2u);
  EXPECT_EQ(g.tokens[0], 0u);
}

TEST(TraceFile, WriteAndReadBack) {
  std::mt19937_64 rng(7);
  const auto t = testing::random_trace(rng);
  const auto path = std::filesystem::temp_directory_path() / "egd_test_trace.bin";
  {
    std::ofstream out(path, std::ios::binary);
    write_trace(t, out);
  }
  EXPECT_EQ(read_trace_file(path.string()), t);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace egd
