#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rdanon/detail/base64.hpp"
#include "rdanon/diagnostics.hpp"
#include "rdanon/keying.hpp"

namespace rdanon {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rdanon_keying_" + name);
}

TEST(Keygen, SeededIsReproducible) {
  EXPECT_EQ(keygen({4, 32, 32}, TestSeed{42}), keygen({4, 32, 32}, TestSeed{42}));
  EXPECT_NE(keygen({4, 32, 32}, TestSeed{42}), keygen({4, 32, 32}, TestSeed{43}));
}

TEST(Keygen, PackedSize) {
  const SecretKey key = keygen({4, 32, 32}, TestSeed{1});
  EXPECT_EQ(key.bit_count(), 4096u);
  EXPECT_EQ(key.packed().size(), 512u);
  EXPECT_EQ(keygen({1, 3, 3}, TestSeed{1}).packed().size(), 2u);
}

TEST(Keygen, BalancedBits) {
  const SecretKey key = keygen({1, 1000, 1000}, TestSeed{7});
  const double frac = static_cast<double>(key.popcount()) / 1e6;
  EXPECT_GE(frac, 0.4985);
  EXPECT_LE(frac, 0.5015);
}

TEST(Keygen, OsEntropyProducesDistinctKeys) {
  const SecretKey a = keygen({1, 64, 64});
  const SecretKey b = keygen({1, 64, 64});
  EXPECT_NE(a, b);
  const double frac = static_cast<double>(a.popcount()) / 4096.0;
  EXPECT_NEAR(frac, 0.5, 5.0 * 0.5 / 64.0);
}

TEST(Keygen, RejectsEmptyDims) {
  EXPECT_THROW(keygen({0, 4, 4}, TestSeed{1}), DimsError);
  EXPECT_THROW(keygen({1, 0, 4}), DimsError);
}

TEST(Keygen, PaddingBitsStayClear) {
  const SecretKey key = keygen({1, 3, 3}, TestSeed{99});
  EXPECT_EQ(key.packed().back() & 0x7F, 0);
}

TEST(Rademacher, SignMapping) {
  // bits 0,1,1,0 -> byte 0b0110'0000
  const SecretKey key({1, 1, 4}, {0x60});
  EXPECT_EQ(to_rademacher(key), (std::vector<int>{-1, 1, 1, -1}));
  for (int k : to_rademacher(SecretKey::identity({2, 3, 5}))) EXPECT_EQ(k, 1);
  const SecretKey random = keygen({2, 5, 7}, TestSeed{3});
  const auto signs = to_rademacher(random);
  for (std::size_t i = 0; i < signs.size(); ++i) EXPECT_EQ((signs[i] + 1) / 2, random.bit(i));
}

TEST(ApplyKey, IdentityKeyLeavesLatentUnchanged) {
  const Latent z = oracle::normal_latent({2, 4, 4}, 1);
  EXPECT_EQ(apply_key(z, SecretKey::identity(z.dims())), z);
}

TEST(ApplyKey, SignArithmetic) {
  const SecretKey key({1, 1, 2}, {0x40});  // bits 0,1 -> signs -1,+1
  const Latent out = apply_key(Latent({1, 1, 2}, {1.5, -2.0}), key);
  EXPECT_EQ(out[0], -1.5);
  EXPECT_EQ(out[1], -2.0);
}

TEST(ApplyKey, InvolutionBitwise) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Latent z = oracle::normal_latent({4, 16, 16}, seed);
    const SecretKey key = keygen(z.dims(), TestSeed{seed + 100});
    EXPECT_EQ(apply_key(apply_key(z, key), key), z);
    const LatentMask mask = [&] {
      LatentMask m(16, 16);
      for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x) m.set(y, x, (x * 7 + y * 3 + seed) % 5 < 2);
      return m;
    }();
    EXPECT_EQ(apply_key_masked(apply_key_masked(z, key, mask), key, mask), z);
  }
}

TEST(ApplyKey, DimsMismatch) {
  const Latent z({1, 4, 4});
  try {
    apply_key(z, keygen({1, 4, 5}, TestSeed{1}));
    FAIL() << "expected DimsError";
  } catch (const DimsError& e) {
    EXPECT_NE(std::string(e.what()).find("key/latent dims mismatch"), std::string::npos);
  }
  EXPECT_THROW(apply_key_masked(z, keygen({1, 4, 4}, TestSeed{1}), LatentMask(4, 5)), DimsError);
}

TEST(ApplyKeyMasked, DegenerateMasks) {
  const Latent z = oracle::normal_latent({3, 5, 5}, 2);
  const SecretKey key = keygen(z.dims(), TestSeed{5});
  EXPECT_EQ(apply_key_masked(z, key, LatentMask(5, 5, 1)), apply_key(z, key));
  EXPECT_EQ(apply_key_masked(z, key, LatentMask(5, 5, 0)), z);
}

TEST(ApplyKeyMasked, UnmaskedCoordinatesUntouched) {
  const Latent z = oracle::normal_latent({3, 6, 6}, 3);
  const SecretKey key = keygen(z.dims(), TestSeed{6});
  LatentMask mask(6, 6);
  for (std::size_t y = 0; y < 6; ++y) mask.set(y, y, true);
  const Latent out = apply_key_masked(z, key, mask);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        if (!mask(y, x)) {
          EXPECT_EQ(std::bit_cast<std::uint64_t>(out.at(c, y, x)),
                    std::bit_cast<std::uint64_t>(z.at(c, y, x)));
        } else {
          const std::size_t i = (c * 6 + y) * 6 + x;
          EXPECT_EQ(out[i], key.bit(i) ? z[i] : -z[i]);
        }
      }
}

TEST(ApplyKey, KeyedGaussianStaysGaussian) {
  const std::size_t n = 100000;
  const Latent eps = oracle::normal_latent({1, 1, n}, 77);
  for (const SecretKey& key : {keygen(eps.dims(), TestSeed{1}), SecretKey::identity(eps.dims()),
                               SecretKey::identity(eps.dims()).complement()}) {
    const Latent keyed = apply_key(eps, key);
    const auto report = ks_standard_normal(keyed.values());
    EXPECT_TRUE(report.pass()) << report.ks_stat << " " << report.mean << " " << report.var;
  }
}

TEST(KeyFile, RoundTrip) {
  const SecretKey key = keygen({3, 7, 5}, TestSeed{8});
  const auto path = temp_path("roundtrip.rdk");
  save_key(key, path);
  EXPECT_EQ(load_key(path), key);
  std::filesystem::remove(path);
  EXPECT_EQ(parse_key(format_key(key)), key);
}

TEST(KeyFile, TextLayout) {
  const SecretKey key({1, 2, 4}, {0xA5});
  EXPECT_EQ(format_key(key), "RDK1\ndims 1 2 4\nbits pQ==\n");
  EXPECT_EQ(parse_key("RDK1\ndims 1 2 4\nbits pQ=="), key);
  EXPECT_EQ(parse_key("RDK1\r\ndims 1 2 4\r\nbits pQ==\r\n"), key);
}

TEST(KeyFile, RejectsMalformed) {
  EXPECT_THROW(parse_key("RDK2\ndims 1 2 4\nbits pQ==\n"), FormatError);
  EXPECT_THROW(parse_key("RDK1\ndims 1 2\nbits pQ==\n"), FormatError);
  EXPECT_THROW(parse_key("RDK1\ndims 1 2 4\n"), FormatError);
  EXPECT_THROW(parse_key("RDK1\n"), FormatError);
  EXPECT_THROW(parse_key(""), FormatError);
  EXPECT_THROW(parse_key("RDK1\ndims 1 2 4\nbits p!==\n"), FormatError);
  EXPECT_THROW(parse_key("RDK1\ndims 0 2 4\nbits pQ==\n"), FormatError);
  // Padding bits set: dims 1x1x4 only uses the top nibble.
  EXPECT_THROW(parse_key("RDK1\ndims 1 1 4\nbits pQ==\n"), FormatError);
}

TEST(KeyFile, TruncatedFileIsAnError) {
  const std::string full = format_key(keygen({4, 32, 32}, TestSeed{2}));
  EXPECT_THROW(parse_key(full.substr(0, full.size() / 2)), FormatError);
}

TEST(KeyFile, PayloadLengthMustMatchDims) {
  std::vector<std::uint8_t> bytes(511, 0x5A);
  const std::string text = "RDK1\ndims 4 32 32\nbits " + detail::base64_encode(bytes) + "\n";
  try {
    parse_key(text);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("inconsistent"), std::string::npos);
  }
}

TEST(Base64, Vectors) {
  auto enc = [](std::string s) { return detail::base64_encode({s.begin(), s.end()}); };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  EXPECT_FALSE(detail::base64_decode("Zg="));
  EXPECT_FALSE(detail::base64_decode("Zh=="));  // non-zero trailing bits
  EXPECT_FALSE(detail::base64_decode("Z==="));
  EXPECT_FALSE(detail::base64_decode("Zg==Zg=="));
  std::mt19937 eng(1);
  for (int len = 0; len < 40; ++len) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(eng());
    EXPECT_EQ(detail::base64_decode(detail::base64_encode(bytes)), bytes);
  }
}

TEST(KeyHamming, Extremes) {
  const SecretKey key = keygen({4, 32, 32}, TestSeed{3});
  EXPECT_EQ(key_hamming(key, key), 0u);
  EXPECT_EQ(key_hamming(key, key.complement()), 4096u);
  EXPECT_THROW(key_hamming(key, keygen({4, 32, 31}, TestSeed{3})), DimsError);
}

TEST(KeyHamming, IndependentKeysNearHalf) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto h = key_hamming(keygen({4, 32, 32}, TestSeed{2 * s}),
                               keygen({4, 32, 32}, TestSeed{2 * s + 1}));
    EXPECT_GE(h, 1856u);
    EXPECT_LE(h, 2240u);
  }
}

} // namespace
} // namespace rdanon
