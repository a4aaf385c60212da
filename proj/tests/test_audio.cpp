#include <pispin/audio.hpp>
#include <pispin/fft.hpp>

#include <catch_amalgamated.hpp>

#include "support.hpp"

#include <complex>
#include <fstream>

using namespace pispin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

AudioSignal decode(const std::vector<std::uint8_t>& bytes) { return decode_wav(bytes); }

double dominant_frequency(const AudioSignal& s) {
  std::size_t n = 1;
  while (n < s.size()) n <<= 1;
  std::vector<std::complex<double>> x(n);
  for (std::size_t i = 0; i < s.size(); ++i) x[i] = s[i];
  Fft(n).forward(x);
  std::size_t best = 1;
  for (std::size_t k = 1; k < n / 2; ++k) {
    if (std::abs(x[k]) > std::abs(x[best])) best = k;
  }
  return static_cast<double>(best) * s.sample_rate_hz() / static_cast<double>(n);
}

}  // namespace

TEST_CASE("16-bit PCM decodes to normalized amplitudes") {
  const auto s = decode(testing::raw_wav(1, 1, 16000, 16, testing::int16_bytes({0, 16384, -16384})));
  REQUIRE(s.size() == 3);
  CHECK(s.sample_rate_hz() == 16000);
  CHECK_THAT(s[0], WithinAbs(0.0, 1e-4));
  CHECK_THAT(s[1], WithinAbs(0.5, 1e-4));
  CHECK_THAT(s[2], WithinAbs(-0.5, 1e-4));
}

TEST_CASE("32-bit float PCM decodes unchanged") {
  const auto s = decode(testing::raw_wav(3, 1, 22050, 32, testing::float_bytes({0.25f, -0.25f})));
  REQUIRE(s.size() == 2);
  CHECK(s[0] == 0.25);
  CHECK(s[1] == -0.25);
}

TEST_CASE("stereo is averaged to mono") {
  const auto s = decode(testing::raw_wav(3, 2, 8000, 32, testing::float_bytes({1.0f, 0.0f})));
  REQUIRE(s.size() == 1);
  CHECK(s[0] == 0.5);
}

TEST_CASE("unsupported and malformed WAV input is an I/O error") {
  const auto kind_of = [](const std::vector<std::uint8_t>& bytes) {
    try {
      decode_wav(bytes);
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("no error");
    return ErrorKind::dsp;
  };
  CHECK(kind_of(testing::raw_wav(7, 1, 8000, 8, {0x7f, 0x80})) == ErrorKind::io);  // mu-law
  CHECK(kind_of(testing::raw_wav(1, 1, 8000, 16, {})) == ErrorKind::io);
  CHECK(kind_of({'n', 'o', 'p', 'e'}) == ErrorKind::io);
  CHECK_THROWS_AS(read_wav("/nonexistent/file.wav"), Error);
}

TEST_CASE("write then read preserves length and amplitude") {
  testing::TempDir dir("audio");
  const AudioSignal in({0.5, -0.5}, 16000);
  CHECK(write_wav(in, dir / "a.wav") == 0);
  const AudioSignal out = read_wav(dir / "a.wav");
  REQUIRE(out.size() == 2);
  CHECK(out.sample_rate_hz() == 16000);
  CHECK_THAT(out[0], WithinAbs(0.5, 1.0 / 32768));
  CHECK_THAT(out[1], WithinAbs(-0.5, 1.0 / 32768));

  const AudioSignal noise = testing::white_noise(5000, 10000, 7, 0.9);
  write_wav(noise, dir / "n.wav");
  const AudioSignal back = read_wav(dir / "n.wav");
  REQUIRE(back.size() == noise.size());
  for (std::size_t i = 0; i < noise.size(); ++i) REQUIRE(std::abs(back[i] - noise[i]) <= 1.0 / 32768);
}

TEST_CASE("out-of-range amplitudes are clipped and counted") {
  const auto enc = encode_wav16(AudioSignal({1.5, 0.0, -2.0}, 8000));
  CHECK(enc.clipped == 2);
  const auto s = decode_wav(enc.bytes);
  CHECK_THAT(s[0], WithinAbs(32767.0 / 32768.0, 1e-12));
  CHECK(s[2] == -1.0);
}

TEST_CASE("empty signal cannot be written") {
  testing::TempDir dir("audio");
  CHECK_THROWS_AS(write_wav(AudioSignal({}, 8000), dir / "e.wav"), Error);
}

TEST_CASE("non-finite samples and bad rates are rejected") {
  CHECK_THROWS_AS(AudioSignal({std::nan("")}, 8000), Error);
  CHECK_THROWS_AS(AudioSignal({0.0}, 0), Error);
}

TEST_CASE("power") {
  CHECK_THAT(power(AudioSignal(std::vector<double>(37, 0.5), 8000)), WithinAbs(0.25, 1e-15));
  CHECK(power(AudioSignal(std::vector<double>(10, 0.0), 8000)) == 0.0);
  CHECK_THAT(power(testing::sine(100.0, 1.0, 8000, 8000)), WithinAbs(0.5, 1e-6));
  CHECK_THROWS_AS(power(AudioSignal({}, 8000)), Error);
  const AudioSignal x = testing::white_noise(1000, 8000, 3);
  for (double c : {0.1, 2.0, -3.5}) CHECK_THAT(power(x.scaled(c)), WithinRel(c * c * power(x), 1e-9));
}

TEST_CASE("resample") {
  const AudioSignal x = testing::white_noise(1234, 22050, 1);
  CHECK(resample(x, 22050) == x);

  const AudioSignal one_second = testing::sine(1000.0, 0.5, 22050, 22050);
  const AudioSignal down = resample(one_second, 10000);
  CHECK(down.sample_rate_hz() == 10000);
  CHECK(down.size() >= 9999);
  CHECK(down.size() <= 10001);
  CHECK_THAT(dominant_frequency(down), WithinAbs(1000.0, 2.0));

  SECTION("passband amplitude preserved within 0.5 dB") {
    for (double f : {200.0, 1000.0, 2000.0}) {
      const AudioSignal tone = testing::sine(f, 0.5, 22050 * 2, 22050);
      const AudioSignal r = resample(tone, 10000);
      // Skip filter edges.
      const AudioSignal mid(std::vector<double>(r.samples().begin() + 1000, r.samples().end() - 1000), 10000);
      const double db = 10.0 * std::log10(power(mid) / 0.125);
      CHECK(std::abs(db) < 0.5);
    }
  }

  SECTION("upsampling also preserves the tone") {
    const AudioSignal tone = testing::sine(440.0, 0.5, 8000, 8000);
    const AudioSignal up = resample(tone, 16000);
    CHECK(up.size() == 16000);
    CHECK_THAT(dominant_frequency(up), WithinAbs(440.0, 2.0));
  }

  CHECK_THROWS_AS(resample(x, 0), Error);
}
