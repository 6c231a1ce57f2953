// Copyright (c) 2026 The chaindiar authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "chaindiar/io.hpp"
#include "chaindiar/rng.hpp"
#include "doctest.h"

using namespace chaindiar;

namespace {
std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("wav round trip preserves samples to 16-bit precision") {
  Waveform w;
  w.sample_rate_hz = 8000;
  Rng rng(7);
  for (int i = 0; i < 1600; ++i)
    w.samples.push_back(uniform_real(rng, -0.9, 0.9));
  const std::string path = tmp_path("chaindiar_io_test.wav");
  write_wav(path, w);
  Waveform r = read_wav(path);
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate_hz == 8000);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 0.5 / 32768.0 + 1e-12);
  std::filesystem::remove(path);
}

TEST_CASE("wav reader rejects junk") {
  const std::string path = tmp_path("chaindiar_io_junk.wav");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a wav at all";
  }
  CHECK_THROWS_AS(read_wav(path), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_wav(tmp_path("chaindiar_absent.wav")), DataError);
}

TEST_CASE("text matrix round trip is exact") {
  Matrix m(3, 4);
  Rng rng(11);
  for (Index r = 0; r < 3; ++r)
    for (Index c = 0; c < 4; ++c) m(r, c) = uniform_real(rng, -5.0, 5.0);
  const std::string path = tmp_path("chaindiar_io_test.mat");
  write_matrix_txt(path, m);
  Matrix r = read_matrix_txt(path);
  REQUIRE(r.rows() == 3);
  REQUIRE(r.cols() == 4);
  CHECK((r - m).cwiseAbs().maxCoeff() == 0.0);  // %.17g survives the trip
  std::filesystem::remove(path);
}

TEST_CASE("manifest round trip") {
  std::vector<ManifestEntry> entries = {
      {"mix_0000", "/tmp/a.wav", "/tmp/a.rttm"},
      {"mix_0001", "/tmp/b.wav", "/tmp/b.rttm"},
  };
  const std::string path = tmp_path("chaindiar_io_test.manifest");
  write_manifest(path, entries);
  auto r = read_manifest(path);
  REQUIRE(r.size() == 2);
  CHECK(r[1].id == "mix_0001");
  CHECK(r[1].rttm_path == "/tmp/b.rttm");
  std::filesystem::remove(path);
}
