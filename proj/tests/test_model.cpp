// Copyright 2026 quditctl authors
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

#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <set>

#include "quditctl/linalg.hpp"
#include "quditctl/model.hpp"

using namespace quditctl;

namespace {

PulseSet random_pulses(int M, double T, double omega_max,
                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.0, omega_max);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
  PulseSet p;
  p.M = M;
  p.T = T;
  p.omega_max = omega_max;
  p.resize_segments();
  for (auto& tone : p.amplitudes)
    for (auto& a : tone) a = std::polar(mag(rng), ph(rng));
  return p;
}

// Transition and carrier frequencies recomputed from scratch: level spacing
// shrinks by alpha per rung, qudit 2 sits delta above qudit 1.
double transition_freq(const DeviceModel& dev, int j, int kprime) {
  double base = (j == 1) ? 0.0 : dev.delta;
  return base - (kprime - 1) * dev.alpha;
}

double carrier_freq(const DeviceModel& dev, int i, int k) {
  return transition_freq(dev, i, k);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("coupling kind names round-trip") {
  for (CouplingKind kind :
       {CouplingKind::QubitBaseline, CouplingKind::ParametricLadder,
        CouplingKind::CollectiveUniform, CouplingKind::FourTone,
        CouplingKind::CapacitiveRaw}) {
    CHECK(coupling_kind_from_name(coupling_kind_name(kind)) == kind);
  }
  CHECK_THROWS(coupling_kind_from_name("no-such-coupling"));
}

TEST_CASE("qubit baseline coupling has exactly two entries") {
  DeviceModel dev;
  Matrix h = build_coupling({CouplingKind::QubitBaseline, 3}, dev);
  REQUIRE(h.rows() == 9);
  CHECK(std::abs(h(1, 3) - 1.0) == 0.0);
  CHECK(std::abs(h(3, 1) - 1.0) == 0.0);
  int nonzero = 0;
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c)
      if (std::abs(h(r, c)) > 0.0) ++nonzero;
  CHECK(nonzero == 2);
}

TEST_CASE("four-tone coupling entries and norm") {
  DeviceModel dev;
  Matrix h = build_coupling({CouplingKind::FourTone, 3}, dev);
  const int i00 = 0, i02 = 2, i20 = 6, i22 = 8, i11 = 4;
  CHECK(std::abs(h(i00, i11) - 1.0) <= 1e-15);
  CHECK(std::abs(h(i02, i11) - std::sqrt(2.0)) <= 1e-15);
  CHECK(std::abs(h(i20, i11) - std::sqrt(2.0)) <= 1e-15);
  CHECK(std::abs(h(i22, i11) - 2.0) <= 1e-15);
  CHECK(hermiticity_defect(h) <= 1e-15);
  CHECK(operator_norm(h) == doctest::Approx(3.0).epsilon(1e-12));

  // Entries other than the four pairs and conjugates vanish.
  double off = 0.0;
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) {
      bool listed = (c == i11 && (r == i00 || r == i02 || r == i20 ||
                                  r == i22)) ||
                    (r == i11 && (c == i00 || c == i02 || c == i20 ||
                                  c == i22));
      if (!listed) off = std::max(off, std::abs(h(r, c)));
    }
  CHECK(off == 0.0);
}

TEST_CASE("four-tone coupling embedded at d_sim=4 stays on the qutrit block") {
  DeviceModel dev;
  dev.d_sim = 4;
  Matrix h4 = build_coupling({CouplingKind::FourTone, 3}, dev);
  REQUIRE(h4.rows() == 16);

  dev.d_sim = 3;
  Matrix h3 = build_coupling({CouplingKind::FourTone, 3}, dev);

  // The two-qutrit block of the embedded matrix matches entry for entry.
  for (int n1 = 0; n1 < 3; ++n1)
    for (int n2 = 0; n2 < 3; ++n2)
      for (int m1 = 0; m1 < 3; ++m1)
        for (int m2 = 0; m2 < 3; ++m2)
          CHECK(std::abs(h4(4 * n1 + n2, 4 * m1 + m2) -
                         h3(3 * n1 + n2, 3 * m1 + m2)) == 0.0);

  // Rows and columns touching level 3 vanish.
  for (int idx = 0; idx < 16; ++idx) {
    if (idx / 4 < 3 && idx % 4 < 3) continue;
    CHECK(h4.row(idx).cwiseAbs().maxCoeff() == 0.0);
    CHECK(h4.col(idx).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("parametric ladder coupling at d=3") {
  DeviceModel dev;
  Matrix h = build_coupling({CouplingKind::ParametricLadder, 3}, dev);
  const int i12 = 5, i21 = 7;
  CHECK(std::abs(h(i21, i12) - 2.0) <= 1e-15);
  CHECK(std::abs(h(i12, i21) - 2.0) <= 1e-15);
  int nonzero = 0;
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c)
      if (std::abs(h(r, c)) > 0.0) ++nonzero;
  CHECK(nonzero == 2);
  CHECK(operator_norm(h) == doctest::Approx(2.0).epsilon(1e-12));

  for (int d = 2; d <= 6; ++d) {
    DeviceModel dv;
    dv.d_sim = d;
    Matrix hd = build_coupling({CouplingKind::ParametricLadder, d}, dv);
    CHECK(operator_norm(hd) == doctest::Approx(double(d - 1)).epsilon(1e-12));
  }
}

TEST_CASE("collective uniform coupling at d=3") {
  DeviceModel dev;
  Matrix h = build_coupling({CouplingKind::CollectiveUniform, 3}, dev);
  const int i11 = 4;
  for (int idx : {0, 2, 6, 8})
    CHECK(std::abs(h(idx, i11) - 1.0) <= 1e-15);
  CHECK(hermiticity_defect(h) <= 1e-15);
  CHECK(operator_norm(h) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("capacitive raw coupling matches ladder product") {
  DeviceModel dev;
  Matrix got = build_coupling({CouplingKind::CapacitiveRaw, 3}, dev);

  Matrix a = Matrix::Zero(3, 3);
  for (int n = 1; n < 3; ++n) a(n - 1, n) = std::sqrt(double(n));
  Matrix x = a + Matrix(a.adjoint());
  SpaceSpec s3;
  Matrix want = Matrix(embed_single(x, 1, s3) * embed_single(x, 2, s3));
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("pulse comb vanishes at boundaries and peaks mid-segment") {
  std::mt19937_64 rng(11);
  PulseSet p = random_pulses(8, 2.0, 5.0, rng);
  const double tau = p.tau();
  REQUIRE(tau == doctest::Approx(0.25));

  for (int m = 1; m <= p.M; ++m) {
    double boundary = (m - 1) * tau;
    for (int tone = 0; tone < 4; ++tone) {
      int i = tone / 2 + 1, k = tone % 2 + 1;
      CHECK(std::abs(pulse_value(p, i, k, boundary)) <= 1e-12);
      Complex mid = pulse_value(p, i, k, (m - 0.5) * tau);
      Complex stored = p.amplitudes[p.tone_index(i, k)][m - 1];
      CHECK(std::abs(mid - stored) <= 1e-12);
      Complex quarter = pulse_value(p, i, k, (m - 0.75) * tau);
      CHECK(std::abs(quarter - 0.5 * stored) <= 1e-12);
    }
  }
  CHECK_THROWS(pulse_value(p, 1, 1, -1e-9));
  CHECK_THROWS(pulse_value(p, 1, 1, p.T + 1e-9));
}

TEST_CASE("pulse comb is continuous across segment boundaries") {
  std::mt19937_64 rng(17);
  PulseSet p = random_pulses(16, 3.7, 20.0, rng);
  const double tau = p.tau();
  const double eps = 1e-9 * tau;
  for (int m = 1; m < p.M; ++m) {
    double boundary = m * tau;
    for (int tone = 0; tone < 4; ++tone) {
      int i = tone / 2 + 1, k = tone % 2 + 1;
      Complex left = pulse_value(p, i, k, boundary - eps);
      Complex right = pulse_value(p, i, k, boundary + eps);
      CHECK(std::abs(left - right) <= 1e-6 * p.omega_max);
    }
  }
}

TEST_CASE("segment amplitude returns the flat value") {
  std::mt19937_64 rng(23);
  PulseSet p = random_pulses(10, 1.0, 4.0, rng);
  const double tau = p.tau();
  for (int m = 1; m <= p.M; ++m) {
    for (double frac : {0.1, 0.5, 0.9}) {
      double t = (m - 1 + frac) * tau;
      Complex got = segment_amplitude(p, 1, 2, t);
      CHECK(got == p.amplitudes[p.tone_index(1, 2)][m - 1]);
    }
  }
  // t = T lands in the final segment rather than out of range.
  CHECK(segment_amplitude(p, 2, 1, p.T) ==
        p.amplitudes[p.tone_index(2, 1)][p.M - 1]);
  CHECK_THROWS(segment_amplitude(p, 1, 1, p.T + 1e-9));
}

TEST_CASE("tone table without off-resonant terms is resonant only") {
  DeviceModel dev;
  dev.ort_enabled = false;
  ToneTable table = build_tone_table(dev);
  REQUIRE(table.entries.size() == 4);
  for (const auto& e : table.entries) {
    CHECK(e.j == e.i);
    CHECK(e.kprime == e.k);
    CHECK(e.delta == 0.0);
    CHECK(e.eta == 1.0);
  }
}

TEST_CASE("tone table with off-resonant terms covers six targets per tone") {
  DeviceModel dev;
  dev.ort_enabled = true;
  dev.d_sim = 4;
  ToneTable table = build_tone_table(dev);
  REQUIRE(table.entries.size() == 24);

  for (int i = 1; i <= 2; ++i)
    for (int k = 1; k <= 2; ++k) {
      std::set<std::pair<int, int>> targets;
      int resonant = 0;
      for (const auto& e : table.entries) {
        if (e.i != i || e.k != k) continue;
        targets.insert({e.j, e.kprime});
        if (e.j == i && e.kprime == k) {
          ++resonant;
          CHECK(e.delta == 0.0);
          CHECK(e.eta == 1.0);
        }
      }
      CHECK(targets.size() == 6);
      CHECK(resonant == 1);
      for (int j = 1; j <= 2; ++j)
        for (int kp = 1; kp <= 3; ++kp)
          CHECK(targets.count({j, kp}) == 1);
    }
}

TEST_CASE("tone table detunings and ratios match direct recomputation") {
  DeviceModel dev;
  dev.ort_enabled = true;
  dev.d_sim = 4;
  ToneTable table = build_tone_table(dev);

  for (const auto& e : table.entries) {
    double want_delta =
        carrier_freq(dev, e.i, e.k) - transition_freq(dev, e.j, e.kprime);
    double want_eta = std::sqrt(double(e.kprime)) / std::sqrt(double(e.k));
    CHECK(e.delta == doctest::Approx(want_delta).epsilon(1e-14));
    CHECK(e.eta == doctest::Approx(want_eta).epsilon(1e-14));
  }

  // Spot-check the worked values at alpha=10, delta=15.
  auto find = [&](int i, int k, int j, int kp) -> const ToneEntry& {
    for (const auto& e : table.entries)
      if (e.i == i && e.k == k && e.j == j && e.kprime == kp) return e;
    throw std::runtime_error("entry not found");
  };
  CHECK(find(1, 1, 1, 2).delta == doctest::Approx(10.0));
  CHECK(find(1, 1, 1, 2).eta == doctest::Approx(std::sqrt(2.0)));
  CHECK(find(1, 1, 2, 2).delta == doctest::Approx(-5.0));
  CHECK(find(2, 2, 1, 1).delta == doctest::Approx(5.0));
  CHECK(find(2, 2, 1, 1).eta == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(find(1, 2, 2, 3).delta == doctest::Approx(-5.0));
  CHECK(find(1, 2, 2, 3).eta ==
        doctest::Approx(std::sqrt(3.0) / std::sqrt(2.0)));
  CHECK(find(1, 1, 2, 1).delta == doctest::Approx(-15.0));
  CHECK(find(1, 1, 1, 3).delta == doctest::Approx(20.0));
}

TEST_CASE("cross-drive attenuation scales only cross-qudit entries") {
  DeviceModel dev;
  dev.ort_enabled = true;
  dev.d_sim = 4;
  dev.cross_drive_scale = 0.25;
  ToneTable scaled = build_tone_table(dev);
  dev.cross_drive_scale = 1.0;
  ToneTable full = build_tone_table(dev);
  REQUIRE(scaled.entries.size() == full.entries.size());
  for (size_t n = 0; n < full.entries.size(); ++n) {
    const auto& a = full.entries[n];
    const auto& b = scaled.entries[n];
    double factor = (a.j == a.i) ? 1.0 : 0.25;
    CHECK(b.eta == doctest::Approx(a.eta * factor).epsilon(1e-14));
  }
}

TEST_CASE("flat ladder ratio override sets eta to the cross scale only") {
  DeviceModel dev;
  dev.ort_enabled = true;
  dev.d_sim = 4;
  dev.harmonic_ladder_ratio = false;
  ToneTable table = build_tone_table(dev);
  for (const auto& e : table.entries) CHECK(e.eta == 1.0);
}

TEST_CASE("zero amplitudes assemble to the bare coupling") {
  DeviceModel dev;
  Matrix coupling = build_coupling({CouplingKind::FourTone, 3}, dev);
  ToneTable tones = build_tone_table(dev);
  PulseSet p;
  p.M = 5;
  p.T = 1.0;
  p.omega_max = 10.0;
  p.resize_segments();
  for (double t : {0.0, 0.3, 0.77, 1.0}) {
    Matrix h = assemble_hamiltonian(dev, coupling, p, tones, t);
    CHECK((h - coupling).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("single resonant tone adds the expected drive block") {
  DeviceModel dev;
  Matrix coupling = build_coupling({CouplingKind::FourTone, 3}, dev);
  ToneTable tones = build_tone_table(dev);
  PulseSet p;
  p.M = 4;
  p.T = 1.0;
  p.omega_max = 10.0;
  p.resize_segments();
  const double amp = 1.3;
  for (auto& a : p.amplitudes[p.tone_index(1, 1)]) a = amp;

  SpaceSpec s3;
  const double t = 0.4;
  Complex omega = segment_amplitude(p, 1, 1, t);
  Matrix drive = Matrix::Zero(3, 3);
  drive(1, 0) = omega;  // raising entry carries the amplitude
  drive(0, 1) = std::conj(omega);
  Matrix want = coupling + embed_single(drive, 1, s3);

  Matrix got = assemble_hamiltonian(dev, coupling, p, tones, t);
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("assembled Hamiltonian is Hermitian at random times") {
  std::mt19937_64 rng(2718);
  DeviceModel dev;
  dev.ort_enabled = true;
  dev.d_sim = 4;
  Matrix coupling = build_coupling({CouplingKind::FourTone, 3}, dev);
  ToneTable tones = build_tone_table(dev);
  PulseSet p = random_pulses(12, 0.9, 40.0, rng);
  std::uniform_real_distribution<double> ts(0.0, p.T);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix h = assemble_hamiltonian(dev, coupling, p, tones, ts(rng));
    CHECK(hermiticity_defect(h) <= 1e-12);
  }
}

TEST_CASE("without off-resonant terms level 3 is never touched") {
  std::mt19937_64 rng(31415);
  DeviceModel dev;
  dev.ort_enabled = false;
  dev.d_sim = 4;
  Matrix coupling = build_coupling({CouplingKind::FourTone, 3}, dev);
  ToneTable tones = build_tone_table(dev);
  PulseSet p = random_pulses(6, 0.7, 20.0, rng);
  std::uniform_real_distribution<double> ts(0.0, p.T);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix h = assemble_hamiltonian(dev, coupling, p, tones, ts(rng));
    for (int idx = 0; idx < 16; ++idx) {
      if (idx / 4 < 3 && idx % 4 < 3) continue;
      CHECK(h.row(idx).cwiseAbs().maxCoeff() == 0.0);
      CHECK(h.col(idx).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("full assembly matches a term-by-term oracle") {
  std::mt19937_64 rng(161803);
  DeviceModel dev;
  dev.ort_enabled = true;
  dev.d_sim = 4;
  SpaceSpec space = dev.space();
  Matrix coupling = build_coupling({CouplingKind::FourTone, 3}, dev);
  ToneTable tones = build_tone_table(dev);
  PulseSet p = random_pulses(7, 1.1, 25.0, rng);

  // Oracle: for each table entry place eta * Omega(t) * exp(-i delta g t) on
  // the single-qudit raising operator |k'><k'-1| and embed, then add the
  // conjugate. Phases are trivially 1 at t=0, matching the disabled case plus
  // real-weighted cross terms.
  auto oracle = [&](double t) {
    Matrix h = coupling;
    for (const auto& e : tones.entries) {
      Complex omega = segment_amplitude(p, e.i, e.k, t);
      Complex w = dev.g * e.eta * omega *
                  std::exp(Complex(0.0, -e.delta * dev.g * t));
      Matrix raise = Matrix::Zero(4, 4);
      raise(e.kprime, e.kprime - 1) = w;
      Matrix term = embed_single(raise, e.j, space);
      h += term + Matrix(term.adjoint());
    }
    return h;
  };

  for (double t : {0.0, 0.123, 0.5, 1.0999}) {
    Matrix got = assemble_hamiltonian(dev, coupling, p, tones, t);
    CHECK((got - oracle(t)).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

}  // TEST_SUITE("model")
