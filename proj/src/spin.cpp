// Copyright 2026 The qndtomo Authors
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

#include "qndtomo/spin.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qnd {

namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr double kImagTolerance = 1e-9;

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

// Amplitudes of |theta,phi>^{tensor N} in the Dicke basis, index k = J - m.
ComplexVector coherent_amplitudes(double polar, double azimuth, int num_qubits) {
  const double c = std::cos(0.5 * polar);
  const double s = std::sin(0.5 * polar);
  ComplexVector amps(num_qubits + 1);
  const double lg_n = std::lgamma(num_qubits + 1.0);
  for (int k = 0; k <= num_qubits; ++k) {
    const double log_binom = lg_n - std::lgamma(k + 1.0) - std::lgamma(num_qubits - k + 1.0);
    const double mag =
        std::exp(0.5 * log_binom) * std::pow(c, num_qubits - k) * std::pow(s, k);
    amps[k] = std::polar(mag, k * azimuth);
  }
  return amps;
}

}  // namespace

BlochVector BlochVector::from_angles(double polar, double azimuth) {
  return {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
          std::cos(polar)};
}

BlochVector BlochVector::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalize a zero Bloch vector");
  return *this * (1.0 / n);
}

double BlochVector::polar() const {
  return std::atan2(std::hypot(x, y), z);
}

double BlochVector::azimuth() const {
  const double phi = std::atan2(y, x);
  return phi < 0.0 ? phi + 2.0 * std::numbers::pi : phi;
}

CollectiveOps build_ops(int num_qubits) {
  if (num_qubits < 1) throw std::invalid_argument("build_ops: num_qubits must be >= 1");
  const int d = num_qubits + 1;
  const double j = 0.5 * num_qubits;
  CollectiveOps ops;
  ops.num_qubits = num_qubits;
  ops.jx = ComplexMatrix::Zero(d, d);
  ops.jy = ComplexMatrix::Zero(d, d);
  ops.jz = ComplexMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = j - k;
    ops.jz(k, k) = m;
    if (k + 1 < d) {
      // <m|J+|m-1> = sqrt(J(J+1) - m(m-1))
      const double lad = std::sqrt(j * (j + 1.0) - m * (m - 1.0));
      ops.jx(k, k + 1) = 0.5 * lad;
      ops.jx(k + 1, k) = 0.5 * lad;
      ops.jy(k, k + 1) = Complex(0.0, -0.5 * lad);
      ops.jy(k + 1, k) = Complex(0.0, 0.5 * lad);
    }
  }
  return ops;
}

std::vector<double> jz_diagonal(int num_qubits) {
  if (num_qubits < 1) throw std::invalid_argument("jz_diagonal: num_qubits must be >= 1");
  std::vector<double> m(num_qubits + 1);
  for (int k = 0; k <= num_qubits; ++k) m[k] = 0.5 * num_qubits - k;
  return m;
}

SymmetricState::SymmetricState(ComplexVector amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() < 2) throw std::invalid_argument("SymmetricState: need at least 2 amplitudes");
  const double n = amps_.norm();
  if (!std::isfinite(n) || n <= 0.0) {
    throw std::invalid_argument("SymmetricState: amplitudes must be finite with nonzero norm");
  }
  amps_ /= n;
}

SymmetricState dicke_state(int num_qubits, int index) {
  if (num_qubits < 1 || index < 0 || index > num_qubits) {
    throw std::invalid_argument("dicke_state: index out of range");
  }
  ComplexVector amps = ComplexVector::Zero(num_qubits + 1);
  amps[index] = 1.0;
  return SymmetricState(std::move(amps));
}

SymmetricState spin_coherent(const BlochVector& direction, int num_qubits) {
  if (std::abs(direction.norm() - 1.0) > kUnitTolerance) {
    throw std::invalid_argument("spin_coherent: direction must be a unit vector");
  }
  return spin_coherent_angles(direction.polar(), direction.azimuth(), num_qubits);
}

SymmetricState spin_coherent_angles(double polar, double azimuth, int num_qubits) {
  if (num_qubits < 1) throw std::invalid_argument("spin_coherent: num_qubits must be >= 1");
  return SymmetricState(coherent_amplitudes(polar, azimuth, num_qubits));
}

double expect(const SymmetricState& state, const ComplexMatrix& op) {
  require_same_dim(state.dim(), static_cast<int>(op.rows()), "expect");
  require_same_dim(state.dim(), static_cast<int>(op.cols()), "expect");
  const Complex v = state.amplitudes().dot(op * state.amplitudes());
  if (std::abs(v.imag()) > kImagTolerance * std::max(1.0, std::abs(v.real()))) {
    throw std::invalid_argument("expect: operator is not Hermitian on this state");
  }
  return v.real();
}

double expect_jz(const SymmetricState& state) {
  const auto& a = state.amplitudes();
  const double j = 0.5 * state.num_qubits();
  double acc = 0.0;
  for (int k = 0; k < state.dim(); ++k) acc += (j - k) * std::norm(a[k]);
  return acc;
}

BlochVector mean_spin(const SymmetricState& state, const CollectiveOps& ops) {
  return {expect(state, ops.jx), expect(state, ops.jy), expect(state, ops.jz)};
}

double fidelity(const SymmetricState& a, const SymmetricState& b) {
  require_same_dim(a.dim(), b.dim(), "fidelity");
  return std::min(1.0, std::norm(a.amplitudes().dot(b.amplitudes())));
}

double qubit_fidelity(const BlochVector& a, const BlochVector& b) {
  if (std::abs(a.norm() - 1.0) > kUnitTolerance || std::abs(b.norm() - 1.0) > kUnitTolerance) {
    throw std::invalid_argument("qubit_fidelity: both Bloch vectors must be unit");
  }
  return std::clamp(0.5 * (1.0 + a.dot(b)), 0.0, 1.0);
}

std::array<double, 3> symmetric_eigenvalues_3x3(const std::array<std::array<double, 3>, 3>& a) {
  const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  std::array<double, 3> eig{};
  if (p1 == 0.0) {
    eig = {a[0][0], a[1][1], a[2][2]};
    std::sort(eig.begin(), eig.end());
    return eig;
  }
  const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
  const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) +
                    (a[2][2] - q) * (a[2][2] - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  std::array<std::array<double, 3>, 3> b{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b[i][j] = (a[i][j] - (i == j ? q : 0.0)) / p;
  const double det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                     b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                     b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
  const double r = std::clamp(0.5 * det, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double largest = q + 2.0 * p * std::cos(phi);
  const double smallest = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  eig = {smallest, 3.0 * q - largest - smallest, largest};
  return eig;
}

double squeezing_parameter(const SymmetricState& state, const CollectiveOps& ops) {
  require_same_dim(state.dim(), ops.dim(), "squeezing_parameter");
  const auto& psi = state.amplitudes();
  const std::array<ComplexVector, 3> v = {ops.jx * psi, ops.jy * psi, ops.jz * psi};
  std::array<double, 3> mean{};
  for (int i = 0; i < 3; ++i) mean[i] = psi.dot(v[i]).real();
  const double n = ops.num_qubits;
  std::array<std::array<double, 3>, 3> g{};
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const double sym = 2.0 * v[i].dot(v[j]).real();
      g[i][j] = 0.5 * n * sym - (n - 1.0) * mean[i] * mean[j];
      g[j][i] = g[i][j];
    }
  }
  const double jj = ops.spin() * ops.spin();
  return symmetric_eigenvalues_3x3(g)[0] / jj;
}

double squeezing_parameter(const SymmetricState& state) {
  return squeezing_parameter(state, build_ops(state.num_qubits()));
}

std::vector<double> q_function(const SymmetricState& state, std::span<const SpherePoint> grid) {
  const int n = state.num_qubits();
  const double prefactor = (n + 1.0) / (4.0 * std::numbers::pi);
  std::vector<double> out;
  out.reserve(grid.size());
  for (const auto& pt : grid) {
    if (pt.polar < 0.0 || pt.polar > std::numbers::pi) {
      throw std::invalid_argument("q_function: polar angle outside [0, pi]");
    }
    const ComplexVector scs = coherent_amplitudes(pt.polar, pt.azimuth, n);
    out.push_back(prefactor * std::norm(scs.dot(state.amplitudes())));
  }
  return out;
}

}  // namespace qnd
