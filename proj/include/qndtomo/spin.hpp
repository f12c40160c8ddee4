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

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qnd {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Real 3-vector used for single-qubit Bloch vectors (pure: norm 1, mixed: norm < 1).
struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static BlochVector from_angles(double polar, double azimuth);

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double dot(const BlochVector& o) const { return x * o.x + y * o.y + z * o.z; }
  BlochVector cross(const BlochVector& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  BlochVector normalized() const;
  double polar() const;
  double azimuth() const;

  BlochVector operator+(const BlochVector& o) const { return {x + o.x, y + o.y, z + o.z}; }
  BlochVector operator-(const BlochVector& o) const { return {x - o.x, y - o.y, z - o.z}; }
  BlochVector operator-() const { return {-x, -y, -z}; }
  BlochVector operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const BlochVector&) const = default;
};

inline BlochVector operator*(double s, const BlochVector& v) { return v * s; }

/// Collective angular momentum J = sum_i sigma^(i)/2 restricted to the
/// symmetric subspace. Dicke index k = J - m, so row 0 is m = +J.
struct CollectiveOps {
  ComplexMatrix jx;
  ComplexMatrix jy;
  ComplexMatrix jz;
  int num_qubits = 0;

  double spin() const { return 0.5 * num_qubits; }
  int dim() const { return num_qubits + 1; }
  /// e.J for a real direction (not necessarily unit).
  ComplexMatrix along(const BlochVector& e) const { return e.x * jx + e.y * jy + e.z * jz; }
};

CollectiveOps build_ops(int num_qubits);

/// Diagonal of Jz: m = J, J-1, ..., -J.
std::vector<double> jz_diagonal(int num_qubits);

/// Normalized pure state in the (N+1)-dimensional exchange-symmetric subspace.
class SymmetricState {
 public:
  /// Normalizes `amplitudes`; throws if empty, non-finite or zero norm.
  explicit SymmetricState(ComplexVector amplitudes);

  const ComplexVector& amplitudes() const { return amps_; }
  int num_qubits() const { return static_cast<int>(amps_.size()) - 1; }
  int dim() const { return static_cast<int>(amps_.size()); }

 private:
  ComplexVector amps_;
};

/// |m = J - index>.
SymmetricState dicke_state(int num_qubits, int index);

/// |n>^{tensor N}; throws unless |direction| = 1 within 1e-9.
SymmetricState spin_coherent(const BlochVector& direction, int num_qubits);
SymmetricState spin_coherent_angles(double polar, double azimuth, int num_qubits);

/// <psi|op|psi>; throws on dimension mismatch or a non-negligible imaginary part.
double expect(const SymmetricState& state, const ComplexMatrix& op);
double expect_jz(const SymmetricState& state);
/// <J> as a 3-vector (units of hbar, not normalized by J).
BlochVector mean_spin(const SymmetricState& state, const CollectiveOps& ops);

double fidelity(const SymmetricState& a, const SymmetricState& b);

/// (1 + a.b)/2 for pure qubits; requires unit norms within 1e-9.
double qubit_fidelity(const BlochVector& a, const BlochVector& b);

/// Eigenvalues of a real symmetric 3x3 matrix in ascending order (closed form).
std::array<double, 3> symmetric_eigenvalues_3x3(const std::array<std::array<double, 3>, 3>& m);

/// xi_T^2 = lambda_min(G) / J^2 with
/// G_ij = (N/2)<J_i J_j + J_j J_i> - (N-1)<J_i><J_j>.
double squeezing_parameter(const SymmetricState& state, const CollectiveOps& ops);
double squeezing_parameter(const SymmetricState& state);

/// 10 log10(xi^2). Squeezed states come out negative.
inline double to_decibels(double xi_squared) { return 10.0 * std::log10(xi_squared); }

struct SpherePoint {
  double polar = 0.0;
  double azimuth = 0.0;
};

/// Spin-Husimi Q(theta, phi) = (N+1)/(4 pi) |<theta,phi|psi>|^2 at each grid point.
std::vector<double> q_function(const SymmetricState& state, std::span<const SpherePoint> grid);

}  // namespace qnd
