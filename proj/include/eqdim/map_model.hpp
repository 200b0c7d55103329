#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqdim/polynomial.hpp"
#include "eqdim/projective.hpp"
#include "eqdim/rng.hpp"

namespace eqdim {

enum class MapKind {
  rational_p1,      // two homogeneous degree-d polynomials on P^1
  homogeneous_pk,   // k+1 homogeneous degree-d polynomials on P^k
  polynomial_skew,  // triangular polynomial map on C^2, compactified to P^2
};

// Differential of the map at a point, expressed between Fubini-Study
// orthonormalized frames of the largest-coordinate charts at the source and
// the target. Singular values, determinant and norms are therefore the
// intrinsic FS quantities.
struct TangentMatrix {
  std::array<std::array<Complex, 2>, 2> entries{};
  int k = 1;
  double op_norm = 0.0;      // largest singular value
  double inv_norm = 0.0;     // 1/smallest singular value, +inf at critical points
  double fs_jacobian = 0.0;  // |det|^2, the real FS volume Jacobian
};

struct DegreeReport {
  int d_t_numeric = 0;
  int declared_d_t = 0;
  bool hypothesis_ok = false;  // d_t > lambda_{k-1}
};

// FS differential of an arbitrary homogeneous component list at x. Exposed
// separately from MapModel so degree-1 maps (identity, Moebius) can be
// exercised directly.
TangentMatrix fs_differential(const std::vector<HomPoly>& components,
                              const ProjectivePoint& x);

// Explicit endomorphism of P^1 or P^2 with exact evaluation, differentials,
// FS Jacobians, degree data, and distance to the exceptional set J.
// Immutable after construction; all operations are const and thread-safe.
class MapModel {
 public:
  struct Definition {
    std::string id;
    MapKind kind = MapKind::rational_p1;
    int dim = 1;               // k
    int degree = 2;            // algebraic degree d
    std::vector<HomPoly> components;           // k+1 entries, degree d each
    std::optional<int> topological_degree;     // defaults from kind
    std::vector<double> dyn_degrees;           // lambda_1..lambda_k; defaults from kind
    std::vector<HomPoly> j_polynomials;        // optional explicit J description (k=2)
  };

  enum class Validation { strict, lenient };

  static MapModel create(Definition def, Validation validation = Validation::strict);
  static MapModel from_json_file(const std::string& path, Validation validation = Validation::strict);
  static MapModel from_json_text(const std::string& text, Validation validation = Validation::strict);

  const std::string& id() const { return id_; }
  MapKind kind() const { return kind_; }
  int dim() const { return k_; }
  int algebraic_degree() const { return degree_; }
  int topological_degree() const { return d_t_; }
  const std::vector<double>& dyn_degrees() const { return dyn_degrees_; }
  const std::vector<HomPoly>& components() const { return components_; }
  const HomPoly& critical_poly() const { return critical_poly_; }
  const std::vector<ProjectivePoint>& j_points() const { return j_points_; }
  const std::vector<HomPoly>& j_polynomials() const { return j_polys_; }
  bool preimages_supported() const { return preimages_supported_; }

  // f(x), normalized. Throws AllComponentsVanish at indeterminacy points.
  ProjectivePoint evaluate(const ProjectivePoint& x) const;

  ProjectivePoint iterate(const ProjectivePoint& x, int n) const;

  TangentMatrix differential(const ProjectivePoint& x) const;

  // Jac f(x) >= 0 with f^* omega^k = Jac(f) omega^k.
  double fs_jacobian(const ProjectivePoint& x) const;

  // All preimages with multiplicity; the multiplicity-weighted count equals
  // d_t and every preimage w satisfies dist(f(w), y) <= 1e-9.
  std::vector<std::pair<ProjectivePoint, int>> preimages(const ProjectivePoint& y) const;

  // Chordal distance to J for P^1 (finite point list), first-order proxy
  // |v(x)| / max(||grad v(x)||, g_floor) for P^2.
  double distance_to_J(const ProjectivePoint& x) const;

  // Preimage-counts d_t at 3 random non-critical-value points and checks the
  // standing hypothesis. Throws DegreeMismatch on disagreement.
  DegreeReport check_degrees(std::uint64_t rng_seed = 7) const;

  // f^n as an explicit map with composed polynomial components.
  MapModel iterate_composed(int n) const;

 private:
  MapModel() = default;
  void build_critical_data(Validation validation);

  std::string id_;
  MapKind kind_ = MapKind::rational_p1;
  int k_ = 1;
  int degree_ = 2;
  int d_t_ = 2;
  std::vector<double> dyn_degrees_;
  std::vector<HomPoly> components_;
  HomPoly critical_poly_;
  std::vector<ProjectivePoint> j_points_;  // k = 1
  std::vector<HomPoly> j_polys_;           // k = 2
  bool preimages_supported_ = true;
  bool coordinatewise_ = false;  // each component c_i * x_i^d
};

// Newton solve of f(w) = target starting from start, in largest-coordinate
// charts, with step damping 1/2 on residual increase. Iterates to machine
// accuracy (the composed branches need residuals far below the 1e-9
// acceptance threshold). Returns the solution and its final residual.
struct NewtonResult {
  ProjectivePoint point;
  double residual = 1.0;
  bool converged = false;  // residual <= tol
};
NewtonResult newton_inverse_step(const MapModel& map, const ProjectivePoint& target,
                                 const ProjectivePoint& start, double tol = 1e-9,
                                 int max_iter = 30);

}  // namespace eqdim
