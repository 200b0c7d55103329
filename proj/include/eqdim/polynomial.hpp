#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace eqdim {

using Complex = std::complex<double>;

// Univariate complex polynomial, coefficients in ascending degree order.
class Poly1 {
 public:
  Poly1() = default;
  explicit Poly1(std::vector<Complex> coeffs);

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<Complex>& coeffs() const { return coeffs_; }
  Complex eval(Complex z) const;
  Poly1 derivative() const;
  double coeff_norm() const;

 private:
  std::vector<Complex> coeffs_{Complex(0, 0)};
};

// All roots via companion-matrix eigenvalues followed by a guarded Newton
// polish. Trailing near-zero leading coefficients are trimmed relative to
// the largest coefficient.
std::vector<Complex> poly_roots(const Poly1& p, double lead_tol = 1e-12);

// Roots grouped by clustering within cluster_tol; second element is the
// multiplicity.
std::vector<std::pair<Complex, int>> cluster_roots(const std::vector<Complex>& roots,
                                                   double cluster_tol = 1e-7);

// Sparse homogeneous polynomial in nvars variables (2 or 3).
class HomPoly {
 public:
  struct Monomial {
    Complex coeff;
    std::array<int, 3> exps{0, 0, 0};
  };

  HomPoly() = default;
  HomPoly(int nvars, int degree, std::vector<Monomial> monomials);

  static HomPoly zero(int nvars, int degree) { return HomPoly(nvars, degree, {}); }
  static HomPoly monomial(int nvars, Complex c, std::array<int, 3> exps);

  int nvars() const { return nvars_; }
  int degree() const { return degree_; }
  const std::vector<Monomial>& monomials() const { return mono_; }
  bool is_zero() const { return mono_.empty(); }

  Complex eval(const std::array<Complex, 3>& x) const;
  HomPoly partial(int var) const;
  std::array<Complex, 3> gradient(const std::array<Complex, 3>& x) const;

  HomPoly operator+(const HomPoly& other) const;
  HomPoly operator-(const HomPoly& other) const;
  HomPoly operator*(const HomPoly& other) const;
  HomPoly scaled(Complex c) const;

  // Substitute args[i] for variable i; all args must share a degree.
  HomPoly compose(const std::vector<HomPoly>& args) const;

  // Dehomogenize w.r.t. the last variable of a 2-variable polynomial:
  // p(z) = P(z, 1), ascending coefficients up to this->degree().
  Poly1 dehomogenize_p1() const;

  double coeff_norm() const;

 private:
  void normalize();

  int nvars_ = 2;
  int degree_ = 0;
  std::vector<Monomial> mono_;
};

}  // namespace eqdim
