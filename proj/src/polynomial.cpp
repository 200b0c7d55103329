#include "eqdim/polynomial.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace eqdim {

Poly1::Poly1(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) coeffs_.push_back(Complex(0, 0));
}

Complex Poly1::eval(Complex z) const {
  Complex acc = coeffs_.back();
  for (std::size_t i = coeffs_.size() - 1; i-- > 0;) {
    acc = acc * z + coeffs_[i];
  }
  return acc;
}

Poly1 Poly1::derivative() const {
  if (coeffs_.size() <= 1) return Poly1({Complex(0, 0)});
  std::vector<Complex> d(coeffs_.size() - 1);
  for (std::size_t i = 1; i < coeffs_.size(); ++i) {
    d[i - 1] = coeffs_[i] * static_cast<double>(i);
  }
  return Poly1(std::move(d));
}

double Poly1::coeff_norm() const {
  double m = 0.0;
  for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

std::vector<Complex> poly_roots(const Poly1& p, double lead_tol) {
  std::vector<Complex> c = p.coeffs();
  const double scale = p.coeff_norm();
  if (scale <= 0.0) return {};
  while (c.size() > 1 && std::abs(c.back()) < lead_tol * scale) c.pop_back();
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return {};

  std::vector<Complex> roots;
  roots.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    roots.push_back(-c[0] / c[1]);
  } else {
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[static_cast<std::size_t>(i)] / c[static_cast<std::size_t>(n)];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    for (int i = 0; i < n; ++i) roots.push_back(solver.eigenvalues()(i));
  }

  // Guarded Newton polish: keep a step only if it reduces |p|.
  const Poly1 dp = p.derivative();
  for (auto& r : roots) {
    for (int it = 0; it < 3; ++it) {
      const Complex pv = p.eval(r);
      const Complex dv = dp.eval(r);
      if (std::abs(dv) < 1e-300) break;
      const Complex cand = r - pv / dv;
      if (std::abs(p.eval(cand)) < std::abs(pv)) {
        r = cand;
      } else {
        break;
      }
    }
  }
  return roots;
}

std::vector<std::pair<Complex, int>> cluster_roots(const std::vector<Complex>& roots,
                                                   double cluster_tol) {
  std::vector<std::pair<Complex, int>> out;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    Complex sum = roots[i];
    int count = 1;
    used[i] = true;
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(roots[j] - roots[i]) <= cluster_tol * std::max(1.0, std::abs(roots[i]))) {
        sum += roots[j];
        count += 1;
        used[j] = true;
      }
    }
    out.emplace_back(sum / static_cast<double>(count), count);
  }
  return out;
}

HomPoly::HomPoly(int nvars, int degree, std::vector<Monomial> monomials)
    : nvars_(nvars), degree_(degree), mono_(std::move(monomials)) {
  for (const auto& m : mono_) {
    int total = 0;
    for (int v = 0; v < nvars_; ++v) total += m.exps[static_cast<std::size_t>(v)];
    if (total != degree_) {
      throw std::invalid_argument("HomPoly: monomial degree mismatch");
    }
  }
  normalize();
}

HomPoly HomPoly::monomial(int nvars, Complex c, std::array<int, 3> exps) {
  int deg = 0;
  for (int v = 0; v < nvars; ++v) deg += exps[static_cast<std::size_t>(v)];
  return HomPoly(nvars, deg, {Monomial{c, exps}});
}

void HomPoly::normalize() {
  std::map<std::array<int, 3>, Complex> acc;
  for (const auto& m : mono_) acc[m.exps] += m.coeff;
  mono_.clear();
  for (const auto& [exps, coeff] : acc) {
    if (std::abs(coeff) > 0.0) mono_.push_back(Monomial{coeff, exps});
  }
}

Complex HomPoly::eval(const std::array<Complex, 3>& x) const {
  Complex acc(0, 0);
  for (const auto& m : mono_) {
    Complex term = m.coeff;
    for (int v = 0; v < nvars_; ++v) {
      for (int e = 0; e < m.exps[static_cast<std::size_t>(v)]; ++e) term *= x[static_cast<std::size_t>(v)];
    }
    acc += term;
  }
  return acc;
}

HomPoly HomPoly::partial(int var) const {
  std::vector<Monomial> out;
  for (const auto& m : mono_) {
    const int e = m.exps[static_cast<std::size_t>(var)];
    if (e == 0) continue;
    Monomial d = m;
    d.coeff *= static_cast<double>(e);
    d.exps[static_cast<std::size_t>(var)] = e - 1;
    out.push_back(d);
  }
  return HomPoly(nvars_, std::max(0, degree_ - 1), std::move(out));
}

std::array<Complex, 3> HomPoly::gradient(const std::array<Complex, 3>& x) const {
  std::array<Complex, 3> g{Complex(0, 0), Complex(0, 0), Complex(0, 0)};
  for (const auto& m : mono_) {
    // evaluate each partial directly from the monomial list
    for (int v = 0; v < nvars_; ++v) {
      const int e = m.exps[static_cast<std::size_t>(v)];
      if (e == 0) continue;
      Complex term = m.coeff * static_cast<double>(e);
      for (int w = 0; w < nvars_; ++w) {
        const int p = m.exps[static_cast<std::size_t>(w)] - (w == v ? 1 : 0);
        for (int q = 0; q < p; ++q) term *= x[static_cast<std::size_t>(w)];
      }
      g[static_cast<std::size_t>(v)] += term;
    }
  }
  return g;
}

HomPoly HomPoly::operator+(const HomPoly& other) const {
  std::vector<Monomial> out = mono_;
  out.insert(out.end(), other.mono_.begin(), other.mono_.end());
  return HomPoly(nvars_, degree_, std::move(out));
}

HomPoly HomPoly::operator-(const HomPoly& other) const {
  return *this + other.scaled(Complex(-1, 0));
}

HomPoly HomPoly::operator*(const HomPoly& other) const {
  std::vector<Monomial> out;
  out.reserve(mono_.size() * other.mono_.size());
  for (const auto& a : mono_) {
    for (const auto& b : other.mono_) {
      Monomial m;
      m.coeff = a.coeff * b.coeff;
      for (int v = 0; v < 3; ++v) {
        m.exps[static_cast<std::size_t>(v)] = a.exps[static_cast<std::size_t>(v)] + b.exps[static_cast<std::size_t>(v)];
      }
      out.push_back(m);
    }
  }
  return HomPoly(nvars_, degree_ + other.degree_, std::move(out));
}

HomPoly HomPoly::scaled(Complex c) const {
  std::vector<Monomial> out = mono_;
  for (auto& m : out) m.coeff *= c;
  return HomPoly(nvars_, degree_, std::move(out));
}

HomPoly HomPoly::compose(const std::vector<HomPoly>& args) const {
  if (static_cast<int>(args.size()) != nvars_) {
    throw std::invalid_argument("HomPoly::compose: wrong argument count");
  }
  const int inner = args[0].degree();
  HomPoly acc = HomPoly::zero(args[0].nvars(), degree_ * inner);
  for (const auto& m : mono_) {
    HomPoly term = HomPoly::monomial(args[0].nvars(), m.coeff, {0, 0, 0});
    for (int v = 0; v < nvars_; ++v) {
      for (int e = 0; e < m.exps[static_cast<std::size_t>(v)]; ++e) {
        term = term * args[static_cast<std::size_t>(v)];
      }
    }
    acc = acc + term;
  }
  return acc;
}

Poly1 HomPoly::dehomogenize_p1() const {
  if (nvars_ != 2) throw std::invalid_argument("dehomogenize_p1: needs 2 variables");
  std::vector<Complex> c(static_cast<std::size_t>(degree_) + 1, Complex(0, 0));
  for (const auto& m : mono_) {
    c[static_cast<std::size_t>(m.exps[0])] += m.coeff;
  }
  return Poly1(std::move(c));
}

double HomPoly::coeff_norm() const {
  double m = 0.0;
  for (const auto& mono : mono_) m = std::max(m, std::abs(mono.coeff));
  return m;
}

}  // namespace eqdim
