#include "eqdim/map_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "eqdim/errors.hpp"

namespace eqdim {

namespace {

using Mat2 = std::array<std::array<Complex, 2>, 2>;

Mat2 mat_mul(const Mat2& a, const Mat2& b, int k) {
  Mat2 out{};
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      Complex s(0, 0);
      for (int l = 0; l < k; ++l) {
        s += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] *
             b[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
      }
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
    }
  }
  return out;
}

// alpha on the orthogonal complement of z, beta on the span of z:
// alpha I + (beta - alpha) z z^dagger / ||z||^2.
Mat2 projector_combination(const std::array<Complex, 2>& z, int k, double alpha, double beta) {
  Mat2 m{};
  double n2 = 0.0;
  for (int i = 0; i < k; ++i) n2 += std::norm(z[static_cast<std::size_t>(i)]);
  for (int i = 0; i < k; ++i) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = alpha;
  if (n2 < 1e-280) return m;
  const double diff = beta - alpha;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
          diff * z[static_cast<std::size_t>(i)] * std::conj(z[static_cast<std::size_t>(j)]) / n2;
    }
  }
  return m;
}

struct SingularValues {
  double smax = 0.0;
  double smin = 0.0;
  Complex det{0.0, 0.0};
};

SingularValues singular_values(const Mat2& a, int k) {
  SingularValues sv;
  if (k == 1) {
    const double s = std::abs(a[0][0]);
    sv.smax = s;
    sv.smin = s;
    sv.det = a[0][0];
    return sv;
  }
  sv.det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  // eigenvalues of A^dagger A
  const double t = std::norm(a[0][0]) + std::norm(a[0][1]) + std::norm(a[1][0]) + std::norm(a[1][1]);
  const double d = std::norm(sv.det);
  const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * d));
  sv.smax = std::sqrt(std::max(0.0, 0.5 * (t + disc)));
  sv.smin = std::sqrt(std::max(0.0, 0.5 * (t - disc)));
  return sv;
}

std::vector<Complex> dth_roots(Complex v, int d) {
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(d));
  const double r = std::pow(std::abs(v), 1.0 / d);
  const double base = std::arg(v) / d;
  for (int j = 0; j < d; ++j) {
    const double a = base + 2.0 * 3.14159265358979323846 * j / d;
    out.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return out;
}

}  // namespace

TangentMatrix fs_differential(const std::vector<HomPoly>& components,
                              const ProjectivePoint& x) {
  const int k = x.dim();
  std::array<Complex, 3> fx{};
  for (int i = 0; i <= k; ++i) fx[static_cast<std::size_t>(i)] = components[static_cast<std::size_t>(i)].eval(x.coords());
  const ProjectivePoint y = ProjectivePoint::from_homogeneous(k, fx);

  const int a = x.chart_index();
  const int b = y.chart_index();

  // partials at the lift of x
  std::array<std::array<Complex, 3>, 3> df{};
  for (int i = 0; i <= k; ++i) {
    df[static_cast<std::size_t>(i)] = components[static_cast<std::size_t>(i)].gradient(x.coords());
  }

  std::array<int, 2> src{}, tgt{};
  {
    int s = 0, t = 0;
    for (int i = 0; i <= k; ++i) {
      if (i != a) src[static_cast<std::size_t>(s++)] = i;
      if (i != b) tgt[static_cast<std::size_t>(t++)] = i;
    }
  }

  // Jacobian of w_j = F_j / F_b between the largest-coordinate charts.
  const Complex fb = fx[static_cast<std::size_t>(b)];
  Mat2 jac{};
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      const int i = tgt[static_cast<std::size_t>(r)];
      const int j = src[static_cast<std::size_t>(c)];
      jac[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          (df[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * fb -
           fx[static_cast<std::size_t>(i)] * df[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)]) /
          (fb * fb);
    }
  }

  // Fubini-Study whitening. In an affine chart the metric is
  // G(z) = [(1+||z||^2) I - z z^dagger] / (1+||z||^2)^2 with eigenvalue
  // 1/(1+||z||^2) orthogonal to z and 1/(1+||z||^2)^2 along z.
  std::array<Complex, 2> zc{}, wc{};
  double zn2 = 0.0, wn2 = 0.0;
  for (int c = 0; c < k; ++c) {
    zc[static_cast<std::size_t>(c)] = x.coord(src[static_cast<std::size_t>(c)]);
    zn2 += std::norm(zc[static_cast<std::size_t>(c)]);
  }
  for (int r = 0; r < k; ++r) {
    wc[static_cast<std::size_t>(r)] = y.coord(tgt[static_cast<std::size_t>(r)]);
    wn2 += std::norm(wc[static_cast<std::size_t>(r)]);
  }
  const double sx = std::sqrt(1.0 + zn2);
  const double sy = std::sqrt(1.0 + wn2);
  const Mat2 gx_inv_sqrt = projector_combination(zc, k, sx, sx * sx);
  const Mat2 gy_sqrt = projector_combination(wc, k, 1.0 / sy, 1.0 / (sy * sy));

  TangentMatrix tm;
  tm.k = k;
  tm.entries = mat_mul(gy_sqrt, mat_mul(jac, gx_inv_sqrt, k), k);
  const SingularValues sv = singular_values(tm.entries, k);
  tm.op_norm = sv.smax;
  tm.inv_norm = sv.smin > 1e-280 ? 1.0 / sv.smin : std::numeric_limits<double>::infinity();
  tm.fs_jacobian = std::norm(sv.det);
  return tm;
}

MapModel MapModel::create(Definition def, Validation validation) {
  MapModel m;
  m.id_ = def.id.empty() ? std::string("map") : def.id;
  m.kind_ = def.kind;
  m.k_ = def.dim;
  m.degree_ = def.degree;
  m.components_ = std::move(def.components);

  if (m.k_ != 1 && m.k_ != 2) throw ConfigError("map dimension must be 1 or 2");
  if (static_cast<int>(m.components_.size()) != m.k_ + 1) {
    throw ConfigError("map needs k+1 component polynomials");
  }
  for (const auto& c : m.components_) {
    if (c.degree() != m.degree_) throw ConfigError("component degree mismatch");
    if (c.nvars() != m.k_ + 1) throw ConfigError("component variable count mismatch");
  }

  // Degree data; homogeneous maps of P^k have d_t = d^k and lambda_l = d^l.
  switch (m.kind_) {
    case MapKind::rational_p1:
      m.d_t_ = def.topological_degree.value_or(m.degree_);
      m.dyn_degrees_ = def.dyn_degrees.empty() ? std::vector<double>{static_cast<double>(m.d_t_)}
                                               : def.dyn_degrees;
      break;
    case MapKind::homogeneous_pk: {
      int dt = 1;
      for (int l = 0; l < m.k_; ++l) dt *= m.degree_;
      m.d_t_ = def.topological_degree.value_or(dt);
      if (m.d_t_ != dt) throw ConfigError("homogeneous map must declare d_t = d^k");
      m.dyn_degrees_.clear();
      double lam = 1.0;
      for (int l = 1; l <= m.k_; ++l) {
        lam *= m.degree_;
        m.dyn_degrees_.push_back(lam);
      }
      if (!def.dyn_degrees.empty() && def.dyn_degrees != m.dyn_degrees_) {
        throw ConfigError("homogeneous map must declare lambda_l = d^l");
      }
      break;
    }
    case MapKind::polynomial_skew:
      m.d_t_ = def.topological_degree.value_or(m.degree_ * m.degree_);
      m.dyn_degrees_ = def.dyn_degrees.empty()
                           ? std::vector<double>{static_cast<double>(m.degree_),
                                                 static_cast<double>(m.d_t_)}
                           : def.dyn_degrees;
      break;
  }

  const double lambda_km1 = m.k_ >= 2 ? m.dyn_degrees_[static_cast<std::size_t>(m.k_ - 2)] : 1.0;
  if (validation == Validation::strict && !(m.d_t_ > lambda_km1)) {
    throw HypothesisViolation("topological degree must exceed lambda_{k-1}");
  }

  m.coordinatewise_ = true;
  for (int i = 0; i <= m.k_; ++i) {
    const auto& mono = m.components_[static_cast<std::size_t>(i)].monomials();
    if (mono.size() != 1 || mono[0].exps[static_cast<std::size_t>(i)] != m.degree_) {
      m.coordinatewise_ = false;
      break;
    }
  }

  m.preimages_supported_ = (m.kind_ == MapKind::rational_p1) ||
                           (m.kind_ == MapKind::polynomial_skew) ||
                           (m.kind_ == MapKind::homogeneous_pk && (m.k_ == 1 || m.coordinatewise_));

  m.j_polys_ = std::move(def.j_polynomials);
  m.build_critical_data(validation);
  return m;
}

void MapModel::build_critical_data(Validation validation) {
  if (k_ == 1) {
    const HomPoly& p = components_[0];
    const HomPoly& q = components_[1];
    critical_poly_ = p.partial(0) * q.partial(1) - p.partial(1) * q.partial(0);

    if (validation == Validation::strict) {
      // Common-zero (resultant) check via the roots of P.
      std::vector<ProjectivePoint> zeros_of_p;
      Poly1 pz = p.dehomogenize_p1();
      auto coeffs = pz.coeffs();
      const double scale = std::max(pz.coeff_norm(), 1e-300);
      int m_inf = 0;
      while (coeffs.size() > 1 && std::abs(coeffs.back()) < 1e-12 * scale) {
        coeffs.pop_back();
        ++m_inf;
      }
      for (const auto& r : poly_roots(Poly1(coeffs))) {
        zeros_of_p.push_back(ProjectivePoint::affine_p1(r));
      }
      if (m_inf > 0) zeros_of_p.push_back(ProjectivePoint::infinity_p1());
      const double qscale = std::max(q.coeff_norm(), 1e-300);
      for (const auto& z : zeros_of_p) {
        if (std::abs(q.eval(z.coords())) < 1e-8 * qscale) {
          throw HolomorphyViolation("component polynomials share a projective zero");
        }
      }
    }

    // J = J' u f^{-1}(J') with J' = f(C); C from the Wronskian roots.
    std::vector<ProjectivePoint> crit;
    {
      Poly1 w = critical_poly_.dehomogenize_p1();
      auto coeffs = w.coeffs();
      const double scale = std::max(w.coeff_norm(), 1e-300);
      int m_inf = 0;
      while (coeffs.size() > 1 && std::abs(coeffs.back()) < 1e-12 * scale) {
        coeffs.pop_back();
        ++m_inf;
      }
      for (const auto& [root, mult] : cluster_roots(poly_roots(Poly1(coeffs)))) {
        (void)mult;
        crit.push_back(ProjectivePoint::affine_p1(root));
      }
      if (m_inf > 0) crit.push_back(ProjectivePoint::infinity_p1());
    }
    auto add_unique = [&](const ProjectivePoint& pt) {
      for (const auto& existing : j_points_) {
        if (chordal_distance(existing, pt) < 1e-9) return;
      }
      j_points_.push_back(pt);
    };
    std::vector<ProjectivePoint> j_prime;
    for (const auto& c : crit) {
      ProjectivePoint v;
      try {
        v = evaluate(c);
      } catch (const AllComponentsVanish&) {
        // degenerate map (lenient validation); the point itself is exceptional
        add_unique(c);
        continue;
      }
      bool seen = false;
      for (const auto& e : j_prime) {
        if (chordal_distance(e, v) < 1e-9) seen = true;
      }
      if (!seen) j_prime.push_back(v);
    }
    for (const auto& v : j_prime) add_unique(v);
    if (preimages_supported_) {
      for (const auto& v : j_prime) {
        try {
          for (const auto& [w, mult] : preimages(v)) {
            (void)mult;
            add_unique(w);
          }
        } catch (const Error&) {
          // ill-conditioned preimages of a critical value on a degenerate map
        }
      }
    }
    return;
  }

  // k = 2
  std::array<HomPoly, 3> d0{components_[0].partial(0), components_[0].partial(1), components_[0].partial(2)};
  std::array<HomPoly, 3> d1{components_[1].partial(0), components_[1].partial(1), components_[1].partial(2)};
  std::array<HomPoly, 3> d2{components_[2].partial(0), components_[2].partial(1), components_[2].partial(2)};
  critical_poly_ = d0[0] * (d1[1] * d2[2] - d1[2] * d2[1]) -
                   d0[1] * (d1[0] * d2[2] - d1[2] * d2[0]) +
                   d0[2] * (d1[0] * d2[1] - d1[1] * d2[0]);

  if (validation == Validation::strict) {
    // Holomorphy on a sample grid of the unit sphere of C^3.
    RngStream grid(0x5eedu);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 512; ++i) {
      std::array<Complex, 3> x{grid.complex_normal(), grid.complex_normal(), grid.complex_normal()};
      double n = 0.0;
      for (const auto& c : x) n += std::norm(c);
      n = std::sqrt(n);
      for (auto& c : x) c /= n;
      double best = 0.0;
      for (const auto& comp : components_) {
        best = std::max(best, std::abs(comp.eval(x)) / std::max(comp.coeff_norm(), 1e-300));
      }
      worst = std::min(worst, best);
    }
    if (worst < 1e-10) {
      throw HolomorphyViolation("components nearly share a zero on the sample grid");
    }
  }

  if (j_polys_.empty()) {
    if (coordinatewise_) {
      // Diagonal monomial maps leave the coordinate triangle invariant, so
      // J = {x0 x1 x2 = 0} exactly; store the radical.
      j_polys_.push_back(HomPoly::monomial(3, Complex(1, 0), {1, 1, 1}));
    } else {
      // The image f(C) is not computed symbolically; the critical locus is
      // the best generic stand-in. Map files may supply J explicitly.
      j_polys_.push_back(critical_poly_);
    }
  }
}

ProjectivePoint MapModel::evaluate(const ProjectivePoint& x) const {
  std::array<Complex, 3> fx{};
  for (int i = 0; i <= k_; ++i) fx[static_cast<std::size_t>(i)] = components_[static_cast<std::size_t>(i)].eval(x.coords());
  double m = 0.0;
  for (int i = 0; i <= k_; ++i) m = std::max(m, std::abs(fx[static_cast<std::size_t>(i)]));
  if (m < 1e-14) {
    throw AllComponentsVanish("all components vanish at the evaluation point");
  }
  return ProjectivePoint::from_homogeneous(k_, fx);
}

ProjectivePoint MapModel::iterate(const ProjectivePoint& x, int n) const {
  ProjectivePoint p = x;
  for (int i = 0; i < n; ++i) p = evaluate(p);
  return p;
}

TangentMatrix MapModel::differential(const ProjectivePoint& x) const {
  return fs_differential(components_, x);
}

double MapModel::fs_jacobian(const ProjectivePoint& x) const {
  return differential(x).fs_jacobian;
}

std::vector<std::pair<ProjectivePoint, int>> MapModel::preimages(const ProjectivePoint& y) const {
  if (!preimages_supported_) {
    throw UnsupportedOperation("algebraic preimages unavailable for this map kind");
  }
  std::vector<std::pair<ProjectivePoint, int>> out;

  if (k_ == 1) {
    // Roots in P^1 of R(w) = y1 P(w) - y0 Q(w).
    const HomPoly r_hom = components_[0].scaled(y.coord(1)) - components_[1].scaled(y.coord(0));
    Poly1 r = r_hom.dehomogenize_p1();
    auto coeffs = r.coeffs();
    const double scale = std::max(r.coeff_norm(), 1e-300);
    if (scale < 1e-290) throw RootSolverFailure("preimage polynomial vanished");
    while (coeffs.size() > 1 && std::abs(coeffs.back()) < 1e-12 * scale) {
      coeffs.pop_back();
    }
    // dehomogenize_p1 pads to degree d, so the trimmed length gives the
    // multiplicity of [1:0] directly.
    const int m_inf = degree_ - static_cast<int>(coeffs.size() - 1);
    for (const auto& [root, mult] : cluster_roots(poly_roots(Poly1(coeffs)))) {
      out.emplace_back(ProjectivePoint::affine_p1(root), mult);
    }
    if (m_inf > 0) out.emplace_back(ProjectivePoint::infinity_p1(), m_inf);
  } else if (kind_ == MapKind::homogeneous_pk && coordinatewise_) {
    // Coordinatewise d-th roots, anchored at the largest target coordinate.
    const int b = y.chart_index();
    std::array<Complex, 3> lead{};
    for (int i = 0; i <= k_; ++i) {
      lead[static_cast<std::size_t>(i)] = components_[static_cast<std::size_t>(i)].monomials()[0].coeff;
    }
    const Complex wb = dth_roots(y.coord(b) / lead[static_cast<std::size_t>(b)], degree_)[0];
    std::array<int, 2> others{};
    {
      int t = 0;
      for (int i = 0; i <= k_; ++i) {
        if (i != b) others[static_cast<std::size_t>(t++)] = i;
      }
    }
    std::array<std::vector<std::pair<Complex, int>>, 2> choices;
    for (int t = 0; t < k_; ++t) {
      const int i = others[static_cast<std::size_t>(t)];
      const Complex v = y.coord(i) / lead[static_cast<std::size_t>(i)];
      if (std::abs(v) < 1e-28) {
        choices[static_cast<std::size_t>(t)] = {{Complex(0, 0), degree_}};
      } else {
        for (const auto& root : dth_roots(v, degree_)) {
          choices[static_cast<std::size_t>(t)].emplace_back(root, 1);
        }
      }
    }
    for (const auto& [c0, m0] : choices[0]) {
      std::array<Complex, 3> w{};
      w[static_cast<std::size_t>(b)] = wb;
      w[static_cast<std::size_t>(others[0])] = c0;
      for (const auto& [c1, m1] : choices[1]) {
        w[static_cast<std::size_t>(others[1])] = c1;
        out.emplace_back(ProjectivePoint::from_homogeneous(k_, w), m0 * m1);
      }
    }
  } else if (kind_ == MapKind::polynomial_skew) {
    if (std::abs(y.coord(2)) < 1e-12) {
      throw UnsupportedOperation("skew-product preimages on the line at infinity");
    }
    const Complex zy = y.coord(0) / y.coord(2);
    const Complex wy = y.coord(1) / y.coord(2);
    // p(z) = zy from the first component (depends on z, t only).
    std::vector<Complex> pc(static_cast<std::size_t>(degree_) + 1, Complex(0, 0));
    for (const auto& m : components_[0].monomials()) {
      pc[static_cast<std::size_t>(m.exps[0])] += m.coeff;
    }
    pc[0] -= zy;
    for (const auto& [z0, mz] : cluster_roots(poly_roots(Poly1(pc)))) {
      // q(z0, w) = wy from the second component.
      std::vector<Complex> qc(static_cast<std::size_t>(degree_) + 1, Complex(0, 0));
      for (const auto& m : components_[1].monomials()) {
        Complex term = m.coeff;
        for (int e = 0; e < m.exps[0]; ++e) term *= z0;
        qc[static_cast<std::size_t>(m.exps[1])] += term;
      }
      qc[0] -= wy;
      for (const auto& [w0, mw] : cluster_roots(poly_roots(Poly1(qc)))) {
        out.emplace_back(ProjectivePoint::affine_p2(z0, w0), mz * mw);
      }
    }
  }

  // Residual gate; roots that evaluate to an indeterminate point are dropped
  // (that only happens for degenerate maps caught by check_degrees).
  std::vector<std::pair<ProjectivePoint, int>> verified;
  for (auto& [w, mult] : out) {
    try {
      const double res = chordal_distance(evaluate(w), y);
      if (res > 1e-9) {
        throw RootSolverFailure("preimage residual above 1e-9 after polish");
      }
      verified.emplace_back(w, mult);
    } catch (const AllComponentsVanish&) {
      // dropped
    }
  }
  return verified;
}

double MapModel::distance_to_J(const ProjectivePoint& x) const {
  if (k_ == 1) {
    double best = kChordalDiameter;
    for (const auto& j : j_points_) best = std::min(best, chordal_distance(x, j));
    return best;
  }
  constexpr double g_floor = 1e-8;
  double best = kChordalDiameter;
  for (const auto& v : j_polys_) {
    const Complex val = v.eval(x.coords());
    const auto grad = v.gradient(x.coords());
    double gn = 0.0;
    for (const auto& g : grad) gn += std::norm(g);
    gn = std::sqrt(gn);
    const double proxy = std::abs(val) / std::max(gn, g_floor);
    best = std::min(best, proxy);
  }
  return std::min(best, kChordalDiameter);
}

DegreeReport MapModel::check_degrees(std::uint64_t rng_seed) const {
  DegreeReport report;
  report.declared_d_t = d_t_;
  const double lambda_km1 = k_ >= 2 ? dyn_degrees_[static_cast<std::size_t>(k_ - 2)] : 1.0;
  report.hypothesis_ok = static_cast<double>(d_t_) > lambda_km1;

  RngStream rng = RngStream::derive(rng_seed, "degree-check", 0);
  int checked = 0;
  int guard = 0;
  while (checked < 3 && guard++ < 200) {
    ProjectivePoint y;
    if (k_ == 1) {
      y = ProjectivePoint::affine_p1(rng.uniform(0.4, 1.7) * rng.unit_complex());
    } else {
      y = ProjectivePoint::affine_p2(rng.uniform(0.4, 1.4) * rng.unit_complex(),
                                     rng.uniform(0.4, 1.4) * rng.unit_complex());
    }
    if (distance_to_J(y) < 1e-3) continue;
    int total = 0;
    for (const auto& [w, mult] : preimages(y)) {
      (void)w;
      total += mult;
    }
    report.d_t_numeric = total;
    if (total != d_t_) {
      throw DegreeMismatch("numeric preimage count " + std::to_string(total) +
                           " disagrees with declared d_t " + std::to_string(d_t_));
    }
    ++checked;
  }
  return report;
}

MapModel MapModel::iterate_composed(int n) const {
  if (n < 1) throw ConfigError("iterate_composed needs n >= 1");
  std::vector<HomPoly> comps = components_;
  for (int it = 1; it < n; ++it) {
    std::vector<HomPoly> next;
    next.reserve(comps.size());
    for (const auto& c : components_) next.push_back(c.compose(comps));
    comps = std::move(next);
  }
  Definition def;
  def.id = id_ + "_iter" + std::to_string(n);
  def.kind = kind_;
  def.dim = k_;
  def.degree = comps[0].degree();
  def.components = comps;
  int dt = 1;
  for (int i = 0; i < n; ++i) dt *= d_t_;
  def.topological_degree = dt;
  def.dyn_degrees.clear();
  for (double lam : dyn_degrees_) def.dyn_degrees.push_back(std::pow(lam, n));
  return create(std::move(def), Validation::strict);
}

namespace {

HomPoly monomials_from_json(const nlohmann::json& arr, int nvars) {
  std::vector<HomPoly::Monomial> monos;
  for (const auto& entry : arr) {
    if (!entry.is_array() || entry.size() != static_cast<std::size_t>(2 + nvars)) {
      throw ConfigError("monomial entries must be [re, im, exponents...]");
    }
    HomPoly::Monomial m;
    m.coeff = Complex(entry[0].get<double>(), entry[1].get<double>());
    int deg = 0;
    for (int v = 0; v < nvars; ++v) {
      m.exps[static_cast<std::size_t>(v)] = entry[static_cast<std::size_t>(2 + v)].get<int>();
      deg += m.exps[static_cast<std::size_t>(v)];
    }
    monos.push_back(m);
  }
  if (monos.empty()) throw ConfigError("component polynomial has no monomials");
  int deg = 0;
  for (int v = 0; v < nvars; ++v) deg += monos[0].exps[static_cast<std::size_t>(v)];
  return HomPoly(nvars, deg, std::move(monos));
}

}  // namespace

MapModel MapModel::from_json_text(const std::string& text, Validation validation) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("map definition is not valid JSON: ") + e.what());
  }
  Definition def;
  try {
    def.id = j.value("id", std::string("map"));
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "rational_p1") {
      def.kind = MapKind::rational_p1;
    } else if (kind == "homogeneous_pk") {
      def.kind = MapKind::homogeneous_pk;
    } else if (kind == "polynomial_skew") {
      def.kind = MapKind::polynomial_skew;
    } else {
      throw ConfigError("unknown map kind: " + kind);
    }
    def.dim = j.at("dimension").get<int>();
    def.degree = j.at("degree").get<int>();
    const int nvars = def.dim + 1;
    for (const auto& comp : j.at("components")) {
      def.components.push_back(monomials_from_json(comp, nvars));
    }
    if (j.contains("topological_degree")) def.topological_degree = j["topological_degree"].get<int>();
    if (j.contains("dyn_degrees")) def.dyn_degrees = j["dyn_degrees"].get<std::vector<double>>();
    if (j.contains("j_polynomials")) {
      for (const auto& poly : j["j_polynomials"]) {
        def.j_polynomials.push_back(monomials_from_json(poly, nvars));
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("map definition schema violation: ") + e.what());
  }
  return create(std::move(def), validation);
}

MapModel MapModel::from_json_file(const std::string& path, Validation validation) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open map file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), validation);
}

NewtonResult newton_inverse_step(const MapModel& map, const ProjectivePoint& target,
                                 const ProjectivePoint& start, double tol, int max_iter) {
  const int k = map.dim();
  NewtonResult result;
  ProjectivePoint current = start;
  double best_res;
  try {
    best_res = chordal_distance(map.evaluate(current), target);
  } catch (const AllComponentsVanish&) {
    result.point = start;
    result.residual = 1.0;
    return result;
  }
  result.point = current;
  result.residual = best_res;

  double damp = 1.0;
  for (int iter = 0; iter < max_iter && best_res > 1e-15; ++iter) {
    ProjectivePoint fx;
    try {
      fx = map.evaluate(current);
    } catch (const AllComponentsVanish&) {
      break;
    }
    const int a = current.chart_index();
    const int b = fx.chart_index();
    if (std::abs(target.coord(b)) < 1e-8) break;  // target leaves the working chart

    // residual and plain chart Jacobian (no FS whitening; we solve in chart
    // coordinates)
    std::array<Complex, 3> fraw{};
    for (int i = 0; i <= k; ++i) fraw[static_cast<std::size_t>(i)] = map.components()[static_cast<std::size_t>(i)].eval(current.coords());
    const Complex fb = fraw[static_cast<std::size_t>(b)];
    std::array<std::array<Complex, 3>, 3> df{};
    for (int i = 0; i <= k; ++i) df[static_cast<std::size_t>(i)] = map.components()[static_cast<std::size_t>(i)].gradient(current.coords());
    std::array<int, 2> src{}, tgt{};
    {
      int s = 0, t = 0;
      for (int i = 0; i <= k; ++i) {
        if (i != a) src[static_cast<std::size_t>(s++)] = i;
        if (i != b) tgt[static_cast<std::size_t>(t++)] = i;
      }
    }
    Mat2 jac{};
    std::array<Complex, 2> err{};
    for (int r = 0; r < k; ++r) {
      const int i = tgt[static_cast<std::size_t>(r)];
      err[static_cast<std::size_t>(r)] =
          target.coord(i) / target.coord(b) - fraw[static_cast<std::size_t>(i)] / fb;
      for (int c = 0; c < k; ++c) {
        const int jv = src[static_cast<std::size_t>(c)];
        jac[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
            (df[static_cast<std::size_t>(i)][static_cast<std::size_t>(jv)] * fb -
             fraw[static_cast<std::size_t>(i)] * df[static_cast<std::size_t>(b)][static_cast<std::size_t>(jv)]) /
            (fb * fb);
      }
    }
    std::array<Complex, 2> delta{};
    if (k == 1) {
      if (std::abs(jac[0][0]) < 1e-280) break;
      delta[0] = err[0] / jac[0][0];
    } else {
      const Complex det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
      if (std::abs(det) < 1e-280) break;
      delta[0] = (err[0] * jac[1][1] - err[1] * jac[0][1]) / det;
      delta[1] = (err[1] * jac[0][0] - err[0] * jac[1][0]) / det;
    }

    std::array<Complex, 3> cand{};
    for (int i = 0; i <= k; ++i) cand[static_cast<std::size_t>(i)] = current.coord(i);
    for (int c = 0; c < k; ++c) {
      cand[static_cast<std::size_t>(src[static_cast<std::size_t>(c)])] += damp * delta[static_cast<std::size_t>(c)];
    }
    ProjectivePoint next;
    double res;
    try {
      next = ProjectivePoint::from_homogeneous(k, cand);
      res = chordal_distance(map.evaluate(next), target);
    } catch (const AllComponentsVanish&) {
      damp *= 0.5;
      if (damp < 1e-4) break;
      continue;
    }
    if (res < best_res) {
      current = next;
      best_res = res;
      result.point = current;
      result.residual = res;
      damp = 1.0;
    } else {
      damp *= 0.5;  // step damping on residual increase
      if (damp < 1e-4) break;
    }
  }
  result.converged = result.residual <= tol;
  return result;
}

}  // namespace eqdim
