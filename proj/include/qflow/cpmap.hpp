#pragma once

// Completely positive maps between single matrix blocks: M_in → M_out.
// Kraus-backed maps are primary and carry the Schrödinger orientation
// E(ρ) = Σ A_k ρ A_k† with A_k of shape out×in; the Heisenberg action is
// E*(x) = Σ A_k† x A_k.  The Choi matrix is computed on demand and cached.
//
// Choi convention (output factor major): C = Σ_ij E(e_ij) ⊗ e_ij, i.e.
// C[(a,i),(b,j)] = E(e_ij)[a,b] with flat row index a·in + i.  E is CP iff
// C is PSD.  Maps can also be built directly from a Choi matrix ("Choi
// backed", e.g. arrows deserialized from dumps or least upper bounds); they
// apply states via the contraction E(ρ)[a,b] = Σ_ij ρ[i,j]·C[(a,i),(b,j)].

#include <qflow/matrix.hpp>

#include <memory>
#include <utility>
#include <vector>

namespace qflow {

// Row-major vectorization: vec(A)[a·cols + i] = A[a,i].
inline cvec vec_row(const cmat& a) {
  cvec v(a.rows() * a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) v(r * a.cols() + c) = a(r, c);
  return v;
}

inline cmat unvec_row(const cvec& v, long rows, long cols) {
  cmat a(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) a(r, c) = v(r * cols + c);
  return a;
}

class block_map {
 public:
  block_map() = default;

  static block_map zero(long in, long out) {
    block_map m;
    m.in_ = in;
    m.out_ = out;
    m.check_dims();
    return m;
  }

  static block_map from_kraus(long in, long out, std::vector<cmat> ops) {
    block_map m;
    m.in_ = in;
    m.out_ = out;
    m.check_dims();
    for (const auto& a : ops)
      if (a.rows() != out || a.cols() != in)
        throw std::invalid_argument("block_map: Kraus operator shape mismatch");
    m.kraus_ = std::move(ops);
    return m;
  }

  static block_map from_choi(long in, long out, cmat c) {
    block_map m;
    m.in_ = in;
    m.out_ = out;
    m.check_dims();
    if (c.rows() != in * out || c.cols() != in * out)
      throw std::invalid_argument("block_map: Choi matrix shape mismatch");
    m.choi_backed_ = true;
    m.choi_ = std::make_shared<const cmat>(std::move(c));
    return m;
  }

  static block_map identity(long n) { return from_kraus(n, n, {cidentity(n)}); }

  long in_dim() const { return in_; }
  long out_dim() const { return out_; }
  bool choi_backed() const { return choi_backed_; }
  long kraus_count() const { return static_cast<long>(kraus_.size()); }

  const std::vector<cmat>& kraus_ops() const {
    if (choi_backed_) throw std::logic_error("block_map: Choi-backed map has no Kraus list");
    return kraus_;
  }

  bool is_zero() const {
    if (choi_backed_) return max_abs(*choi_) == 0.0;
    for (const auto& a : kraus_)
      if (max_abs(a) != 0.0) return false;
    return true;
  }

  const cmat& choi() const {
    if (!choi_) {
      cmat c = czero(out_ * in_, out_ * in_);
      for (const auto& a : kraus_) {
        cvec v = vec_row(a);
        c.noalias() += v * v.adjoint();
      }
      choi_ = std::make_shared<const cmat>(std::move(c));
    }
    return *choi_;
  }

  cmat apply_s(const cmat& rho) const {
    if (rho.rows() != in_ || rho.cols() != in_)
      throw std::invalid_argument("apply_s: state dimension mismatch");
    cmat out = czero(out_, out_);
    if (choi_backed_) {
      const cmat& c = *choi_;
      for (long a = 0; a < out_; ++a)
        for (long b = 0; b < out_; ++b) {
          cplx acc = 0;
          for (long i = 0; i < in_; ++i)
            for (long j = 0; j < in_; ++j) acc += rho(i, j) * c(a * in_ + i, b * in_ + j);
          out(a, b) = acc;
        }
      return out;
    }
    for (const auto& k : kraus_) out.noalias() += k * rho * k.adjoint();
    return out;
  }

  cmat apply_h(const cmat& x) const {
    if (x.rows() != out_ || x.cols() != out_)
      throw std::invalid_argument("apply_h: observable dimension mismatch");
    cmat pre = czero(in_, in_);
    if (choi_backed_) {
      const cmat& c = *choi_;
      for (long i = 0; i < in_; ++i)
        for (long j = 0; j < in_; ++j) {
          cplx acc = 0;
          for (long a = 0; a < out_; ++a)
            for (long b = 0; b < out_; ++b) acc += x(b, a) * c(a * in_ + j, b * in_ + i);
          pre(i, j) = acc;
        }
      return pre;
    }
    for (const auto& k : kraus_) pre.noalias() += k.adjoint() * x * k;
    return pre;
  }

  // E*(1), the Heisenberg image of the identity: Σ A_k† A_k.
  cmat unit_image() const {
    if (choi_backed_) return apply_h(cidentity(out_));
    cmat u = czero(in_, in_);
    for (const auto& k : kraus_) u.noalias() += k.adjoint() * k;
    return u;
  }

  // Adjoint map: Kraus operators conjugate-transpose with dims swapped; an
  // exact involution.  Choi-backed maps dualize by the exact index relation
  // C*[(i,a),(j,b)] = conj(C[(a,i),(b,j)]).
  block_map dual() const {
    if (choi_backed_) {
      cmat cd(in_ * out_, in_ * out_);
      const cmat& c = *choi_;
      for (long i = 0; i < in_; ++i)
        for (long a = 0; a < out_; ++a)
          for (long j = 0; j < in_; ++j)
            for (long b = 0; b < out_; ++b)
              cd(i * out_ + a, j * out_ + b) = std::conj(c(a * in_ + i, b * in_ + j));
      return from_choi(out_, in_, std::move(cd));
    }
    std::vector<cmat> ops;
    ops.reserve(kraus_.size());
    for (const auto& k : kraus_) ops.push_back(k.adjoint());
    return from_kraus(out_, in_, std::move(ops));
  }

  bool is_cp(const tolerance& tol = {}) const { return is_psd(choi(), tol); }

  // Canonical Kraus decomposition extracted from the Choi matrix; errors if
  // the map is not CP within tolerance.
  std::vector<cmat> canonical_kraus(const tolerance& tol = {}) const {
    const cmat& c = choi();
    cmat h = checked_hermitian(c, tol.eps_eq * 10);
    Eigen::SelfAdjointEigenSolver<cmat> es(h);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("canonical_kraus: eigensolver failed");
    double hi = std::max(std::abs(es.eigenvalues()(0)),
                         std::abs(es.eigenvalues()(h.rows() - 1)));
    double cut = tol.eps_psd * std::max(1.0, hi);
    std::vector<cmat> ops;
    for (long k = 0; k < h.rows(); ++k) {
      double lam = es.eigenvalues()(k);
      if (lam < -cut) throw std::invalid_argument("canonical_kraus: map is not CP");
      if (lam <= cut) continue;
      ops.push_back(std::sqrt(lam) * unvec_row(es.eigenvectors().col(k), out_, in_));
    }
    return ops;
  }

  // Kraus-backed copy with a minimal operator list; used to keep Kleene
  // iteration from growing Kraus lists geometrically.
  block_map compressed(const tolerance& tol = {}) const {
    if (!choi_backed_ && static_cast<long>(kraus_.size()) <= in_ * out_) return *this;
    block_map m = from_kraus(in_, out_, canonical_kraus(tol));
    m.choi_ = choi_;  // same map, keep the cache
    return m;
  }

  block_map scaled(double c) const {
    if (c < 0) throw std::invalid_argument("block_map: negative scaling is not CP");
    if (choi_backed_) return from_choi(in_, out_, c * (*choi_));
    std::vector<cmat> ops;
    ops.reserve(kraus_.size());
    double r = std::sqrt(c);
    for (const auto& k : kraus_) ops.push_back(r * k);
    return from_kraus(in_, out_, std::move(ops));
  }

  friend block_map compose(const block_map& g, const block_map& f) {
    if (f.out_dim() != g.in_dim())
      throw std::invalid_argument("compose: dimension mismatch");
    if (f.choi_backed_ || g.choi_backed_) {
      block_map fk = f.choi_backed_ ? from_kraus(f.in_, f.out_, f.canonical_kraus()) : f;
      block_map gk = g.choi_backed_ ? from_kraus(g.in_, g.out_, g.canonical_kraus()) : g;
      return compose(gk, fk);
    }
    std::vector<cmat> ops;
    ops.reserve(f.kraus_.size() * g.kraus_.size());
    for (const auto& b : g.kraus_)
      for (const auto& a : f.kraus_) ops.push_back(b * a);
    return from_kraus(f.in_, g.out_, std::move(ops));
  }

  friend block_map tensor(const block_map& f, const block_map& g) {
    if (f.choi_backed_ || g.choi_backed_) {
      block_map fk = f.choi_backed_ ? from_kraus(f.in_, f.out_, f.canonical_kraus()) : f;
      block_map gk = g.choi_backed_ ? from_kraus(g.in_, g.out_, g.canonical_kraus()) : g;
      return tensor(fk, gk);
    }
    std::vector<cmat> ops;
    ops.reserve(f.kraus_.size() * g.kraus_.size());
    for (const auto& a : f.kraus_)
      for (const auto& b : g.kraus_) ops.push_back(kron(a, b));
    return from_kraus(f.in_ * g.in_, f.out_ * g.out_, std::move(ops));
  }

  friend block_map add(const block_map& f, const block_map& g) {
    if (f.in_dim() != g.in_dim() || f.out_dim() != g.out_dim())
      throw std::invalid_argument("add: dimension mismatch");
    if (f.choi_backed_ || g.choi_backed_)
      return from_choi(f.in_, f.out_, f.choi() + g.choi());
    std::vector<cmat> ops = f.kraus_;
    ops.insert(ops.end(), g.kraus_.begin(), g.kraus_.end());
    return from_kraus(f.in_, f.out_, std::move(ops));
  }

 private:
  void check_dims() const {
    if (in_ < 1 || out_ < 1) throw std::invalid_argument("block_map: dims must be >= 1");
  }

  long in_ = 1, out_ = 1;
  std::vector<cmat> kraus_;
  mutable std::shared_ptr<const cmat> choi_;  // write-once cache
  bool choi_backed_ = false;
};

inline double choi_distance(const block_map& f, const block_map& g) {
  if (f.in_dim() != g.in_dim() || f.out_dim() != g.out_dim())
    throw std::invalid_argument("choi_distance: dimension mismatch");
  return entry_dist(f.choi(), g.choi());
}

// f ⊑ g in the CP order iff g − f is CP iff choi(g) − choi(f) is PSD.
inline bool cp_leq(const block_map& f, const block_map& g, const tolerance& tol = {}) {
  if (f.in_dim() != g.in_dim() || f.out_dim() != g.out_dim())
    throw std::invalid_argument("cp_leq: dimension mismatch");
  return is_psd(g.choi() - f.choi(), tol);
}

// Residual of the pairing tr(E*(s)·t) = tr(s·E(t)) with s an out-side
// observable and t an in-side state, normalized by the larger magnitude.
inline double duality_residual(const block_map& e, const cmat& s, const cmat& t) {
  cplx lhs = (e.apply_h(s) * t).trace();
  cplx rhs = (s * e.apply_s(t)).trace();
  return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

inline bool duality_check(const block_map& e, const cmat& s, const cmat& t, double eps = 1e-9) {
  return duality_residual(e, s, t) <= eps;
}

inline bool trace_nonincreasing(const block_map& e, const tolerance& tol = {}) {
  return loewner_leq(e.unit_image(), cidentity(e.in_dim()), tol);
}

inline bool trace_preserving(const block_map& e, const tolerance& tol = {}) {
  return approx_eq(e.unit_image(), cidentity(e.in_dim()), tol.eps_eq);
}

}  // namespace qflow
