#pragma once

#include "t2kit/linalg/rdiv.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

// Robust LU decomposition. Entries are snapshotted to exact dyadic midpoints
// at a working precision that leaves guard bits beyond the requested
// tolerance, and elimination proceeds in exact dyadic arithmetic with
// multipliers produced by rdiv_eps. Row operations are recorded exactly in L,
// so P*A*Q = L*U holds identically for the snapshot no matter what the
// multipliers are; the only residual against the true matrix is the input
// rounding. Multipliers never exceed 1 in magnitude because each one is a
// clamped ratio against the round's largest remaining entry.
//
// Below-pivot slots of U keep the tiny leftovers of inexact division instead
// of being forced to zero. They are bounded by the certificate, and the
// echelon checker treats anything at or below the certificate as a
// structural zero. A decomposition re-runs itself with extra guard bits in
// the rare case the measured leftovers crowd the certificate.

namespace t2k::la {

namespace detail {

inline long ceil_log2_long(long n) {
  long k = 0;
  while ((1L << k) < n) ++k;
  return k;
}

inline Dyadic half(const Dyadic& d) { return Dyadic(d.m, d.e - 1); }

}  // namespace detail

struct PivotChoice {
  long index = 0;
  int sign = 0;           // midpoint sign of the chosen entry
  bool straddle = false;  // enclosure could not separate the entry from zero
  Dyadic certificate;     // how far |chosen| may fall below the true maximum
};

/// Pick the entry of largest absolute value, as far as enclosures at
/// precision m can tell. Lowest index wins when nothing is strictly larger.
inline PivotChoice pivot_select(const std::vector<IntervalReal>& entries, long m) {
  if (entries.empty()) throw std::invalid_argument("pivot_select: empty list");
  long best = 0;
  Dyadic best_score, best_width, max_width;
  DyadicInterval best_iv;
  bool first = true;
  for (size_t i = 0; i < entries.size(); ++i) {
    DyadicInterval iv = entries[i].refine(m);
    Dyadic score = detail::half(iv.mig() + iv.mag());
    Dyadic w = iv.width();
    if (w > max_width) max_width = w;
    if (first || score > best_score) {
      first = false;
      best = static_cast<long>(i);
      best_score = score;
      best_width = w;
      best_iv = iv;
    }
  }
  PivotChoice out;
  out.index = best;
  Dyadic mid = best_iv.mid();
  out.sign = mid > Dyadic() ? 1 : (mid < Dyadic() ? -1 : 0);
  out.straddle = best_iv.straddles_zero();
  out.certificate = detail::half(best_width + max_width);
  return out;
}

struct RobustLU {
  long rows = 0, cols = 0;
  std::vector<long> P, Q;  // (P.A.Q)[i][j] = A[P[i]][Q[j]]
  std::vector<std::vector<Dyadic>> L;  // rows x rows, unit lower triangular
  std::vector<std::vector<Dyadic>> U;  // rows x cols
  Dyadic certificate;                  // residual bound, 2^-tol_bits
  long precision_bits = 0;             // snapshot grid actually used
  long tol_bits = 0;
  long pivot_rounds = 0;  // executed rounds; pivot t sits at (t, t)

  IntervalReal L_entry(long i, long j) const { return IntervalReal::of_dyadic(L[i][j]); }
  IntervalReal U_entry(long i, long j) const { return IntervalReal::of_dyadic(U[i][j]); }
};

namespace detail {

struct Workspace {
  std::vector<std::vector<Dyadic>> M, L;
  std::vector<long> P, Q;
};

inline Workspace snapshot(const Mat& A, long p) {
  Workspace w;
  w.M.assign(A.rows, std::vector<Dyadic>(A.cols));
  for (long i = 0; i < A.rows; ++i)
    for (long j = 0; j < A.cols; ++j) w.M[i][j] = A.at(i, j).refine(p).mid();
  w.L.assign(A.rows, std::vector<Dyadic>(A.rows));
  for (long i = 0; i < A.rows; ++i) w.L[i][i] = Dyadic(1);
  w.P.resize(A.rows);
  std::iota(w.P.begin(), w.P.end(), 0L);
  w.Q.resize(A.cols);
  std::iota(w.Q.begin(), w.Q.end(), 0L);
  return w;
}

inline void swap_rows(Workspace& w, long k, long pi) {
  if (pi == k) return;
  std::swap(w.M[k], w.M[pi]);
  std::swap(w.P[k], w.P[pi]);
  for (long j = 0; j < k; ++j) std::swap(w.L[k][j], w.L[pi][j]);
}

/// Eliminate column k below the pivot at (k, k). Updates run over whole rows
/// so the recorded row operations reproduce the snapshot exactly.
inline void eliminate(Workspace& w, long k, long nm) {
  long r = static_cast<long>(w.M.size());
  long c = static_cast<long>(w.M[k].size());
  Dyadic piv = w.M[k][k];
  Dyadic pivmag = piv.abs();
  for (long i = k + 1; i < r; ++i) {
    Dyadic a = w.M[i][k];
    if (a.is_zero()) continue;
    Dyadic q = rdiv_eps_value(IntervalReal::of_dyadic(a.abs()),
                              IntervalReal::of_dyadic(pivmag), nm);
    Dyadic mult = ((a.m < 0) != (piv.m < 0)) ? -q : q;
    w.L[i][k] = mult;
    for (long j = 0; j < c; ++j) w.M[i][j] = w.M[i][j] - mult * w.M[k][j];
  }
}

inline long mult_precision(long p, long tol_bits, long minrc, const Dyadic& pivmag) {
  long lgp = 0;
  if (pivmag > Dyadic(1)) lgp = floor_log2_abs(pivmag) + 1;
  return std::max(p, tol_bits + minrc) + 3 + lgp;
}

inline Dyadic residue_junk(const Workspace& w, long exec) {
  Dyadic junk;
  long r = static_cast<long>(w.M.size());
  for (long i = 1; i < r; ++i)
    for (long j = 0; j < std::min(i, exec); ++j)
      junk = std::max(junk, w.M[i][j].abs());
  return junk;
}

inline RobustLU package(Workspace&& w, long rows, long cols, long tol_bits, long p,
                        long exec) {
  RobustLU lu;
  lu.rows = rows;
  lu.cols = cols;
  lu.P = std::move(w.P);
  lu.Q = std::move(w.Q);
  lu.L = std::move(w.L);
  lu.U = std::move(w.M);
  lu.certificate = Dyadic(Int(1), -tol_bits);
  lu.precision_bits = p;
  lu.tol_bits = tol_bits;
  lu.pivot_rounds = exec;
  return lu;
}

}  // namespace detail

/// Full pivoting: each round's pivot is the largest remaining entry. Rounds
/// stop once that maximum sinks to the certificate, which leaves the
/// untouched block structurally zero.
inline RobustLU lu_decomp_pq(const Mat& A, long tol_bits) {
  if (A.rows < 1 || A.cols < 1) throw std::invalid_argument("lu_decomp_pq: empty matrix");
  if (tol_bits < 1) throw std::invalid_argument("lu_decomp_pq: tol_bits < 1");
  const long minrc = std::min(A.rows, A.cols);
  const Dyadic stop(Int(1), -tol_bits);
  for (long guard = 8;; guard += minrc) {
    long p = tol_bits + detail::ceil_log2_long(std::max(A.rows, A.cols)) + guard;
    detail::Workspace w = detail::snapshot(A, p);
    long exec = 0;
    for (long k = 0; k < minrc; ++k) {
      std::vector<IntervalReal> block;
      block.reserve(static_cast<size_t>(A.rows - k) * (A.cols - k));
      for (long i = k; i < A.rows; ++i)
        for (long j = k; j < A.cols; ++j)
          block.push_back(IntervalReal::of_dyadic(w.M[i][j]));
      PivotChoice pc = pivot_select(block, p);
      long pi = k + pc.index / (A.cols - k);
      long pj = k + pc.index % (A.cols - k);
      Dyadic pivmag = w.M[pi][pj].abs();
      if (pivmag <= stop) break;
      detail::swap_rows(w, k, pi);
      if (pj != k) {
        for (long i = 0; i < A.rows; ++i) std::swap(w.M[i][k], w.M[i][pj]);
        std::swap(w.Q[k], w.Q[pj]);
      }
      detail::eliminate(w, k, detail::mult_precision(p, tol_bits, minrc, pivmag));
      ++exec;
    }
    if (detail::residue_junk(w, exec) <= Dyadic(Int(1), -(tol_bits + 1)))
      return detail::package(std::move(w), A.rows, A.cols, tol_bits, p, exec);
    if (guard > 8 + 4 * minrc)
      throw std::logic_error("lu_decomp_pq: leftovers refuse to shrink");
  }
}

/// Column pivoting: per column, the largest entry among the remaining rows
/// becomes the pivot and moves to the top. A column whose remaining entries
/// are all negligible is rotated behind the others (the column permutation
/// records the skip) and the round retries with the next column.
inline RobustLU lu_decomp_q(const Mat& A, long tol_bits) {
  if (A.rows < 1 || A.cols < 1) throw std::invalid_argument("lu_decomp_q: empty matrix");
  if (tol_bits < 1) throw std::invalid_argument("lu_decomp_q: tol_bits < 1");
  const long minrc = std::min(A.rows, A.cols);
  for (long guard = 8;; guard += minrc) {
    long p = tol_bits + detail::ceil_log2_long(std::max(A.rows, A.cols)) + guard;
    // Snapshot rounding wiggles a column of exact zeros by up to 2^{rounds-p};
    // the skip cutoff sits above that noise and below the certificate.
    const Dyadic skip(Int(1), -(tol_bits + 1));
    if (p < tol_bits + minrc + 2) p = tol_bits + minrc + 2;
    detail::Workspace w = detail::snapshot(A, p);
    long exec = 0;
    long k = 0, stuck = 0;
    while (k < minrc && stuck < A.cols - k) {
      std::vector<IntervalReal> column;
      column.reserve(A.rows - k);
      for (long i = k; i < A.rows; ++i)
        column.push_back(IntervalReal::of_dyadic(w.M[i][k]));
      PivotChoice pc = pivot_select(column, p);
      long pi = k + pc.index;
      Dyadic colmax = w.M[pi][k].abs();
      if (colmax <= skip) {
        for (long i = 0; i < A.rows; ++i)
          std::rotate(w.M[i].begin() + k, w.M[i].begin() + k + 1, w.M[i].end());
        std::rotate(w.Q.begin() + k, w.Q.begin() + k + 1, w.Q.end());
        ++stuck;
        continue;
      }
      stuck = 0;
      detail::swap_rows(w, k, pi);
      detail::eliminate(w, k, detail::mult_precision(p, tol_bits, minrc, colmax));
      ++exec;
      ++k;
    }
    if (detail::residue_junk(w, exec) <= Dyadic(Int(1), -(tol_bits + 1)))
      return detail::package(std::move(w), A.rows, A.cols, tol_bits, p, exec);
    if (guard > 8 + 4 * minrc)
      throw std::logic_error("lu_decomp_q: leftovers refuse to shrink");
  }
}

struct LuReport {
  bool pass = false;
  bool perms_ok = false;
  bool unit_diag_ok = false;
  bool lower_bound_ok = false;
  bool echelon_ok = false;
  bool residual_ok = false;
  Dyadic residual;             // measured against the input enclosures
  std::vector<long> profile;   // pivot column per row, -1 for a zero row
  long split = -1;             // leading block size when A is block diagonal
  std::vector<LuReport> blocks;
};

namespace detail {

inline bool is_perm(const std::vector<long>& v, long n) {
  if (static_cast<long>(v.size()) != n) return false;
  std::vector<bool> seen(n, false);
  for (long x : v) {
    if (x < 0 || x >= n || seen[x]) return false;
    seen[x] = true;
  }
  return true;
}

inline Dyadic dist_to(const Dyadic& v, const DyadicInterval& iv) {
  if (v < iv.lo) return iv.lo - v;
  if (v > iv.hi) return v - iv.hi;
  return Dyadic();
}

inline bool exactly_zero(const IntervalReal& x, long p) {
  if (x.dyadic_tag()) return x.dyadic_tag()->is_zero();
  if (x.exact_tag()) return *x.exact_tag() == 0;
  DyadicInterval iv = x.refine(p);
  return iv.lo.is_zero() && iv.hi.is_zero();
}

}  // namespace detail

inline LuReport validate_lu(const Mat& A, const RobustLU& lu, long tol_bits);

namespace detail {

/// Restrict a decomposition of diag(A1, A2) to the rows and columns that
/// came from one block. Positions keep their order, so pivots stay on the
/// diagonal of the restriction.
inline bool restrict_block(const RobustLU& lu, long s, bool first, RobustLU& out) {
  long n = lu.rows;
  std::vector<long> rpos, cpos;
  for (long i = 0; i < n; ++i)
    if ((lu.P[i] < s) == first) rpos.push_back(i);
  for (long j = 0; j < n; ++j)
    if ((lu.Q[j] < s) == first) cpos.push_back(j);
  long m = first ? s : n - s;
  if (static_cast<long>(rpos.size()) != m || static_cast<long>(cpos.size()) != m)
    return false;
  out.rows = out.cols = m;
  out.certificate = lu.certificate;
  out.precision_bits = lu.precision_bits;
  out.tol_bits = lu.tol_bits;
  long base = first ? 0 : s;
  for (long t = 0; t < m; ++t) {
    out.P.push_back(lu.P[rpos[t]] - base);
    out.Q.push_back(lu.Q[cpos[t]] - base);
  }
  out.L.assign(m, std::vector<Dyadic>(m));
  out.U.assign(m, std::vector<Dyadic>(m));
  for (long t = 0; t < m; ++t)
    for (long u = 0; u < m; ++u) {
      out.L[t][u] = lu.L[rpos[t]][rpos[u]];
      out.U[t][u] = lu.U[rpos[t]][cpos[u]];
    }
  out.pivot_rounds = 0;
  for (long k = 0; k < lu.pivot_rounds; ++k)
    if ((lu.P[k] < s) == first) ++out.pivot_rounds;
  return true;
}

inline Mat corner_block(const Mat& A, long s, bool first) {
  long base = first ? 0 : s;
  long m = first ? s : A.rows - s;
  Mat B(m, m);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < m; ++j) B.at(i, j) = A.at(base + i, base + j);
  return B;
}

}  // namespace detail

/// Check a decomposition against the matrix it claims to factor: residual,
/// unit diagonal, multiplier bounds, echelon shape of U (entries at or below
/// the certificate count as structural zeros), and permutation validity.
/// When A is block diagonal the induced decompositions of the two blocks are
/// validated as well.
inline LuReport validate_lu(const Mat& A, const RobustLU& lu, long tol_bits) {
  if (lu.rows != A.rows || lu.cols != A.cols ||
      static_cast<long>(lu.L.size()) != lu.rows ||
      static_cast<long>(lu.U.size()) != lu.rows)
    throw std::invalid_argument("validate_lu: shape mismatch");
  for (const auto& row : lu.L)
    if (static_cast<long>(row.size()) != lu.rows)
      throw std::invalid_argument("validate_lu: shape mismatch");
  for (const auto& row : lu.U)
    if (static_cast<long>(row.size()) != lu.cols)
      throw std::invalid_argument("validate_lu: shape mismatch");

  LuReport rep;
  const Dyadic cert(Int(1), -tol_bits);
  const Dyadic one(1);
  rep.perms_ok = detail::is_perm(lu.P, lu.rows) && detail::is_perm(lu.Q, lu.cols);

  rep.unit_diag_ok = true;
  rep.lower_bound_ok = true;
  for (long i = 0; i < lu.rows && rep.unit_diag_ok; ++i) {
    if (!(lu.L[i][i] == one)) rep.unit_diag_ok = false;
    for (long j = i + 1; j < lu.rows; ++j)
      if (!lu.L[i][j].is_zero()) rep.unit_diag_ok = false;
  }
  for (long i = 0; i < lu.rows; ++i)
    for (long j = 0; j < i; ++j)
      if (lu.L[i][j].abs() > one) rep.lower_bound_ok = false;

  long exec = std::min(lu.pivot_rounds, std::min(lu.rows, lu.cols));
  rep.echelon_ok = true;
  rep.profile.assign(lu.rows, -1);
  for (long i = 0; i < lu.rows; ++i) {
    for (long j = 0; j < std::min(i, exec); ++j)
      if (lu.U[i][j].abs() > cert) rep.echelon_ok = false;
    if (i < exec) {
      if (lu.U[i][i].is_zero()) rep.echelon_ok = false;
      else rep.profile[i] = i;
    } else {
      for (long j = 0; j < lu.cols; ++j)
        if (lu.U[i][j].abs() > cert) rep.echelon_ok = false;
    }
  }

  if (rep.perms_ok) {
    long p_chk = std::max(lu.precision_bits,
                          tol_bits + detail::ceil_log2_long(std::max(A.rows, A.cols)) + 8);
    for (long i = 0; i < lu.rows; ++i)
      for (long j = 0; j < lu.cols; ++j) {
        Dyadic v;
        for (long k = 0; k <= std::min(i, lu.rows - 1); ++k)
          v = v + lu.L[i][k] * lu.U[k][j];
        DyadicInterval target = A.at(lu.P[i], lu.Q[j]).refine(p_chk);
        rep.residual = std::max(rep.residual, detail::dist_to(v, target));
      }
    rep.residual_ok = rep.residual <= cert;
  }

  bool blocks_ok = true;
  if (A.rows == A.cols && A.rows > 1 && rep.perms_ok) {
    long p_chk = lu.precision_bits;
    for (long s = 1; s < A.rows && rep.split < 0; ++s) {
      bool zero_cross = true;
      for (long i = 0; i < A.rows && zero_cross; ++i)
        for (long j = 0; j < A.cols && zero_cross; ++j)
          if ((i < s) != (j < s) && !detail::exactly_zero(A.at(i, j), p_chk))
            zero_cross = false;
      if (zero_cross) rep.split = s;
    }
    if (rep.split > 0) {
      for (bool first : {true, false}) {
        RobustLU sub;
        if (!detail::restrict_block(lu, rep.split, first, sub)) {
          blocks_ok = false;
          break;
        }
        Mat B = detail::corner_block(A, rep.split, first);
        rep.blocks.push_back(validate_lu(B, sub, tol_bits));
        if (!rep.blocks.back().pass) blocks_ok = false;
      }
    }
  }

  rep.pass = rep.perms_ok && rep.unit_diag_ok && rep.lower_bound_ok && rep.echelon_ok &&
             rep.residual_ok && blocks_ok;
  return rep;
}

}  // namespace t2k::la
