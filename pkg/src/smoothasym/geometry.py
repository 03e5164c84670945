"""Critical points of the singular variety and their classification.

Builds the critical-point system for a direction, solves it (exact univariate
elimination for two variables, damped Newton plus a symmetric-diagonal
shortcut otherwise), and classifies each solution: smoothness with a
distinguished coordinate, isolation, and minimality with explicit evidence.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from mpmath import mp, mpc, mpf

from .series import GaussRat, SparsePoly, coef_to_mpc

RESIDUAL_TOL = mpf("1e-10")
NEWTON_MAX_ITER = 200


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Direction:
    """A direction vector with positive rational components.

    ``primitive`` is the scaled copy with coprime positive integer entries;
    ``alpha`` keeps the original scale, which fixes how expansions are indexed
    by n.
    """

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(Fraction(a) for a in self.alpha)
        if not alpha:
            raise GeometryError("direction must be nonempty")
        if any(a <= 0 for a in alpha):
            raise GeometryError("direction components must be positive")
        object.__setattr__(self, "alpha", alpha)

    @property
    def d(self):
        return len(self.alpha)

    @property
    def primitive(self):
        denom_lcm = 1
        for a in self.alpha:
            denom_lcm = denom_lcm * a.denominator // math.gcd(denom_lcm, a.denominator)
        ints = [int(a * denom_lcm) for a in self.alpha]
        g = 0
        for v in ints:
            g = math.gcd(g, v)
        return tuple(v // g for v in ints)

    def permute(self, perm):
        return Direction(tuple(self.alpha[p] for p in perm))

    def n_is_integral(self, n):
        return all((a * n).denominator == 1 for a in self.alpha)

    def index_for(self, n):
        if not self.n_is_integral(n):
            raise GeometryError(f"n={n} does not give an integral index")
        return tuple(int(a * n) for a in self.alpha)


@dataclass
class MinimalityVerdict:
    kind: str  # strictly-minimal | finitely-minimal | minimal | unknown | not-minimal
    evidence: str
    companions: list = field(default_factory=list)
    witness: tuple = None

    def implies_minimal(self):
        return self.kind in ("strictly-minimal", "finitely-minimal", "minimal")


@dataclass
class CriticalPointReport:
    point: tuple
    smooth: bool
    smooth_witness: int
    reordering: tuple
    minimality: MinimalityVerdict
    residual_H: object
    residual_critical: object
    isolated: str = "yes"  # yes | isolated-unverified

    def is_valid(self, tol=RESIDUAL_TOL):
        return self.residual_H < tol and self.residual_critical < tol

    def to_json(self):
        from .cli import complex_to_json  # shared formatting helpers

        return {
            "point": [complex_to_json(z) for z in self.point],
            "smooth": self.smooth,
            "smooth_witness": self.smooth_witness,
            "reordering": list(self.reordering),
            "minimality": {
                "kind": self.minimality.kind,
                "evidence": self.minimality.evidence,
                "companions": [
                    [complex_to_json(z) for z in pt] for pt in self.minimality.companions
                ],
                "witness": [complex_to_json(z) for z in self.minimality.witness]
                if self.minimality.witness
                else None,
            },
            "residual_H": mp.nstr(self.residual_H, 6),
            "residual_critical": mp.nstr(self.residual_critical, 6),
            "isolated": self.isolated,
        }


# -- the critical system ------------------------------------------------------


def critical_system(H, direction):
    """H together with the cleared proportionality equations.

    Returns d polynomials: H itself and, for each m < d-1,
    ``A_d x_m dH/dx_m - A_m x_d dH/dx_d`` with A the primitive integer
    direction (denominators cleared).
    """
    d = H.nvars
    if direction.d != d:
        raise GeometryError("direction length does not match polynomial")
    polys = [H]
    if d == 1:
        return polys
    A = direction.primitive
    xd_dH = SparsePoly.variable(d, d - 1) * H.partial(d - 1)
    for m in range(d - 1):
        xm_dH = SparsePoly.variable(d, m) * H.partial(m)
        polys.append(xm_dH * A[d - 1] - xd_dH * A[m])
    return polys


def system_residual(polys, point, direction=None):
    """(|H(c)|, max residual of the critical equations), scale-normalized."""
    h_scale = max(polys[0].coeff_bound(), mpf(1))
    res_h = abs(polys[0].eval(point)) / h_scale
    res_c = mpf(0)
    for P in polys[1:]:
        scale = max(P.coeff_bound(), mpf(1))
        r = abs(P.eval(point)) / scale
        if r > res_c:
            res_c = r
    return res_h, res_c


# -- exact univariate helpers for elimination ---------------------------------


def _pnorm(p):
    while p and p[-1] == 0:
        p.pop()
    return p


def _padd(a, b):
    n = max(len(a), len(b))
    return _pnorm([
        (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
    ])


def _pmul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _pnorm(out)


def _pdivexact(a, b):
    """Exact division in Q[x]; raises if the remainder is nonzero."""
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    lead = b[-1]
    for i in range(len(a) - len(b), -1, -1):
        coef = a[i + len(b) - 1] / lead
        if coef:
            q[i] = coef
            for j, y in enumerate(b):
                a[i + j] -= coef * y
    if any(x != 0 for x in a):
        raise GeometryError("inexact polynomial division in determinant")
    return _pnorm(q)


def _bareiss_det(M):
    """Fraction-free determinant of a matrix of dense Q[x] polynomials."""
    n = len(M)
    M = [row[:] for row in M]
    sign = 1
    prev = [Fraction(1)]
    for k in range(n - 1):
        if not M[k][k]:
            pivot_row = next((i for i in range(k + 1, n) if M[i][k]), None)
            if pivot_row is None:
                return []
            M[k], M[pivot_row] = M[pivot_row], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = _padd(_pmul(M[i][j], M[k][k]), [-c for c in _pmul(M[i][k], M[k][j])])
                M[i][j] = _pdivexact(num, prev)
            M[i][k] = []
        prev = M[k][k]
    det = M[n - 1][n - 1]
    return [c * sign for c in det]


def _as_y_poly(P):
    """Bivariate polynomial as dense lists in x, keyed by y-degree."""
    out = {}
    for (ex, ey), c in P.terms.items():
        if isinstance(c, GaussRat):
            raise GeometryError("elimination requires rational coefficients")
        row = out.setdefault(ey, [])
        while len(row) <= ex:
            row.append(Fraction(0))
        row[ex] += c
    return {k: _pnorm(v) for k, v in out.items() if _pnorm(list(v))}


def resultant_eliminate_y(P1, P2):
    """Resultant of two bivariate polynomials with respect to y (in Q[x])."""
    a = _as_y_poly(P1)
    b = _as_y_poly(P2)
    if not a or not b:
        return []
    m = max(a)
    n = max(b)
    if m == 0 or n == 0:
        # one input is y-free; its resultant power convention is not needed
        # at this call site, fall back to the y-free factor itself
        return a.get(0, []) if m == 0 else b.get(0, [])
    size = m + n
    rows = []
    for i in range(n):
        row = [[] for _ in range(size)]
        for k, coef in a.items():
            row[i + (m - k)] = list(coef)
        rows.append(row)
    for i in range(m):
        row = [[] for _ in range(size)]
        for k, coef in b.items():
            row[i + (n - k)] = list(coef)
        rows.append(row)
    return _bareiss_det(rows)


def _dense_roots_double(coeffs):
    """Seed roots of a dense Fraction polynomial via the companion matrix."""
    coeffs = _pnorm(list(coeffs))
    if len(coeffs) <= 1:
        return []
    scale = max(abs(c) for c in coeffs)
    arr = np.array([float(c / scale) for c in reversed(coeffs)], dtype=np.float64)
    return [complex(z) for z in np.roots(arr)]


# -- Newton refinement ---------------------------------------------------------


def newton_polish(polys, point, max_iter=NEWTON_MAX_ITER):
    """Damped Newton iteration on a square polynomial system, at working prec.

    Returns (point, converged, jacobian_singular).
    """
    d = len(point)
    jac = [[P.partial(j) for j in range(d)] for P in polys]
    x = [mpc(z) for z in point]
    target = mpf(2) ** (20 - mp.prec)

    def resid(pt):
        vals = [P.eval(pt) for P in polys]
        return vals, max(abs(v) for v in vals)

    vals, err = resid(x)
    singular = False
    for _ in range(max_iter):
        if err < target:
            break
        J = mp.matrix(d, d)
        for i in range(d):
            for j in range(d):
                J[i, j] = jac[i][j].eval(x)
        try:
            step = mp.lu_solve(J, mp.matrix([-v for v in vals]))
        except ZeroDivisionError:
            singular = True
            break
        lam = mpf(1)
        improved = False
        for _ in range(60):
            trial = [x[i] + lam * step[i] for i in range(d)]
            tvals, terr = resid(trial)
            if terr < err:
                x, vals, err = trial, tvals, terr
                improved = True
                break
            lam /= 2
        if not improved:
            break
    return x, err < RESIDUAL_TOL, singular


def _jacobian_singular(polys, point):
    d = len(point)
    J = mp.matrix(d, d)
    for i, P in enumerate(polys):
        for j in range(d):
            J[i, j] = P.partial(j).eval(point)
    try:
        det = mp.det(J)
    except ZeroDivisionError:
        return True
    scale = max(max(abs(J[i, j]) for i in range(d) for j in range(d)), mpf(1))
    return abs(det) < mpf("1e-10") * scale**d


def _dedupe(points, tol=None):
    tol = tol or mpf("1e-12")
    out = []
    for p in points:
        scale = max(max(abs(z) for z in p), mpf(1))
        if not any(max(abs(a - b) for a, b in zip(p, q)) < tol * scale for q in out):
            out.append(tuple(p))
    return out


def solve_critical(H, direction, seeds=None):
    """All isolated solutions of the critical system found by the solver.

    d=1: the equations reduce to H itself (univariate roots).  d=2: exact
    elimination by a resultant in x, companion-matrix eigenvalues for seeds,
    back-substitution and Newton polish.  d>=3: damped Newton from each seed
    plus the diagonal shortcut for symmetric H with a constant direction.
    Every returned point has scale-normalized residual below 1e-10.
    """
    d = H.nvars
    polys = critical_system(H, direction)
    candidates = []

    if d == 1:
        coeffs = [Fraction(0)] * (H.max_degree(0) + 1)
        for (e,), c in H.terms.items():
            coeffs[e] += c
        for z in _dense_roots_double(coeffs):
            candidates.append((mpc(z),))
    elif d == 2:
        elim = resultant_eliminate_y(polys[0], polys[1])
        if not elim:
            raise GeometryError(
                "critical system is degenerate: the elimination polynomial vanishes"
            )
        for xr in _dense_roots_double(elim):
            # back-substitute: roots in y of H(x, .)
            ydeg = H.max_degree(1)
            ycoeffs = [mpc(0)] * (ydeg + 1)
            for (ex, ey), c in H.terms.items():
                ycoeffs[ey] += coef_to_mpc(c) * mpc(xr) ** ex
            arr = np.array(
                [complex(v) for v in reversed(ycoeffs)], dtype=np.complex128
            )
            arr_trim = np.trim_zeros(arr, "f")
            if arr_trim.size <= 1:
                continue
            for yr in np.roots(arr_trim):
                candidates.append((mpc(xr), mpc(complex(yr))))
    else:
        if _is_symmetric(H) and len(set(direction.primitive)) == 1:
            diag = _diagonal_points(H)
            candidates.extend(diag)
    for seed in seeds or []:
        candidates.append(tuple(mpc(z) for z in seed))

    points = []
    for cand in candidates:
        x, ok, _ = newton_polish(polys, cand)
        if not ok:
            continue
        res_h, res_c = system_residual(polys, x, direction)
        if res_h > RESIDUAL_TOL or res_c > RESIDUAL_TOL:
            continue
        points.append(tuple(x))
    unique = _dedupe(points)
    iso = []
    for p in unique:
        iso.append("isolated-unverified" if _jacobian_singular(polys, p) else "yes")
    return unique, iso


def _is_symmetric(H):
    d = H.nvars
    if d < 2:
        return True
    base = H.terms
    for i in range(d - 1):
        perm = list(range(d))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        if H.permute(tuple(perm)).terms != base:
            return False
    return True


def _diagonal_points(H):
    """Roots of H(s, s, ..., s): critical by symmetry for constant directions."""
    d = H.nvars
    coeffs = {}
    for e, c in H.terms.items():
        k = sum(e)
        coeffs[k] = coeffs.get(k, Fraction(0)) + c
    dense = [coeffs.get(k, Fraction(0)) for k in range(max(coeffs) + 1)]
    return [(mpc(z),) * d for z in _dense_roots_double(dense)]


# -- smoothness ---------------------------------------------------------------


def check_smooth(H, point, tol=RESIDUAL_TOL):
    """(is_smooth, witness index, reordering that puts a usable coordinate last).

    The reordering maximizes |c_j dH/dx_j(c)| in the last slot so downstream
    implicit solves are well-conditioned; the witness is any coordinate with a
    nonvanishing partial.
    """
    d = H.nvars
    scale = max(H.coeff_bound(), mpf(1))
    if abs(H.eval(point)) > tol * scale:
        raise GeometryError("point is not on the variety")
    partials = [H.partial(j).eval(point) for j in range(d)]
    mags = [abs(v) for v in partials]
    witness = max(range(d), key=lambda j: mags[j])
    if mags[witness] <= tol * scale:
        return False, -1, tuple(range(d))
    weighted = [abs(point[j]) * mags[j] for j in range(d)]
    if weighted[d - 1] > tol * scale:
        last = d - 1  # keep the original order when it already works
    else:
        last = max(range(d), key=lambda j: weighted[j])
        if weighted[last] <= tol * scale:
            # smooth, but x_j dH/dx_j vanishes in every coordinate
            last = witness
    perm = [j for j in range(d) if j != last] + [last]
    return True, witness, tuple(perm)


# -- aperiodicity --------------------------------------------------------------


def is_aperiodic(P):
    """Whether the support of P spans the full integer lattice over Z."""
    if P.is_zero():
        raise GeometryError("aperiodicity is undefined for the zero polynomial")
    d = P.nvars
    rows = [list(e) for e in P.terms if any(e)]
    if not rows:
        return False
    # integer row reduction to upper-triangular (Hermite-style)
    cols = d
    mat = [row[:] for row in rows]
    rank = 0
    det = 1
    for col in range(cols):
        pivot = None
        for i in range(rank, len(mat)):
            if mat[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            return False
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        changed = True
        while changed:
            changed = False
            for i in range(rank + 1, len(mat)):
                if mat[i][col] == 0:
                    continue
                q = mat[i][col] // mat[rank][col]
                mat[i] = [a - q * b for a, b in zip(mat[i], mat[rank])]
                if mat[i][col] != 0:
                    mat[rank], mat[i] = mat[i], mat[rank]
                    changed = True
        det *= mat[rank][col]
        rank += 1
        if rank == cols:
            break
    return rank == cols and abs(det) == 1


# -- minimality ----------------------------------------------------------------


def _is_positive_real(point, tol=mpf("1e-12")):
    for z in point:
        scale = max(abs(z), mpf(1))
        if abs(z.imag) > tol * scale or z.real <= 0:
            return False
    return True


def _one_minus_H_nonneg(H):
    """1 - H has nonnegative coefficients and constant term below 1."""
    P = SparsePoly.constant(H.nvars, 1) - H
    const = P.constant_term()
    if isinstance(const, GaussRat) or const < 0 or const >= 1:
        return False, P
    for e, c in P.terms.items():
        if isinstance(c, GaussRat) or c < 0:
            return False, P
        if not any(e) and c >= 1:
            return False, P
    return True, P


def _torus_slice_min(H, x_values, prec_scan=53):
    """For each x in x_values, the min |y| over roots of H(x, .). d=2 only."""
    ydeg = H.max_degree(1)
    ycoef_polys = [SparsePoly(1, {}) for _ in range(ydeg + 1)]
    terms = [dict() for _ in range(ydeg + 1)]
    for (ex, ey), c in H.terms.items():
        terms[ey][(ex,)] = terms[ey].get((ex,), Fraction(0)) + c
    ycoef_polys = [SparsePoly(1, t) for t in terms]
    out = []
    for x in x_values:
        coeffs = np.array(
            [complex(P.eval((x,))) for P in reversed(ycoef_polys)], dtype=np.complex128
        )
        coeffs = np.trim_zeros(coeffs, "f")
        if coeffs.size <= 1:
            out.append((x, None))
            continue
        roots = np.roots(coeffs)
        if roots.size == 0:
            out.append((x, None))
            continue
        k = int(np.argmin(np.abs(roots)))
        out.append((x, complex(roots[k])))
    return out


def check_minimality(H, point, direction=None, other_points=(), grid=(24, 96),
                     samples=400, rng_seed=7):
    """Minimality verdict for a smooth variety point.

    Ladder: (a) nonnegativity/aperiodicity shortcut certifying strict
    minimality at positive real points; (b) exact-variety slice scan for two
    variables (torus grid plus local refinement), which can certify
    not-minimal with a witness or report plain minimality; (c) heuristic torus
    sampling otherwise, which only ever yields not-minimal or unknown.
    """
    d = H.nvars
    scale = max(H.coeff_bound(), mpf(1))
    if abs(H.eval(point)) > RESIDUAL_TOL * scale:
        raise GeometryError("point is not on the variety")

    # quick not-minimal witness: another known variety point strictly inside
    for q in other_points:
        if all(abs(qj) < abs(pj) * (1 - mpf("1e-9")) for qj, pj in zip(q, point)):
            return MinimalityVerdict(
                "not-minimal",
                "another variety point has strictly smaller coordinate moduli",
                witness=tuple(q),
            )

    if d == 1:
        return _check_minimality_univariate(H, point)

    ok, P = _one_minus_H_nonneg(H)
    if ok and _is_positive_real(point) and is_aperiodic(P):
        return MinimalityVerdict(
            "strictly-minimal",
            "1-H is aperiodic with nonnegative coefficients and the point is "
            "positive real, so every positive variety point is strictly minimal",
        )

    if d == 2:
        return _scan_minimality_2d(H, point, grid)

    return _sample_minimality(H, point, samples, rng_seed)


def _check_minimality_univariate(H, point):
    coeffs = [Fraction(0)] * (H.max_degree(0) + 1)
    for (e,), c in H.terms.items():
        coeffs[e] += c
    roots = []
    for z in _dense_roots_double(coeffs):
        x, ok, _ = newton_polish([H], (mpc(z),))
        if ok:
            roots.append(x[0])
    roots = [r[0] for r in _dedupe([(r,) for r in roots])]
    c = point[0]
    rho = min(abs(r) for r in roots)
    tol = mpf("1e-9") * max(abs(c), mpf(1))
    if abs(c) > rho + tol:
        inner = min(roots, key=lambda r: abs(r))
        return MinimalityVerdict(
            "not-minimal", "a root of smaller modulus exists", witness=(inner,)
        )
    same = [r for r in roots if abs(abs(r) - abs(c)) <= tol]
    companions = [(r,) for r in same if abs(r - c) > tol]
    if companions:
        return MinimalityVerdict(
            "finitely-minimal",
            f"{len(companions)} other root(s) share the minimal modulus",
            companions=companions,
        )
    return MinimalityVerdict("strictly-minimal", "unique root of minimal modulus")


def _scan_minimality_2d(H, point, grid):
    """Grid scan of variety slices inside the polydisc, plus refinement."""
    n_r, n_theta = grid
    r1 = abs(point[0])
    r2 = abs(point[1])
    margin = mpf("1e-8")
    best = None  # (ratio, x, y)
    for i in range(1, n_r + 1):
        r = r1 * i / (n_r + 1)  # strictly inside |x| < |c1|
        for k in range(n_theta):
            theta = 2 * math.pi * k / n_theta
            x = complex(float(r) * math.cos(theta), float(r) * math.sin(theta))
            for xv, y in _torus_slice_min(H, [x]):
                if y is None:
                    continue
                ratio = abs(y) / float(r2)
                if best is None or ratio < best[0]:
                    best = (ratio, x, y)
    if best is not None and best[0] < 1 - float(margin):
        # refine the witness at working precision: fix x, polish y on H(x,.)
        x = mpc(best[1])
        y = _polish_slice_root(H, x, mpc(best[2]))
        if y is not None and abs(y) < r2 * (1 - margin) and abs(x) < r1 * (1 - margin):
            return MinimalityVerdict(
                "not-minimal",
                "variety point with strictly smaller coordinate moduli found by "
                "the slice scan",
                witness=(x, y),
            )
    min_ratio = best[0] if best is not None else float("inf")
    return MinimalityVerdict(
        "minimal",
        f"no interior variety point with smaller polyradius on a {grid[0]}x{grid[1]} "
        f"slice grid (min |y|/|c2| ratio {min_ratio:.6f}); strictness not certified",
    )


def _polish_slice_root(H, x, y0):
    ydeg = H.max_degree(1)
    coeffs = [mpc(0)] * (ydeg + 1)
    for (ex, ey), c in H.terms.items():
        coeffs[ey] += coef_to_mpc(c) * x**ex
    y = mpc(y0)
    for _ in range(80):
        f = sum(coeffs[k] * y**k for k in range(ydeg + 1))
        fp = sum(k * coeffs[k] * y ** (k - 1) for k in range(1, ydeg + 1))
        if abs(fp) == 0:
            return None
        step = f / fp
        y -= step
        if abs(step) < mpf(2) ** (20 - mp.prec) * max(abs(y), mpf(1)):
            break
    scale = max(max(abs(c) for c in coeffs), mpf(1))
    f = sum(coeffs[k] * y**k for k in range(ydeg + 1))
    return y if abs(f) < RESIDUAL_TOL * scale else None


def _sample_minimality(H, point, samples, rng_seed):
    """Random scaled-torus sampling; can only find witnesses, never certify."""
    d = H.nvars
    rng = random.Random(rng_seed)
    ydeg = H.max_degree(d - 1)
    for _ in range(samples):
        s = 0.5 + 0.5 * rng.random()  # shrink factor < 1
        w = [
            complex(s * float(abs(point[j])) * math.cos(t), s * float(abs(point[j])) * math.sin(t))
            for j, t in ((j, 2 * math.pi * rng.random()) for j in range(d - 1))
        ]
        coeffs = [mpc(0)] * (ydeg + 1)
        for e, c in H.terms.items():
            term = coef_to_mpc(c)
            for j in range(d - 1):
                term *= mpc(w[j]) ** e[j]
            coeffs[e[d - 1]] += term
        arr = np.array([complex(v) for v in reversed(coeffs)], dtype=np.complex128)
        arr = np.trim_zeros(arr, "f")
        if arr.size <= 1:
            continue
        for y in np.roots(arr):
            if abs(y) < float(abs(point[d - 1])) * (1 - 1e-9):
                return MinimalityVerdict(
                    "not-minimal",
                    "sampled variety point with strictly smaller coordinate moduli",
                    witness=tuple(mpc(z) for z in w) + (mpc(complex(y)),),
                )
    return MinimalityVerdict(
        "unknown",
        f"no witness in {samples} scaled-torus samples; minimality in more than "
        "two variables is not decided by this tool",
    )


def build_report(H, direction, point, other_points=()):
    """Classify one solved point into a CriticalPointReport."""
    polys = critical_system(H, direction)
    res_h, res_c = system_residual(polys, point, direction)
    smooth, witness, perm = check_smooth(H, point)
    if smooth:
        verdict = check_minimality(H, point, direction, other_points=other_points)
    else:
        verdict = MinimalityVerdict("unknown", "not a smooth point")
    iso = "isolated-unverified" if _jacobian_singular(polys, point) else "yes"
    return CriticalPointReport(
        point=tuple(point),
        smooth=smooth,
        smooth_witness=witness,
        reordering=perm,
        minimality=verdict,
        residual_H=res_h,
        residual_critical=res_c,
        isolated=iso,
    )
