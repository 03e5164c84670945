"""Ground truth: exact Maclaurin coefficients and direct quadrature.

The coefficient oracle runs entirely in exact rational (or Gaussian-rational)
arithmetic: the series of ``G / (G_den * H^p)`` is solved coefficientwise
from the convolution recurrence, so every table cell is exact.  The
quadrature oracle integrates ``u(t) exp(-w g(t))`` directly and exists only
to validate the term calculus.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp, mpc, mpf

from .series import GaussRat, SparsePoly, coef_to_mpc


class OracleError(ValueError):
    pass


@dataclass
class CoeffTable:
    """Dense box of exact Maclaurin coefficients of G/H^p."""

    bounds: tuple  # per-variable maximum exponent, inclusive
    values: dict  # exponent tuple -> Fraction | GaussRat

    def coeff_at(self, beta):
        beta = tuple(int(b) for b in beta)
        if len(beta) != len(self.bounds) or any(
            b < 0 or b > m for b, m in zip(beta, self.bounds)
        ):
            raise OracleError(f"index {beta} outside the computed box {self.bounds}")
        return self.values.get(beta, Fraction(0))

    def to_csv_rows(self, digits=10):
        rows = []
        for beta in sorted(self.values):
            val = self.values[beta]
            rows.append(
                list(beta) + [_rat_str(val), decimal_str(val, digits)]
            )
        return rows


def _rat_str(v):
    if isinstance(v, GaussRat):
        return f"{v.re}{'+' if v.im >= 0 else ''}{v.im}i"
    return str(v)


def decimal_str(value, digits=10):
    """Exact rational rendered as a decimal with the given significant digits."""
    with mp.workprec(max(mp.prec, 4 * digits)):
        return mp.nstr(coef_to_mpc(value).real if not isinstance(value, GaussRat)
                       or value.im == 0 else coef_to_mpc(value), digits)


def maclaurin_table(G_num, H, p, bounds, G_den=None):
    """Exact coefficients of ``G_num / (G_den * H^p)`` on the given box.

    Solved in row-major order from ``D * F = P`` with ``D = G_den * H^p``;
    requires a unit constant direction, i.e. ``H(0) != 0`` (and
    ``G_den(0) != 0``).
    """
    d = H.nvars
    bounds = tuple(int(b) for b in bounds)
    if len(bounds) != d or any(b < 0 for b in bounds):
        raise OracleError("bounds must list a nonnegative cap per variable")
    D = H**p
    if G_den is not None:
        if G_den.nvars != d:
            raise OracleError("denominator nvars mismatch")
        D = D * G_den
    D0 = D.constant_term()
    if not D0:
        raise OracleError("H(0) = 0: the origin lies on the variety")
    if G_num.nvars != d:
        raise OracleError("numerator nvars mismatch")
    dterms = [(e, c) for e, c in D.terms.items() if any(e)]
    values = {}
    for beta in itertools.product(*(range(b + 1) for b in bounds)):
        acc = G_num.terms.get(beta, Fraction(0))
        for e, c in dterms:
            prev = tuple(b - g for b, g in zip(beta, e))
            if any(x < 0 for x in prev):
                continue
            fprev = values.get(prev)
            if fprev is not None:
                acc = acc - c * fprev
        if acc:
            values[beta] = acc / D0
    return CoeffTable(bounds=bounds, values=values)


def recurrence_residual(table, G_num, H, p, G_den=None):
    """Max |D*F - P| over the box; exactly zero for a correct table."""
    D = H**p
    if G_den is not None:
        D = D * G_den
    worst = Fraction(0)
    for beta in itertools.product(*(range(b + 1) for b in table.bounds)):
        acc = -G_num.terms.get(beta, Fraction(0))
        for e, c in D.terms.items():
            prev = tuple(b - g for b, g in zip(beta, e))
            if any(x < 0 for x in prev):
                continue
            acc = acc + c * table.values.get(prev, Fraction(0))
        mag = acc.re * acc.re + acc.im * acc.im if isinstance(acc, GaussRat) else acc * acc
        if mag > worst:
            worst = mag
    return worst


def maclaurin_table_geometric(G_num, H, p, max_total_degree, G_den=None):
    """Independent small-case method: expand 1/D as a geometric series.

    ``1/D = (1/D0) sum_m (1 - D/D0)^m`` truncated by total degree; the factor
    polynomial has positive valuation so the sum is finite.  Quadratic cost,
    intended for cross-checking boxes of small total degree only.
    """
    d = H.nvars
    D = H**p
    if G_den is not None:
        D = D * G_den
    D0 = D.constant_term()
    if not D0:
        raise OracleError("H(0) = 0: the origin lies on the variety")

    def trunc(P):
        return SparsePoly(
            d, {e: c for e, c in P.terms.items() if sum(e) <= max_total_degree}
        )

    U = trunc(SparsePoly.constant(d, 1) - D * (Fraction(1) / D0))
    acc = SparsePoly.constant(d, 1)
    for _ in range(max_total_degree):
        acc = trunc(U * acc) + SparsePoly.constant(d, 1)
    inv = acc * (Fraction(1) / D0)
    series = trunc(G_num * inv)
    return {e: c for e, c in series.terms.items()}


# -- quadrature oracle ---------------------------------------------------------


def _bump(s):
    """C-infinity cutoff profile: 1 for s <= 0, 0 for s >= 1."""
    if s <= 0:
        return mpf(1)
    if s >= 1:
        return mpf(0)
    f1 = mp.exp(-1 / (1 - s))
    f0 = mp.exp(-1 / s)
    return f1 / (f1 + f0)


def _bump_np(s):
    import numpy as np

    out = np.zeros_like(s)
    out[s <= 0] = 1.0
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    f1 = np.exp(-1.0 / (1.0 - sm))
    f0 = np.exp(-1.0 / sm)
    out[mid] = f1 / (f1 + f0)
    return out


def _quad_1d_composite(u_jet, g_jet, omega, X, cutoff, pieces):
    """Composite Gauss-Legendre over uniform pieces, vectorized."""
    import numpy as np

    deg = 24
    nodes, weights = np.polynomial.legendre.leggauss(deg)
    edges = np.linspace(-X, X, pieces + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1] - edges[0])
    t = (mids[:, None] + half * nodes[None, :]).ravel()
    ucoef = np.zeros(u_jet.order + 1, dtype=np.complex128)
    for b, v in u_jet.coeffs.items():
        ucoef[b[0]] = complex(coef_to_mpc(v))
    gcoef = np.zeros(g_jet.order + 1, dtype=np.complex128)
    for b, v in g_jet.coeffs.items():
        gcoef[b[0]] = complex(coef_to_mpc(v))
    vals = np.polyval(ucoef[::-1], t) * np.exp(-omega * np.polyval(gcoef[::-1], t))
    if cutoff:
        vals = vals * _bump_np(2.0 * np.abs(t) / X - 1.0)
    w = np.tile(weights, pieces) * half
    return complex(np.dot(w, vals))


def fourier_laplace_quad(u_jet, g_jet, omega, window, cutoff=True, pieces=None,
                         tol=1e-13):
    """Direct quadrature of ``integral u(t) exp(-omega g(t)) dt``.

    ``u_jet``/``g_jet`` are jets at 0 in one or two variables, evaluated as
    truncated polynomials on the window ``[-X, X]`` (per variable).  With
    ``cutoff`` a smooth plateau factor (identically 1 on the inner half) makes
    the integrand compactly supported, matching the hypotheses of the
    expansion theorems.  One-variable integrals use composite Gauss-Legendre
    panels with adaptive doubling until two resolutions agree (handles the
    oscillatory phases); two-variable integrals use adaptive tanh-sinh.
    Returns (value, achieved-error estimate); inspect the estimate rather
    than assuming convergence.
    """
    if u_jet.nvars != g_jet.nvars:
        raise OracleError("amplitude and phase dimension mismatch")
    nv = u_jet.nvars
    if isinstance(window, (tuple, list)):
        X = [float(w) for w in window]
    else:
        X = [float(window)] * nv
    if nv == 1:
        fomega = float(omega)
        p = pieces or 32
        prev = _quad_1d_composite(u_jet, g_jet, fomega, X[0], cutoff, p)
        err = None
        scale = max(abs(prev), 1e-30)
        while p <= 8192:
            p *= 2
            cur = _quad_1d_composite(u_jet, g_jet, fomega, X[0], cutoff, p)
            err = abs(cur - prev)
            prev = cur
            scale = max(abs(cur), 1e-30)
            if err < tol * scale:
                break
        return mpc(prev), mpf(err if err is not None else 0)
    if nv == 2:
        omega = mpf(omega)

        def f2(t1, t2):
            val = u_jet.eval((t1, t2)) * mp.exp(-omega * g_jet.eval((t1, t2)))
            if cutoff:
                r = max(float(abs(t1)) / X[0], float(abs(t2)) / X[1])
                val *= _bump(2 * r - 1)
            return val

        val, err = mp.quad(f2, [-X[0], 0, X[0]], [-X[1], 0, X[1]], error=True)
        return val, err
    raise OracleError("quadrature oracle supports one or two variables")
