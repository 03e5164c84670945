"""Term calculus for stationary-point expansions of Fourier-Laplace integrals.

Given jets of an amplitude u and a phase g at the stationary point, these
functions evaluate the k-th coefficient functional of the asymptotic
expansion of ``integral u(t) exp(-w g(t)) dt``: the nondegenerate case in any
dimension (Hessian-inverse differential operator), and the one-dimensional
degenerate cases of even/odd vanishing order v with Gamma-factor weights.

Branch convention throughout: ``z**(-1/v) = |z|**(-1/v) exp(-i arg(z)/v)``
with ``arg z`` in [-pi/2, pi/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

from .series import Jet


class OrderBudgetError(ValueError):
    """A requested term needs jet coefficients beyond the truncation order."""


class BranchError(ValueError):
    """Leading phase data falls outside the fixed branch convention."""


class ParityError(ValueError):
    """Even/odd term functional called with the wrong vanishing-order parity."""


def branch_root(z, v):
    """``z**(-1/v)`` on the fixed branch; requires ``arg z`` in [-pi/2, pi/2]."""
    z = mpc(z)
    if z == 0:
        raise BranchError("zero leading coefficient")
    arg = mp.arg(z)
    if abs(arg) > mp.pi / 2 + mpf("1e-12"):
        raise BranchError(
            f"argument {mp.nstr(arg, 5)} outside [-pi/2, pi/2]; branch undefined"
        )
    return abs(z) ** (mpf(-1) / v) * mp.exp(mpc(0, -1) * arg / v)


def det_inv_sqrt(A):
    """``det(A)**(-1/2)`` as the product of eigenvalue branch roots."""
    n = A.rows
    if n == 1:
        return branch_root(A[0, 0], 2)
    eigvals, _ = mpmath.eig(A)
    out = mpc(1)
    for lam in eigvals:
        out *= branch_root(lam, 2)
    return out


def sign_factor(a, tol=mpf("1e-12")):
    """``sgn a`` for the odd-order weights: the real sign when a is real to
    tolerance, otherwise the complex phase a/|a|."""
    a = mpc(a)
    mag = abs(a)
    if mag == 0:
        raise BranchError("zero leading coefficient")
    if abs(a.imag) <= tol * mag:
        return mpc(1) if a.real > 0 else mpc(-1)
    return a / mag


@dataclass
class PhaseData:
    """Decomposed phase for the term calculus.

    ``remainder`` is the phase with its modeled part removed: the full
    quadratic part in the nondegenerate case, the single ``a t^v`` term in the
    degenerate one-variable case.  ``hessian_inverse`` is set only for the
    nondegenerate case; ``a``, ``v``, ``zeta`` only for the degenerate one.
    """

    g_jet: Jet
    remainder: Jet
    hessian_inverse: object = None
    hessian: object = None
    a: object = None
    v: int = None

    @property
    def zeta(self):
        if self.v is None:
            return None
        return mp.exp(mpc(0, 1) * mp.pi / (2 * self.v))

    @classmethod
    def nondegenerate(cls, g_jet, hessian):
        n = g_jet.nvars
        coeffs = {b: v for b, v in g_jet.coeffs.items() if sum(b) > 2}
        remainder = Jet(n, g_jet.order, g_jet.center, coeffs)
        inv = _invert(hessian)
        return cls(g_jet=g_jet, remainder=remainder, hessian_inverse=inv,
                   hessian=hessian)

    @classmethod
    def degenerate(cls, g_jet, v):
        if g_jet.nvars != 1:
            raise ValueError("degenerate phases are handled in one variable only")
        a = g_jet.coefficient((v,))
        if a == 0:
            raise BranchError("vanishing-order coefficient is zero")
        coeffs = {b: c for b, c in g_jet.coeffs.items() if b[0] > v}
        remainder = Jet(1, g_jet.order, g_jet.center, coeffs)
        return cls(g_jet=g_jet, remainder=remainder, a=a, v=v)


def _invert(A):
    n = A.rows
    if n == 1:
        if A[0, 0] == 0:
            raise BranchError("singular phase Hessian")
        B = mp.matrix(1, 1)
        B[0, 0] = 1 / A[0, 0]
        return B
    return A**-1


def _hessian_inverse_op(jet, inv):
    """Apply ``-sum_{r,s} (A^{-1})_{rs} d_r d_s`` once to a jet."""
    n = jet.nvars
    out = None
    for r in range(n):
        dr = jet.partial(r)
        for s in range(n):
            coeff = inv[r, s]
            if coeff == 0:
                continue
            term = dr.partial(s).scale(-coeff)
            out = term if out is None else out + term
    if out is None:
        return Jet(n, max(jet.order - 2, 0), jet.center, {})
    return out


def integral_asymptotic_sum(u_jet, g_jet, omega, N, v=None, coeff_tol=mpf("1e-20")):
    """N-term asymptotic value of ``integral u e^{-omega g} dt`` at one omega.

    Routes on the vanishing order of the one-variable phase (or uses the
    nondegenerate multivariate route when the quadratic part is nonsingular);
    the direct counterpart of the quadrature oracle.
    """
    from .localframe import hessian_from_jet

    omega = mpf(omega)
    if g_jet.nvars == 1 and v is None:
        top = max((abs(c) for c in g_jet.coeffs.values()), default=mpf(0))
        for m in range(2, g_jet.order + 1):
            if abs(g_jet.coefficient((m,))) > coeff_tol * top:
                v = m
                break
        if v is None:
            raise BranchError("phase numerically flat")
    if g_jet.nvars > 1 or v == 2:
        A = hessian_from_jet(g_jet)
        phase = PhaseData.nondegenerate(g_jet, A)
        s = sum(omega ** (-k) * stationary_term(u_jet, phase, k) for k in range(N))
        n = g_jet.nvars
        return (omega / (2 * mp.pi)) ** (-mpf(n) / 2) * det_inv_sqrt(A) * s
    phase = PhaseData.degenerate(g_jet, v)
    if v % 2 == 0:
        s = sum(
            omega ** (mpf(-2 * k) / v) * stationary_term_even(u_jet, phase, k)
            for k in range(N)
        )
        return 2 * branch_root(phase.a, v) * omega ** (mpf(-1) / v) / v * s
    s = sum(
        omega ** (mpf(-k) / v) * stationary_term_odd(u_jet, phase, k)
        for k in range(N)
    )
    return abs(mpc(phase.a)) ** (mpf(-1) / v) * omega ** (mpf(-1) / v) / v * s


def stationary_term(u_jet, phase, k):
    """k-th term functional at a nondegenerate stationary point.

    Finite sum over l <= 2k of ``Hop^{l+k}(u * remainder^l)(0)`` with weights
    ``1/((-1)^k 2^{l+k} l! (l+k)!)``; every term takes at most 2k derivatives
    of u and of the second phase derivatives combined.
    """
    if phase.hessian_inverse is None:
        raise ParityError("phase was not decomposed for the nondegenerate case")
    needed = 2 * (2 * k + k)
    if u_jet.order < needed or phase.remainder.order < needed:
        raise OrderBudgetError(
            f"term {k} needs jets of order {needed}, have "
            f"{min(u_jet.order, phase.remainder.order)}"
        )
    total = mpc(0)
    gpow = Jet.constant(u_jet.nvars, u_jet.order, u_jet.center, mpc(1))
    for l in range(0, 2 * k + 1):
        w = u_jet * gpow
        for _ in range(l + k):
            w = _hessian_inverse_op(w, phase.hessian_inverse)
        value = w.constant_coefficient()
        denom = mpf((-1) ** k) * mpf(2) ** (l + k) * math.factorial(l) * math.factorial(l + k)
        total += value / denom
        if l < 2 * k:
            gpow = gpow * phase.remainder
    return total


def _derivative_at_zero(jet, m):
    if m > jet.order:
        raise OrderBudgetError(f"need order {m}, jet has order {jet.order}")
    return jet.coefficient((m,)) * mpf(math.factorial(m))


def stationary_term_even(u_jet, phase, k):
    """k-th term functional for even vanishing order v (one variable).

    Weights ``(-1)^l Gamma((2k+vl+1)/v) / (l! (2k+vl)!)`` against the
    ``(2k+vl)``-th derivative of ``u * remainder^l`` scaled by the branch
    root of the leading coefficient; at most 2k derivatives land on u.
    """
    v = phase.v
    if v is None:
        raise ParityError("phase was not decomposed for the degenerate case")
    if v % 2 != 0:
        raise ParityError(f"even-order functional with v={v}")
    root = branch_root(phase.a, v)
    needed = 2 * k + v * 2 * k
    if u_jet.order < needed or phase.remainder.order < needed:
        raise OrderBudgetError(
            f"term {k} needs jets of order {needed}, have "
            f"{min(u_jet.order, phase.remainder.order)}"
        )
    total = mpc(0)
    gpow = Jet.constant(1, u_jet.order, u_jet.center, mpc(1))
    for l in range(0, 2 * k + 1):
        m = 2 * k + v * l
        w = u_jet * gpow
        dv = w.coefficient((m,))  # m-th derivative / m!
        weight = (
            mpf((-1) ** l)
            * mpmath.gamma(mpf(2 * k + v * l + 1) / v)
            / mpf(math.factorial(l))
        )
        total += weight * root**m * dv
        if l < 2 * k:
            gpow = gpow * phase.remainder
    return total


def stationary_term_odd(u_jet, phase, k):
    """k-th term functional for odd vanishing order v (one variable).

    Sum over l <= k with the two-sided phase factors
    ``zeta^{m+1} + (-1)^m zeta^{-(m+1)}`` (m = k+vl) and derivative scale
    ``|a|^{-1/v} i sgn(a)``; at most k derivatives land on u.
    """
    v = phase.v
    if v is None:
        raise ParityError("phase was not decomposed for the degenerate case")
    if v % 2 == 0:
        raise ParityError(f"odd-order functional with v={v}")
    mag_root = abs(mpc(phase.a)) ** (mpf(-1) / v)
    isign = mpc(0, 1) * sign_factor(phase.a)
    zeta = phase.zeta
    needed = k + v * k
    if u_jet.order < needed or phase.remainder.order < needed:
        raise OrderBudgetError(
            f"term {k} needs jets of order {needed}, have "
            f"{min(u_jet.order, phase.remainder.order)}"
        )
    total = mpc(0)
    gpow = Jet.constant(1, u_jet.order, u_jet.center, mpc(1))
    for l in range(0, k + 1):
        m = k + v * l
        w = u_jet * gpow
        dv = w.coefficient((m,))  # m-th derivative / m!
        phase_factor = zeta ** (m + 1) + mpf((-1) ** m) * zeta ** (-(m + 1))
        weight = (
            mpf((-1) ** l)
            * mpmath.gamma(mpf(k + v * l + 1) / v)
            / mpf(math.factorial(l))
        )
        total += weight * phase_factor * (mag_root * isign) ** m * dv
        if l < k:
            gpow = gpow * phase.remainder
    return total
