"""Point-local data at a smooth critical point.

Everything the term calculus consumes is built here as jets at the
distinguished point: the implicit solution ``h`` of ``H(w, h(w)) = 0``, the
torus phase ``log(h~(t)/h~(0)) + i sum (alpha_m/alpha_d) t_m``, the amplitude
jets weighting the residue terms, and the phase Hessian both from the jet and
from closed forms in derivatives of H (cross-checked against each other).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mpmath import mp, mpc, mpf

from .geometry import Direction
from .series import Jet, jet_circle_substitute


class FrameError(ValueError):
    pass


def smooth_phase_order(N, d):
    """Truncation order for the nondegenerate path with N retained terms.

    Covers both the sup-norm budget of the underlying nondegenerate theorem
    and the largest derivative the finite sums actually consume (6k at term
    k = N-1).
    """
    return max(2 * N + 2, 3 * (N + math.ceil((d - 1) / 2)) + 1, 6 * max(N - 1, 0) + 2)


def degenerate_phase_order(N, v, parity=None):
    """Truncation order for the one-variable degenerate path."""
    if parity is None:
        parity = "even" if v % 2 == 0 else "odd"
    consumed = 2 * (N - 1) * (v + 1) if parity == "even" else (N - 1) * (v + 1)
    return max((v + 1) * (N + 1) + 1, consumed + 2)


def implicit_root_jet(H, point, order):
    """Jet of the holomorphic ``h`` with ``H(w, h(w)) = 0`` and ``h(c^) = c_d``.

    Solved by Newton iteration on jets; the composite residual vanishes
    through the truncation order (checked).
    """
    d = H.nvars
    if d < 2:
        raise FrameError("implicit solve needs at least two variables")
    c = tuple(mpc(z) for z in point)
    scale = max(H.coeff_bound(), mpf(1))
    if abs(H.eval(c)) > mpf("1e-10") * scale:
        raise FrameError("point is not on the variety")
    dHd = H.partial(d - 1).eval(c)
    if abs(dHd) <= mpf("1e-10") * scale:
        raise FrameError("not smooth in the distinguished coordinate")

    H_jet = Jet.from_poly(H, c, order)
    dH_jet = Jet.from_poly(H.partial(d - 1), c, order)
    w_center = c[: d - 1]
    # eta(s) = h(c^ + s) - c_d, solved to increasing accuracy; each Newton
    # step doubles the correct valuation.
    eta = Jet(d, order, c, {})
    steps = max(1, math.ceil(math.log2(order + 1))) + 1
    for _ in range(steps):
        num = H_jet.substitute(d - 1, eta)
        den = dH_jet.substitute(d - 1, eta)
        eta = eta - num * den.reciprocal()
        # the solution depends on w alone and vanishes at the base point;
        # drop the z-slots and the constant, which carry only Newton noise
        eta = Jet(
            d,
            order,
            c,
            {b: v for b, v in eta.coeffs.items() if b[d - 1] == 0 and any(b)},
        )
    residual = H_jet.substitute(d - 1, eta)
    res = max((abs(v) for v in residual.coeffs.values()), default=mpf(0))
    if res > scale * mpf(2) ** (-(mp.prec // 2)):
        raise FrameError(f"implicit solve residual too large: {mp.nstr(res, 5)}")

    coeffs = {}
    for b, v in eta.coeffs.items():
        coeffs[b[: d - 1]] = v
    zero = (0,) * (d - 1)
    coeffs[zero] = coeffs.get(zero, mpc(0)) + c[d - 1]
    return Jet(d - 1, order, w_center, coeffs)


def phase_jet(h_jet, point, direction, order=None):
    """Jet at 0 of the torus phase driving the Fourier-Laplace integrals.

    ``log(h~(t)/h~(0)) + i sum_m (alpha_m/alpha_d) t_m`` where ``h~`` is the
    restriction of h to the torus through the base point.  The constant term
    is exactly zero; at a critical point the gradient vanishes too.
    """
    order = h_jet.order if order is None else order
    if h_jet.constant_coefficient() == 0:
        raise FrameError("implicit jet has zero constant term")
    h_torus = jet_circle_substitute(h_jet, order)
    g = h_torus.log()
    coeffs = dict(g.coeffs)
    coeffs.pop((0,) * g.nvars, None)  # log branch constant cancels by definition
    alpha = direction.alpha
    ad = alpha[-1]
    for m in range(g.nvars):
        ratio = alpha[m] / ad
        beta = [0] * g.nvars
        beta[m] = 1
        beta = tuple(beta)
        coeffs[beta] = coeffs.get(beta, mpc(0)) + mpc(0, 1) * mpf(
            ratio.numerator
        ) / mpf(ratio.denominator)
    return Jet(g.nvars, order, g.center, coeffs)


def hessian_from_jet(g_jet):
    """Second-derivative matrix at 0 recovered from order-2 jet coefficients."""
    n = g_jet.nvars
    A = mp.matrix(n, n)
    for r in range(n):
        for s in range(n):
            beta = [0] * n
            beta[r] += 1
            beta[s] += 1
            coef = g_jet.coefficient(tuple(beta))
            A[r, s] = 2 * coef if r == s else coef
    return A


def phase_hessian(H, point, direction=None):
    """Closed-form phase Hessian from partial derivatives of H at the point.

    Valid at any smooth point with nonvanishing last coordinate and last
    partial; the direction does not enter (the linear phase term drops out
    after two derivatives).
    """
    d = H.nvars
    c = tuple(mpc(z) for z in point)
    parts = [H.partial(j) for j in range(d)]
    dH = [parts[j].eval(c) for j in range(d)]
    scale = max(H.coeff_bound(), mpf(1))
    if abs(dH[d - 1]) <= mpf("1e-10") * scale or abs(c[d - 1]) == 0:
        raise FrameError("needs c_d and dH/dx_d nonzero at the point")
    second = [[parts[i].partial(j).eval(c) for j in range(d)] for i in range(d)]
    cd, dHd = c[d - 1], dH[d - 1]
    A = mp.matrix(d - 1, d - 1)
    for l in range(d - 1):
        for m in range(d - 1):
            if l == m:
                val = c[l] * dH[l] / (cd * dHd) + (c[l] ** 2 / (cd**2 * dHd**2)) * (
                    dH[l] ** 2
                    + cd
                    * (
                        dHd * second[l][l]
                        - 2 * dH[l] * second[d - 1][l]
                        + (dH[l] ** 2 / dHd) * second[d - 1][d - 1]
                    )
                )
            else:
                val = (c[l] * c[m] / (cd**2 * dHd**2)) * (
                    dH[m] * dH[l]
                    + cd
                    * (
                        dHd * second[m][l]
                        - dH[m] * second[d - 1][l]
                        - dH[l] * second[m][d - 1]
                        + (dH[l] * dH[m] / dHd) * second[d - 1][d - 1]
                    )
                )
            A[l, m] = val
    return A


def phase_hessian_symmetric_q(H, point):
    """Symmetric shortcut: the scalar q with off-diagonal q, diagonal 2q.

    Requires H symmetric under variable permutations and the point on the
    positive diagonal; returns (q, det) with det = d * q^(d-1).
    """
    from .geometry import _is_symmetric

    d = H.nvars
    if not _is_symmetric(H):
        raise FrameError("polynomial is not symmetric in its variables")
    c = tuple(mpc(z) for z in point)
    if any(abs(z - c[0]) > mpf("1e-12") * max(abs(c[0]), mpf(1)) for z in c):
        raise FrameError("point is not on the diagonal")
    dHd = H.partial(d - 1).eval(c)
    ddH = H.partial(d - 1).partial(d - 1).eval(c)
    dxdH = H.partial(0).partial(d - 1).eval(c)
    q = 1 + (c[0] / dHd) * (ddH - dxdH)
    return q, d * q ** (d - 1)


def amplitude_jets(G_num, H, p, point, h_jet, order, G_den=None):
    """Torus jets of the amplitudes weighting each residue term, j < p.

    Writes ``H(w, y) = (y - h(w)) Q(w, y)`` on the jet level, forms
    ``(y - h)^p F = G / Q^p`` as a jet in (w displacement, y - h(w)), reads
    off the normalized y-derivatives at the pole, and restricts to the torus.
    Returns (list of torus amplitude jets, Q jet in the shifted coordinates).
    """
    d = H.nvars
    c = tuple(mpc(z) for z in point)
    caps = (None,) * (d - 1) + (p + 2,)
    work_order = order + p - 1
    if h_jet.order < work_order:
        raise FrameError(
            f"amplitudes to order {order} at pole order {p} need the implicit "
            f"jet to order {work_order}, have {h_jet.order}"
        )
    H_jet = Jet.from_poly(H, c, work_order, caps=None)

    # substitute y = h(w) + v; the v^0 slice vanishes identically
    h_shift = Jet(
        d,
        work_order,
        c,
        {b + (0,): v for b, v in h_jet.coeffs.items() if 0 < sum(b) <= work_order},
    )
    v_mono = Jet(d, work_order, c, {(0,) * (d - 1) + (1,): mpc(1)})
    H_sv = H_jet.substitute(d - 1, h_shift + v_mono)

    zero_slice = max(
        (abs(v) for b, v in H_sv.coeffs.items() if b[d - 1] == 0), default=mpf(0)
    )
    scale = max(H.coeff_bound(), mpf(1))
    if zero_slice > scale * mpf(2) ** (-(mp.prec // 2)):
        raise FrameError("pole division failed: H(w, h(w)) does not vanish on jets")

    # Q = H / (y - h): divide by v by shifting the v-exponent down
    Q_coeffs = {}
    for b, v in H_sv.coeffs.items():
        if b[d - 1] == 0:
            continue
        nb = b[: d - 1] + (b[d - 1] - 1,)
        Q_coeffs[nb] = v
    Q_sv = Jet(d, work_order, c, Q_coeffs, caps=caps)
    if Q_sv.constant_coefficient() == 0:
        raise FrameError("Q has zero constant term; the point cannot be smooth")

    num_jet = Jet.from_poly(G_num, c, work_order).substitute(d - 1, h_shift + v_mono)
    num_jet = Jet(d, work_order, c, num_jet.coeffs, caps=caps)
    K = num_jet * Q_sv.pow_int(p).reciprocal()
    if G_den is not None:
        den_jet = Jet.from_poly(G_den, c, work_order).substitute(d - 1, h_shift + v_mono)
        den_jet = Jet(d, work_order, c, den_jet.coeffs, caps=caps)
        K = K * den_jet.reciprocal()

    neg_h = -h_jet
    inv_neg_h = neg_h.reciprocal()
    out = []
    for j in range(p):
        # j-th y-derivative of G/Q^p at the pole, as a jet in w
        slice_coeffs = {}
        for b, v in K.coeffs.items():
            if b[d - 1] == j and sum(b[: d - 1]) <= order:
                slice_coeffs[b[: d - 1]] = v
        dj = Jet(d - 1, order, c[: d - 1], slice_coeffs).scale(mpf(math.factorial(j)))
        u = dj * inv_neg_h.truncate(order).pow_int(p - j)
        out.append(jet_circle_substitute(u, order))
    return out, Q_sv


def vanishing_order(g_jet, tol=mpf("1e-12")):
    """Least order >= 2 whose phase jet coefficient is non-negligible."""
    if g_jet.nvars != 1:
        raise FrameError("vanishing order is only defined for one torus variable")
    top = max((abs(v) for v in g_jet.coeffs.values()), default=mpf(0))
    if top == 0:
        raise FrameError("phase numerically flat")
    for v in range(2, g_jet.order + 1):
        if abs(g_jet.coefficient((v,))) > tol * top:
            return v
    raise FrameError("phase numerically flat")


@dataclass
class LocalFrame:
    """All point-local data at a smooth critical point (reordered coords)."""

    point: tuple  # reordered so the distinguished coordinate is last
    direction: Direction  # reordered to match
    p: int
    h_jet: Jet
    phase: Jet  # jet of the torus phase at 0
    amplitudes: list  # torus amplitude jets, one per j < p
    hessian: object  # closed-form (d-1)x(d-1) matrix
    reordering: tuple
    order: int

    @property
    def d(self):
        return len(self.point)

    def hessian_det(self):
        return mp.det(self.hessian) if self.d > 1 else mpc(1)

    def to_json(self):
        digits = int(mp.prec / 3.32) + 2

        def cx(z):
            z = mpc(z)
            return {"re": mp.nstr(z.real, digits), "im": mp.nstr(z.imag, digits)}

        n = self.d - 1
        return {
            "point": [cx(z) for z in self.point],
            "alpha": [str(a) for a in self.direction.alpha],
            "p": self.p,
            "order": self.order,
            "reordering": list(self.reordering),
            "implicit_jet": self.h_jet.to_json(),
            "phase_jet": self.phase.to_json(),
            "amplitude_jets": [u.to_json() for u in self.amplitudes],
            "hessian": [
                [cx(self.hessian[i, j]) for j in range(n)] for i in range(n)
            ],
        }


def build_frame(G_num, H, p, direction, point, order, G_den=None, reordering=None,
                validate=True):
    """Construct and validate the local frame at a solved critical point.

    The reordering (from the smoothness check) is applied to everything
    first; pass ``reordering`` explicitly to reuse a previously chosen frame.
    """
    from .geometry import check_smooth

    d = H.nvars
    if p < 1:
        raise FrameError("pole order must be a positive integer")
    if reordering is None:
        smooth, _, reordering = check_smooth(H, point)
        if not smooth:
            raise FrameError("cannot build a frame at a non-smooth point")
    perm = tuple(reordering)
    Hp = H.permute(perm)
    Gp = G_num.permute(perm)
    Gdp = G_den.permute(perm) if G_den is not None else None
    cp = tuple(point[j] for j in perm)
    dirp = direction.permute(perm)

    h_jet = implicit_root_jet(Hp, cp, order + p - 1)
    g_jet = phase_jet(h_jet, cp, dirp, order)
    amps, _ = amplitude_jets(Gp, Hp, p, cp, h_jet, order, G_den=Gdp)
    hess = phase_hessian(Hp, cp, dirp)

    frame = LocalFrame(
        point=cp,
        direction=dirp,
        p=p,
        h_jet=h_jet,
        phase=g_jet,
        amplitudes=amps,
        hessian=hess,
        reordering=perm,
        order=order,
    )
    if validate:
        validate_frame(frame)
    return frame


def validate_frame(frame, tol=mpf("1e-10")):
    """Assert the identities every valid frame satisfies.

    The phase jet has zero constant term and vanishing gradient (criticality),
    and twice its order-2 coefficients reproduce the closed-form Hessian.
    """
    g = frame.phase
    n = g.nvars
    scale = max((abs(v) for v in g.coeffs.values()), default=mpf(1))
    if abs(g.constant_coefficient()) > tol * scale:
        raise FrameError("phase jet has a nonzero constant term")
    for m in range(n):
        beta = tuple(1 if j == m else 0 for j in range(n))
        if abs(g.coefficient(beta)) > tol * max(scale, mpf(1)):
            raise FrameError(
                "phase gradient does not vanish: the point is not critical "
                "for this direction"
            )
    A = hessian_from_jet(g)
    B = frame.hessian
    hscale = max(
        max(abs(B[i, j]) for i in range(n) for j in range(n)), mpf(1e-30)
    )
    for i in range(n):
        for j in range(n):
            if abs(A[i, j] - B[i, j]) > tol * hscale:
                raise FrameError(
                    "phase Hessian from the jet disagrees with the closed form"
                )
