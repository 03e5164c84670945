"""Assemble term functionals into evaluable asymptotic expansions.

An expansion holds the per-point exponential base ``c^(-n alpha)``, the
structured (j, k) terms with their rising-factorial weights, and a flattened
form: coefficients against powers of n with strictly decreasing exponents,
truncated at the error order the underlying theorem guarantees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp, mpc, mpf

from .geometry import Direction
from .localframe import degenerate_phase_order, vanishing_order
from .series import Jet, coef_to_mpc
from .stationary import (
    PhaseData,
    det_inv_sqrt,
    stationary_term,
    stationary_term_even,
    stationary_term_odd,
)

DEGENERACY_GATE = mpf("1e-10")


class ExpansionError(ValueError):
    pass


class DegenerateHessianError(ExpansionError):
    """Nondegenerate path requested but the phase Hessian is singular."""


def rising_factorial_poly(shift, length):
    """Coefficients (by power of y) of ``(y+shift)(y+shift+1)...``, ``length``
    factors; the empty product is 1."""
    coeffs = [Fraction(1)]
    for i in range(length):
        c = shift + i
        coeffs = [Fraction(0)] + coeffs
        coeffs = [coeffs[j] + (c * coeffs[j + 1] if j + 1 < len(coeffs) else 0)
                  for j in range(len(coeffs))]
    return coeffs  # coeffs[i] multiplies y^i


@dataclass
class FlatSeries:
    """Descending power series in n: sum of coef * n^exponent terms.

    ``error_exponent`` is the O(n^e) order of what was dropped; ``None`` means
    the series is exact up to an exponentially small remainder.
    """

    terms: list  # [(Fraction exponent, mpc coefficient)], descending
    error_exponent: Fraction = None

    def __post_init__(self):
        self.terms = sorted(
            ((Fraction(e), mpc(c)) for e, c in self.terms), key=lambda t: -t[0]
        )

    def evaluate(self, n):
        total = mpc(0)
        for e, c in self.terms:
            total += c * mpf(n) ** (mpf(e.numerator) / e.denominator)
        return total

    def leading(self):
        if not self.terms:
            raise ExpansionError("empty series")
        return self.terms[0]

    def coefficient(self, exponent):
        exponent = Fraction(exponent)
        for e, c in self.terms:
            if e == exponent:
                return c
        return mpc(0)

    def truncated(self, count):
        return FlatSeries(self.terms[:count], error_exponent=(
            self.terms[count][0] if count < len(self.terms) else self.error_exponent))

    def __mul__(self, other):
        err = None
        candidates = []
        if self.error_exponent is not None and other.terms:
            candidates.append(self.error_exponent + other.terms[0][0])
        if other.error_exponent is not None and self.terms:
            candidates.append(other.error_exponent + self.terms[0][0])
        if candidates:
            err = max(candidates)
        acc = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                if err is not None and e <= err:
                    continue
                acc[e] = acc.get(e, mpc(0)) + c1 * c2
        return FlatSeries(list(acc.items()), error_exponent=err)

    def __sub__(self, other):
        err = None
        for e in (self.error_exponent, other.error_exponent):
            if e is not None:
                err = e if err is None else max(err, e)
        acc = {}
        for e, c in self.terms:
            if err is None or e > err:
                acc[e] = acc.get(e, mpc(0)) + c
        for e, c in other.terms:
            if err is None or e > err:
                acc[e] = acc.get(e, mpc(0)) - c
        return FlatSeries(list(acc.items()), error_exponent=err)

    def to_json(self):
        from .cli import complex_to_json

        return {
            "terms": [
                {"exponent": str(e), "coef": complex_to_json(c)} for e, c in self.terms
            ],
            "error_exponent": None
            if self.error_exponent is None
            else str(self.error_exponent),
        }


@dataclass
class Expansion:
    """Asymptotic expansion of the coefficients along one direction."""

    kind: str  # smooth | degenerate-even | degenerate-odd | univariate | combined
    base_point: tuple  # the critical point, original variable order not needed
    direction: Direction
    p: int
    N: int
    structured: list  # per-(j, k) term records
    flattened: FlatSeries
    dropped: FlatSeries  # flatten contributions at or below the error order
    error_exponent: Fraction  # None for exact-to-exponential kinds
    meta: dict = field(default_factory=dict)
    children: list = field(default_factory=list)

    @property
    def d(self):
        return len(self.base_point)

    def base_magnitude(self):
        out = mpf(1)
        for z, a in zip(self.base_point, self.direction.alpha):
            out *= abs(z) ** (-mpf(a.numerator) / a.denominator)
        return out

    def base_power(self, n):
        """``c^(-n alpha)`` for an admissible integer-index n."""
        idx = self.direction.index_for(n)
        out = mpc(1)
        for z, e in zip(self.base_point, idx):
            out *= mpc(z) ** (-e)
        return out

    def evaluate(self, n, terms=None):
        """(value, first-dropped-term magnitude estimate) at index n.

        ``terms`` limits the flattened sum to its leading entries, e.g.
        ``terms=1`` evaluates the one-term approximation.
        """
        if self.kind == "combined":
            vals = [child.evaluate(n, terms=terms) for child in self.children]
            return sum(v for v, _ in vals), sum(e for _, e in vals)
        if n < 1:
            raise ExpansionError("evaluation index must be a positive integer")
        if not self.direction.n_is_integral(n):
            raise ExpansionError(
                f"n={n} gives a non-integral coefficient index for this direction"
            )
        series = self.flattened if terms is None else self.flattened.truncated(terms)
        base = self.base_power(n)
        value = base * series.evaluate(n)
        estimate = mpf(0)
        if terms is not None and terms < len(self.flattened.terms):
            e, c = self.flattened.terms[terms]
            estimate = abs(base) * abs(c) * mpf(n) ** (mpf(e.numerator) / e.denominator)
        elif self.dropped.terms:
            e, c = self.dropped.terms[0]
            estimate = abs(base) * abs(c) * mpf(n) ** (mpf(e.numerator) / e.denominator)
        return value, estimate

    def evaluate_structured(self, n):
        """Evaluate from the structured (j, k) records, nothing dropped."""
        if self.kind == "combined":
            return sum(child.evaluate_structured(n) for child in self.children)
        base = self.base_power(n)
        y = mpf(self.meta["alpha_d"].numerator) / self.meta["alpha_d"].denominator * n
        total = mpc(0)
        for rec in self.structured:
            rf = mpf(1)
            for i in range(rec["rising"]):
                rf *= y + 1 + i
            e = rec["y_exponent"]
            total += rf * rec["weight"] * rec["term"] * y ** (
                mpf(e.numerator) / e.denominator
            )
        return base * total

    def to_json(self):
        from .cli import complex_to_json

        out = {
            "kind": self.kind,
            "point": [complex_to_json(z) for z in self.base_point],
            "alpha": [str(a) for a in self.direction.alpha],
            "p": self.p,
            "N": self.N,
            "base_magnitude": mp.nstr(self.base_magnitude(), 20),
            "flattened": self.flattened.to_json(),
            "error_exponent": None
            if self.error_exponent is None
            else str(self.error_exponent),
            "meta": {k: str(v) for k, v in self.meta.items()},
        }
        if self.children:
            out["children"] = [c.to_json() for c in self.children]
        return out


def _flatten(records, alpha_d, error_exponent):
    """Collect structured records into powers of n.

    Each record contributes ``weight * term`` (the weight already carries the
    constant prefactor) against ``y^(i + y_exponent)`` for every power i of
    its rising factorial, where ``y = alpha_d n``; y-powers are then converted
    to n-powers.  Terms at or below the error exponent go to the dropped
    bucket.
    """
    acc = {}
    for rec in records:
        rf = rising_factorial_poly(Fraction(1), rec["rising"])
        for i, ci in enumerate(rf):
            if ci == 0:
                continue
            e = Fraction(i) + rec["y_exponent"]
            val = rec["weight"] * rec["term"] * coef_to_mpc(ci)
            acc[e] = acc.get(e, mpc(0)) + val
    kept, dropped = {}, {}
    for e, val in acc.items():
        # convert y^e = (alpha_d n)^e into n^e
        scale = mpf(alpha_d.numerator) / alpha_d.denominator
        val = val * scale ** (mpf(e.numerator) / e.denominator)
        if error_exponent is not None and e <= error_exponent:
            dropped[e] = dropped.get(e, mpc(0)) + val
        else:
            kept[e] = kept.get(e, mpc(0)) + val
    return (
        FlatSeries(list(kept.items()), error_exponent=error_exponent),
        FlatSeries(list(dropped.items()), error_exponent=None),
    )


def expand_smooth(frame, N):
    """Nondegenerate expansion at a smooth minimal critical point, N terms."""
    if N < 1:
        raise ExpansionError("need at least one term")
    d = frame.d
    if d < 2:
        raise ExpansionError("use the univariate path for one variable")
    det = frame.hessian_det()
    hscale = max(
        max(abs(frame.hessian[i, j]) for i in range(d - 1) for j in range(d - 1)),
        mpf(1),
    )
    if abs(det) <= DEGENERACY_GATE * hscale ** (d - 1):
        raise DegenerateHessianError(
            "phase Hessian is singular at the critical point"
        )
    phase = PhaseData.nondegenerate(frame.phase, frame.hessian)
    alpha_d = frame.direction.alpha[-1]
    p = frame.p
    pref = (2 * mp.pi) ** (-mpf(d - 1) / 2) * det_inv_sqrt(frame.hessian)
    records = []
    for j in range(p):
        u = frame.amplitudes[j]
        for k in range(N):
            term = stationary_term(u, phase, k)
            weight = pref / (math.factorial(p - 1 - j) * math.factorial(j))
            records.append(
                {
                    "j": j,
                    "k": k,
                    "term": term,
                    "weight": weight,
                    "rising": p - 1 - j,
                    "y_exponent": -(Fraction(d - 1, 2) + k),
                }
            )
    error_exponent = Fraction(p - 1) - Fraction(d - 1, 2) - N
    flattened, dropped = _flatten(records, alpha_d, error_exponent)
    return Expansion(
        kind="smooth",
        base_point=frame.point,
        direction=frame.direction,
        p=p,
        N=N,
        structured=records,
        flattened=flattened,
        dropped=dropped,
        error_exponent=error_exponent,
        meta={"alpha_d": alpha_d, "det": det, "reordering": frame.reordering},
    )


def expand_degenerate(frame, N, v=None):
    """Degenerate (two-variable) expansion with vanishing order v, N terms."""
    if N < 1:
        raise ExpansionError("need at least one term")
    if frame.d != 2:
        raise ExpansionError("degenerate expansions require exactly two variables")
    if v is None:
        v = vanishing_order(frame.phase)
    parity = "even" if v % 2 == 0 else "odd"
    needed = degenerate_phase_order(N, v, parity)
    if frame.order < needed:
        raise ExpansionError(
            f"frame order {frame.order} below the {needed} required for N={N}, v={v}"
        )
    phase = PhaseData.degenerate(frame.phase, v)
    alpha_d = frame.direction.alpha[-1]
    p = frame.p
    if parity == "even":
        from .stationary import branch_root

        pref = branch_root(phase.a, v) / (mp.pi * v)
        error_exponent = Fraction(p - 1) - Fraction(2 * N + 1, v)
    else:
        pref = abs(mpc(phase.a)) ** (mpf(-1) / v) / (2 * mp.pi * v)
        error_exponent = Fraction(p - 1) - Fraction(N + 1, v)
    records = []
    for j in range(p):
        u = frame.amplitudes[j]
        for k in range(N):
            if parity == "even":
                term = stationary_term_even(u, phase, k)
                step = Fraction(2 * k, v)
            else:
                term = stationary_term_odd(u, phase, k)
                step = Fraction(k, v)
            weight = pref / (math.factorial(p - 1 - j) * math.factorial(j))
            records.append(
                {
                    "j": j,
                    "k": k,
                    "term": term,
                    "weight": weight,
                    "rising": p - 1 - j,
                    "y_exponent": -(Fraction(1, v) + step),
                }
            )
    flattened, dropped = _flatten(records, alpha_d, error_exponent)
    return Expansion(
        kind=f"degenerate-{parity}",
        base_point=frame.point,
        direction=frame.direction,
        p=p,
        N=N,
        structured=records,
        flattened=flattened,
        dropped=dropped,
        error_exponent=error_exponent,
        meta={
            "alpha_d": alpha_d,
            "v": v,
            "a": phase.a,
            "reordering": frame.reordering,
        },
    )


def expand_univariate(G_num, H, p, point, G_den=None, direction=None):
    """One-variable expansion: exact up to an exponentially small remainder.

    The amplitudes are constants; the result is a polynomial in the
    coefficient index against the base ``c^{-n alpha_1}`` (``direction``
    defaults to index steps of one).
    """
    if H.nvars != 1:
        raise ExpansionError("univariate path requires one variable")
    direction = direction or Direction((1,))
    a1 = direction.alpha[0]
    c = mpc(point[0] if isinstance(point, (tuple, list)) else point)
    scale = max(H.coeff_bound(), mpf(1))
    if abs(H.eval((c,))) > mpf("1e-10") * scale:
        raise ExpansionError("point is not on the variety")
    order = p + 2
    H_jet = Jet.from_poly(H, (c,), order + 1)
    # divide off the simple zero: H(x) = (x - c) H1(x)
    if abs(H_jet.coefficient((1,))) <= mpf("1e-12") * scale:
        raise ExpansionError("point is not a smooth (simple) zero")
    H1 = Jet(1, order, (c,), {(k,): H_jet.coefficient((k + 1,)) for k in range(order + 1)})
    K = Jet.from_poly(G_num, (c,), order) * H1.pow_int(p).reciprocal()
    if G_den is not None:
        K = K * Jet.from_poly(G_den, (c,), order).reciprocal()
    amplitudes = []
    for j in range(p):
        u = (-c) ** (-p + j) * mpf(math.factorial(j)) * K.coefficient((j,))
        amplitudes.append(u)
    records = []
    acc = {}
    for j in range(p):
        weight = mpf(1) / (math.factorial(p - 1 - j) * math.factorial(j))
        records.append(
            {
                "j": j,
                "k": 0,
                "term": amplitudes[j],
                "weight": weight,
                "rising": p - 1 - j,
                "y_exponent": Fraction(0),
            }
        )
        rf = rising_factorial_poly(Fraction(1), p - 1 - j)
        for i, ci in enumerate(rf):
            if ci == 0:
                continue
            # the polynomial lives in the index m = alpha_1 * n
            scale = mpf(a1.numerator) / a1.denominator
            e = Fraction(i)
            acc[e] = acc.get(e, mpc(0)) + (
                weight * amplitudes[j] * coef_to_mpc(ci) * scale**i
            )
    return Expansion(
        kind="univariate",
        base_point=(c,),
        direction=direction,
        p=p,
        N=p,
        structured=records,
        flattened=FlatSeries(list(acc.items()), error_exponent=None),
        dropped=FlatSeries([]),
        error_exponent=None,
        meta={"alpha_d": a1},
    )


def combine_expansions(expansions):
    """Sum of expansions around the points sharing one minimal polycircle."""
    if not expansions:
        raise ExpansionError("nothing to combine")
    if len(expansions) == 1:
        return expansions[0]
    first = expansions[0]
    mag = first.base_magnitude()
    for e in expansions[1:]:
        if e.direction.alpha != first.direction.alpha:
            raise ExpansionError("combined expansions must share the direction")
        if abs(e.base_magnitude() - mag) > mpf("1e-9") * mag:
            raise ExpansionError("combined expansions must share the base magnitude")
    for i, e1 in enumerate(expansions):
        for e2 in expansions[i + 1 :]:
            dist = max(abs(a - b) for a, b in zip(e1.base_point, e2.base_point))
            if dist < mpf("1e-9") * max(mag, mpf(1)):
                raise ExpansionError("duplicate expansion points in combination")
    errs = [e.error_exponent for e in expansions if e.error_exponent is not None]
    return Expansion(
        kind="combined",
        base_point=first.base_point,
        direction=first.direction,
        p=first.p,
        N=first.N,
        structured=[],
        flattened=FlatSeries([]),
        dropped=FlatSeries([]),
        error_exponent=max(errs) if errs else None,
        children=list(expansions),
    )


def _common_step(exponents):
    exps = sorted(set(exponents), reverse=True)
    if len(exps) < 2:
        return Fraction(1)
    step = None
    for a, b in zip(exps, exps[1:]):
        gap = a - b
        step = gap if step is None else Fraction(
            math.gcd(step.numerator * gap.denominator, gap.numerator * step.denominator),
            step.denominator * gap.denominator,
        )
    return step


def ratio_asymptotics(numer, denom, N):
    """Asymptotics of the termwise ratio of two expansions over the same base.

    Returns a FlatSeries in descending powers of n, truncated at N terms or at
    the order where either input's own error takes over, whichever is sooner.
    """
    if isinstance(numer, Expansion):
        _check_same_base(numer, denom)
        num_f, den_f = numer.flattened, denom.flattened
    else:
        num_f, den_f = numer, denom
    if not num_f.terms or not den_f.terms:
        raise ExpansionError("ratio needs nonempty series")
    p0, a0 = num_f.leading()
    q0, b0 = den_f.leading()
    if abs(b0) == 0:
        raise ExpansionError("denominator has zero leading coefficient")
    step = _common_step(
        [e for e, _ in num_f.terms]
        + [e for e, _ in den_f.terms]
        + ([num_f.error_exponent] if num_f.error_exponent is not None else [])
        + ([den_f.error_exponent] if den_f.error_exponent is not None else [])
    )
    # valid term count limited by each input's own error order
    limit = N
    for f, lead in ((num_f, p0), (den_f, q0)):
        if f.error_exponent is not None:
            limit = min(limit, int((lead - f.error_exponent) / step))
    if limit < 1:
        raise ExpansionError("inputs carry no usable common terms")

    def slot(f, lead, i):
        return f.coefficient(lead - i * step)

    a = [slot(num_f, p0, i) for i in range(limit)]
    b = [slot(den_f, q0, i) for i in range(limit)]
    q = []
    for i in range(limit):
        s = a[i]
        for m in range(i):
            s -= q[m] * b[i - m]
        q.append(s / b0)
    terms = [(p0 - q0 - i * step, q[i]) for i in range(limit)]
    return FlatSeries(terms, error_exponent=p0 - q0 - limit * step)


def _check_same_base(numer, denom):
    if numer.direction.alpha != denom.direction.alpha:
        raise ExpansionError("ratio requires a common direction")
    for a, b in zip(numer.base_point, denom.base_point):
        if abs(a - b) > mpf("1e-9") * max(abs(a), mpf(1)):
            raise ExpansionError("ratio requires a common base point")
