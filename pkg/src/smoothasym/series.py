"""Exact sparse polynomials and truncated multivariate Taylor (jet) arithmetic.

Polynomials carry exact rational (or Gaussian-rational) coefficients and are
the only accepted input format.  Jets are truncated Taylor expansions at a
point, normally with arbitrary-precision complex coefficients (``mpmath``),
and are the substrate for every derivative computed downstream.  Jet
coefficients are Taylor coefficients, i.e. the coefficient of ``(x-c)^beta``
is ``d^beta f(c) / beta!``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp, mpc, mpf

DEFAULT_BITS = 212


class SeriesError(ValueError):
    """Malformed polynomial/jet input or incompatible operands."""


class NonInvertibleJetError(SeriesError):
    """Jet has zero constant term where an invertible one is required."""


@dataclass(frozen=True)
class Precision:
    """Significand precision, in bits, for complex jet arithmetic."""

    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if self.bits < 53:
            raise SeriesError("precision must be at least 53 bits")


def workprec(bits):
    """Context manager running mpmath at the given significand precision."""
    if bits < 53:
        raise SeriesError("precision must be at least 53 bits")
    return mp.workprec(bits)


class GaussRat:
    """Exact Gaussian rational ``re + im*i``, components ``Fraction``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, *a):
        raise AttributeError("GaussRat is immutable")

    def __repr__(self):
        return f"GaussRat({self.re!r}, {self.im!r})"

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return _gauss_or_frac(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __sub__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return _gauss_or_frac(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return _gauss_or_frac(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by zero GaussRat")
        return _gauss_or_frac(
            (self.re * other.re + self.im * other.im) / den,
            (self.im * other.re - self.re * other.im) / den,
        )

    def __rtruediv__(self, other):
        return _as_gauss(other) / self

    def conjugate(self):
        return GaussRat(self.re, -self.im)


def _as_gauss(x):
    if isinstance(x, GaussRat):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussRat(x, 0)
    return NotImplemented


def _gauss_or_frac(re, im):
    # collapse to Fraction whenever the imaginary part cancels
    return Fraction(re) if im == 0 else GaussRat(re, im)


def coef_to_mpc(c):
    """Exact coefficient (or number) -> mpc at the current working precision."""
    if isinstance(c, Fraction):
        return mpc(mpf(c.numerator) / mpf(c.denominator))
    if isinstance(c, GaussRat):
        return mpc(
            mpf(c.re.numerator) / mpf(c.re.denominator),
            mpf(c.im.numerator) / mpf(c.im.denominator),
        )
    if isinstance(c, int):
        return mpc(c)
    return mpc(c)


def parse_coef(obj):
    """Parse a JSON coefficient: "num/den" string, int, or {"re","im"} pair."""
    if isinstance(obj, dict):
        re = Fraction(obj.get("re", 0))
        im = Fraction(obj.get("im", 0))
        return _gauss_or_frac(re, im)
    if isinstance(obj, (int, str)):
        return Fraction(obj)
    raise SeriesError(f"cannot parse coefficient {obj!r}")


def format_coef(c):
    if isinstance(c, GaussRat):
        return {"re": str(c.re), "im": str(c.im)}
    return str(c)


class SparsePoly:
    """Multivariate polynomial with exact coefficients, stored sparsely.

    ``terms`` maps exponent tuples (length ``nvars``, nonnegative) to nonzero
    ``Fraction`` or ``GaussRat`` coefficients.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = int(nvars)
        clean = {}
        for exp, coef in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars:
                raise SeriesError(f"exponent {exp} has wrong length")
            if any(e < 0 for e in exp):
                raise SeriesError(f"negative exponent in {exp}")
            if not isinstance(coef, (Fraction, GaussRat)):
                coef = Fraction(coef)
            if coef:
                clean[exp] = clean.get(exp, Fraction(0)) + coef
        self.terms = {e: c for e, c in clean.items() if c}

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars, j):
        exp = [0] * nvars
        exp[j] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def from_json(cls, obj, nvars=None):
        """Parse ``[{"exp": [...], "coef": ...}, ...]`` (or a JSON string)."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, list):
            raise SeriesError("polynomial JSON must be a list of terms")
        terms = {}
        for item in obj:
            exp = tuple(int(e) for e in item["exp"])
            if nvars is None:
                nvars = len(exp)
            coef = parse_coef(item["coef"])
            terms[exp] = terms.get(exp, Fraction(0)) + coef
        if nvars is None:
            raise SeriesError("empty polynomial JSON needs an explicit nvars")
        return cls(nvars, terms)

    def to_json(self):
        return [
            {"exp": list(e), "coef": format_coef(c)}
            for e, c in sorted(self.terms.items())
        ]

    # -- ring operations ----------------------------------------------------

    def _check(self, other):
        if not isinstance(other, SparsePoly):
            other = SparsePoly.constant(self.nvars, other)
        if other.nvars != self.nvars:
            raise SeriesError("nvars mismatch")
        return other

    def __add__(self, other):
        other = self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return SparsePoly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussRat)):
            return SparsePoly(
                self.nvars, {e: c * other for e, c in self.terms.items()}
            )
        other = self._check(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return SparsePoly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise SeriesError("polynomial powers must be nonnegative integers")
        result = SparsePoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def __eq__(self, other):
        return (
            isinstance(other, SparsePoly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __repr__(self):
        return f"SparsePoly({self.nvars}, {self.terms!r})"

    def is_zero(self):
        return not self.terms

    # -- calculus / evaluation ----------------------------------------------

    def partial(self, j):
        terms = {}
        for e, c in self.terms.items():
            if e[j] == 0:
                continue
            ne = list(e)
            ne[j] -= 1
            terms[tuple(ne)] = c * e[j]
        return SparsePoly(self.nvars, terms)

    def eval(self, point):
        """Evaluate at a complex vector at the current working precision."""
        point = [mpc(z) for z in point]
        total = mpc(0)
        pow_cache = [{} for _ in range(self.nvars)]
        for e, c in self.terms.items():
            term = coef_to_mpc(c)
            for j, k in enumerate(e):
                if k:
                    pk = pow_cache[j].get(k)
                    if pk is None:
                        pk = point[j] ** k
                        pow_cache[j][k] = pk
                    term *= pk
            total += term
        return total

    def eval_exact(self, point):
        """Evaluate at exact rational/Gaussian-rational coordinates."""
        total = Fraction(0)
        for e, c in self.terms.items():
            term = c
            for j, k in enumerate(e):
                if k:
                    term = term * point[j] ** k
            total = total + term
        return total

    def permute(self, perm):
        """Reorder variables: new variable i is old variable ``perm[i]``."""
        if sorted(perm) != list(range(self.nvars)):
            raise SeriesError(f"{perm} is not a permutation")
        terms = {}
        for e, c in self.terms.items():
            terms[tuple(e[p] for p in perm)] = c
        return SparsePoly(self.nvars, terms)

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def max_degree(self, j):
        return max((e[j] for e in self.terms), default=-1)

    def support(self):
        return sorted(self.terms)

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def coeff_bound(self):
        """Max coefficient magnitude (crude, used for scale-relative tests)."""
        best = mpf(0)
        for c in self.terms.values():
            m = abs(coef_to_mpc(c))
            if m > best:
                best = m
        return best


# -- jets --------------------------------------------------------------------


class Jet:
    """Truncated Taylor expansion at ``center``, orders ``<= order``.

    Coefficients are ``mpc`` (or exact rationals when built from exact data).
    ``caps`` is an optional per-variable degree cap used internally to avoid
    carrying powers that can never influence the requested coefficients.
    """

    __slots__ = ("nvars", "order", "center", "coeffs", "caps")

    def __init__(self, nvars, order, center, coeffs=None, caps=None):
        self.nvars = int(nvars)
        self.order = int(order)
        if self.order < 0:
            raise SeriesError("jet order must be nonnegative")
        if len(center) != self.nvars:
            raise SeriesError("center length does not match nvars")
        self.center = tuple(center)
        self.caps = tuple(caps) if caps is not None else None
        self.coeffs = {}
        if coeffs:
            for beta, c in coeffs.items():
                if self._keeps(beta) and not (c == 0):
                    self.coeffs[tuple(beta)] = c

    def _keeps(self, beta):
        if sum(beta) > self.order:
            return False
        if self.caps is not None:
            for b, cap in zip(beta, self.caps):
                if cap is not None and b > cap:
                    return False
        return True

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, nvars, order, center, value, caps=None):
        return cls(nvars, order, center, {(0,) * nvars: value}, caps=caps)

    @classmethod
    def from_poly(cls, poly, center, order, caps=None, exact=False):
        """Taylor-shift a polynomial: coefficients of ``P(center + s)``.

        Exact for every polynomial whose degree fits the truncation; terms
        beyond ``order`` are cut.  ``exact=True`` keeps rational arithmetic
        (requires rational center coordinates).
        """
        if len(center) != poly.nvars:
            raise SeriesError("center length does not match polynomial nvars")
        if exact:
            cpoint = tuple(center)
            one = Fraction(1)
        else:
            cpoint = tuple(mpc(z) for z in center)
            one = mpc(1)
        out = cls(poly.nvars, order, cpoint, {}, caps=caps)
        zero_idx = (0,) * poly.nvars
        for e, c in poly.terms.items():
            # expand prod_j (c_j + s_j)^{e_j} by the binomial theorem
            parts = {zero_idx: (c if exact else coef_to_mpc(c))}
            for j, k in enumerate(e):
                if k == 0:
                    continue
                cj = cpoint[j]
                binom = [one]
                for i in range(1, k + 1):
                    binom.append(binom[-1] * (k - i + 1) / i)
                powers = [one]
                for _ in range(k):
                    powers.append(powers[-1] * cj)
                new_parts = {}
                for beta, val in parts.items():
                    for i in range(0, k + 1):
                        nb = list(beta)
                        nb[j] += i
                        nb = tuple(nb)
                        if not out._keeps(nb):
                            continue
                        term = val * binom[i] * powers[k - i]
                        if nb in new_parts:
                            new_parts[nb] = new_parts[nb] + term
                        else:
                            new_parts[nb] = term
                parts = new_parts
            for beta, val in parts.items():
                if beta in out.coeffs:
                    out.coeffs[beta] = out.coeffs[beta] + val
                else:
                    out.coeffs[beta] = val
        out.coeffs = {b: v for b, v in out.coeffs.items() if not (v == 0)}
        return out

    # -- helpers -------------------------------------------------------------

    def coefficient(self, beta):
        beta = tuple(beta)
        if sum(beta) > self.order:
            raise SeriesError(f"index {beta} beyond truncation order {self.order}")
        return self.coeffs.get(beta, mpc(0))

    def constant_coefficient(self):
        return self.coeffs.get((0,) * self.nvars, mpc(0))

    def truncate(self, order, caps=None):
        caps = caps if caps is not None else self.caps
        return Jet(self.nvars, min(order, self.order), self.center, self.coeffs, caps=caps)

    def _compat(self, other):
        if not isinstance(other, Jet):
            raise SeriesError("expected a Jet")
        if other.nvars != self.nvars or other.order != self.order:
            raise SeriesError("jet order/nvars mismatch")
        if other.center != self.center:
            raise SeriesError("jet center mismatch")

    def map_coeffs(self, f):
        return Jet(
            self.nvars,
            self.order,
            self.center,
            {b: f(v) for b, v in self.coeffs.items()},
            caps=self.caps,
        )

    def __add__(self, other):
        self._compat(other)
        coeffs = dict(self.coeffs)
        for b, v in other.coeffs.items():
            coeffs[b] = coeffs[b] + v if b in coeffs else v
        caps = _merge_caps(self.caps, other.caps)
        return Jet(self.nvars, self.order, self.center, coeffs, caps=caps)

    def __neg__(self):
        return self.map_coeffs(lambda v: -v)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k):
        return self.map_coeffs(lambda v: v * k)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        self._compat(other)
        caps = _merge_caps(self.caps, other.caps)
        out = Jet(self.nvars, self.order, self.center, {}, caps=caps)
        coeffs = out.coeffs
        small, big = self.coeffs, other.coeffs
        if len(big) < len(small):
            small, big = big, small
        for b1, v1 in small.items():
            d1 = sum(b1)
            for b2, v2 in big.items():
                if d1 + sum(b2) > self.order:
                    continue
                b = tuple(x + y for x, y in zip(b1, b2))
                if not out._keeps(b):
                    continue
                prod = v1 * v2
                coeffs[b] = coeffs[b] + prod if b in coeffs else prod
        out.coeffs = {b: v for b, v in coeffs.items() if not (v == 0)}
        return out

    __rmul__ = scale

    def pow_int(self, k):
        if not isinstance(k, int) or k < 0:
            raise SeriesError("jet powers must be nonnegative integers")
        result = Jet.constant(self.nvars, self.order, self.center, _one_like(self), caps=self.caps)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def is_exact(self):
        return all(isinstance(v, (Fraction, GaussRat, int)) for v in self.coeffs.values())

    def to_float(self):
        return Jet(
            self.nvars,
            self.order,
            tuple(mpc(z) if isinstance(z, (Fraction, int)) else z for z in self.center),
            {b: coef_to_mpc(v) for b, v in self.coeffs.items()},
            caps=self.caps,
        )

    # -- series inverses -----------------------------------------------------

    def reciprocal(self):
        """Jet ``b`` with ``self * b = 1`` through the truncation order."""
        a0 = self.constant_coefficient()
        if a0 == 0:
            raise NonInvertibleJetError("jet has zero constant term")
        # 1/a = (1/a0) * sum_m u^m with u = 1 - a/a0 (valuation >= 1)
        u = Jet(
            self.nvars,
            self.order,
            self.center,
            {b: -(v / a0) for b, v in self.coeffs.items() if sum(b) > 0},
            caps=self.caps,
        )
        one = _one_like(self)
        acc = Jet.constant(self.nvars, self.order, self.center, one, caps=self.caps)
        for _ in range(self.order):
            acc = u * acc
            acc = acc + Jet.constant(self.nvars, self.order, self.center, one, caps=self.caps)
        return acc.map_coeffs(lambda v: v / a0)

    def log(self):
        """Principal-branch logarithm; constant term is ``Log a(center)``."""
        a0 = self.constant_coefficient()
        if a0 == 0:
            raise NonInvertibleJetError("jet has zero constant term")
        u = Jet(
            self.nvars,
            self.order,
            self.center,
            {b: v / a0 for b, v in self.coeffs.items() if sum(b) > 0},
            caps=self.caps,
        )
        if self.order == 0:
            out = Jet(self.nvars, 0, self.center, {}, caps=self.caps)
        else:
            # log(1+u) = u*(1 - u/2 + u^2/3 - ...) via Horner
            acc = Jet.constant(
                self.nvars, self.order, self.center,
                mpc((-1) ** (self.order + 1)) / self.order, caps=self.caps,
            )
            for m in range(self.order - 1, 0, -1):
                acc = u * acc
                acc = acc + Jet.constant(
                    self.nvars, self.order, self.center,
                    mpc((-1) ** (m + 1)) / m, caps=self.caps,
                )
            out = u * acc
        const = mp.log(mpc(coef_to_mpc(a0)))
        if const != 0:
            out = out + Jet.constant(self.nvars, self.order, self.center, const, caps=self.caps)
        return out

    # -- calculus ------------------------------------------------------------

    def partial(self, r):
        """Derivative in variable ``r``; the order drops by one."""
        if self.order == 0:
            return Jet(self.nvars, 0, self.center, {})
        coeffs = {}
        for b, v in self.coeffs.items():
            if b[r] == 0:
                continue
            nb = list(b)
            nb[r] -= 1
            if sum(nb) <= self.order - 1:
                coeffs[tuple(nb)] = v * b[r]
        return Jet(self.nvars, self.order - 1, self.center, coeffs, caps=self.caps)

    def eval(self, displacement):
        """Evaluate the truncated series at center + displacement."""
        if len(displacement) != self.nvars:
            raise SeriesError("displacement length mismatch")
        dt = [mpc(z) for z in displacement]
        total = mpc(0)
        for b, v in self.coeffs.items():
            term = coef_to_mpc(v)
            for j, k in enumerate(b):
                for _ in range(k):
                    term *= dt[j]
            total += term
        return total

    def substitute(self, var, series, new_center=None):
        """Replace the displacement of ``var`` by ``series`` (Horner form).

        ``series`` must live in the same index space, have the same truncation
        order and a vanishing constant term, so truncation commutes with the
        substitution.
        """
        if not isinstance(series, Jet) or series.nvars != self.nvars:
            raise SeriesError("substitution series must match the index space")
        if series.order != self.order:
            raise SeriesError("substitution series order mismatch")
        if series.constant_coefficient() != 0:
            raise SeriesError("substitution series must have zero constant term")
        center = tuple(new_center) if new_center is not None else self.center
        parts = {}
        top = 0
        for b, v in self.coeffs.items():
            k = b[var]
            nb = list(b)
            nb[var] = 0
            parts.setdefault(k, {})[tuple(nb)] = v
            top = max(top, k)
        out = Jet(self.nvars, self.order, center, parts.get(top, {}), caps=self.caps)
        series = Jet(self.nvars, self.order, center, series.coeffs, caps=self.caps)
        for k in range(top - 1, -1, -1):
            out = out * series
            if k in parts:
                out = out + Jet(self.nvars, self.order, center, parts[k], caps=self.caps)
        return out

    def __repr__(self):
        items = ", ".join(f"{b}: {v}" for b, v in sorted(self.coeffs.items()))
        return f"Jet(nvars={self.nvars}, order={self.order}, {{{items}}})"

    def to_json(self, digits=None):
        """Full-precision decimal serialization for debugging and golden tests."""
        digits = digits or int(mp.prec / 3.32) + 2

        def cx(z):
            z = coef_to_mpc(z)
            return {"re": mp.nstr(z.real, digits), "im": mp.nstr(z.imag, digits)}

        return {
            "nvars": self.nvars,
            "order": self.order,
            "center": [cx(z) for z in self.center],
            "coeffs": [
                {"beta": list(b), "coef": cx(v)} for b, v in sorted(self.coeffs.items())
            ],
        }


def _one_like(jet):
    return Fraction(1) if jet.is_exact() and jet.coeffs else mpc(1)


def _merge_caps(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return tuple(
        x if y is None else y if x is None else min(x, y) for x, y in zip(a, b)
    )


def circle_exp_series(nvars, order, var, radius):
    """Jet of ``radius * (e^{i t_var} - 1)`` in the t-index space."""
    coeffs = {}
    term = mpc(radius)
    for k in range(1, order + 1):
        term = term * mpc(0, 1) / k
        beta = [0] * nvars
        beta[var] = k
        coeffs[tuple(beta)] = term
    return Jet(nvars, order, (mpc(0),) * nvars, coeffs)


def jet_circle_substitute(a, order=None):
    """Restrict a jet to the torus through its center: ``w_m = c_m e^{i t_m}``.

    Substitutes the truncated series ``c_m (e^{i t_m} - 1)`` for each
    displacement ``w_m - c_m``; the result is a jet in ``t`` at 0.
    """
    order = a.order if order is None else order
    if order > a.order:
        raise SeriesError("cannot extend a jet beyond its truncation order")
    out = a.to_float().truncate(order)
    radii = out.center
    zero_center = (mpc(0),) * a.nvars
    for m in range(a.nvars):
        if radii[m] == 0:
            raise SeriesError("circle substitution requires nonzero center")
        s = circle_exp_series(a.nvars, order, m, radii[m])
        out = out.substitute(m, s, new_center=zero_center)
    return Jet(out.nvars, out.order, zero_center, out.coeffs, caps=out.caps)


def jet_allclose(a, b, rel=None, abs_tol=None):
    """Coefficientwise closeness, relative to the largest magnitude present."""
    scale = mpf(0)
    for jet in (a, b):
        for v in jet.coeffs.values():
            m = abs(coef_to_mpc(v))
            if m > scale:
                scale = m
    if scale == 0:
        return True
    if rel is None:
        rel = mpf(2) ** (10 - mp.prec)
    tol = scale * rel
    if abs_tol is not None:
        tol = max(tol, mpf(abs_tol))
    keys = set(a.coeffs) | set(b.coeffs)
    for k in keys:
        va = coef_to_mpc(a.coeffs.get(k, 0))
        vb = coef_to_mpc(b.coeffs.get(k, 0))
        if abs(va - vb) > tol:
            return False
    return True
