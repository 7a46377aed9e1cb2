"""Sparse multivariate polynomial arithmetic over named variables.

Provides exact coefficient arithmetic, evaluation, composition,
expectation under independent noise moments, and sound interval
enclosures over boxes.  All values are immutable after construction and
operations are pure functions, so they can be shared freely across
threads.

Text syntax for polynomials (used in config and certificate files) is a
sum of terms ``c * v1^e1 * v2^e2`` where variable names match
``[A-Za-z][A-Za-z0-9_]*``, e.g. ``"0.7659*T^2 - 30.24*T + 298.5"``.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Mapping

import numpy as np

# Slack margin absorbed by every certified inequality check; coefficients
# are doubles, so verified inequalities always carry this tolerance.
EPS_NUM = 1e-9

# A monomial is a sorted tuple of (variable, exponent) pairs with
# exponents >= 1; the empty tuple is the constant monomial.
Monomial = tuple

_VAR_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[+\-*^]))"
)


class MomentOrderError(ValueError):
    """An expectation needed a noise moment beyond those available."""


def _normalize(terms: Mapping[Monomial, float]) -> dict:
    out: dict = {}
    for mono, coeff in terms.items():
        key = tuple(sorted((v, int(e)) for v, e in mono if e != 0))
        if coeff == 0.0:
            continue
        acc = out.get(key, 0.0) + coeff
        if acc == 0.0:
            out.pop(key, None)
        else:
            out[key] = acc
    return out


def _ordered_monomials(terms: Mapping[Monomial, float]) -> list:
    # canonical order: graded lexicographic by variable name, descending
    allvars = sorted({v for mono in terms for v, _ in mono})

    def key(mono):
        exps = dict(mono)
        return (-sum(exps.values()), tuple(-exps.get(v, 0) for v in allvars))

    return sorted(terms, key=key)


class Polynomial:
    """Sparse polynomial: a map from monomials to real coefficients.

    Normalization drops zero coefficients and zero exponents, so two
    polynomials are equal iff their term maps are equal.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, float] | None = None):
        object.__setattr__(self, "terms", _normalize(terms or {}))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls({})

    @classmethod
    def constant(cls, c: float) -> "Polynomial":
        return cls({(): float(c)})

    @classmethod
    def variable(cls, name: str) -> "Polynomial":
        if not _VAR_RE.fullmatch(name):
            raise ValueError(f"invalid variable name {name!r}")
        return cls({((name, 1),): 1.0})

    # -- structure ----------------------------------------------------

    @property
    def variables(self) -> frozenset:
        return frozenset(v for mono in self.terms for v, _ in mono)

    @property
    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e for _, e in mono) for mono in self.terms)

    def degree_in(self, var: str) -> int:
        deg = 0
        for mono in self.terms:
            for v, e in mono:
                if v == var:
                    deg = max(deg, e)
        return deg

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def constant_value(self) -> float:
        """Value of a constant polynomial (raises if non-constant)."""
        if self.variables:
            raise ValueError("polynomial is not constant")
        return self.terms.get((), 0.0)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other) -> "Polynomial":
        other = _coerce(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            out[mono] = out.get(mono, 0.0) + coeff
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, float)):
            return self.scale(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _mono_mul(m1, m2)
                out[mono] = out.get(mono, 0.0) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def scale(self, r: float) -> "Polynomial":
        return Polynomial({m: c * float(r) for m, c in self.terms.items()})

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- evaluation ---------------------------------------------------

    def evaluate(self, point: Mapping[str, float]) -> float:
        """Direct term summation at a point covering all variables."""
        total = 0.0
        for mono, coeff in self.terms.items():
            val = coeff
            for v, e in mono:
                if v not in point:
                    raise ValueError(f"point is missing variable {v!r}")
                val *= point[v] ** e
            total += val
        return total

    __call__ = evaluate

    def eval_batch(self, cols: Mapping[str, np.ndarray]) -> np.ndarray:
        """Vectorized evaluation over per-variable sample columns."""
        n = len(next(iter(cols.values()))) if cols else 1
        total = np.zeros(n)
        for mono, coeff in self.terms.items():
            val = np.full(n, coeff)
            for v, e in mono:
                if v not in cols:
                    raise ValueError(f"columns are missing variable {v!r}")
                val = val * cols[v] ** e
            total += val
        return total

    # -- composition --------------------------------------------------

    def substitute(self, subst: Mapping[str, "Polynomial | float"]) -> "Polynomial":
        """Replace a subset of variables by polynomials (exact expansion).

        Variables absent from `subst` pass through unchanged.
        """
        repl = {v: _coerce(p) for v, p in subst.items()}
        out = Polynomial.zero()
        for mono, coeff in self.terms.items():
            term = Polynomial.constant(coeff)
            for v, e in mono:
                factor = repl.get(v)
                if factor is None:
                    factor = Polynomial.variable(v)
                term = term * factor**e
            out = out + term
        return out

    def rename(self, mapping: Mapping[str, str]) -> "Polynomial":
        out: dict = {}
        for mono, coeff in self.terms.items():
            key = tuple(sorted((mapping.get(v, v), e) for v, e in mono))
            if len({v for v, _ in key}) != len(key):
                raise ValueError("rename collapses distinct variables")
            out[key] = out.get(key, 0.0) + coeff
        return Polynomial(out)

    # -- expectation --------------------------------------------------

    def expectation(self, noise: "NoiseModel", noise_vars: Iterable[str]) -> "Polynomial":
        """Integrate out noise variables using raw moments.

        Noise coordinates are mutually independent, so a factor
        ``s1^k1 * s2^k2`` contributes ``m_k1 * m_k2``.  Raises
        MomentOrderError when a required moment order is unavailable.
        """
        nv = frozenset(noise_vars)
        out: dict = {}
        for mono, coeff in self.terms.items():
            rest = []
            for v, e in mono:
                if v in nv:
                    coeff *= noise.moment(e)
                else:
                    rest.append((v, e))
            if coeff == 0.0:
                continue
            key = tuple(rest)
            out[key] = out.get(key, 0.0) + coeff
        return Polynomial(out)

    # -- interval enclosure -------------------------------------------

    def interval_bound(self, box: "Box") -> tuple:
        """Sound enclosure of the range over a box.

        Monomial-wise interval arithmetic with the even-power rule;
        dependency between terms is lost, so the enclosure may be wide
        but always contains the true range.
        """
        lo_total, hi_total = 0.0, 0.0
        for mono, coeff in self.terms.items():
            lo, hi = 1.0, 1.0
            for v, e in mono:
                plo, phi = _interval_pow(*box.interval(v), e)
                lo, hi = _interval_mul(lo, hi, plo, phi)
            lo, hi = _interval_mul(lo, hi, coeff, coeff)
            lo_total += lo
            hi_total += hi
        return (lo_total, hi_total)

    # -- text form ----------------------------------------------------

    def to_string(self) -> str:
        if not self.terms:
            return "0"
        monos = _ordered_monomials(self.terms)
        parts = []
        for mono in monos:
            coeff = self.terms[mono]
            factors = [f"{v}^{e}" if e > 1 else v for v, e in mono]
            mag = repr(abs(coeff))
            body = "*".join([mag] + factors) if (abs(coeff) != 1.0 or not factors) else "*".join(factors)
            if not parts:
                parts.append(("-" if coeff < 0 else "") + body)
            else:
                parts.append(("- " if coeff < 0 else "+ ") + body)
        return " ".join(parts)

    __str__ = to_string

    def __repr__(self) -> str:
        return f"Polynomial({self.to_string()!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def approx_equal(self, other: "Polynomial", tol: float = 1e-9) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= tol for k in keys
        )


def _coerce(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, (int, float)):
        return Polynomial.constant(value)
    raise TypeError(f"cannot interpret {type(value).__name__} as polynomial")


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    exps: dict = dict(m1)
    for v, e in m2:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def _interval_mul(alo, ahi, blo, bhi):
    products = (alo * blo, alo * bhi, ahi * blo, ahi * bhi)
    return (min(products), max(products))


def _interval_pow(lo, hi, e):
    if e == 0:
        return (1.0, 1.0)
    if e % 2 == 1 or lo >= 0.0:
        return (lo**e, hi**e)
    if hi <= 0.0:
        return (hi**e, lo**e)
    # even power straddling zero
    return (0.0, max(lo**e, hi**e))


# ---------------------------------------------------------------------
# parsing


def parse_poly(text: str) -> Polynomial:
    """Parse the textual polynomial syntax used in config files."""
    pos = 0
    sign = 1.0
    total: dict = {}
    expecting_term = True
    coeff = None
    mono: dict = {}

    def flush():
        nonlocal coeff, mono, sign
        if coeff is None and not mono:
            return
        c = sign * (1.0 if coeff is None else coeff)
        key = tuple(sorted(mono.items()))
        total[key] = total.get(key, 0.0) + c
        coeff, mono, sign = None, {}, 1.0

    pending_pow = None
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"cannot parse polynomial near {text[pos:pos + 12]!r}")
            break
        pos = m.end()
        if m.group("num") is not None:
            if pending_pow is not None:
                mono[pending_pow] = mono.get(pending_pow, 0) + int(float(m.group("num"))) - 1
                pending_pow = None
            elif expecting_term or coeff is None and not mono:
                coeff = float(m.group("num")) if coeff is None else coeff * float(m.group("num"))
                expecting_term = False
            else:
                raise ValueError(f"unexpected number in {text!r}")
        elif m.group("var") is not None:
            mono[m.group("var")] = mono.get(m.group("var"), 0) + 1
            expecting_term = False
        else:
            op = m.group("op")
            if op in ("+", "-"):
                if expecting_term:
                    sign *= -1.0 if op == "-" else 1.0
                else:
                    flush()
                    sign = -1.0 if op == "-" else 1.0
                    expecting_term = True
            elif op == "*":
                continue
            elif op in ("^", "**"):
                last = next(reversed(mono)) if mono else None
                if last is None:
                    raise ValueError(f"power without variable in {text!r}")
                pending_pow = last
    flush()
    return Polynomial({tuple((v, e) for v, e in key if e): c for key, c in total.items()})


def compile_evaluator(poly: Polynomial, var_order: tuple):
    """Compile a polynomial to a fast positional evaluator.

    Returns a callable taking a sequence (or numpy array) of values in
    `var_order`.  Term order is canonical, so compilation is
    deterministic.
    """
    index = {v: i for i, v in enumerate(var_order)}
    missing = poly.variables - set(index)
    if missing:
        raise ValueError(f"var_order is missing {sorted(missing)}")
    parts = []
    for mono in _ordered_monomials(poly.terms):
        factors = [repr(poly.terms[mono])]
        for v, e in mono:
            factors.append(f"v[{index[v]}]" + (f"**{e}" if e > 1 else ""))
        parts.append("*".join(factors))
    src = " + ".join(parts) if parts else "0.0"
    return eval(compile(f"lambda v: {src}", "<polynomial>", "eval"))  # noqa: S307


# ---------------------------------------------------------------------
# boxes


class Box:
    """Axis-aligned closed box: per-variable interval [lo, hi]."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Mapping[str, tuple]):
        iv = {}
        for v, (lo, hi) in intervals.items():
            lo, hi = float(lo), float(hi)
            if not lo <= hi:
                raise ValueError(f"empty interval for {v!r}: [{lo}, {hi}]")
            iv[v] = (lo, hi)
        if not iv:
            raise ValueError("box must have at least one variable")
        object.__setattr__(self, "intervals", iv)

    def __setattr__(self, name, value):
        raise AttributeError("Box is immutable")

    @property
    def varnames(self) -> tuple:
        return tuple(sorted(self.intervals))

    @property
    def dimension(self) -> int:
        return len(self.intervals)

    def interval(self, var: str) -> tuple:
        try:
            return self.intervals[var]
        except KeyError:
            raise ValueError(f"box has no variable {var!r}") from None

    def lo(self, var: str) -> float:
        return self.interval(var)[0]

    def hi(self, var: str) -> float:
        return self.interval(var)[1]

    def width(self, var: str) -> float:
        lo, hi = self.interval(var)
        return hi - lo

    def max_width(self) -> float:
        return max(hi - lo for lo, hi in self.intervals.values())

    def center(self) -> dict:
        return {v: 0.5 * (lo + hi) for v, (lo, hi) in self.intervals.items()}

    def contains(self, point: Mapping[str, float], tol: float = 0.0) -> bool:
        for v, (lo, hi) in self.intervals.items():
            x = point.get(v)
            if x is None or x < lo - tol or x > hi + tol:
                return False
        return True

    def sample(self, rng: np.random.Generator, n: int) -> list:
        """n points uniform over the box, as variable->value dicts."""
        names = self.varnames
        lows = np.array([self.intervals[v][0] for v in names])
        highs = np.array([self.intervals[v][1] for v in names])
        pts = rng.uniform(lows, highs, size=(n, len(names)))
        return [dict(zip(names, row)) for row in pts]

    def sample_columns(self, rng: np.random.Generator, n: int) -> dict:
        """n uniform points as per-variable numpy columns."""
        return {
            v: rng.uniform(lo, hi, size=n) for v, (lo, hi) in sorted(self.intervals.items())
        }

    def split(self, var: str) -> tuple:
        lo, hi = self.interval(var)
        mid = 0.5 * (lo + hi)
        left = dict(self.intervals)
        right = dict(self.intervals)
        left[var] = (lo, mid)
        right[var] = (mid, hi)
        return (Box(left), Box(right))

    def join(self, other: "Box") -> "Box":
        overlap = set(self.intervals) & set(other.intervals)
        if overlap:
            raise ValueError(f"joined boxes share variables {sorted(overlap)}")
        merged = dict(self.intervals)
        merged.update(other.intervals)
        return Box(merged)

    def intersect(self, other: "Box") -> "Box | None":
        if set(self.intervals) != set(other.intervals):
            raise ValueError("intersect requires identical variable sets")
        out = {}
        for v, (lo, hi) in self.intervals.items():
            olo, ohi = other.intervals[v]
            nlo, nhi = max(lo, olo), min(hi, ohi)
            if nlo > nhi:
                return None
            out[v] = (nlo, nhi)
        return Box(out)

    def rename(self, mapping: Mapping[str, str]) -> "Box":
        return Box({mapping.get(v, v): iv for v, iv in self.intervals.items()})

    def to_dict(self) -> dict:
        return {v: [lo, hi] for v, (lo, hi) in sorted(self.intervals.items())}

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self):
        return hash(tuple(sorted(self.intervals.items())))

    def __repr__(self):
        body = ", ".join(f"{v}: [{lo}, {hi}]" for v, (lo, hi) in sorted(self.intervals.items()))
        return f"Box({body})"


def boxes_equal(a: Iterable[Box], b: Iterable[Box], tol: float = 1e-12) -> bool:
    """Set equality of two box unions within a per-endpoint tolerance."""
    la, lb = list(a), list(b)
    if len(la) != len(lb):
        return False

    def key(box):
        return tuple(sorted(box.intervals.items()))

    la.sort(key=key)
    lb.sort(key=key)
    for ba, bb in zip(la, lb):
        if set(ba.intervals) != set(bb.intervals):
            return False
        for v in ba.intervals:
            alo, ahi = ba.intervals[v]
            blo, bhi = bb.intervals[v]
            if abs(alo - blo) > tol or abs(ahi - bhi) > tol:
                return False
    return True


# ---------------------------------------------------------------------
# noise


def _double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


class NoiseModel:
    """Per-coordinate i.i.d. noise: raw moments m_0..m_K plus a sampler.

    One model describes every noise coordinate it is applied to;
    coordinates are mutually independent.
    """

    __slots__ = ("moments", "_sampler", "description")

    def __init__(self, moments, sampler=None, description: str = "custom"):
        moments = tuple(float(m) for m in moments)
        if not moments or moments[0] != 1.0:
            raise ValueError("moment sequence must start with m_0 = 1")
        object.__setattr__(self, "moments", moments)
        object.__setattr__(self, "_sampler", sampler)
        object.__setattr__(self, "description", description)

    def __setattr__(self, name, value):
        raise AttributeError("NoiseModel is immutable")

    @classmethod
    def gaussian(cls, sigma: float = 1.0, max_order: int = 12) -> "NoiseModel":
        """Zero-mean Gaussian with scale sigma: m_k = sigma^k (k-1)!! for even k."""
        sigma = float(sigma)
        moments = [1.0]
        for k in range(1, max_order + 1):
            moments.append(0.0 if k % 2 else sigma**k * _double_factorial(k - 1))
        return cls(
            moments,
            sampler=lambda rng, size: rng.normal(0.0, sigma, size=size),
            description=f"gaussian(sigma={sigma})",
        )

    @property
    def max_order(self) -> int:
        return len(self.moments) - 1

    def moment(self, k: int) -> float:
        if k > self.max_order:
            raise MomentOrderError(
                f"moment of order {k} required but model only has orders <= {self.max_order}"
            )
        return self.moments[k]

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self._sampler is None:
            raise ValueError("noise model has no sampler")
        return np.asarray(self._sampler(rng, size))

    def __repr__(self):
        return f"NoiseModel({self.description}, orders<={self.max_order})"
