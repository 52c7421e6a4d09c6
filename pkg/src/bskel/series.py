"""Truncated Puiseux series over a residue-field tower.

An element is a finite digit list on the exponent grid (1/e)Z: digit i is
the coefficient of pi^((v0+i)/e).  Valuations are exact; precision is an
absolute exponent bound (grid units) below which digits are trusted.
Exact elements (literals, polynomial combinations of literals) carry
infinite precision.  Zero is a sentinel, never an all-zero digit list.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

from .errors import InputError, InsufficientPrecision, NegativeValuation, WildExtension
from .residue import ResidueElem, ResidueTower

INF = math.inf

DEFAULT_PREC = 64


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


class PadicElem:
    """Immutable truncated Puiseux series."""

    __slots__ = ("tower", "e", "v0", "digits", "prec")

    def __init__(self, tower, e, v0, digits, prec=INF):
        self.tower = tower
        self.e = e
        digits = list(digits)
        # strip leading zeros, keep the invariant digit[0] != 0
        while digits and digits[0].is_zero():
            digits.pop(0)
            v0 += 1
        while digits and digits[-1].is_zero():
            digits.pop()
        if prec is not INF:
            digits = [d for i, d in enumerate(digits) if v0 + i < prec]
            while digits and digits[-1].is_zero():
                digits.pop()
        if not digits:
            self.v0 = None
            self.digits = ()
        else:
            self.v0 = v0
            self.digits = tuple(digits)
        self.prec = prec

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, tower, e=1, prec=INF):
        return cls(tower, e, 0, [], prec)

    @classmethod
    def const(cls, tower, value, e=1, prec=INF):
        v = tower.elem(value) if not isinstance(value, ResidueElem) else value
        return cls(tower, e, 0, [v], prec)

    @classmethod
    def pi_power(cls, tower, exponent, e=1, prec=INF):
        """pi^exponent for a Fraction or int exponent; refines e as needed."""
        exponent = Fraction(exponent)
        ee = e * exponent.denominator // _gcd(e, exponent.denominator)
        v0 = int(exponent * ee)
        return cls(tower, ee, v0, [tower.one()], prec)

    # -- structure -------------------------------------------------------------

    def is_zero(self):
        return self.v0 is None

    def val(self):
        """Valuation as a Fraction; INF marker for the zero sentinel."""
        if self.is_zero():
            return INF
        return Fraction(self.v0, self.e)

    def digit_at(self, exponent):
        """Coefficient of pi^exponent (Fraction); zero if off-support."""
        exponent = Fraction(exponent)
        if self.is_zero():
            return self.tower.zero()
        idx = exponent * self.e - self.v0
        if idx.denominator != 1:
            return self.tower.zero()
        idx = int(idx)
        if exponent * self.e >= self.prec:
            raise InsufficientPrecision(f"digit at {exponent} beyond precision")
        if 0 <= idx < len(self.digits):
            return self.digits[idx]
        return self.tower.zero()

    def prec_frac(self):
        return INF if self.prec is INF else Fraction(self.prec, self.e)

    def on_grid(self, e):
        """The same element on a refined grid (e must be a multiple of self.e)."""
        if e == self.e:
            return self
        if e % self.e:
            raise ValueError("grid refinement must be a multiple")
        k = e // self.e
        if self.is_zero():
            return PadicElem(self.tower, e, 0, [], INF if self.prec is INF else self.prec * k)
        digits = []
        for d in self.digits:
            digits.append(d)
            digits.extend([self.tower.zero()] * (k - 1))
        prec = INF if self.prec is INF else self.prec * k
        return PadicElem(self.tower, e, self.v0 * k, digits, prec)

    def _pair(self, other):
        if not isinstance(other, PadicElem):
            other = PadicElem.const(self.tower, other)
        e = self.e * other.e // _gcd(self.e, other.e)
        return self.on_grid(e), other.on_grid(e)

    # -- arithmetic --------------------------------------------------------------

    def __add__(self, other):
        a, b = self._pair(other)
        prec = min(a.prec, b.prec)
        if a.is_zero():
            return PadicElem(a.tower, a.e, b.v0 or 0, b.digits, prec)
        if b.is_zero():
            return PadicElem(a.tower, a.e, a.v0, a.digits, prec)
        lo = min(a.v0, b.v0)
        hi = max(a.v0 + len(a.digits), b.v0 + len(b.digits))
        if prec is not INF:
            hi = min(hi, prec)
        z = a.tower.zero()
        out = []
        for i in range(lo, hi):
            da = a.digits[i - a.v0] if 0 <= i - a.v0 < len(a.digits) else z
            db = b.digits[i - b.v0] if 0 <= i - b.v0 < len(b.digits) else z
            out.append(da + db)
        return PadicElem(a.tower, a.e, lo, out, prec)

    __radd__ = __add__

    def __neg__(self):
        return PadicElem(self.tower, self.e, self.v0 or 0,
                         [-d for d in self.digits], self.prec)

    def __sub__(self, other):
        if not isinstance(other, PadicElem):
            other = PadicElem.const(self.tower, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._pair(other)
        if a.is_zero() or b.is_zero():
            prec = min(a.prec, b.prec)
            if a.is_zero() and a.prec is not INF and not b.is_zero():
                prec = min(prec, a.prec + b.v0)
            if b.is_zero() and b.prec is not INF and not a.is_zero():
                prec = min(prec, b.prec + a.v0)
            return PadicElem.zero(a.tower, a.e, prec)
        # relative precisions cap the product's relative precision
        rel = INF
        if a.prec is not INF:
            rel = min(rel, a.prec - a.v0)
        if b.prec is not INF:
            rel = min(rel, b.prec - b.v0)
        v0 = a.v0 + b.v0
        n = len(a.digits) + len(b.digits) - 1
        if rel is not INF:
            n = min(n, rel)
        z = a.tower.zero()
        out = [z] * n
        for i, da in enumerate(a.digits):
            if da.is_zero() or i >= n:
                continue
            for j, db in enumerate(b.digits):
                if i + j >= n:
                    break
                out[i + j] = out[i + j] + da * db
        prec = INF if rel is INF else v0 + rel
        return PadicElem(a.tower, a.e, v0, out, prec)

    __rmul__ = __mul__

    def inverse(self, target_rel=None):
        if self.is_zero():
            raise ZeroDivisionError("inverting the zero series")
        rel = self.prec - self.v0 if self.prec is not INF else (target_rel or DEFAULT_PREC)
        rel = int(rel)
        lead = self.digits[0].inverse()
        # y <- y(2 - xy), quadratic convergence in the pi-adic metric
        y = PadicElem(self.tower, self.e, -self.v0, [lead], INF)
        known = 1
        two = PadicElem.const(self.tower, 2)
        while known < rel:
            known = min(2 * known, rel)
            y = (y * (two - self * y))._truncate_rel(known, -self.v0)
        prec = (self.prec - 2 * self.v0) if self.prec is not INF else -self.v0 + rel
        return PadicElem(self.tower, y.e, y.v0, y.digits, prec)

    def _truncate_rel(self, rel, v0):
        cap = v0 + rel
        digits = [d for i, d in enumerate(self.digits) if (self.v0 + i) < cap]
        return PadicElem(self.tower, self.e, self.v0 if digits else 0, digits, INF)

    def __truediv__(self, other):
        if not isinstance(other, PadicElem):
            other = PadicElem.const(self.tower, other)
        a, b = self._pair(other)
        rel = None
        if a.prec is not INF and not a.is_zero():
            rel = a.prec - a.v0
        return a * b.inverse(target_rel=rel)

    def __rtruediv__(self, other):
        return PadicElem.const(self.tower, other) / self

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = PadicElem.const(self.tower, 1, self.e)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, PadicElem):
            if other == 0:
                return self.is_zero()
            other = PadicElem.const(self.tower, other)
        a, b = self._pair(other)
        if a.is_zero() or b.is_zero():
            return a.is_zero() and b.is_zero()
        if a.v0 != b.v0:
            return False
        cap = min(a.prec, b.prec)
        z = a.tower.zero()
        hi = max(a.v0 + len(a.digits), b.v0 + len(b.digits))
        if cap is not INF:
            hi = min(hi, cap)
        for i in range(a.v0, hi):
            da = a.digits[i - a.v0] if 0 <= i - a.v0 < len(a.digits) else z
            db = b.digits[i - b.v0] if 0 <= i - b.v0 < len(b.digits) else z
            if da != db:
                return False
        return True

    def __hash__(self):  # pragma: no cover - not used as dict keys
        return id(self)

    # -- named operations ---------------------------------------------------------

    def reduce(self):
        """Digit at exponent 0; NegativeValuation below the valuation ring."""
        if self.is_zero():
            if self.prec is not INF and self.prec <= 0:
                raise InsufficientPrecision("reduction of an O(pi^<=0) zero")
            return self.tower.zero()
        if self.v0 < 0:
            raise NegativeValuation("element has negative valuation")
        if self.v0 > 0:
            return self.tower.zero()
        return self.digits[0]

    def shift(self, exponent):
        """Multiply by pi^exponent (Fraction allowed)."""
        return self * PadicElem.pi_power(self.tower, exponent, self.e)

    def truncate(self, prec_frac):
        """Forget digits at exponents >= prec_frac (pi-units)."""
        grid = Fraction(prec_frac) * self.e
        e = self.e
        if grid.denominator != 1:
            e = self.e * grid.denominator
            return self.on_grid(e).truncate(prec_frac)
        cap = int(grid)
        cap = cap if self.prec is INF else min(cap, self.prec)
        if self.is_zero():
            return PadicElem.zero(self.tower, self.e, cap)
        digits = [d for i, d in enumerate(self.digits) if self.v0 + i < cap]
        return PadicElem(self.tower, self.e, self.v0, digits, cap)

    def truncation_below(self, height):
        """The partial sum of digits at exponents < height (exact element)."""
        if self.is_zero():
            return PadicElem.zero(self.tower, self.e)
        cap = Fraction(height) * self.e
        digits = [d for i, d in enumerate(self.digits) if self.v0 + i < cap]
        return PadicElem(self.tower, self.e, self.v0, digits, INF)


def val(x):
    """Valuation of a PadicElem (Fraction, or the INF marker for zero)."""
    return x.val()


def reduce_elem(x):
    return x.reduce()


def extend_ramification(x, factor, p=None):
    """Refine the exponent grid by the given factor; valuations unchanged."""
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be positive")
    tower = getattr(x, "tower", None)
    char = p or (tower.p if tower else None)
    if char and factor % char == 0:
        raise WildExtension(f"extension degree {factor} divisible by p={char}")
    if factor == 1:
        return x
    return x.on_grid(x.e * factor)


def nth_root(x, n, rel_prec=DEFAULT_PREC):
    """A tame n-th root of a nonzero series, refining the grid if needed."""
    if x.is_zero():
        return x
    if n == 1:
        return x
    if x.tower.p % n == 0 or n % x.tower.p == 0:
        raise WildExtension("wild root degree")
    v = x.val()
    target = v / n
    y = x
    if (target * x.e).denominator != 1:
        y = extend_ramification(x, (target * x.e).denominator)
    shift_exp = -v
    unit = y.shift(shift_exp)
    lead_roots = y.tower.nth_roots(unit.digits[0], n)
    lead = lead_roots[0]
    rel = unit.prec - unit.v0 if unit.prec is not INF else rel_prec
    rel = int(rel)
    root = PadicElem.const(y.tower, lead, unit.e)
    ninv = PadicElem.const(y.tower, y.tower.elem(n).inverse(), unit.e)
    known = 1
    while known < rel:
        known = min(2 * known, rel)
        root = (root - (root ** n - unit) * ninv * (root ** (n - 1)).inverse(target_rel=known))
        root = root._truncate_rel(known, 0)
    prec = unit.prec if unit.prec is not INF else rel
    root = PadicElem(y.tower, root.e, root.v0, root.digits,
                     prec if prec is not INF else INF)
    return root.shift(target)


# ---------------------------------------------------------------------------
# literal text format: "a0 + a1*pi^(k1/e) + ...  (prec N)"


_TERM = re.compile(
    r"^\s*(?P<coef>-?\d+|g\d+\^\d+)\s*(?:\*\s*pi(?:\^\(?(?P<num>-?\d+)(?:/(?P<den>\d+))?\)?)?)?\s*$")


def format_series(x):
    if x.is_zero():
        body = "0"
    else:
        terms = []
        for i, d in enumerate(x.digits):
            if d.is_zero():
                continue
            k = x.v0 + i
            coef = x.tower.format_elem(d)
            if k == 0:
                terms.append(coef)
            else:
                g = _gcd(abs(k), x.e)
                num, den = k // g, x.e // g
                if den == 1:
                    terms.append(f"{coef}*pi^({num})")
                else:
                    terms.append(f"{coef}*pi^({num}/{den})")
        body = " + ".join(terms) if terms else "0"
    if x.prec is INF:
        return body
    g = _gcd(abs(x.prec) or x.e, x.e) if x.prec else x.e
    return f"{body} (prec {Fraction(x.prec, x.e)})"


def parse_series(text, tower, e=1, default_prec=None):
    """Parse the literal format back into a PadicElem (round-trip exact)."""
    text = text.strip()
    prec = INF
    m = re.search(r"\(prec ([-\d/]+)\)\s*$", text)
    if m:
        prec = Fraction(m.group(1))
        text = text[: m.start()].strip()
    if text in ("0", ""):
        ee = e
        if prec is not INF:
            ee = e * prec.denominator // _gcd(e, prec.denominator)
        p = INF if prec is INF else int(prec * ee)
        return PadicElem.zero(tower, ee, p)
    terms = []
    for part in text.split(" + "):
        m = _TERM.match(part)
        if not m:
            raise InputError(f"bad series term: {part!r}")
        coef = tower.parse_atom(m.group("coef"))
        num = int(m.group("num")) if m.group("num") is not None else (
            1 if "pi" in part else 0)
        den = int(m.group("den")) if m.group("den") else 1
        terms.append((Fraction(num, den), coef))
    ee = e
    for expo, _ in terms:
        ee = ee * expo.denominator // _gcd(ee, expo.denominator)
    if prec is not INF:
        ee = ee * prec.denominator // _gcd(ee, prec.denominator)
    out = PadicElem.zero(tower, ee, INF)
    for expo, coef in terms:
        out = out + PadicElem(tower, ee, int(expo * ee), [coef], INF)
    if prec is not INF:
        out = PadicElem(tower, out.e, out.v0 if not out.is_zero() else 0,
                        out.digits, int(prec * ee))
    if default_prec is not None and out.prec is INF:
        out = out.truncate(default_prec)
    return out


class InfinitePoint:
    """The point at infinity on the projective line."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"


INFTY = InfinitePoint()


def is_infinity(x):
    return isinstance(x, InfinitePoint)
