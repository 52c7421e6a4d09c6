"""Polynomials over the Puiseux series field: Newton polygons and roots."""

from __future__ import annotations

from fractions import Fraction

from .errors import InsufficientPrecision, WildSlope
from .series import INF, PadicElem, extend_ramification


class ValuedPoly:
    """Dense polynomial with PadicElem coefficients, index = degree."""

    def __init__(self, tower, coeffs):
        self.tower = tower
        coeffs = list(coeffs)
        while coeffs and coeffs[-1].is_zero():
            coeffs.pop()
        self.coeffs = coeffs

    @classmethod
    def from_consts(cls, tower, ints):
        return cls(tower, [PadicElem.const(tower, c) for c in ints])

    @classmethod
    def x_power(cls, tower, k, coeff=1):
        z = PadicElem.zero(tower)
        c = coeff if isinstance(coeff, PadicElem) else PadicElem.const(tower, coeff)
        return cls(tower, [z] * k + [c])

    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def coeff(self, i):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return PadicElem.zero(self.tower)

    def __call__(self, x):
        acc = PadicElem.zero(self.tower)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return ValuedPoly(self.tower, [self.coeff(i) + other.coeff(i) for i in range(n)])

    def __sub__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return ValuedPoly(self.tower, [self.coeff(i) - other.coeff(i) for i in range(n)])

    def __mul__(self, other):
        if isinstance(other, PadicElem):
            return ValuedPoly(self.tower, [c * other for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return ValuedPoly(self.tower, [])
        out = [PadicElem.zero(self.tower)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return ValuedPoly(self.tower, out)

    def scale(self, k):
        return self * PadicElem.const(self.tower, k)

    def derivative(self):
        return ValuedPoly(self.tower,
                          [self.coeffs[i] * i for i in range(1, len(self.coeffs))])

    def compose_linear(self, a, b):
        """f(a*x + b) by Horner in the polynomial ring."""
        z = ValuedPoly(self.tower, [])
        lin = ValuedPoly(self.tower, [b, a])
        acc = z
        for c in reversed(self.coeffs):
            acc = acc * lin + ValuedPoly(self.tower, [c])
        return acc

    def compose(self, g):
        """f(g(x))."""
        acc = ValuedPoly(self.tower, [])
        for c in reversed(self.coeffs):
            acc = acc * g + ValuedPoly(self.tower, [c])
        return acc

    def reversed_poly(self):
        """x^deg * f(1/x) - the infinity chart."""
        return ValuedPoly(self.tower, list(reversed(self.coeffs)))

    def shift_grid(self, factor):
        return ValuedPoly(self.tower,
                          [extend_ramification(c, factor) for c in self.coeffs])

    def common_e(self):
        e = 1
        for c in self.coeffs:
            e = e * c.e // _gcd(e, c.e)
        return e

    def order_at_zero(self):
        for i, c in enumerate(self.coeffs):
            if not c.is_zero():
                return i
        return None

    def __repr__(self):
        from .series import format_series
        terms = [f"({format_series(c)})*x^{i}" for i, c in enumerate(self.coeffs)
                 if not c.is_zero()]
        return " + ".join(terms) if terms else "0"


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


class NewtonPolygon:
    """Lower hull segments as (slope, horizontal length), slopes increasing."""

    def __init__(self, segments):
        self.segments = list(segments)

    def __iter__(self):
        return iter(self.segments)

    def __repr__(self):
        return f"NewtonPolygon({self.segments})"

    def slopes(self):
        return [s for s, _ in self.segments]


def newton_polygon(f):
    """Lower convex hull of (i, val(a_i)); lengths are horizontal runs."""
    pts = [(i, c.val()) for i, c in enumerate(f.coeffs) if not c.is_zero()]
    if not pts:
        raise ValueError("newton polygon of the zero polynomial")
    hull = [pts[0]]
    for pt in pts[1:]:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above segment hull[-2]..pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    segments = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = Fraction(y2 - y1, x2 - x1)
        if segments and segments[-1][0] == slope:
            segments[-1] = (slope, segments[-1][1] + (x2 - x1))
        else:
            segments.append((slope, x2 - x1))
    return NewtonPolygon(segments)


def pi_content(f):
    """Minimum coefficient valuation: the vertical valuation at the standard
    component."""
    if f.is_zero():
        raise ValueError("content of the zero polynomial")
    return min(c.val() for c in f.coeffs if not c.is_zero())


def roots_padic(f, target_precision, max_depth=None):
    """All roots of f in a tame extension k'((pi^(1/e'))) with multiplicity.

    target_precision is an absolute pi-adic precision (Fraction or int);
    each returned root r satisfies val(f(r)) > target_precision - slack,
    where slack depends only on val(f') near the root.
    """
    target = Fraction(target_precision)
    if f.is_zero():
        raise ValueError("root finding on the zero polynomial")
    tower = f.tower
    if max_depth is None:
        max_depth = 4 * (f.degree() + 2) + int(2 * target) + 16
    out = []
    _collect_roots(f, target, out, positive_only=False, depth=max_depth)
    total = sum(m for _, m in out)
    if total != f.degree():
        raise InsufficientPrecision(
            f"recovered multiplicity {total} of {f.degree()}")
    return out


def _collect_roots(f, target, out, positive_only, depth):
    tower = f.tower
    if depth < 0:
        raise InsufficientPrecision("root recursion exceeded depth budget")
    k = f.order_at_zero()
    if k is None:
        return
    if k > 0:
        out.append((PadicElem.zero(tower), k))
        f = ValuedPoly(tower, f.coeffs[k:])
    if f.degree() < 1:
        return
    np = newton_polygon(f)
    for slope, _length in np:
        mu = -slope
        if positive_only and mu <= 0:
            continue
        denom = (mu * f.common_e()).denominator
        if denom % tower.p == 0:
            raise WildSlope(f"slope {mu} has wild denominator")
        g, e_new = _substitute_pi_mu(f, mu)
        residual = [c.reduce() for c in g.coeffs]
        res_roots = _residual_roots(residual, tower)
        for c, m in res_roots:
            if c.is_zero():
                continue
            if m == 1:
                root = _hensel(g, c, target)
                out.append((root.shift(mu), 1))
            else:
                shifted = g.compose_linear(
                    PadicElem.const(tower, 1, g.common_e()),
                    PadicElem.const(tower, c, g.common_e()))
                sub = []
                _collect_roots(shifted, target, sub, positive_only=True,
                               depth=depth - 1)
                got = 0
                for r, mm in sub:
                    out.append(((r + PadicElem.const(tower, c)).shift(mu), mm))
                    got += mm
                if got != m:
                    raise InsufficientPrecision(
                        "multiple root cluster not resolved")


def _substitute_pi_mu(f, mu):
    """g(u) = f(pi^mu * u) / pi^(min val); returns (g, grid)."""
    tower = f.tower
    e = f.common_e()
    denom = mu.denominator
    e_new = e * denom // _gcd(e, denom)
    coeffs = []
    for i, c in enumerate(f.coeffs):
        cc = extend_ramification(c, e_new // c.e) if c.e != e_new else c
        coeffs.append(cc.shift(mu * i))
    m = min(c.val() for c in coeffs if not c.is_zero())
    coeffs = [c.shift(-m) for c in coeffs]
    return ValuedPoly(tower, coeffs), e_new


def _residual_roots(residual, tower):
    from .residue import poly_roots_with_mult, rp_trim
    poly = rp_trim(list(residual))
    if len(poly) <= 1:
        return []
    return poly_roots_with_mult(poly, tower)


def _hensel(g, c, target):
    """Lift the simple residual root c of g to absolute precision target."""
    tower = g.tower
    e = g.common_e()
    u = PadicElem.const(tower, c, e)
    target_grid = target
    for _ in range(64):
        fu = g(u)
        if fu.is_zero():
            if fu.prec is INF:
                return u
            if fu.prec_frac() > target_grid:
                return u.truncate(target_grid) if u.prec is not INF else u
            raise InsufficientPrecision(
                f"coefficient precision {fu.prec_frac()} cannot support "
                f"root target {target_grid}")
        elif fu.val() > target_grid:
            return u
        du = g.derivative()(u)
        if du.is_zero():
            raise InsufficientPrecision("derivative vanished during lifting")
        u = u - fu / du
        u = u.truncate(2 * target_grid + 8)
    raise InsufficientPrecision("lifting did not converge")


def poly_gcd_nontrivial(f, g, probe_prec=24):
    """True if f and g share a root (checked via exact root resubstitution)."""
    if f.is_zero() or g.is_zero():
        return True
    small, large = (f, g) if f.degree() <= g.degree() else (g, f)
    if small.degree() == 0:
        return False
    for root, _ in roots_padic(small, probe_prec):
        v = large(root).val()
        if v is INF or v > Fraction(probe_prec, 2):
            return True
    return False
