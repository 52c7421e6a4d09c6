"""Finite-field tower arithmetic.

The residue field is approximated by a dynamically growing tower
GF(p) = GF(p^m0) < GF(p^m1) < ... with m_i | m_{i+1}.  Levels form a
chain, so embeddings compose canonically and equality of elements is
coordinate equality after lifting to a common level.  The prime p is
chosen with p = 1 (mod 12) by default so that the third and fourth
roots of unity already live in the prime field.
"""

from __future__ import annotations

import random

from .errors import NoRootInResidueField


def _is_prime(n):
    if n < 2:
        return False
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if a % n == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# dense polynomial arithmetic over GF(p), coefficients little-endian


def _ptrim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _padd(a, b, p):
    n = max(len(a), len(b))
    return _ptrim([((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)) % p
                   for i in range(n)])


def _psub(a, b, p):
    n = max(len(a), len(b))
    return _ptrim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p
                   for i in range(n)])


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _ptrim(out)


def _pmod(a, m, p):
    a = list(a)
    inv = pow(m[-1], p - 2, p)
    while len(a) >= len(m):
        c = a[-1] * inv % p
        if c:
            off = len(a) - len(m)
            for i, mi in enumerate(m):
                a[off + i] = (a[off + i] - c * mi) % p
        a.pop()
    return _ptrim(a)


class ResidueField:
    """One level GF(p^deg) of the tower: modulus plus chain embedding."""

    def __init__(self, tower, deg, modulus):
        self.tower = tower
        self.deg = deg
        self.modulus = modulus      # monic, little-endian over GF(p)
        self.up = None              # coords of this level's generator in the next level

    @property
    def order(self):
        return self.tower.p ** self.deg

    def __repr__(self):
        return f"GF({self.tower.p}^{self.deg})"


class ResidueElem:
    """Element of a tower level; immutable."""

    __slots__ = ("tower", "deg", "coeffs")

    def __init__(self, tower, deg, coeffs):
        self.tower = tower
        self.deg = deg
        coeffs = list(coeffs)[:deg]
        coeffs.extend([0] * (deg - len(coeffs)))
        self.coeffs = tuple(c % tower.p for c in coeffs)

    # -- helpers -----------------------------------------------------------

    def _lift_to(self, deg):
        if deg == self.deg:
            return self
        return self.tower.lift(self, deg)

    def _pair(self, other):
        if not isinstance(other, ResidueElem):
            other = self.tower.elem(other, self.deg)
        deg = max(self.deg, other.deg, key=self.tower._chain_pos)
        return self._lift_to(deg), other._lift_to(deg), deg

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        a, b, deg = self._pair(other)
        return ResidueElem(self.tower, deg, _padd(list(a.coeffs), list(b.coeffs), self.tower.p))

    __radd__ = __add__

    def __neg__(self):
        p = self.tower.p
        return ResidueElem(self.tower, self.deg, [(-c) % p for c in self.coeffs])

    def __sub__(self, other):
        a, b, deg = self._pair(other)
        return ResidueElem(self.tower, deg, _psub(list(a.coeffs), list(b.coeffs), self.tower.p))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b, deg = self._pair(other)
        m = self.tower.level(deg).modulus
        prod = _pmod(_pmul(list(a.coeffs), list(b.coeffs), self.tower.p), m, self.tower.p)
        return ResidueElem(self.tower, deg, prod)

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("residue element is zero")
        # extended Euclid in GF(p)[X] mod the level modulus
        p = self.tower.p
        m = list(self.tower.level(self.deg).modulus)
        a = _ptrim(list(self.coeffs))
        r0, r1 = m, a
        t0, t1 = [], [1]
        while r1:
            # divmod r0 by r1
            q = []
            r = list(r0)
            inv = pow(r1[-1], p - 2, p)
            q = [0] * (len(r) - len(r1) + 1) if len(r) >= len(r1) else []
            while len(r) >= len(r1) and r:
                c = r[-1] * inv % p
                off = len(r) - len(r1)
                if c:
                    q[off] = c
                    for i, mi in enumerate(r1):
                        r[off + i] = (r[off + i] - c * mi) % p
                r.pop()
                _ptrim(r)
            r0, r1 = r1, r
            t0, t1 = t1, _psub(t0, _pmul(q, t1, p), p)
        c = pow(r0[0], p - 2, p)  # r0 is the gcd, a nonzero constant
        out = _pmod([x * c % p for x in t0], self.tower.level(self.deg).modulus, p)
        return ResidueElem(self.tower, self.deg, out)

    def __truediv__(self, other):
        if not isinstance(other, ResidueElem):
            other = self.tower.elem(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.tower.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if other is None:
            return False
        if not isinstance(other, ResidueElem):
            try:
                other = self.tower.elem(other)
            except Exception:
                return NotImplemented
        a, b, _ = self._pair(other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        # hash at the element's minimal chain level for stability
        c = self.tower.compress(self)
        return hash((c.deg, c.coeffs))

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def in_prime_field(self):
        return all(c == 0 for c in self.coeffs[1:])

    def __repr__(self):
        return self.tower.format_elem(self)


class ResidueTower:
    """Chain of finite fields GF(p^m), grown on demand."""

    def __init__(self, p=13, initial_deg=1):
        if not _is_prime(p) or p <= 3:
            raise ValueError("residue characteristic must be a prime > 3")
        self.p = p
        self._levels = {1: ResidueField(self, 1, [0, 1])}
        self._chain = [1]
        self._gen_cache = {}
        if initial_deg > 1:
            self.grow(initial_deg)

    # -- chain management ----------------------------------------------------

    def _chain_pos(self, deg):
        return self._chain.index(deg)

    def level(self, deg):
        return self._levels[deg]

    @property
    def top(self):
        return self._chain[-1]

    def grow(self, deg):
        """Ensure a chain level whose degree is a multiple of deg; return it."""
        cur = self.top
        if cur % deg == 0:
            for d in self._chain:
                if d % deg == 0:
                    return d
        new = cur * deg // _gcd(cur, deg)
        modulus = self._find_irreducible(new)
        lvl = ResidueField(self, new, modulus)
        self._levels[new] = lvl
        self._chain.append(new)
        # embed the old top: the old generator maps to a root of its modulus
        old = self._levels[cur]
        old.up = self._root_of_prime_poly(old.modulus, lvl)
        return new

    def _find_irreducible(self, deg):
        if deg == 1:
            return [0, 1]
        # lexicographically first monic irreducible over GF(p): deterministic
        p = self.p
        for tail in range(p ** min(deg, 6)):
            coeffs = []
            t = tail
            for _ in range(deg):
                coeffs.append(t % p)
                t //= p
            f = coeffs + [1]
            if self._irreducible_over_prime(f):
                return f
        raise RuntimeError("no irreducible polynomial found")  # pragma: no cover

    def _irreducible_over_prime(self, f):
        p = self.p
        deg = len(f) - 1
        if f[0] == 0:
            return False
        x = [0, 1]
        xq = x
        for _ in range(deg):
            xq = _pmod(self._frob_pow(xq, f), f, p)
        if _ptrim(_psub(xq, x, p)):
            return False
        for r in _prime_factors(deg):
            xq = x
            for _ in range(deg // r):
                xq = _pmod(self._frob_pow(xq, f), f, p)
            g = _pgcd(_psub(xq, x, p), f, p)
            if len(g) - 1 > 0:
                return False
        return True

    def _frob_pow(self, a, modulus):
        # a**p mod modulus over GF(p)
        p = self.p
        out = [1]
        base = list(a)
        n = p
        while n:
            if n & 1:
                out = _pmod(_pmul(out, base, p), modulus, p)
            base = _pmod(_pmul(base, base, p), modulus, p)
            n >>= 1
        return out

    def _root_of_prime_poly(self, f, lvl):
        """First root of a GF(p)-polynomial inside the level lvl (must exist)."""
        poly = [self._const_at(c, lvl.deg) for c in f]
        roots = poly_roots(poly, self, grow=False, deg=lvl.deg)
        if not roots:  # pragma: no cover
            raise RuntimeError("embedding root not found")
        return min(roots, key=lambda r: r.coeffs)

    def _const_at(self, c, deg):
        co = [0] * deg
        co[0] = c % self.p
        return ResidueElem(self, deg, co)

    # -- element constructors --------------------------------------------------

    def elem(self, value, deg=1):
        if isinstance(value, ResidueElem):
            return value
        co = [0] * deg
        co[0] = value % self.p
        return ResidueElem(self, deg, co)

    def zero(self, deg=1):
        return ResidueElem(self, deg, [0] * deg)

    def one(self, deg=1):
        return self.elem(1, deg)

    def generator(self, deg=None):
        """Multiplicative generator of the given (or top) level; deterministic."""
        deg = deg or self.top
        if deg in self._gen_cache:
            return self._gen_cache[deg]
        q = self.p ** deg
        fac = _prime_factors(q - 1)
        one = self.one(deg)
        g = None
        # lexicographic coordinate order keeps the choice deterministic
        for idx in range(1, q):
            co = []
            t = idx
            for _ in range(deg):
                co.append(t % self.p)
                t //= self.p
            cand = ResidueElem(self, deg, co)
            if all((cand ** ((q - 1) // r)) != one for r in fac):
                g = cand
                break
        self._gen_cache[deg] = g
        return g

    def lift(self, elem, deg):
        """Lift an element along the chain to the level of degree deg."""
        if elem.deg == deg:
            return elem
        if elem.in_prime_field():
            co = [0] * deg
            co[0] = elem.coeffs[0] if elem.coeffs else 0
            return ResidueElem(self, deg, co)
        pos_from = self._chain_pos(elem.deg)
        pos_to = self._chain_pos(deg)
        if pos_from > pos_to:
            # try to compress first; fail loudly if genuinely deeper
            c = self.compress(elem)
            if self._chain_pos(c.deg) > pos_to:
                raise ValueError("element does not live in the requested level")
            return self.lift(c, deg)
        cur = elem
        for i in range(pos_from, pos_to):
            d_from = self._chain[i]
            d_to = self._chain[i + 1]
            gen_img = self._levels[d_from].up  # ResidueElem at d_to
            acc = self.zero(d_to)
            power = self.one(d_to)
            for c in cur.coeffs:
                acc = acc + power * self.elem(c, d_to)._lift_to(d_to)
                power = power * gen_img
            cur = ResidueElem(self, d_to, acc.coeffs)
        return cur

    def compress(self, elem):
        """Push an element down to the earliest chain level containing it."""
        cur = elem
        pos = self._chain_pos(cur.deg)
        while pos > 0:
            lower = self._chain[pos - 1]
            down = self._try_descend(cur, lower)
            if down is None:
                break
            cur = down
            pos -= 1
        return cur

    def _try_descend(self, elem, lower_deg):
        lvl = self._levels[lower_deg]
        gen_img = lvl.up
        # solve for coords c_i with sum c_i * gen_img^i == elem (linear algebra over GF(p))
        big = self._levels[elem.deg]
        n = big.deg
        cols = []
        power = self.one(elem.deg)
        for _ in range(lower_deg):
            cols.append(list(power.coeffs))
            power = power * gen_img
        # build matrix of lower_deg * p-coeff columns (each col expanded over GF(p) basis)
        # unknowns: lower_deg coefficients in GF(p)... but coefficients of the lower level
        # are GF(p) scalars, so the map is GF(p)-linear with lower_deg unknowns.
        mat = [[cols[j][i] for j in range(lower_deg)] for i in range(n)]
        target = list(elem.coeffs)
        sol = _solve_mod_p(mat, target, self.p)
        if sol is None:
            return None
        return ResidueElem(self, lower_deg, sol)

    # -- printing ---------------------------------------------------------------

    def format_elem(self, e):
        e = self.compress(e)
        if e.deg == 1:
            return str(e.coeffs[0])
        g = self.generator(e.deg)
        # constants print as integers even at higher levels
        if e.in_prime_field():
            return str(e.coeffs[0])
        if e.is_zero():
            return "0"
        order = self.p ** e.deg - 1
        x = self.one(e.deg)
        for j in range(order):
            if x == e:
                return f"g{e.deg}^{j}"
            x = x * g
        return "?"  # pragma: no cover

    def parse_atom(self, text):
        """Parse an integer or gD^j generator power."""
        text = text.strip()
        if text.startswith("g") and "^" in text:
            base, j = text.split("^")
            deg = self.grow(int(base[1:]))
            return self.generator(deg) ** int(j)
        return self.elem(int(text))

    # -- roots ----------------------------------------------------------------

    def nth_roots(self, elem, n, grow=True):
        """All n-th roots of elem in the tower, growing if needed."""
        if elem.is_zero():
            return [self.zero(elem.deg)]
        deg = self.top
        lifted = elem._lift_to(deg)
        poly = [-lifted] + [self.zero(deg)] * (n - 1) + [self.one(deg)]
        roots = poly_roots(poly, self, grow=grow, deg=deg)
        return sorted(roots, key=lambda r: r.coeffs)

    def root_of_unity(self, n):
        """A primitive n-th root of unity, growing the tower if required."""
        d = 1
        while (self.p ** d - 1) % n != 0:
            d += 1
            if d > 24:
                raise NoRootInResidueField(f"no primitive {n}-th root of unity")
        deg = self.grow(d)
        g = self.generator(deg)
        return g ** ((self.p ** deg - 1) // n)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _prime_factors(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _pgcd(a, b, p):
    a, b = _ptrim(list(a)), _ptrim(list(b))
    while b:
        a, b = b, _pmod(a, b, p)
    if a:
        inv = pow(a[-1], p - 2, p)
        a = [c * inv % p for c in a]
    return a


def _solve_mod_p(mat, target, p):
    """Solve mat * x = target over GF(p); None if inconsistent."""
    n = len(mat)
    m = len(mat[0]) if mat else 0
    aug = [row[:] + [t] for row, t in zip(mat, target)]
    piv_cols = []
    r = 0
    for c in range(m):
        piv = next((i for i in range(r, n) if aug[i][c] % p), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = pow(aug[r][c], p - 2, p)
        aug[r] = [v * inv % p for v in aug[r]]
        for i in range(n):
            if i != r and aug[i][c] % p:
                f = aug[i][c]
                aug[i] = [(vi - f * vr) % p for vi, vr in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
        if r == n:
            break
    for i in range(r, n):
        if aug[i][m] % p:
            return None
    x = [0] * m
    for i, c in enumerate(piv_cols):
        x[c] = aug[i][m] % p
    return x


# ---------------------------------------------------------------------------
# polynomials with ResidueElem coefficients (little-endian lists)


def rp_trim(f):
    while f and f[-1].is_zero():
        f.pop()
    return f


def rp_degree(f):
    return len(f) - 1


def rp_eval(f, x):
    tower = x.tower
    acc = tower.zero(x.deg)
    for c in reversed(f):
        acc = acc * x + c
    return acc


def rp_mul(f, g):
    if not f or not g:
        return []
    tower = f[0].tower
    out = [tower.zero() for _ in range(len(f) + len(g) - 1)]
    for i, a in enumerate(f):
        if not a.is_zero():
            for j, b in enumerate(g):
                out[i + j] = out[i + j] + a * b
    return rp_trim(out)


def rp_add(f, g):
    tower = (f or g)[0].tower
    n = max(len(f), len(g))
    z = tower.zero()
    return rp_trim([(f[i] if i < len(f) else z) + (g[i] if i < len(g) else z)
                    for i in range(n)])


def rp_sub(f, g):
    tower = (f or g)[0].tower
    n = max(len(f), len(g))
    z = tower.zero()
    return rp_trim([(f[i] if i < len(f) else z) - (g[i] if i < len(g) else z)
                    for i in range(n)])


def rp_divmod(f, g):
    f = list(f)
    tower = g[-1].tower
    inv = g[-1].inverse()
    q = [tower.zero() for _ in range(max(len(f) - len(g) + 1, 0))]
    while len(f) >= len(g) and rp_trim(f):
        c = f[-1] * inv
        off = len(f) - len(g)
        q[off] = c
        for i, gi in enumerate(g):
            f[off + i] = f[off + i] - c * gi
        f.pop()
        while f and f[-1].is_zero():
            f.pop()
    return rp_trim(q), rp_trim(f)


def rp_gcd(f, g):
    f, g = rp_trim(list(f)), rp_trim(list(g))
    while g:
        _, r = rp_divmod(f, g)
        f, g = g, r
    if f:
        inv = f[-1].inverse()
        f = [c * inv for c in f]
    return f


def rp_deriv(f):
    if not f:
        return []
    tower = f[0].tower
    return rp_trim([f[i] * tower.elem(i, f[i].deg) for i in range(1, len(f))])


def rp_powmod(f, n, modulus):
    tower = modulus[-1].tower
    deg = modulus[-1].deg
    out = [tower.one(deg)]
    base = rp_divmod(f, modulus)[1]
    while n:
        if n & 1:
            out = rp_divmod(rp_mul(out, base), modulus)[1]
        base = rp_divmod(rp_mul(base, base), modulus)[1]
        n >>= 1
    return out


def _rp_monic(f):
    if not f:
        return f
    inv = f[-1].inverse()
    return [c * inv for c in f]


def poly_factor(f, tower, deg=None):
    """Factor a polynomial over the level GF(p^deg): list of (factor, mult)."""
    deg = deg or tower.top
    f = _rp_monic(rp_trim([c._lift_to(deg) for c in f]))
    if rp_degree(f) == 0:
        return []
    out = {}
    # squarefree decomposition (char p: handle f' == 0 via p-th roots)
    def sqfree(g, mult):
        g = _rp_monic(g)
        if rp_degree(g) == 0:
            return
        d = rp_deriv(g)
        if not d:
            # g = h(x^p); take p-th root of coefficients
            q = tower.p ** deg
            h = [g[i] ** (q // tower.p) for i in range(0, len(g), tower.p)]
            sqfree(h, mult * tower.p)
            return
        c = rp_gcd(g, d)
        w = rp_divmod(g, c)[0]
        i = 1
        while rp_degree(w) > 0:
            y = rp_gcd(w, c)
            fac = rp_divmod(w, y)[0]
            if rp_degree(fac) > 0:
                for irr in _ddf_edf(fac, tower, deg):
                    out[tuple(co.coeffs for co in irr)] = out.get(
                        tuple(co.coeffs for co in irr), [irr, 0])
                    out[tuple(co.coeffs for co in irr)][1] += mult * i
            w = y
            c = rp_divmod(c, y)[0]
            i += 1
        if rp_degree(c) > 0:
            sqfree(c, mult)
    sqfree(f, 1)
    return [(irr, m) for irr, m in out.values()]


def _ddf_edf(f, tower, deg):
    """Irreducible factors of a squarefree monic polynomial over GF(p^deg)."""
    q = tower.p ** deg
    factors = []
    x = [tower.zero(deg), tower.one(deg)]
    h = x
    v = list(f)
    d = 0
    while rp_degree(v) >= 2 * (d + 1):
        d += 1
        h = rp_powmod(h, q, v)
        g = rp_gcd(rp_sub(h, x), v)
        if rp_degree(g) > 0:
            factors.extend(_edf(g, d, tower, deg))
            v = rp_divmod(v, g)[0]
            h = rp_divmod(h, v)[1] if rp_degree(v) > 0 else h
    if rp_degree(v) > 0:
        factors.append(_rp_monic(v))
    return factors


def _edf(f, d, tower, deg):
    """Split a product of degree-d irreducibles (Cantor-Zassenhaus)."""
    n = rp_degree(f)
    if n == d:
        return [_rp_monic(f)]
    q = tower.p ** deg
    rng = random.Random(("edf", q, n, d, tuple(tuple(c.coeffs) for c in f)).__repr__())
    while True:
        a = [ResidueElem(tower, deg, [rng.randrange(tower.p) for _ in range(deg)])
             for _ in range(n)]
        a = rp_trim(a)
        if rp_degree(a) < 1:
            continue
        g = rp_gcd(a, f)
        if 0 < rp_degree(g) < n:
            return _edf(g, d, tower, deg) + _edf(rp_divmod(f, g)[0], d, tower, deg)
        b = rp_powmod(a, (q ** d - 1) // 2, f)
        g = rp_gcd(rp_sub(b, [tower.one(deg)]), f)
        if 0 < rp_degree(g) < n:
            return _edf(g, d, tower, deg) + _edf(rp_divmod(f, g)[0], d, tower, deg)


def poly_roots(f, tower, grow=True, deg=None):
    """Roots of f in the tower top (or given level); grows the tower when asked."""
    deg = deg or tower.top
    f = rp_trim([c._lift_to(deg) for c in f])
    if rp_degree(f) < 1:
        return []
    while True:
        roots = []
        needs = 1
        for irr, _ in poly_factor(f, tower, deg):
            if rp_degree(irr) == 1:
                roots.append(-irr[0])
            else:
                needs = max(needs, rp_degree(irr))
        if roots or not grow or needs == 1:
            return roots
        deg = tower.grow(deg * needs)
        f = [c._lift_to(deg) for c in f]


def poly_roots_with_mult(f, tower, deg=None):
    """(root, multiplicity) pairs over the current level, splitting fully."""
    deg = deg or tower.top
    while True:
        f_lift = [c._lift_to(deg) for c in f]
        facs = poly_factor(f_lift, tower, deg)
        if all(rp_degree(irr) == 1 for irr, _ in facs):
            return [(-irr[0], m) for irr, m in facs]
        worst = max(rp_degree(irr) for irr, _ in facs)
        deg = tower.grow(deg * worst)
