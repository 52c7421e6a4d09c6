"""Degree-3 covers of the line via their S3 Galois closure.

The pipeline: build the separating tree of the support of (p, q), push the
discriminant onto it, read off vertical and edge inertia from the
three-case normalization table, build the quadratic intermediate graph
with explicit component models, push the cubic radicand onto it, assemble
the closure, lift the quadratic sheet swap, quotient, prune.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import (ActionLiftFailed, DisallowedInput, InconsistentCover,
                     InconsistentData, InternalInconsistency, Singular,
                     UnsupportedComponent)
from .graph import (GraphDivisor, MetricGraph, betti, prune_leaves, quotient,
                    solve_laplacian_q, total_genus, unit_scale)
from .kummer import (CoveringData, TwistCocycle, VertexCover, assemble_cover,
                     coord_key, edge_inertia, genus_generic_fiber,
                     global_ramification_lcm)
from .residue import poly_factor, poly_roots_with_mult, rp_eval, rp_trim
from .series import INF, INFTY, PadicElem, is_infinity, nth_root
from .septree import FINITE, INFINITE, attach_point_leaves, separate
from .vpoly import ValuedPoly, pi_content, roots_padic


def _gcd(a, b):
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


def _lcm(a, b):
    return a * b // _gcd(a, b) if a and b else max(a, b)


# ---------------------------------------------------------------------------
# the cubic input


class CubicCover:
    """z^3 + p z + q = 0 over K(x), with the derived discriminant."""

    def __init__(self, p, q, target_prec=48):
        self.tower = p.tower
        self.p = p
        self.q = q
        self.disc = p * p * p * PadicElem.const(self.tower, 4) \
            + q * q * PadicElem.const(self.tower, 27)
        if self.disc.is_zero():
            raise Singular("4p^3 + 27q^2 vanishes identically")
        self.target_prec = target_prec


class InertiaCase:
    def __init__(self, tag, order):
        self.tag = tag      # "I" | "II" | "III"
        self.order = order  # 1, 2 or 3

    def __repr__(self):
        return f"InertiaCase({self.tag}, order={self.order})"


def inertia_case(vp, vq, vdisc):
    """Inertia order of the S3 normalization over a valuation with the
    given values of p, q and the discriminant."""
    vp, vq, vdisc = Fraction(vp), Fraction(vq), Fraction(vdisc)
    if 3 * vp > 2 * vq:
        return InertiaCase("I", 3 if _not_divisible(vq, 3) else 1)
    if 3 * vp < 2 * vq:
        return InertiaCase("II", 2 if _not_divisible(vp, 2) else 1)
    return InertiaCase("III", 2 if _not_divisible(vdisc, 2) else 1)


def _not_divisible(value, n):
    value = Fraction(value)
    if value.denominator != 1:
        raise InternalInconsistency(
            f"valuation {value} is not integral on the model grid")
    return int(value) % n != 0


def w_point_values(vp, vq, vdisc):
    """Points of the quadratic cover above a point with the given valuation
    triple and the orders of w^3 = y - sqrt(27) q there.

    Returns (split, [v1, v2] or [v]): split=True means two points above."""
    vp, vq, vdisc = Fraction(vp), Fraction(vq), Fraction(vdisc)
    if 3 * vp > 2 * vq:
        return True, [3 * vp - vq, vq]
    if 3 * vp < 2 * vq:
        if _not_divisible(vp, 2):
            return False, [3 * vp]
        return True, [Fraction(3 * vp, 2), Fraction(3 * vp, 2)]
    if _not_divisible(vdisc, 2):
        return False, [2 * vq]
    return True, [vq, vq]


# ---------------------------------------------------------------------------
# classification


def classify(p, q, target_prec=48):
    """'reducible' | 'abelian' | 's3' for z^3 + p z + q."""
    tower = p.tower
    if q.is_zero():
        return "reducible"
    cc = CubicCover(p, q, target_prec)
    if cc.disc.degree() <= 0:
        return "abelian"
    if _has_polynomial_root(p, q, target_prec):
        return "reducible"
    return "s3"


def _has_polynomial_root(p, q, target_prec):
    """Does z^3 + p(x) z + q(x) have a root in K[x]?  Candidates divide q."""
    tower = q.tower
    qn = q * q.coeffs[-1].inverse()
    roots = roots_padic(qn, target_prec)
    max_deg = max(p.degree() // 2, q.degree() // 3) + 1
    from itertools import combinations
    idxs = []
    for i, (_r, m) in enumerate(roots):
        idxs.extend([i] * m)
    subsets = set()
    for size in range(0, min(len(idxs), max_deg) + 1):
        for comb in combinations(range(len(idxs)), size):
            subsets.add(tuple(sorted(idxs[i] for i in comb)))
    one = PadicElem.const(tower, 1)
    x0 = PadicElem.const(tower, 5) + PadicElem.pi_power(tower, 1) * PadicElem.const(tower, 3)
    for subset in sorted(subsets):
        m = ValuedPoly(tower, [one])
        for i in subset:
            m = m * ValuedPoly(tower, [-roots[i][0], one])
        # candidate z0 = c0 * m(x); at a sample x0 the scalar c0 satisfies
        # (c0 a)^3 + p(x0) (c0 a) + q(x0) = 0 with a = m(x0)
        a = m(x0)
        cubic = ValuedPoly(tower, [q(x0), p(x0) * a, PadicElem.zero(tower),
                                   a ** 3])
        try:
            sols = roots_padic(cubic, 24)
        except Exception:
            continue
        for c0, _mult in sols:
            z0 = m * c0
            test = z0 * z0 * z0 + p * z0 + q
            if test.is_zero() or all(co.is_zero() for co in test.coeffs):
                return True
    return False


# ---------------------------------------------------------------------------
# the marked tree with all three functions pushed


class PushedTree:
    """Separating tree of Supp(p, q) with the divisors of p, q, disc pushed.

    Every push record carries the point's valuation triple
    (ord_z p, ord_z q, ord_z disc)."""

    def __init__(self, cc, point_leaves=True):
        self.cc = cc
        self.tower = cc.tower
        prec = cc.target_prec
        self.p_roots = _monic_roots(cc.p, prec)
        self.q_roots = _monic_roots(cc.q, prec)
        self.d_roots = _monic_roots(cc.disc, prec)
        _reject_common_factor(cc, self.p_roots, self.q_roots)
        marked = [r for r, _m in self.p_roots] + [r for r, _m in self.q_roots]
        marked.append(INFTY)
        self.tree = separate(marked, self.tower)
        self.n_p = len(self.p_roots)
        self.n_q = len(self.q_roots)
        self.inf_index = self.n_p + self.n_q
        self.pushes = []       # (tag, vid, coord, triple(vp,vq,vd), key)
        self._push_all()
        if point_leaves:
            self._leaf_collided()
            self.pushes = []
            self._push_all()

    def _push_all(self):
        t = self.tree
        for i, (r, m) in enumerate(self.p_roots):
            vid, coord = t.place_point(r, refine=True)
            t.reduction[i] = (vid, coord)
            self._push(("p", i), vid, coord, (m, 0, 0))
        for i, (r, m) in enumerate(self.q_roots):
            vid, coord = t.place_point(r, refine=True)
            t.reduction[self.n_p + i] = (vid, coord)
            self._push(("q", i), vid, coord, (0, m, 0))
        for i, (r, m) in enumerate(self.d_roots):
            vid, coord = t.place_point(r, refine=True)
            self._push(("d", i), vid, coord, (0, 0, m))
        vid, coord = t.place_point(INFTY, refine=False)
        t.reduction[self.inf_index] = (vid, coord)
        self._push(("inf",), vid, coord,
                   (-self.cc.p.degree(), -self.cc.q.degree(),
                    -self.cc.disc.degree()))

    def _push(self, tag, vid, coord, triple):
        self.pushes.append((tag, vid, coord, triple, coord_key(coord)))

    def _leaf_collided(self):
        slots = {}
        for tag, vid, coord, _t, key in self.pushes:
            slots.setdefault((vid, key), []).append(tag)
        leaf_idx = set()
        for (vid, key), tags in slots.items():
            if len(tags) < 2:
                continue
            for tag in tags:
                if tag[0] == "p":
                    leaf_idx.add(tag[1])
                elif tag[0] == "q":
                    leaf_idx.add(self.n_p + tag[1])
        if leaf_idx:
            attach_point_leaves(self.tree, Fraction(1), only_indices=leaf_idx)

    # -- potentials -----------------------------------------------------------

    def potentials(self):
        """Anchored potentials of p, q, disc on the tree."""
        out = {}
        for name, poly, sel in (("p", self.cc.p, 0), ("q", self.cc.q, 1),
                                ("d", self.cc.disc, 2)):
            div = {}
            for _tag, vid, _coord, triple, _key in self.pushes:
                if triple[sel]:
                    div[vid] = div.get(vid, 0) + triple[sel]
            div = GraphDivisor({v: c for v, c in div.items() if c})
            phi = solve_laplacian_q(self.tree.graph, div, anchor=self.tree.root)
            base = pi_content(poly)
            out[name] = {v: val + base for v, val in phi.items()}
        return out

    def slot_table(self):
        """(vid, key) -> list of (tag, triple) for collision-aware bookkeeping."""
        slots = {}
        for tag, vid, _coord, triple, key in self.pushes:
            slots.setdefault((vid, key), []).append((tag, triple))
        return slots


def _monic_roots(poly, prec):
    if poly.degree() < 1:
        return []
    monic = poly * poly.coeffs[-1].inverse()
    return roots_padic(monic, prec)


def _reject_common_factor(cc, p_roots, q_roots):
    if cc.p.degree() < 1 or cc.q.degree() < 1:
        return
    for r, _m in p_roots:
        v = cc.q(r).val()
        if v is INF or v > Fraction(cc.target_prec, 2):
            raise DisallowedInput("p and q share a factor; not supported")


# ---------------------------------------------------------------------------
# route 1: covering data by continuity of inertia


class S3CoveringData:
    def __init__(self):
        self.vertical = {}       # vid -> inertia order of the component
        self.base_change = 1
        self.edge = {}           # eid -> |I_e| in S3
        self.vertex_order = {}   # vid -> |D_v| in S3
        self.vertex_count = {}   # vid -> vertices of the closure above
        self.edge_count = {}     # eid -> edges of the closure above
        self.point_order = {}    # tag -> point inertia order

    def comparable(self, edges, vertices):
        return ({e: self.edge_count[e] for e in edges},
                {v: self.vertex_count[v] for v in vertices})


def covering_data_inertia(pt, cube_tester=None):
    """Edge/vertex covering data from the three-case table.

    cube_tester(vid) resolves the all-involutions case (order 2 vs 6) via the
    quadratic subcover; required only when it occurs."""
    tree = pt.tree
    g = tree.graph
    phis = pt.potentials()
    s = _lcm(unit_scale(g), _height_denominator(tree))
    data = S3CoveringData()
    # snapshot the graph: a lazily built quadratic tester may grow the tree
    vertex_list = sorted(g.vweight)
    edge_list = sorted(g.edges)
    incident = {vid: [e for e in g.incident(vid) if e in set(edge_list)]
                for vid in vertex_list}
    for vid in vertex_list:
        triple = tuple(phis[name][vid] * s for name in ("p", "q", "d"))
        data.vertical[vid] = inertia_case(*triple).order
    data.base_change = global_ramification_lcm(data.vertical.values())
    for eid in edge_list:
        a, b, _l = g.edges[eid]
        # value of each potential at the first subdivision point of the
        # 6s-refined edge: 6s*phi(a) + per-grid-unit slope (position 1 is-
        # coprime to every subgroup order, so this measures |I_e| exactly)
        vals = []
        for name in ("p", "q", "d"):
            phi = phis[name]
            slope = (phi[b] - phi[a]) / g.length_of(eid)
            vals.append(6 * s * phi[a] + _int_slope(slope))
        order = inertia_case(*vals).order
        # end-independence sanity
        vals2 = []
        for name in ("p", "q", "d"):
            phi = phis[name]
            slope = (phi[a] - phi[b]) / g.length_of(eid)
            vals2.append(6 * s * phi[b] + _int_slope(slope))
        if inertia_case(*vals2).order != order:
            raise InternalInconsistency("edge inertia depends on the endpoint")
        data.edge[eid] = order
        data.edge_count[eid] = 6 // order
    slots = pt.slot_table()
    point_orders = {}
    for (vid, key), tags in slots.items():
        for tag, triple in tags:
            point_orders.setdefault(vid, []).append(
                (tag, inertia_case(*triple).order))
            data.point_order[tag] = inertia_case(*triple).order
    for vid in vertex_list:
        orders = [o for _t, o in point_orders.get(vid, [])]
        orders += [data.edge[e] for e in incident[vid]]
        has3 = any(o == 3 for o in orders)
        has2 = any(o == 2 for o in orders)
        if has3 and has2:
            r = 6
        elif has3:
            r = 3
        elif has2:
            if cube_tester is None:
                raise UnsupportedComponent(
                    "order-2-only vertex needs the quadratic-subfield test")
            r = 2 if cube_tester(vid) else 6
        else:
            r = 1
        data.vertex_order[vid] = r
        data.vertex_count[vid] = 6 // r
    return data


def _int_slope(slope):
    if slope.denominator != 1:
        raise InternalInconsistency(
            f"per-unit slope {slope} is not integral; divisor not principal")
    return int(slope)


def _height_denominator(tree):
    d = 1
    for h in tree.height.values():
        d = _lcm(d, Fraction(h).denominator)
    return d


# ---------------------------------------------------------------------------
# residue rational functions (exact, over the tower)


class RatF:
    """num/den with residue-polynomial entries (little-endian lists)."""

    def __init__(self, tower, num, den=None):
        self.tower = tower
        self.num = rp_trim(list(num))
        self.den = rp_trim(list(den)) if den else [tower.one()]

    def eval(self, t):
        dv = rp_eval(self.den, t)
        if dv.is_zero():
            raise ZeroDivisionError("denominator vanishes")
        return rp_eval(self.num, t) / dv

    def ord_at(self, t):
        """Order of vanishing at a finite residue point."""
        return _poly_ord_at(self.num, t, self.tower) - \
            _poly_ord_at(self.den, t, self.tower)

    def ord_at_infinity(self):
        return (len(self.den) - 1) - (len(self.num) - 1)

    def shifted_value(self, t, order):
        """Value of self/(X - t)^order at t (the slope-adjusted evaluation)."""
        num, dn = list(self.num), list(self.den)
        on = _poly_ord_at(num, t, self.tower)
        od = _poly_ord_at(dn, t, self.tower)
        if on - od != order:
            raise InternalInconsistency("adjusted order mismatch")
        num = _poly_shift_out(num, t, on, self.tower)
        dn = _poly_shift_out(dn, t, od, self.tower)
        return rp_eval(num, t) / rp_eval(dn, t)


def _poly_ord_at(poly, t, tower):
    k = 0
    cur = list(poly)
    while cur and rp_eval(cur, t).is_zero():
        cur = _deflate(cur, t, tower)
        k += 1
    return k


def _deflate(poly, t, tower):
    """poly / (X - t), assuming t is a root (synthetic division)."""
    out = []
    carry = tower.zero()
    for c in reversed(list(poly)):
        carry = c + carry * t
        out.append(carry)
    out.reverse()
    if not out or not out[0].is_zero():
        raise InternalInconsistency("deflation at a non-root")
    return rp_trim(out[1:])


def _poly_shift_out(poly, t, order, tower):
    cur = list(poly)
    for _ in range(order):
        cur = _deflate(cur, t, tower)
    return cur


def _rat_nth_root(rf, n, tower):
    """n-th root of a rational function all of whose orders are divisible
    by n; the scalar root may grow the tower."""
    def root_poly(poly):
        facs = poly_factor(poly, tower)
        lead = poly[-1]
        out = [tower.one()]
        for irr, mult in facs:
            if mult % n:
                raise InternalInconsistency("root multiplicity not divisible")
            for _ in range(mult // n):
                out = _rp_mul_local(out, irr, tower)
            lead = lead / irr[-1] ** mult
        return out, lead
    rn, cn = root_poly(rf.num) if len(rf.num) > 1 else ([tower.one()], rf.num[0])
    rd, cd = root_poly(rf.den) if len(rf.den) > 1 else ([tower.one()], rf.den[0])
    const = cn / cd
    croot = tower.nth_roots(const, n)[0]
    rn = [c * croot for c in rn]
    return RatF(tower, rn, rd)


def _rp_mul_local(a, b, tower):
    from .residue import rp_mul
    return rp_mul(a, b)


# ---------------------------------------------------------------------------
# reduced polynomials at tree components


def reduce_poly_at(tree, vid, F, expected_val=None):
    """Reduction of the rational function F(x) on a tree component, as a
    RatF in the chart coordinate, plus the vertical valuation."""
    tower = tree.tower
    chart = tree.chart_param(vid)
    if tree.chart[vid] == FINITE:
        comp = chart.substitute_into(F)
        v = pi_content(comp)
        num = rp_trim([c.shift(-v).reduce() for c in comp.coeffs])
        rf = RatF(tower, num)
    else:
        rev = F.reversed_poly()
        numer = chart.substitute_into(rev)
        pih = PadicElem.pi_power(tower, chart.height)
        gpoly = ValuedPoly(tower, [chart.trunc, pih])
        vn = pi_content(numer)
        vg = pi_content(gpoly)
        v = vn - F.degree() * vg
        num = rp_trim([c.shift(-vn).reduce() for c in numer.coeffs])
        den1 = rp_trim([c.shift(-vg).reduce() for c in gpoly.coeffs])
        den = [tower.one()]
        for _ in range(F.degree()):
            den = _rp_mul_local(den, den1, tower)
        rf = RatF(tower, num, den)
    if expected_val is not None and v != expected_val:
        raise InternalInconsistency(
            f"vertical valuation mismatch at {vid}: {v} != {expected_val}")
    return rf, v


# ---------------------------------------------------------------------------
# the quadratic intermediate graph with component models


class DComp:
    def __init__(self, tree_vid, kind, genus, sign=None, sqrt_label=None,
                 sq_model=None, disc_red=None, m=None):
        self.tree_vid = tree_vid
        self.kind = kind            # "sheet" | "hyper"
        self.genus = genus
        self.sign = sign            # +1 / -1 for sheets
        self.sqrt_label = sqrt_label  # RatF h with h^2 = reduced disc (sheets)
        self.sq_model = sq_model    # residue poly S: y1^2 = S(t) (hyper)
        self.disc_red = disc_red    # RatF, the reduced discriminant
        self.m = m                  # y-normalization exponent v_Gamma(disc)/2

    def __repr__(self):
        return f"DComp(v{self.tree_vid}, {self.kind}, g={self.genus})"


class SigmaD:
    """The quadratic subcover graph with models, node data and sheet swap."""

    def __init__(self):
        self.graph = MetricGraph()
        self.comp = {}            # D-vid -> DComp
        self.above_vertex = {}    # tree vid -> [D-vids]
        self.above_edge = {}      # tree eid -> [D-eids]
        self.node = {}            # D-eid -> dict(tree_eid, bit, side data)
        self.tau_v = {}
        self.tau_e = {}


def _sq_decompose(rf, tower):
    """disc_red = SQ * (sqpart)^2 with SQ squarefree; returns (SQ, sqpart)
    as RatF with the twist constant kept on SQ."""
    def split(poly):
        if len(poly) <= 1:
            return [tower.one()], [tower.one()], (poly[0] if poly else tower.one())
        lead = poly[-1]
        sq, part = [tower.one()], [tower.one()]
        for irr, mult in poly_factor(poly, tower):
            for _ in range(mult % 2):
                sq = _rp_mul_local(sq, irr, tower)
            for _ in range(mult // 2):
                part = _rp_mul_local(part, irr, tower)
        return sq, part, lead
    nsq, npart, nlead = split(rf.num)
    dsq, dpart, dlead = split(rf.den)
    sq = RatF(tower, [c * (nlead / dlead) for c in nsq], dsq)
    part = RatF(tower, npart, dpart)
    return sq, part


def rpoly_eval_series(rpoly, t_series):
    """Evaluate a residue polynomial at a series point (coefficients lifted
    as exact constants)."""
    tower = t_series.tower
    acc = PadicElem.zero(tower, t_series.e)
    for c in reversed(list(rpoly)):
        acc = acc * t_series + PadicElem.const(tower, c, t_series.e)
    return acc


def ratf_eval_series(rf, t_series):
    return rpoly_eval_series(rf.num, t_series) / rpoly_eval_series(rf.den, t_series)


class QuadraticRoute:
    """Sigma(D) with component models, the cubic radicand data, the closure."""

    def __init__(self, pt):
        self.pt = pt
        self.tower = pt.tower
        self._grow_collided()
        self.phis = pt.potentials()
        self._build_sigma_d()
        self._push_w_points()
        self._w_laplacian()
        self._cubic_data()

    # -- growth -----------------------------------------------------------------

    def _grow_collided(self):
        pt = self.pt
        tree = pt.tree
        points_by_tag = self._points_by_tag()
        for _ in range(16):
            slots = {}
            for tag, vid, _c, _t, key in pt.pushes:
                slots.setdefault((vid, key), []).append(tag)
            grown = False
            for (vid, key), tags in sorted(slots.items(),
                                           key=lambda kv: repr(kv[0])):
                if len(tags) < 2 or key == ("inf",):
                    continue
                cluster = [points_by_tag[t] for t in tags]
                tree.grow_child(vid, cluster)
                grown = True
            if not grown:
                return
            pt.pushes = []
            pt._push_all()
        raise InternalInconsistency("collision growth did not stabilize")

    def _points_by_tag(self):
        pt = self.pt
        out = {}
        for i, (r, _m) in enumerate(pt.p_roots):
            out[("p", i)] = r
        for i, (r, _m) in enumerate(pt.q_roots):
            out[("q", i)] = r
        for i, (r, _m) in enumerate(pt.d_roots):
            out[("d", i)] = r
        out[("inf",)] = INFTY
        return out

    # -- Sigma(D) ------------------------------------------------------------------

    def _build_sigma_d(self):
        pt, tree = self.pt, self.pt.tree
        g = tree.graph
        phi_d = self.phis["d"]
        sd = SigmaD()
        self.sd = sd
        slot_delta = {}   # (vid, key) -> disc multiplicity
        for tag, vid, _c, triple, key in pt.pushes:
            if triple[2]:
                slot_delta[(vid, key)] = slot_delta.get((vid, key), 0) + triple[2]
        self.slot_delta = slot_delta
        # reduced discriminants and splitting
        self.disc_red = {}
        split = {}
        for vid in sorted(g.vweight):
            rf, vval = reduce_poly_at(tree, vid, pt.cc.disc,
                                      expected_val=phi_d[vid])
            self.disc_red[vid] = rf
            odd = any(m % 2 for (v2, _k), m in slot_delta.items() if v2 == vid)
            for eid in g.incident(vid):
                a, b, l = g.edges[eid]
                other = b if a == vid else a
                delta = _int_slope((phi_d[other] - phi_d[vid]) / l)
                if delta % 2:
                    odd = True
            split[vid] = not odd
        self.split2 = split
        # component construction
        for vid in sorted(g.vweight):
            rf = self.disc_red[vid]
            gen = self._genus_quadratic(vid)
            if split[vid]:
                h = _rat_nth_root(rf, 2, self.tower)
                for sign in (1, -1):
                    label = RatF(self.tower,
                                 [c * self.tower.elem(sign % self.tower.p)
                                  for c in h.num], h.den)
                    did = sd.graph.add_vertex(gen)
                    sd.comp[did] = DComp(vid, "sheet", gen, sign=sign,
                                         sqrt_label=label, disc_red=rf,
                                         m=phi_d[vid] / 2)
                    sd.above_vertex.setdefault(vid, []).append(did)
            else:
                sq, part = _sq_decompose(rf, self.tower)
                did = sd.graph.add_vertex(gen)
                sd.comp[did] = DComp(vid, "hyper", gen, sq_model=sq,
                                     disc_red=rf, m=phi_d[vid] / 2)
                sd.comp[did].sqpart = part
                sd.above_vertex.setdefault(vid, []).append(did)
        # edges with sign transport
        for eid in sorted(g.edges):
            self._build_d_edges(eid)
        # sheet swap
        for vid, dids in sd.above_vertex.items():
            if len(dids) == 2:
                sd.tau_v[dids[0]] = dids[1]
                sd.tau_v[dids[1]] = dids[0]
            else:
                sd.tau_v[dids[0]] = dids[0]
        for tid, dids in sd.above_edge.items():
            if len(dids) == 2:
                sd.tau_e[dids[0]] = dids[1]
                sd.tau_e[dids[1]] = dids[0]
            else:
                sd.tau_e[dids[0]] = dids[0]
        # sanity: genus of D
        mults = [m for (_v, _k), m in slot_delta.items()] if False else None
        gen_d = genus_generic_fiber(
            2, 0, [t[2] for _tag, _v, _c, t, _k in pt.pushes if t[2]])
        self.genus_d = gen_d
        if total_genus(sd.graph) != gen_d:
            raise InconsistentData(
                f"Sigma(D) genus {total_genus(sd.graph)} != {gen_d}")

    def _genus_quadratic(self, vid):
        g = self.pt.tree.graph
        phi_d = self.phis["d"]
        if self.split2[vid]:
            return 0
        ram = 0
        for (v2, _k), m in self.slot_delta.items():
            if v2 == vid and m % 2:
                ram += 1
        for eid in g.incident(vid):
            a, b, l = g.edges[eid]
            other = b if a == vid else a
            if _int_slope((phi_d[other] - phi_d[vid]) / l) % 2:
                ram += 1
        two_g = 2 * (-2) + ram
        if two_g % 2:
            raise InconsistentData("odd ramification count on a double cover")
        return two_g // 2 + 1
    def _build_d_edges(self, eid):
        """Edges of Sigma(D) above one tree edge.

        Cross-edge sheet pairing is gauge on a tree base (the gluing cocycle
        is trivial), so copies attach to sheets in a fixed arbitrary order;
        only per-side node data (smooth-model y-values, for torsion tests)
        carries real content and is sampled near the node."""
        tree, sd = self.pt.tree, self.sd
        g = tree.graph
        a, b, l = g.edges[eid]
        pa = tree.parent.get(b)
        par, chi = (a, b) if pa and pa[1] == eid else (b, a)
        phi_d = self.phis["d"]
        delta = _int_slope((phi_d[chi] - phi_d[par]) / l)
        sides = {}
        for vid in (par, chi):
            slot = self._node_slot(vid, chi, eid)
            comp_ids = sd.above_vertex[vid]
            if len(comp_ids) == 2:
                sides[vid] = [("sheet", comp_ids[0], slot, None),
                              ("sheet", comp_ids[1], slot, None)]
            else:
                did = comp_ids[0]
                if delta % 2:
                    sides[vid] = [("node", did, slot,
                                   _node_point_key(slot, None))]
                else:
                    y1a, y1b = self._node_y1_pair(vid, chi, eid, slot)
                    sides[vid] = [("node", did, slot, y1a),
                                  ("node", did, slot, y1b)]
        copies = 1 if delta % 2 else 2
        length = l / 2 if delta % 2 else l
        for j in range(copies):
            _k_a, ca, slot_a, pt_a = sides[par][j]
            _k_b, cb, slot_b, pt_b = sides[chi][j]
            de = sd.graph.add_edge(ca, cb, length)
            sd.above_edge.setdefault(eid, []).append(de)
            sd.node[de] = {"tree_eid": eid, "copy": j,
                           "slots": {ca: slot_a, cb: slot_b},
                           "points": {ca: pt_a, cb: pt_b}}

    def _eff_height(self, vid, chart):
        tree = self.pt.tree
        if vid == tree.root and chart == INFINITE:
            return Fraction(0)
        return tree.height[vid]

    def _node_slot(self, vid, chi, eid):
        tree = self.pt.tree
        if vid == chi:
            return ("inf",)
        if vid == tree.root and tree.chart[chi] == INFINITE:
            return ("inf",)
        t_e = tree.chart_param(vid).coordinate_of(tree.trunc[chi])
        return coord_key(t_e)

    def _sample_on_edge(self, par, chi, eid, from_par):
        """A series point on the open edge, close to the chosen endpoint."""
        tree = self.pt.tree
        tower = self.tower
        chart = tree.chart[chi]
        h_par = self._eff_height(par, chart)
        h_chi = tree.height[chi]
        l = h_chi - h_par
        e_amb = _lcm(_height_denominator(tree), 6)
        phi_d = self.phis["d"]
        delta = abs(_int_slope((phi_d[chi] - phi_d[par]) /
                               tree.graph.length_of(eid)))
        eps = min(Fraction(l, 4), Fraction(1, 4 * e_amb * (delta + 2)))
        h = (h_par + eps) if from_par else (h_chi - eps)
        trunc = tree.trunc[chi]
        prefix = trunc.truncation_below(h)
        tail = trunc - prefix
        digit = tail.shift(-h).reduce() if not tail.is_zero() and \
            tail.val() == h else tower.zero()
        expected = phi_d[par] + (phi_d[chi] - phi_d[par]) * (h - h_par) / l
        for cand in range(1, 16):
            c = digit + tower.elem(cand)
            if c.is_zero():
                continue
            w = prefix + PadicElem.const(tower, c) * \
                PadicElem.pi_power(tower, h)
            x = w if chart == FINITE else w.inverse()
            val = self.pt.cc.disc(x)
            if not val.is_zero() and val.val() == expected:
                return x, w, h
        raise InternalInconsistency("no generic sample point on edge")

    def _chart_series_at(self, vid, x):
        """The component's own chart coordinate of a series point."""
        tree = self.pt.tree
        w = x if tree.chart[vid] == FINITE else x.inverse()
        return (w - tree.trunc[vid]).shift(-tree.height[vid])

    def _node_y1_pair(self, vid, chi, eid, slot):
        """The two smooth-model y-values of the nodes above an even edge on
        a hyper component, in a fixed branch order."""
        tree = self.pt.tree
        tower = self.tower
        comp = self.sd.comp[self.sd.above_vertex[vid][0]]
        x, w, h = self._sample_on_edge(
            (vid if vid != chi else tree.parent[chi][0]), chi, eid,
            from_par=(vid != chi))
        t_ser = self._chart_series_at(vid, x)
        y = nth_root(self.pt.cc.disc(x), 2)
        part = comp.sqpart
        pser = rpoly_eval_series(part.num, t_ser) / \
            rpoly_eval_series(part.den, t_ser)
        y1 = y / (PadicElem.pi_power(tower, comp.m) * pser)
        if slot == ("inf",):
            s_inf = -comp.sq_model.ord_at_infinity()
            if s_inf % 2:
                raise InternalInconsistency("odd infinity order on even edge")
            xi = t_ser.inverse()
            y1 = y1 * xi ** (s_inf // 2)
        if y1.val() != 0:
            raise InternalInconsistency("node y-value valuation mismatch")
        v = y1.reduce()
        return (_node_point_key(slot, coord_key(v)),
                _node_point_key(slot, coord_key(-v)))

    # -- the cubic radicand on Sigma(D) --------------------------------------------

    def _push_w_points(self):
        """Points of div(y - sqrt(27) q) on Sigma(D), with local orders."""
        pt = self.pt
        tower = self.tower
        self.sqrt27 = tower.nth_roots(tower.elem(27), 2)[0]
        self.w_points = {}     # did -> list of (tag, order, point_key)
        self.w_orders = []     # all D-point orders (generic branch data)
        for tag, vid, coord, triple, key in pt.pushes:
            if triple == (0, 0, 0):
                continue
            split, orders = w_point_values(*triple)
            orders = [int(o) for o in orders]
            self.w_orders.extend(orders)
            placements = self._place_w_points(tag, vid, coord, triple, split)
            if len(placements) != len(orders):
                raise InternalInconsistency("w-point placement count mismatch")
            for (did, pkey), order in zip(placements, orders):
                if order:
                    self.w_points.setdefault(did, []).append(
                        (tag, order, pkey))

    def _place_w_points(self, tag, vid, coord, triple, split):
        """Sheet/curve-point placements of the one or two D-points above a
        marked point, via a nearby sample."""
        tree, sd, tower = self.pt.tree, self.sd, self.tower
        comps = sd.above_vertex[vid]
        z = self._points_by_tag()[tag]
        N = max([tree.height[v] for v in tree.graph.vweight] + [2]) + 5
        if is_infinity(z):
            zp = PadicElem.pi_power(tower, -N)
        else:
            zp = z + PadicElem.pi_power(tower, N)
        dval = self.pt.cc.disc(zp)
        if dval.is_zero():
            raise InternalInconsistency("discriminant vanished at sample")
        y = nth_root(dval, 2)
        qv = self.pt.cc.q(zp) * PadicElem.const(tower, self.sqrt27)
        # branch of y agreeing with +sqrt(27) q to the highest order
        plus = (y - qv)
        minus = (-y - qv)
        vplus = INF if plus.is_zero() else plus.val()
        vminus = INF if minus.is_zero() else minus.val()
        y_plus = y if (vplus is INF or (vminus is not INF and vplus >= vminus)) \
            else -y
        if not split:
            did = comps[0]
            pkey = self._w_point_on(did, vid, zp, y_plus, ram=True)
            return [(did, pkey)]
        out = []
        for ybr in (y_plus, -y_plus):
            if len(comps) == 2:
                did = self._sheet_of(vid, zp, ybr)
                out.append((did, self._w_point_on(did, vid, zp, ybr,
                                                  ram=False)))
            else:
                did = comps[0]
                out.append((did, self._w_point_on(did, vid, zp, ybr,
                                                  ram=False)))
        return out

    def _sheet_of(self, vid, zp, ybr):
        """Which split sheet carries the D-point with the given y-branch."""
        tower = self.tower
        comp_ids = self.sd.above_vertex[vid]
        t_ser = self._chart_series_at(vid, zp)
        m = self.sd.comp[comp_ids[0]].m
        s = ybr.shift(-m)
        for did in comp_ids:
            lab = self.sd.comp[did].sqrt_label
            hval = rpoly_eval_series(lab.num, t_ser) / \
                rpoly_eval_series(lab.den, t_ser)
            diff = s - hval
            if diff.is_zero() or diff.val() > s.val():
                return did
        raise InternalInconsistency("no sheet matches the sampled branch")

    def _w_point_on(self, did, vid, zp, ybr, ram):
        """Curve-point key of the D-point reduction on its component."""
        tower = self.tower
        comp = self.sd.comp[did]
        t_ser = self._chart_series_at(vid, zp)
        tbar_val = t_ser if not t_ser.is_zero() else t_ser
        if t_ser.is_zero() or t_ser.val() >= 0:
            tkey = coord_key(t_ser.reduce())
        else:
            tkey = ("inf",)
        if comp.kind == "sheet":
            return ("fin", tkey, None) if tkey != ("inf",) else ("infpt", None)
        if ram and self._sq_ord_at(comp, tkey) % 2:
            return ("finram", tkey) if tkey != ("inf",) else ("infram",)
        pser = rpoly_eval_series(comp.sqpart.num, t_ser) / \
            rpoly_eval_series(comp.sqpart.den, t_ser)
        y1 = ybr / (PadicElem.pi_power(tower, comp.m) * pser)
        if tkey == ("inf",):
            s_inf = -comp.sq_model.ord_at_infinity()
            if s_inf % 2:
                return ("infram",)
            y1 = y1 * t_ser.inverse() ** (s_inf // 2)
        if y1.val() != 0:
            raise InternalInconsistency("w-point y-value valuation mismatch")
        return _node_point_key(tkey, coord_key(y1.reduce()))

    def _sq_ord_at(self, comp, tkey):
        if tkey == ("inf",):
            return -comp.sq_model.ord_at_infinity()
        return comp.sq_model.ord_at(_key_elem(tkey, self.tower))

    def _w_laplacian(self):
        """Vertical valuations of y - sqrt(27) q on Sigma(D)."""
        sd = self.sd
        div = {}
        for did, pts in self.w_points.items():
            tot = sum(o for _t, o, _k in pts)
            if tot:
                div[did] = div.get(did, 0) + tot
        div = GraphDivisor({v: c for v, c in div.items() if c})
        anchor, anchor_val = None, None
        for did in sorted(sd.comp):
            comp = sd.comp[did]
            if comp.kind == "hyper":
                anchor = did
                anchor_val = min(comp.m, self.phis["q"][comp.tree_vid])
                break
        if anchor is None:
            anchor = min(sd.comp)
            anchor_val = self._sample_vertical(anchor)
        phi = solve_laplacian_q(sd.graph, div, anchor=anchor)
        self.phi_w = {v: val + anchor_val for v, val in phi.items()}

    def _sample_vertical(self, did):
        """Vertical valuation of the radicand on a sheet by sampling."""
        tower = self.tower
        comp = self.sd.comp[did]
        tree = self.pt.tree
        vid = comp.tree_vid
        chart = tree.chart[vid]
        best = None
        for cand in range(3, 10):
            t0 = tower.elem(cand)
            w = tree.trunc[vid] + PadicElem.const(tower, t0) * \
                PadicElem.pi_power(tower, tree.height[vid])
            x = w if chart == FINITE else w.inverse()
            dv = self.pt.cc.disc(x)
            if dv.is_zero():
                continue
            y = nth_root(dv, 2)
            t_ser = self._chart_series_at(vid, x)
            lab = comp.sqrt_label
            hval = rpoly_eval_series(lab.num, t_ser) / \
                rpoly_eval_series(lab.den, t_ser)
            s = y.shift(-comp.m)
            ybr = y if (s - hval).is_zero() or (s - hval).val() > s.val() \
                else -y
            fval = ybr - self.pt.cc.q(x) * PadicElem.const(tower, self.sqrt27)
            if fval.is_zero():
                continue
            v = fval.val()
            best = v if best is None else min(best, v)
        if best is None:
            raise InternalInconsistency("could not sample a vertical value")
        return best

    # -- cubic covering data ----------------------------------------------------------

    def _cubic_data(self):
        sd = self.sd
        g = sd.graph
        self.cub_edge = {}
        for de, (ca, cb, l) in g.edges.items():
            slope = _int_slope((self.phi_w[cb] - self.phi_w[ca]) / l)
            self.cub_edge[de] = edge_inertia(3, slope)
        self.cub_vertex = {}
        self.cub_genus = {}
        for did in sorted(sd.comp):
            local = []
            for _tag, order, _pk in self.w_points.get(did, []):
                local.append(3 // _gcd(3, order))
            for de in g.incident(did):
                local.append(self.cub_edge[de])
            if any(m != 1 for m in local):
                r = 3
            elif sd.comp[did].genus == 0:
                r = 1
            else:
                r = 1 if self._torsion_trivial(did) else 3
            self.cub_vertex[did] = r
            self.cub_genus[did] = self._cubic_genus(did, r)

    def _cubic_genus(self, did, r):
        sd, g = self.sd, self.sd.graph
        comp = sd.comp[did]
        two_g = r * (2 * comp.genus - 2)
        for _tag, order, _pk in self.w_points.get(did, []):
            e = 3 // _gcd(3, order)
            if e > 1:
                two_g += (r // e) * (e - 1)
        for de in g.incident(did):
            e = self.cub_edge[de]
            if e > 1:
                two_g += (r // e) * (e - 1)
        if two_g % 2:
            raise InconsistentData("cubic Riemann-Hurwitz parity failure")
        gg = two_g // 2 + 1
        if gg < 0:
            raise InconsistentData("negative cubic genus")
        return gg

    # -- torsion test on a genus-1 component ----------------------------------------

    def _torsion_trivial(self, did):
        """Is div(reduced radicand)/3 principal on the genus-1 component?"""
        sd = self.sd
        comp = sd.comp[did]
        if comp.genus != 1:
            raise UnsupportedComponent(
                f"splitting test on a genus-{comp.genus} component")
        divisor = {}

        def add(ptkey, mult):
            if mult:
                divisor[ptkey] = divisor.get(ptkey, 0) + mult

        for _tag, order, pkey in self.w_points.get(did, []):
            add(pkey, order)
        for de in sd.graph.incident(did):
            ca, cb, l = sd.graph.edges[de]
            other = cb if ca == did else ca
            slope = _int_slope((self.phi_w[other] - self.phi_w[did]) / l)
            add(sd.node[de]["points"][did], slope)
        total = sum(divisor.values())
        if total != 0:
            raise InternalInconsistency(
                f"reduced radicand divisor has degree {total}")
        third = {}
        for k, m in divisor.items():
            if m % 3:
                raise InternalInconsistency("torsion test on a ramified divisor")
            if m // 3:
                third[k] = m // 3
        return _elliptic_divisor_principal(comp, third, self.tower)

    # -- twist values -----------------------------------------------------------------

    def twist_cocycle(self):
        """Residue cube-root labels on the fully split region, or None."""
        sd = self.sd
        tower = self.tower
        split_vs = {did for did, r in self.cub_vertex.items() if r == 1}
        split_es = {de for de, m in self.cub_edge.items()
                    if m == 1 and sd.graph.edges[de][0] in split_vs
                    and sd.graph.edges[de][1] in split_vs}
        if not split_es:
            return None
        # is there a cycle?
        parent = {v: v for v in split_vs}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        has_cycle = False
        for de in split_es:
            a, b, _l = sd.graph.edges[de]
            ra, rb = find(a), find(b)
            if ra == rb:
                has_cycle = True
            else:
                parent[ra] = rb
        if not has_cycle:
            return None
        zeta = tower.root_of_unity(3)
        values = {}
        for did in split_vs:
            comp = sd.comp[did]
            if comp.kind != "sheet" and comp.genus != 0:
                raise UnsupportedComponent(
                    "twist extraction beyond rational components")
            hfun = self._cube_root_on(did)
            for de in sd.graph.incident(did):
                if de not in split_es:
                    continue
                slot = sd.node[de]["slots"][did]
                ca, cb, l = sd.graph.edges[de]
                other = cb if ca == did else ca
                slope = _int_slope((self.phi_w[other] - self.phi_w[did]) / l)
                values[(did, de)] = self._adjusted_value(hfun, slot,
                                                         slope // 3)
        return TwistCocycle(3, zeta, values)

    def _cube_root_on(self, did):
        comp = self.sd.comp[did]
        tower = self.tower
        if comp.kind != "sheet":
            raise UnsupportedComponent("cube root on a non-rational component")
        fbar = self._radicand_on_sheet(did)
        return _rat_nth_root(fbar, 3, tower)

    def _radicand_on_sheet(self, did):
        """Reduced y - sqrt(27) q on a split sheet, reconstructed from its
        divisor and one sampled value (robust against partial cancellation
        of the naive reduction)."""
        sd, tree, tower = self.sd, self.pt.tree, self.tower
        comp = sd.comp[did]
        vid = comp.tree_vid
        # divisor in the chart coordinate: finite slots with orders
        factors = {}
        inf_order = 0
        for _tag, order, pkey in self.w_points.get(did, []):
            if pkey[0] == "fin":
                factors[pkey[1]] = factors.get(pkey[1], 0) + order
            elif pkey[0] in ("infpt", "infram"):
                inf_order += order
            else:
                factors[pkey[1]] = factors.get(pkey[1], 0) + order
        for de in sd.graph.incident(did):
            ca, cb, l = sd.graph.edges[de]
            other = cb if ca == did else ca
            slope = _int_slope((self.phi_w[other] - self.phi_w[did]) / l)
            slot = sd.node[de]["slots"][did]
            if slot == ("inf",):
                inf_order += slope
            else:
                factors[slot] = factors.get(slot, 0) + slope
        if sum(factors.values()) + inf_order != 0:
            raise InternalInconsistency("sheet radicand divisor not degree 0")
        num = [tower.one()]
        den = [tower.one()]
        for key, mult in sorted(factors.items(), key=repr):
            te = _key_elem(key, tower)
            lin = [-te, tower.one()]
            for _ in range(abs(mult)):
                if mult > 0:
                    num = _rp_mul_local(num, lin, tower)
                else:
                    den = _rp_mul_local(den, lin, tower)
        shape = RatF(tower, num, den)
        # one sampled value pins the constant
        t0, fval = self._sample_radicand_value(did)
        c = fval / shape.eval(t0)
        return RatF(tower, [co * c for co in shape.num], shape.den)

    def _sample_radicand_value(self, did):
        """(t0, reduced radicand value at t0) at a generic sheet point."""
        tower, tree = self.tower, self.pt.tree
        comp = self.sd.comp[did]
        vid = comp.tree_vid
        chart = tree.chart[vid]
        v = self.phi_w[did]
        for cand in range(3, 24):
            t0 = tower.elem(cand)
            w = tree.trunc[vid] + PadicElem.const(tower, t0) * \
                PadicElem.pi_power(tower, tree.height[vid])
            x = w if chart == FINITE else w.inverse()
            dv = self.pt.cc.disc(x)
            if dv.is_zero():
                continue
            y = nth_root(dv, 2)
            t_ser = self._chart_series_at(vid, x)
            lab = comp.sqrt_label
            hval = rpoly_eval_series(lab.num, t_ser) / \
                rpoly_eval_series(lab.den, t_ser)
            s = y.shift(-comp.m)
            ybr = y if (s - hval).is_zero() or (s - hval).val() > s.val() \
                else -y
            fser = ybr - self.pt.cc.q(x) * PadicElem.const(tower, self.sqrt27)
            if fser.is_zero() or fser.val() != v:
                continue
            return t0, fser.shift(-v).reduce()
        raise InternalInconsistency("no generic sample for the sheet radicand")

    def _adjusted_value(self, rf, slot, order):
        tower = self.tower
        if slot == ("inf",):
            o = rf.ord_at_infinity()
            if o != order:
                raise InternalInconsistency("twist value order mismatch")
            return rf.num[-1] / rf.den[-1]
        te = _key_elem(slot, tower)
        o = rf.ord_at(te)
        if o != order:
            raise InternalInconsistency("twist value order mismatch")
        return rf.shifted_value(te, order)

    # -- cross-route covering data ------------------------------------------------------

    def comparable(self):
        """Edges/vertices of the closure above each tree edge/vertex."""
        edges = {}
        for eid, des in self.sd.above_edge.items():
            edges[eid] = sum(3 // self.cub_edge[de] for de in des)
        verts = {}
        for vid, dids in self.sd.above_vertex.items():
            verts[vid] = sum(3 // self.cub_vertex[did] for did in dids)
        return edges, verts


def _ratf_add(a, b, tower):
    from .residue import rp_add, rp_mul
    num = rp_add(rp_mul(a.num, b.den), rp_mul(b.num, a.den))
    den = rp_mul(a.den, b.den)
    return RatF(tower, num, den)


def _key_elem(key, tower):
    from .residue import ResidueElem
    if key[0] != "c":
        raise InternalInconsistency("expected a finite coordinate key")
    return ResidueElem(tower, key[1], list(key[2]))


def _node_point_key(slot, ykey):
    if slot == ("inf",):
        return ("infpt", ykey) if ykey is not None else ("infram",)
    return ("fin", slot, ykey) if ykey is not None else ("finram", slot)


# ---------------------------------------------------------------------------
# divisor principality on a genus-1 component (explicit group law)


def _elliptic_divisor_principal(comp, third, tower):
    """Is the degree-0 divisor (point-key -> mult) principal on the genus-1
    curve y1^2 = sq_model?  Decided by summation under the group law."""
    sq = comp.sq_model
    dnum = list(sq.num)
    dden = list(sq.den)
    # polynomial model y2^2 = S2(t) with y2 = y1 * den(t)
    from .residue import rp_mul
    S2 = rp_mul(dnum, dden)
    d = len(S2) - 1
    if d not in (3, 4):
        raise UnsupportedComponent(f"genus-1 model of degree {d}")
    pts = []
    for key, mult in third.items():
        if mult == 0:
            continue
        if key[0] == "fin":
            t = _key_elem(key[1], tower)
            y1 = _key_elem(key[2], tower)
            y2 = y1 * rp_eval(dden, t)
            pts.append((("aff", t, y2), mult))
        elif key[0] == "finram":
            t = _key_elem(key[1], tower)
            pts.append((("aff", t, tower.zero()), mult))
        elif key[0] == "infpt":
            ybit = _key_elem(key[1], tower)
            beta = ybit * dden[-1]
            pts.append((("inf2", beta), mult))
        elif key[0] == "infram":
            pts.append((("infram",), mult))
        else:
            raise InternalInconsistency(f"bad divisor point key {key}")
    if d == 4:
        pts, S2 = _quartic_to_cubic(pts, S2, tower)
    # monicize: y^2 = c3 x^3 + ... -> Y^2 = X^3 + a X^2 + b X + c
    c3, c2, c1, c0 = S2[3], S2[2] if len(S2) > 2 else tower.zero(), \
        S2[1] if len(S2) > 1 else tower.zero(), S2[0]
    a, b, c = c2, c1 * c3, c0 * c3 * c3
    acc = None  # identity
    for p, mult in pts:
        if p[0] == "infram" or p == ("inf",):
            continue  # the identity
        if p[0] != "aff":
            raise InternalInconsistency("unconverted infinite point")
        P = (p[1] * c3, p[2] * c3)
        n = mult % _curve_order_bound(tower) if False else mult
        Q = _ec_mul(P, n, a, b, c, tower)
        acc = _ec_add(acc, Q, a, b, c, tower)
    return acc is None


def _curve_order_bound(tower):  # pragma: no cover - kept for clarity
    return 1


def _quartic_to_cubic(pts, S2, tower):
    """Move a rational branch point of y^2 = quartic to infinity."""
    from .residue import poly_roots, rp_mul
    roots = poly_roots(list(S2), tower, grow=True)
    if not roots:
        raise UnsupportedComponent("quartic model without a rational root")
    r = sorted(roots, key=lambda e: (e.deg, e.coeffs))[0]
    # S2(r + 1/T) * T^4 = cubic(T)
    coeffs = []
    for k in range(5):
        # coefficient of T^k in sum_i a_i (r + 1/T)^i T^4
        total = tower.zero()
        for i, ai in enumerate(S2):
            # a_i * sum_j C(i,j) r^(i-j) T^(4-j); need j = 4-k
            j = 4 - k
            if 0 <= j <= i:
                total = total + ai * _binom(i, j, tower) * r ** (i - j)
        coeffs.append(total)
    if not coeffs[4].is_zero():
        raise InternalInconsistency("quartic transform leading term survived")
    cubic = coeffs[:4]
    out = []
    for p, mult in pts:
        if p[0] == "aff":
            t, y2 = p[1], p[2]
            if t == r:
                if not y2.is_zero():
                    raise InternalInconsistency("non-branch point at the root")
                out.append((("infram",), mult))
                continue
            T = (t - r).inverse()
            out.append((("aff", T, y2 * T * T), mult))
        elif p[0] == "inf2":
            out.append((("aff", tower.zero(), p[1]), mult))
        elif p[0] == "infram":
            raise InternalInconsistency("single infinite point on a quartic")
        else:
            raise InternalInconsistency("bad point kind")
    while cubic and cubic[-1].is_zero():
        cubic.pop()
    if len(cubic) - 1 != 3:
        raise UnsupportedComponent("degenerate quartic transform")
    return out, cubic


def _binom(n, k, tower):
    from math import comb
    return tower.elem(comb(n, k))


def _ec_add(P, Q, a, b, c, tower):
    """Addition on y^2 = x^3 + a x^2 + b x + c; None is the identity."""
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2 and (y1 + y2).is_zero():
        return None
    if x1 == x2:
        num = x1 * x1 * 3 + a * x1 * 2 + b
        lam = num / (y1 * 2)
    else:
        lam = (y2 - y1) / (x2 - x1)
    x3 = lam * lam - a - x1 - x2
    y3 = lam * (x1 - x3) - y1
    return (x3, y3)


def _ec_mul(P, n, a, b, c, tower):
    if n < 0:
        P = (P[0], -P[1])
        n = -n
    acc = None
    base = P
    while n:
        if n & 1:
            acc = _ec_add(acc, base, a, b, c, tower)
        base = _ec_add(base, base, a, b, c, tower)
        n >>= 1
    return acc


# ---------------------------------------------------------------------------
# closure assembly and the sheet-swap lift


class S3Result:
    def __init__(self):
        self.tree = None
        self.inertia_data = None
        self.quadratic = None
        self.sigma_d = None
        self.closure = None
        self.quotient_graph = None
        self.pruned = None
        self.genus_report = {}
        self.route_used = "both"

    def __repr__(self):
        return (f"S3Result(closure={self.closure.cover if self.closure else None!r}, "
                f"pruned={self.pruned!r}, genera={self.genus_report})")


def _lift_involution(qr, cg):
    """An order-2 automorphism of the closure covering the sheet swap and
    conjugating the cyclic action to its inverse."""
    sd = qr.sd
    vertex_ids = {}
    for cv, did in cg.vertex_map.items():
        vertex_ids.setdefault(did, []).append(cv)
    for did in vertex_ids:
        vertex_ids[did].sort()
    edge_ids = {}
    for ce, de in cg.edge_map.items():
        edge_ids.setdefault(de, []).append(ce)
    for de in edge_ids:
        edge_ids[de].sort()
    k = {did: len(vertex_ids[did]) for did in vertex_ids}
    # attachment offsets implied by the assembly
    off = {}
    for de, ces in edge_ids.items():
        ca0, cb0, _l = cg.cover.edges[ces[0]]
        a, b, _l2 = sd.graph.edges[de]
        off[(de, a)] = vertex_ids[a].index(ca0 if cg.vertex_map[ca0] == a
                                           else cb0)
        off[(de, b)] = vertex_ids[b].index(cb0 if cg.vertex_map[cb0] == b
                                           else ca0)
    # unknown reflection constants a_c per component, a_{tau c} = a_c
    comps = sorted(sd.comp)
    for seed in range(3):
        assign = {}
        ok = True
        order = [c for c in comps]
        # propagate over a spanning structure repeatedly
        assign[order[0]] = seed % k[order[0]]
        assign[sd.tau_v[order[0]]] = assign[order[0]]
        changed = True
        while changed and ok:
            changed = False
            for de in sorted(edge_ids):
                a, b, _l = sd.graph.edges[de]
                de2 = sd.tau_e[de]
                a2, b2, _l2 = sd.graph.edges[de2]
                # orient the image edge to match tau(a), tau(b)
                ta, tb = sd.tau_v[a], sd.tau_v[b]
                if (ta, tb) not in ((a2, b2), (b2, a2)):
                    ok = False
                    break
                offp_a = off[(de2, ta)]
                offp_b = off[(de2, tb)]
                # constraint: A := a_a - off(de,a) - off(de2,ta)
                #             == a_b - off(de,b) - off(de2,tb) mod gcd(k_a', k_b')
                ka, kb = k[ta], k[tb]
                if a in assign and b in assign:
                    Aa = (assign[a] - off[(de, a)] - offp_a)
                    Ab = (assign[b] - off[(de, b)] - offp_b)
                    m = _gcd(ka, kb)
                    if m and (Aa - Ab) % m:
                        ok = False
                        break
                elif a in assign and kb:
                    Aa = assign[a] - off[(de, a)] - offp_a
                    val = (Aa + off[(de, b)] + offp_b) % kb
                    assign[b] = val
                    assign[sd.tau_v[b]] = val
                    changed = True
                elif b in assign and ka:
                    Ab = assign[b] - off[(de, b)] - offp_b
                    val = (Ab + off[(de, a)] + offp_a) % ka
                    assign[a] = val
                    assign[sd.tau_v[a]] = val
                    changed = True
            for c in comps:
                if c not in assign:
                    # disconnected split regions: anchor freely
                    if all(x in assign for x in comps if x != c):
                        assign[c] = 0
                        assign[sd.tau_v[c]] = 0
                        changed = True
        for c in comps:
            if c not in assign:
                assign[c] = 0
        if not ok:
            continue
        vperm, eperm = _build_reflection(qr, cg, vertex_ids, edge_ids, k, off,
                                         assign)
        if vperm is not None:
            return vperm, eperm
    raise ActionLiftFailed("no involution lift found")


def _build_reflection(qr, cg, vertex_ids, edge_ids, k, off, assign):
    sd = qr.sd
    vperm = {}
    for did, ids in vertex_ids.items():
        td = sd.tau_v[did]
        kk = k[did]
        for i, cv in enumerate(ids):
            vperm[cv] = vertex_ids[td][(assign[did] - i) % k[td]] \
                if k[td] == kk else None
            if vperm[cv] is None:
                return None, None
    eperm = {}
    for de, ids in edge_ids.items():
        de2 = sd.tau_e[de]
        a, b, _l = sd.graph.edges[de]
        ta = sd.tau_v[a]
        A = assign[a] - off[(de, a)] - off[(de2, ta)]
        n2 = len(ids)
        if len(edge_ids[de2]) != n2:
            return None, None
        for j, ce in enumerate(ids):
            eperm[ce] = edge_ids[de2][(A - j) % n2]
    # verify it is an automorphism of the cover respecting incidence
    g = cg.cover
    for ce, (u, v, l) in g.edges.items():
        img = eperm[ce]
        u2, v2, l2 = g.edges[img]
        if {vperm[u], vperm[v]} != {u2, v2} or l != l2:
            return None, None
    for cv in g.vweight:
        if g.vweight[vperm[cv]] != g.vweight[cv]:
            return None, None
        if vperm[vperm[cv]] != cv:
            return None, None
    for ce in g.edges:
        if eperm[eperm[ce]] != ce:
            return None, None
    # anticommutation with the cyclic generator
    gv, ge = cg.action
    for cv in g.vweight:
        if vperm[gv[cv]] != _apply_inverse(gv, vperm[cv]):
            return None, None
    return vperm, eperm


def _apply_inverse(perm, x):
    for a, b in perm.items():
        if b == x:
            return a
    raise InternalInconsistency("permutation not surjective")


# ---------------------------------------------------------------------------
# quotient weights via the degree-3 fiber profiles


def _fiber_profile(deg, m):
    """Sum of (e_P - 1) over the fiber of a degree-deg component map at a
    point whose closure inertia has order m."""
    if deg == 1 or m == 1:
        return 0
    if deg == 2:
        if m == 2:
            return 1
        raise InconsistentData(f"inertia {m} on a degree-2 component map")
    if deg == 3:
        if m == 2:
            return 1
        if m == 3:
            return 2
        raise InconsistentData(f"inertia {m} on a degree-3 component map")
    raise InconsistentData(f"unexpected component degree {deg}")


def _point_orders_by_vertex(pt):
    out = {}
    for tag, vid, _c, triple, _k in pt.pushes:
        if triple == (0, 0, 0):
            continue
        out.setdefault(vid, []).append(inertia_case(*triple).order)
    return out


def _quotient_with_weights(qr, cg, vperm, eperm):
    """Closure / involution with component weights from Riemann-Hurwitz."""
    pt, sd = qr.pt, qr.sd
    tree = pt.tree
    edges_above, verts_above = qr.comparable()
    dv_order = {vid: 6 // n for vid, n in verts_above.items()}
    ie_order = {eid: 6 // n for eid, n in edges_above.items()}
    pts_by_v = _point_orders_by_vertex(pt)
    identity_v = {v: v for v in cg.cover.vweight}
    identity_e = {e: e for e in cg.cover.edges}
    # orbit weights
    orbit_weights = {}
    for cv in cg.cover.vweight:
        orbit = frozenset({cv, vperm[cv]})
        if orbit in orbit_weights:
            continue
        did = cg.vertex_map[cv]
        vid = sd.comp[did].tree_vid
        stab = 2 if vperm[cv] == cv else 1
        deg = dv_order[vid] // stab
        if dv_order[vid] % stab:
            raise InconsistentData("stabilizer does not divide |D_v|")
        two_g = deg * (-2)
        for m in pts_by_v.get(vid, []):
            two_g += _fiber_profile(deg, m)
        for eid in tree.graph.incident(vid):
            two_g += _fiber_profile(deg, ie_order[eid])
        if two_g % 2:
            raise InconsistentData("quotient Riemann-Hurwitz parity failure")
        w = two_g // 2 + 1
        if w < 0:
            raise InconsistentData("negative quotient weight")
        orbit_weights[orbit] = w
    qgraph, omap = quotient(cg.cover, [identity_v, vperm],
                            [identity_e, eperm],
                            orbit_weights=orbit_weights, scheme_lengths=True)
    return qgraph, omap


# ---------------------------------------------------------------------------
# the public pipeline


def closure_covering_data_inertia(cc, point_leaves=True):
    """Separating tree plus the inertia-route covering data."""
    pt = PushedTree(cc, point_leaves=point_leaves)
    holder = {}

    def tester(vid):
        # order-2-only vertex: |D_v| is 2 iff three closure vertices lie above
        if "qr" not in holder:
            holder["qr"] = QuadraticRoute(pt)
        return _total_above(holder["qr"], vid) == 3

    data = covering_data_inertia(pt, cube_tester=tester)
    return pt, data, holder.get("qr")


def _total_above(qr, vid):
    return sum(3 // qr.cub_vertex[d] for d in qr.sd.above_vertex[vid])


def galois_closure(p, q, target_prec=48, point_leaves=True, route="both"):
    """Full pipeline: classify, build, assemble, lift, quotient, prune."""
    kind = classify(p, q, target_prec)
    if kind != "s3":
        raise UnsupportedComponent(
            f"galois_closure needs an s3 input, got {kind}")
    cc = CubicCover(p, q, target_prec)
    res = S3Result()
    res.route_used = route
    pt, inert, qr0 = closure_covering_data_inertia(cc, point_leaves)
    res.tree = pt
    res.inertia_data = inert
    qr = qr0 or QuadraticRoute(pt)
    res.quadratic = qr
    res.sigma_d = qr.sd
    if route == "both":
        # the two routes must see the same (grown) model to be comparable
        inert_post = covering_data_inertia(
            pt, cube_tester=lambda vid: _total_above(qr, vid) == 3)
        e_i = dict(inert_post.edge_count)
        v_i = dict(inert_post.vertex_count)
        e_q, v_q = qr.comparable()
        if e_i != e_q or v_i != v_q:
            raise InternalInconsistency(
                f"covering-data routes disagree: {e_i}/{e_q} {v_i}/{v_q}")
    # assemble the closure over Sigma(D)
    cov3 = CoveringData(3)
    cov3.edge = dict(qr.cub_edge)
    for did in qr.sd.comp:
        r = qr.cub_vertex[did]
        cov3.vertex[did] = VertexCover(r, 3 // r, qr.cub_genus[did], {})
    twist = qr.twist_cocycle()
    cg = assemble_cover(qr.sd.graph, 3, cov3, twist=twist)
    res.closure = cg
    g_cbar = genus_generic_fiber(3, qr.genus_d, qr.w_orders)
    if total_genus(cg.cover) != g_cbar:
        raise InconsistentData(
            f"closure genus {total_genus(cg.cover)} != {g_cbar}")
    # the ledger identities
    n_r = sum(1 for o in qr.w_orders if o % 3)
    if g_cbar - 1 != 3 * (qr.genus_d - 1) + n_r:
        raise InconsistentData("closure/D genus ledger fails")
    g_c = _genus_of_c(pt)
    n_r2 = 2 * g_cbar - 2 - 2 * (2 * g_c - 2)
    if n_r2 < 0:
        raise InconsistentData("closure/C ramification count negative")
    res.genus_report = {"D": qr.genus_d, "closure": g_cbar, "C": g_c,
                        "branch_D": n_r, "branch_C": n_r2}
    # quotient by the lifted sheet swap
    vperm, eperm = _lift_involution(qr, cg)
    qgraph, _omap = _quotient_with_weights(qr, cg, vperm, eperm)
    res.quotient_graph = qgraph
    if total_genus(qgraph) != g_c:
        raise InconsistentData(
            f"quotient genus {total_genus(qgraph)} != {g_c}")
    res.pruned = prune_leaves(qgraph)
    return res


def _genus_of_c(pt):
    two_g = 3 * (-2)
    for tag, _vid, _c, triple, _k in pt.pushes:
        if triple == (0, 0, 0):
            continue
        two_g += _fiber_profile(3, inertia_case(*triple).order)
    if two_g % 2:
        raise InconsistentData("genus of C is not integral")
    return two_g // 2 + 1


def quadratic_subcover(cc, point_leaves=True):
    """Sigma(D): the quadratic intermediate graph with its sheet swap."""
    pt = PushedTree(cc, point_leaves=point_leaves)
    return QuadraticRoute(pt)


def w_divisor(qr):
    """The pushed divisor of y - sqrt(27) q on Sigma(D) plus its potential."""
    div = {}
    for did, pts in qr.w_points.items():
        tot = sum(o for _t, o, _k in pts)
        if tot:
            div[did] = tot
    return GraphDivisor(div), dict(qr.phi_w)


# ---------------------------------------------------------------------------
# the elliptic application


def elliptic_skeleton(A, B, target_prec=48):
    """Skeleton of x^3 + A x + B + y^2 = 0 via the degree-3 projection.

    Returns (pruned MetricGraph, verdict string)."""
    tower = A.tower
    vA = INF if A.is_zero() else A.val()
    vB = INF if B.is_zero() else B.val()
    if min(vA if vA is not INF else 0, vB if vB is not INF else 0) != 0:
        from .errors import InputError
        raise InputError("scale the curve so that min(v(A), v(B)) = 0")
    disc_e = A * A * A * PadicElem.const(tower, 4) + \
        B * B * PadicElem.const(tower, 27)
    if disc_e.is_zero():
        raise Singular("4A^3 + 27B^2 = 0")
    if A.is_zero():
        g = MetricGraph()
        g.add_vertex(1)
        return g, "good"
    p = ValuedPoly(tower, [A])
    q = ValuedPoly(tower, [B, PadicElem.zero(tower), PadicElem.const(tower, 1)])
    res = galois_closure(p, q, target_prec=target_prec)
    pruned = res.pruned
    if betti(pruned) == 1:
        length = pruned.total_length()
        return pruned, f"multiplicative cycle {length}"
    if pruned.num_vertices() == 1 and list(pruned.vweight.values()) == [1]:
        return pruned, "good"
    return pruned, "other"
