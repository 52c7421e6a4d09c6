"""Separating trees for marked subsets of the projective line.

Vertices are clusters of marked points sharing a pi-adic prefix, placed at
the height where the cluster splits; the root is the standard component.
Points with negative valuation (and the point at infinity) are handled on
the reciprocal chart and grafted at the root.  Residue coordinates of
distinct marked points on a common vertex are distinct by construction.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DuplicatePoint, InsufficientPrecision
from .graph import MetricGraph
from .series import INF, INFTY, PadicElem, is_infinity

FINITE = "finite"
INFINITE = "infinite"


class ChartParam:
    """Substitution x = trunc + pi^height * t (or its reciprocal-chart
    analogue); t = infinity points toward the parent edge."""

    def __init__(self, chart, trunc, height):
        self.chart = chart
        self.trunc = trunc      # exact PadicElem prefix in the chart coordinate
        self.height = Fraction(height)

    def coordinate_of(self, point_in_chart):
        """Residue coordinate of a chart point on this component's line."""
        diff = point_in_chart - self.trunc
        return diff.shift(-self.height).reduce()

    def substitute_into(self, poly, t_poly=None):
        """poly(x) composed with x = trunc + pi^h * t, as a polynomial in t."""
        from .vpoly import ValuedPoly
        tower = self.trunc.tower
        pih = PadicElem.pi_power(tower, self.height)
        lin = ValuedPoly(tower, [self.trunc, pih])
        return poly.compose(lin)

    def __repr__(self):
        from .series import format_series
        return f"ChartParam({self.chart}, x = {format_series(self.trunc)} + pi^{self.height}*t)"


class SeparatingTree:
    """A metric tree with per-vertex addresses and a marked-point table."""

    def __init__(self, tower):
        self.tower = tower
        self.graph = MetricGraph()
        self.root = None
        self.height = {}       # vid -> Fraction
        self.chart = {}        # vid -> FINITE | INFINITE
        self.trunc = {}        # vid -> exact PadicElem prefix (chart coordinate)
        self.parent = {}       # vid -> (parent vid, eid) or None
        self.reduction = {}    # point index -> (vid, coordinate)
        self.points = []       # marked points as given
        self.sep_height = Fraction(0)

    # -- structure ------------------------------------------------------------

    def new_vertex(self, height, chart, trunc, parent=None, weight=0):
        vid = self.graph.add_vertex(weight)
        self.height[vid] = Fraction(height)
        self.chart[vid] = chart
        self.trunc[vid] = trunc
        if parent is None:
            self.parent[vid] = None
        else:
            length = self.height[vid] - self.height[parent]
            eid = self.graph.add_edge(parent, vid, length)
            self.parent[vid] = (parent, eid)
        return vid

    def children(self, vid):
        out = []
        for w, pe in self.parent.items():
            if pe and pe[0] == vid:
                out.append((w, pe[1]))
        return out

    def chart_param(self, vid):
        return ChartParam(self.chart[vid], self.trunc[vid], self.height[vid])

    def point_in_chart(self, point, chart):
        if chart == FINITE:
            if is_infinity(point):
                return None
            return point
        if is_infinity(point):
            return PadicElem.zero(self.tower)
        if point.is_zero():
            return None
        return point.inverse()

    # -- queries ------------------------------------------------------------------

    def place_point(self, point, refine=False):
        """Reduction slot (vertex, coordinate) of an arbitrary point.

        Without refinement this is the deepest vertex whose address prefixes
        the point's expansion.  With refine=True a point diverging in the
        interior of an edge splits that edge with a new weight-0 vertex at
        the divergence height."""
        chart = FINITE
        if is_infinity(point) or (not point.is_zero() and point.val() < 0):
            chart = INFINITE
        coord = self.point_in_chart(point, chart)
        vid = self.root
        while True:
            descend = None
            for w, eid in self.children(vid):
                if self.chart[w] != chart:
                    continue
                agree = _agreement(coord, self.trunc[w])
                if agree is INF or agree >= self.height[w]:
                    descend = w
                    break
                base = Fraction(0) if (vid == self.root and chart == INFINITE) \
                    else self.height[vid]
                if agree > base:
                    # diverges inside this edge
                    if refine:
                        mid = self._split_edge(vid, w, eid, agree, chart)
                        return mid, self.chart_param(mid).coordinate_of(coord)
                    if vid == self.root and chart == INFINITE:
                        return self.root, INFTY
                    return vid, self.chart_param(vid).coordinate_of(coord)
            if descend is None:
                break
            vid = descend
        if vid == self.root and chart == INFINITE:
            return self.root, INFTY
        return vid, self.chart_param(vid).coordinate_of(coord)

    def reduction_vertex(self, point):
        """Spec form of place_point: never mutates the tree."""
        return self.place_point(point, refine=False)

    def _split_edge(self, parent_v, child_v, eid, height, chart):
        g = self.graph
        a, b, _l = g.edges[eid]
        del g.edges[eid]
        mid = self.new_vertex(height, chart,
                              self.trunc[child_v].truncation_below(height),
                              parent=parent_v)
        # reattach the child below the new vertex
        eid2 = g.add_edge(mid, child_v, self.height[child_v] - height)
        self.parent[child_v] = (mid, eid2)
        return mid

    def grow_child(self, vid, cluster_points):
        """Blow up a shared coordinate slot: new child at the cluster's split
        height hosting the given chart points."""
        chart = self.chart[vid]
        if vid == self.root and all(
                is_infinity(p) or (not p.is_zero() and p.val() < 0)
                for p in cluster_points):
            chart = INFINITE
        coords = [self.point_in_chart(p, chart) for p in cluster_points]
        h = min(_agreement(a, b) for i, a in enumerate(coords)
                for b in coords[i + 1:])
        if h is INF:
            raise DuplicatePoint("cluster contains equal points")
        rep = next((c for c in coords if not c.is_zero()), coords[0])
        child = self.new_vertex(h, chart, rep.truncation_below(h), parent=vid)
        return child

    def __repr__(self):
        return f"SeparatingTree({self.graph!r}, height<= {self.sep_height})"

    def to_json_obj(self):
        obj = self.graph.to_json_obj()
        for v in obj["vertices"]:
            vid = v["id"]
            v["height"] = str(self.height[vid])
            v["chart"] = self.chart[vid]
        obj["reduction"] = {
            str(i): {"vertex": vid, "coord": repr(coord)}
            for i, (vid, coord) in sorted(self.reduction.items())}
        return obj


def _agreement(a, b):
    """Valuation of the difference of two chart points (INF if equal)."""
    d = a - b
    if d.is_zero():
        if d.prec is INF:
            return INF
        raise InsufficientPrecision(
            "points agree to full precision; cannot separate")
    return d.val()


def separate(points, tower):
    """Build the separating tree of a finite marked set (series or INFTY)."""
    pts = list(points)
    # pairwise distinctness check
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            a, b = pts[i], pts[j]
            if is_infinity(a) and is_infinity(b):
                raise DuplicatePoint("infinity marked twice")
            if is_infinity(a) or is_infinity(b):
                continue
            d = a - b
            if d.is_zero():
                if d.prec is INF:
                    raise DuplicatePoint("two marked points are equal")
                raise InsufficientPrecision(
                    "two marked points agree within precision")
    tree = SeparatingTree(tower)
    tree.points = pts
    root = tree.new_vertex(0, FINITE, PadicElem.zero(tower))
    tree.root = root

    finite = [(i, p) for i, p in enumerate(pts)
              if not is_infinity(p) and (p.is_zero() or p.val() >= 0)]
    infinite = [(i, p) for i, p in enumerate(pts)
                if is_infinity(p) or (not p.is_zero() and p.val() < 0)]

    sep = [Fraction(0)]

    def build(chart, parent_vid, base_height, members):
        # members: list of (idx, chart-coordinate PadicElem)
        groups = {}
        for idx, coord in members:
            key = _digit_key(coord, base_height, tower)
            groups.setdefault(key, []).append((idx, coord))
        for key, group in sorted(groups.items()):
            if len(group) == 1:
                idx, coord = group[0]
                cp = ChartParam(chart, tree.trunc[parent_vid], base_height)
                tree.reduction[idx] = (parent_vid, cp.coordinate_of(coord))
                continue
            h = min(_agreement(g1, g2) for a, (i1, g1) in enumerate(group)
                    for (i2, g2) in group[a + 1:])
            sep[0] = max(sep[0], h)
            child = tree.new_vertex(h, chart,
                                    group[0][1].truncation_below(h),
                                    parent=parent_vid)
            build(chart, child, h, group)

    build(FINITE, root, Fraction(0), [(i, p) for i, p in finite])

    if infinite:
        coords = [(i, tree.point_in_chart(p, INFINITE)) for i, p in infinite]
        if len(coords) == 1:
            tree.reduction[coords[0][0]] = (root, INFTY)
        else:
            h = min(_agreement(a, b) for (i1, a) in coords
                    for (i2, b) in coords if i1 < i2)
            sep[0] = max(sep[0], h)
            child = tree.new_vertex(h, INFINITE,
                                    coords[0][1].truncation_below(h),
                                    parent=root)
            build(INFINITE, child, h, coords)
    tree.sep_height = sep[0]
    return tree


def _digit_key(coord, height, tower):
    """Hashable key for the residue digit of a chart point at a height."""
    shifted = (coord - coord.truncation_below(height)).shift(-height)
    digit = shifted.reduce()
    c = tower.compress(digit)
    return (c.deg, c.coeffs)


def attach_point_leaves(tree, leaf_length=Fraction(1), only_indices=None):
    """Give marked points their own weight-0 leaf components.

    only_indices restricts which marked points gain leaves (None = all
    finite marked points)."""
    leaf_length = Fraction(leaf_length)
    for idx, point in enumerate(tree.points):
        if only_indices is not None and idx not in only_indices:
            continue
        if is_infinity(point):
            continue
        vid, coord = tree.reduction[idx]
        if coord is INFTY:
            continue
        chart = tree.chart[vid]
        cpt = tree.point_in_chart(point, chart)
        h = tree.height[vid] + leaf_length
        leaf = tree.new_vertex(h, chart, cpt.truncation_below(h), parent=vid)
        cp = tree.chart_param(leaf)
        tree.reduction[idx] = (leaf, cp.coordinate_of(cpt))
    return tree
