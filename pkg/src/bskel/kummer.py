"""Covering data, twisting data and graph assembly for cyclic covers.

A cover z^n = f over a base complex is reconstructed from three layers of
data: per-edge inertia orders (from Laplacian slopes), per-vertex
decomposition orders (splitting of the reduced function), and, when the
split unramified region contains cycles, residue root values pairing the
sheets across nodes.  Vertices and edges of the cover are modeled as
cosets of the inertia/decomposition subgroups of Z/n with the cyclic
action acting by +1 on labels.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import (InconsistentCover, InconsistentData, InternalInconsistency,
                     MissingTwist, UnsupportedComponent)
from .graph import (GraphDivisor, MetricGraph, edge_slope, solve_laplacian_q,
                    total_genus)
from .series import INFTY, is_infinity
from .vpoly import pi_content


def _gcd(a, b):
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


def _lcm(a, b):
    return a * b // _gcd(a, b) if a and b else max(a, b)


def _is_prime_int(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def edge_inertia(n, slope):
    """Inertia order of edges above an edge with integer potential slope."""
    return n // _gcd(n, int(slope))


def subdivision_inertia(inertia, i):
    """Inertia order of the i-th subdivision component below an edge of the
    given inertia order."""
    return inertia // _gcd(inertia, i)


def global_ramification_lcm(vertical_inertias):
    """Base-change degree clearing all vertical ramification."""
    e = 1
    for m in vertical_inertias:
        e = _lcm(e, int(m))
    return e


# ---------------------------------------------------------------------------
# slot keys: canonical hashable residue coordinates


def coord_key(coord):
    if coord is INFTY or is_infinity(coord):
        return ("inf",)
    c = coord.tower.compress(coord)
    return ("c", c.deg, c.coeffs)


# ---------------------------------------------------------------------------
# base complexes


class BaseVertex:
    """Function-field data of one base component."""

    def __init__(self, genus=0, kind="line", data=None):
        self.genus = genus
        self.kind = kind          # "line" | "hyper"
        self.data = data or {}
        self.points = []          # (tag, slot_key, mult) pushed divisor points
        self.edge_at = {}         # eid -> slot_key

    def point_divisor(self):
        agg = {}
        for _tag, key, mult in self.points:
            agg[key] = agg.get(key, 0) + mult
        return agg


class BaseComplex:
    """Metric graph plus per-vertex component models and divisor pushes."""

    def __init__(self, graph, tower):
        self.graph = graph
        self.tower = tower
        self.model = {v: BaseVertex() for v in graph.vweight}
        self.anchor = min(graph.vweight) if graph.vweight else None

    def push(self, vid, coord, mult, tag=None):
        self.model[vid].points.append((tag, coord_key(coord), mult))

    def register_edge(self, eid, vid, coord):
        self.model[vid].edge_at[eid] = coord_key(coord)

    def divisor(self):
        out = {}
        for vid, m in self.model.items():
            d = sum(mult for _t, _k, mult in m.points)
            if d:
                out[vid] = d
        return GraphDivisor(out)

    def solve_potential(self, anchor_value=Fraction(0)):
        div = self.divisor()
        phi = solve_laplacian_q(self.graph, div, anchor=self.anchor)
        return {v: val + Fraction(anchor_value) for v, val in phi.items()}


def tree_base(tree):
    """Base complex over a separating tree: every component is a line."""
    base = BaseComplex(tree.graph, tree.tower)
    base.anchor = tree.root
    for vid in tree.graph.vweight:
        parent = tree.parent.get(vid)
        if parent is not None:
            pvid, eid = parent
            # this edge enters the child at chart infinity ...
            base.register_edge(eid, vid, INFTY)
            # ... and the parent at the child's branch coordinate
            branch = tree.chart_param(pvid)
            if pvid == tree.root and tree.chart[vid] == "infinite":
                base.register_edge(eid, pvid, INFTY)
            else:
                cpt = tree.trunc[vid]
                base.register_edge(eid, pvid, branch.coordinate_of(cpt))
    return base


# ---------------------------------------------------------------------------
# divisors of rational functions on the base


class TropicalDivisor:
    def __init__(self, divisor, provenance):
        self.divisor = divisor          # GraphDivisor
        self.provenance = provenance    # list of (tag, vid, coord_key, mult)

    def __repr__(self):
        return f"TropicalDivisor({dict(self.divisor)})"


def push_function_divisor(base, tree, f, target_prec=48, refine=True,
                          tag_prefix="f"):
    """Push div(f) = zeros - deg * (infinity) onto the tree's base complex."""
    from .vpoly import roots_padic
    prov = []
    if f.degree() >= 1:
        normalized = f * f.coeffs[-1].inverse()
        for i, (root, mult) in enumerate(roots_padic(normalized, target_prec)):
            vid, coord = tree.place_point(root, refine=refine)
            base.push(vid, coord, mult, tag=(tag_prefix, "root", i))
            prov.append(((tag_prefix, "root", i), vid, coord_key(coord), mult))
    if f.degree() > 0:
        vid, coord = tree.place_point(INFTY, refine=False)
        base.push(vid, coord, -f.degree(), tag=(tag_prefix, "pole_inf"))
        prov.append(((tag_prefix, "pole_inf"), vid, coord_key(coord),
                     -f.degree()))
    return TropicalDivisor(base.divisor(), prov)


def laplacian_of_f(base, f):
    """Anchored potential: vertical valuations of f at every component."""
    return base.solve_potential(anchor_value=pi_content(f))


# ---------------------------------------------------------------------------
# covering data


class VertexCover:
    def __init__(self, split, count, genus_above, local):
        self.split = split              # decomposition order r = |D_v|
        self.count = count              # vertices above
        self.genus_above = genus_above  # genus of each component above
        self.local = local              # slot_key -> local inertia order

    def __repr__(self):
        return (f"VertexCover(r={self.split}, count={self.count}, "
                f"g={self.genus_above})")


class CoveringData:
    def __init__(self, n):
        self.n = n
        self.edge = {}     # eid -> inertia order
        self.vertex = {}   # vid -> VertexCover

    def edges_above(self, eid):
        return self.n // self.edge[eid]

    def __repr__(self):
        return f"CoveringData(n={self.n}, edges={self.edge}, verts={self.vertex})"


def integer_slope(base, phi, eid, at):
    s = edge_slope(base.graph, phi, eid, at=at)
    if s.denominator != 1:
        raise InternalInconsistency(
            f"non-integral slope {s} on edge {eid}; divisor not principal "
            "on the model grid")
    return int(s)


def covering_data_cyclic(base, n, phi, splitting_tester=None):
    """Inertia/decomposition data for z^n = f with potential phi.

    splitting_tester(vid, divisor_ok) decides full splitting on positive
    genus components (torsion test); line components split automatically
    once the reduced divisor is divisible.
    """
    cov = CoveringData(n)
    g = base.graph
    for eid, (a, b, _l) in g.edges.items():
        cov.edge[eid] = edge_inertia(n, integer_slope(base, phi, eid, at=a))
    for vid, model in base.model.items():
        local = {}
        for key, mult in model.point_divisor().items():
            local[key] = n // _gcd(n, mult)
        for eid in g.incident(vid):
            key = model.edge_at.get(eid)
            if key is None:
                raise InternalInconsistency(f"edge {eid} lacks a slot on {vid}")
            local[key] = _lcm(local.get(key, 1), cov.edge[eid])
        if model.genus == 0:
            r = 1
            for m in local.values():
                r = _lcm(r, m)
        elif any(m != 1 for m in local.values()):
            # ramified somewhere: for prime degree the cover above is
            # connected, so the local orders already generate everything
            if not _is_prime_int(n):
                raise UnsupportedComponent(
                    "composite degree over a positive-genus component; "
                    "factor the covering into prime steps")
            r = 1
            for m in local.values():
                r = _lcm(r, m)
        else:
            # everywhere unramified on a positive-genus component: splitting
            # is a torsion question the caller must decide
            if splitting_tester is None:
                raise UnsupportedComponent(
                    "positive-genus component needs a splitting tester")
            r = splitting_tester(vid)
        count = n // r
        genus_above = _genus_above(model, cov, vid, r, n)
        cov.vertex[vid] = VertexCover(r, count, genus_above, local)
    return cov


def _genus_above(model, cov, vid, r, n):
    """Riemann-Hurwitz genus of each component above a base vertex."""
    two_g = r * (2 * model.genus - 2)
    agg = model.point_divisor()
    keys = set(agg) | {model.edge_at[e] for e in model.edge_at}
    for key in keys:
        m = agg.get(key, 0)
        e_here = n // _gcd(n, m) if m else 1
        for eid, ekey in model.edge_at.items():
            if ekey == key:
                e_here = _lcm(e_here, cov.edge[eid])
        if e_here > 1:
            if r % e_here:
                raise InconsistentData(
                    f"local inertia {e_here} does not divide |D_v|={r}")
            two_g += (r // e_here) * (e_here - 1)
    if two_g % 2:
        raise InconsistentData("Riemann-Hurwitz parity failure")
    gg = two_g // 2 + 1
    if gg < 0:
        raise InconsistentData("negative genus above a vertex")
    return gg


def genus_generic_fiber(n, base_genus, point_mults):
    """Genus of the covering curve from the generic branch data."""
    two_g = n * (2 * base_genus - 2)
    for m in point_mults:
        e = n // _gcd(n, m)
        if e > 1:
            two_g += (n // e) * (e - 1)
    if two_g % 2:
        raise InconsistentData("generic Riemann-Hurwitz parity failure")
    return two_g // 2 + 1


# ---------------------------------------------------------------------------
# twisting data


class TwistCocycle:
    """Residue n-th root labels of the reduced function on split vertices:
    values[(vid, eid)] = g_v(P_e)."""

    def __init__(self, n, zeta, values):
        self.n = n
        self.zeta = zeta
        self.values = dict(values)

    def offset(self, eid, v, w):
        """Label shift along edge e from the v-side to the w-side."""
        hv = self.values.get((v, eid))
        hw = self.values.get((w, eid))
        if hv is None or hw is None:
            return 0
        ratio = hv / hw
        z = ratio.tower.one()
        for j in range(self.n):
            if z == ratio:
                return j
            z = z * self.zeta
        raise InconsistentCover("twist ratio is not a root of unity")

    def gauge_multiplied(self, vid, power=1):
        vals = dict(self.values)
        for (v, e), h in list(vals.items()):
            if v == vid:
                vals[(v, e)] = h * self.zeta ** power
        return TwistCocycle(self.n, self.zeta, vals)


# ---------------------------------------------------------------------------
# cover assembly


class CoveringGraph:
    def __init__(self, cover, base, vertex_map, edge_map, dilatation, action):
        self.cover = cover
        self.base = base
        self.vertex_map = vertex_map    # cover vid -> base vid
        self.edge_map = edge_map        # cover eid -> base eid
        self.dilatation = dilatation    # cover eid -> inertia order
        self.action = action            # generator (vperm, eperm)

    def group_elements(self, order):
        """All powers of the cyclic generator as (vperm, eperm)."""
        vp = {v: v for v in self.cover.vweight}
        ep = {e: e for e in self.cover.edges}
        out = [(dict(vp), dict(ep))]
        gv, ge = self.action
        for _ in range(order - 1):
            vp = {v: gv[vp[v]] for v in vp}
            ep = {e: ge[ep[e]] for e in ep}
            out.append((dict(vp), dict(ep)))
        return out

    def check_harmonic(self, n):
        for eid in self.base.edges:
            tot = sum(self.dilatation[ce] for ce, be in self.edge_map.items()
                      if be == eid)
            if tot != n:
                raise InconsistentCover(
                    f"harmonicity fails over edge {eid}: {tot} != {n}")

    def __repr__(self):
        return f"CoveringGraph({self.cover!r} over {self.base!r})"


def assemble_cover(base_graph, n, cov, twist=None, genera=None,
                   split_regions=None):
    """Build the covering graph from covering data and optional twist values.

    base_graph: MetricGraph.  cov: CoveringData.  genera: vid -> weight of
    each component above (defaults to the covering data's genus_above).
    """
    cover = MetricGraph()
    vmap = {}
    vertex_ids = {}
    for vid in sorted(base_graph.vweight):
        vc = cov.vertex[vid]
        w = genera[vid] if genera else vc.genus_above
        ids = [cover.add_vertex(w) for _ in range(vc.count)]
        vertex_ids[vid] = ids
        for cv in ids:
            vmap[cv] = vid
    emap = {}
    dil = {}
    edge_ids = {}
    # twist offsets per (edge, endpoint)
    for eid in sorted(base_graph.edges):
        a, b, l = base_graph.edges[eid]
        m = cov.edge[eid]
        count = n // m
        off_a, off_b = 0, 0
        if twist is not None:
            off_b = twist.offset(eid, a, b)
        ids = []
        for j in range(count):
            ca = vertex_ids[a][(j + off_a) % cov.vertex[a].count]
            cb = vertex_ids[b][(j + off_b) % cov.vertex[b].count]
            ce = cover.add_edge(ca, cb, l / m)
            emap[ce] = eid
            dil[ce] = m
            ids.append(ce)
        edge_ids[eid] = ids
    if twist is None:
        # a split cycle with no cocycle cannot be attached canonically
        _check_split_cycles(base_graph, cov)
    # cyclic generator: +1 on labels
    gv = {}
    for vid, ids in vertex_ids.items():
        for i, cv in enumerate(ids):
            gv[cv] = ids[(i + 1) % len(ids)]
    ge = {}
    for eid, ids in edge_ids.items():
        for j, ce in enumerate(ids):
            ge[ce] = ids[(j + 1) % len(ids)]
    cg = CoveringGraph(cover, base_graph, vmap, emap, dil, (gv, ge))
    cg.check_harmonic(n)
    if not cover.is_connected():
        raise InconsistentCover(
            "assembled cover is disconnected; the covering curve is reducible")
    return cg


def _check_split_cycles(base_graph, cov):
    """MissingTwist when the fully split subgraph contains a cycle."""
    split_vs = {v for v, vc in cov.vertex.items() if vc.split == 1}
    split_es = {e for e, m in cov.edge.items()
                if m == 1 and base_graph.edges[e][0] in split_vs
                and base_graph.edges[e][1] in split_vs}
    # count cycles in the split subgraph
    parent = {v: v for v in split_vs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in split_es:
        a, b, _l = base_graph.edges[e]
        ra, rb = find(a), find(b)
        if ra == rb:
            raise MissingTwist(
                "fully split region contains a cycle; twist data required")
        parent[ra] = rb


# ---------------------------------------------------------------------------
# the superelliptic driver: z^n = f(x) over the projective line


def superelliptic_cover(f, n, target_prec=48, point_leaves=False,
                        leaf_length=1):
    """Skeleton of the cyclic degree-n cover of the line given by z^n = f.

    Returns (tree, CoveringData, CoveringGraph)."""
    from .septree import attach_point_leaves, separate
    from .vpoly import roots_padic
    tower = f.tower
    if f.degree() < 1:
        raise ValueError("the radicand must be nonconstant")
    monic = f * f.coeffs[-1].inverse()
    roots = roots_padic(monic, target_prec)
    marked = [r for r, _m in roots] + [INFTY]
    tree = separate(marked, tower)
    if point_leaves:
        attach_point_leaves(tree, leaf_length)
    base = tree_base(tree)
    prov = []
    for i, (root, mult) in enumerate(roots):
        vid, coord = tree.reduction[i]
        base.push(vid, coord, mult, tag=("root", i))
        prov.append((("root", i), vid, coord_key(coord), mult))
    vid, coord = tree.reduction[len(roots)]
    base.push(vid, coord, -f.degree(), tag=("pole_inf",))
    prov.append((("pole_inf",), vid, coord_key(coord), -f.degree()))
    phi = laplacian_of_f(base, f)
    cov = covering_data_cyclic(base, n, phi)
    cg = assemble_cover(tree.graph, n, cov)
    mults = [m for _r, m in roots] + [-f.degree()]
    expected = genus_generic_fiber(n, 0, mults)
    got = total_genus(cg.cover)
    if got != expected:
        raise InconsistentData(
            f"assembled genus {got} != generic-fiber genus {expected}")
    return tree, cov, cg
