"""Weighted metric graphs: Laplacians, Jacobians, refinements, quotients."""

from __future__ import annotations

import json
from fractions import Fraction

from .errors import (Disconnected, InternalInconsistency, LengthMismatch,
                     LoopsForbidden, NotAutomorphism, NotPrincipal, TooLarge)


def _lcm(a, b):
    g = a
    x = b
    while x:
        g, x = x, g % x
    return a * b // g


class MetricGraph:
    """Vertices carry nonnegative integer weights, edges positive rational
    lengths.  Parallel edges and loops are storable; Laplacian ops reject
    loops."""

    def __init__(self):
        self.vweight = {}
        self.vlabel = {}
        self.edges = {}      # eid -> (u, v, Fraction length)
        self._next_v = 0
        self._next_e = 0

    # -- construction -------------------------------------------------------

    def add_vertex(self, weight=0, label=None, vid=None):
        if vid is None:
            vid = self._next_v
        self._next_v = max(self._next_v, vid + 1)
        self.vweight[vid] = int(weight)
        if label is not None:
            self.vlabel[vid] = label
        return vid

    def add_edge(self, u, v, length=1, eid=None):
        length = Fraction(length)
        if length <= 0:
            raise ValueError("edge length must be positive")
        if u not in self.vweight or v not in self.vweight:
            raise ValueError("dangling edge endpoint")
        if eid is None:
            eid = self._next_e
        self._next_e = max(self._next_e, eid + 1)
        self.edges[eid] = (u, v, length)
        return eid

    def copy(self):
        g = MetricGraph()
        g.vweight = dict(self.vweight)
        g.vlabel = dict(self.vlabel)
        g.edges = dict(self.edges)
        g._next_v = self._next_v
        g._next_e = self._next_e
        return g

    # -- basic queries ----------------------------------------------------------

    def vertices(self):
        return list(self.vweight)

    def num_vertices(self):
        return len(self.vweight)

    def num_edges(self):
        return len(self.edges)

    def incident(self, v):
        out = []
        for eid, (a, b, _l) in self.edges.items():
            if a == v or b == v:
                out.append(eid)
        return out

    def valence(self, v):
        n = 0
        for a, b, _l in self.edges.values():
            if a == v:
                n += 1
            if b == v:
                n += 1
        return n

    def neighbors(self, v):
        out = set()
        for a, b, _l in self.edges.values():
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return out

    def has_loops(self):
        return any(a == b for a, b, _l in self.edges.values())

    def is_connected(self):
        if not self.vweight:
            return True
        seen = set()
        stack = [next(iter(self.vweight))]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.neighbors(v))
        return len(seen) == len(self.vweight)

    def length_of(self, eid):
        return self.edges[eid][2]

    def total_length(self):
        return sum(l for _a, _b, l in self.edges.values())

    # -- serialization ----------------------------------------------------------

    def to_json_obj(self):
        vs = [{"id": v, "weight": self.vweight[v],
               **({"label": self.vlabel[v]} if v in self.vlabel else {})}
              for v in sorted(self.vweight)]
        es = [{"id": e, "from": self.edges[e][0], "to": self.edges[e][1],
               "length": f"{self.edges[e][2].numerator}/{self.edges[e][2].denominator}"}
              for e in sorted(self.edges)]
        return {"vertices": vs, "edges": es}

    @classmethod
    def from_json_obj(cls, obj):
        g = cls()
        for v in obj["vertices"]:
            g.add_vertex(v.get("weight", 0), v.get("label"), vid=v["id"])
        for e in obj["edges"]:
            g.add_edge(e["from"], e["to"], Fraction(e["length"]), eid=e["id"])
        return g

    def to_dot(self, name="G"):
        lines = [f"graph {name} {{"]
        for v in sorted(self.vweight):
            lines.append(f'  v{v} [label="{v} (g={self.vweight[v]})"];')
        for e in sorted(self.edges):
            a, b, l = self.edges[e]
            lines.append(f'  v{a} -- v{b} [label="{l}"];')
        lines.append("}")
        return "\n".join(lines)

    def __repr__(self):
        return (f"MetricGraph(V={self.num_vertices()}, E={self.num_edges()}, "
                f"weights={sorted(self.vweight.values(), reverse=True)})")


# ---------------------------------------------------------------------------
# divisors and potentials


class GraphDivisor(dict):
    """vertex -> int, componentwise arithmetic."""

    def degree(self):
        return sum(self.values())

    def __add__(self, other):
        out = GraphDivisor(self)
        for v, c in other.items():
            out[v] = out.get(v, 0) + c
        return GraphDivisor({v: c for v, c in out.items() if c})

    def __sub__(self, other):
        return self + GraphDivisor({v: -c for v, c in other.items()})

    def scaled(self, k):
        return GraphDivisor({v: k * c for v, c in self.items() if k * c})


class JacobianStructure:
    def __init__(self, order, factors):
        self.order = order
        self.factors = list(factors)

    def __repr__(self):
        return f"Jacobian(order={self.order}, factors={self.factors})"


# ---------------------------------------------------------------------------
# core invariants


def betti(g):
    if not g.is_connected():
        raise Disconnected("betti number needs a connected graph")
    return g.num_edges() - g.num_vertices() + 1


def total_genus(g):
    return betti(g) + sum(g.vweight.values())


# ---------------------------------------------------------------------------
# Laplacian machinery


def apply_laplacian(g, phi):
    """Divisor of a potential on a graph with unit lengths everywhere."""
    if g.has_loops():
        raise LoopsForbidden("Laplacian on a graph with loops")
    out = {}
    for a, b, l in g.edges.values():
        if l != 1:
            raise ValueError("apply_laplacian needs the unit refinement")
        da = phi[a] - phi[b]
        out[a] = out.get(a, 0) + da
        out[b] = out.get(b, 0) - da
    for v in out.values():
        if Fraction(v).denominator != 1:
            from .errors import NonIntegralSlope
            raise NonIntegralSlope("potential has non-integer slopes")
    return GraphDivisor({v: int(c) for v, c in out.items() if c})


def solve_laplacian_q(g, div, anchor=None):
    """Rational potential with weighted Laplacian equal to div; anchored at 0.

    The weighted Laplacian at v is sum over edges e=vw of (phi(v)-phi(w))/l(e),
    which matches the unit-refinement Laplacian with linear interpolation.
    """
    if g.has_loops():
        raise LoopsForbidden("Laplacian on a graph with loops")
    if not g.is_connected():
        raise Disconnected("Laplacian solve needs a connected graph")
    deg = sum(div.values())
    if deg != 0:
        raise ValueError(f"divisor has degree {deg}, expected 0")
    vs = sorted(g.vweight)
    if anchor is None:
        anchor = vs[0]
    idx = {v: i for i, v in enumerate(vs)}
    n = len(vs)
    mat = [[Fraction(0)] * n for _ in range(n)]
    for a, b, l in g.edges.values():
        w = Fraction(1) / l
        ia, ib = idx[a], idx[b]
        mat[ia][ia] += w
        mat[ib][ib] += w
        mat[ia][ib] -= w
        mat[ib][ia] -= w
    rhs = [Fraction(div.get(v, 0)) for v in vs]
    # pin the anchor row: phi(anchor) = 0
    ai = idx[anchor]
    mat[ai] = [Fraction(0)] * n
    mat[ai][ai] = Fraction(1)
    rhs[ai] = Fraction(0)
    sol = _solve_rational(mat, rhs)
    if sol is None:
        raise InternalInconsistency("Laplacian system unexpectedly singular")
    return {v: sol[idx[v]] for v in vs}


def _solve_rational(mat, rhs):
    n = len(mat)
    aug = [row[:] + [r] for row, r in zip(mat, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]


def unit_scale(g):
    """lcm of length denominators: the scaling onto an integer grid."""
    s = 1
    for _a, _b, l in g.edges.values():
        s = _lcm(s, l.denominator)
    return s


def solve_laplacian(g, div, anchor=None):
    """Integral potential on the maximal unit refinement; NotPrincipal if the
    class is nontrivial in the tropical Jacobian."""
    phi = solve_laplacian_q(g, div, anchor)
    s = unit_scale(g)
    for v, value in phi.items():
        if (value * s).denominator != 1:
            raise NotPrincipal("no integral potential exists")
    for a, b, l in g.edges.values():
        slope = (phi[a] - phi[b]) / l
        if (slope / s).denominator != 1:
            raise NotPrincipal("slope not integral on the unit refinement")
    return phi


def edge_slope(g, phi, eid, at=None):
    """Slope of the potential along an edge per unit length, measured away
    from the endpoint `at` (defaults to the lower-id endpoint)."""
    a, b, l = g.edges[eid]
    if at is None:
        at = a
    if at == a:
        return (phi[b] - phi[a]) / l
    if at == b:
        return (phi[a] - phi[b]) / l
    raise ValueError("vertex not on edge")


# ---------------------------------------------------------------------------
# Smith normal form over the integers (used for Jacobian structure)


def smith_normal_form(mat):
    """Diagonal elementary divisors of an integer matrix (in-place copy)."""
    a = [row[:] for row in mat]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    divisors = []
    r = c = 0
    while r < rows and c < cols:
        # find a pivot with minimal nonzero absolute value
        piv = None
        best = None
        for i in range(r, rows):
            for j in range(c, cols):
                if a[i][j] != 0 and (best is None or abs(a[i][j]) < best):
                    best = abs(a[i][j])
                    piv = (i, j)
        if piv is None:
            break
        pi, pj = piv
        a[r], a[pi] = a[pi], a[r]
        for row in a:
            row[c], row[pj] = row[pj], row[c]
        # clear row and column
        done = False
        while not done:
            done = True
            for i in range(r + 1, rows):
                if a[i][c]:
                    q = a[i][c] // a[r][c]
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    if a[i][c]:
                        a[r], a[i] = a[i], a[r]
                        done = False
            for j in range(c + 1, cols):
                col_val = a[r][j]
                if col_val:
                    q = col_val // a[r][c]
                    for i in range(rows):
                        a[i][j] -= q * a[i][c]
                    if a[r][j]:
                        for i in range(rows):
                            a[i][c], a[i][j] = a[i][j], a[i][c]
                        done = False
        pivot = abs(a[r][c])
        # ensure divisibility against the remaining block
        fixed = False
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                if a[i][j] % pivot:
                    a[r] = [x + y for x, y in zip(a[r], a[i])]
                    fixed = True
                    break
            if fixed:
                break
        if fixed:
            continue
        divisors.append(pivot)
        r += 1
        c += 1
    return divisors


def jacobian(g, anchor=None):
    """Tropical Jacobian structure on the scaled unit refinement."""
    if g.has_loops():
        raise LoopsForbidden("Jacobian of a graph with loops")
    if not g.is_connected():
        raise Disconnected("Jacobian needs a connected graph")
    refined = unit_refinement(g)
    vs = sorted(refined.vweight)
    if len(vs) == 1:
        return JacobianStructure(1, [])
    idx = {v: i for i, v in enumerate(vs)}
    n = len(vs)
    lap = [[0] * n for _ in range(n)]
    for a, b, _l in refined.edges.values():
        ia, ib = idx[a], idx[b]
        lap[ia][ia] += 1
        lap[ib][ib] += 1
        lap[ia][ib] -= 1
        lap[ib][ia] -= 1
    k = idx[anchor] if anchor in idx else 0
    red = [[lap[i][j] for j in range(n) if j != k] for i in range(n) if i != k]
    divisors = smith_normal_form(red)
    order = 1
    for d in divisors:
        order *= d
    factors = [d for d in divisors if d != 1]
    return JacobianStructure(order, factors)


def spanning_tree_count(g):
    """Brute-force spanning tree count (oracle, small graphs only)."""
    from itertools import combinations
    if not g.is_connected():
        raise Disconnected("spanning trees of a disconnected graph")
    refined = unit_refinement(g)
    eids = list(refined.edges)
    n = refined.num_vertices()
    count = 0
    for subset in combinations(eids, n - 1):
        seen = {}
        def find(x):
            while seen.get(x, x) != x:
                seen[x] = seen.get(seen[x], seen[x])
                x = seen[x]
            return x
        ok = True
        for e in subset:
            a, b, _l = refined.edges[e]
            ra, rb = find(a), find(b)
            if ra == rb:
                ok = False
                break
            seen[ra] = rb
        if ok:
            count += 1
    return count


# ---------------------------------------------------------------------------
# refinement and pruning


def refine(g, eid, parts):
    """Replace an edge by a path of weight-0 vertices with the given lengths."""
    parts = [Fraction(p) for p in parts]
    a, b, l = g.edges[eid]
    if sum(parts) != l:
        raise LengthMismatch(f"parts sum to {sum(parts)}, edge has length {l}")
    if any(p <= 0 for p in parts):
        raise ValueError("refinement parts must be positive")
    out = g.copy()
    del out.edges[eid]
    cur = a
    new_vertices = []
    for p in parts[:-1]:
        nv = out.add_vertex(0)
        new_vertices.append(nv)
        out.add_edge(cur, nv, p)
        cur = nv
    out.add_edge(cur, b, parts[-1])
    return out, new_vertices


def unit_refinement(g):
    """Scale lengths onto the integer grid and subdivide everything to 1."""
    s = unit_scale(g)
    out = g.copy()
    for eid in list(out.edges):
        a, b, l = out.edges[eid]
        n = int(l * s)
        if n == 1:
            out.edges[eid] = (a, b, Fraction(1))
            continue
        del out.edges[eid]
        cur = a
        for _ in range(n - 1):
            nv = out.add_vertex(0)
            out.add_edge(cur, nv, 1)
            cur = nv
        out.add_edge(cur, b, 1)
    return out


def prune_leaves(g):
    """Iteratively delete valence-1 weight-0 vertices; idempotent output."""
    out = g.copy()
    changed = True
    while changed:
        changed = False
        for v in list(out.vweight):
            if out.vweight[v] == 0 and out.valence(v) == 1 and out.num_vertices() > 1:
                for e in out.incident(v):
                    del out.edges[e]
                del out.vweight[v]
                out.vlabel.pop(v, None)
                changed = True
    # a fully collapsed tree ends as a single vertex (possibly weight 0)
    if out.num_vertices() > 1:
        isolated = [v for v in out.vweight
                    if out.valence(v) == 0 and out.vweight[v] == 0]
        if len(isolated) == out.num_vertices():
            for v in isolated[1:]:
                del out.vweight[v]
                out.vlabel.pop(v, None)
    return out


def suppress_degree_two(g):
    """Merge weight-0 valence-2 vertices into single edges (metric identity)."""
    out = g.copy()
    changed = True
    while changed:
        changed = False
        for v in list(out.vweight):
            if out.vweight[v] != 0 or v in out.vlabel:
                continue
            inc = out.incident(v)
            if len(inc) != 2 or out.valence(v) != 2:
                continue
            e1, e2 = inc
            a1, b1, l1 = out.edges[e1]
            a2, b2, l2 = out.edges[e2]
            if a1 == b1 or a2 == b2:
                continue
            u = a1 if b1 == v else b1
            w = a2 if b2 == v else b2
            if u == v or w == v:
                continue
            del out.edges[e1]
            del out.edges[e2]
            del out.vweight[v]
            if u == w:
                # collapsing a cycle through v into a loop
                out.add_edge(u, w, l1 + l2)
            else:
                out.add_edge(u, w, l1 + l2)
            changed = True
    return out


def canonical_metric(g):
    """Leafless + suppressed representative used for golden comparisons."""
    return suppress_degree_two(prune_leaves(g))


# ---------------------------------------------------------------------------
# quotients


def quotient(g, vertex_perms, edge_perms, orbit_weights=None,
             scheme_lengths=True):
    """Quotient by a group of automorphisms given as permutation dicts.

    vertex_perms/edge_perms: lists (one entry per group element, identity
    included) of dicts.  Edge behavior: an orbit whose stabilizer contains an
    endpoint-swapping element becomes a smooth point (edge dropped, endpoints
    already identified); otherwise the image length is the representative's
    length times the stabilizer order (scheme-quotient convention) or carried
    verbatim.
    """
    n = len(vertex_perms)
    if len(edge_perms) != n:
        raise NotAutomorphism("vertex and edge actions differ in size")
    for vp, ep in zip(vertex_perms, edge_perms):
        for eid, (a, b, l) in g.edges.items():
            ia = vp.get(a, a)
            ib = vp.get(b, b)
            img = ep.get(eid, eid)
            if img not in g.edges:
                raise NotAutomorphism("edge image missing")
            a2, b2, l2 = g.edges[img]
            if {ia, ib} != {a2, b2} or l2 != l:
                raise NotAutomorphism("action does not preserve the graph")
    # vertex orbits
    vorbit = {}
    for v in g.vweight:
        orbit = frozenset(vp.get(v, v) for vp in vertex_perms)
        vorbit[v] = orbit
    orbits = sorted({o for o in vorbit.values()}, key=lambda o: min(o))
    out = MetricGraph()
    omap = {}
    for i, orbit in enumerate(orbits):
        rep = min(orbit)
        w = orbit_weights[orbit] if orbit_weights and orbit in orbit_weights \
            else (orbit_weights.get(rep) if orbit_weights and rep in orbit_weights
                  else g.vweight[rep])
        vid = out.add_vertex(w)
        for v in orbit:
            omap[v] = vid
    seen = set()
    for eid, (a, b, l) in g.edges.items():
        if eid in seen:
            continue
        orbit_edges = set()
        swaps = False
        for vp, ep in zip(vertex_perms, edge_perms):
            img = ep.get(eid, eid)
            orbit_edges.add(img)
            if img == eid:
                ia, ib = vp.get(a, a), vp.get(b, b)
                if (ia, ib) == (b, a) and a != b:
                    swaps = True
        seen |= orbit_edges
        stab = sum(1 for ep in edge_perms if ep.get(eid, eid) == eid)
        if swaps:
            continue  # ordinary double point becomes a smooth point
        length = l * stab if scheme_lengths else l
        out.add_edge(omap[a], omap[b], length)
    return out, omap


# ---------------------------------------------------------------------------
# isomorphism


def _invariant_colors(g):
    color = {v: (g.vweight[v],) for v in g.vweight}
    for _ in range(max(2, g.num_vertices())):
        newc = {}
        for v in g.vweight:
            sig = []
            for eid in g.incident(v):
                a, b, l = g.edges[eid]
                other = b if a == v else a
                if a == b:
                    sig.append((1, l, -1))
                else:
                    sig.append((0, l, color[other]))
            newc[v] = (color[v], tuple(sorted(sig, key=repr)))
        # compress
        values = sorted(set(newc.values()), key=repr)
        rank = {val: i for i, val in enumerate(values)}
        nxt = {v: (g.vweight[v], rank[newc[v]]) for v in g.vweight}
        if len(set(nxt.values())) == len(set(color.values())):
            color = nxt
            break
        color = nxt
    return color


def _edge_multiset(g, u, v):
    out = []
    for a, b, l in g.edges.values():
        if {a, b} == {u, v} or (u == v and a == b == u):
            out.append(l)
    return sorted(out)


def iso_check(g1, g2):
    """Exact isomorphism of weighted metric graphs (<= 64 edges each)."""
    if g1.num_edges() > 64 or g2.num_edges() > 64:
        raise TooLarge("iso_check bound is 64 edges")
    if (g1.num_vertices() != g2.num_vertices()
            or g1.num_edges() != g2.num_edges()):
        return False
    if sorted(g1.vweight.values()) != sorted(g2.vweight.values()):
        return False
    if sorted(l for _a, _b, l in g1.edges.values()) != \
       sorted(l for _a, _b, l in g2.edges.values()):
        return False
    c1 = _invariant_colors(g1)
    c2 = _invariant_colors(g2)
    if sorted(c1.values()) != sorted(c2.values()):
        return False
    vs1 = sorted(g1.vweight, key=lambda v: (c1[v], v))
    cand = {v: [w for w in g2.vweight if c2[w] == c1[v]] for v in vs1}

    assignment = {}
    used = set()

    def backtrack(i):
        if i == len(vs1):
            return True
        v = vs1[i]
        for w in cand[v]:
            if w in used:
                continue
            ok = True
            for prev in vs1[:i]:
                if _edge_multiset(g1, v, prev) != _edge_multiset(g2, w, assignment[prev]):
                    ok = False
                    break
            if ok and _edge_multiset(g1, v, v) != _edge_multiset(g2, w, w):
                ok = False
            if ok:
                assignment[v] = w
                used.add(w)
                if backtrack(i + 1):
                    return True
                del assignment[v]
                used.discard(w)
        return False

    return backtrack(0)


def canonical_relabel(g):
    """Deterministic relabeling 0..n-1 by invariant color then structure."""
    color = _invariant_colors(g)
    order = sorted(g.vweight, key=lambda v: (color[v], v))
    vmap = {v: i for i, v in enumerate(order)}
    out = MetricGraph()
    for v in order:
        out.add_vertex(g.vweight[v], g.vlabel.get(v))
    edges = sorted(((min(vmap[a], vmap[b]), max(vmap[a], vmap[b]), l)
                    for a, b, l in g.edges.values()))
    for a, b, l in edges:
        out.add_edge(a, b, l)
    return out


def graph_to_json(g):
    return json.dumps(g.to_json_obj(), sort_keys=True)


def graph_from_json(text):
    return MetricGraph.from_json_obj(json.loads(text))
