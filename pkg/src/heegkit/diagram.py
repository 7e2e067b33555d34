"""Combinatorial model of partial Heegaard diagrams.

A diagram is a cell structure on a compact oriented surface, possibly with
boundary, carrying two families of curves (alpha and beta, each a union of
embedded circles and properly embedded arcs) together with X/O basepoints
assigned to complement regions.

Encoding
--------
The surface is encoded by a rotation system on darts (half-edges):

- edge ``e`` owns darts ``2*e`` and ``2*e + 1``; ``opp(d) = d ^ 1``;
- ``sigma[d]`` is the next dart counterclockwise around the vertex of ``d``,
  so vertices are the orbits of ``sigma``;
- the face to the left of ``d`` is traversed by ``phi(d) = sigma^-1(opp(d))``,
  so face boundary cycles are the orbits of ``phi``.

Every edge is labelled ``A`` (alpha), ``B`` (beta) or ``D`` (a segment of the
surface boundary).  Boundary components are ``D``-circles; each has a
distinguished side (its *cap* face cycle) that represents the hole rather
than surface interior.

Complement regions need not be disks: a *region* is a planar subsurface of
the complement, recorded as the set of face cycles bounding it.  A region
with one cycle is a disk, with two an annulus, and so on; a region with no
cycles is a closed sphere component (the empty diagram on S^2).  All regions
are planar; operations that would create a region of positive genus are
refused.  This keeps the Euler count ``V - E + sum(2 - #cycles)`` equal to
the Euler characteristic of the surface, from which genus and boundary
count are derived; they are never stored.

Basepoints live on regions, never on curves or the boundary.  Vertices are
either transverse alpha/beta intersections (4-valent, kinds alternating),
arc endpoints on the boundary (3-valent), boundary corners (2-valent, both
darts on the boundary) or markers (2-valent subdivision points of a curve).
Markers carry no geometry; they exist so that circles disjoint from
everything else still have cells.

Diagrams are immutable values: operations return new diagrams.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

ALPHA = "A"
BETA = "B"
BOUNDARY = "D"

KIND_NAMES = {ALPHA: "alpha", BETA: "beta", BOUNDARY: "boundary"}


class DiagramError(ValueError):
    """Raised when a diagram or an operation on one is structurally invalid."""


def opp(d):
    return d ^ 1


@dataclass(frozen=True)
class Curve:
    """One alpha/beta circle or arc, or one boundary circle.

    ``edges`` lists edge indices in traversal order; for a circle the order
    is cyclic, for an arc it runs from one boundary endpoint to the other.
    """

    index: int
    kind: str
    is_circle: bool
    edges: tuple
    darts: tuple  # forward dart of each edge, in traversal order


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: tuple
    genus: int = 0
    boundary_count: int = 0
    n_vertices: int = 0
    n_edges: int = 0
    n_faces: int = 0
    curve_census: dict = field(default_factory=dict, hash=False, compare=False)
    basepoint_census: dict = field(default_factory=dict, hash=False, compare=False)

    def raise_if_failed(self):
        if not self.ok:
            raise DiagramError("; ".join(self.errors))


class Diagram:
    """Immutable partial Heegaard diagram.

    Parameters
    ----------
    sigma : sequence of int
        Rotation system; ``sigma[d]`` is the next dart counterclockwise at
        the vertex of ``d``.
    edge_kind : str
        One character per edge, from ``"ABD"``.
    regions : iterable of iterable of int
        Each region is given by a set of darts, one (any one) on each of its
        boundary face cycles.  A region given by an empty set is a bare
        sphere component.
    holes : iterable of int
        One dart on the cap side of each boundary circle.
    basepoints : iterable of (str, int)
        Pairs ``(label, region_index)`` with label ``"X"`` or ``"O"``.
        Region indices refer to the canonical region order of the built
        diagram (regions sorted by their smallest face representative).
    """

    __slots__ = (
        "sigma",
        "edge_kind",
        "regions",
        "holes",
        "basepoints",
        "_sigma_inv",
        "_face_rep",
        "_faces",
        "_vertex_rep",
        "_vertices",
        "_curves",
        "_edge_curve",
        "_canonical",
    )

    def __init__(self, sigma, edge_kind, regions, holes=(), basepoints=()):
        sigma = tuple(sigma)
        n = len(sigma)
        if n % 2:
            raise DiagramError("odd number of darts")
        if sorted(sigma) != list(range(n)):
            raise DiagramError("sigma is not a permutation of the darts")
        if len(edge_kind) != n // 2:
            raise DiagramError("edge_kind length does not match edge count")
        for k in edge_kind:
            if k not in "ABD":
                raise DiagramError("unknown edge kind %r" % k)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "edge_kind", str(edge_kind))

        inv = [0] * n
        for d, s in enumerate(sigma):
            inv[s] = d
        object.__setattr__(self, "_sigma_inv", tuple(inv))

        # face cycles (orbits of phi) and their canonical representatives
        face_rep = [-1] * n
        faces = []
        for d0 in range(n):
            if face_rep[d0] >= 0:
                continue
            orbit = []
            d = d0
            while face_rep[d] < 0:
                face_rep[d] = d0
                orbit.append(d)
                d = inv[d ^ 1]
            if d != d0:
                raise DiagramError("face traversal escaped its orbit")
            faces.append(tuple(orbit))
        # canonical rep = min dart of orbit
        remap = {}
        for orbit in faces:
            m = min(orbit)
            for d in orbit:
                remap[face_rep[d]] = m
        face_rep = [remap[r] for r in face_rep]
        faces = {min(orbit): tuple(orbit) for orbit in faces}
        object.__setattr__(self, "_face_rep", tuple(face_rep))
        object.__setattr__(self, "_faces", faces)

        # vertices: orbits of sigma, keyed by min dart, stored min-first
        vertex_rep = [-1] * n
        vertices = {}
        for d0 in range(n):
            if vertex_rep[d0] >= 0:
                continue
            orbit = []
            d = d0
            while True:
                orbit.append(d)
                d = sigma[d]
                if d == d0:
                    break
            m = min(orbit)
            i = orbit.index(m)
            orbit = tuple(orbit[i:] + orbit[:i])
            for d in orbit:
                vertex_rep[d] = m
            vertices[m] = orbit
        object.__setattr__(self, "_vertex_rep", tuple(vertex_rep))
        object.__setattr__(self, "_vertices", vertices)

        hole_reps = frozenset(face_rep[d] for d in holes)
        region_sets = []
        for reg in regions:
            region_sets.append(frozenset(face_rep[d] for d in reg))
        seen = set()
        for reg in region_sets:
            if reg & seen:
                raise DiagramError("face cycle assigned to two regions")
            seen |= reg
        if seen & hole_reps:
            raise DiagramError("face cycle is both a region cycle and a hole")
        missing = set(faces) - seen - hole_reps
        if missing:
            raise DiagramError(
                "face cycles %s assigned to no region" % sorted(missing)
            )
        # canonical region order: by smallest cycle rep; bare spheres last
        def region_key(r):
            return (0, min(r)) if r else (1, 0)

        order = sorted(range(len(region_sets)), key=lambda i: region_key(region_sets[i]))
        new_index = {old: new for new, old in enumerate(order)}
        region_sets = [region_sets[i] for i in order]
        object.__setattr__(self, "regions", tuple(region_sets))
        object.__setattr__(self, "holes", hole_reps)

        bps = []
        for label, reg in basepoints:
            if label not in ("X", "O"):
                raise DiagramError("basepoint label must be X or O")
            if not 0 <= reg < len(region_sets):
                raise DiagramError("basepoint region %d out of range" % reg)
            bps.append((label, new_index[reg]))
        object.__setattr__(self, "basepoints", tuple(sorted(bps)))
        object.__setattr__(self, "_curves", None)
        object.__setattr__(self, "_edge_curve", None)
        object.__setattr__(self, "_canonical", None)

    # -- basic census ----------------------------------------------------

    @property
    def n_darts(self):
        return len(self.sigma)

    @property
    def n_edges(self):
        return len(self.sigma) // 2

    @property
    def n_vertices(self):
        return len(self._vertices)

    @property
    def n_faces(self):
        """Number of face cycles, holes included."""
        return len(self._faces)

    def faces(self):
        """Mapping face representative -> tuple of darts of the cycle."""
        return dict(self._faces)

    def face_of(self, d):
        """Representative of the face cycle to the left of dart ``d``."""
        return self._face_rep[d]

    def face_darts(self, rep):
        return self._faces[self._face_rep[rep]]

    def vertices(self):
        return dict(self._vertices)

    def vertex_of(self, d):
        return self._vertex_rep[d]

    def vertex_darts(self, rep):
        return self._vertices[self._vertex_rep[rep]]

    def degree(self, d):
        return len(self._vertices[self._vertex_rep[d]])

    def kind_of_dart(self, d):
        return self.edge_kind[d // 2]

    def region_index_of_face(self, rep):
        rep = self._face_rep[rep]
        for i, reg in enumerate(self.regions):
            if rep in reg:
                return i
        if rep in self.holes:
            raise DiagramError("face %d is a boundary cap, not a region" % rep)
        raise DiagramError("face %d not assigned" % rep)

    def region_of_dart(self, d):
        return self.region_index_of_face(self._face_rep[d])

    def is_hole(self, rep):
        return self._face_rep[rep] in self.holes

    def region_basepoints(self, i):
        return tuple(label for label, reg in self.basepoints if reg == i)

    # -- curves ----------------------------------------------------------

    def _trace_curves(self):
        if self._curves is not None:
            return
        n = self.n_darts
        edge_curve = [-1] * (n // 2)
        curves = []

        def next_dart_along(d):
            """Continue the curve of ``d`` through the vertex at its head."""
            h = opp(d)  # arrival dart at head vertex
            v = self._vertices[self._vertex_rep[h]]
            deg = len(v)
            kind = self.kind_of_dart(d)
            if deg == 2:
                other = v[0] if v[1] == h else v[1]
                if self.kind_of_dart(other) != kind:
                    return None
                return other
            if deg == 4:
                # go straight through: two steps of sigma
                other = self.sigma[self.sigma[h]]
                if self.kind_of_dart(other) != kind:
                    return None
                return other
            if deg == 3:
                if kind == BOUNDARY:
                    cands = [x for x in v if x != h and self.kind_of_dart(x) == BOUNDARY]
                    return cands[0] if len(cands) == 1 else None
                return None  # arc endpoint: curve stops
            return None

        for e0 in range(n // 2):
            if edge_curve[e0] >= 0:
                continue
            kind = self.edge_kind[e0]
            # walk backwards to find a start (arc endpoint) or detect a circle
            start = 2 * e0
            seen = {start}
            d = start
            while True:
                prev = next_dart_along(opp(d))
                if prev is None:
                    break  # d's tail is a free end (arc endpoint)
                prev = opp(prev)
                if prev in seen:
                    break  # circle
                seen.add(prev)
                d = prev
            start = d
            darts = []
            edges = []
            d = start
            while True:
                darts.append(d)
                edges.append(d // 2)
                edge_curve[d // 2] = len(curves)
                nxt = next_dart_along(d)
                if nxt is None:
                    is_circle = False
                    break
                if nxt == start:
                    is_circle = True
                    break
                d = nxt
            curves.append(
                Curve(
                    index=len(curves),
                    kind=kind,
                    is_circle=is_circle,
                    edges=tuple(edges),
                    darts=tuple(darts),
                )
            )
        object.__setattr__(self, "_curves", tuple(curves))
        object.__setattr__(self, "_edge_curve", tuple(edge_curve))

    def curves(self):
        self._trace_curves()
        return self._curves

    def curve_of_edge(self, e):
        self._trace_curves()
        return self._curves[self._edge_curve[e]]

    def curve_of_dart(self, d):
        return self.curve_of_edge(d // 2)

    def circles(self, kind=None):
        return [
            c
            for c in self.curves()
            if c.is_circle and (kind is None or c.kind == kind)
        ]

    def arcs(self, kind=None):
        return [
            c
            for c in self.curves()
            if not c.is_circle and (kind is None or c.kind == kind)
        ]

    # -- validation and derived topology ----------------------------------

    def euler_characteristic(self):
        """Euler characteristic of the underlying surface."""
        chi_regions = sum(2 - len(reg) for reg in self.regions)
        return self.n_vertices - self.n_edges + chi_regions

    def surface_components(self):
        """Connected components of the surface, as frozensets of region indices.

        Components also account for cells: two regions are in the same
        component when some cell chain connects them.
        """
        parent = {}

        def find(x):
            while parent.get(x, x) != x:
                parent[x] = parent.get(parent[x], parent[x])
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for d in range(self.n_darts):
            union(("d", self._vertex_rep[d]), ("d", self._vertex_rep[opp(d)]))
            union(("d", self._vertex_rep[d]), ("f", self._face_rep[d]))
        for i, reg in enumerate(self.regions):
            for rep in reg:
                union(("r", i), ("f", rep))
        comps = {}
        for i in range(len(self.regions)):
            comps.setdefault(find(("r", i)), set()).add(i)
        # cells not adjacent to any region (pure boundary shells) impossible;
        # bare-sphere regions form their own components.
        return [frozenset(v) for v in comps.values()]

    def euler_genus(self):
        """Return ``(genus, boundary_count)``.

        For a disconnected surface the genus is the sum of the component
        genera, so ``V - E + F = 2c - 2g - b`` with ``c`` components.
        """
        report = self.validate()
        report.raise_if_failed()
        return report.genus, report.boundary_count

    def validate(self):
        """Check every structural invariant; never raises for content errors."""
        errors = []

        # vertex structure
        for rep, orbit in self._vertices.items():
            deg = len(orbit)
            kinds = [self.kind_of_dart(d) for d in orbit]
            if deg == 4:
                if kinds not in (
                    [ALPHA, BETA, ALPHA, BETA],
                    [BETA, ALPHA, BETA, ALPHA],
                ):
                    errors.append(
                        "vertex %d is 4-valent but not an alternating alpha/beta crossing"
                        % rep
                    )
            elif deg == 3:
                if kinds.count(BOUNDARY) != 2 or kinds.count(ALPHA) + kinds.count(BETA) != 1:
                    errors.append(
                        "vertex %d is 3-valent but not an arc endpoint on the boundary"
                        % rep
                    )
            elif deg == 2:
                if kinds[0] != kinds[1]:
                    errors.append(
                        "vertex %d is a 2-valent junction of different kinds" % rep
                    )
            elif deg == 1:
                errors.append("vertex %d is a dangling curve end" % rep)
            else:
                errors.append("vertex %d has unsupported valence %d" % (rep, deg))

        # curves: same-kind curves may not share vertices; arcs end on boundary
        try:
            curves = self.curves()
        except Exception as exc:  # tracing failure is itself an error
            errors.append("curve tracing failed: %s" % exc)
            curves = ()
        for c in curves:
            if c.kind == BOUNDARY:
                if not c.is_circle:
                    errors.append("boundary curve %d is not a circle" % c.index)
            elif not c.is_circle:
                for end in (c.darts[0], opp(c.darts[-1])):
                    if self.degree(end) != 3:
                        errors.append(
                            "arc %d does not end on the boundary" % c.index
                        )
        # at a 4-valent vertex the two same-kind darts must belong to the
        # same curve (a curve crossing straight through)
        self._trace_curves()
        for rep, orbit in self._vertices.items():
            if len(orbit) == 4:
                for d in orbit[:2]:
                    straight = self.sigma[self.sigma[d]]
                    if self._edge_curve[d // 2] != self._edge_curve[straight // 2]:
                        errors.append(
                            "two different %s curves cross at vertex %d"
                            % (KIND_NAMES[self.kind_of_dart(d)], rep)
                        )

        # holes: every D edge has exactly one cap side, caps are all-D cycles
        for rep in self.holes:
            if any(self.kind_of_dart(d) != BOUNDARY for d in self._faces[rep]):
                errors.append("cap face %d contains non-boundary darts" % rep)
        for e in range(self.n_edges):
            if self.edge_kind[e] == BOUNDARY:
                sides = [self._face_rep[2 * e] in self.holes, self._face_rep[2 * e + 1] in self.holes]
                if sides.count(True) != 1:
                    errors.append(
                        "boundary edge %d does not have exactly one cap side" % e
                    )
            else:
                for d in (2 * e, 2 * e + 1):
                    if self._face_rep[d] in self.holes:
                        errors.append(
                            "curve edge %d borders a boundary cap" % e
                        )
        n_bd_circles = sum(1 for c in curves if c.kind == BOUNDARY)
        if n_bd_circles != len(self.holes):
            errors.append(
                "boundary circle count %d does not match hole count %d"
                % (n_bd_circles, len(self.holes))
            )

        # planarity of regions / derived genus
        genus = 0
        boundary_count = len(self.holes)
        comps = self.surface_components()
        chi = self.euler_characteristic()
        expected = 2 * len(comps) - boundary_count - chi
        if expected < 0 or expected % 2:
            errors.append(
                "Euler count V - E + F = %d is inconsistent with %d components"
                " and %d boundary circles (regions would need negative or"
                " fractional genus)" % (chi, len(comps), boundary_count)
            )
        else:
            genus = expected // 2

        census = {}
        for c in curves:
            key = (KIND_NAMES[c.kind], "circle" if c.is_circle else "arc")
            census[key] = census.get(key, 0) + 1
        bp_census = {"X": 0, "O": 0}
        for label, _ in self.basepoints:
            bp_census[label] += 1

        return ValidationReport(
            ok=not errors,
            errors=tuple(errors),
            genus=genus,
            boundary_count=boundary_count,
            n_vertices=self.n_vertices,
            n_edges=self.n_edges,
            n_faces=len(self._faces) - len(self.holes),
            curve_census=census,
            basepoint_census=bp_census,
        )

    # -- intersection data -------------------------------------------------

    def intersection_matrix(self):
        """Signed alpha-circle x beta-circle intersection matrix.

        Requires a closed diagram (no boundary, no arcs).  Circles are
        oriented by their traversal order; the sign at a crossing is ``+1``
        when the beta circle crosses the alpha circle from its right to its
        left, as seen along the alpha orientation.
        """
        if self.holes or self.arcs():
            raise DiagramError("intersection matrix needs a closed diagram without arcs")
        alphas = self.circles(ALPHA)
        betas = self.circles(BETA)
        index_a = {c.index: i for i, c in enumerate(alphas)}
        index_b = {c.index: i for i, c in enumerate(betas)}
        forward = set()
        for c in alphas + betas:
            forward.update(c.darts)
        m = [[0] * len(betas) for _ in alphas]
        for rep, orbit in self._vertices.items():
            if len(orbit) != 4:
                continue
            d0 = orbit[0]
            # outgoing darts of the two curves at this crossing
            a_out = d0 if self.kind_of_dart(d0) == ALPHA else orbit[1]
            b_out = orbit[1] if self.kind_of_dart(d0) == ALPHA else d0
            # orient along the curve traversal: pick the outgoing dart that
            # the traversal actually uses (the forward dart set)
            a_f = a_out if a_out in forward else self.sigma[self.sigma[a_out]]
            b_f = b_out if b_out in forward else self.sigma[self.sigma[b_out]]
            i = index_a[self.curve_of_dart(a_f).index]
            j = index_b[self.curve_of_dart(b_f).index]
            # sign: +1 if b_f is 90 degrees counterclockwise from a_f
            sign = 1 if self.sigma[a_f] == b_f else -1
            m[i][j] += sign
        return m

    def det_abs(self):
        """|det| of the intersection matrix (exact integer arithmetic)."""
        m = self.intersection_matrix()
        if m and len(m) != len(m[0]):
            raise DiagramError(
                "intersection matrix is not square: %d alpha vs %d beta circles"
                % (len(m), len(m[0]))
            )
        return abs(_det(m))

    # -- equality ---------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Diagram):
            return NotImplemented
        return (
            self.sigma == other.sigma
            and self.edge_kind == other.edge_kind
            and self.regions == other.regions
            and self.holes == other.holes
            and self.basepoints == other.basepoints
        )

    def __hash__(self):
        return hash((self.sigma, self.edge_kind, self.regions, self.holes, self.basepoints))

    def __repr__(self):
        return "Diagram(V=%d, E=%d, cycles=%d, regions=%d, holes=%d, bp=%d)" % (
            self.n_vertices,
            self.n_edges,
            len(self._faces),
            len(self.regions),
            len(self.holes),
            len(self.basepoints),
        )


def _det(m):
    """Exact determinant of a square integer matrix via Fraction elimination."""
    n = len(m)
    if n == 0:
        return 1
    a = [[Fraction(x) for x in row] for row in m]
    det = Fraction(1)
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if a[r][col]:
                pivot = r
                break
        if pivot is None:
            return 0
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, n):
            if a[r][col]:
                f = a[r][col] * inv
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
    assert det.denominator == 1
    return int(det)


def empty_sphere(n_basepoint_pairs=0):
    """The empty diagram on S^2: no cells, one sphere region."""
    bps = []
    for _ in range(n_basepoint_pairs):
        bps.append(("X", 0))
        bps.append(("O", 0))
    return Diagram(sigma=(), edge_kind="", regions=[()], holes=(), basepoints=bps)
