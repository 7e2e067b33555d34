"""Mutable scratch structure for surgery on diagrams.

A :class:`MapBuilder` holds the dart data of a diagram while a move edits
it: darts can be allocated and retired, vertices rewired, edges subdivided.
``freeze`` produces an immutable :class:`~heegkit.diagram.Diagram`, with the
retired darts compacted away deterministically (descending-index swaps with
the tail, the same scheme regardless of the edit history), so that replaying
a script yields dart-identical results.

Region bookkeeping across a surgery is the caller's job; the builder only
offers the raw material: ``old_face_of`` remembers, for every surviving
dart, the face cycle it belonged to before the edits.
"""

from __future__ import annotations

from .diagram import ALPHA, BETA, BOUNDARY, Diagram, DiagramError, opp


class MapBuilder:
    def __init__(self, diagram=None):
        if diagram is None:
            self.sigma = []
            self.edge_kind = []
            self._old_face = {}
            self._old_region_of_face = {}
            self.source = None
        else:
            self.sigma = list(diagram.sigma)
            self.edge_kind = list(diagram.edge_kind)
            self._old_face = {d: diagram.face_of(d) for d in range(diagram.n_darts)}
            self._old_region_of_face = {}
            for i, reg in enumerate(diagram.regions):
                for rep in reg:
                    self._old_region_of_face[rep] = i
            self.source = diagram
        self._dead = set()

    # -- allocation -------------------------------------------------------

    def new_edge(self, kind):
        """Allocate an edge; returns its two darts (sigma left unset)."""
        d = len(self.sigma)
        self.sigma.extend((-1, -1))
        self.edge_kind.append(kind)
        return d, d + 1

    def kill_edge(self, e):
        self._dead.update((2 * e, 2 * e + 1))

    def is_dead(self, d):
        return d in self._dead

    # -- wiring -----------------------------------------------------------

    def set_vertex(self, darts):
        """Declare the counterclockwise dart cycle of one vertex."""
        k = len(darts)
        for i, d in enumerate(darts):
            self.sigma[d] = darts[(i + 1) % k]

    def vertex_darts(self, d):
        """Current sigma-orbit of ``d`` (must be fully wired)."""
        out = [d]
        x = self.sigma[d]
        while x != d:
            out.append(x)
            x = self.sigma[x]
        return out

    def replace_in_vertex(self, old, new):
        """Substitute dart ``old`` by ``new`` in its vertex cycle."""
        prev = old
        while self.sigma[prev] != old:
            prev = self.sigma[prev]
        self.sigma[prev] = new
        self.sigma[new] = self.sigma[old]

    def remove_from_vertex(self, d):
        """Unhook dart ``d`` from its vertex cycle (degree must stay >= 1)."""
        prev = d
        while self.sigma[prev] != d:
            prev = self.sigma[prev]
        if prev == d:
            raise DiagramError("cannot empty a vertex")
        self.sigma[prev] = self.sigma[d]
        self.sigma[d] = -1

    def insert_after(self, anchor, d):
        """Insert dart ``d`` into anchor's vertex, just counterclockwise of it."""
        self.sigma[d] = self.sigma[anchor]
        self.sigma[anchor] = d

    def subdivide_edge(self, d):
        """Split the edge of ``d`` at a new 2-valent vertex.

        Dart ``d`` keeps its edge, which now ends at the new vertex; a fresh
        edge of the same kind covers the stretch from the new vertex to the
        old head.  Returns ``(m_back, m_fwd)``, the dart pair at the new
        vertex: ``m_back`` (= relabelled ``opp(d)``) points back toward
        ``d``'s tail, ``m_fwd`` points on toward the old head.
        """
        m_fwd, head_end = self.new_edge(self.edge_kind[d // 2])
        od = opp(d)
        self.replace_in_vertex(od, head_end)
        self.set_vertex((od, m_fwd))
        # left of m_fwd continues d's left face; left of head_end continues
        # opp(d)'s left face
        if d in self._old_face:
            self._old_face[m_fwd] = self._old_face[d]
        if od in self._old_face:
            self._old_face[head_end] = self._old_face[od]
        return od, m_fwd

    def unsubdivide(self, v_dart):
        """Remove a 2-valent vertex, fusing its two edges into one.

        ``v_dart`` is one of the two darts at the vertex; its edge survives
        and is stretched to the far endpoint of the other edge, which dies.
        Returns the surviving dart now based at that far endpoint.
        """
        a = v_dart
        b = self.sigma[a]
        if self.sigma[b] != a or b == a:
            raise DiagramError("not a 2-valent vertex")
        if b == opp(a):
            raise DiagramError("cannot remove the only vertex of a circle")
        if self.edge_kind[a // 2] != self.edge_kind[b // 2]:
            raise DiagramError("2-valent vertex joins different kinds")
        ob = opp(b)
        # dart a migrates to the far endpoint of b's edge
        self.replace_in_vertex(ob, a)
        self.kill_edge(b // 2)
        self.sigma[b] = -1
        self.sigma[ob] = -1
        return a

    # -- face tags ---------------------------------------------------------

    def tag_face(self, dart, like_dart):
        """Declare that the (new) dart's left face continues like_dart's old face."""
        if like_dart in self._old_face:
            self._old_face[dart] = self._old_face[like_dart]

    def old_face_of(self, dart):
        return self._old_face.get(dart)

    def old_region_of(self, dart):
        f = self._old_face.get(dart)
        if f is None:
            return None
        return self._old_region_of_face.get(f)

    # -- freezing -----------------------------------------------------------

    def compact(self):
        """Retire dead darts; returns the dart relabelling map."""
        n = len(self.sigma)
        dead = sorted(self._dead)
        for d in dead:
            if self.sigma[d] != -1:
                raise DiagramError("dead dart %d still wired" % d)
        alive = [d for d in range(n) if d not in self._dead]
        # keep edge pairing: relabel edges, preserving relative order
        old_edges = sorted({d // 2 for d in alive})
        edge_map = {e: i for i, e in enumerate(old_edges)}
        dart_map = {}
        for e in old_edges:
            dart_map[2 * e] = 2 * edge_map[e]
            dart_map[2 * e + 1] = 2 * edge_map[e] + 1
        new_sigma = [-1] * (2 * len(old_edges))
        for d in alive:
            new_sigma[dart_map[d]] = dart_map[self.sigma[d]]
        self.sigma = new_sigma
        self.edge_kind = [self.edge_kind[e] for e in old_edges]
        self._old_face = {
            dart_map[d]: f for d, f in self._old_face.items() if d in dart_map
        }
        self._dead = set()
        return dart_map

    def freeze(self, regions, holes, basepoints):
        """Compact and build the immutable diagram.

        ``regions``/``holes``/``basepoints`` use *current* (pre-compaction)
        dart labels; region entries are iterables of darts, one per cycle.
        Returns ``(diagram, dart_map)``.
        """
        reg_spec = [tuple(r) for r in regions]
        holes_spec = tuple(holes)
        dart_map = self.compact()
        reg_mapped = [tuple(dart_map[d] for d in r) for r in reg_spec]
        holes_mapped = tuple(dart_map[d] for d in holes_spec)
        diag = Diagram(
            sigma=self.sigma,
            edge_kind="".join(self.edge_kind),
            regions=reg_mapped,
            holes=holes_mapped,
            basepoints=basepoints,
        )
        return diag, dart_map
