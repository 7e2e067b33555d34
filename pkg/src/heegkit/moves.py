"""The legal moves on partial Heegaard diagrams, as checked surgeries.

Move vocabulary
---------------
``finger``        push a strand of one curve across a single edge of the
                  other kind (the elementary isotopy generator; corridors
                  are sequences of these)
``bigon_death``   delete an empty bigon, cancelling two intersections
``triangle``      flip an edge across an empty triangle face to the other
                  side of its marker corner (the third isotopy generator)
``slide``         handleslide one circle over another of the same kind,
                  along a band given as a corridor of finger pushes
``stab12``        index one/two stabilization: a new alpha/beta circle pair
                  meeting once, inserted into a region (genus +1)
``destab12``      inverse of ``stab12``: the named alpha circle must meet
                  the named beta circle once and nothing else
``stab03``        index zero/three stabilization: a two-circle pattern
                  crossing twice, with one X and one O inside (genus 0)
``destab03``      inverse of ``stab03``; the pattern interior must be clean
``marker_add``    subdivide a curve edge at a 2-valent vertex
``marker_remove`` remove a redundant 2-valent vertex

Marker moves are administrative (cell subdivision, not geometry); they are
legal whenever structurally possible and count as no-ops in every ledger.

All parameters are darts of the diagram the move is applied to; since
application is deterministic, scripts of dart-addressed moves replay
exactly.  Applying a move never mutates its input; illegal moves raise
:class:`MoveError`.  Every application re-validates the result and checks
the move's exact integer invariant deltas, so a surgery bug fails loudly
instead of corrupting downstream state.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagram import ALPHA, BETA, BOUNDARY, Diagram, DiagramError, opp
from .mapbuilder import MapBuilder


class MoveError(DiagramError):
    """An illegal or ill-parametrized move."""


# ---------------------------------------------------------------------------
# move values


@dataclass(frozen=True)
class Move:
    variant: str
    args: tuple  # ordered (name, value) pairs; values are ints or int tuples

    def get(self, name, default=None):
        for k, v in self.args:
            if k == name:
                return v
        return default

    def __repr__(self):
        inner = " ".join("%s=%s" % (k, v) for k, v in self.args)
        return "Move(%s %s)" % (self.variant, inner.strip())


def finger(push, cross, head_x=0, head_o=0, head_cycles=()):
    args = [("push", int(push)), ("cross", int(cross))]
    if head_x:
        args.append(("head_x", int(head_x)))
    if head_o:
        args.append(("head_o", int(head_o)))
    if head_cycles:
        args.append(("head_cycles", tuple(sorted(int(c) for c in head_cycles))))
    return Move("finger", tuple(args))


def bigon_death(face_dart):
    return Move("bigon_death", (("face", int(face_dart)),))


def triangle(face_dart):
    return Move("triangle", (("face", int(face_dart)),))


def slide(slider, over, band=()):
    args = [("slider", int(slider)), ("over", int(over))]
    if band:
        args.append(("band", tuple(int(b) for b in band)))
    return Move("slide", tuple(args))


def stab12(anchor=None, sphere=None, swap=0):
    args = []
    if anchor is not None:
        args.append(("anchor", int(anchor)))
    if sphere is not None:
        args.append(("sphere", int(sphere)))
    if swap:
        args.append(("swap", 1))
    return Move("stab12", tuple(args))


def destab12(alpha, beta):
    return Move("destab12", (("alpha", int(alpha)), ("beta", int(beta))))


def stab03(anchor=None, sphere=None, variant=0):
    args = []
    if anchor is not None:
        args.append(("anchor", int(anchor)))
    if sphere is not None:
        args.append(("sphere", int(sphere)))
    if variant:
        args.append(("variant", int(variant)))
    return Move("stab03", tuple(args))


def destab03(anchor):
    return Move("destab03", (("anchor", int(anchor)),))


def marker_add(edge_dart):
    return Move("marker_add", (("edge", int(edge_dart)),))


def marker_remove(vertex_dart):
    return Move("marker_remove", (("vertex", int(vertex_dart)),))


@dataclass(frozen=True)
class MoveRecord:
    move: Move
    d_vertices: int
    d_edges: int
    d_chi: int
    d_genus: int
    d_boundary: int
    d_x: int
    d_o: int
    note: str = ""


EXPECTED_DELTAS = {
    # variant: (d_chi, d_genus, d_boundary, d_x, d_o)
    "finger": (0, 0, 0, 0, 0),
    "bigon_death": (0, 0, 0, 0, 0),
    "triangle": (0, 0, 0, 0, 0),
    "slide": (0, 0, 0, 0, 0),
    "stab12": (-2, 1, 0, 0, 0),
    "destab12": (2, -1, 0, 0, 0),
    "stab03": (0, 0, 0, 1, 1),
    "destab03": (0, 0, 0, -1, -1),
    "marker_add": (0, 0, 0, 0, 0),
    "marker_remove": (0, 0, 0, 0, 0),
}


# ---------------------------------------------------------------------------
# transport: region bookkeeping across one surgery


def _compute_faces(builder):
    """Face cycles of a builder's current wiring, keyed by min dart."""
    sigma = builder.sigma
    n = len(sigma)
    inv = {}
    for d in range(n):
        if sigma[d] >= 0:
            inv[sigma[d]] = d
    rep = {}
    faces = {}
    for d0 in range(n):
        if sigma[d0] < 0 or d0 in rep:
            continue
        orbit = []
        d = d0
        while d not in rep:
            rep[d] = d0
            orbit.append(d)
            d = inv[opp(d)]
        m = min(orbit)
        i = orbit.index(m)
        orbit = tuple(orbit[i:] + orbit[:i])
        for x in orbit:
            rep[x] = m
        faces[m] = orbit
    return faces, rep


class Transport:
    """Region bookkeeping across one surgery.

    The move marks the face cycles it disturbs as *dirty* before editing
    the builder.  Afterwards, ``finish`` recomputes the face cycles and
    rebuilds the region partition:

    - cycles of untouched faces stay with their old region;
    - a disturbed or new cycle joins the merge of all regions it inherited
      dirty darts from, plus any regions voted for it via ``claim``;
    - ``claim_new`` pins a cycle to a brand new region instead;
    - island cycles and basepoints can be reassigned explicitly, which is
      how genuine region splits are expressed.

    Cycle-level splits of one region (one old face becoming several cycles
    of the same region) need no declarations at all.
    """

    def __init__(self, diagram, builder):
        self.diagram = diagram
        self.builder = builder
        self.dirty = set()
        self._region_claims = []  # (witness dart, old region index)
        self._pin_claims = []  # (witness dart, old region index), exclusive
        self._new_claims = []  # (witness dart, label)
        self._new_bp = {}  # label -> [basepoint labels]
        self._dead_regions = set()
        self._consumed_bp = set()
        self._sphere_ok = set()
        self._bp_moves = []  # (region index, label, count, target)
        self._island_moves = {}  # old cycle rep -> target
        # targets are ("new", label) or ("r", region index)

    # -- declarations ---------------------------------------------------

    def mark_dirty_face_of(self, *darts):
        for d in darts:
            self.dirty.add(self.diagram.face_of(d))

    def mark_dirty_vertex(self, d):
        for x in self.diagram.vertex_darts(d):
            self.dirty.add(self.diagram.face_of(x))

    def claim(self, witness_dart, region_index):
        """Vote the new cycle containing the witness into an old region."""
        self._region_claims.append((witness_dart, region_index))

    def pin(self, witness_dart, region_index):
        """Force the new cycle containing the witness into exactly one old
        region, overriding dart inheritance (used for region splits)."""
        self._pin_claims.append((witness_dart, region_index))

    def claim_new(self, witness_dart, label, basepoints=()):
        self._new_claims.append((witness_dart, label))
        self._new_bp.setdefault(label, []).extend(basepoints)

    def kill_region(self, index, consume_basepoints=False):
        self._dead_regions.add(index)
        if consume_basepoints:
            self._consumed_bp.add(index)

    def allow_sphere(self, index):
        """Permit a region to lose every cycle, leaving a bare sphere."""
        self._sphere_ok.add(index)

    def move_basepoints(self, region_index, label, count, target):
        self._bp_moves.append((region_index, label, count, target))

    def move_island(self, cycle_dart, target):
        rep = self.diagram.face_of(cycle_dart)
        if rep in self.dirty:
            raise MoveError("cannot move a dirty cycle as an island")
        self._island_moves[rep] = target

    # -- assembly ---------------------------------------------------------

    def finish(self):
        d = self.diagram
        b = self.builder
        faces, rep_of = _compute_faces(b)

        explicit_new = {}
        for witness, label in self._new_claims:
            if witness not in rep_of:
                raise MoveError("claim witness dart %d died in surgery" % witness)
            r = rep_of[witness]
            if explicit_new.get(r, label) != label:
                raise MoveError("conflicting new-region claims on one cycle")
            explicit_new[r] = label

        votes = {}
        for witness, reg in self._region_claims:
            if witness not in rep_of:
                raise MoveError("claim witness dart %d died in surgery" % witness)
            votes.setdefault(rep_of[witness], set()).add(reg)
        pins = {}
        for witness, reg in self._pin_claims:
            if witness not in rep_of:
                raise MoveError("pin witness dart %d died in surgery" % witness)
            r = rep_of[witness]
            if pins.get(r, reg) != reg or r in explicit_new:
                raise MoveError("conflicting pins on one cycle")
            pins[r] = reg

        # classify new cycles
        untouched = {}  # old rep -> new rep (identity cycles)
        dirty_cycles = {}  # new rep -> set of parent regions
        for new_rep, orbit in faces.items():
            parents = set(votes.get(new_rep, ()))
            is_dirty = new_rep in explicit_new or new_rep in pins or bool(parents)
            clean_old = None
            for x in orbit:
                old = b.old_face_of(x)
                if old is None:
                    is_dirty = True
                elif old in self.dirty:
                    is_dirty = True
                    reg = b.old_region_of(x)
                    if reg is not None:
                        parents.add(reg)
                else:
                    clean_old = old
            if new_rep in explicit_new:
                dirty_cycles[new_rep] = None  # pinned to a new region
            elif new_rep in pins:
                dirty_cycles[new_rep] = {pins[new_rep]}
            elif is_dirty:
                if not parents and clean_old is not None:
                    # disturbed cycle that only kept clean darts: treat as
                    # the continuation of that face's region
                    parents = {self._old_region(clean_old)}
                if not parents:
                    raise MoveError("surgery produced a cycle with no provenance")
                dirty_cycles[new_rep] = parents
            else:
                untouched[clean_old] = new_rep

        # union-find over old regions forced to merge
        parent = {}

        def find(x):
            root = x
            while parent.get(root, root) != root:
                root = parent[root]
            while parent.get(x, x) != x:
                parent[x], x = root, parent[x]
            return root

        for parents in dirty_cycles.values():
            if not parents:
                continue
            ps = sorted(parents)
            for q in ps[1:]:
                ra, rb = find(ps[0]), find(q)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

        # basepoint pools per old region
        bp_pool = {}
        for label, reg in d.basepoints:
            if reg in self._consumed_bp:
                continue
            bp_pool.setdefault(reg, []).append(label)
        moved_bp = {}  # target -> [labels]
        for reg_i, label, count, target in self._bp_moves:
            pool = bp_pool.setdefault(reg_i, [])
            for _ in range(count):
                if label not in pool:
                    raise MoveError(
                        "region %d has no %s basepoint to reassign" % (reg_i, label)
                    )
                pool.remove(label)
                moved_bp.setdefault(target, []).append(label)

        # assemble output regions
        regions_spec = []
        bp_out = []

        def emit(cycle_darts, labels):
            regions_spec.append(tuple(cycle_darts))
            for lb in labels:
                bp_out.append((lb, len(regions_spec) - 1))

        # new-labelled regions
        new_label_cycles = {}
        for new_rep, label in explicit_new.items():
            new_label_cycles.setdefault(label, []).append(min(faces[new_rep]))
        for label, cycles in sorted(new_label_cycles.items()):
            labels = list(self._new_bp.get(label, []))
            labels += moved_bp.get(("new", label), [])
            for old_rep, target in self._island_moves.items():
                if target == ("new", label):
                    if old_rep not in untouched:
                        raise MoveError("island cycle was disturbed by the surgery")
                    cycles.append(min(faces[untouched[old_rep]]))
            emit(cycles, labels)

        # merged old regions
        root_members = {}
        for i in range(len(d.regions)):
            root_members.setdefault(find(i), []).append(i)
        moved_islands = self._island_moves

        for root in sorted(root_members):
            members = root_members[root]
            if len(members) == 1 and members[0] in self._dead_regions:
                i = members[0]
                if bp_pool.get(i):
                    raise MoveError("killed region %d still has basepoints" % i)
                # it must also have contributed no cycles
                for new_rep, parents in dirty_cycles.items():
                    if parents and i in parents:
                        raise MoveError("killed region %d still owns a cycle" % i)
                continue
            cycles = []
            labels = []
            for i in members:
                if i in self._dead_regions:
                    raise MoveError("killed region %d was merged with a live one" % i)
                for old_rep in d.regions[i]:
                    if old_rep in moved_islands:
                        continue
                    if old_rep in self.dirty:
                        continue  # replaced via dirty_cycles
                    if old_rep not in untouched:
                        raise MoveError(
                            "clean cycle %d of region %d vanished" % (old_rep, i)
                        )
                    cycles.append(min(faces[untouched[old_rep]]))
                labels += bp_pool.get(i, [])
                labels += moved_bp.get(("r", i), [])
            for new_rep, parents in dirty_cycles.items():
                if parents and find(min(parents)) == root:
                    cycles.append(min(faces[new_rep]))
            for old_rep, target in moved_islands.items():
                if target == ("r", root):
                    cycles.append(min(faces[untouched[old_rep]]))
            if not cycles and not d.regions[root] and len(members) == 1:
                emit([], labels)  # bare sphere persists
                continue
            if not cycles:
                if any(i in self._sphere_ok for i in members):
                    emit([], labels)
                    continue
                if labels:
                    raise MoveError(
                        "region %d lost all cycles but keeps basepoints" % root
                    )
                if d.regions[root]:
                    raise MoveError("region %d lost all cycles unexpectedly" % root)
                emit([], labels)
                continue
            emit(cycles, labels)

        # holes
        holes_spec = []
        for old_rep in d.holes:
            if old_rep in self.dirty:
                raise MoveError("surgery touched a boundary cap")
            if old_rep not in untouched:
                raise MoveError("boundary cap disturbed by surgery")
            holes_spec.append(min(faces[untouched[old_rep]]))
        return regions_spec, holes_spec, bp_out

    def _old_region(self, old_rep):
        for i, reg in enumerate(self.diagram.regions):
            if old_rep in reg:
                return i
        raise MoveError("old face %d belongs to no region" % old_rep)


def _finish_apply(diagram, move, builder, transport, note=""):
    regions_spec, holes_spec, bps = transport.finish()
    new_diag, dart_map = builder.freeze(regions_spec, holes_spec, bps)
    report = new_diag.validate()
    if not report.ok:
        raise MoveError(
            "move %s produced an invalid diagram: %s"
            % (move.variant, "; ".join(report.errors))
        )
    old_report = diagram.validate()
    d_chi = new_diag.euler_characteristic() - diagram.euler_characteristic()
    d_comp = len(new_diag.surface_components()) - len(diagram.surface_components())
    d_genus = report.genus - old_report.genus
    d_bd = report.boundary_count - old_report.boundary_count
    old_bp = old_report.basepoint_census
    new_bp = report.basepoint_census
    exp = EXPECTED_DELTAS[move.variant]
    got = (d_chi, d_genus, d_bd, new_bp["X"] - old_bp["X"], new_bp["O"] - old_bp["O"])
    if got != exp or d_comp != 0:
        raise MoveError(
            "move %s has wrong invariant deltas: chi/genus/bd/X/O=%s expected %s,"
            " components %+d" % (move.variant, got, exp, d_comp)
        )
    record = MoveRecord(
        move=move,
        d_vertices=report.n_vertices - old_report.n_vertices,
        d_edges=report.n_edges - old_report.n_edges,
        d_chi=d_chi,
        d_genus=d_genus,
        d_boundary=d_bd,
        d_x=got[3],
        d_o=got[4],
        note=note,
    )
    return new_diag, record, dart_map


def _check_dart(d, diagram, name):
    if not isinstance(d, int) or not 0 <= d < diagram.n_darts:
        raise MoveError("%s dart %r out of range" % (name, d))


# ---------------------------------------------------------------------------
# finger push


def _finger_surgery(diagram, builder, transport, p, q):
    """Shared sigma surgery for a push of ``p``'s strand across ``q``'s edge.

    Returns the named new darts.  Orientation: seen with ``p``'s left face
    between the strands, the new crossings are ``x1`` (toward ``q``'s head)
    and ``x2`` (toward ``q``'s tail).
    """
    kp = diagram.kind_of_dart(p)
    kq = diagram.kind_of_dart(q)
    b = builder
    p1a, p1b = b.new_edge(kp)   # tail(p) <-> x1
    ta, tb = b.new_edge(kp)     # x1 <-> x2 (the tip)
    p2a, p2b = b.new_edge(kp)   # x2 <-> head(p)
    q1a, q1b = b.new_edge(kq)   # tail(q) <-> x2
    qma, qmb = b.new_edge(kq)   # x2 <-> x1 (middle of the crossed edge)
    q2a, q2b = b.new_edge(kq)   # x1 <-> head(q)
    b.replace_in_vertex(p, p1a)
    b.replace_in_vertex(opp(p), p2b)
    b.replace_in_vertex(q, q1a)
    b.replace_in_vertex(opp(q), q2b)
    b.set_vertex((ta, q2a, p1b, qmb))   # x1, counterclockwise
    b.set_vertex((tb, qma, p2a, q1b))   # x2
    b.kill_edge(p // 2)
    b.kill_edge(q // 2)
    b.sigma[p] = b.sigma[opp(p)] = b.sigma[q] = b.sigma[opp(q)] = -1
    return {
        "p1a": p1a, "p1b": p1b, "ta": ta, "tb": tb, "p2a": p2a, "p2b": p2b,
        "q1a": q1a, "q1b": q1b, "qma": qma, "qmb": qmb, "q2a": q2a, "q2b": q2b,
    }


def apply_finger(diagram, move):
    p = move.get("push")
    q = move.get("cross")
    _check_dart(p, diagram, "push")
    _check_dart(q, diagram, "cross")
    kp = diagram.kind_of_dart(p)
    kq = diagram.kind_of_dart(q)
    if BOUNDARY in (kp, kq):
        raise MoveError("fingers may not move or cross the boundary")
    if kp == kq:
        raise MoveError("a finger must cross an edge of the other kind")
    if p // 2 == q // 2:
        raise MoveError("a strand cannot cross its own edge")
    fp, fq = diagram.face_of(p), diagram.face_of(q)
    if diagram.is_hole(fp) or diagram.is_hole(fq):
        raise MoveError("finger corridor exits through the boundary")
    rp = diagram.region_index_of_face(fp)
    rq = diagram.region_index_of_face(fq)
    if rp != rq:
        raise MoveError("push and cross darts do not see a common region")
    r_under = diagram.region_of_dart(opp(p))
    r_other = diagram.region_of_dart(opp(q))
    same_cycle = fp == fq
    # an arc with both ends on one boundary cycle separates a planar
    # region, so a same-cycle push always splits the region in two; the
    # declared head-side basepoints and islands choose the finger's
    # isotopy class
    split = same_cycle

    hx = move.get("head_x", 0) or 0
    ho = move.get("head_o", 0) or 0
    head_cycles = move.get("head_cycles", ()) or ()
    if (hx or ho or head_cycles) and not split:
        raise MoveError("side assignments only apply when the push splits a region")

    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    t.mark_dirty_face_of(p, q, opp(p), opp(q))
    nd = _finger_surgery(diagram, b, t, p, q)

    t.claim_new(nd["qmb"], "bigon")
    t.claim(nd["qma"], r_under)
    t.claim(nd["ta"], r_other)
    if split:
        t.claim_new(nd["q2a"], "head")
        t.claim(nd["q1a"], rp)
        if hx:
            t.move_basepoints(rp, "X", hx, ("new", "head"))
        if ho:
            t.move_basepoints(rp, "O", ho, ("new", "head"))
        for c in head_cycles:
            crep = diagram.face_of(c)
            if crep not in diagram.regions[rp] or crep in (fp, fq):
                raise MoveError("head cycle %d is not an island of the region" % c)
            t.move_island(c, ("new", "head"))
    else:
        t.claim(nd["q2a"], rp)
        t.claim(nd["q1a"], rp)
    return _finish_apply(diagram, move, b, t)


# ---------------------------------------------------------------------------
# bigon death


def _bigon_data(diagram, face_dart):
    rep = diagram.face_of(face_dart)
    orbit = diagram.face_darts(rep)
    if len(orbit) != 2:
        raise MoveError("face is not a bigon")
    dA, dB = orbit
    if diagram.kind_of_dart(dA) == BETA:
        dA, dB = dB, dA
    if (diagram.kind_of_dart(dA), diagram.kind_of_dart(dB)) != (ALPHA, BETA):
        raise MoveError("bigon sides must be one alpha and one beta edge")
    v1 = diagram.vertex_of(dA)
    v2 = diagram.vertex_of(dB)
    if v1 == v2:
        raise MoveError("degenerate bigon with a single corner")
    if diagram.degree(dA) != 4 or diagram.degree(dB) != 4:
        raise MoveError("bigon corners must be transverse crossings")
    return rep, dA, dB


def check_bigon_empty(diagram, face_dart):
    rep, dA, dB = _bigon_data(diagram, face_dart)
    r = diagram.region_index_of_face(rep)
    if diagram.regions[r] != frozenset((rep,)):
        raise MoveError("bigon region is not a plain disk")
    if diagram.region_basepoints(r):
        raise MoveError("bigon contains a basepoint")
    return rep, dA, dB, r


def apply_bigon_death(diagram, move):
    face_dart = move.get("face")
    _check_dart(face_dart, diagram, "face")
    rep, dA, dB, r_bigon = check_bigon_empty(diagram, face_dart)

    # local names: the alpha strand through the bigon is
    # far1 --(Ea1)-- v1 --(E_A = dA's edge)-- v2 --(Ea2)-- far2
    a_cont1 = diagram.sigma[diagram.sigma[dA]]          # alpha out of v1
    a_cont2 = diagram.sigma[diagram.sigma[opp(dA)]]     # alpha out of v2
    b_cont2 = diagram.sigma[diagram.sigma[dB]]          # beta out of v2
    b_cont1 = diagram.sigma[diagram.sigma[opp(dB)]]     # beta out of v1

    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    t.mark_dirty_vertex(dA)
    t.mark_dirty_vertex(dB)
    t.kill_region(r_bigon)

    def fuse(c1, c2, edge_mid):
        """Join the strand c1 -- v -- [mid] -- v' -- c2 into one edge."""
        if c1 // 2 == c2 // 2:
            # the continuation is a single edge: the curve closes into a
            # loop that must keep one marker vertex
            b.set_vertex((c1, c2))
        else:
            b.replace_in_vertex(opp(c2), c1)
            b.kill_edge(c2 // 2)
            b.sigma[c2] = -1
            b.sigma[opp(c2)] = -1
        b.kill_edge(edge_mid // 2)
        b.sigma[edge_mid] = -1
        b.sigma[opp(edge_mid)] = -1

    fuse(a_cont1, a_cont2, dA)
    fuse(b_cont1, b_cont2, dB)
    return _finish_apply(diagram, move, b, t)


# ---------------------------------------------------------------------------
# triangle flip


def apply_triangle(diagram, move):
    face_dart = move.get("face")
    _check_dart(face_dart, diagram, "face")
    rep = diagram.face_of(face_dart)
    orbit = diagram.face_darts(rep)
    if len(orbit) != 3:
        raise MoveError("face is not a triangle")
    kinds = [diagram.kind_of_dart(x) for x in orbit]
    if len(set(kinds)) == 1:
        raise MoveError("triangle sides are all of the same type")
    r_tri = diagram.region_index_of_face(rep)
    if diagram.regions[r_tri] != frozenset((rep,)):
        raise MoveError("triangle region is not a plain disk")
    if diagram.region_basepoints(r_tri):
        raise MoveError("triangle contains a basepoint")
    # the odd edge is the single one whose kind occurs once
    for i in range(3):
        if kinds.count(kinds[i]) == 1:
            odd_i = i
            break
    dB = orbit[odd_i]  # the flipping edge (kind may be alpha or beta)
    dA1 = orbit[(odd_i + 1) % 3]
    dA2 = orbit[(odd_i + 2) % 3]
    # corners of dB's edge are the two crossings; the marker sits between
    # dA1 and dA2
    m_v = diagram.vertex_of(dA2)
    if diagram.degree(dA2) != 2:
        raise MoveError("triangle has no marker corner")
    x1 = diagram.vertex_of(dB)
    x2 = diagram.vertex_of(opp(dB))
    if diagram.degree(dB) != 4 or diagram.degree(opp(dB)) != 4:
        raise MoveError("triangle crossings must be transverse")
    if x1 == x2:
        raise MoveError("degenerate triangle")

    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    t.mark_dirty_vertex(dB)
    t.mark_dirty_vertex(opp(dB))
    t.kill_region(r_tri)

    # swap the two odd-kind darts at each crossing: the edge of dB swings
    # across the marker to the face on the other side of the strand
    for v_dart in (dB, opp(dB)):
        cyc = diagram.vertex_darts(v_dart)
        k = diagram.kind_of_dart(v_dart)
        mine = [x for x in cyc if diagram.kind_of_dart(x) == k]
        other = [x for x in cyc if diagram.kind_of_dart(x) != k]
        swapped = []
        for x in cyc:
            if diagram.kind_of_dart(x) == k:
                swapped.append(mine[0] if x == mine[1] else mine[1])
            else:
                swapped.append(x)
        b.set_vertex(tuple(swapped))
    # the new triangle is the face now left of dB (= swept to the far side)
    t.claim_new(dB, "triangle")
    return _finish_apply(diagram, move, b, t)


# ---------------------------------------------------------------------------
# stabilizations


def _resolve_region_anchor(diagram, move):
    anchor = move.get("anchor")
    sphere = move.get("sphere")
    if (anchor is None) == (sphere is None):
        raise MoveError("exactly one of anchor/sphere must be given")
    if anchor is not None:
        _check_dart(anchor, diagram, "anchor")
        rep = diagram.face_of(anchor)
        if diagram.is_hole(rep):
            raise MoveError("anchor dart faces a boundary cap")
        return diagram.region_index_of_face(rep)
    if not 0 <= sphere < len(diagram.regions) or diagram.regions[sphere]:
        raise MoveError("sphere index %r is not a bare sphere region" % sphere)
    return sphere


def apply_stab12(diagram, move):
    reg = _resolve_region_anchor(diagram, move)
    swap = move.get("swap", 0) or 0
    ka, kb = (BETA, ALPHA) if swap else (ALPHA, BETA)
    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    a0, a1 = b.new_edge(ka)
    b0, b1 = b.new_edge(kb)
    b.set_vertex((a0, b0, a1, b1))
    t.claim(a0, reg)
    return _finish_apply(diagram, move, b, t)


def _circle_of(diagram, dart, kind_name):
    c = diagram.curve_of_dart(dart)
    if not c.is_circle:
        raise MoveError("%s curve is an arc; arcs cannot be (de)stabilized" % kind_name)
    return c


def _curve_crossings(diagram, curve):
    """4-valent vertices along a curve, in traversal order (with repeats)."""
    out = []
    for dd in curve.darts:
        if diagram.degree(dd) == 4:
            out.append(diagram.vertex_of(dd))
    return out


def apply_destab12(diagram, move):
    da = move.get("alpha")
    db = move.get("beta")
    _check_dart(da, diagram, "alpha")
    _check_dart(db, diagram, "beta")
    if diagram.kind_of_dart(da) != ALPHA or diagram.kind_of_dart(db) != BETA:
        raise MoveError("destab12 needs an alpha dart and a beta dart")
    ca = _circle_of(diagram, da, "alpha")
    cb = _circle_of(diagram, db, "beta")
    xa = _curve_crossings(diagram, ca)
    if len(xa) != 1:
        raise MoveError(
            "the alpha circle must meet exactly one intersection, found %d" % len(xa)
        )
    x = xa[0]
    if x not in _curve_crossings(diagram, cb):
        raise MoveError("the alpha and beta circles do not meet")
    xb = _curve_crossings(diagram, cb)
    if xb.count(x) != 1:
        raise MoveError("the circles meet more than once")

    b = MapBuilder(diagram)
    t = Transport(diagram, b)

    beta_clean = len(xb) == 1
    comp_edges = set(ca.edges)
    if beta_clean:
        comp_edges |= set(cb.edges)

    if beta_clean:
        # isolated pair: delete the whole component
        for e in comp_edges:
            for dd in (2 * e, 2 * e + 1):
                t.mark_dirty_face_of(dd)
                t.allow_sphere(diagram.region_of_dart(dd))
        for e in comp_edges:
            b.kill_edge(e)
            b.sigma[2 * e] = b.sigma[2 * e + 1] = -1
        return _finish_apply(diagram, move, b, t)

    # threaded form: remove the alpha circle; the crossing becomes a marker
    t.mark_dirty_vertex(diagram.vertex_darts(x)[0])
    for e in ca.edges:
        for dd in (2 * e, 2 * e + 1):
            t.mark_dirty_face_of(dd)
    cyc = diagram.vertex_darts(x)
    beta_darts = [dd for dd in cyc if diagram.kind_of_dart(dd) == BETA]
    alpha_darts = [dd for dd in cyc if diagram.kind_of_dart(dd) == ALPHA]
    # unhook alpha, keep the beta darts as a 2-valent marker
    b.set_vertex(tuple(beta_darts))
    for e in ca.edges:
        b.kill_edge(e)
    for dd in alpha_darts:
        b.sigma[dd] = -1
    # alpha marker vertices (if the circle had any) die with their edges
    for e in ca.edges:
        for dd in (2 * e, 2 * e + 1):
            if b.sigma[dd] != -1:
                b.sigma[dd] = -1
    return _finish_apply(diagram, move, b, t)


LADYBUG_VARIANTS = {
    # variant -> (lens label, crescent label, crescent side)
    0: ("X", "O", "B"),
    1: ("O", "X", "B"),
    2: ("X", "O", "A"),
    3: ("O", "X", "A"),
}


def apply_stab03(diagram, move):
    reg = _resolve_region_anchor(diagram, move)
    variant = move.get("variant", 0) or 0
    if variant not in LADYBUG_VARIANTS:
        raise MoveError("unknown stab03 variant %r" % variant)
    lens_label, cres_label, cres_side = LADYBUG_VARIANTS[variant]
    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    # two circles crossing twice (see module tests for the face layout):
    # alpha east/west arcs ae/aw, beta east/west arcs be/bw
    ae1, ae2 = b.new_edge(ALPHA)
    aw1, aw2 = b.new_edge(ALPHA)
    bw1, bw2 = b.new_edge(BETA)
    be1, be2 = b.new_edge(BETA)
    b.set_vertex((be1, aw1, bw1, ae1))   # top crossing
    b.set_vertex((ae2, bw2, aw2, be2))   # bottom crossing
    # face cycles: lens {ae2, bw1}, alpha crescent {aw1, bw2},
    # beta crescent {ae1, be2}, outer {aw2, be1}
    t.claim(aw2, reg)
    t.claim_new(ae2, "lens", [lens_label])
    if cres_side == "B":
        t.claim_new(ae1, "cres_used", [cres_label])
        t.claim_new(aw1, "cres_free")
    else:
        t.claim_new(aw1, "cres_used", [cres_label])
        t.claim_new(ae1, "cres_free")
    return _finish_apply(diagram, move, b, t)


def find_stab03_pattern(diagram, anchor):
    """Recognize the clean two-circle stab03/ladybug pattern at ``anchor``.

    Returns ``(alpha_curve, beta_curve, inner, outer_rep)`` where ``inner``
    lists ``(cycle_rep, region_index)`` for the three enclosed disk regions.
    """
    c1 = diagram.curve_of_dart(anchor)
    if not c1.is_circle or c1.kind == BOUNDARY:
        raise MoveError("anchor is not on an alpha/beta circle")
    xs = set(_curve_crossings(diagram, c1))
    if len(xs) != 2 or len(_curve_crossings(diagram, c1)) != 2:
        raise MoveError("anchor circle must cross its partner exactly twice")
    v = next(iter(xs))
    vd = diagram.vertex_darts(v)
    partner_dart = next(dd for dd in vd if diagram.kind_of_dart(dd) != c1.kind)
    c2 = diagram.curve_of_dart(partner_dart)
    if not c2.is_circle:
        raise MoveError("partner curve is not a circle")
    if set(_curve_crossings(diagram, c2)) != xs or len(_curve_crossings(diagram, c2)) != 2:
        raise MoveError("the two circles are not a clean two-crossing pattern")
    ca, cb = (c1, c2) if c1.kind == ALPHA else (c2, c1)
    comp_darts = {
        dd for e in set(ca.edges) | set(cb.edges) for dd in (2 * e, 2 * e + 1)
    }
    cycles = {diagram.face_of(dd) for dd in comp_darts}
    if len(cycles) != 4:
        raise MoveError("pattern is not embedded in a sphere-like way")
    plain = []  # cycles that are entire plain disk regions
    other = []
    for rep in sorted(cycles):
        r = diagram.region_index_of_face(rep)
        if diagram.regions[r] == frozenset((rep,)):
            plain.append((rep, r))
        else:
            other.append(rep)
    if len(other) > 1:
        raise MoveError("pattern interior is contaminated")
    if len(other) == 1:
        outer_rep = other[0]
        inner = plain
    else:
        # the pattern is alone on its component: any empty side may serve
        # as the outside
        free = [
            (rep, r) for rep, r in plain if not diagram.region_basepoints(r)
        ]
        if not free:
            raise MoveError("pattern has basepoints on every side")
        outer_rep, outer_region = free[-1]
        inner = [(rep, r) for rep, r in plain if rep != outer_rep]
    return ca, cb, inner, outer_rep


def apply_destab03(diagram, move):
    anchor = move.get("anchor")
    _check_dart(anchor, diagram, "anchor")
    ca, cb, inner, _outer = find_stab03_pattern(diagram, anchor)
    labels = []
    for rep, r in inner:
        labels.extend(diagram.region_basepoints(r))
    if sorted(labels) != ["O", "X"]:
        raise MoveError("pattern interior must hold exactly one X and one O")

    comp_edges = set(ca.edges) | set(cb.edges)
    comp_darts = {dd for e in comp_edges for dd in (2 * e, 2 * e + 1)}
    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    for dd in comp_darts:
        t.mark_dirty_face_of(dd)
    inner_regions = {r for _, r in inner}
    for dd in comp_darts:
        r = diagram.region_of_dart(dd)
        if r not in inner_regions:
            t.allow_sphere(r)
    for rep, r in inner:
        t.kill_region(r, consume_basepoints=True)
    for e in comp_edges:
        b.kill_edge(e)
        b.sigma[2 * e] = b.sigma[2 * e + 1] = -1
    return _finish_apply(diagram, move, b, t)


# ---------------------------------------------------------------------------
# handleslide


def _walk_circle_forward(diagram, start_dart):
    """Forward darts of the circle through ``start_dart``, starting there."""
    c = diagram.curve_of_dart(start_dart)
    darts = list(c.darts)
    if start_dart in darts:
        i = darts.index(start_dart)
    else:
        # start dart is a reverse dart: flip the traversal
        darts = [opp(x) for x in reversed(darts)]
        i = darts.index(start_dart)
    return darts[i:] + darts[:i]


def _lasso(diagram, move, tip_dart, over_dart):
    """Band-sum the tip's circle with a parallel copy of the over circle.

    ``tip_dart``: a dart of the sliding circle whose left face is shared
    with ``over_dart``'s left face; the copy of the over circle is pushed
    off on that side.
    """
    k = diagram.kind_of_dart(tip_dart)
    if diagram.kind_of_dart(over_dart) != k:
        raise MoveError("handleslides join curves of one kind")
    if k == BOUNDARY:
        raise MoveError("the boundary cannot slide")
    c_tip = diagram.curve_of_dart(tip_dart)
    c_over = diagram.curve_of_dart(over_dart)
    if not c_tip.is_circle or not c_over.is_circle:
        raise MoveError("arcs may not handleslide")
    if c_tip.index == c_over.index:
        raise MoveError("a circle cannot slide over itself")
    if diagram.face_of(tip_dart) != diagram.face_of(over_dart):
        raise MoveError("slider and target do not share a face; extend the band")
    f_mouth = diagram.face_of(tip_dart)
    r_mouth = diagram.region_index_of_face(f_mouth)
    f_far = diagram.face_of(opp(tip_dart))
    if f_far == f_mouth:
        raise MoveError(
            "slider edge bounds the band face on both sides; reroute the band"
        )
    r_G = diagram.region_index_of_face(f_far)

    over = _walk_circle_forward(diagram, over_dart)
    over_edges = {od // 2 for od in over}
    if tip_dart // 2 in over_edges:
        raise MoveError("tip dart lies on the target circle")
    crossings = []  # (index in walk, left transversal dart)
    for i, od in enumerate(over):
        if diagram.degree(opp(od)) == 4:
            left_t = diagram.sigma[over[(i + 1) % len(over)]]
            crossings.append((i, left_t))
    if not crossings:
        # sliding over a circle that crosses nothing changes no cells; the
        # result differs from the input by a twist homeomorphism only
        return None

    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    t.mark_dirty_face_of(tip_dart, opp(tip_dart))
    for od in over:
        t.mark_dirty_face_of(od)  # collar side
    for _, lt in crossings:
        t.mark_dirty_face_of(lt, opp(lt))

    m = len(crossings)
    # collar face of each gap j (between crossings j and j+1, cyclically);
    # gap m-1 wraps through the walk start and faces the mouth
    gap_first_dart = {}
    for j in range(m):
        i_next = (crossings[j][0] + 1) % len(over)
        gap_first_dart[j] = over[i_next]
    gap_region = {
        j: diagram.region_index_of_face(diagram.face_of(gd))
        for j, gd in gap_first_dart.items()
    }

    # subdivide each left transversal near the circle
    w_info = []
    for i, lt in crossings:
        m_back, m_fwd = b.subdivide_edge(lt)
        w_info.append((m_back, m_fwd))

    pf = {}
    for j in range(m - 1):
        pf[j] = b.new_edge(k)
    legA = b.new_edge(k)
    legB = b.new_edge(k)

    def incoming(j):
        return legA[1] if j == 0 else pf[j - 1][1]

    def outgoing(j):
        return legB[1] if j == m - 1 else pf[j][0]

    # at w_j the pushoff runs parallel to the circle, on its left:
    # counterclockwise (outgoing pushoff, transversal away, incoming
    # pushoff, transversal toward the circle)
    for j, (m_back, m_fwd) in enumerate(w_info):
        b.set_vertex((outgoing(j), m_fwd, incoming(j), m_back))

    # splice: the slider now runs tail(tip) -> w_0 .. w_{m-1} -> head(tip)
    b.replace_in_vertex(tip_dart, legA[0])
    b.replace_in_vertex(opp(tip_dart), legB[0])
    b.kill_edge(tip_dart // 2)
    b.sigma[tip_dart] = b.sigma[opp(tip_dart)] = -1

    # region outcome.  The new slider path cuts the mouth face: the middle
    # piece (facing the stretch) flows together with the face on the old
    # tip edge's far side; the piece behind the tail leg continues the
    # mouth's region, keeping its basepoints and islands; any further
    # piece is a fresh empty region.  Collar strips between the pushoff
    # and the circle are fresh empty regions; collar remainders keep
    # their regions.
    faces_new, rep_new = _compute_faces(b)
    mid_rep = rep_new[over[0]]
    t.pin(over[0], r_G)
    strip_reps = set()
    for j in range(m - 1):
        gd = gap_first_dart[j]
        strip_rep = rep_new[gd]
        strip_reps.add(strip_rep)
        t.claim_new(min(faces_new[strip_rep]), "strip%d" % j)
        # the collar remainder beyond the pushoff keeps the collar's region
        t.claim(pf[j][0], gap_region[j])
    mouth_pieces = sorted(
        {
            rep_new[x]
            for x in rep_new
            if b.old_face_of(x) == f_mouth
            and rep_new[x] != mid_rep
            and rep_new[x] not in strip_reps
        }
    )
    piece_a = rep_new[legA[0]] if rep_new[legA[0]] != mid_rep else rep_new[legA[1]]
    if piece_a != mid_rep and piece_a in mouth_pieces:
        t.pin(piece_a, r_mouth)
        for i, r in enumerate(c for c in mouth_pieces if c != piece_a):
            t.claim_new(min(faces_new[r]), "cutoff%d" % i)
    if not mouth_pieces and r_mouth != r_G:
        remaining = [c for c in diagram.regions[r_mouth] if c != f_mouth]
        if not remaining:
            if diagram.region_basepoints(r_mouth):
                raise MoveError(
                    "handleslide would strand the basepoints of the band region"
                )
            t.kill_region(r_mouth)
    return _finish_apply(diagram, move, b, t, note="slide over %d crossings" % m)


# ---------------------------------------------------------------------------
# markers


def apply_marker_add(diagram, move):
    e = move.get("edge")
    _check_dart(e, diagram, "edge")
    if diagram.kind_of_dart(e) == BOUNDARY:
        raise MoveError("markers only subdivide curve edges")
    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    t.mark_dirty_face_of(e, opp(e))
    b.subdivide_edge(e)
    return _finish_apply(diagram, move, b, t)


def apply_marker_remove(diagram, move):
    vd = move.get("vertex")
    _check_dart(vd, diagram, "vertex")
    if diagram.degree(vd) != 2:
        raise MoveError("not a 2-valent vertex")
    if diagram.kind_of_dart(vd) == BOUNDARY:
        raise MoveError("boundary corners may not be removed")
    b = MapBuilder(diagram)
    t = Transport(diagram, b)
    t.mark_dirty_face_of(vd, opp(vd))
    other = diagram.sigma[vd]
    t.mark_dirty_face_of(other, opp(other))
    b.unsubdivide(vd)
    return _finish_apply(diagram, move, b, t)


# ---------------------------------------------------------------------------
# dispatch and scripts


_APPLIERS = {
    "finger": apply_finger,
    "bigon_death": apply_bigon_death,
    "triangle": apply_triangle,
    "stab12": apply_stab12,
    "destab12": apply_destab12,
    "stab03": apply_stab03,
    "destab03": apply_destab03,
    "marker_add": apply_marker_add,
    "marker_remove": apply_marker_remove,
}


def apply_move(diagram, move):
    """Apply one move; returns ``(diagram, MoveRecord)``."""
    if move.variant == "slide":
        new_d, rec, _ = _apply_slide_full(diagram, move)
        return new_d, rec
    try:
        fn = _APPLIERS[move.variant]
    except KeyError:
        raise MoveError("unknown move variant %r" % move.variant)
    new_d, rec, _ = fn(diagram, move)
    return new_d, rec


def check_move(diagram, move):
    """Legality check without effect: returns None or the error message."""
    try:
        apply_move(diagram, move)
    except MoveError as exc:
        return str(exc)
    return None


def _apply_slide_full(diagram, move):
    """Handleslide = finger corridor for the band, then the lasso."""
    slider = move.get("slider")
    over = move.get("over")
    band = move.get("band", ()) or ()
    _check_dart(slider, diagram, "slider")
    _check_dart(over, diagram, "over")
    if diagram.kind_of_dart(slider) != diagram.kind_of_dart(over):
        raise MoveError("handleslides join curves of one kind")
    if not diagram.curve_of_dart(slider).is_circle:
        raise MoveError("arcs may not handleslide")
    d = diagram
    tip = slider
    over_cur = over
    total = [0, 0]
    for cross in band:
        d2, rec, dart_map = apply_finger(d, finger(tip, cross))
        # tip edge of the push: dart 'ta' = n_darts-ish; recover from map:
        # apply_finger allocates T as the second new edge: its 'ta' dart is
        # the tip dart for the next step.  The dart map relabels; the tip
        # dart before compaction is len(diagram.sigma) + 2 (see surgery).
        tip = dart_map[len(d.sigma) + 2]
        over_cur = dart_map[over_cur] if over_cur in dart_map else None
        if over_cur is None:
            raise MoveError("band corridor consumed the target circle")
        total[0] += rec.d_vertices
        total[1] += rec.d_edges
        d = d2
    res = _lasso(d, move, tip, over_cur)
    if res is None:
        rec = MoveRecord(move, total[0], total[1], 0, 0, 0, 0, 0,
                         note="slide over clean circle")
        return d, rec, None
    new_d, rec, dart_map = res
    rec = MoveRecord(move, rec.d_vertices + total[0], rec.d_edges + total[1],
                     0, 0, 0, 0, 0, note=rec.note)
    return new_d, rec, dart_map


@dataclass(frozen=True)
class ScriptStep:
    index: int
    move: Move
    ok: bool
    record: MoveRecord = None
    error: str = ""
    annotation: str = ""


@dataclass
class ScriptReport:
    steps: list
    ok: bool
    halted_at: int = -1

    def summary(self):
        lines = []
        for s in self.steps:
            if s.ok:
                lines.append(
                    "[%03d] ok   %-12s dV=%+d dE=%+d chi=%+d genus=%+d X=%+d O=%+d %s"
                    % (
                        s.index, s.move.variant, s.record.d_vertices,
                        s.record.d_edges, s.record.d_chi, s.record.d_genus,
                        s.record.d_x, s.record.d_o,
                        ("# " + s.annotation) if s.annotation else "",
                    )
                )
            else:
                lines.append("[%03d] FAIL %-12s %s" % (s.index, s.move.variant, s.error))
        return "\n".join(lines)


def apply_script(diagram, moves, annotations=None):
    """Apply a move sequence; halts at the first illegal move.

    Returns ``(diagram, ScriptReport)``; the diagram is the last good state.
    """
    annotations = annotations or {}
    d = diagram
    steps = []
    for i, mv in enumerate(moves):
        try:
            d2, rec = apply_move(d, mv)
        except MoveError as exc:
            steps.append(ScriptStep(i, mv, False, None, str(exc), annotations.get(i, "")))
            return d, ScriptReport(steps, ok=False, halted_at=i)
        steps.append(ScriptStep(i, mv, True, rec, "", annotations.get(i, "")))
        d = d2
    return d, ScriptReport(steps, ok=True)

