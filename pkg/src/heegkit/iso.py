"""Exact isomorphism of diagrams via canonical labelling.

Two diagrams are isomorphic when a bijection of darts commutes with the
rotation system and the edge pairing, preserves edge kinds (alpha/beta/
boundary), carries the region partition, holes and basepoint multisets
across, and preserves the surface orientation (reflections do not count).
Curve indices and dart numbers carry no meaning.

The canonical form relabels every sigma-component by the breadth-first
traversal, over all start darts, that minimizes the component signature;
ties (automorphisms, identical components) are broken against the full
signature including regions and basepoints.  Canonical forms make
isomorphism a string comparison and serialized output replay-stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from .diagram import Diagram, DiagramError, opp


class IsoError(DiagramError):
    pass


def _component_darts(d):
    """Sigma-components of the darts (cells connected through vertices/edges)."""
    n = d.n_darts
    seen = [False] * n
    comps = []
    for d0 in range(n):
        if seen[d0]:
            continue
        stack = [d0]
        comp = []
        seen[d0] = True
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in (d.sigma[x], opp(x)):
                if not seen[y]:
                    seen[y] = True
                    stack.append(y)
        comps.append(sorted(comp))
    return comps


def _bfs_labelling(d, start, comp_size):
    """Deterministic traversal labelling from a start dart.

    Returns ``order``: list of old darts in new-label order.
    """
    label = {start: 0}
    order = [start]
    i = 0
    while i < len(order):
        x = order[i]
        i += 1
        for y in (d.sigma[x], opp(x)):
            if y not in label:
                label[y] = len(order)
                order.append(y)
    return order


def _component_signature(d, order):
    label = {x: i for i, x in enumerate(order)}
    sig = []
    for x in order:
        sig.append(label[d.sigma[x]])
        sig.append(label[opp(x)])
        sig.append(d.edge_kind[x // 2])
    return tuple(sig)


def _best_labellings(d, comp):
    """All traversal orders achieving the minimal component signature."""
    best_sig = None
    best = []
    for start in comp:
        order = _bfs_labelling(d, start, len(comp))
        sig = _component_signature(d, order)
        if best_sig is None or sig < best_sig:
            best_sig = sig
            best = [order]
        elif sig == best_sig:
            best.append(order)
    return best_sig, best


def _full_signature(d, dart_order):
    """Signature of the entire diagram under a global dart order."""
    label = {x: i for i, x in enumerate(dart_order)}
    sig_sigma = tuple(label[d.sigma[x]] for x in dart_order)
    sig_opp = tuple(label[opp(x)] for x in dart_order)
    sig_kind = "".join(d.edge_kind[x // 2] for x in dart_order)
    # faces under new labels: rep = min new label in the cycle
    face_new = {}
    for rep, orbit in d.faces().items():
        face_new[rep] = min(label[x] for x in orbit)
    regions = tuple(
        sorted(tuple(sorted(face_new[rep] for rep in reg)) for reg in d.regions)
    )
    # basepoints must follow the sorted region order
    reg_sorted = sorted(
        range(len(d.regions)),
        key=lambda i: tuple(sorted(face_new[rep] for rep in d.regions[i])),
    )
    reg_rank = {old: new for new, old in enumerate(reg_sorted)}
    bps = tuple(sorted((reg_rank[reg], lb) for lb, reg in d.basepoints))
    holes = tuple(sorted(face_new[rep] for rep in d.holes))
    return (sig_sigma, sig_opp, sig_kind, regions, holes, bps)


_MAX_COMBINATIONS = 20000


def canonical_order(d):
    """The canonical dart order of a diagram (old darts in new order)."""
    comps = _component_darts(d)
    per_comp = []  # (signature, [labellings])
    for comp in comps:
        sig, labellings = _best_labellings(d, comp)
        per_comp.append((sig, labellings, comp))
    # group identical component signatures; identical ones may permute
    per_comp.sort(key=lambda t: (len(t[2]), t[0]))
    groups = []
    for sig, labellings, comp in per_comp:
        if groups and groups[-1][0] == (len(comp), sig):
            groups[-1][1].append(labellings)
        else:
            groups.append([(len(comp), sig), [labellings]])

    def candidate_orders():
        def expand(gi):
            if gi == len(groups):
                yield []
                return
            _, members = groups[gi]
            idxs = list(range(len(members)))
            perms = [idxs] if len(idxs) == 1 else list(permutations(idxs))
            for rest in expand(gi + 1):
                for pi in perms:
                    # for each member choose each optimal labelling
                    def member_choices(mi):
                        if mi == len(pi):
                            yield []
                            return
                        for lab in members[pi[mi]]:
                            for tail in member_choices(mi + 1):
                                yield [lab] + tail
                    for choice in member_choices(0):
                        yield [x for lab in choice for x in lab] + rest

        yield from expand(0)

    best_order = None
    best_sig = None
    count = 0
    for order in candidate_orders():
        count += 1
        if count > _MAX_COMBINATIONS:
            raise IsoError("too many symmetric labellings; diagram too symmetric")
        sig = _full_signature(d, order)
        if best_sig is None or sig < best_sig:
            best_sig = sig
            best_order = order
    return best_order, best_sig


def canonical_form(d):
    """Relabelled copy of ``d`` with canonical dart numbering."""
    order, _sig = canonical_order(d)
    label = {x: i for i, x in enumerate(order)}
    # canonical labels must keep edge pairing d ^ 1; the traversal visits
    # opp immediately so pairs stay adjacent, but not necessarily aligned.
    # Repair: renumber edges in first-seen order.
    edge_rank = {}
    for x in order:
        edge_rank.setdefault(x // 2, len(edge_rank))
    dart_label = {}
    seen_edge = set()
    for x in order:
        e = x // 2
        if e in seen_edge:
            continue
        seen_edge.add(e)
        dart_label[x] = 2 * edge_rank[e]
        dart_label[opp(x)] = 2 * edge_rank[e] + 1
    n = d.n_darts
    sigma = [0] * n
    kinds = [""] * (n // 2)
    for x in range(n):
        sigma[dart_label[x]] = dart_label[d.sigma[x]]
        kinds[dart_label[x] // 2] = d.edge_kind[x // 2]
    regions = [
        tuple(sorted(dart_label[rep] for rep in reg)) for reg in d.regions
    ]
    holes = tuple(dart_label[rep] for rep in d.holes)
    # basepoints: regions are re-sorted by the Diagram constructor; pass
    # indices in the constructor's input order
    bps = [(lb, reg) for lb, reg in d.basepoints]
    out = Diagram(sigma, "".join(kinds), regions, holes, bps)
    return out, dart_label


@dataclass(frozen=True)
class IsoCertificate:
    """A verified isomorphism: ``dart_map[d1 dart] = d2 dart``."""

    dart_map: tuple

    def check(self, d1, d2):
        m = self.dart_map
        if len(m) != d1.n_darts or d1.n_darts != d2.n_darts:
            return False
        if sorted(m) != list(range(d2.n_darts)):
            return False
        for x in range(d1.n_darts):
            if m[d1.sigma[x]] != d2.sigma[m[x]]:
                return False
            if m[opp(x)] != opp(m[x]):
                return False
            if d1.edge_kind[x // 2] != d2.edge_kind[m[x] // 2]:
                return False
        # regions, holes, basepoints
        def reg_map(reg):
            return frozenset(d2.face_of(m[rep]) for rep in reg)

        r1 = {reg_map(reg) for reg in d1.regions}
        r2 = set(d2.regions)
        if r1 != r2 or len(d1.regions) != len(d2.regions):
            return False
        if {d2.face_of(m[h]) for h in d1.holes} != set(d2.holes):
            return False
        bp1 = {}
        for lb, reg in d1.basepoints:
            key = reg_map(d1.regions[reg])
            bp1.setdefault(key, []).append(lb)
        bp2 = {}
        for lb, reg in d2.basepoints:
            bp2.setdefault(d2.regions[reg], []).append(lb)
        if {k: sorted(v) for k, v in bp1.items()} != {
            k: sorted(v) for k, v in bp2.items()
        }:
            return False
        return True

    def inverse(self):
        inv = [0] * len(self.dart_map)
        for i, j in enumerate(self.dart_map):
            inv[j] = i
        return IsoCertificate(tuple(inv))

    def compose(self, other):
        """self: d1->d2, other: d2->d3, result d1->d3."""
        return IsoCertificate(
            tuple(other.dart_map[j] for j in self.dart_map)
        )


def is_isomorphic(d1, d2):
    """Return a verified :class:`IsoCertificate` or ``None``."""
    if d1.n_darts != d2.n_darts or d1.edge_kind.count("A") != d2.edge_kind.count("A"):
        return None
    if len(d1.regions) != len(d2.regions) or len(d1.holes) != len(d2.holes):
        return None
    if sorted(lb for lb, _ in d1.basepoints) != sorted(lb for lb, _ in d2.basepoints):
        return None
    o1, s1 = canonical_order(d1)
    o2, s2 = canonical_order(d2)
    if s1 != s2:
        return None
    # map: d1 dart at canonical position i -> d2 dart at position i
    m = [0] * d1.n_darts
    for i in range(d1.n_darts):
        m[o1[i]] = o2[i]
    cert = IsoCertificate(tuple(m))
    if not cert.check(d1, d2):
        raise IsoError("canonical forms agree but certificate fails; labelling bug")
    return cert
