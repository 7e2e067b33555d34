"""Elementary checks of the move surgeries on tiny diagrams."""

import pytest

from heegkit.diagram import Diagram, empty_sphere, ALPHA, BETA
from heegkit import moves as mv


def sphere_with_pair():
    """Alpha and beta circle crossing twice on S^2 (the stab03 shape)."""
    d0 = empty_sphere()
    d, rec = mv.apply_move(d0, mv.stab03(sphere=0))
    return d


def torus_pair():
    """One-vertex torus diagram (alpha and beta meeting once)."""
    d0 = empty_sphere(1)
    d, rec = mv.apply_move(d0, mv.stab12(sphere=0))
    return d


def test_stab12_then_destab12_roundtrip():
    d0 = empty_sphere(1)
    d1, rec = mv.apply_move(d0, mv.stab12(sphere=0))
    assert rec.d_genus == 1 and rec.d_chi == -2
    r = d1.validate()
    assert r.ok and r.genus == 1
    assert d1.det_abs() == 1
    # find darts on the two circles
    a = next(c for c in d1.circles(ALPHA))
    b = next(c for c in d1.circles(BETA))
    d2, rec2 = mv.apply_move(d1, mv.destab12(a.darts[0], b.darts[0]))
    assert rec2.d_genus == -1
    assert d2.validate().ok
    assert d2.n_edges == 0 and len(d2.regions) == 1 and not d2.regions[0]
    assert d2.basepoints == d0.basepoints


def test_stab03_then_destab03_roundtrip():
    d0 = empty_sphere()
    d1, rec = mv.apply_move(d0, mv.stab03(sphere=0))
    assert rec.d_x == 1 and rec.d_o == 1 and rec.d_genus == 0
    r = d1.validate()
    assert r.ok and r.genus == 0
    assert r.n_vertices == 2 and r.n_edges == 4
    assert len(d1.regions) == 4  # lens, two crescents, ambient
    a = next(c for c in d1.circles(ALPHA))
    d2, rec2 = mv.apply_move(d1, mv.destab03(a.darts[0]))
    assert d2.validate().ok
    assert d2.n_edges == 0 and len(d2.basepoints) == 0


def test_stab03_variants_place_labels():
    d0 = empty_sphere()
    for variant in range(4):
        d1, _ = mv.apply_move(d0, mv.stab03(sphere=0, variant=variant))
        labels = sorted(lb for lb, _ in d1.basepoints)
        assert labels == ["O", "X"]


def test_destab03_contaminated_interior_refused():
    d = sphere_with_pair()
    # drop a second pattern inside the lens region
    lens = next(
        i for i, reg in enumerate(d.regions)
        if len(reg) == 1 and "X" in d.region_basepoints(i)
    )
    anchor = next(iter(d.regions[lens]))
    d2, _ = mv.apply_move(d, mv.stab03(anchor=anchor))
    a = d2.curve_of_dart(anchor)
    # the original pattern's interior now contains stray curves
    assert a.kind in (ALPHA, BETA)
    with pytest.raises(mv.MoveError):
        mv.apply_move(d2, mv.destab03(0))


def test_finger_push_and_bigon_death_roundtrip():
    d = torus_pair()
    # push the alpha strand across the beta edge: alpha's dart 0
    # faces: the square face; crossing edge: the beta edge (darts 2,3)
    d1, rec = mv.apply_move(d, mv.finger(0, 2))
    assert rec.d_vertices == 2 and rec.d_edges == 4 and rec.d_chi == 0
    r = d1.validate()
    assert r.ok and r.genus == 1
    # find the bigon: a region that is a single 2-dart cycle without bp
    bigons = [
        i for i, reg in enumerate(d1.regions)
        if len(reg) == 1
        and len(d1.face_darts(next(iter(reg)))) == 2
        and not d1.region_basepoints(i)
    ]
    assert bigons
    face_dart = next(iter(d1.regions[bigons[0]]))
    d2, rec2 = mv.apply_move(d1, mv.bigon_death(face_dart))
    assert d2.validate().ok
    assert d2.n_vertices == d.n_vertices and d2.n_edges == d.n_edges
    assert d2.det_abs() == 1


def test_finger_requires_common_region():
    d = sphere_with_pair()
    # alpha dart in the lens pushed across a beta edge not on the lens
    lens_idx = next(
        i for i, reg in enumerate(d.regions)
        if len(reg) == 1 and set(d.region_basepoints(i)) == {"X"}
    )
    lens_rep = next(iter(d.regions[lens_idx]))
    lens_darts = d.face_darts(lens_rep)
    a_dart = next(x for x in lens_darts if d.kind_of_dart(x) == ALPHA)
    far_beta = next(
        x for x in range(d.n_darts)
        if d.kind_of_dart(x) == BETA and d.face_of(x) != lens_rep
    )
    with pytest.raises(mv.MoveError):
        mv.apply_move(d, mv.finger(a_dart, far_beta))


def test_bigon_with_basepoint_refused():
    d = sphere_with_pair()
    # the lens holds an X: killing it must fail; the free crescent is legal
    lens_idx = next(
        i for i, reg in enumerate(d.regions)
        if len(reg) == 1 and set(d.region_basepoints(i)) == {"X"}
    )
    free_idx = next(
        i for i, reg in enumerate(d.regions)
        if len(reg) == 1 and not d.region_basepoints(i)
    )
    with pytest.raises(mv.MoveError):
        mv.apply_move(d, mv.bigon_death(next(iter(d.regions[lens_idx]))))
    d2, _ = mv.apply_move(d, mv.bigon_death(next(iter(d.regions[free_idx]))))
    assert d2.validate().ok


def test_marker_add_remove_roundtrip():
    d = torus_pair()
    d1, _ = mv.apply_move(d, mv.marker_add(0))
    assert d1.validate().ok and d1.n_vertices == d.n_vertices + 1
    marker = next(
        rep for rep, orb in d1.vertices().items() if len(orb) == 2
    )
    d2, _ = mv.apply_move(d1, mv.marker_remove(marker))
    assert d2.validate().ok
    assert d2.n_vertices == d.n_vertices
    assert d2 == d


def test_script_report():
    d0 = empty_sphere(1)
    d, rep = mv.apply_script(d0, [mv.stab12(sphere=0), mv.stab03(anchor=0)])
    assert rep.ok and len(rep.steps) == 2
    assert d.validate().ok
    d2, rep2 = mv.apply_script(d0, [mv.stab12(sphere=0), mv.destab03(anchor=0)])
    assert not rep2.ok and rep2.halted_at == 1
    assert d2.validate().ok  # last good state
