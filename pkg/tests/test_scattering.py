import random
from fractions import Fraction

import pytest

from clusterscat import _linalg as la
from clusterscat.qtorus import TCoeff, TorusElement
from clusterscat.scattering import (
    GenericityError,
    chamber_locate,
    check_consistency,
    consistent_complete,
    context_for_seed,
    cross_wall,
    initial_diagram,
    path_ordered_product,
    quantum_dilog,
)
from clusterscat.seeds import a2_seed, annulus_seed, cyclic_a3_prin_seed


def complete_a2(order=4, d=2):
    return consistent_complete(initial_diagram(a2_seed(d), "A", Fraction(order)))


def random_loops(rng, rank, count, scale=6):
    loops = []
    for _ in range(count):
        pts = []
        for _ in range(rng.randint(3, 5)):
            pts.append(
                tuple(
                    Fraction(rng.randint(-scale * 7, scale * 7), 7)
                    for _ in range(rank)
                )
            )
        pts.append(pts[0])
        loops.append(pts)
    return loops


def test_initial_diagram_a2():
    diag = initial_diagram(a2_seed(), "A", Fraction(3))
    bases = sorted(tuple(w.base) for w in diag.walls)
    assert bases == [(-1, 0), (0, 1)]
    for w in diag.walls:
        assert w.is_incoming()
        # Hamiltonian of a plain dilogarithm: (-1)^(k-1)/k
        for k, h in w.ham.items():
            assert h == TCoeff.of(Fraction((-1) ** (k - 1), k))


def test_initial_diagram_annulus_directions():
    diag = initial_diagram(annulus_seed(), "A", Fraction(3))
    bases = sorted(tuple(w.base) for w in diag.walls)
    assert bases == [(-2, 0, 1, 1), (0, 2, -1, -1)]


def test_initial_diagram_empty_for_frozen_only():
    from clusterscat.seeds import CompatibleSeed

    seed = CompatibleSeed.root(["a", "b"], [0, 1], [[0, 1], [-1, 0]],
                               [[0, 1], [-1, 0]])
    diag = initial_diagram(seed, "A", Fraction(3))
    assert diag.walls == []


def test_quantum_dilog_ad_action():
    # Ad on z^p with Lambda(v,p) = d gives z^p + z^(p+v)
    seed = a2_seed()
    ctx = context_for_seed(seed, "A")
    w = quantum_dilog(ctx, (0, 1), 2, Fraction(6))
    p = (-1, 0)  # Lambda(v1, p) = 2 = d
    x = TorusElement.monomial(ctx.ambient, p)
    img = cross_wall(ctx, x, w, 1, Fraction(6), la.vec(p))
    assert img == TorusElement(ctx.ambient, {(-1, 0): 1, (-1, 1): 1})
    # pairing zero: fixed
    q = (0, 5)
    xq = TorusElement.monomial(ctx.ambient, q)
    assert cross_wall(ctx, xq, w, 1, Fraction(6), la.vec(q)) == xq


def test_cross_wall_inverse_roundtrip():
    seed = annulus_seed()
    ctx = context_for_seed(seed, "A")
    diag = initial_diagram(seed, "A", Fraction(6))
    w = diag.walls[0]
    rng = random.Random(3)
    for _ in range(10):
        p = tuple(rng.randint(-2, 2) for _ in range(4))
        x = TorusElement.monomial(ctx.ambient, p)
        y = cross_wall(ctx, x, w, 1, Fraction(6), la.vec(p))
        back = cross_wall(ctx, y, w, -1, Fraction(6), la.vec(p))
        # equality mod order 6 relative to p
        diff = back - x
        assert all(
            ctx.order(la.sub(la.vec(q), la.vec(p))) > 6 for q in diff.terms
        )


def test_a2_completion_exactly_one_outgoing_wall():
    diag = complete_a2(order=4)
    outgoing = [w for w in diag.walls if not w.is_incoming()]
    assert len(outgoing) == 1
    w = outgoing[0]
    assert tuple(w.base) == (-1, 1)
    # support: the ray spanned by (1,-1)
    assert w.support.contains(la.vec([1, -1]))
    assert w.support.contains(la.vec([3, -3]))
    assert not w.support.contains(la.vec([-1, 1]))
    assert not w.support.contains(la.vec([1, 0]))
    # function: Psi_{t^d}(z^(v1+v2)), i.e. dilog Hamiltonian coefficients
    for k, h in w.ham.items():
        assert h == TCoeff.of(Fraction((-1) ** (k - 1), k))
    assert 1 in w.ham and 2 in w.ham


def test_a2_completion_orders_agree_on_overlap():
    d3 = complete_a2(order=3)
    d5 = complete_a2(order=5)
    walls3 = {(tuple(w.base), w.support.key()): w for w in d3.walls}
    walls5 = {(tuple(w.base), w.support.key()): w for w in d5.walls}
    assert set(walls3) <= set(walls5)
    ctx = d3.context
    for key, w3 in walls3.items():
        w5 = walls5[key]
        for k, h in w3.ham.items():
            if ctx.order(la.scale(k, w3.base)) <= 3:
                assert w5.ham.get(k, TCoeff.zero()) == h


def test_a2_pentagon_loop_identity():
    diag = complete_a2(order=6)
    ctx = diag.context
    loop = [(3, 1), (-1, 3), (-3, -1), (1, -3), (3, 1)]
    crossed = 0
    for a, b in zip(loop, loop[1:]):
        from clusterscat.scattering import _segment_crossings

        crossed += len(
            _segment_crossings(ctx, diag.nontrivial_walls(), la.vec(a), la.vec(b))
        )
    assert crossed == 5  # the pentagon: five wall crossings around the origin
    for p in [(1, 0), (0, 1), (-1, 2), (2, -1)]:
        x = TorusElement.monomial(ctx.ambient, p)
        assert path_ordered_product(diag, loop, x, Fraction(6), la.vec(p)) == x


def test_annulus_completion_wall_directions_to_order_5():
    diag = consistent_complete(initial_diagram(annulus_seed(), "A", Fraction(5)))
    outgoing = sorted(
        tuple(w.base) for w in diag.walls if not w.is_incoming()
    )
    v1 = la.vec([0, 2, -1, -1])
    v2 = la.vec([-2, 0, 1, 1])

    def combo(a, b):
        return tuple(la.primitive(la.add(la.scale(a, v1), la.scale(b, v2))))

    # directions -u for u in {(1,-2),(2,-1),(2,-3),(3,-2),(1,-1)} in unfrozen
    # coordinates correspond to bases 2v1+v2, v1+2v2, 3v1+2v2, 2v1+3v2, and
    # the limiting primitive (v1+v2)/2
    expected = sorted(
        {
            combo(2, 1),
            combo(1, 2),
            combo(3, 2),
            combo(2, 3),
            combo(1, 1),
        }
    )
    assert outgoing == expected
    limiting = next(
        w for w in diag.walls if tuple(w.base) == combo(1, 1)
    )
    # even levels only on the limiting wall (parity forced by consistency)
    assert all(k % 2 == 0 for k in limiting.ham)
    assert 2 in limiting.ham


def test_annulus_consistency_certificate():
    diag = consistent_complete(initial_diagram(annulus_seed(), "A", Fraction(4)))
    rng = random.Random(99)
    loops = random_loops(rng, 4, 12)
    good = []
    for loop in loops:
        try:
            assert check_consistency(diag, [loop])
            good.append(loop)
        except GenericityError:
            continue
    assert len(good) >= 8


def test_frozen_translation_invariance():
    diag = consistent_complete(initial_diagram(annulus_seed(), "A", Fraction(4)))
    # every wall support is closed under adding frozen duals e3*, e4*
    for w in diag.walls:
        for n in list(w.support.eqs) + list(w.support.ineqs):
            assert n[2] == 0 and n[3] == 0
    # crossing acts trivially on frozen monomials
    ctx = diag.context
    f = TorusElement.monomial(ctx.ambient, (0, 0, 1, -2))
    for w in diag.walls:
        assert cross_wall(ctx, f, w, 1, Fraction(4), la.vec((0, 0, 1, -2))) == f


def test_cyclic_a3_classical_completion():
    seed = cyclic_a3_prin_seed()
    diag = consistent_complete(initial_diagram(seed, "A", Fraction(4),
                                               classical=True))
    ctx = diag.context
    # exactly three outgoing walls with functions Psi(z^(u_i)), u_i=v_{i+1}+v_{i-1}
    outgoing = [w for w in diag.walls if not w.is_incoming()]
    assert len(outgoing) == 3
    v = {i: la.vec(seed.v_vector(i)) for i in range(3)}
    expected_bases = {
        tuple(la.primitive(la.add(v[(i + 1) % 3], v[(i - 1) % 3])))
        for i in range(3)
    }
    assert {tuple(w.base) for w in outgoing} == expected_bases
    for w in outgoing:
        # plain dilogarithm at t=1: h_k = (-1)^(k-1)/k
        for k, h in w.ham.items():
            assert h == TCoeff.of(Fraction((-1) ** (k - 1), k))
    rng = random.Random(5)
    loops = random_loops(rng, 6, 6, scale=4)
    good = 0
    for loop in loops:
        try:
            assert check_consistency(diag, [loop])
            good += 1
        except GenericityError:
            continue
    assert good >= 3


def test_x_side_initial_diagram():
    seed = a2_seed()
    diag = initial_diagram(seed, "X", Fraction(4))
    bases = sorted(tuple(w.base) for w in diag.walls)
    assert bases == [(0, 1), (1, 0)]
    done = consistent_complete(diag)
    assert len(done.nontrivial_walls()) == 3


def test_chamber_locate():
    seed = a2_seed()
    assert chamber_locate(seed, (3, 2)) == ()
    # Q = (-1, -1/2): reached by mutating at 1 then 2 (0-indexed (0, 1))
    assert chamber_locate(seed, (-1, Fraction(-1, 2))) == (0, 1)
    # five chambers in total
    paths = set()
    rng = random.Random(1)
    for _ in range(60):
        q = (Fraction(rng.randint(-20, 20), 7), Fraction(rng.randint(-20, 20), 7))
        if q[0] == 0 or q[1] == 0:
            continue
        try:
            p = chamber_locate(seed, q)
        except GenericityError:
            continue
        if p is not None:
            paths.add(p)
    assert len(paths) == 5
    # annulus: points on the limiting side stay outside the cluster complex
    ann = annulus_seed()
    q = (1, -1, Fraction(1, 3), Fraction(1, 5))
    # <e1,q> = 1 > 0, <e2,q> = -1: strictly between the two fans
    assert chamber_locate(ann, q, depth=6) is None


def test_diagram_dump_deterministic():
    d1 = complete_a2(order=3)
    d2 = complete_a2(order=3)
    assert d1.dump() == d2.dump()
    assert "wall base=(-1,1)" in d1.dump()
