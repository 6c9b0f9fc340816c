"""Walls, wall-crossing, and order-by-order consistent completion.

A wall function is stored as the log-Hamiltonian of the attached group
element: coefficients h_k of zhat^(k v0) for a primitive direction base v0,
where zhat^m = z^m / (t^(delta(m)) - t^(-delta(m))) and delta(m) is the
lattice index of Phi_2(m).  The adjoint action of exp(sum h_k zhat^(k v0))
on a monomial z^p multiplies level-k steps by [Phi(v0,p)/delta(v0)] in base
t^(k delta(v0)); this reproduces the quantum-binomial crossing formula
exactly and specializes to (1+z^v)^(lambda/d') at t=1.  All arithmetic is
exact; truncation is by a rational grading functional normalized to 1 on the
positive-cone generators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from . import _linalg as la
from ._linalg import Mat, Vec
from .qtorus import Lattice, TCoeff, TorusElement, qint
from .seeds import CompatibleSeed


class GenericityError(ValueError):
    """A base point or path fails the genericity requirements."""


class NonIntegralPairingError(ValueError):
    """A wall crossing met an exponent with non-integral pairing."""


class JointGeneralityError(ValueError):
    """A joint configuration outside the supported generality."""


# ---------------------------------------------------------------------------
# polyhedral support


@dataclass(frozen=True)
class Cone:
    """A rational polyhedral cone {x : <n,x> = 0 (eqs), <n,x> >= 0 (ineqs)}.

    rays is a generating list kept for dumps and joint bookkeeping; the
    lineality space is encoded by opposite ray pairs.
    """

    dim_ambient: int
    eqs: tuple[Vec, ...]
    ineqs: tuple[Vec, ...]
    rays: tuple[Vec, ...]

    @staticmethod
    def make(dim, eqs=(), ineqs=(), rays=()) -> "Cone":
        eqs = tuple(la.vec(e) for e in eqs)
        ineqs = tuple(la.vec(e) for e in ineqs)
        rays = tuple(la.vec(r) for r in rays)
        return Cone(dim, eqs, ineqs, rays)

    @staticmethod
    def hyperplane(normal) -> "Cone":
        normal = la.vec(normal)
        rays = []
        for b in la.nullspace(la.mat([normal])):
            rays.append(la.vec(b))
            rays.append(la.scale(-1, b))
        return Cone.make(len(normal), eqs=[normal], rays=rays)

    def contains(self, x: Vec) -> bool:
        x = la.vec(x)
        return all(la.dot(n, x) == 0 for n in self.eqs) and all(
            la.dot(n, x) >= 0 for n in self.ineqs
        )

    def span_equations(self) -> tuple[Vec, ...]:
        return self.eqs

    def key(self):
        def canon(ns):
            return tuple(sorted(la.primitive(n) for n in ns if not la.is_zero(n)))

        return (canon(self.eqs), canon(self.ineqs))


def _strictly_feasible(ineqs: list[Vec], dim: int) -> Vec | None:
    """A point x with <a,x> > 0 for all a, via Fourier-Motzkin; None if none."""
    if dim == 0:
        return () if not ineqs else None
    if not ineqs:
        return la.zero_vec(dim)
    if dim == 1:
        signs = {a[0] > 0 for a in ineqs if a[0] != 0}
        if any(a[0] == 0 for a in ineqs):
            return None
        if len(signs) > 1:
            return None
        return (Fraction(1),) if True in signs else (Fraction(-1),)
    pos = [a for a in ineqs if a[-1] > 0]
    neg = [a for a in ineqs if a[-1] < 0]
    zero = [a[:-1] for a in ineqs if a[-1] == 0]
    reduced = list(zero)
    for a in pos:
        for b in neg:
            # eliminate x_last from <a,x> > 0 and <b,x> > 0
            comb = la.sub(
                la.scale(-b[-1], la.vec(a[:-1])), la.scale(a[-1], la.vec(b[:-1]))
            )
            if la.is_zero(comb):
                continue
            reduced.append(comb)
    x = _strictly_feasible([la.vec(r) for r in reduced], dim - 1)
    if x is None:
        return None
    lowers = [
        -la.dot(la.vec(a[:-1]), x) / a[-1] for a in pos
    ]  # x_last > each of these
    uppers = [-la.dot(la.vec(b[:-1]), x) / b[-1] for b in neg]
    lo = max(lowers) if lowers else None
    hi = min(uppers) if uppers else None
    if lo is None and hi is None:
        val = Fraction(1)
    elif lo is None:
        val = hi - 1
    elif hi is None:
        val = lo + 1
    else:
        if lo >= hi:
            return None
        val = (lo + hi) / 2
    return x + (val,)


# ---------------------------------------------------------------------------
# ambient context


class ScatteringContext:
    """Ambient data: lattice, twisting form, positive cone, grading, mode."""

    def __init__(self, ambient: Lattice, form: Mat, cone_gens, classical=False,
                 seed: CompatibleSeed | None = None, side: str = "A"):
        self.ambient = ambient
        self.form = la.mat(form)
        self.cone_gens = tuple(la.vec(g) for g in cone_gens)
        self.classical = classical
        self.seed = seed
        self.side = side
        if la.rank(la.mat(self.cone_gens)) != len(self.cone_gens):
            raise ValueError(
                "positive-cone generators must be linearly independent"
            )
        rows = la.mat(self.cone_gens)
        ones = la.vec([1] * len(self.cone_gens))
        delta = la.solve(rows, ones)
        if delta is None:
            raise ValueError("no grading functional with value 1 on generators")
        self.grading = delta
        self._delta_cache: dict[tuple, Fraction] = {}
        self._exp_cache: dict[tuple, list[TCoeff]] = {}

    # -- lattice/cone helpers ------------------------------------------------

    def form_val(self, u: Vec, v: Vec) -> Fraction:
        return la.bilinear(self.form, la.vec(u), la.vec(v))

    def order(self, m: Vec) -> Fraction:
        return la.dot(self.grading, la.vec(m))

    def in_positive_cone(self, m: Vec) -> bool:
        """m in the saturation: a lattice point of the rational cone, m != 0."""
        m = la.vec(m)
        if la.is_zero(m) or not la.is_integral(m):
            return False
        coords = la.cone_coords(list(self.cone_gens), m)
        return coords is not None and all(c >= 0 for c in coords)

    def delta(self, v0: Vec) -> Fraction:
        """The zhat normalizer delta(v0) = lattice index of Phi_2(v0)."""
        key = tuple(v0)
        if key not in self._delta_cache:
            phi2 = la.mat_vec(self.form, la.vec(v0))
            if la.is_zero(phi2):
                raise NonIntegralPairingError(
                    "wall direction is central for the twisting form"
                )
            self._delta_cache[key] = la.lattice_index(phi2)
        return self._delta_cache[key]

    def pairing(self, v0: Vec, p: Vec) -> int:
        """Phi(v0, p)/delta(v0), required integral."""
        lam = self.form_val(v0, p) / self.delta(v0)
        if lam.denominator != 1:
            raise NonIntegralPairingError(
                f"pairing {lam} of wall direction {tuple(v0)} with exponent "
                f"{tuple(p)} is not an integer"
            )
        return int(lam)

    def positive_points(self, max_order: Fraction) -> list[Vec]:
        """All lattice points of the positive cone with order in (0, max]."""
        gens = list(self.cone_gens)
        k = len(gens)
        # saturation: coordinate denominators of lattice points are bounded by
        # the denominator of an inverse of any full-rank generator submatrix
        g = _saturation_denominator(gens)
        out = []
        steps = int(max_order * g)
        for coords in itertools.product(range(0, steps + 1), repeat=k):
            if coords == (0,) * k:
                continue
            a = [Fraction(c, g) for c in coords]
            if sum(a) > max_order:
                continue
            m = la.zero_vec(self.ambient.rank)
            for c, gen in zip(a, gens):
                m = la.add(m, la.scale(c, gen))
            if la.is_integral(m):
                out.append(m)
        out.sort(key=lambda m: (self.order(m), tuple(m)))
        return out

    # -- crossing series -------------------------------------------------------

    def qintc(self, lam: int, level: int, delta0: Fraction) -> TCoeff:
        if self.classical:
            return TCoeff.of(lam)
        return qint(lam, level * delta0)

    def exp_series(self, ham: dict, lam: int, sign: int, delta0: Fraction,
                   nmax: int) -> list[TCoeff]:
        """Coefficients E_0..E_nmax of exp(sign * sum_k h_k [lam] S^k)."""
        key = (tuple(sorted(ham.items())), lam, sign, delta0, nmax, self.classical)
        if key in self._exp_cache:
            return self._exp_cache[key]
        mu = {}
        for k, h in ham.items():
            if k <= nmax:
                mu[k] = h * self.qintc(lam, k, delta0) * sign
        es = [TCoeff.one()]
        for n in range(1, nmax + 1):
            acc = TCoeff.zero()
            for j, mj in mu.items():
                if j <= n:
                    acc = acc + TCoeff.of(j) * mj * es[n - j]
            es.append(acc * TCoeff.of(Fraction(1, n)))
        self._exp_cache[key] = es
        return es


def _saturation_denominator(gens) -> int:
    """A g with: every lattice point of cone(gens) has coordinates in (1/g)Z."""
    rows = la.mat(gens)
    k = len(gens)
    n = len(rows[0])
    best = None
    for cols in itertools.combinations(range(n), k):
        sub = la.mat([[row[c] for c in cols] for row in rows])
        inv = la.invert(sub)
        if inv is None:
            continue
        d = la.lcm_denominator(x for row in inv for x in row)
        best = d if best is None else min(best, d)
    if best is None:
        raise ValueError("cone generators are degenerate")
    return best


def context_for_seed(seed: CompatibleSeed, side: str = "A",
                     classical: bool = False) -> ScatteringContext:
    """The ambient scattering context of a seed, on the A- or X-side."""
    if side == "A":
        if seed.lam is None:
            raise ValueError("A-side scattering needs a compatible Lambda "
                             "(Injectivity Assumption)")
        gens = [seed.v_vector(i) for i in seed.unfrozen]
        return ScatteringContext(seed.lattice(), seed.lam, gens,
                                 classical=classical, seed=seed, side="A")
    if side == "X":
        gens = [seed.basis[i] for i in seed.unfrozen
                if not la.is_zero(seed.omega1(seed.basis[i]))]
        return ScatteringContext(seed.lattice(), seed.omega, gens,
                                 classical=classical, seed=seed, side="X")
    raise ValueError("side must be 'A' or 'X'")


# ---------------------------------------------------------------------------
# walls


@dataclass
class Wall:
    """A wall: polyhedral support inside v0^(Phi-perp) and a log-Hamiltonian."""

    support: Cone
    base: Vec                      # primitive direction vector v0 in M^+
    ham: dict = field(default_factory=dict)   # {k >= 1: TCoeff}

    def clean(self):
        self.ham = {k: h for k, h in self.ham.items() if not h.is_zero()}
        return self

    def is_trivial(self) -> bool:
        return not any(not h.is_zero() for h in self.ham.values())

    def is_incoming(self) -> bool:
        return self.support.contains(self.base)

    def min_level(self):
        ks = [k for k, h in self.ham.items() if not h.is_zero()]
        return min(ks) if ks else None

    def copy(self) -> "Wall":
        return Wall(self.support, self.base, dict(self.ham))


def dilog_hamiltonian(ctx: ScatteringContext, v: Vec, d_prime: Fraction,
                      exponent: Fraction, max_order: Fraction) -> Wall | None:
    """The wall carrying Psi_{t^d'}(z^v)^exponent (classically
    (1+z^v)^(exponent/d')-conjugation), truncated by the grading."""
    v = la.vec(v)
    v0 = la.vec(la.primitive(v))
    c = la.lattice_index(v)
    assert c.denominator == 1
    c = int(c)
    delta0 = ctx.delta(v0)
    # the wall hyperplane is v0^(Phi-perp): normal covector Phi(v0, .)
    normal = la.primitive(la.mat_vec(la.transpose(ctx.form), v0))
    ham = {}
    k = 1
    while ctx.order(la.scale(k * c, v0)) <= max_order:
        coeff = TCoeff.of(Fraction((-1) ** (k - 1), k) * exponent)
        if ctx.classical:
            # zhat^(kc v0) = z^(kc v0)/(kc delta0) classically
            coeff = coeff * TCoeff.of(k * c * delta0 / (d_prime * k))
        else:
            num = TCoeff({k * c * delta0: 1, -k * c * delta0: -1})
            den = TCoeff({k * d_prime: 1, -k * d_prime: -1})
            ratio = num.divide(den)
            if ratio is None:
                raise NonIntegralPairingError(
                    "dilogarithm base exponent incompatible with zhat scaling"
                )
            coeff = coeff * ratio
        ham[k * c] = coeff
        k += 1
    return Wall(Cone.hyperplane(normal), v0, ham).clean()


def quantum_dilog(ctx: ScatteringContext, v: Vec, d_prime, max_order) -> Wall:
    """Spec-level entry point: the truncated wall function of Psi_{t^d'}(z^v)."""
    coords = la.cone_coords(list(ctx.cone_gens), la.vec(v))
    if coords is None or all(c == 0 for c in coords) or any(c < 0 for c in coords):
        raise ValueError("dilogarithm exponent must lie in M^+")
    return dilog_hamiltonian(ctx, v, Fraction(d_prime), Fraction(1), max_order)


def cross_wall(ctx: ScatteringContext, x: TorusElement, wall: Wall, sign: int,
               max_order: Fraction, base: Vec | None = None) -> TorusElement:
    """Apply the crossing automorphism f^sign to x, truncated so that only
    exponents q with order(q - base) <= max_order are kept (base defaults to
    the order-minimal exponent of x)."""
    if x.is_zero() or wall.is_trivial():
        return x
    v0 = wall.base
    delta0 = ctx.delta(v0)
    step = ctx.order(v0)
    if base is None:
        base = min((la.vec(p) for p in x.terms), key=ctx.order)
    out = TorusElement.zero(x.ambient)
    for p, c in x.terms.items():
        lam = ctx.pairing(v0, la.vec(p))
        room = max_order - (ctx.order(la.vec(p)) - ctx.order(base))
        nmax = int(room / step) if room >= 0 else -1
        if nmax < 0:
            continue
        if lam == 0:
            series = [TCoeff.one()]
        else:
            series = ctx.exp_series(wall.ham, lam, sign, delta0, nmax)
        for n, e in enumerate(series):
            if e.is_zero():
                continue
            q = tuple(a + n * b for a, b in zip(p, v0))
            s = out.terms.get(q, TCoeff.zero()) + c * e
            if s.is_zero():
                out.terms.pop(q, None)
            else:
                out.terms[q] = s
    return out


# ---------------------------------------------------------------------------
# diagrams


@dataclass
class ScatteringDiagram:
    context: ScatteringContext
    walls: list[Wall]
    max_order: Fraction
    consistent: bool = False

    def nontrivial_walls(self) -> list[Wall]:
        return [w for w in self.walls if not w.is_trivial()]

    def dump(self) -> str:
        """Deterministic one-wall-per-line dump for golden-file tests."""
        lines = []
        denom = 1
        for w in self.nontrivial_walls():
            for h in w.ham.values():
                denom = max(denom, h.denominator_lcm())
        for w in sorted(
            self.nontrivial_walls(),
            key=lambda w: (tuple(w.base), w.support.key()),
        ):
            rays = ";".join(
                ",".join(str(x) for x in la.primitive(r))
                for r in sorted(
                    (r for r in w.support.rays if not la.is_zero(r)),
                    key=lambda r: la.primitive(r),
                )
            )
            ineqs = ";".join(
                ",".join(str(x) for x in la.primitive(n))
                for n in sorted(w.support.ineqs, key=la.primitive)
            )
            eqs = ";".join(
                ",".join(str(x) for x in la.primitive(n))
                for n in sorted(w.support.eqs, key=la.primitive)
            )
            ham = " ".join(
                f"{k}:{w.ham[k].render(denom)}" for k in sorted(w.ham)
            )
            lines.append(
                f"wall base=({','.join(str(x) for x in w.base)}) "
                f"eqs=[{eqs}] ineqs=[{ineqs}] rays=[{rays}] ham[{ham}]"
            )
        return "\n".join(lines)


def initial_diagram(seed: CompatibleSeed, side: str = "A",
                    max_order: Fraction = Fraction(8),
                    classical: bool = False) -> ScatteringDiagram:
    """One full-hyperplane incoming wall per unfrozen index."""
    ctx = context_for_seed(seed, side, classical)
    walls = []
    for i in seed.unfrozen:
        if side == "A":
            v = seed.v_vector(i)
            d_prime = seed.dilog_exponent(i)
        else:
            v = la.vec(seed.basis[i])
            if la.is_zero(seed.omega1(seed.basis[i])):
                continue
            d_prime = Fraction(1)
        w = dilog_hamiltonian(ctx, v, d_prime, Fraction(1), Fraction(max_order))
        if w is not None and not w.is_trivial():
            walls.append(w)
    return ScatteringDiagram(ctx, walls, Fraction(max_order), consistent=False)


# -- path-ordered products ----------------------------------------------------


def _segment_crossings(ctx, walls, a: Vec, b: Vec):
    """Transverse crossing events of segment a->b: list of (t, point, wall, sign)."""
    d = la.sub(b, a)
    events = []
    for w in walls:
        eqs = w.support.span_equations()
        if len(eqs) != 1:
            # wall supports are codim-1: a unique hyperplane equation
            raise GenericityError("wall support lacks a unique hyperplane")
        n = eqs[0]
        denom = la.dot(n, d)
        na = la.dot(n, a)
        if denom == 0:
            if na == 0 and any(
                w.support.contains(la.add(a, la.scale(t, d)))
                for t in (Fraction(1, 3), Fraction(1, 2))
            ):
                raise GenericityError("path segment lies inside a wall")
            continue
        t = -na / denom
        if t <= 0 or t >= 1:
            continue
        point = la.add(a, la.scale(t, d))
        if not w.support.contains(point):
            continue
        # crossing sign: sign Phi(gamma', v_d) in this package's Ad
        # normalization (matches the bend rule (fi) and the pentagon; the
        # opposite literal sign in the source convention corresponds to the
        # inverse normalization of the attached group element)
        sgn = ctx.form_val(d, w.base)
        if sgn == 0:
            raise GenericityError("non-transverse wall crossing")
        events.append((t, point, w, 1 if sgn > 0 else -1))
    return events


def path_ordered_product(diagram: ScatteringDiagram, points, x: TorusElement,
                         max_order: Fraction | None = None,
                         base: Vec | None = None) -> TorusElement:
    """Apply the path-ordered product along a piecewise-linear path to x.

    Simultaneous crossings must be parallel (same base direction); a crossing
    through a joint raises GenericityError.
    """
    ctx = diagram.context
    max_order = diagram.max_order if max_order is None else max_order
    pts = [la.vec(p) for p in points]
    walls = diagram.nontrivial_walls()
    if base is None and not x.is_zero():
        base = min((la.vec(p) for p in x.terms), key=ctx.order)
    for a, b in zip(pts, pts[1:]):
        events = _segment_crossings(ctx, walls, a, b)
        events.sort(key=lambda e: e[0])
        i = 0
        while i < len(events):
            j = i
            while j < len(events) and events[j][0] == events[i][0]:
                j += 1
            group = events[i:j]
            bases = {tuple(g[2].base) for g in group}
            if len(bases) > 1:
                raise GenericityError("path crosses a joint (non-parallel walls "
                                      "at one time)")
            for _, _, w, sgn in group:
                x = cross_wall(ctx, x, w, sgn, max_order, base)
            i = j
    return x


def check_consistency(diagram: ScatteringDiagram, loops, probes=None,
                      max_order: Fraction | None = None) -> bool:
    """Path-ordered products around closed loops fix every probe monomial."""
    ctx = diagram.context
    max_order = diagram.max_order if max_order is None else max_order
    if probes is None:
        probes = _default_probes(ctx)
    for loop in loops:
        loop = [la.vec(p) for p in loop]
        if loop[0] != loop[-1]:
            loop = loop + [loop[0]]
        for b in probes:
            mono = TorusElement.monomial(ctx.ambient, b)
            img = path_ordered_product(diagram, loop, mono, max_order, la.vec(b))
            if img != mono:
                return False
    return True


def _default_probes(ctx: ScatteringContext):
    n = ctx.ambient.rank
    probes = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        probes.append(tuple(e))
    return probes


# -- consistent completion ------------------------------------------------------


def _circle_events(ctx, walls, x0: Vec, u1: Vec, u2: Vec):
    """Angularly ordered crossing data of a tiny ccw circle around x0.

    Returns a list of (direction (a,b) in plane coords, [(wall, sign)...])
    sorted counterclockwise; sign is the crossing sign for the ccw traversal.
    """
    span_rows = la.mat([u1, u2])
    traces = {}
    for w in walls:
        if not w.support.contains(x0):
            continue
        eqs = w.support.span_equations()
        n = eqs[0]
        # trace direction: plane vectors (a,b) with <n, a u1 + b u2> = 0
        c1, c2 = la.dot(n, u1), la.dot(n, u2)
        if c1 == 0 and c2 == 0:
            raise JointGeneralityError("wall contains the probe plane")
        w0 = (-c2, c1)
        # active inequality constraints at x0 restrict to a ray
        dirs = []
        for cand in (w0, (-w0[0], -w0[1])):
            vec_amb = la.add(la.scale(cand[0], u1), la.scale(cand[1], u2))
            ok = True
            for ineq in w.support.ineqs:
                val0 = la.dot(ineq, x0)
                if val0 == 0 and la.dot(ineq, vec_amb) < 0:
                    ok = False
                    break
            if ok:
                dirs.append(cand)
        for cand in dirs:
            key = _dir_canon(cand)
            traces.setdefault(key, []).append(w)
    events = []
    for key, ws in traces.items():
        a, b = key
        # ccw tangent at direction (a,b) is (-b, a)
        tangent = la.add(la.scale(-b, u1), la.scale(a, u2))
        entries = []
        for w in ws:
            sgn = ctx.form_val(tangent, w.base)
            if sgn == 0:
                raise JointGeneralityError("tangential crossing at joint circle")
            entries.append((w, 1 if sgn > 0 else -1))
        bases = {tuple(w.base) for w, _ in entries}
        if len(bases) > 1:
            raise JointGeneralityError(
                "non-parallel walls share a trace ray at a joint"
            )
        events.append((key, entries))
    events.sort(key=lambda e: _angle_key(e[0]))
    return events


def _dir_canon(d):
    from math import gcd

    a, b = Fraction(d[0]), Fraction(d[1])
    l = la.lcm_denominator([a, b])
    ai, bi = int(a * l), int(b * l)
    g = gcd(abs(ai), abs(bi))
    return (ai // g, bi // g)


def _angle_key(d):
    a, b = d
    if a > 0 and b >= 0:
        quad = 0
    elif a <= 0 and b > 0:
        quad = 1
    elif a < 0 and b <= 0:
        quad = 2
    else:
        quad = 3
    # within a quadrant, sort by slope b/a ccw; use cross-product-safe key
    return (quad, Fraction(b, a) if a != 0 else Fraction(0))


def _loop_automorphism(ctx, walls, x0, u1, u2, probe: Vec,
                       max_order: Fraction) -> TorusElement:
    events = _circle_events(ctx, walls, x0, u1, u2)
    x = TorusElement.monomial(ctx.ambient, probe)
    for _, entries in events:
        for w, sgn in entries:
            x = cross_wall(ctx, x, w, sgn, max_order, la.vec(probe))
    return x


def _joint_candidates(ctx, walls):
    """Codim-2 joints: (span-basis of S, witness x0, full_S flag)."""
    r = ctx.ambient.rank
    seen = {}
    for w1, w2 in itertools.combinations(walls, 2):
        eqs = la.span_basis(list(w1.support.eqs) + list(w2.support.eqs))
        if len(eqs) != 2:
            continue
        s_basis = la.nullspace(la.mat(eqs))
        # restrict both cones' inequalities to S and find a strict point
        ineqs = []
        for w in (w1, w2):
            for n in w.support.ineqs:
                restricted = la.vec([la.dot(n, s) for s in s_basis])
                if not la.is_zero(restricted):
                    ineqs.append(restricted)
        witness_coords = _strictly_feasible(ineqs, len(s_basis)) if ineqs else (
            la.zero_vec(len(s_basis))
        )
        if witness_coords is None:
            continue
        x0 = la.zero_vec(r)
        for c, s in zip(witness_coords, s_basis):
            x0 = la.add(x0, la.scale(c, s))
        key = tuple(sorted(tuple(la.primitive(e)) for e in eqs))
        if key not in seen:
            seen[key] = (s_basis, x0)
    return list(seen.values())


def _plane_complement(s_basis, r):
    """Two vectors completing span(s_basis) to the full space."""
    out = []
    cur = list(s_basis)
    for i in range(r):
        e = la.unit_vec(r, i)
        if la.rank(la.mat(cur + [e])) > len(cur):
            cur.append(e)
            out.append(e)
        if len(out) == 2:
            return out
    raise JointGeneralityError("could not complete joint span to a plane")


def consistent_complete(d_in: ScatteringDiagram,
                        max_order: Fraction | None = None) -> ScatteringDiagram:
    """Order-by-order completion by joint repair.

    At each grading level, every codim-2 joint's loop product is computed mod
    the level; a nonzero defect is cancelled by inserting outgoing walls
    supported on (joint span) + ray(-m0), one per primitive direction class.
    """
    ctx = d_in.context
    max_order = d_in.max_order if max_order is None else Fraction(max_order)
    if any(not w.is_incoming() for w in d_in.nontrivial_walls()):
        raise ValueError("initial diagram must have only incoming walls")
    walls = [w.copy() for w in d_in.nontrivial_walls()]
    points = [
        m for m in ctx.positive_points(max_order)
    ]
    levels = sorted({ctx.order(m) for m in points})
    r = ctx.ambient.rank
    for level in levels:
        for _sweep in range(6):
            inserted = False
            for s_basis, x0 in _joint_candidates(ctx, walls):
                u1, u2 = _plane_complement(s_basis, r)
                defect = _level_defect(ctx, walls, x0, u1, u2, level)
                if defect is None:
                    continue
                full_s = _joint_is_full_span(walls, s_basis, x0)
                for m, h in defect.items():
                    if h.is_zero():
                        continue
                    if not full_s:
                        raise JointGeneralityError(
                            "nonzero defect at a joint that is not a full "
                            "subspace"
                        )
                    _insert_repair_wall(ctx, walls, s_basis, m, h)
                    inserted = True
            if not inserted:
                break
        else:
            raise JointGeneralityError("level repair did not stabilize")
    merged = _merge_walls(walls)
    return ScatteringDiagram(ctx, merged, max_order, consistent=True)


def _joint_is_full_span(walls, s_basis, x0):
    carriers = [w for w in walls if w.support.contains(x0)]
    for s in s_basis:
        for sign in (1, -1):
            pt = la.scale(sign, s)
            for w in carriers:
                span_ok = all(la.dot(n, pt) == 0 for n in w.support.eqs)
                if span_ok and not w.support.contains(pt):
                    return False
    return True


def _level_defect(ctx, walls, x0, u1, u2, level):
    """The grade-level part of log of the loop product, as {m: h_m}, or None
    if it vanishes.  Raises JointGeneralityError when it cannot be resolved."""
    probes = _defect_probes(ctx)
    collected: dict[tuple, TCoeff] = {}
    confirmed = False
    for probe in probes:
        img = _loop_automorphism(ctx, walls, x0, u1, u2, probe, level)
        diff = img - TorusElement.monomial(ctx.ambient, probe)
        level_terms = {}
        for q, c in diff.terms.items():
            m = la.sub(la.vec(q), la.vec(probe))
            if ctx.order(m) == level:
                level_terms[tuple(m)] = c
            elif ctx.order(m) < level and not c.is_zero():
                raise JointGeneralityError(
                    "lower-order defect persisted past its level"
                )
        if not level_terms and not collected:
            confirmed = True
            continue
        # solve level_terms[m] = h_m * qintc(pairing) for each m
        resolved = {}
        ok = True
        for m, c in level_terms.items():
            mv = la.vec(m)
            m0 = la.vec(la.primitive(mv))
            k = int(la.lattice_index(mv))
            lam = ctx.pairing(m0, la.vec(probe))
            if lam == 0:
                ok = False
                continue
            denv = ctx.qintc(lam, k, ctx.delta(m0))
            h = c.divide(denv)
            if h is None:
                raise JointGeneralityError("defect coefficient not divisible")
            resolved[m] = h
        if ok and resolved:
            for m, h in resolved.items():
                if m in collected:
                    if collected[m] != h:
                        raise JointGeneralityError("probes disagree on defect")
                else:
                    collected[m] = h
            confirmed = True
            # one clean probe suffices; keep first fully-resolving probe
            break
        if resolved:
            for m, h in resolved.items():
                collected.setdefault(m, h)
    if not confirmed and not collected:
        return None
    if not collected:
        return None
    for m in collected:
        if not ctx.in_positive_cone(la.vec(m)):
            raise JointGeneralityError("defect direction outside positive cone")
    return {m: collected[m] for m in collected}


def _defect_probes(ctx):
    n = ctx.ambient.rank
    probes = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        probes.append(tuple(e))
        e2 = [0] * n
        e2[i] = -1
        probes.append(tuple(e2))
    for i in range(n):
        for j in range(i + 1, n):
            e = [0] * n
            e[i] = 1
            e[j] = -1
            probes.append(tuple(e))
    return probes


def _insert_repair_wall(ctx, walls, s_basis, m, h):
    """Insert/adjust the outgoing wall (span(S) + ray(-m0)) cancelling defect h.

    The crossing sign of the repair wall on the defect-measuring circle is
    recomputed from its own trace, exactly as the loop-product code sees it.
    """
    mv = la.vec(m)
    m0 = la.vec(la.primitive(mv))
    k = int(la.lattice_index(mv))
    support = _ray_support(ctx, s_basis, m0)
    target = None
    for w in walls:
        if w.support.key() == support.key() and tuple(w.base) == tuple(m0):
            target = w
            break
    if target is None:
        target = Wall(support, m0, {})
        walls.append(target)
    u1, u2 = _plane_complement(s_basis, ctx.ambient.rank)
    x0 = la.zero_vec(ctx.ambient.rank)
    for s in s_basis:
        x0 = la.add(x0, s)
    a, b = _trace_direction(ctx, support, x0, u1, u2)
    tangent = la.add(la.scale(-b, u1), la.scale(a, u2))
    sgn_val = ctx.form_val(tangent, m0)
    if sgn_val == 0:
        raise JointGeneralityError("repair wall tangential to probe circle")
    sgn = 1 if sgn_val > 0 else -1
    target.ham[k] = target.ham.get(k, TCoeff.zero()) - h * TCoeff.of(sgn)
    target.clean()


def _ray_support(ctx, s_basis, m0) -> Cone:
    r = ctx.ambient.rank
    ray = la.scale(-1, m0)
    span_vectors = list(s_basis) + [ray]
    normals = la.nullspace(la.mat(span_vectors))
    if len(normals) != 1:
        raise JointGeneralityError("repair wall support is not codim 1")
    eq = la.vec(la.primitive(normals[0]))
    # inequality cutting the half containing the ray: vanish on S, positive on ray
    s_perp = (
        la.nullspace(la.mat(s_basis))
        if s_basis
        else [la.unit_vec(r, i) for i in range(r)]
    )
    ineq = None
    for n in s_perp:
        val = la.dot(n, ray)
        if val != 0:
            cand = la.vec(la.primitive(n if val > 0 else la.scale(-1, n)))
            # must also vanish identically on the support hyperplane? no:
            # require it vanish on S (it does) and be positive on the ray.
            ineq = cand
            break
    if ineq is None:
        raise JointGeneralityError("no halfspace inequality for repair wall")
    rays = []
    for s in s_basis:
        rays.append(la.vec(s))
        rays.append(la.scale(-1, s))
    rays.append(ray)
    return Cone.make(r, eqs=[eq], ineqs=[ineq], rays=rays)


def _trace_direction(ctx, support: Cone, x0, u1, u2):
    n = support.span_equations()[0]
    c1, c2 = la.dot(n, u1), la.dot(n, u2)
    w0 = (-c2, c1)
    for cand in (w0, (-w0[0], -w0[1])):
        vec_amb = la.add(la.scale(cand[0], u1), la.scale(cand[1], u2))
        ok = True
        for ineq in support.ineqs:
            if la.dot(ineq, x0) == 0 and la.dot(ineq, vec_amb) < 0:
                ok = False
                break
        if ok:
            return _dir_canon(cand)
    raise JointGeneralityError("no trace direction for repair wall")


def _merge_walls(walls) -> list[Wall]:
    merged: dict = {}
    for w in walls:
        if w.is_trivial():
            continue
        key = (w.support.key(), tuple(w.base))
        if key in merged:
            tgt = merged[key]
            for k, h in w.ham.items():
                tgt.ham[k] = tgt.ham.get(k, TCoeff.zero()) + h
            tgt.clean()
        else:
            merged[key] = w.copy()
    out = [w for w in merged.values() if not w.is_trivial()]
    out.sort(key=lambda w: (tuple(w.base), w.support.key()))
    return out


# ---------------------------------------------------------------------------
# chambers


def chamber_locate(seed: CompatibleSeed, q: Vec, depth: int = 8):
    """Breadth-first search for the cluster chamber containing q.

    Returns the mutation path, or None when no chamber within the depth bound
    contains q ("outside cluster complex" at this depth).
    """
    q = la.vec(q)

    def in_chamber(s):
        return all(la.dot(s.basis[i], q) >= 0 for i in s.unfrozen)

    def strictly_in(s):
        return all(la.dot(s.basis[i], q) > 0 for i in s.unfrozen)

    if not strictly_in(seed) and in_chamber(seed):
        raise GenericityError("point lies on a chamber wall; perturb it")
    frontier = [seed]
    seen = {tuple(map(tuple, seed.basis))}
    for _ in range(depth + 1):
        nxt = []
        for s in frontier:
            if strictly_in(s):
                return s.path
            if in_chamber(s):
                raise GenericityError("point lies on a chamber wall; perturb it")
            for j in s.unfrozen:
                s2 = s.mutate(j)
                key = tuple(map(tuple, s2.basis))
                if key not in seen:
                    seen.add(key)
                    nxt.append(s2)
        frontier = nxt
        if not frontier:
            break
    return None
