"""Seeds, compatible pairs, and cluster mutation.

A seed fixes root coordinates once and for all: the lattice N = Z^I with the
skew form omega, and M = N* with the optional compatible form Lambda.  Forms
never change under mutation; the basis vectors e_i (and dual f_i) are integer
vectors in root coordinates and do.  All torus elements live in root
coordinates of M (A-side) or N (X-side).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction

from . import _linalg as la
from ._linalg import Mat, Vec
from .qtorus import Lattice, TCoeff, TorusElement, qbinom, t_divide, t_multiply


class CompatibilityError(ValueError):
    pass


class NotLaurentError(ValueError):
    """The mutation image does not clear its denominator."""


def _frac(x):
    if isinstance(x, str):
        if "/" in x:
            p, q = x.split("/")
            return Fraction(int(p), int(q))
        return Fraction(int(x))
    return Fraction(x)


@dataclass(frozen=True)
class CompatibleSeed:
    labels: tuple[str, ...]
    frozen: frozenset[int]
    omega: Mat                     # skew form on N, root coordinates
    lam: Mat | None                # skew form on M, root coordinates (optional)
    d_i: tuple[Fraction, ...]      # skew-symmetrizable multipliers
    basis: tuple[Vec, ...]         # e_i in root N-coordinates
    dual_basis: tuple[Vec, ...]    # f_i = e_i* in root M-coordinates
    path: tuple[int, ...] = ()     # mutation path from the root seed

    # -- construction ------------------------------------------------------

    @staticmethod
    def root(labels, frozen, omega, lam=None, d_i=None) -> "CompatibleSeed":
        labels = tuple(str(x) for x in labels)
        n = len(labels)
        frozen = frozenset(frozen)
        omega = la.mat(omega)
        if not la.is_skew_symmetric(omega):
            raise CompatibilityError("omega must be skew-symmetric")
        if lam is not None:
            lam = la.mat(lam)
            if not la.is_skew_symmetric(lam):
                raise CompatibilityError("lambda must be skew-symmetric")
        d_i = tuple(Fraction(1) for _ in range(n)) if d_i is None else tuple(
            Fraction(x) for x in d_i
        )
        seed = CompatibleSeed(
            labels=labels,
            frozen=frozen,
            omega=omega,
            lam=lam,
            d_i=d_i,
            basis=tuple(la.unit_vec(n, i) for i in range(n)),
            dual_basis=tuple(la.unit_vec(n, i) for i in range(n)),
        )
        for i in range(n):
            for j in range(n):
                if (i not in frozen or j not in frozen) and Fraction(
                    omega[i][j]
                ).denominator != 1:
                    raise CompatibilityError(
                        f"omega({labels[i]},{labels[j]}) must be integral"
                    )
        if lam is not None:
            seed.multiplier()
        return seed

    # -- basic accessors ----------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.labels)

    @property
    def unfrozen(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.rank) if i not in self.frozen)

    def lattice(self) -> Lattice:
        return Lattice(self.labels, self.frozen)

    def omega_val(self, n1: Vec, n2: Vec) -> Fraction:
        return la.bilinear(self.omega, n1, n2)

    def lam_val(self, m1: Vec, m2: Vec) -> Fraction:
        if self.lam is None:
            raise CompatibilityError("seed has no compatible Lambda")
        return la.bilinear(self.lam, m1, m2)

    def omega1(self, n: Vec) -> Vec:
        """omega_1(n) = omega(n, .) in dual root coordinates."""
        return la.mat_vec(la.transpose(self.omega), la.vec(n))

    def lam2(self, m: Vec) -> Vec:
        """Lambda_2(m) = Lambda(., m) as an element of N_Q."""
        if self.lam is None:
            raise CompatibilityError("seed has no compatible Lambda")
        return la.mat_vec(self.lam, la.vec(m))

    def b_matrix(self) -> Mat:
        """B(e_i,e_j) = omega(e_j,e_i) on the current basis."""
        return la.mat(
            [
                [self.omega_val(self.basis[j], self.basis[i]) for j in range(self.rank)]
                for i in range(self.rank)
            ]
        )

    def v_vector(self, i: int) -> Vec:
        """omega_1(e_i) for the current basis vector e_i."""
        return self.omega1(self.basis[i])

    # -- compatibility -------------------------------------------------------

    def multiplier(self):
        """The d with Lambda_2(omega_1(e_i)) = d_i' e_i, d_i' = (d/d_i-scale).

        Returns d for the uniform (skew-symmetric) case; for general d_i the
        returned value is alpha*max-normalized so that d_i' = d * d_i holds
        columnwise.  Raises CompatibilityError naming a violating column.
        """
        if self.lam is None:
            raise CompatibilityError("seed has no compatible Lambda")
        alpha = None
        for i in self.unfrozen:
            lhs = self.lam2(self.omega1(self.basis[i]))
            want_dir = la.vec(self.basis[i])
            coef = None
            for a, b in zip(lhs, want_dir):
                if b != 0:
                    coef = Fraction(a) / Fraction(b)
                    break
            if coef is None or lhs != la.scale(coef, want_dir):
                raise CompatibilityError(
                    f"Lambda_2(omega_1(e_{self.labels[i]})) is not a multiple "
                    f"of e_{self.labels[i]}"
                )
            this_alpha = coef / self.d_i[i]
            if alpha is None:
                alpha = this_alpha
            elif alpha != this_alpha:
                raise CompatibilityError(
                    f"inconsistent multiplier at column {self.labels[i]}: "
                    f"{this_alpha} vs {alpha}"
                )
            if coef <= 0:
                raise CompatibilityError(
                    f"nonpositive multiplier at column {self.labels[i]}"
                )
        if alpha is None:
            return Fraction(1)  # vacuous compatibility: no unfrozen indices
        return alpha

    def dilog_exponent(self, i: int) -> Fraction:
        """d_i' = alpha * d_i, the dilogarithm base exponent for direction i."""
        return self.multiplier() * self.d_i[i]

    def is_injective(self) -> bool:
        """Injectivity Assumption: omega_1 restricted to N_uf is injective."""
        rows = [self.omega1(self.basis[i]) for i in self.unfrozen]
        return la.rank(la.mat(rows)) == len(rows)

    # -- principal coefficients ----------------------------------------------

    def principal_extend(self) -> "CompatibleSeed":
        """The seed sd^prin on N + M with the doubled, frozen index set."""
        n = self.rank
        w = self.omega
        top = [list(w[i]) + [1 if j == i else 0 for j in range(n)] for i in range(n)]
        bot = [
            [-1 if j == i else 0 for j in range(n)] + [0] * n for i in range(n)
        ]
        omega_prin = la.mat(top + bot)
        lam_top = [[0] * n + [1 if j == i else 0 for j in range(n)] for i in range(n)]
        lam_bot = [
            [-1 if j == i else 0 for j in range(n)] + [-w[i][j] for j in range(n)]
            for i in range(n)
        ]
        lam_prin = la.mat(lam_top + lam_bot)
        labels = self.labels + tuple(lbl + "'" for lbl in self.labels)
        frozen = frozenset(self.frozen) | set(range(n, 2 * n))
        return CompatibleSeed.root(
            labels, frozen, omega_prin, lam_prin, d_i=self.d_i + self.d_i
        )

    # -- seed mutation ---------------------------------------------------------

    def mutate(self, j: int) -> "CompatibleSeed":
        if j in self.frozen:
            raise ValueError(f"cannot mutate at frozen index {self.labels[j]}")
        e = self.basis
        f = self.dual_basis
        new_e = []
        for i in range(self.rank):
            if i == j:
                new_e.append(la.scale(-1, e[j]))
            else:
                c = max(Fraction(0), self.omega_val(e[i], e[j]))
                new_e.append(la.add(e[i], la.scale(c, e[j])))
        new_f = list(f)
        acc = la.scale(-1, f[j])
        for s in range(self.rank):
            c = max(Fraction(0), -self.omega_val(e[j], e[s]))
            if c:
                acc = la.add(acc, la.scale(c, f[s]))
        new_f[j] = acc
        out = replace(
            self,
            basis=tuple(new_e),
            dual_basis=tuple(new_f),
            path=self.path + (j,),
        )
        # duality of the new bases is a structural invariant
        for a in range(self.rank):
            for b in range(self.rank):
                assert la.dot(out.basis[a], out.dual_basis[b]) == (1 if a == b else 0)
        return out

    def mutate_path(self, path) -> "CompatibleSeed":
        seed = self
        for j in path:
            seed = seed.mutate(j)
        return seed

    def tropical_mutate(self, m: Vec, j: int) -> Vec:
        """T_j(m) = m + max(0, <e_j, m>) omega_1(e_j)."""
        if j in self.frozen:
            raise ValueError("tropical mutation index must be unfrozen")
        m = la.vec(m)
        c = max(Fraction(0), la.dot(self.basis[j], m))
        return la.add(m, la.scale(c, self.omega1(self.basis[j])))

    # -- dominance / pointedness ----------------------------------------------

    def cone_coordinates(self, m: Vec) -> Vec | None:
        """Coordinates of m in the cone generated by {omega_1(e_i)}, i unfrozen.

        Requires the Injectivity Assumption (generators independent); returns
        None when m is outside the rational span or has a negative coordinate.
        """
        gens = [self.omega1(self.basis[i]) for i in self.unfrozen]
        if la.rank(la.mat(gens)) != len(gens):
            raise CompatibilityError("dominance order needs independent omega_1(e_i)")
        coords = la.cone_coords([la.vec(g) for g in gens], la.vec(m))
        if coords is None or any(c < 0 for c in coords):
            return None
        return coords

    def dominates(self, m: Vec, m2: Vec) -> bool:
        """m2 <= m in the dominance order (m2 in m + M^plus-cone)."""
        return self.cone_coordinates(la.sub(la.vec(m2), la.vec(m))) is not None

    def pointed_degree(self, x: TorusElement) -> Vec:
        """The unique dominance-maximal exponent; requires coefficient 1."""
        best = None
        for p in x.terms:
            pv = la.vec(p)
            if all(
                self.dominates(pv, la.vec(q)) for q in x.terms if q != p
            ):
                best = p
                break
        if best is None:
            raise NotLaurentError("element is not pointed (no dominance-maximal term)")
        if not x.terms[best].is_one():
            raise NotLaurentError("element is not pointed (leading coefficient != 1)")
        return la.vec(best)


# -- cluster mutation of torus elements ---------------------------------------


def _aligned_image(
    x: TorusElement, v: Vec, pair, step: Fraction, form: Mat
) -> TorusElement:
    """Apply z^p -> sum_s qbinom(k_p, s) z^(p+sv) with k_p = pair(p) >= 0."""
    out = TorusElement.zero(x.ambient)
    vv = tuple(v)
    for p, c in x.terms.items():
        k = pair(p)
        assert k >= 0 and Fraction(k).denominator == 1
        k = int(k)
        for s in range(k + 1):
            q = tuple(a + s * b for a, b in zip(p, vv))
            add = c * qbinom(k, s, step)
            cur = out.terms.get(q, TCoeff.zero()) + add
            if cur.is_zero():
                out.terms.pop(q, None)
            else:
                out.terms[q] = cur
    return out


def _clearing_shift(x: TorusElement, pair, shift_dir: Vec) -> Vec:
    """A vector w in the shift direction making pair >= 0 on supp(x) + w."""
    kmin = min(pair(p) for p in x.terms)
    if kmin >= 0:
        return la.zero_vec(x.ambient.rank)
    s0 = pair(shift_dir)
    assert s0 > 0
    mult = -kmin / s0
    big_k = int(mult) if Fraction(mult).denominator == 1 else int(mult) + 1
    return la.scale(big_k, shift_dir)


def _binomial_map(
    x: TorusElement, v: Vec, pair, step: Fraction, form: Mat, shift_dir: Vec
) -> TorusElement:
    """The quantum binomial substitution with denominator clearing.

    pair(p) is the series exponent of each monomial; shift_dir is a vector with
    pair(shift_dir) > 0 used to clear negative exponents.  Raises
    NotLaurentError when the denominator does not divide out.
    """
    if x.is_zero():
        return x
    w = _clearing_shift(x, pair, shift_dir)
    if la.is_zero(w):
        return _aligned_image(x, v, pair, step, form)
    zw = TorusElement.monomial(x.ambient, w)
    num = _aligned_image(t_multiply(x, zw, form), v, pair, step, form)
    den = _aligned_image(zw, v, pair, step, form)
    quot = t_divide(num, den, form)
    if quot is None:
        raise NotLaurentError("mutation image is not a Laurent polynomial")
    return quot


def _binomial_map_inverse(
    x: TorusElement, v: Vec, pair, step: Fraction, form: Mat, shift_dir: Vec
) -> TorusElement:
    """Inverse of _binomial_map: solve _binomial_map(y) = x by peeling.

    Uses that supp(y) and supp(x) carry the same pair-levels (images stay on
    v-lines and pair is constant along v), so the same clearing shift aligns
    both; the aligned map is unitriangular along each v-line.
    """
    if x.is_zero():
        return x
    w = _clearing_shift(x, pair, shift_dir)
    zw = TorusElement.monomial(x.ambient, w)
    rhs = t_multiply(x, _aligned_image(zw, v, pair, step, form), form)
    # Solve _aligned_image(y_shifted) = rhs line by line, lowest level first.
    vfrac = la.vec(v)
    level_fn = None
    for idx, a in enumerate(vfrac):
        if a != 0:
            level_fn = lambda p, idx=idx, a=a: Fraction(p[idx]) / a
            break
    assert level_fn is not None
    lines: dict[tuple, dict] = {}
    for p, c in rhs.terms.items():
        lev = level_fn(p)
        key = tuple(Fraction(a) - lev * b for a, b in zip(p, vfrac))
        lines.setdefault(key, {})[p] = c
    y_shifted = TorusElement.zero(x.ambient)
    for key, terms in lines.items():
        rem = dict(terms)
        while rem:
            lead = min(rem, key=level_fn)
            if pair(lead) < 0:
                raise NotLaurentError("mutation image is not a Laurent polynomial")
            mono = TorusElement.monomial(x.ambient, lead, rem.pop(lead))
            y_shifted = y_shifted + mono
            img = _aligned_image(mono, v, pair, step, form)
            for q, c in img.terms.items():
                if q == lead:
                    continue
                cur = rem.get(q, TCoeff.zero()) - c
                if cur.is_zero():
                    rem.pop(q, None)
                else:
                    rem[q] = cur
    return t_multiply(
        y_shifted, TorusElement.monomial(x.ambient, la.scale(-1, w)), form
    )


def mutate_A(
    x: TorusElement, j: int, seed: CompatibleSeed, direction: str = "inverse"
) -> TorusElement:
    """The map (mu_j^A)^(+-1) on the A-side quantum torus in root coordinates.

    direction='inverse' sends elements expressed in the mutated seed's torus to
    the seed's torus (this is the direction that produces cluster variables);
    direction='forward' is its inverse map.
    """
    if seed.lam is None:
        raise CompatibilityError("A-side mutation needs a compatible Lambda")
    if j in seed.frozen:
        raise ValueError("mutation index must be unfrozen")
    v = seed.v_vector(j)
    step = seed.dilog_exponent(j)
    ej = seed.basis[j]
    fj = seed.dual_basis[j]

    def pair(p):
        return -la.dot(ej, la.vec(p))

    shift_dir = la.scale(-1, fj)  # pair(shift_dir) = +1
    if direction == "inverse":
        return _binomial_map(x, v, pair, step, seed.lam, shift_dir)
    if direction == "forward":
        return _binomial_map_inverse(x, v, pair, step, seed.lam, shift_dir)
    raise ValueError("direction must be 'forward' or 'inverse'")


def mutate_X(
    x: TorusElement, j: int, seed: CompatibleSeed, direction: str = "inverse"
) -> TorusElement:
    """The map (mu_j^X)^(+-1) on the X-side quantum torus in root coordinates."""
    if j in seed.frozen:
        raise ValueError("mutation index must be unfrozen")
    ej = la.vec(seed.basis[j])
    step = Fraction(1)

    def pair_inv(n):
        return -seed.omega_val(la.vec(n), ej)

    def pair_fwd(n):
        return seed.omega_val(la.vec(n), ej)

    # integer shift direction with omega(n0, e_j) < 0, i.e. pair_inv(n0) > 0
    n0 = None
    for i in range(seed.rank):
        val = seed.omega_val(seed.basis[i], ej)
        if val != 0:
            n0 = seed.basis[i] if val < 0 else la.scale(-1, seed.basis[i])
            break
    if n0 is None:
        return x  # e_j in ker(omega): mutation acts trivially
    if direction == "inverse":
        return _binomial_map(x, ej, pair_inv, step, seed.omega, n0)
    if direction == "forward":
        return _binomial_map(x, ej, pair_fwd, step, seed.omega, la.scale(-1, n0))
    raise ValueError("direction must be 'forward' or 'inverse'")


def cluster_variable(
    root: CompatibleSeed, path, i: int
) -> tuple[TorusElement, Vec]:
    """The cluster variable A_{path,i} in root coordinates and its g-vector."""
    seeds = [root]
    for j in path:
        seeds.append(seeds[-1].mutate(j))
    amb = root.lattice()
    final = seeds[-1]
    x = TorusElement.monomial(amb, final.dual_basis[i])
    for step_idx in range(len(path) - 1, -1, -1):
        x = mutate_A(x, path[step_idx], seeds[step_idx], "inverse")
    if root.is_injective():
        # g is extracted as the unique dominance-maximal degree of the
        # expansion; for paths revisiting a cluster this can differ from the
        # final dual basis vector while the variable itself is unchanged.
        g = root.pointed_degree(x)
        assert all(g[h] >= 0 for h in root.frozen), "extended g-vector frozen part"
    else:
        g = la.vec(final.dual_basis[i])
    return x, g


def g_vector(root: CompatibleSeed, path, i: int) -> Vec:
    return la.vec(root.mutate_path(path).dual_basis[i])


# -- seed file format ----------------------------------------------------------


def seed_to_json(seed: CompatibleSeed) -> str:
    def render_mat(m):
        return [[str(x) for x in row] for row in m]

    data = {
        "labels": list(seed.labels),
        "frozen": [seed.labels[i] for i in sorted(seed.frozen)],
        "omega": render_mat(seed.omega),
    }
    if seed.lam is not None:
        data["lambda"] = render_mat(seed.lam)
    if any(d != 1 for d in seed.d_i):
        data["d_i"] = [str(d) for d in seed.d_i]
    return json.dumps(data, indent=2)


def seed_from_json(text: str) -> CompatibleSeed:
    data = json.loads(text)
    labels = [str(x) for x in data["labels"]]
    frozen_labels = set(str(x) for x in data.get("frozen", []))
    unknown = frozen_labels - set(labels)
    if unknown:
        raise ValueError(f"frozen entries not in labels: {sorted(unknown)}")
    frozen = {i for i, lbl in enumerate(labels) if lbl in frozen_labels}
    omega = [[_frac(x) for x in row] for row in data["omega"]]
    lam = None
    if "lambda" in data:
        lam = [[_frac(x) for x in row] for row in data["lambda"]]
    d_i = None
    if "d_i" in data:
        d_i = [_frac(x) for x in data["d_i"]]
    return CompatibleSeed.root(labels, frozen, omega, lam, d_i)


# -- stock seeds used across the test and verification suites -----------------


def a2_seed(d=2) -> CompatibleSeed:
    """The A2 seed: omega(e1,e2) = 1, Lambda(e1*,e2*) = d."""
    return CompatibleSeed.root(
        ["1", "2"], [], [[0, 1], [-1, 0]], [[0, d], [-d, 0]]
    )


def annulus_seed() -> CompatibleSeed:
    """The twice-marked annulus seed (Kronecker with boundary coefficients)."""
    b = [[0, -2, 1, 1], [2, 0, -1, -1], [-1, 1, 0, 0], [-1, 1, 0, 0]]
    omega = [list(r) for r in zip(*b)]
    lam = [[0, 2, 0, 0], [-2, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
    return CompatibleSeed.root(["1", "2", "3", "4"], [2, 3], omega, lam)


def markov_seed() -> CompatibleSeed:
    """The once-punctured torus seed (no Lambda; injectivity fails)."""
    b = [[0, -2, 2], [2, 0, -2], [-2, 2, 0]]
    omega = [list(r) for r in zip(*b)]
    return CompatibleSeed.root(["1", "2", "3"], [], omega)


def cyclic_a3_prin_seed() -> CompatibleSeed:
    """Principal extension of the cyclic triangle seed used for folding."""
    omega = [[0, 1, -1], [-1, 0, 1], [1, -1, 0]]
    base = CompatibleSeed.root(["1", "2", "3"], [], omega)
    return base.principal_extend()
