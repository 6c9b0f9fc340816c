"""Exact scalar and quantum-torus arithmetic.

Scalars (TCoeff) are Laurent polynomials in a formal root t^(1/D) with exact
integer (internally also rational) coefficients; exponents are Fractions.
Torus elements are finite maps from lattice exponent vectors to scalars,
multiplied by the twist law z^u z^v = t^F(u,v) z^(u+v) for a skew form F.
No floating point anywhere.
"""

from __future__ import annotations

from fractions import Fraction

from ._linalg import Mat, Vec, bilinear, is_skew_symmetric, lcm_denominator, mat, vec


def _num(x):
    """Normalize a rational number, preferring int when integral."""
    if isinstance(x, int):
        return x
    f = Fraction(x)
    return int(f) if f.denominator == 1 else f


class TCoeff:
    """A Laurent polynomial in t^(1/D): {exponent: coefficient}, no zeros stored."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for e, c in terms.items():
                c = _num(c)
                if c != 0:
                    clean[_num(e)] = c
        self.terms = clean
        self._hash = None

    @staticmethod
    def zero() -> "TCoeff":
        return TCoeff()

    @staticmethod
    def one() -> "TCoeff":
        return TCoeff({0: 1})

    @staticmethod
    def of(c) -> "TCoeff":
        return c if isinstance(c, TCoeff) else TCoeff({0: c})

    @staticmethod
    def t_power(e, c=1) -> "TCoeff":
        return TCoeff({e: c})

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return self.terms == {0: 1}

    def is_integral(self) -> bool:
        return all(isinstance(c, int) for c in self.terms.values())

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, TCoeff):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ({} if other == 0 else {0: _num(other)})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __add__(self, other) -> "TCoeff":
        other = TCoeff.of(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        res = TCoeff.__new__(TCoeff)
        res.terms = out
        res._hash = None
        return res

    __radd__ = __add__

    def __neg__(self) -> "TCoeff":
        return TCoeff({e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "TCoeff":
        return self + (-TCoeff.of(other))

    def __rsub__(self, other) -> "TCoeff":
        return TCoeff.of(other) + (-self)

    def __mul__(self, other) -> "TCoeff":
        other = TCoeff.of(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = _num(e1 + e2)
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        res = TCoeff.__new__(TCoeff)
        res.terms = out
        res._hash = None
        return res

    __rmul__ = __mul__

    def bar(self) -> "TCoeff":
        """t -> t^(-1)."""
        return TCoeff({-e: c for e, c in self.terms.items()})

    def is_bar_invariant(self) -> bool:
        return self == self.bar()

    def eval_one(self):
        """Classical limit t = 1."""
        return _num(sum(self.terms.values(), Fraction(0)))

    def max_exp(self):
        return max(self.terms) if self.terms else None

    def min_exp(self):
        return min(self.terms) if self.terms else None

    def divide(self, other: "TCoeff") -> "TCoeff | None":
        """Exact division in the Laurent ring over Q; None if not divisible."""
        if other.is_zero():
            raise ZeroDivisionError("division by zero TCoeff")
        if self.is_zero():
            return TCoeff.zero()
        quot = {}
        rem = self
        lead_b = other.max_exp()
        cb = other.terms[lead_b]
        lo_bound = Fraction(self.min_exp()) - Fraction(other.min_exp())
        while not rem.is_zero():
            lead_r = rem.max_exp()
            e = _num(lead_r - lead_b)
            if Fraction(e) < lo_bound:
                return None
            c = _num(Fraction(rem.terms[lead_r]) / Fraction(cb))
            quot[e] = c
            rem = rem - TCoeff({e: c}) * other
        return TCoeff(quot)

    def denominator_lcm(self) -> int:
        return lcm_denominator(self.terms.keys())

    def render(self, denom: int | None = None) -> str:
        """Canonical text form: integer polynomial in the symbol t^(p/D)."""
        if not self.terms:
            return "0"
        if denom is None:
            denom = self.denominator_lcm()
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            if e == 0:
                parts.append(f"{c}")
                continue
            p = Fraction(e) * denom
            assert p.denominator == 1, "render: D does not clear exponents"
            sym = f"t^({int(p)}/{denom})" if denom != 1 else f"t^{int(p)}"
            if c == 1:
                parts.append(sym)
            elif c == -1:
                parts.append(f"-{sym}")
            else:
                parts.append(f"{c}*{sym}")
        out = parts[0]
        for p in parts[1:]:
            out += p if p.startswith("-") else "+" + p
        return out

    def __repr__(self):
        return f"TCoeff({self.render()})"


def qint(k: int, step=1) -> TCoeff:
    """[k] in base t^step: t^(step(k-1)) + t^(step(k-3)) + ... ; [-k] = -[k]."""
    if k == 0:
        return TCoeff.zero()
    sign = 1 if k > 0 else -1
    k = abs(k)
    step = Fraction(step)
    return TCoeff({_num(step * (k - 1 - 2 * j)): sign for j in range(k)})


def qbinom(a: int, k: int, step=1) -> TCoeff:
    """Bar-invariant quantum binomial coefficient in base t^step.

    Evaluates at t=1 to the ordinary binomial coefficient; requires a >= k >= 0.
    """
    if k < 0 or a < k:
        raise ValueError(f"qbinom requires a >= k >= 0, got ({a},{k})")
    out = TCoeff.one()
    for j in range(1, k + 1):
        out = out * qint(a - j + 1, step)
        q = out.divide(qint(j, step))
        assert q is not None
        out = q
    assert out.is_integral()
    return out


def chebyshev_T(k: int) -> tuple[int, ...]:
    """Coefficients (low to high) of the k-th Chebyshev-like polynomial:
    T_0 = 2, T_1 = z, T_{k+1} = z T_k - T_{k-1}; satisfies T_k(z+1/z) = z^k + z^-k."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    prev, cur = [2], [0, 1]
    if k == 0:
        return tuple(prev)
    for _ in range(k - 1):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return tuple(cur)


def chebyshev_U(k: int) -> tuple[int, ...]:
    """Same recursion with U_0 = 1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    prev, cur = [1], [0, 1]
    if k == 0:
        return tuple(prev)
    for _ in range(k - 1):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return tuple(cur)


class Lattice:
    """Descriptor of an ambient lattice: index labels and frozen subset."""

    __slots__ = ("labels", "frozen")

    def __init__(self, labels, frozen=()):
        self.labels = tuple(labels)
        self.frozen = frozenset(frozen)
        if not self.frozen <= set(range(len(self.labels))):
            raise ValueError("frozen indices out of range")

    @property
    def rank(self) -> int:
        return len(self.labels)

    @property
    def unfrozen(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.rank) if i not in self.frozen)

    def __eq__(self, other):
        return (
            isinstance(other, Lattice)
            and self.labels == other.labels
            and self.frozen == other.frozen
        )

    def __hash__(self):
        return hash((self.labels, self.frozen))

    def __repr__(self):
        return f"Lattice({list(self.labels)}, frozen={sorted(self.frozen)})"


def _norm_exp(p) -> tuple:
    return tuple(_num(x) for x in p)


class TorusElement:
    """Element of a quantum torus algebra: finite sum of c_p z^p."""

    __slots__ = ("ambient", "terms")

    def __init__(self, ambient: Lattice, terms=None):
        self.ambient = ambient
        clean = {}
        if terms:
            for p, c in terms.items():
                c = TCoeff.of(c)
                if not c.is_zero():
                    pp = _norm_exp(p)
                    if len(pp) != ambient.rank:
                        raise ValueError("exponent vector has wrong length")
                    clean[pp] = c
        self.terms = clean

    @staticmethod
    def monomial(ambient: Lattice, p, coeff=1) -> "TorusElement":
        return TorusElement(ambient, {tuple(p): TCoeff.of(coeff)})

    @staticmethod
    def zero(ambient: Lattice) -> "TorusElement":
        return TorusElement(ambient)

    @staticmethod
    def one(ambient: Lattice) -> "TorusElement":
        return TorusElement(ambient, {(0,) * ambient.rank: 1})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TorusElement)
            and self.ambient == other.ambient
            and self.terms == other.terms
        )

    def __add__(self, other: "TorusElement") -> "TorusElement":
        self._check(other)
        out = dict(self.terms)
        for p, c in other.terms.items():
            s = out.get(p, TCoeff.zero()) + c
            if s.is_zero():
                out.pop(p, None)
            else:
                out[p] = s
        res = TorusElement.__new__(TorusElement)
        res.ambient, res.terms = self.ambient, out
        return res

    def __sub__(self, other: "TorusElement") -> "TorusElement":
        return self + other.scale(-1)

    def scale(self, c) -> "TorusElement":
        c = TCoeff.of(c)
        return TorusElement(
            self.ambient, {p: cc * c for p, cc in self.terms.items()}
        )

    def _check(self, other: "TorusElement"):
        if self.ambient != other.ambient:
            raise ValueError("mismatched ambient lattices")

    def bar(self) -> "TorusElement":
        """t -> t^(-1), z^v -> z^v."""
        return TorusElement(self.ambient, {p: c.bar() for p, c in self.terms.items()})

    def eval_one(self) -> "TorusElement":
        return TorusElement(
            self.ambient, {p: TCoeff.of(c.eval_one()) for p, c in self.terms.items()}
        )

    def map_exponents(self, fn, ambient: Lattice | None = None) -> "TorusElement":
        """Apply fn to each exponent vector, summing collisions."""
        out = TorusElement.zero(ambient or self.ambient)
        tgt = out.ambient
        for p, c in self.terms.items():
            q = _norm_exp(fn(p))
            s = out.terms.get(q, TCoeff.zero()) + c
            if s.is_zero():
                out.terms.pop(q, None)
            else:
                out.terms[q] = s
        return out

    def support(self):
        return set(self.terms)

    def coefficient(self, p) -> TCoeff:
        return self.terms.get(_norm_exp(p), TCoeff.zero())

    def render(self, denom: int | None = None) -> str:
        """Canonical text: terms sorted lexicographically by exponent."""
        if not self.terms:
            return "0"
        if denom is None:
            denom = lcm_denominator(
                e for c in self.terms.values() for e in c.terms
            ) if any(c.terms for c in self.terms.values()) else 1
        parts = []
        for p in sorted(self.terms, key=lambda q: tuple(Fraction(x) for x in q)):
            c = self.terms[p]
            mono = "*".join(
                f"z[{lbl}]^{p[i]}"
                for i, lbl in enumerate(self.ambient.labels)
                if p[i] != 0
            )
            cstr = c.render(denom)
            if not mono:
                parts.append(f"({cstr})")
            elif c.is_one():
                parts.append(mono)
            else:
                parts.append(f"({cstr})*{mono}")
        return " + ".join(parts)

    def __repr__(self):
        return f"TorusElement({self.render()})"


def t_multiply(a: TorusElement, b: TorusElement, form: Mat) -> TorusElement:
    """Product with twist z^u z^v = t^F(u,v) z^(u+v); F skew and rational."""
    a._check(b)
    out = {}
    for u, cu in a.terms.items():
        uv = vec(u)
        for v, cv in b.terms.items():
            tw = bilinear(form, uv, vec(v))
            p = tuple(_num(x + y) for x, y in zip(u, v))
            c = cu * cv if tw == 0 else cu * cv * TCoeff.t_power(tw)
            s = out.get(p, TCoeff.zero()) + c
            if s.is_zero():
                out.pop(p, None)
            else:
                out[p] = s
    res = TorusElement.__new__(TorusElement)
    res.ambient, res.terms = a.ambient, out
    return res


def check_form(form: Mat, rank: int):
    form = mat(form)
    if len(form) != rank or any(len(r) != rank for r in form):
        raise ValueError("form has wrong shape")
    if not is_skew_symmetric(form):
        raise ValueError("form must be skew-symmetric")
    return form


def t_divide(a: TorusElement, b: TorusElement, form: Mat) -> TorusElement | None:
    """Exact right quotient q with q * b = a in the quantum torus, else None.

    Leading-term division with respect to the lexicographic order; failure
    (None) is the 'image is not a Laurent polynomial' verdict used by the
    upper-cluster membership tests.
    """
    if b.is_zero():
        raise ZeroDivisionError("division by zero torus element")
    if a.is_zero():
        return TorusElement.zero(a.ambient)
    a._check(b)

    def lexkey(p):
        return tuple(Fraction(x) for x in p)

    lead_b = max(b.terms, key=lexkey)
    cb = b.terms[lead_b]
    # Newton-box bound: any exact quotient's support is confined coordinatewise
    # by the extremes of dividend and divisor (apply +-coordinate functionals
    # to q * b = a).  Guarantees termination and a clean non-divisible verdict.
    rank = a.ambient.rank
    lo = tuple(
        min(Fraction(p[i]) for p in a.terms) - min(Fraction(p[i]) for p in b.terms)
        for i in range(rank)
    )
    hi = tuple(
        max(Fraction(p[i]) for p in a.terms) - max(Fraction(p[i]) for p in b.terms)
        for i in range(rank)
    )
    quot = TorusElement.zero(a.ambient)
    rem = a
    while not rem.is_zero():
        lead_r = max(rem.terms, key=lexkey)
        p = tuple(_num(Fraction(x) - Fraction(y)) for x, y in zip(lead_r, lead_b))
        if any(Fraction(p[i]) < lo[i] or Fraction(p[i]) > hi[i] for i in range(rank)):
            return None
        tw = bilinear(mat(form), vec(p), vec(lead_b))
        den = cb if tw == 0 else cb * TCoeff.t_power(tw)
        c = rem.terms[lead_r].divide(den)
        if c is None:
            return None
        mono = TorusElement.monomial(a.ambient, p, c)
        quot = quot + mono
        rem = rem - t_multiply(mono, b, form)
    return quot


def apply_int_poly(coeffs, x: TorusElement, form: Mat) -> TorusElement:
    """Evaluate an integer polynomial (coeffs low to high) at a torus element."""
    out = TorusElement.zero(x.ambient)
    power = TorusElement.one(x.ambient)
    for i, c in enumerate(coeffs):
        if i > 0:
            power = t_multiply(power, x, form)
        if c:
            out = out + power.scale(c)
    return out
