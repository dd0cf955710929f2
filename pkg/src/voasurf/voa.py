"""The rank-one Heisenberg vertex operator algebra in exact arithmetic.

States live in the Fock space spanned by monomials
a(-l1) a(-l2) ... a(-lk) |1> with l1 >= l2 >= ... >= lk >= 1, encoded
as the integer partition tuple (l1, ..., lk).  The weight grading is
the partition sum, the central charge is 1, and the conformal vector
is omega = (1/2) a(-1)^2 |1>.

Everything here is closed-form mode algebra:

* ``heisenberg_mode`` applies a generator mode a(m), [a(m), a(n)] =
  m delta_{m+n,0}.
* ``vertex_mode`` applies the general mode u(k) of Y(u, z) =
  sum_k u(k) z^(-k-1), built recursively from the normally ordered
  reconstruction Y(a(-n)w, z) = :(d^(n-1)a(z)/(n-1)!) Y(w, z):.
* ``square_bracket_mode`` applies the modes v[m] of the cylinder
  vertex operator Y[v, z] = Y(e^(z wt v) v, e^z - 1), given on a fixed
  target by the finite sum v[m] = sum_j c_{m,j} v(j) with c_{m,j} the
  z^(-m-1) coefficient of e^(wt(v) z) (e^z - 1)^(-j-1).
* ``bilinear_form`` is the invariant pairing normalized by
  <|1>, |1>> = 1 with adjoint a(k)^+ = -alpha^k a(-k).

The module is deliberately free of series objects: modes act on graded
vectors, and the series machinery consumes the resulting coefficients.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from math import comb

from .linalg import inverse as mat_inverse, solve as linear_solve
from .series import TruncatedSeries

VACUUM = ()
A = (1,)

CENTRAL_CHARGE = Fraction(1)


def weight(state: tuple) -> int:
    return sum(state)


@lru_cache(maxsize=None)
def basis(m: int):
    """All Fock basis states of weight m, largest part first, in a
    fixed reverse-lexicographic order."""
    if m < 0:
        return ()
    if m == 0:
        return (VACUUM,)
    out = []

    def build(remaining, max_part, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for part in range(min(remaining, max_part), 0, -1):
            build(remaining - part, part, prefix + [part])

    build(m, m, [])
    return tuple(out)


def gbinom(a: int, k: int) -> int:
    """Generalized binomial C(a, k) for integer a, k >= 0."""
    if k < 0:
        return 0
    if a >= 0:
        return comb(a, k)
    return (-1) ** k * comb(k - a - 1, k)


class GradedVector:
    """A finite rational linear combination of Fock basis states."""

    __slots__ = ("t",)

    def __init__(self, terms=None):
        self.t = {}
        if terms:
            for state, c in (terms.items() if isinstance(terms, dict) else terms):
                c = Fraction(c)
                if c:
                    self.t[tuple(state)] = self.t.get(tuple(state), Fraction(0)) + c
            self.t = {s: c for s, c in self.t.items() if c}

    @classmethod
    def basis_state(cls, state) -> "GradedVector":
        return cls({tuple(state): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.t

    def accumulate(self, state, c):
        c = self.t.get(state, Fraction(0)) + c
        if c:
            self.t[state] = c
        else:
            self.t.pop(state, None)

    def __add__(self, other):
        out = GradedVector(self.t)
        for s, c in other.t.items():
            out.accumulate(s, c)
        return out

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        return GradedVector({s: c * scalar for s, c in self.t.items()} if scalar else None)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __eq__(self, other):
        return isinstance(other, GradedVector) and self.t == other.t

    __hash__ = None

    def key(self):
        """Canonical hashable form, used as a cache key downstream."""
        return tuple(sorted(self.t.items()))

    def coefficient(self, state) -> Fraction:
        return self.t.get(tuple(state), Fraction(0))

    def weights(self):
        return sorted({weight(s) for s in self.t})

    def weight_component(self, m: int) -> "GradedVector":
        return GradedVector({s: c for s, c in self.t.items() if weight(s) == m})

    def is_homogeneous(self) -> bool:
        return len(self.weights()) <= 1

    def __repr__(self):
        return f"GradedVector({render_state(self)})"


ZERO = GradedVector()


def vacuum() -> GradedVector:
    return GradedVector.basis_state(VACUUM)


def generator() -> GradedVector:
    """The weight-one generator a = a(-1)|1>."""
    return GradedVector.basis_state(A)


def conformal_vector() -> GradedVector:
    """omega = (1/2) a(-1)^2 |1>, with L(n) = omega(n+1)."""
    return GradedVector({(1, 1): Fraction(1, 2)})


def conformal_vector_tilde() -> GradedVector:
    """The cylinder conformal vector omega - (c/24)|1>."""
    return GradedVector({(1, 1): Fraction(1, 2), VACUUM: -CENTRAL_CHARGE / 24})


# -- mode actions ------------------------------------------------------


def heisenberg_mode(m: int, v: GradedVector) -> GradedVector:
    """Apply the generator mode a(m); a(0) acts as zero."""
    if m == 0:
        return ZERO
    out = GradedVector()
    for state, c in v.t.items():
        if m < 0:
            new = tuple(sorted(state + (-m,), reverse=True))
            out.accumulate(new, c)
        else:
            mult = state.count(m)
            if mult:
                idx = state.index(m)
                out.accumulate(state[:idx] + state[idx + 1:], c * m * mult)
    return out


@lru_cache(maxsize=None)
def _vertex_mode_basis(u: tuple, k: int, v: tuple):
    """u(k) v on basis states; returns a tuple of (state, coeff) pairs."""
    if u == VACUUM:
        return ((v, Fraction(1)),) if k == -1 else ()
    n, w = u[0], u[1:]
    acc = {}

    def add_terms(gv, scale):
        for s, c in gv.items():
            c = c * scale
            if c:
                acc[s] = acc.get(s, Fraction(0)) + c

    # creation part of the derivative field, applied after w modes
    m = -n
    m_lo = k - n - weight(w) - weight(v) + 1
    while m >= m_lo:
        coef = gbinom(-m - 1, n - 1)
        if coef:
            inner = dict(_vertex_mode_basis(w, k - m - n, v))
            if inner:
                shifted = {}
                for s, c in inner.items():
                    shifted[tuple(sorted(s + (-m,), reverse=True))] = \
                        shifted.get(tuple(sorted(s + (-m,), reverse=True)), Fraction(0)) + c
                add_terms(shifted, coef)
        m -= 1

    # annihilation part, applied before w modes
    for m in range(1, weight(v) + 1):
        coef = gbinom(-m - 1, n - 1)
        av = heisenberg_mode(m, GradedVector.basis_state(v))
        for s_mid, c_mid in av.t.items():
            inner = dict(_vertex_mode_basis(w, k - m - n, s_mid))
            add_terms(inner, coef * c_mid)

    return tuple(sorted((s, c) for s, c in acc.items() if c))


def vertex_mode(u: GradedVector, k: int, v: GradedVector) -> GradedVector:
    """The mode u(k) of Y(u, z) = sum u(k) z^(-k-1), bilinear in u, v."""
    out = GradedVector()
    for us, uc in u.t.items():
        for vs, vc in v.t.items():
            for s, c in _vertex_mode_basis(us, k, vs):
                out.accumulate(s, uc * vc * c)
    return out


def zero_mode(v: GradedVector, target: GradedVector) -> GradedVector:
    """o(v) = v(wt v - 1) componentwise in the weight of v; it maps
    each V_m to itself."""
    out = GradedVector()
    for r in v.weights():
        part = vertex_mode(v.weight_component(r), r - 1, target)
        out = out + part
    return out


def virasoro(n: int, v: GradedVector) -> GradedVector:
    """L(n) = omega(n+1)."""
    return vertex_mode(conformal_vector(), n + 1, v)


# -- square bracket modes ----------------------------------------------


@lru_cache(maxsize=None)
def _cyl_coeff(r: int, j: int, m: int) -> Fraction:
    """Coefficient of z^(-m-1) in e^(r z) (e^z - 1)^(-j-1)."""
    target = -m - 1
    if target < -j - 1:
        return Fraction(0)
    rel = target + j + 1  # relative order above the leading z^(-j-1)
    if j >= 0:
        em1 = (TruncatedSeries.exponential("z", 1, rel + j + 2) - 1).tighten_lo(1)
        base = (em1 ** (j + 1)).inverse(hi=target)
    else:
        # here target >= -j-1 >= 0, so plain positive powers suffice
        em1 = (TruncatedSeries.exponential("z", 1, target + 1) - 1).tighten_lo(1)
        base = em1 ** (-j - 1)
    full = TruncatedSeries.exponential("z", r, max(rel, 0)) * base
    return full.coefficient(target)


def square_bracket_mode(v: GradedVector, m: int, target: GradedVector) -> GradedVector:
    """The cylinder mode v[m] applied to ``target``.

    On a fixed target the defining sum v[m] = sum_j c_{m,j} v(j) is
    finite: v(j) kills states of weight below wt(v(j) target), so j is
    bounded by wt v + wt(target) - 1, and c_{m,j} vanishes for j < m.
    """
    out = GradedVector()
    for r in v.weights():
        vr = v.weight_component(r)
        for ts, tc in target.t.items():
            piece = GradedVector({ts: tc})
            for j in range(m, r + weight(ts)):
                c = _cyl_coeff(r, j, m)
                if c:
                    out = out + c * vertex_mode(vr, j, piece)
    return out


@lru_cache(maxsize=None)
def _square_fock(state: tuple):
    """The square-bracket Fock state a[-l1]...a[-lk]|1> expanded in the
    round basis; unitriangular with leading term ``state`` itself."""
    if state == VACUUM:
        return vacuum()
    head, rest = state[0], state[1:]
    return square_bracket_mode(generator(), -head, _square_fock(rest))


def square_fock(state: tuple) -> GradedVector:
    return GradedVector(_square_fock(tuple(state)).t)


def to_square_coords(v: GradedVector) -> dict:
    """Write v in the square-bracket Fock basis.

    Works down the round weights: square_fock(lam) = round(lam) + lower
    weight terms, so elimination from the top is exact and finite.
    """
    coords = {}
    rest = GradedVector(v.t)
    while not rest.is_zero():
        top = max(rest.weights())
        for lam in basis(top):
            c = rest.coefficient(lam)
            if c:
                coords[lam] = coords.get(lam, Fraction(0)) + c
                rest = rest - c * square_fock(lam)
    return coords


def square_weight_components(v: GradedVector) -> dict:
    """Decompose v into L[0] eigencomponents, keyed by square weight."""
    out = {}
    for lam, c in to_square_coords(v).items():
        r = weight(lam)
        out.setdefault(r, GradedVector())
        out[r] = out[r] + c * square_fock(lam)
    return out


# -- invariant bilinear forms -------------------------------------------


def _form_state(state: tuple, y: GradedVector, alpha: Fraction) -> Fraction:
    if state == VACUUM:
        return y.coefficient(VACUUM)
    k, rest = state[0], state[1:]
    moved = heisenberg_mode(k, y)
    if moved.is_zero():
        return Fraction(0)
    return -(alpha ** -k) * _form_state(rest, moved, alpha)


def bilinear_form(x: GradedVector, y: GradedVector, alpha=1) -> Fraction:
    """The invariant pairing with <|1>,|1>> = 1 and a(k)^+ = -alpha^k a(-k)."""
    alpha = Fraction(alpha)
    total = Fraction(0)
    for s, c in x.t.items():
        total += c * _form_state(s, y, alpha)
    return total


def bilinear_form_sq(x: GradedVector, y: GradedVector, alpha=1) -> Fraction:
    """The square-bracket pairing: strip a[-k] factors by the adjoint
    a[k]^+ = -alpha^k a[-k], pairing vacua at the end."""
    alpha = Fraction(alpha)
    a = generator()
    total = Fraction(0)
    for lam, c in to_square_coords(x).items():
        val = Fraction(1)
        target = y
        for k in lam:
            val *= -(alpha ** -k)
            target = square_bracket_mode(a, k, target)
            if target.is_zero():
                val = Fraction(0)
                break
        if val:
            total += c * val * target.coefficient(VACUUM)
    return total


def gram_matrix(m: int, alpha=1, bracket="round"):
    states = basis(m)
    if bracket == "round":
        vecs = [GradedVector.basis_state(s) for s in states]
        form = bilinear_form
    elif bracket == "square":
        vecs = [square_fock(s) for s in states]
        form = bilinear_form_sq
    else:
        raise ValueError(f"unknown bracket {bracket!r}")
    return [[form(u, v, alpha) for v in vecs] for u in vecs], vecs


def dual_basis(m: int, alpha=1, bracket="round"):
    """Pairs (u, u_bar) with <u_bar_i, u_j> = delta_ij at weight m."""
    gram, vecs = gram_matrix(m, alpha, bracket)
    ginv = mat_inverse(gram)
    duals = []
    for i in range(len(vecs)):
        d = GradedVector()
        for j, vj in enumerate(vecs):
            d = d + ginv[i][j] * vj
        duals.append(d)
    return list(zip(vecs, duals))


def adjoint_boundary_state(v: GradedVector, j: int, uprime: GradedVector,
                           alpha=1) -> GradedVector:
    """The state w' with <w', y> = <u', v(j) y> for all y.

    Solved weight by weight through the Gram matrix; the form is
    nondegenerate in every weight, so w' exists and is unique.
    """
    alpha = Fraction(alpha)
    out = GradedVector()
    for r in v.weights():
        vr = v.weight_component(r)
        for wu in uprime.weights():
            upr = uprime.weight_component(wu)
            s = wu - (r - j - 1)
            if s < 0:
                continue
            states = basis(s)
            if not states:
                continue
            rhs = [bilinear_form(upr, vertex_mode(vr, j, GradedVector.basis_state(b)), alpha)
                   for b in states]
            if all(x == 0 for x in rhs):
                continue
            gram, _ = gram_matrix(s, alpha)
            coords = linear_solve(gram, rhs)
            for c, b in zip(coords, states):
                if c:
                    out.accumulate(b, c)
    return out


# -- axiom checks -------------------------------------------------------


def jacobi_check(u: GradedVector, v: GradedVector, w: GradedVector,
                 degree_window) -> bool:
    """Verify the commutator form of the Jacobi identity,

        [u(k), v(n)] w = sum_{j>=0} C(k, j) (u(j) v)(k+n-j) w,

    for all k, n in the given (kmin, kmax, nmin, nmax) window."""
    kmin, kmax, nmin, nmax = degree_window
    max_j = max((weight(s) for s in u.t), default=0) + \
        max((weight(s) for s in v.t), default=0)
    for k in range(kmin, kmax + 1):
        for n in range(nmin, nmax + 1):
            lhs = vertex_mode(u, k, vertex_mode(v, n, w)) - \
                vertex_mode(v, n, vertex_mode(u, k, w))
            rhs = GradedVector()
            for j in range(0, max_j + 1):
                c = gbinom(k, j)
                if c:
                    rhs = rhs + c * vertex_mode(vertex_mode(u, j, v), k + n - j, w)
            if lhs != rhs:
                return False
    return True


# -- parsing and rendering ----------------------------------------------

_FACTOR = re.compile(r"a\[(-\d+)\](?:\^(\d+))?")

_SHORTHAND = {
    "1": vacuum,
    "vac": vacuum,
    "a": generator,
    "omega": conformal_vector,
    "omegatilde": conformal_vector_tilde,
}


def parse_state(text: str) -> GradedVector:
    """Parse a state literal like ``a[-2]a[-1]^2|1 - 1/2*|1``.

    Shorthands: ``1``/``vac`` (vacuum), ``a``, ``omega``,
    ``omegatilde``.  Rational prefactors attach with ``*``.
    """
    text = text.replace(" ", "")
    if not text:
        raise ValueError("empty state literal")
    # split into signed terms, ignoring +/- inside mode brackets
    terms = []
    depth = 0
    current = ""
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch in "+-" and depth == 0 and current:
            terms.append(current)
            current = ch
        else:
            current += ch
    terms.append(current)
    out = GradedVector()
    for term in terms:
        sign = Fraction(1)
        if term[0] in "+-":
            if term[0] == "-":
                sign = Fraction(-1)
            term = term[1:]
        coeff = Fraction(1)
        if "*" in term:
            pre, term = term.split("*", 1)
            coeff = Fraction(pre)
        if term in _SHORTHAND:
            out = out + sign * coeff * _SHORTHAND[term]()
            continue
        if not term.endswith("|1"):
            raise ValueError(f"cannot parse state term {term!r}")
        body = term[:-2]
        pos = 0
        parts = []
        while pos < len(body):
            m = _FACTOR.match(body, pos)
            if not m:
                raise ValueError(f"cannot parse state term {term!r}")
            k = -int(m.group(1))
            parts.extend([k] * int(m.group(2) or 1))
            pos = m.end()
        state = tuple(sorted(parts, reverse=True))
        out = out + GradedVector({state: sign * coeff})
    return out


def render_state(v: GradedVector) -> str:
    """Inverse of ``parse_state`` on canonical form."""
    if v.is_zero():
        return "0"
    parts = []
    for state in sorted(v.t, key=lambda s: (-weight(s), s)):
        c = v.t[state]
        sign = "-" if c < 0 else "+"
        c = abs(c)
        body = ""
        i = 0
        while i < len(state):
            k = state[i]
            mult = state.count(k)
            body += f"a[-{k}]" + (f"^{mult}" if mult > 1 else "")
            i += mult
        body += "|1"
        prefix = "" if c == 1 else f"{c}*"
        parts.append((sign, prefix + body))
    first_sign, first_body = parts[0]
    text = ("-" if first_sign == "-" else "") + first_body
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text
