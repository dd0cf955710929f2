"""Genus-g handle kernels in the Schottky-style parameterization.

A genus-g surface is described by 2g marked points w_{-a}, w_a on the
sphere (one excised-disc pair per handle) and one gluing amplitude
rho_a per handle.  The marked points are exact rational numbers here;
the amplitudes stay formal.  Partition and n-point functions are sums
of genus-zero correlation values over a dual basis flowing through
every handle, weighted by rho_a^(weight), so their rho-expansion is
the weight decomposition of the states in the channel.

The kernel layer (the moment matrix R, its Neumann inverse, the psi
and theta functions) carries half-integer rho-weights, tracked through
the variables "sr1", "sr2", ... with sr_a^2 = rho_a, exactly as the
genus-two module tracks eps through "se".  Assembled public quantities
must land back on nonnegative integer rho-powers; intermediate rows,
columns and the theta components need not, and their windows do the
bookkeeping: every monomial is built with a sharp lower bound, so the
product horizons stay tight enough to certify results through
rho_order without ever expanding past the matrix cutoff.

Genus-zero values are computed by pairing free-field legs: the vertex
operator of a basis monomial is a normally ordered product of
derivative currents, so a vacuum correlation value is a sum over
complete cross-point matchings of derivative propagators.  That closed
form is what lets handle sums be evaluated at rational points instead
of in yet another formal variable.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial

from .series import MultiSeries, rat
from .voa import VACUUM, dual_basis, gbinom, vertex_mode, virasoro


# -- genus-zero values at rational points ---------------------------------


def _pair_weight(k: int, kp: int) -> Fraction:
    """Contraction of the (k-1)-th and (kp-1)-th normalized current
    derivatives, without the (z - w)^-(k+kp) factor."""
    return Fraction((-1) ** (k - 1) * factorial(k + kp - 1),
                    factorial(k - 1) * factorial(kp - 1))


def _matchings(legs: tuple, points: tuple) -> Fraction:
    if not legs:
        return Fraction(1)
    i, k = legs[0]
    total = Fraction(0)
    for t in range(1, len(legs)):
        j, kp = legs[t]
        if j == i:
            continue
        rest = legs[1:t] + legs[t + 1:]
        total += (_pair_weight(k, kp)
                  / (points[i] - points[j]) ** (k + kp)
                  * _matchings(rest, points))
    return total


@lru_cache(maxsize=None)
def _monomial_value(monomials: tuple, points: tuple) -> Fraction:
    legs = tuple((i, k) for i, parts in enumerate(monomials) for k in parts)
    if len(legs) % 2:
        return Fraction(0)
    return _matchings(legs, points)


def genus0_rational_value(states, points) -> Fraction:
    """The genus-zero correlation value of Fock states at distinct
    rational points.

    This is the rational function that the ordered formal expansions
    of the reduction module converge to, evaluated off the diagonals,
    which is exactly the form the handle sums need.
    """
    pts = tuple(rat(x) for x in points)
    if len(set(pts)) != len(pts):
        raise ValueError("insertion points must be pairwise distinct")
    if len(pts) != len(states):
        raise ValueError("one point per state")
    total = Fraction(0)
    for combo in product(*(tuple(s.t.items()) for s in states)):
        coeff = Fraction(1)
        for _, c in combo:
            coeff *= c
        if coeff:
            total += coeff * _monomial_value(tuple(st for st, _ in combo), pts)
    return total


# -- surface data ----------------------------------------------------------


def _clean_f(f_choice) -> tuple:
    """Canonical form of the f_l data: one sorted (exponent, coeff)
    tuple per component, zero coefficients dropped."""
    cleaned = []
    for f in f_choice:
        items = f.items() if isinstance(f, dict) else f
        poly = {}
        for e, c in items:
            c = rat(c)
            if c:
                poly[int(e)] = poly.get(int(e), Fraction(0)) + c
        cleaned.append(tuple(sorted((e, c) for e, c in poly.items() if c)))
    return tuple(cleaned)


@dataclass(frozen=True)
class SchottkyData:
    """Handle data: 2g rational coordinates in the order
    (w_{-1}, w_1, w_{-2}, w_2, ...), the amplitude truncation, the
    moment matrix cutoff, and an optional tuple of Laurent polynomials
    f_l (index l = 0, 1, ...) deforming the degree-p kernel seed."""

    genus: int
    coordinates: tuple
    rho_order: int
    matrix_cutoff: int
    f_choice: tuple = ()

    def __post_init__(self):
        if self.genus < 1:
            raise ValueError("genus must be at least 1")
        if self.rho_order < 1:
            raise ValueError("rho_order must be at least 1")
        coords = tuple(rat(c) for c in self.coordinates)
        if len(coords) != 2 * self.genus:
            raise ValueError("need exactly 2*genus coordinates")
        if len(set(coords)) != len(coords):
            raise ValueError("handle coordinates must be pairwise distinct")
        if self.matrix_cutoff < 2 * self.rho_order:
            raise ValueError(
                "matrix_cutoff must be at least 2 * rho_order; row m of the "
                "moment matrix carries amplitude order (m + 1)/2 and the "
                "Neumann sums must reach the full window")
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "f_choice", _clean_f(self.f_choice))

    @property
    def index_set(self) -> tuple:
        """Handle labels (1, -1, 2, -2, ...); -a marks the paired point."""
        out = []
        for a in range(1, self.genus + 1):
            out.extend((a, -a))
        return tuple(out)

    @property
    def sr_vars(self) -> tuple:
        return tuple(f"sr{a}" for a in range(1, self.genus + 1))

    def sr_var(self, a: int) -> str:
        return f"sr{abs(a)}"

    def w(self, a: int) -> Fraction:
        if a == 0 or abs(a) > self.genus:
            raise ValueError(f"no handle point {a}")
        return self.coordinates[2 * (abs(a) - 1) + (1 if a > 0 else 0)]

    def f_poly(self, ell: int) -> dict:
        if 0 <= ell < len(self.f_choice):
            return dict(self.f_choice[ell])
        return {}


def _sr_monomial(data: SchottkyData, exps: dict, coeff) -> MultiSeries:
    """An exact amplitude monomial, keyed by signed handle labels; the
    window lo is sharp so product horizons stay tight."""
    coeff = rat(coeff)
    if coeff == 0:
        return MultiSeries.constant(0)
    merged = {}
    for a, e in exps.items():
        v = data.sr_var(a)
        merged[v] = merged.get(v, 0) + e
    return MultiSeries.monomial(merged, coeff)


def _clip_sr(ms: MultiSeries, data: SchottkyData, hi: int) -> MultiSeries:
    out = ms.extended_to(data.sr_vars)
    for v in data.sr_vars:
        out = out.clip(v, out.window[v][0], hi)
    return out


def require_integer_rho(ms: MultiSeries) -> MultiSeries:
    """Exported handle-sum data must carry rho to nonnegative integer
    powers only; sr exponents are twice the rho ones."""
    for i, v in enumerate(ms.vars):
        if not v.startswith("sr"):
            continue
        for key, c in ms.c.items():
            if not c:
                continue
            if key[i] % 2:
                raise AssertionError(
                    f"half-integer rho power {v}^{key[i]} survived to an "
                    "exported quantity")
            if key[i] < 0:
                raise AssertionError(
                    f"negative rho power {v}^{key[i]} survived to an "
                    "exported quantity")
    return ms


def rho_series(ms: MultiSeries, data: SchottkyData) -> MultiSeries:
    """Rewrite an sr-series over rho1..rhog with halved exponents."""
    require_integer_rho(ms)
    ms = ms.extended_to(data.sr_vars)
    names = {f"sr{a}": f"rho{a}" for a in range(1, data.genus + 1)}
    variables = tuple(names.get(v, v) for v in ms.vars)
    window = {}
    for v in ms.vars:
        lo, hi = ms.window[v]
        if v in names:
            window[names[v]] = (max(0, lo) // 2, None if hi is None else hi // 2)
        else:
            window[v] = (lo, hi)
    order = sorted(range(len(variables)), key=lambda i: variables[i])
    out = MultiSeries(variables, window)
    for key, c in ms.c.items():
        out.c[tuple(key[i] // 2 if ms.vars[i] in names else key[i]
                    for i in order)] = c
    return out


# -- the kernel seed and its derivatives -----------------------------------


def _f_deriv(poly: dict, m: int, x: Fraction) -> Fraction:
    """Normalized m-th derivative of a Laurent polynomial at x."""
    total = Fraction(0)
    for e, c in poly.items():
        b = gbinom(e, m)
        if b:
            total += c * b * x ** (e - m)
    return total


def _e_value(p: int, data: SchottkyData, m: int, n: int, y: Fraction) -> Fraction:
    """The f-only diagonal coefficient sum_l f_l^(m)(y) C(l, n) y^(l-n);
    this is what survives of the seed between a point and its own
    partner, where the pole term must not be counted."""
    total = Fraction(0)
    for ell in range(2 * p - 1):
        b = gbinom(ell, n)
        if b:
            total += _f_deriv(data.f_poly(ell), m, y) * b * y ** (ell - n)
    return total


def _psi0_deriv(p: int, data: SchottkyData, m: int, n: int,
                x: Fraction, y: Fraction) -> Fraction:
    """Normalized mixed derivative of the kernel seed at a rational
    point pair off the diagonal."""
    total = Fraction((-1) ** m * gbinom(m + n, m)) * (x - y) ** (-1 - m - n)
    for ell in range(2 * p - 1):
        b = gbinom(ell, n)
        if b:
            total += _f_deriv(data.f_poly(ell), m, x) * b * y ** (ell - n)
    return total


def _upper_pole(var: str, c: Fraction, k: int, lo: int) -> MultiSeries:
    """(var - c)^k expanded for |var| > |c|, viewed down to var^lo."""
    coeffs = {}
    t = 0
    while k - t >= lo:
        b = gbinom(k, t)
        if b:
            coeffs[(k - t,)] = Fraction(b) * (-c) ** t
        t += 1
        if k >= 0 and t > k:
            break
    return MultiSeries((var,), {var: (lo, None)}, coeffs)


def _lower_pole(c: Fraction, var: str, k: int, hi: int) -> MultiSeries:
    """(c - var)^k expanded for |var| < |c|, known through var^hi."""
    coeffs = {}
    for t in range(hi + 1):
        b = gbinom(k, t)
        if b:
            coeffs[(t,)] = Fraction(b) * c ** (k - t) * Fraction(-1) ** t
        if k >= 0 and t >= k:
            break
    return MultiSeries((var,), {var: (0, hi)}, coeffs)


def psi0(p: int, f_choice, window) -> MultiSeries:
    """The genus-zero kernel seed 1/(x - y) + sum_l f_l(x) y^l,
    expanded in |x| > |y| over the given two-variable window."""
    if p < 1:
        raise ValueError("kernel degree p must be at least 1")
    fs = _clean_f(f_choice)
    if len(fs) > 2 * p - 1:
        raise ValueError("f_choice may have at most 2p - 1 components")
    x_lo, x_hi = window["x"]
    y_lo, y_hi = window["y"]
    if y_hi is None:
        raise ValueError("the y window needs a finite horizon")
    coeffs = {}
    for k in range(max(0, y_lo), y_hi + 1):
        e = -1 - k
        if e < x_lo:
            break
        if x_hi is not None and e > x_hi:
            continue
        coeffs[(e, k)] = Fraction(1)
    for ell, poly in enumerate(fs):
        if not y_lo <= ell <= y_hi:
            continue
        for e, c in poly:
            if e < x_lo or (x_hi is not None and e > x_hi):
                continue
            key = (e, ell)
            coeffs[key] = coeffs.get(key, Fraction(0)) + c
    return MultiSeries(("x", "y"), {"x": (x_lo, x_hi), "y": (y_lo, y_hi)},
                       coeffs)


# -- the moment matrix and its Neumann inverse ------------------------------


@dataclass
class HandleMatrix:
    """A truncated matrix indexed by (handle, order) pairs, the handle
    running over the full signed index set and the order below the
    cutoff; absent entries are zero."""

    data: SchottkyData
    entries: dict

    def entry(self, a: int, m: int, b: int, n: int) -> MultiSeries:
        e = self.entries.get(((a, m), (b, n)))
        return e if e is not None else MultiSeries.constant(0)

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.entries.values())


def handle_indices(data: SchottkyData) -> tuple:
    return tuple((a, m) for a in data.index_set
                 for m in range(data.matrix_cutoff))


def handle_identity(data: SchottkyData) -> HandleMatrix:
    one = MultiSeries.constant(1)
    return HandleMatrix(data, {(i, i): one for i in handle_indices(data)})


def handle_add(A: HandleMatrix, B: HandleMatrix) -> HandleMatrix:
    entries = dict(A.entries)
    for key, e in B.entries.items():
        entries[key] = entries[key] + e if key in entries else e
    return HandleMatrix(A.data, entries)


def handle_mul(A: HandleMatrix, B: HandleMatrix, hi: int) -> HandleMatrix:
    """Matrix product with every entry clipped to sr-order hi."""
    data = A.data
    by_row = {}
    for (i, k), e in B.entries.items():
        by_row.setdefault(i, []).append((k, e))
    entries = {}
    for (i, k), ea in A.entries.items():
        for j, eb in by_row.get(k, ()):
            prod = _clip_sr(ea * eb, data, hi)
            if prod.is_zero():
                continue
            key = (i, j)
            entries[key] = entries[key] + prod if key in entries else prod
    return HandleMatrix(data, entries)


def schottky_R(p: int, data: SchottkyData) -> HandleMatrix:
    """The moment matrix: derivative values of the kernel seed between
    paired handle points, weighted by half-integer amplitude powers.
    The pair b = -a keeps only the f-part of the seed, the pole there
    being the puncture the handle itself fills in."""
    if p < 1:
        raise ValueError("kernel degree p must be at least 1")
    N = data.matrix_cutoff
    sign = Fraction((-1) ** p)
    entries = {}
    for a in data.index_set:
        for b in data.index_set:
            for m in range(N):
                for n in range(N):
                    if b == -a:
                        val = sign * _e_value(p, data, m, n, data.w(-a))
                        ms = _sr_monomial(data, {a: m + n + 1}, val)
                    else:
                        val = sign * _psi0_deriv(p, data, m, n,
                                                 data.w(-a), data.w(b))
                        ms = _sr_monomial(data, {a: m + 1}, val)
                        if val:
                            ms = ms.shift(data.sr_var(b), n)
                    if not ms.is_zero():
                        entries[((a, m), (b, n))] = ms
    return HandleMatrix(data, entries)


def schottky_delta(p: int, data: SchottkyData) -> HandleMatrix:
    """The half-order pairing: delta_{m, n + 2p - 1} on each handle."""
    one = MultiSeries.constant(1)
    return HandleMatrix(data, {
        ((a, m), (a, n)): one
        for a in data.index_set
        for m in range(data.matrix_cutoff)
        for n in range(data.matrix_cutoff)
        if m == n + 2 * p - 1})


def shifted_columns(R: HandleMatrix, p: int) -> HandleMatrix:
    """R composed with the pairing: column n reads entry n + 2p - 1."""
    entries = {}
    for ((a, m), (b, n)), e in R.entries.items():
        if n - (2 * p - 1) >= 0:
            entries[((a, m), (b, n - (2 * p - 1)))] = e
    return HandleMatrix(R.data, entries)


def neumann_inverse(M: HandleMatrix, hi: int) -> HandleMatrix:
    """(1 - M)^-1 as the terminating geometric sum over powers of M.

    Every entry of M must carry a strictly positive amplitude order,
    otherwise the series would not terminate inside the window.
    """
    for key, e in M.entries.items():
        if e.is_zero():
            continue
        degrees = [sum(k[i] for i, v in enumerate(e.vars) if v.startswith("sr"))
                   for k in e.c]
        if not degrees or min(degrees) < 1:
            raise ValueError(
                f"matrix entry {key} carries no amplitude power; the "
                "Neumann series would not terminate")
    out = handle_identity(M.data)
    power = handle_identity(M.data)
    for _ in range(hi + 1):
        power = handle_mul(M, power, hi)
        if power.is_zero():
            break
        out = handle_add(out, power)
    return out


# -- rows, columns, and the assembled kernels -------------------------------


def p_row(p: int, data: SchottkyData, x, tilde=False) -> dict:
    """Row vector of seed derivatives at rational x against every
    handle point; tilde shifts the derivative order by 2p - 1, which
    is the composition with the half-order pairing."""
    x = rat(x)
    row = {}
    for b in data.index_set:
        if x == data.w(b):
            raise ValueError("evaluation point collides with a handle point")
        for n in range(data.matrix_cutoff):
            idx = n + (2 * p - 1 if tilde else 0)
            val = _psi0_deriv(p, data, 0, idx, x, data.w(b))
            ms = _sr_monomial(data, {b: idx}, val)
            if not ms.is_zero():
                row[(b, n)] = ms
    return row


def q_column(p: int, data: SchottkyData, y, j: int = 0) -> dict:
    """Column vector of seed derivatives from every paired handle
    point to rational y, with an extra normalized y-derivative of
    order j."""
    y = rat(y)
    sign = Fraction((-1) ** p)
    col = {}
    for a in data.index_set:
        if y == data.w(-a):
            raise ValueError("evaluation point collides with a handle point")
        for m in range(data.matrix_cutoff):
            val = sign * _psi0_deriv(p, data, m, j, data.w(-a), y)
            ms = _sr_monomial(data, {a: m + 1}, val)
            if not ms.is_zero():
                col[(a, m)] = ms
    return col


def _row_times_matrix(row: dict, M: HandleMatrix, hi: int) -> dict:
    data = M.data
    out = {}
    for i, e in row.items():
        for ((i2, j), em) in M.entries.items():
            if i2 != i:
                continue
            prod = _clip_sr(e * em, data, hi)
            if prod.is_zero():
                continue
            out[j] = out[j] + prod if j in out else prod
    return out


def _row_dot_column(row: dict, col: dict, data: SchottkyData,
                    hi: int) -> MultiSeries:
    total = MultiSeries.constant(0).extended_to(data.sr_vars)
    for i, e in row.items():
        if i in col:
            total = total + _clip_sr(e * col[i], data, hi)
    return total


def _p_row_formal(p: int, data: SchottkyData, x_lo: int, tilde=False) -> dict:
    row = {}
    for b in data.index_set:
        for n in range(data.matrix_cutoff):
            idx = n + (2 * p - 1 if tilde else 0)
            ms = _upper_pole("x", data.w(b), -1 - idx, x_lo)
            fpart = {}
            for ell in range(2 * p - 1):
                g = gbinom(ell, idx)
                if not g:
                    continue
                scale = Fraction(g) * data.w(b) ** (ell - idx)
                for e, c in data.f_poly(ell).items():
                    if e >= x_lo:
                        fpart[(e,)] = fpart.get((e,), Fraction(0)) + c * scale
            ms = ms + MultiSeries(("x",), {"x": (x_lo, None)}, fpart)
            ms = ms * _sr_monomial(data, {b: idx}, 1)
            if not ms.is_zero():
                row[(b, n)] = ms
    return row


def _q_column_formal(p: int, data: SchottkyData, y_hi: int) -> dict:
    sign = Fraction((-1) ** p)
    col = {}
    for a in data.index_set:
        for m in range(data.matrix_cutoff):
            pole = _lower_pole(data.w(-a), "y", -1 - m, y_hi)
            pole = pole * Fraction((-1) ** m)
            fpart = {}
            for ell in range(2 * p - 1):
                if ell > y_hi:
                    continue
                c = _f_deriv(data.f_poly(ell), m, data.w(-a))
                if c:
                    fpart[(ell,)] = c
            ms = pole + MultiSeries(("y",), {"y": (0, y_hi)}, fpart)
            ms = ms * _sr_monomial(data, {a: m + 1}, sign)
            if not ms.is_zero():
                col[(a, m)] = ms
    return col


@dataclass
class SchottkyKernel:
    """The assembled kernel package for one degree p: the seed, the
    moment matrix, the formal row and column vectors, and the dressed
    kernel, with its differential-form type carried as metadata."""

    p_weight: int
    psi0: MultiSeries
    R: HandleMatrix
    p_vec: dict
    q_vec: dict
    psi: MultiSeries
    form: str


def build_kernel(p: int, data: SchottkyData, x_lo: int = -6,
                 y_hi: int = 4) -> SchottkyKernel:
    """Assemble psi = psi0 + ptilde (1 - R Delta)^-1 q as a formal
    expansion in |x| > |y| with the amplitude corrections attached."""
    if p < 1:
        raise ValueError("kernel degree p must be at least 1")
    if data.matrix_cutoff < 2 * p - 1:
        raise ValueError("matrix_cutoff too small for this kernel degree")
    if y_hi < 2 * p - 2:
        raise ValueError("y horizon must cover the f-polynomial degrees")
    if len(data.f_choice) > 2 * p - 1:
        raise ValueError("f_choice may have at most 2p - 1 components")
    hi = 2 * data.rho_order
    seed = psi0(p, data.f_choice, {"x": (x_lo, None), "y": (0, y_hi)})
    R = schottky_R(p, data)
    neumann = neumann_inverse(shifted_columns(R, p), hi)
    row = _row_times_matrix(_p_row_formal(p, data, x_lo, tilde=True),
                            neumann, hi)
    qcol = _q_column_formal(p, data, y_hi)
    psi = seed.extended_to(("x", "y") + data.sr_vars)
    for i, e in row.items():
        if i in qcol:
            psi = psi + _clip_sr(e * qcol[i], data, hi)
    psi = _clip_sr(psi, data, hi)
    require_integer_rho(psi)
    return SchottkyKernel(p, seed, R, _p_row_formal(p, data, x_lo), qcol,
                          psi, form=f"dx^{p} dy^{1 - p}")


def psi_full(p: int, data: SchottkyData, x_lo: int = -6,
             y_hi: int = 4) -> MultiSeries:
    return build_kernel(p, data, x_lo, y_hi).psi


def psi_deriv_value(p: int, data: SchottkyData, j: int, x, y) -> MultiSeries:
    """The j-th normalized y-derivative of the dressed kernel at a
    rational point pair."""
    x, y = rat(x), rat(y)
    if x == y:
        raise ValueError("kernel evaluation needs x != y")
    if data.matrix_cutoff < 2 * p - 1:
        raise ValueError("matrix_cutoff too small for this kernel degree")
    hi = 2 * data.rho_order
    neumann = neumann_inverse(shifted_columns(schottky_R(p, data), p), hi)
    row = _row_times_matrix(p_row(p, data, x, tilde=True), neumann, hi)
    out = MultiSeries.constant(_psi0_deriv(p, data, 0, j, x, y))
    out = out.extended_to(data.sr_vars) + \
        _row_dot_column(row, q_column(p, data, y, j), data, hi)
    return require_integer_rho(_clip_sr(out, data, hi))


# -- the theta vector -------------------------------------------------------


@dataclass
class FormVector:
    """Indexed kernel components plus the differential-form type they
    carry; the type is metadata, never a computed object."""

    components: dict
    form: str


def _chi_row(p: int, data: SchottkyData, x, hi: int) -> dict:
    """The row p(x) + ptilde(x) (1 - R Delta)^-1 R, before the
    amplitude division that defines chi."""
    R = schottky_R(p, data)
    neumann = neumann_inverse(shifted_columns(R, p), hi)
    row = _row_times_matrix(p_row(p, data, x, tilde=True), neumann, hi)
    out = dict(p_row(p, data, x))
    for j, e in _row_times_matrix(row, R, hi).items():
        out[j] = out[j] + e if j in out else e
    return out


def chi(p: int, data: SchottkyData, a: int, ell: int, x) -> MultiSeries:
    """chi_a(x; ell): the ell-th dressed row entry divided by its
    guaranteed sr_a^ell content; the division is validated against the
    stored support."""
    if not 0 <= ell <= 2 * p - 2:
        raise ValueError("component index out of range")
    if data.matrix_cutoff < 2 * p - 1:
        raise ValueError("matrix_cutoff too small for this kernel degree")
    hi = 2 * data.rho_order
    entry = _chi_row(p, data, x, hi).get((a, ell))
    if entry is None:
        return MultiSeries.constant(0).extended_to(data.sr_vars)
    var = data.sr_var(a)
    entry = entry.extended_to((var,))
    entry = entry.clip(var, ell, entry.window[var][1])
    return entry.shift(var, -ell).extended_to(data.sr_vars)


def theta(p: int, data: SchottkyData, a: int, x) -> FormVector:
    """The chi combination that couples a positive handle to its
    partner.  Components may legitimately carry negative half powers
    of the amplitude; those cancel only in the pairing with the handle
    sums, which is why the integer-rho check does not apply here."""
    if a < 1 or a > data.genus:
        raise ValueError("theta is indexed by positive handles")
    sign = Fraction((-1) ** p)
    var = data.sr_var(a)
    comps = {}
    for ell in range(2 * p - 1):
        partner = chi(p, data, -a, 2 * p - 2 - ell, x)
        comps[ell] = chi(p, data, a, ell, x) + \
            partner.shift(var, 2 * (p - 1 - ell)) * sign
    return FormVector(comps, form=f"dx^{p}")


# -- handle sums: partition, n-point, and the reduction step ----------------


@lru_cache(maxsize=None)
def _dual_pairs(m: int):
    return tuple(dual_basis(m, bracket="round"))


@dataclass
class SchottkyFn:
    """A genus-g correlation value: rational-point insertions and the
    amplitude expansion of the handle sum."""

    insertions: tuple
    value: MultiSeries
    data: SchottkyData


def _handle_sum(data: SchottkyData, insertions, caps: dict,
                mod_handle: int = None, mod=None, mod_lo: int = 1) -> MultiSeries:
    """Sum the genus-zero values over a dual basis per handle.

    ``caps`` bounds the channel weight per positive handle.  When
    ``mod`` is given it rewrites the state at the positive point of
    handle ``mod_handle``; the amplitude prefactor keeps following the
    unmodified basis weight, which is what makes the paired-point
    adjoint identity close.  ``mod_lo`` is the least channel weight
    that can survive the rewrite, declared so the window lo stays
    sharp enough for later amplitude divisions.
    """
    g = data.genus
    ins_states = [s for s, _ in insertions]
    ins_points = [rat(y) for _, y in insertions]
    for y in ins_points:
        if y in data.coordinates:
            raise ValueError("insertion point collides with a handle point")
    window = {}
    ranges = []
    for a in range(1, g + 1):
        lo = mod_lo if mod_handle == a else 0
        window[data.sr_var(a)] = (2 * lo, 2 * caps[a])
        ranges.append(range(lo, caps[a] + 1))
    coeffs = {}
    for weights in product(*ranges):
        for picks in product(*[_dual_pairs(m) for m in weights]):
            states = list(ins_states)
            points = list(ins_points)
            skip = False
            for a, (b, bdual) in enumerate(picks, start=1):
                chosen = mod(b) if mod_handle == a else b
                if chosen.is_zero():
                    skip = True
                    break
                states.extend((bdual, chosen))
                points.extend((data.w(-a), data.w(a)))
            if skip:
                continue
            val = genus0_rational_value(states, points)
            if val:
                key = tuple(2 * m for m in weights)
                coeffs[key] = coeffs.get(key, Fraction(0)) + val
    return MultiSeries(data.sr_vars, window, coeffs)


def genus_g_npoint(insertions, data: SchottkyData,
                   weight_cap: int = None) -> SchottkyFn:
    """The genus-g n-point handle sum; each insertion is a
    (GradedVector, rational point) pair and the channel weight per
    handle runs to ``weight_cap`` (by default the amplitude order)."""
    cap = data.rho_order if weight_cap is None else weight_cap
    ins = tuple((s, rat(y)) for s, y in insertions)
    pts = [y for _, y in ins]
    if len(set(pts)) != len(pts):
        raise ValueError("insertion points must be pairwise distinct")
    caps = {a: cap for a in range(1, data.genus + 1)}
    value = _handle_sum(data, ins, caps)
    return SchottkyFn(ins, require_integer_rho(value), data)


def genus_g_partition(data: SchottkyData,
                      weight_cutoff: int = None) -> MultiSeries:
    """The genus-g partition handle sum.

    Under the dictionary q = -rho (w_{-1} - w_1)^(-2) the g = 1 series
    matches the graded dimension at amplitude orders 0 and 1; from
    order 2 on the plain handle sum deviates (the coefficient is 4,
    not 2), since this scheme carries no local-coordinate adjustments
    at the handle points.
    """
    return genus_g_npoint((), data, weight_cap=weight_cutoff).value


def genus_g_reduce(direction, F: SchottkyFn, data: SchottkyData) -> SchottkyFn:
    """One reduction step: insert a quasi-primary state u at a fresh
    rational point y and assemble the n+1-point handle sum out of the
    n-point data, through the theta pairing on each handle and the
    dressed kernel against each old insertion."""
    u, y = direction
    y = rat(y)
    if F.data != data:
        raise ValueError("function and surface data disagree")
    if u.is_zero():
        zero = MultiSeries.constant(0).extended_to(data.sr_vars)
        return SchottkyFn(((u, y),) + F.insertions, zero, data)
    if not u.is_homogeneous():
        raise ValueError("direction state must be homogeneous")
    p = u.weights()[0]
    if p == 0:
        value = F.value * u.coefficient(VACUUM)
        return SchottkyFn(((u, y),) + F.insertions, value, data)
    if not virasoro(1, u).is_zero():
        raise ValueError("direction state must be quasi-primary")
    if data.matrix_cutoff < 2 * p - 1:
        raise ValueError("matrix_cutoff too small for this direction weight")
    if y in data.coordinates or any(y == yk for _, yk in F.insertions):
        raise ValueError("new insertion point collides with an existing one")

    order = data.rho_order
    hi = 2 * order
    hi_work = hi + max(0, p - 2)
    total = MultiSeries.constant(0).extended_to(data.sr_vars)

    R = schottky_R(p, data)
    neumann = neumann_inverse(shifted_columns(R, p), hi_work)
    ptrow = _row_times_matrix(p_row(p, data, y, tilde=True), neumann, hi_work)
    vrow = dict(p_row(p, data, y))
    for idx, e in _row_times_matrix(ptrow, R, hi_work).items():
        vrow[idx] = vrow[idx] + e if idx in vrow else e

    for a in range(1, data.genus + 1):
        var = data.sr_var(a)
        caps = {c: order for c in range(1, data.genus + 1)}
        caps[a] = order + p - 1
        for ell in range(2 * p - 1):
            osum = _handle_sum(data, F.insertions, caps, mod_handle=a,
                               mod=lambda b: vertex_mode(u, ell, b),
                               mod_lo=max(1, ell - p + 1))
            if osum.is_zero():
                continue
            term = MultiSeries.constant(0).extended_to(data.sr_vars)
            for idx, sign in (((a, ell), 1),
                              ((-a, 2 * p - 2 - ell), Fraction((-1) ** p))):
                e = vrow.get(idx)
                if e is None:
                    continue
                e = e.extended_to((var,))
                e = e.clip(var, idx[1], e.window[var][1])
                term = term + (e * osum) * sign
            total = total + term.shift(var, -ell)

    caps = {c: order for c in range(1, data.genus + 1)}
    kernels = {}
    for k, (vk, yk) in enumerate(F.insertions):
        for j in range(p + max(vk.weights(), default=0)):
            uv = vertex_mode(u, j, vk)
            if uv.is_zero():
                continue
            if (yk, j) not in kernels:
                kern = MultiSeries.constant(_psi0_deriv(p, data, 0, j, y, yk))
                kern = kern.extended_to(data.sr_vars) + _row_dot_column(
                    ptrow, q_column(p, data, yk, j), data, hi)
                kernels[(yk, j)] = _clip_sr(kern, data, hi)
            modified = list(F.insertions)
            modified[k] = (uv, yk)
            inner = _handle_sum(data, modified, caps)
            total = total + _clip_sr(kernels[(yk, j)] * inner, data, hi)

    value = require_integer_rho(_clip_sr(total, data, hi))
    return SchottkyFn(((u, y),) + F.insertions, value, data)
