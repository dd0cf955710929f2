"""Genus-two surfaces sewn from two tori.

The moduli are two nomes q1, q2 and a sewing parameter eps.  The
kernel matrices that mediate between the tori carry half-integer
eps-weights, so eps is tracked through its square root: the variable
"se" with se^2 = eps.  Every exported quantity is checked to land back
on integer eps-powers; intermediate rows and columns need not.

Trace normalization follows the one-point helpers of the reduction
module: the overall (q1 q2)^(-c/24) prefactor is left off the stored
series and reported separately by consumers that need it.

Infinite matrices are truncated at ``matrix_cutoff`` rows and columns.
Every entry of the moment matrix at index (m, n) carries se-order
m + n at least, so with matrix_cutoff >= 2 * eps_order no discarded
entry can reach the kept se-window.  That inequality is enforced on
the moduli, not assumed.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .elliptic import eisenstein, weierstrass_p
from .reduction import Insertion, genus1_onepoint
from .series import MultiSeries, binomial_expand
from .voa import (
    GradedVector,
    VACUUM,
    basis,
    conformal_vector_tilde,
    dual_basis,
    square_bracket_mode,
    zero_mode,
)

_EVARS = ("q1", "q2", "se")


@dataclass(frozen=True)
class SewingModuli:
    """Expansion orders for the two nomes, the eps-truncation, and the
    matrix cutoff N."""

    tau1_order: int
    tau2_order: int
    eps_order: int
    matrix_cutoff: int

    def __post_init__(self):
        if self.tau1_order < 0 or self.tau2_order < 0 or self.eps_order < 0:
            raise ValueError("expansion orders must be nonnegative")
        if self.matrix_cutoff < 2 * self.eps_order:
            raise ValueError(
                "matrix_cutoff must be at least 2 * eps_order; entries at "
                "index (m, n) start at se-order m + n")

    @property
    def se_order(self) -> int:
        return 2 * self.eps_order


@dataclass
class KernelMatrix:
    """A truncated moment matrix: indices 1..size, absent entry = 0."""

    size: int
    entries: dict

    def entry(self, m: int, n: int) -> MultiSeries:
        e = self.entries.get((m, n))
        return e if e is not None else MultiSeries.constant(0)

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.entries.values())


@dataclass
class Genus2Fn:
    """A genus-two n-point function on the sewn surface."""

    insertions: tuple
    value: MultiSeries
    moduli: SewingModuli


def _qvar(chart: int) -> str:
    if chart not in (1, 2):
        raise ValueError("chart must be 1 or 2")
    return "q1" if chart == 1 else "q2"


def _q_order(chart: int, moduli: SewingModuli) -> int:
    return moduli.tau1_order if chart == 1 else moduli.tau2_order


def _eis(k: int, chart: int, moduli: SewingModuli) -> MultiSeries:
    """E_k(tau_chart) in the shared entry variables; zero for odd or
    out-of-range k."""
    if k < 2 or k % 2 == 1:
        return MultiSeries.constant(0).extended_to(_EVARS)
    ts = eisenstein(k, _q_order(chart, moduli), _qvar(chart))
    return MultiSeries.from_single(ts).extended_to(_EVARS)


def _se_monomial(e: int, moduli: SewingModuli, coeff=1) -> MultiSeries:
    return MultiSeries.monomial(
        {"se": e}, coeff, window={"se": (min(e, 0), moduli.se_order)})


def _clip_se(ms: MultiSeries, moduli: SewingModuli) -> MultiSeries:
    lo = ms.window["se"][0] if "se" in ms.vars else 0
    return ms.extended_to(_EVARS).clip("se", lo, moduli.se_order)


def require_integer_eps(ms: MultiSeries):
    """Exported genus-two data must carry eps to integer powers only."""
    if "se" not in ms.vars:
        return ms
    i = ms.vars.index("se")
    for key, c in ms.c.items():
        if c and key[i] % 2:
            raise AssertionError(
                f"half-integer eps power se^{key[i]} survived to an "
                "exported quantity")
    return ms


# -- the kernel matrices --------------------------------------------------


def lambda_entry(a: int, m: int, n: int, moduli: SewingModuli) -> MultiSeries:
    """Lambda_a(m, n) = eps^((m+n)/2) (-1)^(n+1) C(m+n-1, n) E_{m+n}(tau_a)."""
    k = m + n
    if k % 2 or k > moduli.se_order:
        return MultiSeries.constant(0).extended_to(_EVARS)
    coeff = Fraction((-1) ** (n + 1) * comb(k - 1, n))
    return _eis(k, a, moduli) * _se_monomial(k, moduli, coeff)


def lambda_matrix(a: int, moduli: SewingModuli) -> KernelMatrix:
    N = moduli.matrix_cutoff
    entries = {}
    for m in range(1, N + 1):
        for n in range(1, N + 1):
            e = lambda_entry(a, m, n, moduli)
            if not e.is_zero():
                entries[(m, n)] = e
    return KernelMatrix(N, entries)


def s_conjugated_a_entry(a: int, m: int, n: int,
                         moduli: SewingModuli) -> MultiSeries:
    """(S A_a S^-1)(m, n) with the square roots cancelled by hand.

    A_a(m, n) = (-1)^(m+1) eps^((m+n)/2) (m+n-1)! / (sqrt(mn) (m-1)!(n-1)!)
    E_{m+n}(tau_a), and conjugating by S = diag(sqrt(m)) multiplies by
    sqrt(m/n), leaving the rational entry below.
    """
    k = m + n
    if k % 2 or k > moduli.se_order:
        return MultiSeries.constant(0).extended_to(_EVARS)
    coeff = Fraction((-1) ** (m + 1) * factorial(k - 1),
                     n * factorial(m - 1) * factorial(n - 1))
    return _eis(k, a, moduli) * _se_monomial(k, moduli, coeff)


def lambda_tilde(a: int, p: int, moduli: SewingModuli) -> KernelMatrix:
    """Lambda_a Delta, i.e. entry (m, n) -> Lambda_a(m, n + 2p - 2)."""
    N = moduli.matrix_cutoff
    entries = {}
    for m in range(1, N + 1):
        for n in range(1, N + 1):
            e = lambda_entry(a, m, n + 2 * p - 2, moduli)
            if not e.is_zero():
                entries[(m, n)] = e
    return KernelMatrix(N, entries)


def delta_matrix(p: int, size: int) -> KernelMatrix:
    one = MultiSeries.constant(1).extended_to(_EVARS)
    return KernelMatrix(size, {
        (m, n): one
        for m in range(1, size + 1) for n in range(1, size + 1)
        if m == n + 2 * p - 2})


def gamma_matrix(p: int, size: int) -> KernelMatrix:
    one = MultiSeries.constant(1).extended_to(_EVARS)
    return KernelMatrix(size, {
        (m, n): one
        for m in range(1, size + 1) for n in range(1, size + 1)
        if m + n == 2 * p - 2})


def pi_matrix(p: int, size: int) -> KernelMatrix:
    """Gamma^2: the identity on indices up to 2p - 3, zero beyond."""
    return kernel_mul(gamma_matrix(p, size), gamma_matrix(p, size))


def kernel_identity(size: int) -> KernelMatrix:
    one = MultiSeries.constant(1).extended_to(_EVARS)
    return KernelMatrix(size, {(m, m): one for m in range(1, size + 1)})


def kernel_add(A: KernelMatrix, B: KernelMatrix) -> KernelMatrix:
    if A.size != B.size:
        raise ValueError("size mismatch")
    entries = dict(A.entries)
    for key, e in B.entries.items():
        entries[key] = entries[key] + e if key in entries else e
    return KernelMatrix(A.size, {k: v for k, v in entries.items()})


def kernel_mul(A: KernelMatrix, B: KernelMatrix,
               moduli: SewingModuli = None) -> KernelMatrix:
    if A.size != B.size:
        raise ValueError("size mismatch")
    entries = {}
    for (i, k), ea in A.entries.items():
        for j in range(1, B.size + 1):
            eb = B.entries.get((k, j))
            if eb is None:
                continue
            prod = ea * eb
            if moduli is not None:
                prod = _clip_se(prod, moduli)
            if prod.is_zero():
                continue
            key = (i, j)
            entries[key] = entries[key] + prod if key in entries else prod
    return KernelMatrix(A.size, entries)


def neumann_inverse(M: KernelMatrix, moduli: SewingModuli) -> KernelMatrix:
    """(1 - M)^-1 = sum_k M^k, terminating because every entry of M
    starts at se-order 1 or higher."""
    for (m, n), e in M.entries.items():
        if "se" not in e.vars:
            if not e.is_zero():
                raise ValueError(
                    f"entry ({m}, {n}) has an eps-independent part; the "
                    "Neumann series does not terminate")
            continue
        i = e.vars.index("se")
        for key, c in e.c.items():
            if c and key[i] < 1:
                raise ValueError(
                    f"entry ({m}, {n}) carries se^{key[i]}; the Neumann "
                    "series does not terminate")
    out = kernel_identity(M.size)
    power = kernel_identity(M.size)
    for _ in range(moduli.se_order + 1):
        power = kernel_mul(power, M, moduli)
        if power.is_zero():
            break
        out = kernel_add(out, power)
    return out


# -- rows and columns of elliptic data ------------------------------------


def _pm(m: int, chart: int, var: str, z_order: int,
        moduli: SewingModuli) -> MultiSeries:
    """P_m(z, tau_chart) in the point variable ``var``."""
    ms = weierstrass_p(m, z_order, _q_order(chart, moduli),
                       zvar=var, qvar=_qvar(chart))
    return ms.extended_to(sorted(set(_EVARS) | {var}))


def _pm_difference(m: int, chart: int, xvar: str, yvar: str, x_lo: int,
                   z_order: int, moduli: SewingModuli) -> MultiSeries:
    """P_m(x - y, tau_chart) expanded in |x| > |y|.

    The pole 1/(x-y)^m becomes a binomial series cut at x^x_lo; the
    regular part is a genuine polynomial in x - y.
    """
    base = weierstrass_p(m, z_order, _q_order(chart, moduli),
                         zvar="_z", qvar=_qvar(chart))
    zi = base.vars.index("_z")
    qi = base.vars.index(_qvar(chart))
    out = None
    for key, c in base.c.items():
        if not c:
            continue
        k = key[zi]
        qmono = MultiSeries.monomial(
            {_qvar(chart): key[qi]}, c,
            window={_qvar(chart): (0, _q_order(chart, moduli))})
        if k < 0:
            piece = binomial_expand(-k - 1, xvar, yvar, x_lo) * qmono
        else:
            poly = {}
            for i in range(k + 1):
                poly[(i, k - i) if yvar < xvar else (k - i, i)] = \
                    Fraction((-1) ** i * comb(k, i))
            vs = tuple(sorted((xvar, yvar)))
            piece = MultiSeries(
                vs, {xvar: (0, None), yvar: (0, None)}, poly) * qmono
        out = piece if out is None else out + piece
    return out.extended_to(sorted(set(_EVARS) | {xvar, yvar}))


def r_row(x_chart: int, xvar: str, moduli: SewingModuli,
          x_order: int = 6) -> dict:
    """R(x; m) = eps^(m/2) P_{m+1}(x, tau_a), components 1..N."""
    out = {}
    for m in range(1, moduli.matrix_cutoff + 1):
        if m > moduli.se_order:
            break
        out[m] = _pm(m + 1, x_chart, xvar, x_order, moduli) * \
            _se_monomial(m, moduli)
    return out


def p_column(j: int, y_chart: int, yvar: str, moduli: SewingModuli,
             y_order: int = 6) -> dict:
    """PP_{j+1}(y; m) = eps^(m/2) C(m+j-1, j) (P_{j+m}(y) - d_{j0} E_m)."""
    out = {}
    for m in range(1, moduli.matrix_cutoff + 1):
        if m > moduli.se_order:
            break
        body = _pm(j + m, y_chart, yvar, y_order, moduli)
        if j == 0:
            body = body + _eis(m, y_chart, moduli) * Fraction(-1)
        out[m] = body * _se_monomial(m, moduli, comb(m + j - 1, j))
    return out


def _row_times_matrix(row: dict, M: KernelMatrix,
                      moduli: SewingModuli) -> dict:
    out = {}
    for k, r in row.items():
        for n in range(1, M.size + 1):
            e = M.entries.get((k, n))
            if e is None:
                continue
            prod = _clip_se(r * e, moduli)
            if prod.is_zero():
                continue
            out[n] = out[n] + prod if n in out else prod
    return out


def _row_dot_column(row: dict, col: dict, moduli: SewingModuli):
    out = MultiSeries.constant(0).extended_to(_EVARS)
    for k, r in row.items():
        c = col.get(k)
        if c is not None:
            out = out + _clip_se(r * c, moduli)
    return out


def q_row(p: int, x_chart: int, xvar: str, moduli: SewingModuli,
          x_order: int = 6) -> dict:
    """Q(p; x) = R(x) Delta (1 - Ltilde_abar Ltilde_a)^-1 for x on
    chart a."""
    abar = 3 - x_chart
    shifted = {}
    for n in range(1, moduli.matrix_cutoff + 1):
        m = n + 2 * p - 2
        if m < 1 or m > moduli.se_order:
            continue
        shifted[n] = _pm(m + 1, x_chart, xvar, x_order, moduli) * \
            _se_monomial(m, moduli)
    prod = kernel_mul(lambda_tilde(abar, p, moduli),
                      lambda_tilde(x_chart, p, moduli), moduli)
    return _row_times_matrix(shifted, neumann_inverse(prod, moduli), moduli)


def gen_weierstrass(p: int, j: int, x_chart: int, y_chart: int,
                    moduli: SewingModuli, xvar: str = "x", yvar: str = "y",
                    x_order: int = 6, y_order: int = 6,
                    x_lo: int = -8) -> MultiSeries:
    """The genus-two Weierstrass kernel replacing P_{j+1}(x - y).

    Same chart:   P_{j+1}(x-y) + (-1)^(j+1) Q Ltilde_abar PP_{j+1}(y),
    with the j = 0 case carrying the extra -P_1(x) and, for p = 2, the
    component (Q Lambda_abar)(2p-2).
    Cross chart:  (-1)^(p+1) (-1)^j Q PP_{j+1}(y) plus j = 0, p = 2
    corrections.  The j > 0 cases are the y-derivatives of j = 0, which
    is a separate test, not an assumption.
    """
    if p not in (1, 2):
        raise ValueError("kernels are tabulated for weights p = 1 and 2")
    if j < 0:
        raise ValueError("j must be nonnegative")
    a, abar = x_chart, 3 - x_chart
    Q = q_row(p, x_chart, xvar, moduli, x_order)
    col = p_column(j, y_chart, yvar, moduli, y_order)
    if y_chart == a:
        lt = lambda_tilde(abar, p, moduli)
        lead = _pm_difference(j + 1, a, xvar, yvar, x_lo,
                              max(x_order, y_order), moduli)
        tail = _row_dot_column(_row_times_matrix(Q, lt, moduli), col, moduli)
        out = lead + tail * Fraction((-1) ** (j + 1))
        if j == 0:
            out = out + _pm(1, a, xvar, x_order, moduli) * Fraction(-1)
            if p != 1:
                corr = _row_times_matrix(Q, lambda_matrix(abar, moduli),
                                         moduli).get(2 * p - 2)
                if corr is not None:
                    out = out + corr * Fraction(-1)
        return out.extended_to(sorted(set(out.vars) | {yvar}))
    sign = Fraction((-1) ** (p + 1) * (-1) ** j)
    out = _row_dot_column(Q, col, moduli) * sign
    if j == 0 and p != 1:
        psign = Fraction((-1) ** (p + 1))
        out = out + _pm(2 * p - 1, a, xvar, x_order, moduli) * \
            _se_monomial(2 * p - 2, moduli, psign)
        corr = _row_times_matrix(
            _row_times_matrix(Q, lambda_tilde(abar, p, moduli), moduli),
            lambda_matrix(a, moduli), moduli).get(2 * p - 2)
        if corr is not None:
            out = out + corr * psign
    return out.extended_to(sorted(set(out.vars) | {xvar, yvar}))


# -- sewing sums -----------------------------------------------------------


def _onepoint_ms(v: GradedVector, chart: int, moduli: SewingModuli):
    ts = genus1_onepoint(v, _q_order(chart, moduli))
    return MultiSeries.from_single(ts.rename(_qvar(chart))).extended_to(_EVARS)


def _double_zero_mode_trace(v: GradedVector, u: GradedVector, chart: int,
                            moduli: SewingModuli) -> MultiSeries:
    """Tr(o(v) o(u) q^L(0)) over the Fock space, level by level."""
    order = _q_order(chart, moduli)
    coeffs = {}
    for m in range(order + 1):
        tr = Fraction(0)
        for s in basis(m):
            b = GradedVector.basis_state(s)
            tr += zero_mode(v, zero_mode(u, b)).coefficient(s)
        if tr:
            coeffs[(m,)] = tr
    ms = MultiSeries((_qvar(chart),), {_qvar(chart): (0, order)}, coeffs)
    return ms.extended_to(_EVARS)


def _sq_dual_pairs(r: int):
    return dual_basis(r, bracket="square")


def z2_partition(moduli: SewingModuli, pairs_for_weight=None) -> MultiSeries:
    """The sewn two-torus partition function as a series in q1, q2 and
    se^2 = eps.  The internal sum runs over a square-bracket dual basis
    at each weight; any other choice of ``pairs_for_weight`` producing
    valid dual pairs must give the same answer.
    """
    pairs = pairs_for_weight or _sq_dual_pairs
    out = MultiSeries.constant(0).extended_to(_EVARS)
    for r in range(moduli.eps_order + 1):
        for u, ubar in pairs(r):
            t1 = _onepoint_ms(u, 1, moduli)
            if t1.is_zero():
                continue
            t2 = _onepoint_ms(ubar, 2, moduli)
            if t2.is_zero():
                continue
            out = out + t1 * t2 * _se_monomial(2 * r, moduli)
    return require_integer_eps(out)


def sq_weight(v: GradedVector) -> int:
    """The square-bracket weight of a [L(0)]-homogeneous state."""
    if v.is_zero():
        raise ValueError("the zero vector has no weight")
    w = square_bracket_mode(conformal_vector_tilde(), 1, v)
    s, c = next(iter(v.t.items()))
    p = (w.coefficient(s) / c) if not w.is_zero() else Fraction(0)
    if w != p * v:
        raise ValueError("state is not homogeneous in square-bracket weight")
    if p.denominator != 1:
        raise ValueError("non-integer square-bracket weight")
    return int(p)


def _check_quasi_primary(v: GradedVector):
    if not square_bracket_mode(conformal_vector_tilde(), 2, v).is_zero():
        raise ValueError("direction state must be quasi-primary "
                         "(killed by L[1])")


def genus2_reduce(direction: Insertion, F, moduli: SewingModuli) -> Genus2Fn:
    """One reduction step on the sewn surface, for a fresh insertion on
    chart 1 and F the partition function.

    The output is f1 F1 + f2 F2 + sum_m f3(m) X(m): F1 and F2 carry the
    new state's zero mode inside the chart-1 or chart-2 trace next to
    the internal zero mode o(u); X(m) replaces u by v[m]u.  All the
    point dependence enters through the elliptic rows f1, f2, f3.
    """
    if isinstance(F, Genus2Fn):
        if F.insertions:
            raise NotImplementedError(
                "only a single reduction step from the partition function "
                "is supported")
        value = F.value
    else:
        value = F
    v = direction.state
    xvar = direction.point

    if set(v.weights()) <= {0}:
        # Y(1, x) is the identity
        scaled = value * v.coefficient(VACUUM)
        return Genus2Fn((direction,), scaled.extended_to(
            sorted(set(scaled.vars) | {xvar})), moduli)

    _check_quasi_primary(v)
    p = sq_weight(v)

    zero = MultiSeries.constant(0).extended_to(_EVARS)
    F1, F2 = zero, zero
    X = {m: zero for m in range(1, max(2 * p - 2, 1))}
    for r in range(moduli.eps_order + 1):
        for u, ubar in _sq_dual_pairs(r):
            right = _onepoint_ms(ubar, 2, moduli)
            if not right.is_zero():
                t = _double_zero_mode_trace(v, u, 1, moduli)
                if not t.is_zero():
                    F1 = F1 + t * right * _se_monomial(2 * r, moduli)
                for m in X:
                    vm = square_bracket_mode(v, m, u)
                    if vm.is_zero():
                        continue
                    t = _onepoint_ms(vm, 1, moduli)
                    if not t.is_zero():
                        X[m] = X[m] + t * right * \
                            _se_monomial(2 * r - m, moduli)
            left = _onepoint_ms(u, 1, moduli)
            if not left.is_zero():
                t = _double_zero_mode_trace(v, ubar, 2, moduli)
                if not t.is_zero():
                    F2 = F2 + left * t * _se_monomial(2 * r, moduli)

    Q = q_row(p, 1, xvar, moduli)
    lt2 = lambda_tilde(2, p, moduli)
    f1_tail = _row_times_matrix(Q, lt2, moduli).get(1)
    out = F1
    if f1_tail is not None:
        out = out + _clip_se(f1_tail * _se_monomial(1, moduli) * F1, moduli)
    if 1 in Q:
        f2 = Q[1] * _se_monomial(1, moduli, Fraction((-1) ** p))
        out = out + _clip_se(f2 * F2, moduli)
    if X:
        row = dict(r_row(1, xvar, moduli))
        mixed = kernel_add(
            kernel_mul(lt2, lambda_matrix(1, moduli), moduli),
            kernel_mul(lambda_matrix(2, moduli), gamma_matrix(p, moduli.matrix_cutoff), moduli))
        for n, e in _row_times_matrix(Q, mixed, moduli).items():
            row[n] = row[n] + e if n in row else e
        for m, xm in X.items():
            f3m = row.get(m)
            if f3m is None or xm.is_zero():
                continue
            out = out + _clip_se(f3m * xm, moduli)

    out = _clip_se(out, moduli)
    require_integer_eps(out)
    return Genus2Fn((direction,),
                    out.extended_to(sorted(set(out.vars) | {xvar})), moduli)
