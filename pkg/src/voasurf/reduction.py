"""Correlation functions on the sphere and the torus.

Two computation paths exist for each genus and they are kept
deliberately independent.  The *direct* functions enumerate mode
tuples against the definition (matrix elements on the sphere, graded
traces on the torus) and serve as brute-force oracles.  The *reduce*
functions peel off one insertion at a time: the leftmost vertex
operator is split into a zero-mode part, boundary parts, and
commutator parts against the remaining insertions, and the resulting
shorter correlation functions are computed by the same recursion down
to the zero-insertion base case.  Equality of the two paths is an
acceptance invariant, not an assumption.

Conventions:

* Insertion lists are ordered outermost first.  At genus 0 the value
  is the expansion in |z_1| > |z_2| > ... > |z_n|; a reduction step
  prepends its fresh point, which becomes the new outermost variable.
* Genus-1 values live in the variables q_{z_i} = e^{z_i} (named
  ``q_<point>``) and q, with the overall q^{-c/24} prefactor kept as
  an exact exponent tag on the result, never as a series.
* Windows are viewing boxes.  Correlation functions are honest
  Laurent series whose support is usually infinite in several
  directions; values are exact on the requested box and silently cut
  outside it.  The exceptions are the directions that are finite for
  intrinsic weight reasons: with a single sphere insertion the whole
  support is finite and must fit in the box, and with several the
  outermost variable is bounded above and the innermost below.  A cut
  on those sides raises WindowError instead of losing data quietly
  (detection on the innermost side probes a two-exponent margin band
  below the box).
* Sibling calls inside the recursions run on inflated boxes so that
  kernel shifts cannot drag unseen terms into the requested box.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .elliptic import weierstrass_p_qz
from .series import MultiSeries, TruncatedSeries
from .voa import (
    CENTRAL_CHARGE,
    GradedVector,
    adjoint_boundary_state,
    basis,
    bilinear_form,
    gbinom,
    render_state,
    square_bracket_mode,
    vacuum,
    vertex_mode,
    weight,
)

_MARGIN = 2


class WindowError(ValueError):
    """A requested window cuts into an intrinsically finite direction."""


@dataclass(frozen=True)
class Insertion:
    """A state attached to a point symbol."""

    state: GradedVector
    point: str


@dataclass(frozen=True)
class ReductionDirection:
    """The fresh insertion x_{n+1} along which a reduction step runs."""

    insertion: Insertion


@dataclass
class CorrelationFn:
    """An n-point function together with the data that determines it.

    ``value`` is exact on the stored per-point windows.  At genus 0
    ``boundary_states`` holds (u', u); at genus 1 ``front_word`` holds
    point-independent modes multiplying the trace from the left, which
    appear when reduction steps are iterated.  ``q_shift`` is the
    exact exponent of the q-prefactor (0 at genus 0, -c/24 at genus 1).
    """

    genus: int
    insertions: tuple
    value: MultiSeries
    window: dict
    default_window: tuple
    boundary_states: tuple = None
    alpha: Fraction = Fraction(1)
    q_order: int = None
    q_shift: Fraction = Fraction(0)
    front_word: tuple = ()
    operator_word: tuple = ()
    degenerate_steps: tuple = ()

    def is_zero(self) -> bool:
        return self.value.is_zero()


def point_var(genus: int, point: str) -> str:
    return point if genus == 0 else "q_" + point


def _normalize_window(points, window):
    """Accept a single (lo, hi) pair or a per-point dict; return the
    per-point dict plus the pair to reuse for fresh points."""
    if isinstance(window, dict):
        box = {p: (int(lo), int(hi)) for p, (lo, hi) in window.items()}
        missing = [p for p in points if p not in box]
        if missing:
            raise ValueError(f"window missing points {missing}")
        if box:
            default = (min(lo for lo, _ in box.values()),
                       max(hi for _, hi in box.values()))
        else:
            default = (-8, 8)
        return box, default
    lo, hi = window
    pair = (int(lo), int(hi))
    return {p: pair for p in points}, pair


def _basis_expansions(insertions):
    """Multilinear expansion over the Fock basis: yields pairs
    (coefficient, tuple of (basis_state, point))."""
    combos = [(Fraction(1), ())]
    for ins in insertions:
        nxt = []
        for coef, row in combos:
            for s, c in ins.state.t.items():
                nxt.append((coef * c, row + ((s, ins.point),)))
        combos = nxt
    return combos


def _check_distinct(insertions):
    points = [ins.point for ins in insertions]
    if len(set(points)) != len(points):
        raise ValueError(f"point symbols must be pairwise distinct: {points}")


# -- genus 0: brute-force oracle ----------------------------------------


def genus0_direct(insertions, uprime: GradedVector, u: GradedVector,
                  window, alpha=1) -> CorrelationFn:
    """<u', Y(v_1, z_1) ... Y(v_n, z_n) u> expanded in |z_1| > ... > |z_n|.

    Pure mode-tuple enumeration: z_i carries exponent -k_i - 1 from
    the single mode v_i(k_i), so every box coefficient is one finite
    sum.  With one insertion the support is forced by the weights and
    is enumerated in full; otherwise the box is inflated by the margin
    while enumerating and the sentinel slices feed the window check.
    """
    insertions = tuple(insertions)
    _check_distinct(insertions)
    alpha = Fraction(alpha)
    points = [ins.point for ins in insertions]
    box, default = _normalize_window(points, window)

    acc = {}
    wts_uprime = set(uprime.weights())
    wts_u = u.weights()
    for coef, row in _basis_expansions(insertions):
        n = len(row)
        if n == 1 and wts_uprime and wts_u:
            # single mode: exponent = wt u' - wt v - wt u, a finite set
            wv = weight(row[0][0])
            exp_lo = min(wts_uprime) - wv - max(wts_u)
            exp_hi = max(wts_uprime) - wv - min(wts_u)
            ranges = [range(exp_lo, exp_hi + 1)]
        else:
            ranges = [range(box[p][0] - _MARGIN, box[p][1] + _MARGIN + 1)
                      for _, p in row]
        lo_shift = [r[0] + weight(s) for r, (s, _) in zip(ranges, row)]
        hi_shift = [r[-1] + weight(s) for r, (s, _) in zip(ranges, row)]
        pre_lo = [0] * (n + 1)
        pre_hi = [0] * (n + 1)
        for i in range(n):
            pre_lo[i + 1] = pre_lo[i] + lo_shift[i]
            pre_hi[i + 1] = pre_hi[i] + hi_shift[i]

        def rec(i, vec, exps):
            if vec.is_zero():
                return
            if i < 0:
                val = coef * bilinear_form(uprime, vec, alpha)
                if val:
                    key = tuple(exps)
                    acc[key] = acc.get(key, Fraction(0)) + val
                return
            s, _ = row[i]
            wts_vec = vec.weights()
            for exp in ranges[i]:
                shift = exp + weight(s)
                # slots 0..i-1 must still reach a weight of u'
                ok = False
                for wvec in wts_vec:
                    t = wvec + shift
                    if t < 0:
                        continue
                    if any(pre_lo[i] <= w - t <= pre_hi[i]
                           for w in wts_uprime):
                        ok = True
                        break
                if not ok:
                    continue
                nxt = vertex_mode(GradedVector.basis_state(s), -exp - 1, vec)
                rec(i - 1, nxt, [exp] + exps)

        rec(n - 1, u, [])

    return _assemble_genus0(insertions, acc, box, default, uprime, u, alpha)


def _assemble_genus0(insertions, acc, box, default, uprime, u, alpha,
                     operator_word=()):
    """Window-check the accumulated coefficients and build the result.

    Raises WindowError when nonzero data falls on an intrinsically
    finite side: anywhere outside the box for a single insertion,
    above the box for the outermost variable, or in the margin band
    just below the box for the innermost one.
    """
    points = [ins.point for ins in insertions]
    var_order = sorted(points)
    head = points[0] if points else None
    tail = points[-1] if points else None
    strict = len(points) == 1

    coeffs = {}
    for key, val in acc.items():
        if val == 0:
            continue
        exps = dict(zip(points, key))
        inside = all(box[p][0] <= exps[p] <= box[p][1] for p in points)
        if not inside:
            if strict:
                raise WindowError(
                    f"window too small: support at {exps}")
            if exps[head] > box[head][1]:
                raise WindowError(
                    f"window too small: {head} needs exponent {exps[head]}")
            if box[tail][0] - _MARGIN <= exps[tail] < box[tail][0]:
                raise WindowError(
                    f"window too small: {tail} needs exponent {exps[tail]}")
            continue
        coeffs[tuple(exps[p] for p in var_order)] = val
    value = MultiSeries(tuple(var_order), {p: box[p] for p in var_order},
                        coeffs)
    return CorrelationFn(
        genus=0, insertions=insertions, value=value,
        window={p: box[p] for p in points}, default_window=default,
        boundary_states=(uprime, u), alpha=alpha,
        operator_word=operator_word)


# -- genus 0: the reduction recursion -----------------------------------


def _g0_value(row, uprime, u, window, alpha, memo) -> MultiSeries:
    """The recursion on basis-state insertion rows.

    The head operator Y(v, z) = sum_j v(j) z^{-j-1} is split three
    ways: modes carried to u (j >= 0, finitely many by annihilation),
    modes carried to u' (j < 0, finitely many by the weight of u'),
    and the commutators picked up while passing each remaining
    insertion, which resum against the kernel
    sum_{j >= m} C(j, m) z^{-j-1} z_k^{j-m}.  Only the kernel tail is
    infinite; it is cut by the window of z, and the partner variable's
    box is inflated downward so the shifts stay exact on the box.
    """
    if uprime.is_zero() or u.is_zero():
        return MultiSeries((), {})
    if not row:
        return MultiSeries.constant(bilinear_form(uprime, u, alpha))
    key = (row, uprime.key(), u.key(),
           tuple(sorted(window.items())), alpha)
    if key in memo:
        return memo[key]

    (vs, z), rest = row[0], row[1:]
    wv = weight(vs)
    lo_z, _ = window[z]
    v = GradedVector.basis_state(vs)
    out = MultiSeries((), {})

    def sub_window(extra=None):
        w = {p: window[p] for _, p in rest}
        if extra:
            w.update(extra)
        return w

    # v(j) carried through to u, j >= 0
    for j in range(0, wv + max(u.weights())):
        nxt = vertex_mode(v, j, u)
        if nxt.is_zero():
            continue
        sib = _g0_value(rest, uprime, nxt, sub_window(), alpha, memo)
        out = out + sib.shift(z, -j - 1)

    # v(j) carried through to u', j < 0
    for j in range(-1, wv - max(uprime.weights()) - 2, -1):
        adj = adjoint_boundary_state(v, j, uprime, alpha)
        if adj.is_zero():
            continue
        sib = _g0_value(rest, adj, u, sub_window(), alpha, memo)
        out = out + sib.shift(z, -j - 1)

    # commutators against each remaining insertion
    jmax = -lo_z - 1
    for k, (ws, zk) in enumerate(rest):
        for m in range(0, min(wv + weight(ws), jmax + 1)):
            repl = vertex_mode(v, m, GradedVector.basis_state(ws))
            if repl.is_zero():
                continue
            lo_k, hi_k = window[zk]
            wk = sub_window({zk: (lo_k - (jmax - m), hi_k)})
            for bs, bc in repl.t.items():
                sib_row = rest[:k] + ((bs, zk),) + rest[k + 1:]
                sib = _g0_value(sib_row, uprime, u, wk, alpha, memo)
                if sib.is_zero():
                    continue
                for j in range(m, jmax + 1):
                    term = sib.shift(zk, j - m).shift(z, -j - 1)
                    out = out + term * (bc * comb(j, m))

    memo[key] = out
    return out


def genus0_reduce(direction: ReductionDirection,
                  F: CorrelationFn) -> CorrelationFn:
    """One reduction step at genus 0: prepend the fresh insertion and
    rebuild the value by the recursion (never from F.value, which the
    recursion must reproduce on its own)."""
    if F.genus != 0:
        raise ValueError("genus0_reduce needs a genus-0 correlation function")
    ins = direction.insertion
    insertions = (ins,) + F.insertions
    _check_distinct(insertions)
    uprime, u = F.boundary_states
    box = dict(F.window)
    box[ins.point] = F.default_window
    # widen the innermost variable so the margin band below the box is
    # exact and usable by the window check
    inner = dict(box)
    tail = insertions[-1].point
    if len(insertions) > 1:
        inner[tail] = (box[tail][0] - _MARGIN, box[tail][1])

    acc = {}
    memo = {}
    for coef, row in _basis_expansions(insertions):
        val = _g0_value(row, uprime, u,
                        {p: inner[p] for _, p in row}, F.alpha, memo)
        ext = val.extended_to([p for _, p in row])
        for exps, c in ext.c.items():
            keyed = dict(zip(ext.vars, exps))
            key = tuple(keyed[p] for _, p in row)
            acc[key] = acc.get(key, Fraction(0)) + coef * c

    word = (f"H({render_state(ins.state)}@{ins.point})",) + F.operator_word
    return _assemble_genus0(insertions, acc, box, F.default_window,
                            uprime, u, F.alpha, operator_word=word)


# -- genus 1: brute-force oracle ----------------------------------------


def _apply_word(word, vec: GradedVector) -> GradedVector:
    """Apply a front word (right to left) to a vector."""
    for s, k in reversed(word):
        vec = vertex_mode(GradedVector.basis_state(s), k, vec)
        if vec.is_zero():
            break
    return vec


def _front_shift(word) -> int:
    return sum(weight(s) - k - 1 for s, k in word)


def _trace_word(word, q_order: int, memo=None) -> TruncatedSeries:
    """Tr_V(word q^{L(0)}) as a q-series: the word acts inside each
    weight space when its total shift vanishes, so the coefficient of
    q^m is an exact finite trace over the basis of V_m."""
    if memo is not None and ("tr", word, q_order) in memo:
        return memo[("tr", word, q_order)]
    coeffs = {}
    if _front_shift(word) == 0:
        for m in range(0, q_order + 1):
            t = Fraction(0)
            for b in basis(m):
                t += _apply_word(word, GradedVector.basis_state(b)).coefficient(b)
            if t:
                coeffs[m] = t
    out = TruncatedSeries("q", 0, q_order, coeffs)
    if memo is not None:
        memo[("tr", word, q_order)] = out
    return out


def genus1_direct(insertions, q_order: int, mode_window,
                  front_word=()) -> CorrelationFn:
    """Tr_V(Y(q_1^{L(0)} v_1, q_1) ... q^{L(0) - c/24}) in the
    variables q_{z_i} and q, by enumerating exponent tuples in the box.

    The grading forces the exponents (plus the shift of any front
    word) to sum to zero, so each box coefficient is one finite trace;
    every cut is a viewing cut and no sentinel applies.
    """
    insertions = tuple(insertions)
    _check_distinct(insertions)
    points = [ins.point for ins in insertions]
    box, default = _normalize_window(points, mode_window)
    q_order = int(q_order)

    var_order = sorted(point_var(1, p) for p in points)
    acc = {}
    memo = {}
    fshift = _front_shift(tuple(front_word))
    for coef, row in _basis_expansions(insertions):

        def rec(i, exps, shift):
            if i == len(row):
                if shift + fshift != 0:
                    return
                word = tuple(front_word) + tuple(
                    (s, weight(s) - e - 1) for (s, _), e in zip(row, exps))
                tr = _trace_word(word, q_order, memo)
                if tr.is_zero():
                    return
                keyed = dict(zip([point_var(1, p) for _, p in row], exps))
                key = tuple(keyed[v] for v in var_order)
                if key in acc:
                    acc[key] = acc[key] + tr * coef
                else:
                    acc[key] = tr * coef
                return
            p = row[i][1]
            rem_lo = sum(box[q][0] for _, q in row[i + 1:])
            rem_hi = sum(box[q][1] for _, q in row[i + 1:])
            for e in range(box[p][0], box[p][1] + 1):
                if rem_lo <= -(shift + fshift + e) <= rem_hi:
                    rec(i + 1, exps + [e], shift + e)

        rec(0, [], 0)

    all_vars = tuple(sorted(var_order + ["q"]))
    qpos = all_vars.index("q")
    coeffs = {}
    for key, tr in acc.items():
        for qe, c in tr.c.items():
            if c:
                coeffs[key[:qpos] + (qe,) + key[qpos:]] = c
    window = {point_var(1, p): box[p] for p in points}
    window["q"] = (0, q_order)
    value = MultiSeries(all_vars, window, coeffs)
    return CorrelationFn(
        genus=1, insertions=insertions, value=value,
        window={p: box[p] for p in points}, default_window=default,
        q_order=q_order, q_shift=-CENTRAL_CHARGE / 24,
        front_word=tuple(front_word))


# -- genus 1: the reduction recursion -----------------------------------


def _geom_inv(d: int, q_order: int) -> TruncatedSeries:
    """1/(1 - q^{-d}) as a q-series with nonnegative exponents."""
    coeffs = {}
    if d > 0:
        for i in range(1, q_order // d + 1):
            coeffs[i * d] = Fraction(-1)
    else:
        step = -d
        for i in range(0, q_order // step + 1):
            coeffs[i * step] = Fraction(1)
    return TruncatedSeries("q", 0, q_order, coeffs)


def _g1_value(front, row, window, q_order, memo) -> MultiSeries:
    """Trace recursion on (front word, dressed insertion row).

    The head mode v(wt v - 1 - d) at q_z-exponent d is cycled around
    the trace; the factor 1/(1 - q^{-d}) resums the cycling for d != 0
    and the d = 0 mode o(v) joins the front word.  Commutators against
    the dressed insertions rebundle into square-bracket replacements
    under P_{m+1} kernels; commutators against the front word keep
    their raw mode form.
    """
    key = (front, row, tuple(sorted(window.items())), q_order)
    if key in memo:
        return memo[key]
    if not row:
        out = MultiSeries.from_single(_trace_word(front, q_order, memo))
        memo[key] = out
        return out

    # grading: the insertion exponents must be able to cancel the
    # front word's weight shift
    fshift = _front_shift(front)
    lo_sum = sum(window[p][0] for _, p in row)
    hi_sum = sum(window[p][1] for _, p in row)
    if not lo_sum <= -fshift <= hi_sum:
        out = MultiSeries((), {})
        memo[key] = out
        return out

    (vs, z), rest = row[0], row[1:]
    wv = weight(vs)
    v = GradedVector.basis_state(vs)
    qz = point_var(1, z)
    lo_z, hi_z = window[z]
    out = MultiSeries((), {})

    def sub_window(extra=None):
        w = {p: window[p] for _, p in rest}
        if extra:
            w.update(extra)
        return w

    # d = 0: o(v) becomes the newest front factor
    t0 = _g1_value(((vs, wv - 1),) + front, rest, sub_window(),
                   q_order, memo)
    out = out + t0.extended_to(t0.vars + (qz,))

    # square-bracket replacements against each remaining insertion
    shift_max = max(-lo_z, hi_z, 0)
    for k, (ws, zk) in enumerate(rest):
        qk = point_var(1, zk)
        lo_k, hi_k = window[zk]
        wk = sub_window({zk: (lo_k - shift_max, hi_k + shift_max)})
        for m in range(0, wv + weight(ws)):
            repl = square_bracket_mode(v, m, GradedVector.basis_state(ws))
            if repl.is_zero():
                continue
            kernel = weierstrass_p_qz(m + 1, (-hi_z, -lo_z), q_order,
                                      qzvar="_u")
            sign = Fraction((-1) ** (m + 1))
            for bs, bc in repl.t.items():
                sib_row = rest[:k] + ((bs, zk),) + rest[k + 1:]
                sib = _g1_value(front, sib_row, wk, q_order, memo)
                if sib.is_zero():
                    continue
                for e in range(-hi_z, -lo_z + 1):
                    if e == 0:
                        continue
                    qpart = kernel.coefficient_of("_u", e)
                    if qpart.is_zero():
                        continue
                    term = (sib * qpart) * (sign * bc)
                    out = out + term.shift(qz, -e).shift(qk, e)

    # commutators with the front word keep their raw mode form
    for t, (fs, fk) in enumerate(front):
        for d in range(lo_z, hi_z + 1):
            if d == 0:
                continue
            big_k = wv - 1 - d
            geom = MultiSeries.from_single(_geom_inv(d, q_order))
            for i in range(0, wv + weight(fs)):
                c = gbinom(big_k, i)
                if c == 0:
                    continue
                repl = vertex_mode(v, i, GradedVector.basis_state(fs))
                if repl.is_zero():
                    continue
                for bs, bc in repl.t.items():
                    nf = front[:t] + ((bs, big_k + fk - i),) + front[t + 1:]
                    sib = _g1_value(nf, rest, sub_window(), q_order, memo)
                    if sib.is_zero():
                        continue
                    out = out + (sib * geom).shift(qz, d) * (c * bc)

    memo[key] = out
    return out


def genus1_reduce(direction: ReductionDirection,
                  F: CorrelationFn) -> CorrelationFn:
    """One reduction step at genus 1; the fresh point goes outermost,
    to the left even of any front word."""
    if F.genus != 1:
        raise ValueError("genus1_reduce needs a genus-1 correlation function")
    ins = direction.insertion
    insertions = (ins,) + F.insertions
    _check_distinct(insertions)
    box = dict(F.window)
    box[ins.point] = F.default_window
    q_order = F.q_order

    acc = MultiSeries((), {})
    memo = {}
    for coef, row in _basis_expansions(insertions):
        val = _g1_value(tuple(F.front_word), row,
                        {p: box[p] for _, p in row}, q_order, memo)
        acc = acc + val * coef

    var_order = sorted(point_var(1, p) for p in box)
    acc = acc.extended_to(tuple(var_order) + ("q",))
    for p, (lo, hi) in box.items():
        qv = point_var(1, p)
        acc = acc.cut_below(qv, lo).clip(qv, lo, hi)
    window = {point_var(1, p): box[p] for p in box}
    window["q"] = (0, q_order)
    value = MultiSeries(acc.vars, window, dict(acc.c))
    word = (f"H({render_state(ins.state)}@{ins.point})",) + F.operator_word
    return CorrelationFn(
        genus=1, insertions=insertions, value=value,
        window={p: box[p] for p in box}, default_window=F.default_window,
        q_order=q_order, q_shift=F.q_shift, front_word=F.front_word,
        operator_word=word)


# -- partition functions, residuals, unwinding ---------------------------


def genus0_partition(uprime: GradedVector, u: GradedVector,
                     window=(-8, 8), alpha=1) -> CorrelationFn:
    """F_0 = <u', u>."""
    _, default = _normalize_window([], window)
    value = MultiSeries.constant(bilinear_form(uprime, u, Fraction(alpha)))
    return CorrelationFn(
        genus=0, insertions=(), value=value, window={},
        default_window=default, boundary_states=(uprime, u),
        alpha=Fraction(alpha))


def genus1_partition(q_order: int, window=(-8, 8)) -> CorrelationFn:
    """Z^{(1)} = Tr q^{L(0) - c/24}: the graded dimension with -c/24
    carried as the exponent tag."""
    tr = _trace_word((), int(q_order))
    value = MultiSeries.from_single(tr)
    _, default = _normalize_window([], window)
    return CorrelationFn(
        genus=1, insertions=(), value=value, window={},
        default_window=default, q_order=int(q_order),
        q_shift=-CENTRAL_CHARGE / 24)


def genus1_onepoint(v: GradedVector, q_order: int) -> TruncatedSeries:
    """Tr(o(v) q^{L(0)}) as a plain q-series (no c/24 tag); the
    genus-2 sewing sums consume these wholesale."""
    out = TruncatedSeries.zero("q", 0, int(q_order))
    for s, c in v.t.items():
        word = ((s, weight(s) - 1),)
        out = out + _trace_word(word, int(q_order)) * c
    return out


def cocycle_residual(direction: ReductionDirection,
                     F: CorrelationFn) -> MultiSeries:
    """H(x_{n+1}) F: identically zero on the box iff F is a cocycle in
    this direction."""
    if F.genus == 0:
        return genus0_reduce(direction, F).value
    return genus1_reduce(direction, F).value


def unwind_to_partition(directions, genus: int, *, uprime=None, u=None,
                        window=(-8, 8), q_order: int = 6,
                        alpha=1) -> CorrelationFn:
    """Apply reduction steps in order starting from the partition
    function, recording the operator word and flagging every step
    whose output is identically zero on the box (a degenerate
    direction)."""
    if genus == 0:
        uprime = vacuum() if uprime is None else uprime
        u = vacuum() if u is None else u
        F = genus0_partition(uprime, u, window=window, alpha=alpha)
        step = genus0_reduce
    elif genus == 1:
        F = genus1_partition(q_order, window=window)
        step = genus1_reduce
    else:
        raise ValueError("unwinding is defined at genus 0 and 1")
    degenerate = []
    for i, d in enumerate(directions):
        F = step(d, F)
        if F.is_zero():
            degenerate.append(i)
    F.degenerate_steps = tuple(degenerate)
    return F
