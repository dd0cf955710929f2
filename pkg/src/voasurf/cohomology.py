"""Reduction cohomology as exact linear algebra on graded slices.

The coboundary at level n is the reduction step in a chosen direction
x_{n+1} = (state, fresh point): it sends the correlation function of
an n-tuple of insertions to the (n+1)-point function with the fresh
insertion prepended.  Since the step acts on insertion *tuples* (two
tuples with the same value need not reduce to the same value), the
chain space at level n and weight m is the free vector space on the
canonical tuples of total weight m, and q_{n,m} counts those tuples.
Everything downstream is matrix algebra over the rationals: columns
are vectorized images on a fixed monomial window, kernels and ranks
come from deterministic Gaussian elimination.

All dimension claims are certified within the window only.  A kernel
vector says "the image vanishes on every monomial we can see"; a
non-kernel vector is refuted outright.  Growing the window can only
shrink a reported kernel, never grow it.

The direction of the coboundary is the one parameter the theory
leaves open.  Every operation here takes it explicitly, either as a
single direction or as a finite family, and a family can enter as the
sum of its per-direction matrices (one operator, the convention the
cluster construction uses) or stacked (simultaneous conditions, one
block row per direction).
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

from .linalg import kernel_basis, rank, row_echelon
from .reduction import (
    CorrelationFn,
    Insertion,
    ReductionDirection,
    genus0_direct,
    genus0_partition,
    genus0_reduce,
    genus1_direct,
    genus1_partition,
    genus1_reduce,
    point_var,
)
from .voa import GradedVector, basis, render_state, vacuum, weight

DEFAULT_WINDOW = (-4, 4)
DEFAULT_Q_ORDER = 4


def canonical_points(n: int) -> tuple:
    return tuple(f"z{i}" for i in range(1, n + 1))


def weighted_tuples(n: int, m: int) -> tuple:
    """All n-tuples of Fock basis states with total weight m, in the
    lexicographic order induced by the per-weight basis order."""
    if m < 0:
        return ()
    if n == 0:
        return ((),) if m == 0 else ()
    out = []
    for w in range(m + 1):
        for s in basis(w):
            for rest in weighted_tuples(n - 1, m - w):
                out.append((s,) + rest)
    return tuple(out)


def as_direction(d, default_point: str = "w") -> ReductionDirection:
    """Coerce a state, (state, point) pair or insertion to a direction."""
    if isinstance(d, ReductionDirection):
        return d
    if isinstance(d, Insertion):
        return ReductionDirection(d)
    if isinstance(d, GradedVector):
        return ReductionDirection(Insertion(d, default_point))
    state, point = d
    return ReductionDirection(Insertion(state, str(point)))


def direction_weight(direction: ReductionDirection) -> int:
    state = direction.insertion.state
    if state.is_zero():
        raise ValueError("direction state must be nonzero")
    if not state.is_homogeneous():
        raise ValueError("direction state must be homogeneous to target "
                         "a single weight slice")
    return state.weights()[0]


def _direction_family(family):
    """Normalize to a nonempty tuple of directions sharing one fresh
    point symbol (the first member's) and one state weight."""
    if isinstance(family, (ReductionDirection, Insertion, GradedVector)):
        family = [family]
    elif isinstance(family, tuple) and len(family) == 2 and \
            isinstance(family[0], GradedVector):
        family = [family]
    dirs = [as_direction(d) for d in family]
    if not dirs:
        raise ValueError("empty direction family")
    anchor = dirs[0].insertion.point
    dirs = [d if d.insertion.point == anchor else
            ReductionDirection(Insertion(d.insertion.state, anchor))
            for d in dirs]
    ws = {direction_weight(d) for d in dirs}
    if len(ws) > 1:
        raise ValueError(f"direction family mixes state weights {sorted(ws)}")
    return tuple(dirs), ws.pop()


def describe_direction(direction: ReductionDirection) -> str:
    ins = direction.insertion
    return f"{render_state(ins.state)}@{ins.point}"


class GradedSlice:
    """The weight-m slice of the level-n chain space.

    ``basis`` is the canonical tuple list, ``functions`` the matching
    correlation functions (built lazily: targets of a coboundary only
    ever need the vectorization data).  Genus 0 carries boundary
    states, vacuum by default; genus 1 carries the q-order.
    """

    def __init__(self, genus: int, n: int, m: int, *, points=None,
                 window=DEFAULT_WINDOW, q_order=None, boundary=None,
                 alpha=1):
        if genus not in (0, 1):
            raise ValueError("graded slices exist at genus 0 and 1")
        self.genus = genus
        self.n = int(n)
        self.m = int(m)
        if self.n < 0:
            raise ValueError("level n must be >= 0")
        self.points = canonical_points(self.n) if points is None \
            else tuple(points)
        if len(self.points) != self.n:
            raise ValueError("need one point symbol per insertion")
        lo, hi = window
        self.window = (int(lo), int(hi))
        self.q_order = DEFAULT_Q_ORDER if genus == 1 and q_order is None \
            else (int(q_order) if q_order is not None else None)
        if genus == 0:
            self.boundary = (vacuum(), vacuum()) if boundary is None \
                else tuple(boundary)
        else:
            self.boundary = None
        self.alpha = Fraction(alpha)

    @cached_property
    def basis(self) -> tuple:
        return weighted_tuples(self.n, self.m)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def insertions(self, states) -> tuple:
        return tuple(Insertion(GradedVector.basis_state(s), p)
                     for s, p in zip(states, self.points))

    @cached_property
    def functions(self) -> tuple:
        return tuple(self.build(self.insertions(states))
                     for states in self.basis)

    def build(self, insertions) -> CorrelationFn:
        """The correlation function of an explicit insertion tuple on
        this slice's window (the tuple need not come from ``basis``)."""
        if self.genus == 0:
            up, u = self.boundary
            if not insertions:
                return genus0_partition(up, u, window=self.window,
                                        alpha=self.alpha)
            return genus0_direct(insertions, up, u, self.window,
                                 alpha=self.alpha)
        if not insertions:
            return genus1_partition(self.q_order, window=self.window)
        return genus1_direct(insertions, self.q_order, self.window)

    @cached_property
    def var_order(self) -> tuple:
        vs = [point_var(self.genus, p) for p in self.points]
        if self.genus == 1:
            vs.append("q")
        return tuple(sorted(vs))

    def vectorize(self, fn: CorrelationFn) -> dict:
        """Exact coefficient vector of a correlation function on this
        slice's monomial window, keyed by exponent tuples aligned with
        ``var_order``.  Injective on what the window shows; equality
        of vectors is equality of the functions on the window, nothing
        more."""
        if fn.genus != self.genus:
            raise ValueError("genus mismatch in vectorization")
        if set(fn.window) != set(self.points):
            raise ValueError("inconsistent windows: point sets differ")
        for p, box in fn.window.items():
            if tuple(box) != self.window:
                raise ValueError(f"inconsistent windows at {p}: "
                                 f"{box} vs {self.window}")
        if self.genus == 1 and fn.q_order != self.q_order:
            raise ValueError("inconsistent windows: q-order differs")
        ext = fn.value.extended_to(self.var_order)
        if ext.vars != self.var_order:
            raise ValueError(f"unexpected variables {ext.vars}")
        return {k: v for k, v in ext.c.items() if v}

    def describe(self) -> dict:
        out = {"genus": self.genus, "n": self.n, "m": self.m,
               "points": list(self.points), "window": list(self.window)}
        if self.genus == 1:
            out["q_order"] = self.q_order
        else:
            out["boundary"] = [render_state(v) for v in self.boundary]
        return out


def _reduce_step(genus: int):
    return genus0_reduce if genus == 0 else genus1_reduce


def _check_fresh(direction: ReductionDirection, points) -> None:
    if direction.insertion.point in points:
        raise ValueError(f"direction point {direction.insertion.point!r} "
                         "collides with a slice point")


@dataclass
class CoboundaryMatrix:
    """The reduction step on a slice, one column per basis tuple.

    Columns are sparse monomial vectors on the target slice's window.
    ``matrix`` densifies them over the nonzero row support, in sorted
    monomial order, so ranks and kernels never see all-zero rows.
    """

    direction: ReductionDirection
    source: GradedSlice
    target: GradedSlice
    columns: list

    @cached_property
    def row_keys(self) -> tuple:
        keys = set()
        for col in self.columns:
            keys.update(col)
        return tuple(sorted(keys))

    @cached_property
    def matrix(self) -> list:
        return _densify(self.columns, self.row_keys)

    @cached_property
    def rank(self) -> int:
        return rank(self.matrix)

    @cached_property
    def kernel(self) -> tuple:
        return _kernel_of(self.matrix, len(self.columns))

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel)

    def is_zero(self) -> bool:
        return not self.row_keys

    def describe(self) -> dict:
        return {
            "direction": describe_direction(self.direction),
            "source": self.source.describe(),
            "target": self.target.describe(),
            "shape": [len(self.row_keys), len(self.columns)],
            "rank": self.rank,
            "kernel_dim": self.kernel_dim,
        }


def _densify(columns, row_keys) -> list:
    ncols = len(columns)
    if ncols == 0:
        return []
    if not row_keys:
        # no visible constraints at all: one zero row keeps the
        # column count (and hence kernels) intact
        return [[Fraction(0)] * ncols]
    return [[col.get(key, Fraction(0)) for col in columns]
            for key in row_keys]


def _kernel_of(matrix, ncols) -> tuple:
    if ncols == 0:
        return ()
    return tuple(tuple(v) for v in kernel_basis(matrix))


def target_slice(direction: ReductionDirection, src: GradedSlice,
                 w: int = None) -> GradedSlice:
    w = direction_weight(direction) if w is None else w
    return GradedSlice(src.genus, src.n + 1, src.m + w,
                       points=(direction.insertion.point,) + src.points,
                       window=src.window, q_order=src.q_order,
                       boundary=src.boundary, alpha=src.alpha)


def build_coboundary(direction, src: GradedSlice) -> CoboundaryMatrix:
    """The matrix of the reduction step on a graded slice.

    Exact on the slice's window; window problems inside the reduction
    (an intrinsically finite direction that does not fit) propagate as
    WindowError rather than being absorbed.
    """
    direction = as_direction(direction)
    _check_fresh(direction, src.points)
    tgt = target_slice(direction, src)
    step = _reduce_step(src.genus)
    columns = [tgt.vectorize(step(direction, fn)) for fn in src.functions]
    return CoboundaryMatrix(direction, src, tgt, columns)


@dataclass
class ChainReport:
    """Kernel of a double reduction step on a slice.

    ``kernel`` spans the combinations of basis tuples whose double
    image vanishes on the window: the certified part of the degenerate
    set at this level.  Vectors outside it are refuted; vanishing
    beyond the window is never asserted.
    """

    dir1: ReductionDirection
    dir2: ReductionDirection
    source: GradedSlice
    target: GradedSlice
    columns: list
    kernel: tuple

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel)

    @property
    def refuted_dim(self) -> int:
        return self.source.dim - self.kernel_dim

    def describe(self) -> dict:
        return {
            "dir1": describe_direction(self.dir1),
            "dir2": describe_direction(self.dir2),
            "source": self.source.describe(),
            "q": self.source.dim,
            "kernel_dim": self.kernel_dim,
            "refuted_dim": self.refuted_dim,
            "kernel": [[str(x) for x in vec] for vec in self.kernel],
            "certified": "within window",
        }


def chain_condition_check(dir2, dir1, src: GradedSlice) -> ChainReport:
    """Compose two reduction steps on a slice and report the kernel.

    The composite acts on chain elements, so a first step that lands
    on the zero function annihilates outright: the second step is not
    rebuilt from the insertion tuple of something that is no longer
    there.  Zero is judged on the window, in line with every other
    claim this module makes.
    """
    dir1 = as_direction(dir1, default_point="w1")
    dir2 = as_direction(dir2, default_point="w2")
    _check_fresh(dir1, src.points)
    _check_fresh(dir2, src.points + (dir1.insertion.point,))
    mid = target_slice(dir1, src)
    tgt = target_slice(dir2, mid)
    step = _reduce_step(src.genus)
    columns = []
    for fn in src.functions:
        g = step(dir1, fn)
        columns.append({} if g.is_zero() else tgt.vectorize(step(dir2, g)))
    keys = set()
    for col in columns:
        keys.update(col)
    matrix = _densify(columns, tuple(sorted(keys)))
    kernel = _kernel_of(matrix, len(columns))
    return ChainReport(dir1, dir2, src, tgt, columns, kernel)


def _combined_columns(family, src: GradedSlice, combine: str) -> list:
    """Vectorized images of the slice basis under a direction family.

    sum: entrywise sum of the per-direction images (one operator).
    stack: block rows, keys tagged by the direction index.
    """
    step = _reduce_step(src.genus)
    targets = [target_slice(d, src) for d in family]
    columns = []
    for fn in src.functions:
        if combine == "sum":
            acc = {}
            for d, tgt in zip(family, targets):
                for k, v in tgt.vectorize(step(d, fn)).items():
                    s = acc.get(k, Fraction(0)) + v
                    if s:
                        acc[k] = s
                    else:
                        acc.pop(k, None)
            columns.append(acc)
        elif combine == "stack":
            acc = {}
            for i, (d, tgt) in enumerate(zip(family, targets)):
                for k, v in tgt.vectorize(step(d, fn)).items():
                    acc[(i,) + k] = v
            columns.append(acc)
        else:
            raise ValueError("combine must be 'sum' or 'stack'")
    return columns


def _rank_and_kernel(columns):
    keys = set()
    for col in columns:
        keys.update(col)
    matrix = _densify(columns, tuple(sorted(keys)))
    ker = _kernel_of(matrix, len(columns))
    return len(columns) - len(ker), len(ker)


class RankResult(NamedTuple):
    """q = tuple count of the slice, p = ker(delta_n) - rank(delta_{n-1}),
    kernel_rank and image_rank those of delta_n on the slice, so that
    q = kernel_rank + image_rank always."""

    q: int
    p: int
    kernel_rank: int
    image_rank: int


def cohomology_rank(n: int, m: int, genus: int, direction_family, *,
                    window=DEFAULT_WINDOW, q_order=None, boundary=None,
                    alpha=1, combine="sum") -> RankResult:
    """Rank data of the reduction complex at level n, weight m.

    The level-(n-1) slice feeding the image sits at weight m minus the
    family weight, so its coboundary lands exactly on this slice.  All
    four numbers are certified within the window: a larger window can
    move p, never q.
    """
    family, w = _direction_family(direction_family)
    kw = dict(window=window, q_order=q_order, boundary=boundary, alpha=alpha)
    src = GradedSlice(genus, n, m, **kw)
    for d in family:
        _check_fresh(d, src.points)
    im_up, ker_up = _rank_and_kernel(_combined_columns(family, src, combine))
    if n == 0:
        im_below = 0
    else:
        below = GradedSlice(genus, n - 1, m - w, **kw)
        im_below, _ = _rank_and_kernel(_combined_columns(family, below,
                                                         combine))
    return RankResult(q=src.dim, p=ker_up - im_below,
                      kernel_rank=ker_up, image_rank=im_up)


class EulerResult(NamedTuple):
    total: int
    ledger: tuple


def euler_poincare(m: int, N: int, genus: int, direction_family, *,
                   window=DEFAULT_WINDOW, q_order=None, boundary=None,
                   alpha=1, combine="sum") -> EulerResult:
    """Alternating sum of q_{n} - p_{n} over the ladder 0..N.

    The ladder anchors weight m at level 0 and climbs by the family
    weight per level so consecutive coboundaries actually compose.  At
    the top the image into level N+1 is declared zero, closing the
    telescope; the returned total is then forced to vanish by rank
    plus nullity at every level, and computing it from the actual
    matrices is the regression.
    """
    family, w = _direction_family(direction_family)
    kw = dict(window=window, q_order=q_order, boundary=boundary, alpha=alpha)
    N = int(N)
    if N < 0:
        raise ValueError("N must be >= 0")
    levels = [GradedSlice(genus, k, m + k * w, **kw) for k in range(N + 1)]
    for d in family:
        _check_fresh(d, levels[-1].points)
    ranks = []
    for k in range(N):
        im, ker = _rank_and_kernel(
            _combined_columns(family, levels[k], combine))
        ranks.append((im, ker))
    ranks.append((0, levels[N].dim))  # image into level N+1 := 0
    ledger = []
    total = 0
    im_below = 0
    for k in range(N + 1):
        im, ker = ranks[k]
        q = levels[k].dim
        p = ker - im_below
        term = (-1) ** k * (q - p)
        total += term
        ledger.append({"n": k, "weight": levels[k].m, "q": q, "p": p,
                       "kernel": ker, "image_out": im,
                       "image_in": im_below, "term": term})
        im_below = im
    return EulerResult(total=total, ledger=tuple(ledger))


# -- cluster mutation (vacuum-direction setting) --------------------------


@dataclass
class ClusterSeed:
    """A seed (states, marked points, correlation function).

    The operator tuple of the abstract seed is determined by the
    states and points, so it is not stored twice.
    """

    states: tuple
    points: tuple
    fn: CorrelationFn

    def describe(self) -> dict:
        return {"states": [render_state(v) for v in self.states],
                "points": list(self.points),
                "genus": self.fn.genus}


def make_seed(states, genus: int, *, window=DEFAULT_WINDOW, q_order=None,
              boundary=None, alpha=1) -> ClusterSeed:
    states = tuple(states)
    src = GradedSlice(genus, len(states), 0, points=canonical_points(
        len(states)), window=window, q_order=q_order, boundary=boundary,
        alpha=alpha)
    ins = tuple(Insertion(v, p) for v, p in zip(states, src.points))
    return ClusterSeed(states, src.points, src.build(ins))


def _support(v: GradedVector) -> tuple:
    return tuple(sorted(v.t))


def xi_sign(xi, v: GradedVector) -> Fraction:
    """Look up the sign for a state.  ``xi`` may be None (all +1), a
    dict keyed by state support, or a callable.  Signs attach to the
    support so that flipping a state does not flip its sign; that is
    what makes the double mutation close up."""
    if xi is None:
        s = 1
    elif callable(xi):
        s = xi(v)
    else:
        s = xi.get(_support(v), 1)
    s = Fraction(s)
    if s * s != 1:
        raise ValueError(f"xi sign must square to 1, got {s}")
    return s


def _fresh_point(used) -> str:
    i = 1
    while f"w{i}" in used:
        i += 1
    return f"w{i}"


def cluster_mutate(seed: ClusterSeed, direction: int, m: int, *,
                   xi=None) -> ClusterSeed:
    """Mutate a seed in slot ``direction`` (1-based) with mode index m.

    Vacuum-direction setting: the fresh state is the vacuum, whose
    modes u(m), m >= 0, annihilate everything, so the slot action
    collapses to the sign xi times the identity and the function
    mutates by the reduction step in the vacuum direction, which just
    adjoins a variable the function does not depend on.
    """
    k = int(direction)
    if not 1 <= k <= len(seed.states):
        raise ValueError(f"mutation direction {k} outside 1..{len(seed.states)}")
    if int(m) < 0:
        raise ValueError("mode index m must be >= 0")
    states = list(seed.states)
    states[k - 1] = xi_sign(xi, states[k - 1]) * states[k - 1]
    used = {ins.point for ins in seed.fn.insertions} | set(seed.points)
    d = ReductionDirection(Insertion(vacuum(), _fresh_point(used)))
    fn = _reduce_step(seed.fn.genus)(d, seed.fn)
    return ClusterSeed(tuple(states), seed.points, fn)


def _strip_constant_vars(fn: CorrelationFn, keep_points) -> "MultiSeries":
    value = fn.value
    for ins in fn.insertions:
        if ins.point not in keep_points:
            value = value.drop_zero_var(point_var(fn.genus, ins.point))
    return value


@dataclass
class ClusterSetting:
    seed: ClusterSeed
    direction: int
    m: int
    xi: object = None


def involution_check(setting: ClusterSetting) -> bool:
    """Apply the mutation twice and compare with the original seed
    componentwise.  The function components are compared after the
    two adjoined constant variables are dropped, which is the
    identification the inclusion provides."""
    seed = setting.seed
    once = cluster_mutate(seed, setting.direction, setting.m, xi=setting.xi)
    twice = cluster_mutate(once, setting.direction, setting.m, xi=setting.xi)
    if twice.points != seed.points:
        return False
    if len(twice.states) != len(seed.states):
        return False
    if any(a != b for a, b in zip(twice.states, seed.states)):
        return False
    stripped = _strip_constant_vars(twice.fn, set(seed.points))
    base = seed.fn.value.extended_to(stripped.vars)
    return stripped.c == base.c
