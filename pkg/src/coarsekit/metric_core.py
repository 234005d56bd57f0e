"""Finite metric spaces, subspaces, families, and scale predicates.

Distances are exact nonnegative rationals. Internally every space also keeps
an int64 copy of the matrix scaled by the lcm of the entry denominators, so
strict comparisons like d(A,B) > R never touch floating point: thresholds are
converted to integers with exact floor/ceil arithmetic before any scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import AmbientMismatch, ControlError, MetricViolation
from .rational import as_fraction, as_scale

# Scaled entries and thresholds must stay well inside int64.
_INT_GUARD = 2**62


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Exact symmetric distance matrix over indexed points 0..size-1."""

    name: str
    rows: tuple[tuple[Fraction, ...], ...]
    den: int
    D: np.ndarray  # int64, D[i,j] = rows[i][j] * den

    @property
    def size(self) -> int:
        return len(self.rows)

    def dist(self, i: int, j: int) -> Fraction:
        return self.rows[i][j]

    @cached_property
    def diameter(self) -> Fraction:
        return Fraction(int(self.D.max()), self.den) if self.size else Fraction(0)

    def frac(self, scaled: int) -> Fraction:
        return Fraction(int(scaled), self.den)

    def thr_le(self, bound: Fraction) -> int:
        """Largest scaled integer t with t/den <= bound (d <= bound iff D <= t)."""
        return min(math.floor(bound * self.den), _INT_GUARD)

    def thr_lt(self, bound: Fraction) -> int:
        """d < bound iff D <= this threshold."""
        return min(math.ceil(bound * self.den) - 1, _INT_GUARD)

    def equals(self, other: "FiniteMetricSpace") -> bool:
        return self.name == other.name and self.rows == other.rows

    @classmethod
    def from_rows(cls, name: str, rows: Sequence[Sequence]) -> "FiniteMetricSpace":
        report = check_metric(rows, name=name)
        if not report.ok:
            raise MetricViolation(report.kind, report.where)
        return report.space

    def __repr__(self) -> str:
        return f"FiniteMetricSpace({self.name!r}, size={self.size})"


@dataclass(frozen=True)
class MetricCheck:
    ok: bool
    kind: str | None = None
    where: tuple[int, ...] = ()
    space: FiniteMetricSpace | None = None

    def describe(self) -> str:
        if self.ok:
            return "valid metric"
        return f"{self.kind} at {self.where}"


def check_metric(rows: Sequence[Sequence], name: str = "space") -> MetricCheck:
    """Validate a square rational matrix; report the first violated axiom."""
    n = len(rows)
    for i, row in enumerate(rows):
        if len(row) != n:
            return MetricCheck(False, "shape", (i,))
    frac_rows = tuple(tuple(as_fraction(v) for v in row) for row in rows)

    den = 1
    for row in frac_rows:
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
    scaled = [[int(v * den) for v in row] for row in frac_rows]
    if n and (den > _INT_GUARD or max(abs(x) for row in scaled for x in row) > _INT_GUARD):
        return MetricCheck(False, "overflow", ())
    D = np.array(scaled, dtype=np.int64).reshape(n, n)

    neg = np.argwhere(D < 0)
    if neg.size:
        i, j = map(int, neg[0])
        return MetricCheck(False, "negative", (i, j))
    bad_diag = np.nonzero(D.diagonal() != 0)[0]
    if bad_diag.size:
        return MetricCheck(False, "diagonal", (int(bad_diag[0]),))
    asym = np.argwhere(D != D.T)
    if asym.size:
        i, j = map(int, asym[0])
        return MetricCheck(False, "asymmetry", (i, j))
    off = ~np.eye(n, dtype=bool)
    zero = np.argwhere((D == 0) & off)
    if zero.size:
        i, j = map(int, zero[0])
        return MetricCheck(False, "zero_offdiag", (i, j))
    for k in range(n):
        bad = np.argwhere(D > D[:, [k]] + D[[k], :])
        if bad.size:
            i, j = map(int, bad[0])
            return MetricCheck(False, "triangle", (i, k, j))

    space = FiniteMetricSpace(name=name, rows=frac_rows, den=den, D=D)
    return MetricCheck(True, space=space)


# ---------------------------------------------------------------------------
# subspaces and families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Subspace:
    """A nonempty set of point indices of one ambient space."""

    space: FiniteMetricSpace
    points: tuple[int, ...]

    def __post_init__(self):
        pts = tuple(sorted(set(self.points)))
        if not pts:
            raise ValueError("subspace must be nonempty")
        if pts[0] < 0 or pts[-1] >= self.space.size:
            raise ValueError(f"point index out of range: {pts}")
        object.__setattr__(self, "points", pts)

    @cached_property
    def idx(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.int64)

    @cached_property
    def as_set(self) -> frozenset[int]:
        return frozenset(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p: int) -> bool:
        return p in self.as_set

    def diam(self) -> Fraction:
        return self.space.frac(_kernels.max_within(self.space.D, self.idx))

    def __repr__(self) -> str:
        return f"Subspace({_short(self.points)})"


def _short(pts: tuple[int, ...]) -> str:
    if len(pts) > 8:
        return f"[{pts[0]}..{pts[-1]} #{len(pts)}]"
    return str(list(pts))


def sub(space: FiniteMetricSpace, points: Iterable[int]) -> Subspace:
    return Subspace(space, tuple(points))


def whole(space: FiniteMetricSpace) -> Subspace:
    return Subspace(space, tuple(range(space.size)))


@dataclass(frozen=True)
class MetricFamily:
    """An ordered (possibly empty) list of subspaces of one ambient space."""

    space: FiniteMetricSpace
    members: tuple[Subspace, ...]

    def __post_init__(self):
        for m in self.members:
            if m.space is not self.space:
                raise AmbientMismatch("family member in a different ambient space")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def union_points(self) -> frozenset[int]:
        out: set[int] = set()
        for m in self.members:
            out.update(m.points)
        return frozenset(out)

    def __repr__(self) -> str:
        return f"MetricFamily({[list(m.points) for m in self.members]})"


def family(space: FiniteMetricSpace, member_points: Iterable[Iterable[int]]) -> MetricFamily:
    return MetricFamily(space, tuple(sub(space, pts) for pts in member_points))


def singletons(X: Subspace) -> MetricFamily:
    return MetricFamily(X.space, tuple(Subspace(X.space, (p,)) for p in X.points))


# ---------------------------------------------------------------------------
# elementary operations
# ---------------------------------------------------------------------------

def set_distance(A: Subspace, B: Subspace) -> Fraction:
    """min d(a,b) over a in A, b in B (attained; finite spaces)."""
    if A.space is not B.space:
        raise AmbientMismatch("set_distance operands in different spaces")
    return A.space.frac(_kernels.min_between(A.space.D, A.idx, B.idx))


def mesh(F: MetricFamily) -> Fraction:
    """Largest member diameter; 0 for the empty family."""
    best = 0
    for m in F.members:
        v = _kernels.max_within(F.space.D, m.idx)
        if v > best:
            best = v
    return F.space.frac(best)


@dataclass(frozen=True)
class DisjointVerdict:
    ok: bool
    witness: tuple[int, int] | None = None  # member indices
    distance: Fraction | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_r_disjoint(F: MetricFamily, R) -> DisjointVerdict:
    """True iff every distinct pair of members is at set distance > R."""
    R = as_scale(R)
    thr = F.space.thr_le(R)  # violation iff scaled distance <= thr
    members = F.members
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            d = _kernels.min_between(F.space.D, members[i].idx, members[j].idx)
            if d <= thr:
                return DisjointVerdict(False, (i, j), F.space.frac(d))
    return DisjointVerdict(True)


def r_components(F: MetricFamily, R) -> MetricFamily:
    """Merge members along the transitive closure of set distance <= R.

    Output members are unions of the equivalence classes, ordered by first
    occurrence; distinct outputs are at set distance > R.
    """
    R = as_scale(R)
    space = F.space
    m = len(F.members)
    if m <= 1:
        return F
    thr = space.thr_le(R)

    if all(len(s) == 1 for s in F.members):
        pts = np.array([s.points[0] for s in F.members], dtype=np.int64)
        labels = _kernels.component_labels(space.D, pts, thr)
    else:
        parent = list(range(m))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i in range(m):
            for j in range(i + 1, m):
                if _kernels.min_between(space.D, F.members[i].idx, F.members[j].idx) <= thr:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[max(ri, rj)] = min(ri, rj)
        remap: dict[int, int] = {}
        labels = np.empty(m, np.int64)
        for i in range(m):
            r = find(i)
            if r not in remap:
                remap[r] = len(remap)
            labels[i] = remap[r]

    groups: list[set[int]] = [set() for _ in range(int(labels.max()) + 1)]
    for i, lab in enumerate(labels.tolist()):
        groups[lab].update(F.members[i].points)
    return MetricFamily(space, tuple(Subspace(space, tuple(g)) for g in groups))


def neighborhood(A: Subspace, r, mode: str = "open") -> Subspace:
    """{x : d(x,A) < r} (open) or <= r (closed); always contains A."""
    r = as_scale(r)
    if mode not in ("open", "closed"):
        raise ValueError(f"mode must be open|closed, got {mode!r}")
    space = A.space
    dvec = _kernels.min_to_set(space.D, A.idx)
    thr = space.thr_lt(r) if mode == "open" else space.thr_le(r)
    pts = np.nonzero(dvec <= thr)[0]
    return Subspace(space, tuple(int(p) for p in pts))


def dist_to_set(space: FiniteMetricSpace, A: Subspace) -> np.ndarray:
    """Scaled d(x, A) for every point x of the space."""
    return _kernels.min_to_set(space.D, A.idx)


@dataclass(frozen=True)
class CoverVerdict:
    ok: bool
    uncovered: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def is_cover(families: Sequence[MetricFamily], X: Subspace) -> CoverVerdict:
    """True iff the union over all members of all families contains X."""
    covered: set[int] = set()
    for F in families:
        if F.space is not X.space:
            raise AmbientMismatch("cover check across different spaces")
        covered.update(F.union_points())
    uncovered = tuple(sorted(set(X.points) - covered))
    return CoverVerdict(not uncovered, uncovered)


def family_lint(F: MetricFamily) -> list[str]:
    """Non-fatal warnings: duplicate members are permitted but flagged."""
    seen: dict[tuple[int, ...], int] = {}
    warnings = []
    for i, m in enumerate(F.members):
        if m.points in seen:
            warnings.append(f"member {i} duplicates member {seen[m.points]}")
        else:
            seen[m.points] = i
    return warnings


# ---------------------------------------------------------------------------
# coarse maps with monotone control functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ControlFunction:
    """Nondecreasing step table with a linear tail, on [0, oo) -> [0, oo).

    f(t) = value of the first step whose threshold >= t; past the last
    threshold f(t) = max(last value, slope*t + intercept, 0).
    """

    steps: tuple[tuple[Fraction, Fraction], ...] = ()
    tail_slope: Fraction = Fraction(0)
    tail_intercept: Fraction = Fraction(0)

    def __post_init__(self):
        last_t = None
        last_v = None
        for t, v in self.steps:
            if v < 0 or t < 0:
                raise ControlError("control steps must be nonnegative")
            if last_t is not None and (t <= last_t or v < last_v):
                raise ControlError("control steps must increase in t, nondecrease in value")
            last_t, last_v = t, v
        if self.tail_slope < 0:
            raise ControlError("tail slope must be nonnegative")

    @classmethod
    def linear(cls, slope, intercept=0) -> "ControlFunction":
        return cls((), as_fraction(slope), as_fraction(intercept))

    @classmethod
    def from_table(cls, pairs, tail_slope=0, tail_intercept=0) -> "ControlFunction":
        steps = tuple((as_fraction(t), as_fraction(v)) for t, v in pairs)
        return cls(steps, as_fraction(tail_slope), as_fraction(tail_intercept))

    def __call__(self, t) -> Fraction:
        t = as_fraction(t)
        if t < 0:
            raise ControlError("control functions take nonnegative arguments")
        for thr, val in self.steps:
            if t <= thr:
                return val
        last = self.steps[-1][1] if self.steps else Fraction(0)
        return max(last, self.tail_slope * t + self.tail_intercept, Fraction(0))

    @property
    def unbounded(self) -> bool:
        return self.tail_slope > 0

    def preimage_sup(self, y) -> Fraction:
        """sup{t >= 0 : f(t) <= y}; requires an unbounded control."""
        y = as_fraction(y)
        if not self.unbounded:
            raise ControlError("cannot invert a bounded control function")
        best = Fraction(0)
        for thr, val in self.steps:
            if val <= y:
                best = max(best, thr)
        last = self.steps[-1][1] if self.steps else Fraction(0)
        if last <= y:
            t_tail = (y - self.tail_intercept) / self.tail_slope
            best = max(best, t_tail)
        return best


@dataclass(frozen=True)
class CoarseMap:
    """A point map with verified upper and lower distance controls.

    For all x,y: lower(d(x,y)) <= d(f(x),f(y)) <= upper(d(x,y)).
    """

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    mapping: tuple[int, ...]
    upper: ControlFunction
    lower: ControlFunction

    def __post_init__(self):
        if len(self.mapping) != self.source.size:
            raise ControlError("mapping must be total on the source")
        if any(v < 0 or v >= self.target.size for v in self.mapping):
            raise ControlError("mapping hits a point outside the target")
        _verify_controls(self)

    def __call__(self, x: int) -> int:
        return self.mapping[x]

    def image(self, A: Subspace) -> Subspace:
        return Subspace(self.target, tuple({self.mapping[p] for p in A.points}))

    def preimage_points(self, B: Subspace) -> tuple[int, ...]:
        bs = B.as_set
        return tuple(x for x in range(self.source.size) if self.mapping[x] in bs)

    @classmethod
    def with_empirical_controls(cls, source, target, mapping) -> "CoarseMap":
        """Build the tightest step-table controls realized by the data."""
        mapping = tuple(mapping)
        mv = np.asarray(mapping, dtype=np.int64)
        S = source.D
        T = target.D[np.ix_(mv, mv)]
        values = np.unique(S)
        up_steps, lo_pairs = [], []
        running_max = -1
        for s in values.tolist():
            m = S == s
            running_max = max(running_max, int(T[m].max()))
            up_steps.append((Fraction(s, source.den), Fraction(running_max, target.den)))
            lo_pairs.append((s, int(T[m].min())))
        lo_steps = []
        suffix = None
        for s, v in reversed(lo_pairs):
            suffix = v if suffix is None else min(suffix, v)
            lo_steps.append((Fraction(s, source.den), Fraction(suffix, target.den)))
        lo_steps.reverse()
        last_t, last_v = lo_steps[-1]
        lower = ControlFunction.from_table(lo_steps, tail_slope=1, tail_intercept=last_v - last_t)
        upper = ControlFunction.from_table(up_steps)
        return cls(source, target, mapping, upper, lower)


def _verify_controls(f: CoarseMap) -> None:
    mv = np.asarray(f.mapping, dtype=np.int64)
    S = f.source.D
    T = f.target.D[np.ix_(mv, mv)]
    for s in np.unique(S).tolist():
        m = S == s
        t = Fraction(s, f.source.den)
        t_max = Fraction(int(T[m].max()), f.target.den)
        t_min = Fraction(int(T[m].min()), f.target.den)
        if t_max > f.upper(t):
            raise ControlError(
                f"upper control violated: d_source={t} maps to d_target={t_max} > upper={f.upper(t)}"
            )
        if f.lower(t) > t_min:
            raise ControlError(
                f"lower control violated: lower({t})={f.lower(t)} > d_target={t_min}"
            )
