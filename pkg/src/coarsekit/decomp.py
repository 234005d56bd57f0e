"""Decompositions, chains, covers, amalgamation, annuli, and coarse pullbacks."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import (
    AmbientMismatch,
    ControlError,
    ScheduleError,
    SizeLimitExceeded,
    StageAssertionFailure,
)
from .metric_core import (
    CoarseMap,
    ControlFunction,
    FiniteMetricSpace,
    MetricFamily,
    Subspace,
    dist_to_set,
    is_cover,
    is_r_disjoint,
    mesh,
    r_components,
    set_distance,
    singletons,
    sub,
    whole,
)
from .rational import as_fraction, as_scale

DEFAULT_SIZE_LIMIT = 12


def size_limit() -> int:
    return int(os.environ.get("COARSEKIT_SIZE_LIMIT", DEFAULT_SIZE_LIMIT))


Split = tuple[tuple[Subspace, ...], tuple[Subspace, ...]]


# ---------------------------------------------------------------------------
# decompositions and their verifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RDecomposition:
    """Per-member split of a parent family into two R-disjoint piece families."""

    parent: MetricFamily
    R: Fraction
    splits: tuple[Split, ...]
    partition: bool = False

    def __post_init__(self):
        if len(self.splits) != len(self.parent.members):
            raise ValueError("one split per parent member required")

    def pieces(self) -> MetricFamily:
        out: list[Subspace] = []
        for v1, v2 in self.splits:
            out.extend(v1)
            out.extend(v2)
        return MetricFamily(self.parent.space, tuple(out))


@dataclass(frozen=True)
class Violation:
    kind: str
    member: int | None = None
    detail: str = ""
    pieces: tuple[tuple[int, ...], ...] = ()  # offending point sets, when known

    def __str__(self) -> str:
        where = f" (member {self.member})" if self.member is not None else ""
        return f"{self.kind}{where}: {self.detail}"


@dataclass(frozen=True)
class Verdict:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        return "pass" if self.ok else "; ".join(str(v) for v in self.violations)


def verify_decomposition(d: RDecomposition) -> Verdict:
    """Check containment, coverage, per-member disjointness, and the partition flag."""
    out: list[Violation] = []
    for mi, (member, (v1, v2)) in enumerate(zip(d.parent.members, d.splits)):
        mset = member.as_set
        covered: set[int] = set()
        seen: set[int] = set()
        overlap_reported = False
        for piece in (*v1, *v2):
            if not piece.as_set <= mset:
                out.append(
                    Violation("piece_outside", mi, f"piece {sorted(piece.points)} not inside member")
                )
            if d.partition and not overlap_reported and (piece.as_set & seen):
                out.append(Violation("overlap", mi, f"piece {sorted(piece.points)} overlaps another"))
                overlap_reported = True
            seen.update(piece.points)
            covered.update(piece.points)
        missing = mset - covered
        if missing:
            out.append(Violation("coverage_gap", mi, f"uncovered {sorted(missing)}"))
        for label, fam_pieces in (("v1", v1), ("v2", v2)):
            verdict = is_r_disjoint(MetricFamily(d.parent.space, fam_pieces), d.R) if fam_pieces else None
            if verdict is not None and not verdict.ok:
                i, j = verdict.witness
                out.append(
                    Violation(
                        f"{label}_disjointness",
                        mi,
                        f"pieces {sorted(fam_pieces[i].points)} and {sorted(fam_pieces[j].points)} "
                        f"at distance {verdict.distance} <= {d.R}",
                        pieces=(fam_pieces[i].points, fam_pieces[j].points),
                    )
                )
    return Verdict(tuple(out))


# ---------------------------------------------------------------------------
# single-member split strategies
# ---------------------------------------------------------------------------

def split_components(X: Subspace, R) -> Split:
    comps = r_components(singletons(X), R)
    return tuple(comps.members), ()


def split_radial(X: Subspace, R, base: int | None = None) -> Split:
    """Distance bands of width R+1 around a base point, alternating families."""
    R = as_scale(R)
    if base is None:
        base = X.points[0]
    elif base not in X:
        raise ValueError(f"radial base {base} not in member")
    space = X.space
    width = R + 1
    dvec = dist_to_set(space, sub(space, [base]))
    bands: dict[int, list[int]] = {}
    for p in X.points:
        k = math.floor(Fraction(int(dvec[p]), space.den) / width)
        bands.setdefault(k, []).append(p)
    v1 = tuple(sub(space, bands[k]) for k in sorted(bands) if k % 2 == 0)
    v2 = tuple(sub(space, bands[k]) for k in sorted(bands) if k % 2 == 1)
    return v1, v2


def split_peel(X: Subspace, R) -> Split:
    """Peel off the least-index point; guaranteed one point of progress."""
    if len(X) == 1:
        return (X,), ()
    space = X.space
    a, rest = X.points[0], X.points[1:]
    return (sub(space, [a]),), (sub(space, rest),)


def split_exhaustive(X: Subspace, R, limit: int | None = None) -> Split:
    """Minimize the max piece diameter over all valid splits.

    Searches 2-colorings of the points with pieces taken as the R-components
    of each side (complete for the min-max-diameter objective). Ties prefer a
    genuine split over the whole member, then fewer pieces, then the
    lexicographically least piece list.
    """
    R = as_scale(R)
    cap = limit if limit is not None else size_limit()
    n = len(X)
    if n > cap:
        raise SizeLimitExceeded(f"exhaustive split over {n} points exceeds limit {cap}")
    space = X.space
    pts = X.points
    thr = space.thr_le(R)
    D = space.D

    def comps_of(side: tuple[int, ...]) -> list[tuple[int, ...]]:
        if not side:
            return []
        idx = np.asarray(side, dtype=np.int64)
        labels = _kernels.component_labels(D, idx, thr)
        groups: dict[int, list[int]] = {}
        for p, lab in zip(side, labels.tolist()):
            groups.setdefault(lab, []).append(p)
        return [tuple(g) for g in groups.values()]

    best_key = None
    best: Split | None = None
    for mask in range(2 ** (n - 1)):  # point 0 stays on side 1: colors are symmetric
        side1 = tuple(pts[i] for i in range(n) if i == 0 or not (mask >> (i - 1)) & 1)
        side2 = tuple(pts[i] for i in range(1, n) if (mask >> (i - 1)) & 1)
        p1, p2 = comps_of(side1), comps_of(side2)
        all_pieces = p1 + p2
        maxdiam = 0
        for g in all_pieces:
            d = _kernels.max_within(D, np.asarray(g, dtype=np.int64))
            if d > maxdiam:
                maxdiam = d
        trivial = len(all_pieces) == 1
        key = (maxdiam, trivial, len(all_pieces), tuple(sorted(p1)), tuple(sorted(p2)))
        if best_key is None or key < best_key:
            best_key = key
            best = (
                tuple(sub(space, g) for g in sorted(p1)),
                tuple(sub(space, g) for g in sorted(p2)),
            )
    assert best is not None
    return best


def split_stall(X: Subspace, R) -> Split:
    """Pass-through split; legal but makes no progress. For testing."""
    return (X,), ()


STRATEGIES: dict[str, Callable[..., Split]] = {
    "components": split_components,
    "radial": split_radial,
    "peel": split_peel,
    "exhaustive": split_exhaustive,
    "stall": split_stall,
}


def decompose_member(X: Subspace, R, strategy: str = "radial", **kwargs) -> Split:
    """One defender move: split a member into two R-disjoint piece families."""
    try:
        fn = STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; have {sorted(STRATEGIES)}")
    return fn(X, R, **kwargs)


def decompose_family(F: MetricFamily, R, B, strategy: str = "radial", **kwargs) -> RDecomposition:
    """Split every member; members already of diameter <= B pass through."""
    R = as_scale(R)
    B = as_fraction(B)
    splits: list[Split] = []
    for member in F.members:
        if member.diam() <= B:
            splits.append(((member,), ()))
        else:
            splits.append(decompose_member(member, R, strategy, **kwargs))
    return RDecomposition(F, R, tuple(splits), partition=True)


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionChain:
    space: FiniteMetricSpace
    schedule: tuple[Fraction, ...]
    steps: tuple[RDecomposition, ...]
    bound: Fraction
    complete: bool

    @property
    def depth(self) -> int:
        return len(self.steps)

    def final_family(self) -> MetricFamily:
        if not self.steps:
            return MetricFamily(self.space, (whole(self.space),))
        return self.steps[-1].pieces()


ChallengeSource = Sequence | Callable[[int, MetricFamily, Fraction | None], Fraction]


def _challenge_stream(challenges: ChallengeSource, max_steps: int):
    """Normalize a schedule or a challenger callable into a scale generator.

    Explicit schedules that run out are extended by doubling the last scale so
    strictly increasing challenges are always available up to max_steps.
    """
    if callable(challenges):
        def gen(i: int, fam: MetricFamily, prev: Fraction | None) -> Fraction:
            return as_scale(challenges(i, fam, prev))

        return gen
    fixed = [as_scale(c) for c in challenges]
    if not fixed:
        raise ScheduleError("empty schedule")
    if any(b <= a for a, b in zip(fixed, fixed[1:])):
        raise ScheduleError(f"schedule must be strictly increasing: {fixed}")

    def gen(i: int, fam: MetricFamily, prev: Fraction | None) -> Fraction:
        if i < len(fixed):
            return fixed[i]
        return prev * 2

    return gen


def solve_chain(
    space: FiniteMetricSpace,
    challenges: ChallengeSource,
    B,
    strategy: str = "radial",
    max_steps: int = 32,
    **kwargs,
) -> DecompositionChain:
    """Decompose {X} round by round until mesh <= B (complete) or steps run out."""
    B = as_fraction(B)
    if max_steps < 1:
        raise ScheduleError("max_steps must be >= 1")
    nxt = _challenge_stream(challenges, max_steps)
    fam = MetricFamily(space, (whole(space),))
    schedule: list[Fraction] = []
    steps: list[RDecomposition] = []
    prev: Fraction | None = None
    while mesh(fam) > B and len(steps) < max_steps:
        R = nxt(len(steps), fam, prev)
        if prev is not None and R <= prev:
            raise ScheduleError(f"challenge {R} does not exceed previous {prev}")
        d = decompose_family(fam, R, B, strategy, **kwargs)
        steps.append(d)
        schedule.append(R)
        fam = d.pieces()
        prev = R
    return DecompositionChain(space, tuple(schedule), tuple(steps), B, mesh(fam) <= B)


def verify_chain(c: DecompositionChain) -> Verdict:
    """Schedule monotone, each step valid at its scale, linkage, completeness."""
    out: list[Violation] = []
    if len(c.schedule) != len(c.steps):
        out.append(Violation("schedule", None, "schedule length differs from step count"))
    if any(b <= a for a, b in zip(c.schedule, c.schedule[1:])):
        out.append(Violation("schedule", None, f"not strictly increasing: {list(c.schedule)}"))
    expected = MetricFamily(c.space, (whole(c.space),))
    for i, step in enumerate(c.steps):
        if _members_multiset(step.parent) != _members_multiset(expected):
            out.append(Violation("linkage", i, "step parent differs from previous pieces"))
        if i < len(c.schedule) and step.R != c.schedule[i]:
            out.append(Violation("schedule", i, f"step uses {step.R}, schedule says {c.schedule[i]}"))
        sv = verify_decomposition(step)
        out.extend(sv.violations)
        expected = step.pieces()
    final_mesh = mesh(expected)
    if c.complete and final_mesh > c.bound:
        out.append(Violation("completeness", None, f"claimed complete but mesh {final_mesh} > {c.bound}"))
    if not c.complete and final_mesh <= c.bound:
        out.append(Violation("completeness", None, f"claimed partial but mesh {final_mesh} <= {c.bound}"))
    return Verdict(tuple(out))


def _members_multiset(F: MetricFamily):
    return tuple(sorted(m.points for m in F.members))


# ---------------------------------------------------------------------------
# exhaustive minimal-depth oracle
# ---------------------------------------------------------------------------

ORACLE_LIMIT = 6
INFINITE_DEPTH = math.inf


def _set_partitions(items: tuple[int, ...]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1 :]
        yield [[first]] + part


def _valid_splits(space: FiniteMetricSpace, pts: tuple[int, ...], R: Fraction):
    """All partition splits (V1, V2) with both sides R-disjoint, up to color swap."""
    thr = space.thr_le(R)
    D = space.D
    for blocks in _set_partitions(pts):
        blocks = [tuple(b) for b in blocks]
        k = len(blocks)
        conflict = [[False] * k for _ in range(k)]
        for i in range(k):
            for j in range(i + 1, k):
                d = _kernels.min_between(
                    D, np.asarray(blocks[i], dtype=np.int64), np.asarray(blocks[j], dtype=np.int64)
                )
                if d <= thr:
                    conflict[i][j] = conflict[j][i] = True
        # valid colorings = proper 2-colorings of the conflict graph
        color = [-1] * k
        comps: list[list[int]] = []
        ok = True
        for s in range(k):
            if color[s] != -1:
                continue
            comp = [s]
            color[s] = 0
            stack = [s]
            while stack:
                u = stack.pop()
                for v in range(k):
                    if conflict[u][v]:
                        if color[v] == -1:
                            color[v] = color[u] ^ 1
                            comp.append(v)
                            stack.append(v)
                        elif color[v] == color[u]:
                            ok = False
            comps.append(comp)
            if not ok:
                break
        if not ok:
            continue
        base = list(color)
        for flips in range(2 ** max(len(comps) - 1, 0)):  # first component fixed: colors symmetric
            col = list(base)
            for ci in range(1, len(comps)):
                if (flips >> (ci - 1)) & 1:
                    for b in comps[ci]:
                        col[b] ^= 1
            v1 = tuple(sorted(blocks[i] for i in range(k) if col[i] == 0))
            v2 = tuple(sorted(blocks[i] for i in range(k) if col[i] == 1))
            yield v1, v2


def minimal_depth_oracle(space: FiniteMetricSpace, schedule: Sequence, B) -> int | float:
    """Ground-truth minimal rounds to mesh <= B; exhaustive game tree, <= 6 points."""
    depth, _ = _oracle(space, schedule, B)
    return depth


def oracle_chain(space: FiniteMetricSpace, schedule: Sequence, B) -> DecompositionChain | None:
    """A depth-optimal chain realizing the oracle value (None if unreachable)."""
    _, chain = _oracle(space, schedule, B)
    return chain


def _oracle(space: FiniteMetricSpace, schedule: Sequence, B):
    if space.size > ORACLE_LIMIT:
        raise SizeLimitExceeded(f"oracle limited to {ORACLE_LIMIT} points, got {space.size}")
    scales = [as_scale(s) for s in schedule]
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ScheduleError("oracle schedule must be strictly increasing")
    B = as_fraction(B)
    D = space.D
    memo: dict[tuple[tuple[int, ...], int], tuple[float, Split | None]] = {}

    def rec(pts: tuple[int, ...], i: int) -> tuple[float, Split | None]:
        d = _kernels.max_within(D, np.asarray(pts, dtype=np.int64))
        if space.frac(d) <= B:
            return 0, None
        if i >= len(scales):
            return INFINITE_DEPTH, None
        key = (pts, i)
        if key in memo:
            return memo[key]
        memo[key] = (INFINITE_DEPTH, None)  # placeholder; every split advances i
        best: float = INFINITE_DEPTH
        best_split: Split | None = None
        for v1, v2 in _valid_splits(space, pts, scales[i]):
            worst: float = 0
            for piece in (*v1, *v2):
                sub_depth, _ = rec(piece, i + 1)
                worst = max(worst, sub_depth)
                if 1 + worst >= best:
                    break
            if 1 + worst < best:
                best = 1 + worst
                best_split = (
                    tuple(sub(space, g) for g in v1),
                    tuple(sub(space, g) for g in v2),
                )
        memo[key] = (best, best_split)
        return memo[key]

    root = whole(space).points
    depth, _ = rec(root, 0)
    if not math.isfinite(depth):
        return INFINITE_DEPTH, None

    # rebuild the realizing chain from memoized argmins
    fam = MetricFamily(space, (whole(space),))
    steps: list[RDecomposition] = []
    used: list[Fraction] = []
    for i in range(int(depth) if math.isfinite(depth) else 0):
        splits: list[Split] = []
        for member in fam.members:
            sub_depth, split = rec(member.points, i)
            if sub_depth == 0:
                splits.append(((member,), ()))
            else:
                assert split is not None
                splits.append(split)
        step = RDecomposition(fam, scales[i], tuple(splits), partition=True)
        steps.append(step)
        used.append(scales[i])
        fam = step.pieces()
    chain = (
        DecompositionChain(space, tuple(used), tuple(steps), B, mesh(fam) <= B)
        if math.isfinite(depth)
        else None
    )
    return depth, chain


# ---------------------------------------------------------------------------
# asymptotic-property-C covers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverSequence:
    space: FiniteMetricSpace
    schedule: tuple[Fraction, ...]
    covers: tuple[MetricFamily, ...]
    bound: Fraction


@dataclass(frozen=True)
class CoverFailure:
    space: FiniteMetricSpace
    schedule: tuple[Fraction, ...]
    covers: tuple[MetricFamily, ...]
    bound: Fraction
    uncovered: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return False


def verify_cover(c: CoverSequence) -> Verdict:
    out: list[Violation] = []
    if len(c.schedule) != len(c.covers):
        out.append(Violation("schedule", None, "one scale per cover family required"))
    if any(b <= a for a, b in zip(c.schedule, c.schedule[1:])):
        out.append(Violation("schedule", None, "not strictly increasing"))
    for i, (R, U) in enumerate(zip(c.schedule, c.covers)):
        dv = is_r_disjoint(U, R) if len(U) else None
        if dv is not None and not dv.ok:
            out.append(Violation("disjointness", i, f"members {dv.witness} at distance {dv.distance}"))
        m = mesh(U)
        if m > c.bound:
            out.append(Violation("mesh", i, f"mesh {m} > bound {c.bound}"))
    cv = is_cover(list(c.covers), whole(c.space))
    if not cv.ok:
        out.append(Violation("coverage", None, f"uncovered {list(cv.uncovered)}"))
    return Verdict(tuple(out))


def asc_cover(
    space: FiniteMetricSpace,
    schedule: Sequence,
    B,
    method: str = "greedy_components",
) -> CoverSequence | CoverFailure:
    """Build R_i-disjoint families of mesh <= B that jointly cover the space."""
    scales = [as_scale(s) for s in schedule]
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ScheduleError("cover schedule must be strictly increasing")
    B = as_fraction(B)
    if method == "greedy_components":
        covers = _asc_greedy(space, scales, B)
    elif method == "exhaustive":
        covers = _asc_exhaustive(space, scales, B)
    else:
        raise ValueError(f"unknown cover method {method!r}")
    if covers is None:  # exhaustive search failed outright
        return CoverFailure(space, tuple(scales), (), B, tuple(range(space.size)))
    seq = CoverSequence(space, tuple(scales[: len(covers)]), tuple(covers), B)
    cv = is_cover(list(seq.covers), whole(space))
    if cv.ok:
        return seq
    return CoverFailure(space, seq.schedule, seq.covers, B, cv.uncovered)


def _asc_greedy(space, scales, B) -> list[MetricFamily]:
    uncovered = set(range(space.size))
    covers: list[MetricFamily] = []
    for R in scales:
        comps = r_components(singletons(sub(space, sorted(uncovered))), R)
        admitted = tuple(c for c in comps.members if c.diam() <= B)
        covers.append(MetricFamily(space, admitted))
        for c in admitted:
            uncovered -= c.as_set
        if not uncovered:
            break
    return covers


def _asc_exhaustive(space, scales, B) -> list[MetricFamily] | None:
    cap = size_limit()
    if space.size > cap:
        raise SizeLimitExceeded(f"exhaustive cover over {space.size} points exceeds limit {cap}")
    thr_b = space.thr_le(B)
    D = space.D
    all_pts = tuple(range(space.size))

    def tiles_within(points: tuple[int, ...]) -> list[tuple[int, ...]]:
        """All subsets of diameter <= B, smallest-first for determinism."""
        out = []
        n = len(points)
        for mask in range(1, 2**n):
            tile = tuple(points[i] for i in range(n) if (mask >> i) & 1)
            ok = True
            for a in range(len(tile)):
                for b in range(a + 1, len(tile)):
                    if D[tile[a], tile[b]] > thr_b:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                out.append(tile)
        out.sort()
        return out

    def families(uncovered: tuple[int, ...], R: Fraction):
        """R-disjoint families of admissible tiles, larger-coverage-first, lazily."""
        thr = space.thr_le(R)
        tiles = sorted(tiles_within(uncovered), key=lambda t: (-len(t), t))

        def rec(start: int, chosen: list[tuple[int, ...]]):
            for t in range(start, len(tiles)):
                tile = tiles[t]
                good = True
                for c in chosen:
                    d = _kernels.min_between(
                        D, np.asarray(tile, dtype=np.int64), np.asarray(c, dtype=np.int64)
                    )
                    if d <= thr:
                        good = False
                        break
                if good:
                    chosen.append(tile)
                    yield from rec(t + 1, chosen)
                    chosen.pop()
            yield list(chosen)  # post-order: maximal extensions come first

        yield from rec(0, [])

    best: list[MetricFamily] | None = None
    dead: set[tuple[tuple[int, ...], int]] = set()

    def search(uncovered: tuple[int, ...], i: int, acc: list[MetricFamily]) -> bool:
        nonlocal best
        if not uncovered:
            best = acc
            return True
        if i >= len(scales) or (uncovered, i) in dead:
            return False
        for fam in families(uncovered, scales[i]):
            rest = tuple(p for p in uncovered if not any(p in t for t in fam))
            if search(rest, i + 1, acc + [MetricFamily(space, tuple(sub(space, t) for t in fam))]):
                return True
        dead.add((uncovered, i))
        return False

    if search(all_pts, 0, []):
        return best
    return None


def asc_to_chain(c: CoverSequence) -> DecompositionChain:
    """Peel the cover off one scale at a time: admitted tiles settle, the
    complement keeps decomposing against the next cover family."""
    space = c.space
    X = whole(space)
    fam = MetricFamily(space, (X,))
    steps: list[RDecomposition] = []
    complement: Subspace | None = X
    for R, U in zip(c.schedule, c.covers):
        target = complement
        splits: list[Split] = []
        for member in fam.members:
            if target is None or member.points != target.points:
                splits.append(((member,), ()))
                continue
            comp_set = target.as_set
            v1 = tuple(
                sub(space, sorted(t.as_set & comp_set)) for t in U.members if t.as_set & comp_set
            )
            taken = set().union(*(t.points for t in v1)) if v1 else set()
            rest = comp_set - taken
            v2 = (sub(space, sorted(rest)),) if rest else ()
            splits.append((v1, v2))
            complement = v2[0] if v2 else None
        step = RDecomposition(fam, R, tuple(splits), partition=True)
        steps.append(step)
        fam = step.pieces()
        if complement is None:
            break
    if complement is not None:
        raise ValueError("cover sequence does not cover the space")
    schedule = tuple(c.schedule[: len(steps)])
    return DecompositionChain(space, schedule, tuple(steps), c.bound, mesh(fam) <= c.bound)


# ---------------------------------------------------------------------------
# amalgamation
# ---------------------------------------------------------------------------

def amalgamate(U_k: MetricFamily, U_km1: MetricFamily, R_k, radius=None) -> MetricFamily:
    """Absorb members of the earlier family lying within R_k/4 of a later one.

    Each A picks up every B with d(A,B) < R_k/4 (A itself included); untouched
    members pass through; touching results are merged. The union of the output
    always equals the union of the inputs. An explicit radius overrides the
    default R_k/4 (amalgamate_play folds with the full later scale).
    """
    R_k = as_scale(R_k)
    if U_k.space is not U_km1.space:
        raise AmbientMismatch("amalgamation across different spaces")
    space = U_k.space
    if not U_km1.members:
        return U_k
    if not U_k.members:
        return U_km1
    radius = R_k / 4 if radius is None else as_scale(radius)
    thr = space.thr_lt(radius)  # d(A,B) < radius iff scaled distance <= thr
    absorbed = [False] * len(U_km1.members)
    enlarged: list[set[int]] = []
    for A in U_k.members:
        out = set(A.points)
        for bi, Bm in enumerate(U_km1.members):
            if _kernels.min_between(space.D, A.idx, Bm.idx) <= thr:
                out.update(Bm.points)
                absorbed[bi] = True
        enlarged.append(out)
    members = [sub(space, pts) for pts in enlarged]
    members.extend(Bm for bi, Bm in enumerate(U_km1.members) if not absorbed[bi])
    combined = MetricFamily(space, tuple(members))
    return _merge_touching(combined)


def _merge_touching(F: MetricFamily) -> MetricFamily:
    """Union members with intersecting point sets (set distance 0)."""
    m = len(F.members)
    if m <= 1:
        return F
    parent = list(range(m))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(m):
        for j in range(i + 1, m):
            if F.members[i].as_set & F.members[j].as_set:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, set[int]] = {}
    order: list[int] = []
    for i in range(m):
        r = find(i)
        if r not in groups:
            groups[r] = set()
            order.append(r)
        groups[r].update(F.members[i].points)
    return MetricFamily(F.space, tuple(sub(F.space, groups[r]) for r in order))


@dataclass(frozen=True)
class AmalgamationStage:
    index: int
    family: MetricFamily
    mesh: Fraction


@dataclass(frozen=True)
class AmalgamationResult:
    final: MetricFamily
    stages: tuple[AmalgamationStage, ...]


def amalgamate_play(covers: CoverSequence) -> AmalgamationResult:
    """Fold amalgamate from the last cover family down to the first, asserting
    at each stage: recorded mesh, R_i-disjointness, union equality. Returns the
    R_1-components of the last stage (an R_1-disjoint cover).

    Stages absorb at the full later scale R_{i+1} (not its quarter): with any
    strictly increasing schedule that radius strictly exceeds the target scale
    R_i, which is exactly what makes every cross pair land beyond R_i. A
    schedule whose R_{i+1} fails to exceed R_i is the configuration the stage
    check catches.
    """
    k = len(covers.covers)
    if k == 0:
        raise ValueError("empty cover sequence")
    space = covers.space
    current = covers.covers[-1]
    expected_union = set(current.union_points())
    stages: list[AmalgamationStage] = []
    for i in range(k - 1, 0, -1):  # build stage i from stage i+1 and U_i
        U_i = covers.covers[i - 1]
        current = amalgamate(current, U_i, covers.schedule[i], radius=covers.schedule[i])
        expected_union |= U_i.union_points()
        stage_mesh = mesh(current)
        stages.append(AmalgamationStage(i, current, stage_mesh))
        if len(current) > 1:
            dv = is_r_disjoint(current, covers.schedule[i - 1])
            if not dv.ok:
                a, b = dv.witness
                raise StageAssertionFailure(
                    i,
                    "r_disjoint",
                    (sorted(current.members[a].points), sorted(current.members[b].points), dv.distance),
                )
        if set(current.union_points()) != expected_union:
            raise StageAssertionFailure(
                i, "union", sorted(expected_union ^ set(current.union_points()))
            )
    final = r_components(current, covers.schedule[0]) if len(current) > 1 else current
    return AmalgamationResult(final, tuple(stages))


# ---------------------------------------------------------------------------
# annulus split and sum-step constructor
# ---------------------------------------------------------------------------

def annulus_split(Z: Subspace, X: Subspace, R) -> tuple[MetricFamily, MetricFamily]:
    """Distance bands of width R+1 around X inside Z, alternating families;
    family1 = {X} + odd bands, family2 = even bands."""
    R = as_scale(R)
    if Z.space is not X.space:
        raise AmbientMismatch("annulus operands in different spaces")
    if not X.as_set <= Z.as_set:
        raise ValueError("X must be a subset of Z")
    space = Z.space
    width = R + 1
    dvec = dist_to_set(space, X)
    bands: dict[int, list[int]] = {}
    for p in Z.points:
        d = Fraction(int(dvec[p]), space.den)
        if d == 0:
            continue  # p in X for discrete spaces
        j = math.ceil(d / width) - 1
        bands.setdefault(j, []).append(p)
    fam1 = [X] + [sub(space, bands[j]) for j in sorted(bands) if j % 2 == 1]
    fam2 = [sub(space, bands[j]) for j in sorted(bands) if j % 2 == 0]
    return MetricFamily(space, tuple(fam1)), MetricFamily(space, tuple(fam2))


def sum_theorem_step(
    X: Subspace, cover_family: MetricFamily, Y_r: Subspace, r
) -> tuple[RDecomposition, Verdict]:
    """One decomposition of X over {Y_r} + {M \\ Y_r}; passes iff the shaved
    family is r-disjoint."""
    r = as_scale(r)
    space = X.space
    if cover_family.union_points() != X.as_set:
        raise ValueError("cover family must union exactly to X")
    if not Y_r.as_set <= X.as_set:
        raise ValueError("Y_r must be a subset of X")
    v1 = (Y_r,)
    v2 = tuple(
        sub(space, sorted(M.as_set - Y_r.as_set))
        for M in cover_family.members
        if M.as_set - Y_r.as_set
    )
    d = RDecomposition(MetricFamily(space, (X,)), r, ((v1, v2),))
    return d, verify_decomposition(d)


# ---------------------------------------------------------------------------
# coarse pullbacks
# ---------------------------------------------------------------------------

def pullback_decomposition(f: CoarseMap, d: RDecomposition, R) -> RDecomposition:
    """Pull a target decomposition back along a coarse map.

    Requires d.R >= upper(R): target pieces further than upper(R) apart pull
    back to source pieces further than R apart.
    """
    R = as_scale(R)
    need = f.upper(R)
    if d.R < need:
        raise ControlError(f"target scale {d.R} below required minimum upper({R}) = {need}")
    src = f.source
    parent_members: list[Subspace] = []
    splits: list[Split] = []
    mapped: set[int] = set()
    for member, (v1, v2) in zip(d.parent.members, d.splits):
        pre = f.preimage_points(member)
        mapped.update(pre)
        if not pre:
            continue
        parent_members.append(sub(src, pre))
        pv1 = tuple(sub(src, pts) for pts in (f.preimage_points(p) for p in v1) if pts)
        pv2 = tuple(sub(src, pts) for pts in (f.preimage_points(p) for p in v2) if pts)
        splits.append((pv1, pv2))
    if len(mapped) != src.size:
        raise ControlError("some source points map outside the decomposed family")
    return RDecomposition(MetricFamily(src, tuple(parent_members)), R, tuple(splits), d.partition)


def pullback_chain(
    f: CoarseMap, c: DecompositionChain, schedule_src: Sequence
) -> DecompositionChain:
    """Pull back a target chain step by step; the source bound comes from the
    lower control: mesh_source <= sup{t : lower(t) <= mesh(target final)}."""
    scales = [as_scale(s) for s in schedule_src]
    if len(scales) != len(c.steps):
        raise ScheduleError("need one source scale per target step")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ScheduleError("source schedule must be strictly increasing")
    for i, (r_src, step) in enumerate(zip(scales, c.steps)):
        if step.R < f.upper(r_src):
            raise ControlError(
                f"step {i + 1}: target scale {step.R} below upper({r_src}) = {f.upper(r_src)}"
            )
    steps = [pullback_decomposition(f, step, r_src) for r_src, step in zip(scales, c.steps)]
    target_mesh = mesh(c.final_family())
    bound_src = f.lower.preimage_sup(target_mesh)
    final = steps[-1].pieces() if steps else MetricFamily(f.source, (whole(f.source),))
    return DecompositionChain(
        f.source, tuple(scales), tuple(steps), bound_src, mesh(final) <= bound_src
    )
