"""Hot distance-scan kernels over the scaled integer matrix.

Every finite metric space carries an int64 matrix D (distances multiplied by
the lcm of their denominators), so min/max/threshold scans here are exact.
Kernels are numba-compiled when available; set COARSEKIT_NO_NUMBA=1 to force
the pure-numpy fallback. Both paths are kept importable for the benchmark and
the equivalence tests.
"""

from __future__ import annotations

import os

import numpy as np


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


FORCE_NUMPY = _flag("COARSEKIT_NO_NUMBA")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

    def njit(*a, **k):  # type: ignore
        def wrap(f):
            return f

        if a and callable(a[0]):
            return a[0]
        return wrap


USE_NUMBA = HAVE_NUMBA and not FORCE_NUMPY


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def min_between_np(D: np.ndarray, ia: np.ndarray, ib: np.ndarray) -> int:
    return int(D[np.ix_(ia, ib)].min())


def max_within_np(D: np.ndarray, ia: np.ndarray) -> int:
    if ia.size < 2:
        return 0
    return int(D[np.ix_(ia, ia)].max())


def min_to_set_np(D: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return D[:, cols].min(axis=1)


def component_labels_np(D: np.ndarray, idx: np.ndarray, thr: int) -> np.ndarray:
    from scipy.sparse.csgraph import connected_components

    adj = D[np.ix_(idx, idx)] <= thr
    _, labels = connected_components(adj, directed=False)
    return labels.astype(np.int64)


def l1_rows_np(W: np.ndarray, il: np.ndarray, jl: np.ndarray) -> np.ndarray:
    return np.abs(W[il] - W[jl]).sum(axis=1)


# ---------------------------------------------------------------------------
# numba implementations (identical results, loop form)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _min_between_nb(D, ia, ib):  # pragma: no cover - compiled
    best = D[ia[0], ib[0]]
    for a in ia:
        for b in ib:
            v = D[a, b]
            if v < best:
                best = v
    return best


@njit(cache=True)
def _max_within_nb(D, ia):  # pragma: no cover - compiled
    best = 0
    m = ia.size
    for p in range(m):
        for q in range(p + 1, m):
            v = D[ia[p], ia[q]]
            if v > best:
                best = v
    return best


@njit(cache=True)
def _min_to_set_nb(D, cols):  # pragma: no cover - compiled
    n = D.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        best = D[i, cols[0]]
        for c in cols:
            v = D[i, c]
            if v < best:
                best = v
        out[i] = best
    return out


@njit(cache=True)
def _component_labels_nb(D, idx, thr):  # pragma: no cover - compiled
    m = idx.size
    parent = np.arange(m)
    for a in range(m):
        for b in range(a + 1, m):
            if D[idx[a], idx[b]] <= thr:
                ra = a
                while parent[ra] != ra:
                    ra = parent[ra]
                rb = b
                while parent[rb] != rb:
                    rb = parent[rb]
                if ra < rb:
                    parent[rb] = ra
                elif rb < ra:
                    parent[ra] = rb
    labels = np.empty(m, np.int64)
    for a in range(m):
        r = a
        while parent[r] != r:
            r = parent[r]
        labels[a] = r
    return labels


@njit(cache=True)
def _l1_rows_nb(W, il, jl):  # pragma: no cover - compiled
    k = il.size
    out = np.empty(k, np.float64)
    for p in range(k):
        s = 0.0
        i = il[p]
        j = jl[p]
        for c in range(W.shape[1]):
            d = W[i, c] - W[j, c]
            s += d if d >= 0.0 else -d
        out[p] = s
    return out


def min_between_nb(D, ia, ib) -> int:
    return int(_min_between_nb(D, ia, ib))


def max_within_nb(D, ia) -> int:
    if ia.size < 2:
        return 0
    return int(_max_within_nb(D, ia))


def min_to_set_nb(D, cols) -> np.ndarray:
    return _min_to_set_nb(D, cols)


def component_labels_nb(D, idx, thr) -> np.ndarray:
    return _component_labels_nb(D, idx, np.int64(thr))


def l1_rows_nb(W, il, jl) -> np.ndarray:
    return _l1_rows_nb(W, il, jl)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    min_between = min_between_nb
    max_within = max_within_nb
    min_to_set = min_to_set_nb
    _component_labels = component_labels_nb
    l1_rows = l1_rows_nb
else:
    min_between = min_between_np
    max_within = max_within_np
    min_to_set = min_to_set_np
    _component_labels = component_labels_np
    l1_rows = l1_rows_np


def component_labels(D: np.ndarray, idx: np.ndarray, thr: int) -> np.ndarray:
    """Dense component labels in first-occurrence order (0, 1, ...)."""
    raw = _component_labels(D, idx, thr)
    remap: dict[int, int] = {}
    out = np.empty(raw.size, np.int64)
    for p, r in enumerate(raw.tolist()):
        if r not in remap:
            remap[r] = len(remap)
        out[p] = remap[r]
    return out
