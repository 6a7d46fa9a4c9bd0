"""Brute-force reference implementations used only by the tests.

Everything here is written the slow, obvious way and shares no code with
the package beyond plain numpy.
"""

from __future__ import annotations

import itertools
from math import comb, factorial

import numpy as np
from scipy.optimize import minimize_scalar


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.standard_normal((d, rank or d)) + 1j * rng.standard_normal((d, rank or d))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def brute_embed(factors, dims) -> np.ndarray:
    """Entry-by-entry product of factors acting on party subsets."""
    n = len(dims)
    d = int(np.prod(dims))
    out = np.zeros((d, d), dtype=complex)
    multi = list(itertools.product(*[range(x) for x in dims]))
    for a, ia in enumerate(multi):
        for b, ib in enumerate(multi):
            val = 1.0 + 0j
            for mat, parties in factors:
                sub = [dims[q] for q in parties]
                ra = cb = 0
                for q, s in zip(parties, sub):
                    ra = ra * s + ia[q]
                    cb = cb * s + ib[q]
                val *= mat[ra, cb]
            out[a, b] = val
    assert sum(len(p) for _, p in factors) == n
    return out


def brute_partial_trace(rho: np.ndarray, dims, keep) -> np.ndarray:
    dims = list(dims)
    keep = list(keep)
    dk = int(np.prod([dims[q] for q in keep]))
    out = np.zeros((dk, dk), dtype=complex)
    multi = list(itertools.product(*[range(x) for x in dims]))
    for a, ia in enumerate(multi):
        for b, ib in enumerate(multi):
            if any(ia[q] != ib[q] for q in range(len(dims)) if q not in keep):
                continue
            ra = cb = 0
            for q in keep:
                ra = ra * dims[q] + ia[q]
                cb = cb * dims[q] + ib[q]
            out[ra, cb] += rho[a, b]
    return out


def brute_set_partitions(n: int) -> set[frozenset[frozenset[int]]]:
    """All set partitions of range(n) via every labelling, deduplicated."""
    out = set()
    for labels in itertools.product(range(n), repeat=n):
        groups: dict[int, set[int]] = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, set()).add(i)
        out.add(frozenset(frozenset(g) for g in groups.values()))
    return out


BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147]


def stirling2_formula(n: int, k: int) -> int:
    return sum((-1) ** j * comb(k, j) * (k - j) ** n for j in range(k + 1)) // factorial(k)


def grid_segment(q: np.ndarray, rho: np.ndarray, sigma: np.ndarray) -> tuple[float, float]:
    """Closest point on the segment by a grid scan refined with a bounded 1-d search."""
    def dist(s):
        return float(np.linalg.norm(q - (s * rho + (1 - s) * sigma)))

    grid = np.linspace(0.0, 1.0, 2001)
    vals = [dist(s) for s in grid]
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(dist, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    best = min([(res.fun, res.x), (vals[k], grid[k]), (dist(0.0), 0.0), (dist(1.0), 1.0)])
    return best[1], best[0]


def partial_transpose(rho: np.ndarray, dims, party: int) -> np.ndarray:
    n = len(dims)
    t = rho.reshape(list(dims) * 2)
    axes = list(range(2 * n))
    axes[party], axes[n + party] = axes[n + party], axes[party]
    return t.transpose(axes).reshape(rho.shape)


def ppt_threshold(rho: np.ndarray, sigma: np.ndarray, dims, tol: float = 1e-12) -> float:
    """Largest t for which t rho + (1-t) sigma has a PSD partial transpose (bisection)."""
    def ok(t):
        m = t * rho + (1 - t) * sigma
        return all(np.linalg.eigvalsh(partial_transpose(m, dims, q)).min() >= -1e-13 for q in range(len(dims)))

    lo, hi = 0.0, 1.0
    if ok(hi):
        return 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def finite_difference(f, x: np.ndarray, idx, h: float = 1e-6) -> np.ndarray:
    out = []
    for i in idx:
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        out.append((f(xp) - f(xm)) / (2 * h))
    return np.array(out)


def fidelity_pure(psi: np.ndarray, phi: np.ndarray) -> float:
    return float(abs(np.vdot(psi, phi)) ** 2)
