"""Dense Hermitian matrix algebra over tensor-product party layouts.

Parties are indexed from 0 inside the library. A matrix over parties with
local dimensions ``dims`` uses the usual Kronecker ordering, party 0 being the
most significant index.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


class LayoutError(ValueError):
    """Raised when matrices or party subsets do not fit a layout."""


class ValidationError(ValueError):
    """A density-matrix invariant failed; ``check`` names which one."""

    def __init__(self, check: str, message: str):
        super().__init__(f"{check}: {message}")
        self.check = check


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A d x d complex matrix together with its party layout.

    Instances are not validated on construction; operators with relaxed
    trace (SDP blocks) share this type. Use :meth:`validated` for states.
    """

    data: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(x) for x in self.dims)
        object.__setattr__(self, "dims", dims)
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", data)
        if not dims or any(x < 2 for x in dims):
            raise LayoutError(f"local dimensions must be >= 2, got {dims}")
        d = prod(dims)
        if data.shape != (d, d):
            raise LayoutError(f"matrix shape {data.shape} does not match dims {dims}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return len(self.dims)

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def check(self, trace_one: bool = True) -> None:
        """Raise :class:`ValidationError` if an invariant fails."""
        a = self.data
        asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
        if asym > HERMITIAN_TOL:
            raise ValidationError("hermitian", f"max |A - A^dag| = {asym:.3e}")
        tr = np.trace(a)
        if trace_one and abs(tr - 1) > TRACE_TOL:
            raise ValidationError("trace", f"trace = {tr.real:.12g}, expected 1")
        lam = np.linalg.eigvalsh((a + a.conj().T) / 2)[0]
        if lam < -PSD_TOL:
            raise ValidationError("psd", f"smallest eigenvalue {lam:.3e}")

    @classmethod
    def validated(cls, data, dims, hermitize: bool = True) -> "DensityMatrix":
        """Build a state, symmetrizing tiny asymmetries and checking invariants."""
        rho = cls(data, dims)
        a = rho.data
        asym = np.max(np.abs(a - a.conj().T))
        if asym > HERMITIAN_TOL:
            raise ValidationError("hermitian", f"max |A - A^dag| = {asym:.3e}")
        if hermitize:
            rho = cls((a + a.conj().T) / 2, rho.dims)
        rho.check()
        return rho

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> "DensityMatrix":
        d = prod(dims)
        return cls(np.eye(d) / d, tuple(dims))

    @classmethod
    def pure(cls, psi, dims: Sequence[int]) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), tuple(dims))


@dataclass(frozen=True)
class SegmentProjection:
    s: float
    distance: float


def _same_layout(a: DensityMatrix, b: DensityMatrix) -> None:
    if a.dims != b.dims:
        raise LayoutError(f"layout mismatch {a.dims} vs {b.dims}")


def tensor_product(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(np.kron(a.data, b.data), a.dims + b.dims)


def permute_parties(mat: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output party ``j`` is input party ``order[j]``."""
    n = len(dims)
    t = mat.reshape(tuple(dims) * 2)
    axes = list(order) + [n + k for k in order]
    d = mat.shape[0]
    return t.transpose(axes).reshape(d, d)


def _check_cover(subsets: Sequence[Sequence[int]], n: int) -> list[int]:
    flat = [int(p) for s in subsets for p in s]
    if any(len(s) == 0 for s in subsets):
        raise LayoutError("empty party subset")
    if sorted(flat) != list(range(n)):
        raise LayoutError(f"subsets {subsets} do not partition parties 0..{n - 1}")
    return flat


def embed_product(factors: Sequence[tuple[DensityMatrix | np.ndarray, Sequence[int]]],
                  dims: Sequence[int]) -> DensityMatrix:
    """Kronecker product of factors living on disjoint party subsets.

    ``factors`` is a list of ``(matrix, parties)``; the parties of all factors
    must partition ``range(len(dims))``. The result is expressed in canonical
    party order by index remapping (no permutation matrices).
    """
    dims = tuple(int(x) for x in dims)
    subsets = [tuple(p) for _, p in factors]
    concat = _check_cover(subsets, len(dims))
    out = np.ones((1, 1), dtype=complex)
    for mat, parties in factors:
        m = mat.data if isinstance(mat, DensityMatrix) else np.asarray(mat, dtype=complex)
        want = prod(dims[p] for p in parties)
        if m.shape != (want, want):
            raise LayoutError(f"factor on parties {tuple(parties)} has shape {m.shape}, expected {want}")
        if isinstance(mat, DensityMatrix) and mat.dims != tuple(dims[p] for p in parties):
            raise LayoutError(f"factor layout {mat.dims} does not match parties {tuple(parties)}")
        out = np.kron(out, m)
    # position of canonical party j inside the concatenated order
    where = np.argsort(concat)
    cdims = [dims[p] for p in concat]
    return DensityMatrix(permute_parties(out, cdims, where), dims)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace out every party not in ``keep``; kept parties stay in ascending order."""
    keep = sorted(int(k) for k in keep)
    n, dims = rho.n, rho.dims
    if not keep or keep[0] < 0 or keep[-1] >= n or len(set(keep)) != len(keep):
        raise LayoutError(f"bad party subset {keep}")
    drop = [k for k in range(n) if k not in keep]
    t = rho.data.reshape(dims * 2)
    order = keep + drop + [n + k for k in keep] + [n + k for k in drop]
    dk = prod(dims[k] for k in keep)
    dd = prod(dims[k] for k in drop)
    t = t.transpose(order).reshape(dk, dd, dk, dd)
    return DensityMatrix(np.einsum("ajbj->ab", t), tuple(dims[k] for k in keep))


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real Hilbert-Schmidt inner product tr(a^dag b) for Hermitian arguments."""
    return float(np.vdot(a, b).real)


def frobenius_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _same_layout(a, b)
    return float(np.linalg.norm(a.data - b.data))


def segment_projection(q: DensityMatrix, rho: DensityMatrix, sigma: DensityMatrix) -> SegmentProjection:
    """Closest point to ``q`` on the segment ``s*rho + (1-s)*sigma``, s in [0, 1]."""
    _same_layout(q, rho)
    _same_layout(q, sigma)
    s, dist = segment_projection_array(q.data, rho.data, sigma.data)
    return SegmentProjection(s, dist)


def segment_projection_array(q: np.ndarray, rho: np.ndarray, sigma: np.ndarray) -> tuple[float, float]:
    diff = rho - sigma
    nrm2 = hs_inner(diff, diff)
    if nrm2 <= 1e-28:
        raise ValueError("segment endpoints coincide")
    s = min(1.0, max(0.0, hs_inner(q - sigma, diff) / nrm2))
    return s, float(np.linalg.norm(q - sigma - s * diff))


def clip_eigenvalues(w: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    if w.size and w.min() < -tol:
        raise ValidationError("psd", f"eigenvalue {w.min():.3e} below -{tol:g}")
    return np.clip(w, 0.0, None)


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    w = clip_eigenvalues(w)
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """(tr sqrt(sqrt(a) b sqrt(a)))^2, with tiny negative eigenvalues clipped."""
    _same_layout(a, b)
    sa = psd_sqrt(a.data)
    bm = (b.data + b.data.conj().T) / 2
    clip_eigenvalues(np.linalg.eigvalsh(bm))
    m = sa @ bm @ sa
    w = np.clip(np.linalg.eigvalsh((m + m.conj().T) / 2), 0.0, None)
    return float(min(1.0, np.sum(np.sqrt(w)) ** 2))


# Orthonormal Hermitian basis of d x d matrices: E_jj, (E_jk + E_kj)/sqrt2 and
# i(E_jk - E_kj)/sqrt2 for j < k. Coordinates are the d^2 real numbers
# <H_m, X>: X_jj, then sqrt2 Re X_jk, then sqrt2 Im X_jk (upper triangle).

SQRT2 = np.sqrt(2.0)


def herm_coords(x: np.ndarray) -> np.ndarray:
    d = x.shape[0]
    iu = np.triu_indices(d, 1)
    up = x[iu]
    return np.concatenate([np.diagonal(x).real, SQRT2 * up.real, SQRT2 * up.imag])


def from_herm_coords(c: np.ndarray, d: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    k = d * (d - 1) // 2
    out = np.diag(c[:d]).astype(complex)
    iu = np.triu_indices(d, 1)
    vals = (c[d:d + k] + 1j * c[d + k:]) / SQRT2
    out[iu] = vals
    out[(iu[1], iu[0])] = vals.conj()
    return out
