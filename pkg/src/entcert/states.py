"""Benchmark states, noise endpoints and the JSON state file format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from math import comb, prod
from pathlib import Path
from typing import Sequence

import numpy as np

from .linalg import DensityMatrix, ValidationError, embed_product

KINDS = ("ghz", "w", "dicke", "cluster")


def ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def ghz_vector(n: int) -> np.ndarray:
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def dicke_vector(n: int, k: int) -> np.ndarray:
    v = np.zeros(2 ** n, dtype=complex)
    for ones in combinations(range(n), k):
        v[sum(1 << (n - 1 - q) for q in ones)] = 1.0
    return v / np.sqrt(comb(n, k))


def cluster_vector(n: int) -> np.ndarray:
    """Linear (open chain) cluster state: CZ on neighbours applied to |+>^n."""
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    sign = np.sum(bits[:, :-1] & bits[:, 1:], axis=1) % 2
    return np.where(sign, -1.0, 1.0).astype(complex) / np.sqrt(2 ** n)


def make_state(kind: str, n: int, k: int | None = None) -> DensityMatrix:
    """Pure-state projector of a named n-qubit state.

    ``kind`` is ``ghz``, ``w``, ``dicke`` (needs ``k`` excitations) or
    ``cluster`` (linear chain).
    """
    if n < 2:
        raise ValueError("need at least two qubits")
    if kind == "ghz":
        psi = ghz_vector(n)
    elif kind == "w":
        psi = dicke_vector(n, 1)
    elif kind == "dicke":
        if k is None or not 1 <= k <= n - 1:
            raise ValueError(f"Dicke excitation number must be in [1, {n - 1}], got {k}")
        psi = dicke_vector(n, k)
    elif kind in ("cluster", "cluster-linear"):
        psi = cluster_vector(n)
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    return DensityMatrix(np.outer(psi, psi.conj()), (2,) * n)


@dataclass(frozen=True)
class NoiseModel:
    """Endpoint sigma of the mixture t*rho + (1-t)*sigma."""

    endpoint: DensityMatrix
    name: str = "white"

    @classmethod
    def white(cls, dims: Sequence[int]) -> "NoiseModel":
        return cls(DensityMatrix.maximally_mixed(dims), "white")

    @classmethod
    def biased_product(cls, n: int, p0: float = 0.75) -> "NoiseModel":
        """Product of identical single-qubit states p0|0><0| + (1-p0)|1><1|."""
        tau = np.diag([p0, 1 - p0]).astype(complex)
        sigma = embed_product([(tau, (q,)) for q in range(n)], (2,) * n)
        return cls(sigma, "biased-product")


def mix(rho: DensityMatrix, t: float, noise: NoiseModel | None = None) -> DensityMatrix:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"mixing weight t={t} outside [0, 1]")
    sigma = (noise or NoiseModel.white(rho.dims)).endpoint
    if sigma.dims != rho.dims:
        raise ValueError(f"noise layout {sigma.dims} does not match state {rho.dims}")
    return DensityMatrix(t * rho.data + (1 - t) * sigma.data, rho.dims)


def matrix_to_json(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def matrix_from_json(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"matrix must be a square array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_dict(rho: DensityMatrix) -> dict:
    return {"dims": list(rho.dims), "matrix": matrix_to_json(rho.data)}


def save_state(rho: DensityMatrix, path: str | Path) -> None:
    # float repr round-trips exactly (at most 17 significant digits)
    Path(path).write_text(json.dumps(state_to_dict(rho)))


def load_state(path: str | Path) -> DensityMatrix:
    """Read a JSON state file and enforce the density-matrix invariants."""
    try:
        doc = json.loads(Path(path).read_text())
        dims = [int(x) for x in doc["dims"]]
        mat = matrix_from_json(doc["matrix"])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"cannot parse state file {path}: {exc}") from exc
    if mat.shape[0] != prod(dims):
        raise ValidationError("layout", f"matrix of size {mat.shape[0]} does not match dims {dims}")
    return DensityMatrix.validated(mat, dims)
