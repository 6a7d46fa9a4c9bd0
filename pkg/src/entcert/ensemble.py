"""Polytope of pure product states and its two-stage gradient descent.

The polytope is stored as blocks of vertices sharing a partition. Each vertex
carries one unnormalized complex amplitude vector per part; the realized
vertex is the product of the normalized projectors. Mixture weights are
``p_i = w_i^2 / sum_j w_j^2``.

Stage 1 pulls the mixture toward the segment between the target state and
the noise endpoint, stage 2 pulls it toward the target itself while a
periodic guard sends it back to stage 1 whenever it drifts further than
``r`` from the segment.
"""

from __future__ import annotations

import csv
import logging
import string
from dataclasses import dataclass, field
from math import prod
from typing import Iterator, Sequence, TextIO

import numpy as np

from .linalg import DensityMatrix, segment_projection_array
from .partitions import Partition, StructureFamily

log = logging.getLogger(__name__)

MIN_NORM = 1e-8


@dataclass
class GdConfig:
    max_iterations: int = 1000
    step_size: float = 0.01
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    guard_period: int = 50
    window: int = 200
    tol: float = 1e-10
    r_relative: float = 0.01
    threshold_r: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 0 or self.guard_period < 1 or self.window < 1:
            raise ValueError("iteration counts must be positive")
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if self.optimizer not in ("plain", "momentum", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class VertexBlock:
    partition: Partition
    amps: list[np.ndarray]  # per part: (count, dim of part), complex

    @property
    def count(self) -> int:
        return self.amps[0].shape[0]


@dataclass(frozen=True)
class VertexParams:
    partition: Partition
    amps: tuple[np.ndarray, ...]


@dataclass
class Ensemble:
    dims: tuple[int, ...]
    blocks: list[VertexBlock]
    weights: np.ndarray
    r: float | None = None

    def __len__(self) -> int:
        return sum(b.count for b in self.blocks)

    @property
    def probabilities(self) -> np.ndarray:
        w2 = self.weights ** 2
        return w2 / w2.sum()

    def vertices(self) -> Iterator[VertexParams]:
        for b in self.blocks:
            for i in range(b.count):
                yield VertexParams(b.partition, tuple(a[i] for a in b.amps))

    def copy(self) -> "Ensemble":
        return Ensemble(self.dims, [VertexBlock(b.partition, [a.copy() for a in b.amps]) for b in self.blocks],
                        self.weights.copy(), self.r)

    def pack(self) -> np.ndarray:
        """Flatten to a real vector: weights, then re/im interleaved amplitudes."""
        chunks = [self.weights.astype(float)]
        for b in self.blocks:
            chunks.extend(np.ascontiguousarray(a).view(np.float64).ravel() for a in b.amps)
        return np.concatenate(chunks)

    def unpack(self, x: np.ndarray) -> "Ensemble":
        out = self.copy()
        k = len(self.weights)
        out.weights = np.array(x[:k], dtype=float)
        for b in out.blocks:
            for j, a in enumerate(b.amps):
                m = a.size * 2
                b.amps[j] = np.array(x[k:k + m]).view(np.complex128).reshape(a.shape)
                k += m
        return out


def init_ensemble(fam: StructureFamily, per_partition: int, seed: int = 0,
                  dims: Sequence[int] | None = None) -> Ensemble:
    """Random polytope: ``per_partition`` Haar-random product vertices per maximal partition."""
    if per_partition < 1:
        raise ValueError("per_partition must be >= 1")
    if not fam.maximal_partitions:
        raise ValueError("structure family is empty")
    dims = tuple(dims) if dims is not None else (2,) * fam.spec.n
    if len(dims) != fam.spec.n:
        raise ValueError(f"layout {dims} does not have {fam.spec.n} parties")
    rng = np.random.default_rng(seed)
    blocks = []
    for p in fam.maximal_partitions:
        amps = []
        for part in p.parts:
            dx = prod(dims[q] for q in part)
            amps.append(rng.standard_normal((per_partition, dx)) + 1j * rng.standard_normal((per_partition, dx)))
        blocks.append(VertexBlock(p, amps))
    total = per_partition * len(fam.maximal_partitions)
    return Ensemble(dims, blocks, np.ones(total))


_LETTERS = string.ascii_lowercase


def _subscripts(block: VertexBlock, n: int) -> tuple[list[str], str]:
    ins = ["N" + "".join(_LETTERS[q] for q in part) for part in block.partition.parts]
    return ins, "N" + _LETTERS[:n]


def _normalized(block: VertexBlock) -> tuple[list[np.ndarray], list[np.ndarray]]:
    norms = [np.linalg.norm(a, axis=1) for a in block.amps]
    return [a / nr[:, None] for a, nr in zip(block.amps, norms)], norms


def _product_vectors(block: VertexBlock, units: list[np.ndarray], dims: tuple[int, ...]) -> np.ndarray:
    ins, out = _subscripts(block, len(dims))
    ops = [u.reshape((u.shape[0],) + tuple(dims[q] for q in part))
           for u, part in zip(units, block.partition.parts)]
    psi = np.einsum(",".join(ins) + "->" + out, *ops)
    return psi.reshape(psi.shape[0], -1)


def product_vectors(e: Ensemble) -> np.ndarray:
    """All vertex state vectors stacked as rows, shape (vertices, d)."""
    return np.concatenate([_product_vectors(b, _normalized(b)[0], e.dims) for b in e.blocks])


def realize(e: Ensemble) -> DensityMatrix:
    psi = product_vectors(e)
    mat = (psi.T * e.probabilities) @ psi.conj()
    return DensityMatrix((mat + mat.conj().T) / 2, e.dims)


def _target(kind: str, mix: np.ndarray, rho: np.ndarray, sigma: np.ndarray | None) -> tuple[np.ndarray, float]:
    """Point the loss pulls toward, and the segment distance of ``mix``."""
    if kind == "segment":
        s, dist = segment_projection_array(mix, rho, sigma)
        return s * rho + (1 - s) * sigma, dist
    if kind == "target":
        return rho, float("nan")
    raise ValueError(f"unknown loss kind {kind!r}")


def loss_stage1(e: Ensemble, rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Squared Frobenius distance from the mixture to the segment [sigma, rho]."""
    _, dist = segment_projection_array(realize(e).data, rho.data, sigma.data)
    return dist ** 2


def loss_stage2(e: Ensemble, rho: DensityMatrix) -> float:
    return float(np.linalg.norm(realize(e).data - rho.data) ** 2)


def _loss_and_grad(e: Ensemble, kind: str, rho: np.ndarray, sigma: np.ndarray | None):
    units, norms = zip(*(_normalized(b) for b in e.blocks))
    psis = [_product_vectors(b, u, e.dims) for b, u in zip(e.blocks, units)]
    psi = np.concatenate(psis)
    p = e.probabilities
    mix = (psi.T * p) @ psi.conj()
    mix = (mix + mix.conj().T) / 2
    target, segdist = _target(kind, mix, rho, sigma)
    resid = mix - target
    loss = float(np.vdot(resid, resid).real)
    g_mat = 2 * resid
    gv = psi @ g_mat.T                      # rows: G psi_i
    g = np.einsum("ij,ij->i", psi.conj(), gv).real  # <psi_i|G|psi_i>

    w = e.weights
    wsum = np.sum(w ** 2)
    grad_w = 2 * w / wsum * (g - p @ g)

    grads = []
    n = len(e.dims)
    start = 0
    for b, us, nrm in zip(e.blocks, units, norms):
        cnt = b.count
        gb = g[start:start + cnt]
        pb = p[start:start + cnt]
        v = gv[start:start + cnt].reshape((cnt,) + e.dims)
        ins, out = _subscripts(b, n)
        part_grads = []
        for j, part in enumerate(b.partition.parts):
            others = [k for k in range(len(b.partition.parts)) if k != j]
            ops = [v] + [us[k].conj().reshape((cnt,) + tuple(e.dims[q] for q in b.partition.parts[k]))
                         for k in others]
            subs = ",".join([out] + [ins[k] for k in others]) + "->" + ins[j]
            kv = np.einsum(subs, *ops).reshape(cnt, -1) if others else gv[start:start + cnt]
            gz = 2 * pb[:, None] * (kv - gb[:, None] * us[j]) / nrm[j][:, None]
            part_grads.append(gz)
        grads.append(VertexBlock(b.partition, part_grads))
        start += cnt
    grad = Ensemble(e.dims, grads, grad_w, e.r)
    return loss, grad, segdist, mix


def gradient(e: Ensemble, kind: str, rho: DensityMatrix, sigma: DensityMatrix | None = None) -> Ensemble:
    """Exact gradient of the stage-1 (``kind="segment"``) or stage-2 (``"target"``) loss.

    The returned ensemble holds d loss / d weights in ``weights`` and, for each
    amplitude, ``d/dRe z + 1j * d/dIm z``.
    """
    sig = sigma.data if sigma is not None else None
    return _loss_and_grad(e, kind, rho.data, sig)[1]


@dataclass
class GdResult:
    ensemble: Ensemble
    converged: bool
    stage1_loss: float
    stage2_loss: float
    segment_distance: float
    stage1_iterations: int
    stage2_iterations: int
    trace: list[tuple[int, int, float, float]] = field(default_factory=list)


class _Optimizer:
    def __init__(self, cfg: GdConfig, size: int):
        self.cfg = cfg
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.k = 0

    def step(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        c = self.cfg
        self.k += 1
        if c.optimizer == "plain":
            return x - c.step_size * g
        self.m = c.beta1 * self.m + (1 - c.beta1) * g
        if c.optimizer == "momentum":
            return x - c.step_size * self.m
        self.v = c.beta2 * self.v + (1 - c.beta2) * g * g
        mhat = self.m / (1 - c.beta1 ** self.k)
        vhat = self.v / (1 - c.beta2 ** self.k)
        return x - c.step_size * mhat / (np.sqrt(vhat) + 1e-12)


def _rerandomize(e: Ensemble, rng: np.random.Generator) -> None:
    for b in e.blocks:
        for a in b.amps:
            bad = np.linalg.norm(a, axis=1) < MIN_NORM
            if bad.any():
                a[bad] = rng.standard_normal((bad.sum(), a.shape[1])) + 1j * rng.standard_normal((bad.sum(), a.shape[1]))
    if np.sum(e.weights ** 2) < MIN_NORM:
        e.weights = np.ones_like(e.weights)


def run(e: Ensemble, rho: DensityMatrix, sigma: DensityMatrix, cfg: GdConfig | None = None,
        trace_file: TextIO | None = None) -> GdResult:
    """Two-stage descent; deterministic for fixed inputs and ``cfg.seed``."""
    cfg = cfg or GdConfig()
    rho_m, sig_m = rho.data, sigma.data
    scale = float(np.linalg.norm(rho_m - sig_m))
    e = e.copy()
    if e.r is None:
        e.r = cfg.threshold_r if cfg.threshold_r is not None else cfg.r_relative * scale
    rng = np.random.default_rng(cfg.seed)
    writer = csv.writer(trace_file) if trace_file is not None else None
    if writer:
        writer.writerow(["iteration", "stage", "loss", "segment_distance"])
    trace: list[tuple[int, int, float, float]] = []

    def record(it, stage, loss, dist):
        trace.append((it, stage, loss, dist))
        if writer:
            writer.writerow([it, stage, f"{loss:.17g}", f"{dist:.17g}"])

    if scale == 0.0:
        # target already on the endpoint; nothing to descend
        return GdResult(e, True, 0.0, 0.0, 0.0, 0, 0, trace)

    it1 = it2 = 0
    entry = 0  # stage-1 iterations since the last (re-)entry
    stage = 1
    opts = {1: _Optimizer(cfg, e.pack().size), 2: _Optimizer(cfg, e.pack().size)}
    recent: list[float] = []
    segdist = float("inf")
    converged = True
    feasible: Ensemble | None = None  # last iterate known to be within r of the segment
    while True:
        if stage == 1:
            loss, grad, segdist, _ = _loss_and_grad(e, "segment", rho_m, sig_m)
            record(it1 + it2, 1, loss, segdist)
            if segdist <= e.r:
                feasible = e
                if it2 >= cfg.max_iterations:
                    break
                stage, recent = 2, []
                continue
            if entry >= cfg.max_iterations:
                if feasible is not None:
                    # re-entry failed to recover; fall back to the last feasible iterate
                    e = feasible
                    break
                converged = False
                log.warning("stage 1 hit %d iterations with segment distance %.3g > r=%.3g",
                            cfg.max_iterations, segdist, e.r)
                break
            it1 += 1
            entry += 1
        else:
            if it2 % cfg.guard_period == 0 or it2 >= cfg.max_iterations:
                _, segdist = segment_projection_array(realize(e).data, rho_m, sig_m)
                if segdist > e.r:
                    stage, entry = 1, 0
                    continue
                feasible = e
                if it2 >= cfg.max_iterations:
                    break
            loss, grad, _, _ = _loss_and_grad(e, "target", rho_m, sig_m)
            record(it1 + it2, 2, loss, float("nan"))
            recent.append(loss)
            if len(recent) > cfg.window:
                if recent[-cfg.window - 1] - loss < cfg.tol:
                    # stalled: finish with a guard check at the current point
                    it2 = cfg.max_iterations
                    continue
                recent.pop(0)
            it2 += 1
        e = e.unpack(opts[stage].step(e.pack(), grad.pack()))
        _rerandomize(e, rng)

    mix = realize(e).data
    _, segdist = segment_projection_array(mix, rho_m, sig_m)
    return GdResult(e, converged, segdist ** 2, float(np.linalg.norm(mix - rho_m) ** 2), segdist,
                    it1, it2, trace)
