"""Max-t semidefinite program over a polytope with one free part per vertex.

Every vertex is a product of fixed density matrices over the parts of its
partition, except for one *free* part whose (unnormalized) block ``tau_i`` is
an SDP variable. The program

    maximize t  s.t.  t*rho + (1-t)*sigma = sum_i embed(fixed_i (x) tau_i),
                      tau_i >= 0,  0 <= t <= 1

is written as d^2 real equalities, one per element of an orthonormal
Hermitian basis (see :func:`entcert.linalg.herm_coords`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as cartesian
from math import prod
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .linalg import DensityMatrix, from_herm_coords, herm_coords
from .partitions import Partition, free_part_order

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-6
PSD_BLOCK_TOL = 1e-8


@dataclass
class SdpVertex:
    """A vertex during the SDP phase: one density matrix per part.

    ``start`` is the index (into ``partition.parts``) of the part freed in
    round 0; ``None`` means the largest part.
    """

    partition: Partition
    factors: list[np.ndarray]
    start: int | None = None

    def rotation(self) -> list[tuple[int, ...]]:
        if self.start is None:
            return free_part_order(self.partition)
        parts = self.partition.parts
        return [parts[(self.start + r) % len(parts)] for r in range(len(parts))]


def select_free_part(v, round: int) -> tuple[int, ...]:
    """Part of ``v`` whose block is optimized in sweep ``round``.

    Round 0 frees the largest part (ties go to the part with the lowest
    party), later rounds rotate cyclically through the parts.
    """
    order = v.rotation() if hasattr(v, "rotation") else free_part_order(v.partition)
    return order[round % len(order)]


def kkt_bytes(block_sizes: Sequence[int], d: int) -> int:
    """Rough peak memory of the Clarabel factorization for complex blocks of the given sizes.

    Each block's real 2m x 2m svec couples densely to all d^2 equality rows,
    so the factor holds about svec * (d^2 + svec) entries per block.
    """
    nb = np.array([svec_length(2 * m) for m in block_sizes], dtype=np.int64)
    return int(16 * np.sum(nb * (d * d + nb)))


def fit_memory(vertices: Sequence["SdpVertex"], free: Sequence[tuple[int, ...]], dims: Sequence[int],
               budget_bytes: float) -> list[tuple[int, ...]]:
    """Swap the largest free blocks for each vertex's smallest part until the round fits the budget."""
    free = list(free)
    d = int(np.prod(dims))

    def size(part):
        return int(np.prod([dims[q] for q in part]))

    cost = kkt_bytes([size(f) for f in free], d)
    if cost <= budget_bytes:
        return free
    for i in sorted(range(len(free)), key=lambda i: -size(free[i])):
        small = min(vertices[i].partition.parts, key=size)
        if size(small) >= size(free[i]):
            continue
        cost += kkt_bytes([size(small)], d) - kkt_bytes([size(free[i])], d)
        free[i] = small
        if cost <= budget_bytes:
            break
    return free


@dataclass
class ConicProblem:
    """Equality-constrained SDP data.

    ``embed`` maps the stacked Hermitian coordinates of all blocks
    (``sizes[i]**2`` entries for block ``i``) to the d^2 coordinates of
    ``sum_i embed(fixed_i (x) tau_i)``. Row ``m`` of block ``i`` holds the
    coordinates of the adjoint operator A_{i,m}.
    """

    dims: tuple[int, ...]
    vertices: list[SdpVertex]
    free_parts: list[tuple[int, ...]]
    sizes: list[int]
    embed: sp.csr_matrix
    rho_minus_sigma: np.ndarray
    sigma: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(np.square(self.sizes))])

    def adjoint_operator(self, i: int, m: int) -> np.ndarray:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        row = self.embed[m, lo:hi].toarray().ravel()
        return from_herm_coords(row, self.sizes[i])

    def residual(self, t: float, taus: Sequence[np.ndarray]) -> float:
        h = np.concatenate([herm_coords(tau) for tau in taus]) if taus else np.zeros(0)
        lhs = t * self.rho_minus_sigma + self.sigma
        return float(np.linalg.norm(self.embed @ h - lhs))


@dataclass
class SdpSolution:
    status: str  # optimal | infeasible | numerical-failure
    t_star: float = float("nan")
    tau_blocks: list[np.ndarray] = field(default_factory=list)
    residual: float = float("inf")
    solve_seconds: float = 0.0


class CertificationError(RuntimeError):
    pass


def _factor_stack(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        n, a, _ = out.shape
        b = m.shape[1]
        out = np.einsum("nij,nkl->nikjl", out, m).reshape(n, a * b, a * b)
    return out


@lru_cache(maxsize=256)
def _embed_pattern(dims: tuple[int, ...], comp: tuple[int, ...], free: tuple[int, ...]):
    """Index bookkeeping shared by all vertices with the same free/fixed split.

    Returns (rows, cols, fsel, re/im selectors) describing, for every global
    coordinate, which tau coordinate and which fixed-factor entry it uses.
    """
    d = prod(dims)
    m = prod(dims[q] for q in free)
    multi = np.array(np.unravel_index(np.arange(d), dims))
    a_f = np.ravel_multi_index(multi[list(free)], [dims[q] for q in free])
    if comp:
        a_c = np.ravel_multi_index(multi[list(comp)], [dims[q] for q in comp])
    else:
        a_c = np.zeros(d, dtype=int)
    dc = prod(dims[q] for q in comp) if comp else 1

    km = m * (m - 1) // 2
    kidx = np.full((m, m), -1)
    kidx[np.triu_indices(m, 1)] = np.arange(km)

    rows, cols, fidx, kind = [], [], [], []
    # kind codes: 0 -> Re F, 1 -> Im F, 2 -> -Im F, 3 -> -Re F, 4/5 -> sqrt2 Re/Im F
    # diagonal global coordinates
    for a in range(d):
        rows.append(a)
        cols.append(a_f[a])
        fidx.append(a_c[a] * dc + a_c[a])
        kind.append(0)
    iu, ju = np.triu_indices(d, 1)
    kd = d * (d - 1) // 2
    for k, (a, b) in enumerate(zip(iu, ju)):
        p, q = a_f[a], a_f[b]
        f = a_c[a] * dc + a_c[b]
        r_re, r_im = d + k, d + kd + k
        if p == q:
            rows += [r_re, r_im]
            cols += [p, p]
            fidx += [f, f]
            kind += [4, 5]
        elif p < q:
            c_re, c_im = m + kidx[p, q], m + km + kidx[p, q]
            rows += [r_re, r_re, r_im, r_im]
            cols += [c_re, c_im, c_re, c_im]
            fidx += [f] * 4
            kind += [0, 2, 1, 0]
        else:
            c_re, c_im = m + kidx[q, p], m + km + kidx[q, p]
            rows += [r_re, r_re, r_im, r_im]
            cols += [c_re, c_im, c_re, c_im]
            fidx += [f] * 4
            kind += [0, 1, 1, 3]
    return (np.array(rows), np.array(cols), np.array(fidx), np.array(kind), m)


def _embed_block(dims, vertices: list[SdpVertex], free: tuple[int, ...]) -> tuple[sp.csr_matrix, int]:
    """Sparse map from stacked tau coordinates of ``vertices`` to global coordinates."""
    v0 = vertices[0]
    others = [j for j, p in enumerate(v0.partition.parts) if p != free]
    comp = tuple(q for j in others for q in v0.partition.parts[j])
    rows, cols, fidx, kind, m = _embed_pattern(tuple(dims), comp, free)
    if others:
        fmat = _factor_stack([np.stack([v.factors[j] for v in vertices]) for j in others])
    else:
        fmat = np.ones((len(vertices), 1, 1), dtype=complex)
    flat = fmat.reshape(len(vertices), -1)[:, fidx]
    choices = [flat.real, flat.imag, -flat.imag, -flat.real, np.sqrt(2) * flat.real, np.sqrt(2) * flat.imag]
    sel = np.choose(kind[None, :].repeat(len(vertices), 0), choices)
    nv = len(vertices)
    d2 = prod(dims) ** 2
    all_rows = np.tile(rows, nv)
    all_cols = (cols[None, :] + (np.arange(nv) * m * m)[:, None]).ravel()
    mat = sp.coo_matrix((sel.ravel(), (all_rows, all_cols)), shape=(d2, nv * m * m)).tocsr()
    mat.eliminate_zeros()
    return mat, m


def build_sdp(vertices: Sequence[SdpVertex], free_parts: Sequence[tuple[int, ...]],
              rho: DensityMatrix, sigma: DensityMatrix,
              augmentation: Sequence[SdpVertex] | None = None) -> ConicProblem:
    """Assemble the max-t problem; augmentation vertices free their own rotation start."""
    vertices = list(vertices)
    free_parts = [tuple(f) for f in free_parts]
    if augmentation:
        vertices += list(augmentation)
        free_parts += [select_free_part(v, 0) for v in augmentation]
    if len(vertices) != len(free_parts):
        raise ValueError("one free part per vertex is required")
    if rho.dims != sigma.dims:
        raise ValueError("rho and sigma layouts differ")
    dims = rho.dims
    for v, f in zip(vertices, free_parts):
        if v.partition.n != len(dims):
            raise ValueError(f"vertex partition {v.partition} does not match {len(dims)} parties")
        if f not in v.partition.parts:
            raise ValueError(f"free part {f} is not a part of {v.partition}")
        for part, fac in zip(v.partition.parts, v.factors):
            want = prod(dims[q] for q in part)
            if fac.shape != (want, want):
                raise ValueError(f"factor on {part} has shape {fac.shape}, expected {want}")

    # group consecutive runs with identical (partition, free part) for vectorized assembly
    mats, sizes = [], []
    i = 0
    while i < len(vertices):
        j = i
        while j < len(vertices) and vertices[j].partition == vertices[i].partition and free_parts[j] == free_parts[i]:
            j += 1
        mat, m = _embed_block(dims, vertices[i:j], free_parts[i])
        mats.append(mat)
        sizes += [m] * (j - i)
        i = j
    embed = sp.hstack(mats, format="csr") if mats else sp.csr_matrix((prod(dims) ** 2, 0))
    return ConicProblem(dims, vertices, free_parts, sizes, embed,
                        herm_coords(rho.data - sigma.data), herm_coords(sigma.data))


# -- complex PSD blocks through real symmetric 2m x 2m matrices ----------------
# tau = J Y J^dag with J = [I, iI]/sqrt2 maps the real PSD cone onto the
# complex PSD cone: tau = (Y11 + Y22)/2 + i (Y21 - Y12)/2.


def svec_length(n: int) -> int:
    return n * (n + 1) // 2


@lru_cache(maxsize=64)
def _svec_to_tau(m: int) -> sp.csr_matrix:
    """Sparse map from a real 2m x 2m svec (Clarabel order) to tau coordinates."""
    n = 2 * m
    cols = []
    for j in range(n):
        for i in range(j + 1):
            y = np.zeros((n, n))
            if i == j:
                y[i, i] = 1.0
            else:
                y[i, j] = y[j, i] = 1 / np.sqrt(2)
            cols.append(herm_coords(_tau_from_real(y, m)))
    return sp.csr_matrix(np.array(cols).T)


def _tau_from_real(y: np.ndarray, m: int) -> np.ndarray:
    return (y[:m, :m] + y[m:, m:]) / 2 + 0.5j * (y[m:, :m] - y[:m, m:])


def _svec_unpack(v: np.ndarray, n: int) -> np.ndarray:
    y = np.zeros((n, n))
    iu = np.triu_indices(n)
    # Clarabel orders the upper triangle column by column
    order = np.lexsort((iu[0], iu[1]))
    r, c = iu[0][order], iu[1][order]
    scale = np.where(r == c, 1.0, 1 / np.sqrt(2))
    y[r, c] = v * scale
    y[c, r] = v * scale
    return y


def _solve_clarabel(problem: ConicProblem, tol: float = 1e-9, max_iter: int = 200, verbose: bool = False) -> SdpSolution:
    import clarabel

    sizes = problem.sizes
    nblk = [svec_length(2 * m) for m in sizes]
    nvar = 1 + sum(nblk)
    d2 = problem.embed.shape[0]
    # equality: t*(rho - sigma) - embed @ T @ svec(Y) = -sigma
    lift = sp.block_diag([_svec_to_tau(m) for m in sizes], format="csc") if sizes else sp.csc_matrix((0, 0))
    a_eq = sp.hstack([sp.csc_matrix(problem.rho_minus_sigma.reshape(-1, 1)), -(problem.embed @ lift)], format="csc")
    e_t = sp.csc_matrix(([1.0], ([0], [0])), shape=(1, nvar))
    a = sp.vstack([
        a_eq,
        -e_t,
        e_t,
        sp.hstack([sp.csc_matrix((nvar - 1, 1)), -sp.identity(nvar - 1, format="csc")]),
    ], format="csc")
    b = np.concatenate([-problem.sigma, [0.0, 1.0], np.zeros(nvar - 1)])
    q = np.zeros(nvar)
    q[0] = -1.0
    cones = [clarabel.ZeroConeT(d2), clarabel.NonnegativeConeT(2)]
    cones += [clarabel.PSDTriangleConeT(2 * m) for m in sizes]
    st = clarabel.DefaultSettings()
    st.verbose = verbose
    st.tol_feas = tol
    st.tol_gap_abs = tol
    st.tol_gap_rel = tol
    st.max_iter = max_iter
    solver = clarabel.DefaultSolver(sp.csc_matrix((nvar, nvar)), q, a, b, cones, st)
    res = solver.solve()
    status = str(res.status)
    if status in ("DualInfeasible", "AlmostDualInfeasible", "PrimalInfeasible", "AlmostPrimalInfeasible"):
        return SdpSolution("infeasible", solve_seconds=res.solve_time)
    if status not in ("Solved", "AlmostSolved"):
        return SdpSolution("numerical-failure", solve_seconds=res.solve_time)
    x = np.asarray(res.x)
    taus, k = [], 1
    for m, nb in zip(sizes, nblk):
        taus.append(_psd_clip(_tau_from_real(_svec_unpack(x[k:k + nb], 2 * m), m)))
        k += nb
    t = float(min(1.0, max(0.0, x[0])))
    return SdpSolution("optimal", t, taus, problem.residual(t, taus), res.solve_time)


def _solve_cvxpy(problem: ConicProblem, solver: str = "SCS", tol: float = 1e-9, **kw) -> SdpSolution:
    """Same program with native complex Hermitian variables through cvxpy."""
    import cvxpy as cp

    t = cp.Variable()
    taus = [cp.Variable((m, m), hermitian=True) for m in problem.sizes]
    coords = []
    for m, tau in zip(problem.sizes, taus):
        hr, hi = _vec_to_coords(m)
        coords.append(hr @ cp.vec(cp.real(tau), order="F") + hi @ cp.vec(cp.imag(tau), order="F"))
    lhs = problem.embed @ cp.hstack(coords) if coords else 0
    cons = [lhs == t * problem.rho_minus_sigma + problem.sigma, t >= 0, t <= 1]
    cons += [tau >> 0 for tau in taus]
    prob = cp.Problem(cp.Maximize(t), cons)
    opts = {"eps": tol} if solver == "SCS" else {}
    opts.update(kw)
    try:
        prob.solve(solver=solver, **opts)
    except cp.error.SolverError:
        return SdpSolution("numerical-failure")
    if prob.status in ("infeasible", "infeasible_inaccurate"):
        return SdpSolution("infeasible")
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return SdpSolution("numerical-failure")
    tv = float(min(1.0, max(0.0, t.value)))
    tv_blocks = [_psd_clip(np.asarray(tau.value)) for tau in taus]
    return SdpSolution("optimal", tv, tv_blocks, problem.residual(tv, tv_blocks),
                       prob.solver_stats.solve_time or 0.0)


@lru_cache(maxsize=64)
def _vec_to_coords(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices mapping column-major vec(Re tau), vec(Im tau) to tau coordinates."""
    hr = np.zeros((m * m, m * m))
    hi = np.zeros((m * m, m * m))
    for j in range(m):
        for i in range(m):
            e = np.zeros((m, m), dtype=complex)
            e[i, j] = 1.0
            # herm_coords reads only the diagonal and upper triangle, which is
            # a valid real-linear extension on Hermitian arguments
            hr[:, i + j * m] = herm_coords(e)
            hi[:, i + j * m] = herm_coords(1j * e)
    return hr, hi


def _psd_clip(tau: np.ndarray) -> np.ndarray:
    tau = (tau + tau.conj().T) / 2
    w, v = np.linalg.eigh(tau)
    if w.min() >= 0:
        return tau
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


SOLVERS = {"clarabel": _solve_clarabel, "cvxpy": _solve_cvxpy}


def solve(problem: ConicProblem, backend: str = "clarabel", **kw) -> SdpSolution:
    try:
        fn = SOLVERS[backend]
    except KeyError:
        raise ValueError(f"unknown SDP backend {backend!r}; choose from {sorted(SOLVERS)}") from None
    return fn(problem, **kw)


# -- polytope of Pauli eigenstates ---------------------------------------------

PAULI_STATES = tuple(
    (np.eye(2) + sgn * pauli) / 2
    for pauli in (np.array([[0, 1], [1, 0]], dtype=complex),
                  np.array([[0, -1j], [1j, 0]]),
                  np.array([[1, 0], [0, -1]], dtype=complex))
    for sgn in (1, -1)
)


def mub_polytope(dims: Sequence[int], sample: int | None = None, seed: int = 0) -> list[SdpVertex]:
    """Products of the six Pauli eigenstates on all parties but the last.

    The last party is the free part of every vertex. With ``sample`` set, a
    uniform random subset of that size is drawn (without replacement).
    """
    dims = tuple(dims)
    if any(x != 2 for x in dims):
        raise ValueError("the Pauli-eigenstate polytope needs a qubit layout")
    n = len(dims)
    if n < 2:
        raise ValueError("need at least two qubits")
    total = 6 ** (n - 1)
    if sample is not None and sample < total:
        rng = np.random.default_rng(seed)
        picks = np.sort(rng.choice(total, size=sample, replace=False))
        combos = [np.unravel_index(k, (6,) * (n - 1)) for k in picks]
    else:
        combos = list(cartesian(range(6), repeat=n - 1))
    part = Partition.singletons(n)
    return [SdpVertex(part, [PAULI_STATES[c] for c in combo] + [np.eye(2) / 2], start=n - 1)
            for combo in combos]
