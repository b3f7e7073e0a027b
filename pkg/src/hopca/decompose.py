"""Unregularized decompositions: CP-ALS, HOSVD, HOOI, and the greedy
rank-one power scheme with deflation (optionally Gram-Schmidt
orthogonalized).

All solvers are pure per-call: they share no global state and may run
concurrently.  Factor columns are unit norm; rank-one weights are
non-negative; components are returned sorted by descending weight with
the greedy computation order preserved in the diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .tensor3 import check_tensor3, frob_norm, khatri_rao, matricize, mode_mult

__all__ = [
    "SolverConfig",
    "CpModel",
    "TuckerModel",
    "RankOneFit",
    "cp_als",
    "hosvd",
    "hooi",
    "tpa_rank_one",
    "tpa",
]

_TINY = 1e-300


@dataclass
class SolverConfig:
    """Iteration controls shared by every solver.

    ``tol`` is a relative objective-change threshold; ``init`` selects
    between leading-singular-vector and random starting factors;
    ``orthogonalize`` enables Gram-Schmidt projection of each new
    deflation component against the previous ones.
    """

    max_iter: int = 500
    tol: float = 1e-6
    seed: int | None = 0
    init: str = "hosvd"
    orthogonalize: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.init not in ("hosvd", "random"):
            raise ValueError(f"unknown init {self.init!r}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass
class CpModel:
    """CP-style factorization ``x ~ sum_k d[k] * U[:,k] o V[:,k] o W[:,k]``.

    Factor columns have unit Euclidean norm or are exactly zero (zero
    columns arise only from sparse solvers or degenerate deflation) and
    all weights are non-negative.
    """

    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    d: np.ndarray
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def K(self) -> int:
        return int(np.asarray(self.d).size)

    def reconstruct(self) -> np.ndarray:
        return np.einsum("ik,jk,lk,k->ijl", self.U, self.V, self.W,
                         np.asarray(self.d, dtype=float), optimize=True)


@dataclass
class TuckerModel:
    """Tucker factorization ``x ~ core x1 U x2 V x3 W``.

    Classic solvers return orthonormal factors; sparse variants may
    return sparse, non-orthonormal (or zero) columns.
    """

    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    core: np.ndarray
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def ranks(self) -> tuple[int, int, int]:
        return tuple(self.core.shape)

    def reconstruct(self) -> np.ndarray:
        return mode_mult(mode_mult(mode_mult(self.core, self.U, 1),
                                   self.V, 2), self.W, 3)


@dataclass
class RankOneFit:
    """Result of one greedy rank-one fit, with its per-update objective."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    d: float
    iterations: int = 0
    converged: bool = False
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lambdas: dict[str, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# shared numerical helpers


def contract_u(x, v, w):
    """x contracted along modes 2 and 3: length-n vector."""
    return np.tensordot(np.tensordot(x, w, axes=(2, 0)), v, axes=(1, 0))


def contract_v(x, u, w):
    """x contracted along modes 1 and 3: length-p vector."""
    return np.tensordot(np.tensordot(x, w, axes=(2, 0)), u, axes=(0, 0))


def contract_w(x, u, v):
    """x contracted along modes 1 and 2: length-q vector."""
    return np.tensordot(np.tensordot(x, v, axes=(1, 0)), u, axes=(0, 0))


def contract_all(x, u, v, w) -> float:
    return float(contract_u(x, v, w) @ u)


def leading_singular_vectors(m, k, return_values=False):
    """First ``k`` left singular vectors of ``m`` (orthonormal columns)."""
    uu, sv, _ = np.linalg.svd(np.asarray(m, dtype=float), full_matrices=False)
    if uu.shape[1] < k:
        uu = _complete_orthonormal(uu, k)
        sv = np.concatenate([sv, np.zeros(k - sv.size)])
    if return_values:
        return uu[:, :k], sv[:k]
    return uu[:, :k]


def _complete_orthonormal(basis, k):
    # deterministic completion: QR against identity columns
    n = basis.shape[0]
    qq, _ = np.linalg.qr(np.hstack([basis, np.eye(n)]))
    return qq[:, :k]


def normalize_or_zero(vec):
    """Rescale to unit norm, or return the zero vector unchanged."""
    nrm = float(np.linalg.norm(vec))
    if nrm <= _TINY:
        return np.zeros_like(vec), 0.0
    return vec / nrm, nrm


def canonicalize_cp_signs(U, V, W):
    """Make the largest-magnitude entry of each u and v column positive.

    Sign flips are applied in (u, w) and (v, w) pairs so every rank-one
    term, and in particular the non-negative weights, are unchanged; the
    w columns absorb the parity.
    """
    U, V, W = U.copy(), V.copy(), W.copy()
    for k in range(U.shape[1]):
        for factor in (U, V):
            col = factor[:, k]
            if np.any(col != 0) and col[np.argmax(np.abs(col))] < 0:
                factor[:, k] = -col
                W[:, k] = -W[:, k]
    return U, V, W


def _canonicalize_columns(m):
    m = m.copy()
    for k in range(m.shape[1]):
        col = m[:, k]
        if np.any(col != 0) and col[np.argmax(np.abs(col))] < 0:
            m[:, k] = -col
    return m


def sort_components(U, V, W, d):
    order = np.argsort(-np.asarray(d, dtype=float), kind="stable")
    return U[:, order], V[:, order], W[:, order], np.asarray(d)[order], order


def _random_unit(rng, dim):
    vec = rng.standard_normal(dim)
    nrm = np.linalg.norm(vec)
    while nrm <= _TINY:  # pragma: no cover - essentially impossible
        vec = rng.standard_normal(dim)
        nrm = np.linalg.norm(vec)
    return vec / nrm


def init_rank_one(x, init, rng):
    """Starting (v, w) pair: leading mode-2/mode-3 singular vectors, or random."""
    if init == "hosvd":
        v = leading_singular_vectors(matricize(x, 2), 1)[:, 0]
        w = leading_singular_vectors(matricize(x, 3), 1)[:, 0]
        return v, w
    return _random_unit(rng, x.shape[1]), _random_unit(rng, x.shape[2])


def _init_cp_factors(x, K, init, rng):
    if init == "hosvd":
        return tuple(leading_singular_vectors(matricize(x, m), K)
                     for m in (1, 2, 3))
    factors = []
    for dim in x.shape:
        cols = np.column_stack([_random_unit(rng, dim) for _ in range(K)])
        factors.append(cols)
    return tuple(factors)


# ---------------------------------------------------------------------------
# CP alternating least squares


def cp_als(x, K: int, cfg: SolverConfig | None = None) -> CpModel:
    """Fit a K-component CP model by alternating least squares.

    Each mode is updated by solving the Khatri-Rao normal equations with
    the other factors fixed, then rescaling columns to unit norm with the
    weights taken as the column norms.  The Frobenius residual is
    non-increasing across sweeps; a singular normal system falls back to
    the pseudo-inverse and is flagged in the diagnostics.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = cfg.rng()
    norm_x = frob_norm(x)
    U, V, W = _init_cp_factors(x, K, cfg.init, rng)
    d = np.zeros(K)
    diagnostics: dict[str, Any] = {"method": "cp-als", "used_pinv": False}

    if norm_x == 0.0:
        diagnostics.update(iterations=0, converged=True, residual_norm=0.0)
        return CpModel(U, V, W, d, diagnostics)

    unfoldings = {m: matricize(x, m) for m in (1, 2, 3)}
    residual_trace = []
    prev_obj = None
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        for mode in (1, 2, 3):
            if mode == 1:
                a, b = V, W
            elif mode == 2:
                a, b = U, W
            else:
                a, b = U, V
            # design matrix for our fiber order is kron(b_k, a_k) per column
            gram = (a.T @ a) * (b.T @ b)
            corr = unfoldings[mode] @ khatri_rao(b, a)
            if np.linalg.cond(gram) < 1e12:
                scaled = np.linalg.solve(gram, corr.T).T
            else:
                scaled = corr @ np.linalg.pinv(gram)
                diagnostics["used_pinv"] = True
            d = np.linalg.norm(scaled, axis=0)
            target = (U, V, W)[mode - 1]
            for k in range(K):
                if d[k] > _TINY:
                    target[:, k] = scaled[:, k] / d[k]
                # a dead column keeps its previous unit direction, d stays 0
        resid = frob_norm(x - CpModel(U, V, W, d).reconstruct())
        residual_trace.append(resid)
        obj = resid / norm_x
        if prev_obj is not None and abs(prev_obj - obj) < cfg.tol:
            converged = True
            break
        prev_obj = obj

    U, V, W, d, order = sort_components(U, V, W, d)
    U, V, W = canonicalize_cp_signs(U, V, W)
    diagnostics.update(
        iterations=iterations,
        converged=converged,
        residual_norm=residual_trace[-1],
        residual_trace=np.asarray(residual_trace),
    )
    return CpModel(U, V, W, d, diagnostics)


# ---------------------------------------------------------------------------
# Tucker decompositions


def _check_ranks(x, ranks):
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != 3 or min(ranks) < 1:
        raise ValueError(f"ranks must be three positive integers, got {ranks}")
    for r, dim in zip(ranks, x.shape):
        if r > dim:
            raise ValueError(f"rank {r} exceeds tensor dim {dim}")
    return ranks


def _tucker_core(x, U, V, W):
    return mode_mult(mode_mult(mode_mult(x, U.T, 1), V.T, 2), W.T, 3)


def hosvd(x, ranks) -> TuckerModel:
    """Tucker factors from the leading singular vectors of each unfolding."""
    x = check_tensor3(x)
    k1, k2, k3 = _check_ranks(x, ranks)
    U = _canonicalize_columns(leading_singular_vectors(matricize(x, 1), k1))
    V = _canonicalize_columns(leading_singular_vectors(matricize(x, 2), k2))
    W = _canonicalize_columns(leading_singular_vectors(matricize(x, 3), k3))
    core = _tucker_core(x, U, V, W)
    return TuckerModel(U, V, W, core, {"method": "hosvd"})


def hooi(x, ranks, cfg: SolverConfig | None = None) -> TuckerModel:
    """Higher-order orthogonal iteration, initialized from the HOSVD.

    Each sweep re-estimates every factor from the singular vectors of the
    tensor projected onto the other two factors, so the core norm is
    non-decreasing; stops when its relative change drops below ``tol``.
    """
    x = check_tensor3(x)
    k1, k2, k3 = _check_ranks(x, ranks)
    cfg = cfg or SolverConfig()
    start = hosvd(x, ranks)
    U, V, W = start.U, start.V, start.W
    diagnostics: dict[str, Any] = {"method": "hooi"}

    if frob_norm(x) == 0.0:
        diagnostics.update(iterations=0, converged=True, core_norm=0.0)
        return TuckerModel(U, V, W, start.core, diagnostics)

    core_trace = []
    gaps = {}
    prev = None
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        y = mode_mult(mode_mult(x, V.T, 2), W.T, 3)
        U, sv = leading_singular_vectors(matricize(y, 1), k1, return_values=True)
        gaps["u"] = sv[k1 - 1] - (sv[k1] if sv.size > k1 else 0.0)
        y = mode_mult(mode_mult(x, U.T, 1), W.T, 3)
        V, sv = leading_singular_vectors(matricize(y, 2), k2, return_values=True)
        gaps["v"] = sv[k2 - 1] - (sv[k2] if sv.size > k2 else 0.0)
        y = mode_mult(mode_mult(x, U.T, 1), V.T, 2)
        W, sv = leading_singular_vectors(matricize(y, 3), k3, return_values=True)
        gaps["w"] = sv[k3 - 1] - (sv[k3] if sv.size > k3 else 0.0)
        core_norm = frob_norm(mode_mult(y, W.T, 3))
        core_trace.append(core_norm)
        if prev is not None and abs(core_norm - prev) <= cfg.tol * max(prev, _TINY):
            converged = True
            break
        prev = core_norm

    U = _canonicalize_columns(U)
    V = _canonicalize_columns(V)
    W = _canonicalize_columns(W)
    core = _tucker_core(x, U, V, W)
    diagnostics.update(
        iterations=iterations,
        converged=converged,
        core_norm=core_trace[-1],
        core_norm_trace=np.asarray(core_trace),
        sv_gap_u=gaps["u"], sv_gap_v=gaps["v"], sv_gap_w=gaps["w"],
    )
    return TuckerModel(U, V, W, core, diagnostics)


# ---------------------------------------------------------------------------
# greedy rank-one power scheme


def _project_out(vec, basis):
    if basis is not None and basis.shape[1]:
        vec = vec - basis @ (basis.T @ vec)
    return vec


def _power_rank_one(x, v, w, cfg, ortho=None):
    """Alternating normalized contractions from a (v, w) start.

    Returns None when a contraction vanishes (caller re-draws the init).
    With ``ortho=(Ub, Vb, Wb)`` each update is projected against the
    previous same-mode factors before normalization.
    """
    ub, vb, wb = ortho if ortho is not None else (None, None, None)
    trace = []
    u = None
    prev = None
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        cu = contract_u(x, v, w)
        u, nrm = normalize_or_zero(_project_out(cu, ub))
        if nrm == 0.0:
            return None
        trace.append(float(u @ cu))
        cv = contract_v(x, u, w)
        v, nrm = normalize_or_zero(_project_out(cv, vb))
        if nrm == 0.0:
            return None
        trace.append(float(v @ cv))
        cw = contract_w(x, u, v)
        w, nrm = normalize_or_zero(_project_out(cw, wb))
        if nrm == 0.0:
            return None
        d = float(w @ cw)
        trace.append(d)
        if prev is not None and abs(d - prev) <= cfg.tol * max(abs(prev), _TINY):
            converged = True
            break
        prev = d
    return RankOneFit(u, v, w, d, iterations, converged, np.asarray(trace))


def _rank_one_with_restarts(x, cfg, rng, ortho=None):
    v, w = init_rank_one(x, cfg.init, rng)
    for _attempt in range(6):  # initial try plus up to 5 random restarts
        fit = _power_rank_one(x, v, w, cfg, ortho)
        if fit is not None:
            return fit
        v, w = init_rank_one(x, "random", rng)
    zero = RankOneFit(np.zeros(x.shape[0]), np.zeros(x.shape[1]),
                      np.zeros(x.shape[2]), 0.0, 0, True)
    return zero


def tpa_rank_one(x, cfg: SolverConfig | None = None) -> RankOneFit:
    """Best rank-one fit by alternating normalized contractions.

    The objective (the triple contraction) is non-decreasing across factor
    updates and the returned weight is its value at convergence.  A
    vanishing contraction triggers up to five random re-initializations
    before falling back to the zero fit.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    if frob_norm(x) == 0.0:
        raise ValueError("input tensor is zero")
    return _rank_one_with_restarts(x, cfg, cfg.rng())


def tpa(x, K: int, cfg: SolverConfig | None = None) -> CpModel:
    """Greedy K-component CP model: rank-one fits on running residuals.

    With ``cfg.orthogonalize`` each new factor is Gram-Schmidt projected
    against the previous factors of the same mode after every update.  A
    zero rank-one fit truncates the model (remaining components are
    zero-filled and flagged).  Components are sorted by descending weight;
    the greedy order is kept in the diagnostics.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = cfg.rng()
    n, p, q = x.shape
    U = np.zeros((n, K))
    V = np.zeros((p, K))
    W = np.zeros((q, K))
    d = np.zeros(K)
    traces = []
    resid = x.copy()
    truncated_at = None
    for k in range(K):
        if frob_norm(resid) == 0.0:
            truncated_at = k
            break
        ortho = ((U[:, :k], V[:, :k], W[:, :k]) if cfg.orthogonalize and k
                 else None)
        fit = _rank_one_with_restarts(resid, cfg, rng, ortho)
        traces.append(fit.objective_trace)
        if fit.d <= 0.0:
            truncated_at = k
            break
        U[:, k], V[:, k], W[:, k], d[k] = fit.u, fit.v, fit.w, fit.d
        resid = resid - fit.d * (fit.u[:, None, None] * fit.v[None, :, None]
                                 * fit.w[None, None, :])

    greedy_d = d.copy()
    U, V, W, d, order = sort_components(U, V, W, d)
    U, V, W = canonicalize_cp_signs(U, V, W)
    diagnostics: dict[str, Any] = {
        "method": "tpa",
        "greedy_d": greedy_d,
        "component_order": order,
        "objective_traces": traces,
        "residual_norm": frob_norm(resid),
        "orthogonalized": cfg.orthogonalize,
    }
    if truncated_at is not None:
        diagnostics["truncated_at"] = truncated_at
    return CpModel(U, V, W, d, diagnostics)
