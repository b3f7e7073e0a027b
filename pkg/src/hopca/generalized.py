"""Extensions of the deflation scheme: general order-one convex penalties
and non-negativity, quadratic-norm (structured) decompositions, and
multi-way functional PCA in both its tri-convex and half-smoothing forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .decompose import (
    CpModel,
    RankOneFit,
    SolverConfig,
    TuckerModel,
    canonicalize_cp_signs,
    contract_u,
    contract_v,
    contract_w,
    hooi,
    init_rank_one,
    normalize_or_zero,
    sort_components,
)
from .sparse import soft_threshold
from .tensor3 import check_tensor3, frob_norm, mode_mult, outer3

__all__ = [
    "positive_threshold",
    "PenaltyFn",
    "l1_penalty",
    "nonneg_l1_penalty",
    "group_lasso_penalty",
    "general_cp_tpa_rank_one",
    "general_cp_tpa",
    "QuadOperators",
    "gcp_rank_one",
    "gcp",
    "sparse_gcp_rank_one",
    "sparse_gcp",
    "qnorm_lasso_solve",
    "qnorm_lasso_kkt_residual",
    "SmootherSet",
    "second_diff_penalty",
    "difference_penalty",
    "FpcaFit",
    "fpca_objective",
    "fpca_rank_one",
    "fpca",
    "fpca_half_smoothing",
]

_TINY = 1e-300


def positive_threshold(x, lam: float):
    """Elementwise ``max(x - lam, 0)``: sparsity plus non-negativity."""
    if lam < 0:
        raise ValueError("threshold level must be non-negative")
    return np.maximum(np.asarray(x, dtype=float) - lam, 0.0)


# ---------------------------------------------------------------------------
# general order-one convex penalties


@dataclass(frozen=True)
class PenaltyFn:
    """A convex, order-one homogeneous penalty with its proximal map.

    ``prox(y, scale)`` must return ``argmin 0.5*||y - z||^2 + scale * P(z)``
    and ``prox(y, 0)`` must reduce to projection onto the penalty's
    domain (the identity for unconstrained penalties).
    """

    name: str
    evaluate: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]


def l1_penalty() -> PenaltyFn:
    return PenaltyFn("l1", lambda x: float(np.sum(np.abs(x))), soft_threshold)


def nonneg_l1_penalty() -> PenaltyFn:
    def evaluate(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            return np.inf
        return float(np.sum(x))

    return PenaltyFn("nonneg_l1", evaluate, positive_threshold)


def group_lasso_penalty(groups: Sequence[Sequence[int]]) -> PenaltyFn:
    """Sum of Euclidean norms over index groups (blockwise shrinkage prox)."""
    groups = [np.asarray(g, dtype=int) for g in groups]

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return float(sum(np.linalg.norm(x[g]) for g in groups))

    def prox(y, scale):
        y = np.asarray(y, dtype=float)
        out = y.copy()
        for g in groups:
            nrm = np.linalg.norm(y[g])
            out[g] = 0.0 if nrm <= scale else y[g] * (1.0 - scale / nrm)
        return out

    return PenaltyFn("group_lasso", evaluate, prox)


def _feasible_init(vec, penalty: PenaltyFn, rng, redraws: int = 5):
    vec, nrm = normalize_or_zero(penalty.prox(np.asarray(vec, dtype=float), 0.0))
    attempts = 0
    while nrm == 0.0 and attempts < redraws:
        vec, nrm = normalize_or_zero(
            penalty.prox(rng.standard_normal(vec.shape[0]), 0.0))
        attempts += 1
    return vec, nrm


def general_cp_tpa_rank_one(x, penalties, cfg: SolverConfig | None = None
                            ) -> RankOneFit:
    """Rank-one fit with one (PenaltyFn, level) pair per mode.

    Each update applies the penalty's prox to the contraction against the
    other two factors and renormalizes (or zeroes the component); the
    penalized contraction objective is non-decreasing per update.  With
    the l1 penalty this is exactly the sparse rank-one fit.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    rng = cfg.rng()
    (pen_u, lam_u), (pen_v, lam_v), (pen_w, lam_w) = penalties
    if min(lam_u, lam_v, lam_w) < 0:
        raise ValueError("penalty levels must be non-negative")

    v0, w0 = init_rank_one(x, cfg.init, rng)
    v, nv = _feasible_init(v0, pen_v, rng)
    w, nw = _feasible_init(w0, pen_w, rng)
    u = np.zeros(x.shape[0])
    trace = []
    prev = None
    converged = False
    iterations = 0

    def zero_fit():
        return RankOneFit(np.zeros(x.shape[0]), np.zeros(x.shape[1]),
                          np.zeros(x.shape[2]), 0.0, iterations, True,
                          np.asarray(trace))

    if nv == 0.0 or nw == 0.0:
        return zero_fit()
    for iterations in range(1, cfg.max_iter + 1):
        for mode in ("u", "v", "w"):
            if mode == "u":
                c, pen, lam = contract_u(x, v, w), pen_u, lam_u
            elif mode == "v":
                c, pen, lam = contract_v(x, u, w), pen_v, lam_v
            else:
                c, pen, lam = contract_w(x, u, v), pen_w, lam_w
            f, nrm = normalize_or_zero(pen.prox(c, lam))
            if nrm == 0.0:
                return zero_fit()
            if mode == "u":
                u = f
            elif mode == "v":
                v = f
            else:
                w = f
            objective = (float(f @ c) - lam_u * pen_u.evaluate(u)
                         - lam_v * pen_v.evaluate(v)
                         - lam_w * pen_w.evaluate(w))
            trace.append(objective)
        d = float(w @ c)
        if prev is not None and abs(objective - prev) <= cfg.tol * max(
                abs(prev), _TINY):
            converged = True
            break
        prev = objective
    return RankOneFit(u, v, w, d, iterations, converged, np.asarray(trace))


def general_cp_tpa(x, K: int, penalties, cfg: SolverConfig | None = None
                   ) -> CpModel:
    """Deflated multi-component fit with general penalties per mode."""
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    if K < 1:
        raise ValueError("K must be >= 1")
    n, p, q = x.shape
    U, V, W = np.zeros((n, K)), np.zeros((p, K)), np.zeros((q, K))
    d = np.zeros(K)
    traces = []
    resid = x.copy()
    truncated_at = None
    for k in range(K):
        if frob_norm(resid) == 0.0:
            truncated_at = k
            break
        fit = general_cp_tpa_rank_one(resid, penalties, cfg)
        traces.append(fit.objective_trace)
        if fit.d <= 0.0:
            truncated_at = k
            break
        U[:, k], V[:, k], W[:, k], d[k] = fit.u, fit.v, fit.w, fit.d
        resid = resid - outer3(fit.u, fit.v, fit.w, fit.d)
    U, V, W, d, order = sort_components(U, V, W, d)
    U, V, W = canonicalize_cp_signs(U, V, W)
    diagnostics: dict[str, Any] = {
        "method": "general-cp-tpa", "sparse": True,
        "objective_traces": traces, "component_order": order,
        "penalties": [pen.name for pen, _ in penalties],
        "nnz": {m: [int(np.count_nonzero(f[:, k])) for k in range(K)]
                for m, f in zip(("u", "v", "w"), (U, V, W))},
    }
    if truncated_at is not None:
        diagnostics["truncated_at"] = truncated_at
    return CpModel(U, V, W, d, diagnostics)


# ---------------------------------------------------------------------------
# quadratic-norm (structured) decompositions


def _check_symmetric_psd(mat, name, psd_tol=1e-10, sym_tol=1e-12):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    scale = max(1.0, float(np.max(np.abs(mat))))
    if float(np.max(np.abs(mat - mat.T))) > sym_tol * scale:
        raise ValueError(f"{name} is not symmetric")
    min_eig = float(np.linalg.eigvalsh(mat)[0])
    if min_eig < -psd_tol * scale:
        raise ValueError(f"{name} is not positive semi-definite "
                         f"(min eigenvalue {min_eig:g})")
    return mat, min_eig


@dataclass
class QuadOperators:
    """One symmetric PSD operator per mode for quadratic-norm solvers.

    Strict positive definiteness is required to normalize factors, so
    the structured solvers call :meth:`require_positive_definite` first.
    """

    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    min_eigs: tuple[float, float, float] = field(init=False)

    def __post_init__(self):
        self.q1, e1 = _check_symmetric_psd(self.q1, "q1")
        self.q2, e2 = _check_symmetric_psd(self.q2, "q2")
        self.q3, e3 = _check_symmetric_psd(self.q3, "q3")
        self.min_eigs = (e1, e2, e3)

    @classmethod
    def identity(cls, dims) -> "QuadOperators":
        n, p, q = dims
        return cls(np.eye(n), np.eye(p), np.eye(q))

    def require_positive_definite(self):
        if min(self.min_eigs) <= 0.0:
            raise ValueError("quadratic operators must be positive definite "
                             f"(min eigenvalues {self.min_eigs})")


def _qnorm_vec(y, q) -> float:
    return float(np.sqrt(max(float(y @ (q @ y)), 0.0)))


def _q_normalize(y, q):
    nrm = _qnorm_vec(y, q)
    if nrm <= _TINY:
        return np.zeros_like(y), 0.0
    return y / nrm, nrm


def _power_lambda_max(q, iters: int = 200, tol: float = 1e-12) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    q = np.asarray(q, dtype=float)
    z = np.ones(q.shape[0]) / np.sqrt(q.shape[0])
    value = 0.0
    for _ in range(iters):
        zq = q @ z
        nrm = np.linalg.norm(zq)
        if nrm <= _TINY:
            return 0.0
        z_new = zq / nrm
        new_value = float(z_new @ (q @ z_new))
        if abs(new_value - value) <= tol * max(abs(value), _TINY):
            return new_value
        value = new_value
        z = z_new
    return value


def qnorm_lasso_solve(y, q, lam: float, tol: float = 1e-10,
                      max_iter: int = 100000,
                      lipschitz: float | None = None,
                      start: np.ndarray | None = None) -> np.ndarray:
    """``argmin 0.5 (y-u)' q (y-u) + lam * ||u||_1`` for positive definite q.

    Proximal gradient with step 1/L, L the largest eigenvalue of q (by
    power iteration), stopping when the KKT residual drops below ``tol``.
    The default tolerance is well under the 1e-8 contract so the solution
    is also coordinatewise accurate at that level for mildly conditioned q.
    ``start`` warm-starts the iteration (the minimizer is unique, so this
    affects only the iteration count).
    """
    y = np.asarray(y, dtype=float).ravel()
    q = np.asarray(q, dtype=float)
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if lam == 0.0:
        return y.copy()
    lip = _power_lambda_max(q) if lipschitz is None else float(lipschitz)
    if lip <= 0.0:
        raise ValueError("q must be positive definite")
    u = np.zeros_like(y) if start is None else np.asarray(start,
                                                          dtype=float).copy()
    for _ in range(max_iter):
        grad = q @ (u - y)
        u = soft_threshold(u - grad / lip, lam / lip)
        if qnorm_lasso_kkt_residual(y, q, lam, u) <= tol:
            break
    return u


def qnorm_lasso_kkt_residual(y, q, lam: float, u) -> float:
    """Largest elementwise violation of the q-weighted lasso optimality
    conditions at ``u``."""
    grad = np.asarray(q, dtype=float) @ (np.asarray(u, dtype=float)
                                         - np.asarray(y, dtype=float))
    u = np.asarray(u, dtype=float)
    nonzero = u != 0
    res = np.where(nonzero, np.abs(grad + lam * np.sign(u)),
                   np.maximum(np.abs(grad) - lam, 0.0))
    return float(np.max(res)) if res.size else 0.0


def _gcp_engine(x, q: QuadOperators, lams, cfg, rng) -> RankOneFit:
    """Shared quadratic-norm rank-one iteration.

    With all levels zero each update is the closed-form q-normalized
    contraction; otherwise the q-weighted lasso subproblem is solved
    before q-normalization.  The penalized q-contraction objective is
    non-decreasing per update.
    """
    lam_u, lam_v, lam_w = lams
    lips = [_power_lambda_max(qi) if lam > 0 else None
            for qi, lam in zip((q.q1, q.q2, q.q3), lams)]
    warm: dict[str, np.ndarray | None] = {"u": None, "v": None, "w": None}

    def solve_mode(mode, c, qi, lam, lip):
        if lam == 0.0:
            return _q_normalize(c, qi)
        raw = qnorm_lasso_solve(c, qi, lam, lipschitz=lip, start=warm[mode])
        warm[mode] = raw
        return _q_normalize(raw, qi)

    def initial_vw(init):
        v0, w0 = init_rank_one(x, init, rng)
        v, nv = _q_normalize(v0, q.q2)
        w, nw = _q_normalize(w0, q.q3)
        return (v, w) if nv > 0 and nw > 0 else None

    for attempt in range(6):  # initial try plus up to 5 random restarts
        pair = initial_vw(cfg.init if attempt == 0 else "random")
        if pair is None:
            continue
        v, w = pair
        u = np.zeros(x.shape[0])
        trace = []
        prev = None
        converged = False
        iterations = 0
        failed = False
        for iterations in range(1, cfg.max_iter + 1):
            cu = contract_u(x, q.q2 @ v, q.q3 @ w)
            u, nrm = solve_mode("u", cu, q.q1, lam_u, lips[0])
            if nrm == 0.0:
                if lam_u > 0:
                    return _zero_rank_one(x, iterations, trace)
                failed = True
                break
            trace.append(float(u @ (q.q1 @ cu)) - _l1_terms(lams, u, v, w))
            cv = contract_v(x, q.q1 @ u, q.q3 @ w)
            v, nrm = solve_mode("v", cv, q.q2, lam_v, lips[1])
            if nrm == 0.0:
                if lam_v > 0:
                    return _zero_rank_one(x, iterations, trace)
                failed = True
                break
            trace.append(float(v @ (q.q2 @ cv)) - _l1_terms(lams, u, v, w))
            cw = contract_w(x, q.q1 @ u, q.q2 @ v)
            w, nrm = solve_mode("w", cw, q.q3, lam_w, lips[2])
            if nrm == 0.0:
                if lam_w > 0:
                    return _zero_rank_one(x, iterations, trace)
                failed = True
                break
            d = float(w @ (q.q3 @ cw))
            objective = d - _l1_terms(lams, u, v, w)
            trace.append(objective)
            if prev is not None and abs(objective - prev) <= cfg.tol * max(
                    abs(prev), _TINY):
                converged = True
                break
            prev = objective
        if not failed:
            return RankOneFit(u, v, w, d, iterations, converged,
                              np.asarray(trace),
                              {"u": lam_u, "v": lam_v, "w": lam_w})
    return _zero_rank_one(x, 0, [])


def _l1_terms(lams, u, v, w) -> float:
    lam_u, lam_v, lam_w = lams
    total = 0.0
    if lam_u:
        total += lam_u * float(np.sum(np.abs(u)))
    if lam_v:
        total += lam_v * float(np.sum(np.abs(v)))
    if lam_w:
        total += lam_w * float(np.sum(np.abs(w)))
    return total


def _zero_rank_one(x, iterations, trace) -> RankOneFit:
    return RankOneFit(np.zeros(x.shape[0]), np.zeros(x.shape[1]),
                      np.zeros(x.shape[2]), 0.0, iterations, True,
                      np.asarray(trace))


def gcp_rank_one(x, q: QuadOperators, cfg: SolverConfig | None = None
                 ) -> RankOneFit:
    """Rank-one fit under per-mode quadratic norms.

    Factors satisfy the q-weighted unit constraints and the weight is the
    q-weighted triple contraction; with identity operators this is the
    plain power scheme.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    q.require_positive_definite()
    return _gcp_engine(x, q, (0.0, 0.0, 0.0), cfg, cfg.rng())


def sparse_gcp_rank_one(x, q: QuadOperators, lam=(0.0, 0.0, 0.0),
                        cfg: SolverConfig | None = None) -> RankOneFit:
    """Sparse rank-one fit under quadratic norms.

    Each update solves a q-weighted lasso then q-normalizes (or zeroes
    the component); reduces to the plain sparse fit for identity
    operators and to :func:`gcp_rank_one` at zero levels.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    q.require_positive_definite()
    lam = tuple(float(v) for v in lam)
    if min(lam) < 0:
        raise ValueError("penalty levels must be non-negative")
    return _gcp_engine(x, q, lam, cfg, cfg.rng())


def _deflate_rank_ones(x, K, fit_one, method: str) -> CpModel:
    n, p, q_dim = x.shape
    U, V, W = np.zeros((n, K)), np.zeros((p, K)), np.zeros((q_dim, K))
    d = np.zeros(K)
    traces = []
    resid = x.copy()
    truncated_at = None
    for k in range(K):
        if frob_norm(resid) == 0.0:
            truncated_at = k
            break
        fit = fit_one(resid)
        traces.append(fit.objective_trace)
        if fit.d <= 0.0:
            truncated_at = k
            break
        U[:, k], V[:, k], W[:, k], d[k] = fit.u, fit.v, fit.w, fit.d
        resid = resid - outer3(fit.u, fit.v, fit.w, fit.d)
    U, V, W, d, order = sort_components(U, V, W, d)
    U, V, W = canonicalize_cp_signs(U, V, W)
    diagnostics: dict[str, Any] = {
        "method": method, "component_order": order,
        "objective_traces": traces, "residual_norm": frob_norm(resid),
    }
    if truncated_at is not None:
        diagnostics["truncated_at"] = truncated_at
    return CpModel(U, V, W, d, diagnostics)


def gcp(x, q: QuadOperators, K: int, cfg: SolverConfig | None = None
        ) -> CpModel:
    """Deflated multi-component quadratic-norm decomposition."""
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    q.require_positive_definite()
    rng = cfg.rng()
    return _deflate_rank_ones(
        x, K, lambda r: _gcp_engine(r, q, (0.0, 0.0, 0.0), cfg, rng), "gcp")


def sparse_gcp(x, q: QuadOperators, K: int, lam=(0.0, 0.0, 0.0),
               cfg: SolverConfig | None = None) -> CpModel:
    """Deflated sparse quadratic-norm decomposition."""
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    q.require_positive_definite()
    lam = tuple(float(v) for v in lam)
    rng = cfg.rng()
    model = _deflate_rank_ones(
        x, K, lambda r: _gcp_engine(r, q, lam, cfg, rng), "sparse-gcp")
    model.diagnostics["sparse"] = True
    model.diagnostics["lambdas"] = {m: [value] * K for m, value
                                    in zip(("u", "v", "w"), lam)}
    return model


# ---------------------------------------------------------------------------
# multi-way functional PCA


def second_diff_penalty(length: int, alpha: float) -> np.ndarray:
    """``alpha * D'D`` for the second-difference operator (stencil 1,-2,1)."""
    return difference_penalty(length, alpha, order=2)


def difference_penalty(length: int, alpha: float, order: int = 2) -> np.ndarray:
    """Squared difference roughness penalty of the given order (2 or 4)."""
    if order not in (2, 4):
        raise ValueError("difference order must be 2 or 4")
    if length < order + 1:
        raise ValueError(f"length must be at least {order + 1}")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    diff = np.diff(np.eye(length), n=order, axis=0)
    return alpha * diff.T @ diff


def _sym_power(mat, power: float, floor: float = 1e-12) -> np.ndarray:
    vals, vecs = np.linalg.eigh(np.asarray(mat, dtype=float))
    vals = np.maximum(vals, floor)
    return (vecs * vals ** power) @ vecs.T


@dataclass
class SmootherSet:
    """Per-mode roughness penalties and the derived smoother matrices.

    Each smoother is ``S = I + alpha * Omega`` with ``Omega`` PSD, so S is
    positive definite with eigenvalues at least one; inverses and inverse
    square roots are computed by symmetric eigendecomposition with a
    small eigenvalue floor as a safety net.
    """

    omega_u: np.ndarray
    omega_v: np.ndarray
    omega_w: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.omega_u, _ = _check_symmetric_psd(self.omega_u, "omega_u")
        self.omega_v, _ = _check_symmetric_psd(self.omega_v, "omega_v")
        self.omega_w, _ = _check_symmetric_psd(self.omega_w, "omega_w")
        self._cache: dict[tuple[str, float], np.ndarray] = {}

    @classmethod
    def second_difference(cls, dims, alpha: float, order: int = 2
                          ) -> "SmootherSet":
        n, p, q = dims
        return cls(difference_penalty(n, 1.0, order),
                   difference_penalty(p, 1.0, order),
                   difference_penalty(q, 1.0, order), alpha)

    @classmethod
    def identity(cls, dims) -> "SmootherSet":
        n, p, q = dims
        return cls(np.zeros((n, n)), np.zeros((p, p)), np.zeros((q, q)), 0.0)

    @property
    def s_u(self) -> np.ndarray:
        return np.eye(self.omega_u.shape[0]) + self.alpha * self.omega_u

    @property
    def s_v(self) -> np.ndarray:
        return np.eye(self.omega_v.shape[0]) + self.alpha * self.omega_v

    @property
    def s_w(self) -> np.ndarray:
        return np.eye(self.omega_w.shape[0]) + self.alpha * self.omega_w

    def _matrix_fn(self, mode: str, power: float) -> np.ndarray:
        key = (mode, power)
        if key not in self._cache:
            smoother = {"u": self.s_u, "v": self.s_v, "w": self.s_w}[mode]
            if self.alpha == 0.0 or not np.any(
                    {"u": self.omega_u, "v": self.omega_v,
                     "w": self.omega_w}[mode]):
                self._cache[key] = np.eye(smoother.shape[0])
            else:
                self._cache[key] = _sym_power(smoother, power)
        return self._cache[key]

    def inverse(self, mode: str) -> np.ndarray:
        return self._matrix_fn(mode, -1.0)

    def inverse_sqrt(self, mode: str) -> np.ndarray:
        return self._matrix_fn(mode, -0.5)


def fpca_objective(x, s: SmootherSet, u, v, w) -> float:
    """Roughness-penalized rank-one loss for the tri-convex formulation."""
    fit = x - outer3(u, v, w)
    quad = (float(u @ (s.s_u @ u)) * float(v @ (s.s_v @ v))
            * float(w @ (s.s_w @ w)))
    norms = (float(u @ u) * float(v @ v) * float(w @ w))
    return float(np.sum(fit * fit)) + quad - norms


@dataclass
class FpcaFit:
    """Functional rank-one fit: raw (scale-carrying) factors plus the
    normalized equivalent used for cross-method comparison."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    iterations: int = 0
    converged: bool = False
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def normalized(self):
        nu, nv, nw = (float(np.linalg.norm(f)) for f in (self.u, self.v,
                                                         self.w))
        d = nu * nv * nw
        if d <= _TINY:
            return (np.zeros_like(self.u), np.zeros_like(self.v),
                    np.zeros_like(self.w), 0.0)
        return self.u / nu, self.v / nv, self.w / nw, d


def fpca_rank_one(x, s: SmootherSet, cfg: SolverConfig | None = None
                  ) -> FpcaFit:
    """Tri-convex functional rank-one fit by cyclic smoothed updates.

    Each block update solves its convex subproblem in closed form, so
    the objective is non-increasing; factors are returned unnormalized
    with the scale carried in the iterate (use :meth:`FpcaFit.normalized`
    for the unit-factor equivalent).  Convergence is declared on the
    sup-norm change of the factors, which (unlike the objective, flat to
    second order at the minimum) resolves the fixed point sharply.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    rng = cfg.rng()
    v, w = init_rank_one(x, cfg.init, rng)
    u = np.zeros(x.shape[0])
    inv_u, inv_v, inv_w = (s.inverse(m) for m in ("u", "v", "w"))
    su, sv, sw = s.s_u, s.s_v, s.s_w
    norm_x_sq = frob_norm(x) ** 2

    def qforms(a, b, c):
        return (float(a @ (su @ a)) * float(b @ (sv @ b))
                * float(c @ (sw @ c)))

    # the squared-norm products of the loss and the ridge term cancel, so
    # the objective reduces to ||x||^2 - 2 <x, u o v o w> + prod(S-forms)
    trace = []
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        u_old, v_old, w_old = u, v, w
        denom = float(v @ (sv @ v)) * float(w @ (sw @ w))
        if denom <= _TINY:
            break
        c = contract_u(x, v, w)
        u = inv_u @ c / denom
        trace.append(norm_x_sq - 2.0 * float(u @ c) + qforms(u, v, w))
        denom = float(u @ (su @ u)) * float(w @ (sw @ w))
        if denom <= _TINY:
            break
        c = contract_v(x, u, w)
        v = inv_v @ c / denom
        trace.append(norm_x_sq - 2.0 * float(v @ c) + qforms(u, v, w))
        denom = float(u @ (su @ u)) * float(v @ (sv @ v))
        if denom <= _TINY:
            break
        c = contract_w(x, u, v)
        w = inv_w @ c / denom
        trace.append(norm_x_sq - 2.0 * float(w @ c) + qforms(u, v, w))
        delta = max(float(np.max(np.abs(u - u_old))),
                    float(np.max(np.abs(v - v_old))),
                    float(np.max(np.abs(w - w_old))))
        scale = 1.0 + max(float(np.max(np.abs(u))), float(np.max(np.abs(v))),
                          float(np.max(np.abs(w))))
        if delta <= cfg.tol * scale:
            converged = True
            break
    return FpcaFit(u, v, w, iterations, converged, np.asarray(trace))


def fpca(x, s: SmootherSet, K: int, cfg: SolverConfig | None = None
         ) -> CpModel:
    """Deflated multi-component functional fit, reported in normalized form."""
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    if K < 1:
        raise ValueError("K must be >= 1")
    n, p, q_dim = x.shape
    U, V, W = np.zeros((n, K)), np.zeros((p, K)), np.zeros((q_dim, K))
    d = np.zeros(K)
    traces = []
    resid = x.copy()
    truncated_at = None
    for k in range(K):
        if frob_norm(resid) == 0.0:
            truncated_at = k
            break
        fit = fpca_rank_one(resid, s, cfg)
        traces.append(fit.objective_trace)
        uk, vk, wk, dk = fit.normalized()
        if dk <= 0.0:
            truncated_at = k
            break
        U[:, k], V[:, k], W[:, k], d[k] = uk, vk, wk, dk
        resid = resid - outer3(fit.u, fit.v, fit.w)
    U, V, W, d, order = sort_components(U, V, W, d)
    U, V, W = canonicalize_cp_signs(U, V, W)
    diagnostics: dict[str, Any] = {
        "method": "fpca", "component_order": order,
        "objective_traces": traces, "alpha": s.alpha,
    }
    if truncated_at is not None:
        diagnostics["truncated_at"] = truncated_at
    return CpModel(U, V, W, d, diagnostics)


def fpca_half_smoothing(x, s: SmootherSet, ranks,
                        cfg: SolverConfig | None = None) -> TuckerModel:
    """Functional components by half-smoothing around a Tucker fit.

    Half-smooths the data, runs orthogonal iteration, and half-smooths
    the resulting factors back.  This is generally not a stationary point
    of the tri-convex objective optimized by :func:`fpca_rank_one`.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    half_u, half_v, half_w = (s.inverse_sqrt(m) for m in ("u", "v", "w"))
    smoothed = mode_mult(mode_mult(mode_mult(x, half_u, 1), half_v, 2),
                         half_w, 3)
    inner = hooi(smoothed, ranks, cfg)
    model = TuckerModel(half_u @ inner.U, half_v @ inner.V, half_w @ inner.W,
                        inner.core, dict(inner.diagnostics))
    model.diagnostics["method"] = "fpca-halfsmooth"
    model.diagnostics["alpha"] = s.alpha
    return model
