"""Sparse decompositions: the deflation-based soft-thresholding scheme
(sparse rank-one fits with guaranteed monotone ascent), plus the three
algorithmic baselines built from penalized PCA updates (sparse ALS,
sparse HOSVD, sparse HOOI).

Penalty levels may be fixed per mode or selected per component and per
update by BIC over a grid.  Factors returned by every routine either
have unit norm or are exactly zero; a zero factor ends its component
with weight zero and deflation subtracts nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

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
    init_rank_one,
    leading_singular_vectors,
    normalize_or_zero,
    sort_components,
)
from .evaluate import bic_path, default_lambda_grid
from .tensor3 import check_tensor3, frob_norm, khatri_rao, matricize, mode_mult

__all__ = [
    "soft_threshold",
    "ModePenalty",
    "PenaltySpec",
    "SparseDiagnostics",
    "sparse_cp_tpa_rank_one",
    "sparse_cp_tpa",
    "lasso_coordinate_descent",
    "sparse_cp_als",
    "SparsePcaFit",
    "sparse_pca_rank_one",
    "sparse_pca",
    "sparse_hosvd",
    "sparse_hooi",
]

_TINY = 1e-300
_MODES = ("u", "v", "w")


def soft_threshold(x, lam: float):
    """Elementwise ``sign(x) * max(|x| - lam, 0)``."""
    if lam < 0:
        raise ValueError("threshold level must be non-negative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def _threshold_for_kind(kind: str):
    if kind in ("none", "lasso"):
        return soft_threshold
    if kind == "nonneg_lasso":
        from .generalized import positive_threshold
        return positive_threshold
    raise ValueError(f"unknown penalty kind {kind!r}")


@dataclass
class ModePenalty:
    """Regularization for one mode: a kind plus a fixed level or a grid.

    ``lam`` may be a non-negative scalar (fixed level), a strictly
    increasing grid (BIC-selected per component), or None, which selects
    over the default grid anchored at the update's zeroing level.
    """

    kind: str = "none"
    lam: float | Sequence[float] | None = None

    def __post_init__(self):
        if self.kind not in ("none", "lasso", "nonneg_lasso"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "none":
            self.lam = None
            return
        if self.lam is None:
            return
        if np.isscalar(self.lam):
            if self.lam < 0:
                raise ValueError("lambda must be non-negative")
            self.lam = float(self.lam)
        else:
            grid = np.asarray(self.lam, dtype=float)
            if grid.ndim != 1 or grid.size == 0:
                raise ValueError("lambda grid must be a non-empty vector")
            if np.any(grid < 0):
                raise ValueError("lambda grid must be non-negative")
            if grid.size > 1 and not np.all(np.diff(grid) > 0):
                raise ValueError("lambda grid must be strictly increasing")
            self.lam = grid

    @property
    def is_adaptive(self) -> bool:
        return self.kind != "none" and not np.isscalar(self.lam)

    def fixed_level(self) -> float:
        return 0.0 if self.kind == "none" else float(self.lam)

    def grid_for(self, contraction: np.ndarray) -> np.ndarray:
        if self.lam is not None:
            return np.asarray(self.lam, dtype=float)
        lam_max = float(np.max(np.abs(contraction))) if np.any(contraction) else 0.0
        return default_lambda_grid(lam_max)


@dataclass
class PenaltySpec:
    """Per-mode regularization description for the sparse solvers."""

    u: ModePenalty = field(default_factory=ModePenalty)
    v: ModePenalty = field(default_factory=ModePenalty)
    w: ModePenalty = field(default_factory=ModePenalty)

    @classmethod
    def none(cls) -> "PenaltySpec":
        return cls()

    @classmethod
    def lasso(cls, u=None, v=None, w=None, kind: str = "lasso") -> "PenaltySpec":
        """Lasso penalties per mode.

        A value of None leaves the mode unpenalized, a scalar fixes the
        level, a grid (or the string ``"bic"``) selects by BIC.
        """
        def make(value):
            if value is None:
                return ModePenalty("none")
            if isinstance(value, str):
                if value != "bic":
                    raise ValueError(f"unknown penalty value {value!r}")
                return ModePenalty(kind, None)
            return ModePenalty(kind, value)

        return cls(make(u), make(v), make(w))

    def by_mode(self) -> dict[str, ModePenalty]:
        return {"u": self.u, "v": self.v, "w": self.w}


@dataclass
class SparseDiagnostics:
    """Structured per-component audit data from a sparse solve."""

    iterations: list[int]
    objective_traces: list[np.ndarray]
    nnz: dict[str, list[int]]
    lambdas: dict[str, list[float]]

    @classmethod
    def from_model(cls, model) -> "SparseDiagnostics":
        diag = model.diagnostics
        return cls(list(diag.get("iterations_per_component", [])),
                   list(diag.get("objective_traces", [])),
                   dict(diag.get("nnz", {})),
                   dict(diag.get("lambdas", {})))


# ---------------------------------------------------------------------------
# deflation scheme: thresholded rank-one fits


def _penalty_l1(lam: float, vec: np.ndarray) -> float:
    return lam * float(np.sum(np.abs(vec))) if lam else 0.0


def _sparse_rank_one(x, pen: PenaltySpec, cfg, rng, norm_sq=None) -> RankOneFit:
    """One thresholded rank-one fit; the engine behind the deflation scheme.

    Each factor update thresholds the contraction against the other two
    factors and renormalizes (or zeroes the component).  With fixed
    levels every update monotonically increases the penalized objective;
    with a grid the level is re-selected by BIC at every update.
    """
    modes = pen.by_mode()
    adaptive = any(m.is_adaptive for m in modes.values())
    if adaptive and norm_sq is None:
        norm_sq = frob_norm(x) ** 2
    thresholds = {m: _threshold_for_kind(p.kind) for m, p in modes.items()}
    lam = {m: (0.0 if p.is_adaptive else p.fixed_level())
           for m, p in modes.items()}

    v, w = init_rank_one(x, cfg.init, rng)
    u = np.zeros(x.shape[0])
    trace = []
    prev = None
    converged = False
    iterations = 0

    def zero_fit():
        return RankOneFit(np.zeros(x.shape[0]), np.zeros(x.shape[1]),
                          np.zeros(x.shape[2]), 0.0, iterations, True,
                          np.asarray(trace), dict(lam))

    for iterations in range(1, cfg.max_iter + 1):
        for mode in _MODES:
            if mode == "u":
                c = contract_u(x, v, w)
            elif mode == "v":
                c = contract_v(x, u, w)
            else:
                c = contract_w(x, u, v)
            p = modes[mode]
            if p.is_adaptive:
                grid = p.grid_for(c)
                values, _ = bic_path(norm_sq, x.size, c, grid,
                                     thresholds[mode])
                lam[mode] = float(grid[np.flatnonzero(values == values.min())[-1]])
            f = thresholds[mode](c, lam[mode])
            f, nrm = normalize_or_zero(f)
            if nrm == 0.0:
                return zero_fit()
            if mode == "u":
                u = f
            elif mode == "v":
                v = f
            else:
                w = f
            objective = (float(f @ c)
                         - _penalty_l1(lam["u"], u)
                         - _penalty_l1(lam["v"], v)
                         - _penalty_l1(lam["w"], w))
            trace.append(objective)
        d = float(w @ c)  # triple contraction after the w-update
        if prev is not None and abs(objective - prev) <= cfg.tol * max(
                abs(prev), _TINY):
            converged = True
            break
        prev = objective
    return RankOneFit(u, v, w, d, iterations, converged, np.asarray(trace),
                      dict(lam))


def sparse_cp_tpa_rank_one(x, lam=(0.0, 0.0, 0.0),
                           cfg: SolverConfig | None = None) -> RankOneFit:
    """Single sparse rank-one fit at fixed soft-threshold levels.

    With all levels zero this reproduces the unregularized power scheme
    update for update.  An all-zero thresholded factor terminates the
    component with weight zero (a defined outcome, not an error).
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    lam_u, lam_v, lam_w = (float(v) for v in lam)
    pen = PenaltySpec(ModePenalty("lasso", lam_u), ModePenalty("lasso", lam_v),
                      ModePenalty("lasso", lam_w))
    return _sparse_rank_one(x, pen, cfg, cfg.rng())


def sparse_cp_tpa(x, K: int, pen: PenaltySpec | None = None,
                  cfg: SolverConfig | None = None) -> CpModel:
    """Deflation scheme: K sparse rank-one fits on running residuals.

    Penalty levels come from ``pen`` per mode: fixed scalars are shared
    across components, grids (or None with kind set) are re-selected per
    component and update by BIC.  A zero component truncates the model
    with the remaining columns zero-filled and flagged.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    pen = pen or PenaltySpec.none()
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = cfg.rng()
    n, p, q = x.shape
    U, V, W = np.zeros((n, K)), np.zeros((p, K)), np.zeros((q, K))
    d = np.zeros(K)
    traces: list[np.ndarray] = []
    iters: list[int] = []
    lambdas: dict[str, list[float]] = {m: [] for m in _MODES}
    nnz: dict[str, list[int]] = {m: [] for m in _MODES}
    resid = x.copy()
    truncated_at = None
    for k in range(K):
        norm_sq = frob_norm(resid) ** 2
        if norm_sq == 0.0:
            truncated_at = k
            break
        fit = _sparse_rank_one(resid, pen, cfg, rng, norm_sq)
        traces.append(fit.objective_trace)
        iters.append(fit.iterations)
        for mode, vec in zip(_MODES, (fit.u, fit.v, fit.w)):
            lambdas[mode].append(fit.lambdas.get(mode, 0.0))
            nnz[mode].append(int(np.count_nonzero(vec)))
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
        "method": "sparse-cp-tpa",
        "sparse": True,
        "greedy_d": greedy_d,
        "component_order": order,
        "objective_traces": traces,
        "iterations_per_component": iters,
        "lambdas": lambdas,
        "nnz": nnz,
        "residual_norm": frob_norm(resid),
    }
    if truncated_at is not None:
        diagnostics["truncated_at"] = truncated_at
    return CpModel(U, V, W, d, diagnostics)


# ---------------------------------------------------------------------------
# sparse alternating least squares


def lasso_coordinate_descent(gram, corr, lam: float, tol: float = 1e-8,
                             max_iter: int = 1000,
                             warm: np.ndarray | None = None) -> np.ndarray:
    """Row-separable lasso on the Gram form by cyclic coordinate descent.

    Solves ``min 0.5 ||Y - C @ H.T||_F^2 + lam * ||C||_1`` given
    ``gram = H.T @ H`` and ``corr = Y @ H``, sweeping columns until the
    largest coefficient change is below ``tol``.  A zero Gram diagonal
    (dead regressor) pins its column to zero.
    """
    gram = np.asarray(gram, dtype=float)
    corr = np.asarray(corr, dtype=float)
    k = gram.shape[0]
    coef = np.zeros_like(corr) if warm is None else np.array(warm, dtype=float)
    diag = np.diag(gram)
    for _sweep in range(max_iter):
        delta = 0.0
        for j in range(k):
            r = corr[:, j] - coef @ gram[:, j] + coef[:, j] * diag[j]
            new = (soft_threshold(r, lam) / diag[j] if diag[j] > _TINY
                   else np.zeros_like(r))
            step = float(np.max(np.abs(new - coef[:, j]))) if new.size else 0.0
            delta = max(delta, step)
            coef[:, j] = new
        if delta <= tol:
            break
    return coef


def _bic_lasso_matrix(norm_sq, size, gram, corr, grid, warm):
    """BIC over a grid for one whole-factor lasso update (warm-started)."""
    grid = np.asarray(grid, dtype=float)
    order = np.argsort(grid)[::-1]
    best = (np.inf, 0.0, None)
    coef = warm
    log_size = np.log(size)
    for idx in order:
        lam = float(grid[idx])
        coef = lasso_coordinate_descent(gram, corr, lam, warm=coef)
        resid_sq = (norm_sq - 2.0 * float(np.sum(coef * corr))
                    + float(np.sum((coef @ gram) * coef)))
        bic = (np.log(max(resid_sq, 1e-300) / size)
               + log_size / size * np.count_nonzero(coef))
        # descending grid: strict improvement keeps ties at larger lam
        if bic < best[0]:
            best = (bic, lam, coef.copy())
    return best[1], best[2]


def sparse_cp_als(x, K: int, pen: PenaltySpec | None = None,
                  cfg: SolverConfig | None = None) -> CpModel:
    """Alternating lasso updates of the CP factors.

    Each mode minimizes the Khatri-Rao least squares loss with an l1
    penalty on the scaled factor, then rescales columns to unit norm
    (zero columns allowed).  This recipe optimizes no joint objective, so
    iteration is capped and a stall criterion applied; the unpenalized
    objective trace is reported without any monotonicity claim.
    """
    x = check_tensor3(x)
    cfg = cfg or SolverConfig()
    pen = pen or PenaltySpec.none()
    if K < 1:
        raise ValueError("K must be >= 1")
    for mode_pen in pen.by_mode().values():
        if mode_pen.kind == "nonneg_lasso":
            raise ValueError("sparse_cp_als supports only lasso penalties")
    rng = cfg.rng()
    norm_x = frob_norm(x)
    from .decompose import _init_cp_factors

    U, V, W = (f.copy() for f in _init_cp_factors(x, K, cfg.init, rng))
    d = np.zeros(K)
    diagnostics: dict[str, Any] = {"method": "sparse-cp-als", "sparse": True}
    if norm_x == 0.0:
        diagnostics.update(iterations=0, converged=True, residual_norm=0.0,
                           lambdas={m: [0.0] for m in _MODES})
        return CpModel(U * 0.0, V * 0.0, W * 0.0, d, diagnostics)

    unfoldings = {m: matricize(x, m) for m in (1, 2, 3)}
    norm_sq = norm_x ** 2
    by_mode = pen.by_mode()
    lam_used = {m: 0.0 for m in _MODES}
    residual_trace = []
    objective_trace = []
    prev_obj = None
    stalled = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        for axis, mode in enumerate(_MODES, start=1):
            if mode == "u":
                a, b, target = V, W, U
            elif mode == "v":
                a, b, target = U, W, V
            else:
                a, b, target = U, V, W
            gram = (a.T @ a) * (b.T @ b)
            corr = unfoldings[axis] @ khatri_rao(b, a)
            mode_pen = by_mode[mode]
            warm = target * d
            if mode_pen.is_adaptive:
                lam_max = float(np.max(np.abs(corr))) if np.any(corr) else 0.0
                grid = (np.asarray(mode_pen.lam, dtype=float)
                        if mode_pen.lam is not None
                        else default_lambda_grid(lam_max))
                lam_used[mode], scaled = _bic_lasso_matrix(
                    norm_sq, x.size, gram, corr, grid, warm)
            else:
                lam_used[mode] = mode_pen.fixed_level()
                scaled = lasso_coordinate_descent(gram, corr, lam_used[mode],
                                                  warm=warm)
            d = np.linalg.norm(scaled, axis=0)
            for k in range(K):
                target[:, k] = scaled[:, k] / d[k] if d[k] > _TINY else 0.0
        resid = frob_norm(x - CpModel(U, V, W, d).reconstruct())
        residual_trace.append(resid)
        objective_trace.append(
            0.5 * resid ** 2
            + sum(lam_used[m] * float(np.sum(np.abs(f)))
                  for m, f in zip(_MODES, (U, V, W))))
        obj = resid / norm_x
        if prev_obj is not None and abs(prev_obj - obj) < cfg.tol:
            stalled = True
            break
        prev_obj = obj

    U, V, W, d, order = sort_components(U, V, W, d)
    U, V, W = canonicalize_cp_signs(U, V, W)
    diagnostics.update(
        iterations=iterations,
        converged=stalled,
        residual_norm=residual_trace[-1],
        residual_trace=np.asarray(residual_trace),
        objective_traces=[np.asarray(objective_trace)],
        lambdas={m: [lam_used[m]] for m in _MODES},
        nnz={m: [int(np.count_nonzero(f[:, k])) for k in range(K)]
             for m, f in zip(_MODES, (U, V, W))},
    )
    return CpModel(U, V, W, d, diagnostics)


# ---------------------------------------------------------------------------
# penalized rank-one SVD and the sparse Tucker baselines


@dataclass
class SparsePcaFit:
    """Penalized rank-one SVD result from alternating soft-thresholding."""

    u: np.ndarray
    v: np.ndarray
    d: float
    iterations: int = 0
    converged: bool = False
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam_left: float = 0.0
    lam_right: float = 0.0


def _sparse_pca_engine(m, left_pen: ModePenalty, lam_right, cfg,
                       norm_sq=None) -> SparsePcaFit:
    threshold = _threshold_for_kind(left_pen.kind)
    adaptive = left_pen.is_adaptive
    if adaptive and norm_sq is None:
        norm_sq = float(np.sum(m * m))
    lam_left = 0.0 if adaptive else left_pen.fixed_level()
    v = leading_singular_vectors(m.T, 1)[:, 0]
    u = np.zeros(m.shape[0])
    trace = []
    prev = None
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        c = m @ v
        if adaptive:
            grid = left_pen.grid_for(c)
            values, _ = bic_path(norm_sq, m.size, c, grid, threshold)
            lam_left = float(grid[np.flatnonzero(values == values.min())[-1]])
        u, nrm = normalize_or_zero(threshold(c, lam_left))
        if nrm == 0.0:
            return SparsePcaFit(np.zeros(m.shape[0]), np.zeros(m.shape[1]),
                                0.0, iterations, True, np.asarray(trace),
                                lam_left, lam_right)
        trace.append(float(u @ c) - lam_left * float(np.sum(np.abs(u)))
                     - lam_right * float(np.sum(np.abs(v))))
        cv = m.T @ u
        v, nrm = normalize_or_zero(soft_threshold(cv, lam_right))
        if nrm == 0.0:
            return SparsePcaFit(np.zeros(m.shape[0]), np.zeros(m.shape[1]),
                                0.0, iterations, True, np.asarray(trace),
                                lam_left, lam_right)
        objective = (float(v @ cv) - lam_left * float(np.sum(np.abs(u)))
                     - lam_right * float(np.sum(np.abs(v))))
        trace.append(objective)
        if prev is not None and abs(objective - prev) <= cfg.tol * max(
                abs(prev), _TINY):
            converged = True
            break
        prev = objective
    d = float(u @ m @ v)
    return SparsePcaFit(u, v, d, iterations, converged, np.asarray(trace),
                        lam_left, lam_right)


def sparse_pca_rank_one(m, lam_left: float = 0.0, lam_right: float = 0.0,
                        cfg: SolverConfig | None = None) -> SparsePcaFit:
    """Rank-one penalized SVD by alternating soft-thresholding.

    With both levels zero this converges to the leading singular pair; a
    fully thresholded factor terminates with weight zero.
    """
    m = np.asarray(m, dtype=float)
    cfg = cfg or SolverConfig()
    return _sparse_pca_engine(m, ModePenalty("lasso", float(lam_left)),
                              float(lam_right), cfg)


def sparse_pca(m, k: int, left_pen: ModePenalty, lam_right: float = 0.0,
               cfg: SolverConfig | None = None):
    """First k penalized principal components with rank-one deflation.

    Returns (left factors, right factors, weights, per-component lambdas).
    """
    m = np.asarray(m, dtype=float).copy()
    cfg = cfg or SolverConfig()
    left = np.zeros((m.shape[0], k))
    right = np.zeros((m.shape[1], k))
    d = np.zeros(k)
    lams = []
    for comp in range(k):
        fit = _sparse_pca_engine(m, left_pen, lam_right, cfg,
                                 float(np.sum(m * m)))
        lams.append(fit.lam_left)
        if fit.d == 0.0:
            break
        left[:, comp], right[:, comp], d[comp] = fit.u, fit.v, fit.d
        m = m - fit.d * np.outer(fit.u, fit.v)
    return left, right, d, lams


def sparse_hosvd(x, ranks, pen: PenaltySpec | None = None,
                 cfg: SolverConfig | None = None) -> TuckerModel:
    """Tucker-style factors from penalized PCA of each unfolding.

    Factor columns are the left vectors of successive penalized rank-one
    SVDs (deflated), so they are sparse and generally not orthonormal.
    """
    x = check_tensor3(x)
    k1, k2, k3 = (int(r) for r in ranks)
    cfg = cfg or SolverConfig()
    pen = pen or PenaltySpec.none()
    by_mode = pen.by_mode()
    factors = {}
    lambdas = {}
    for mode, axis, k in (("u", 1, k1), ("v", 2, k2), ("w", 3, k3)):
        left, _, _, lams = sparse_pca(matricize(x, axis), k, by_mode[mode],
                                      0.0, cfg)
        factors[mode] = left
        lambdas[mode] = lams
    U, V, W = factors["u"], factors["v"], factors["w"]
    core = mode_mult(mode_mult(mode_mult(x, U.T, 1), V.T, 2), W.T, 3)
    diagnostics = {
        "method": "sparse-hosvd", "sparse": True, "lambdas": lambdas,
        "nnz": {m: [int(np.count_nonzero(factors[m][:, k]))
                    for k in range(factors[m].shape[1])] for m in _MODES},
    }
    return TuckerModel(U, V, W, core, diagnostics)


def sparse_hooi(x, ranks, pen: PenaltySpec | None = None,
                cfg: SolverConfig | None = None) -> TuckerModel:
    """Orthogonal-iteration variant with penalized PCA inside each sweep.

    Convergence is not guaranteed, so iteration is capped and the sweep
    with the largest core norm is returned along with the full trace.
    """
    x = check_tensor3(x)
    k1, k2, k3 = (int(r) for r in ranks)
    cfg = cfg or SolverConfig()
    pen = pen or PenaltySpec.none()
    by_mode = pen.by_mode()
    start = sparse_hosvd(x, ranks, pen, cfg)
    U, V, W = start.U, start.V, start.W

    def core_of(u, v, w):
        return mode_mult(mode_mult(mode_mult(x, u.T, 1), v.T, 2), w.T, 3)

    best_norm = frob_norm(core_of(U, V, W))
    best = (U.copy(), V.copy(), W.copy())
    lambdas = dict(start.diagnostics["lambdas"])
    trace = [best_norm]
    prev = best_norm
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        y = mode_mult(mode_mult(x, V.T, 2), W.T, 3)
        U, _, _, lambdas["u"] = sparse_pca(matricize(y, 1), k1, by_mode["u"],
                                           0.0, cfg)
        y = mode_mult(mode_mult(x, U.T, 1), W.T, 3)
        V, _, _, lambdas["v"] = sparse_pca(matricize(y, 2), k2, by_mode["v"],
                                           0.0, cfg)
        y = mode_mult(mode_mult(x, U.T, 1), V.T, 2)
        W, _, _, lambdas["w"] = sparse_pca(matricize(y, 3), k3, by_mode["w"],
                                           0.0, cfg)
        core_norm = frob_norm(core_of(U, V, W))
        trace.append(core_norm)
        if core_norm > best_norm:
            best_norm = core_norm
            best = (U.copy(), V.copy(), W.copy())
        if abs(core_norm - prev) <= cfg.tol * max(prev, _TINY):
            break
        prev = core_norm

    U, V, W = best
    diagnostics = {
        "method": "sparse-hooi", "sparse": True, "iterations": iterations,
        "core_norm": best_norm, "core_norm_trace": np.asarray(trace),
        "lambdas": lambdas,
        "nnz": {m: [int(np.count_nonzero(f[:, k]))
                    for k in range(f.shape[1])]
                for m, f in zip(_MODES, (U, V, W))},
    }
    return TuckerModel(U, V, W, core_of(U, V, W), diagnostics)
