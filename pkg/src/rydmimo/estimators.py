"""Channel estimators: 1d gradient descent, 2d projected gradient descent
with per-user rank truncation, and the Gerchberg-Saxton style baseline.

All estimators consume a MeasurementSet and return an EstimateReport. The
gradient methods minimize the linearized-model residual; the baseline
alternates magnitude imposition with least squares on the exact model.

Gradient conventions: grad_1d carries the factor 2 of the true packed
real-parameter gradient (its real/imag parts are dL/dRe(G), dL/dIm(G)).
grad_2d defaults to the half-size variant (gradient_scale=1) and the step
size absorbs the difference, so trajectories are identical for any scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ._backend import BACKEND, kernels
from .channel import ChannelSet
from .measurement import MeasurementSet

STEP_RULES = ("fixed", "lipschitz", "backtracking")
INIT_KINDS = ("zeros", "random", "spectral")

# Armijo parameters for the backtracking rule
_BT_BETA = 0.5
_BT_C = 1e-4

_DIVERGENCE_FACTOR = 1e6


class DivergenceError(RuntimeError):
    pass


@dataclass
class EstimatorConfig:
    step_rule: str = "lipschitz"
    step_value: Optional[float] = None   # eta for step_rule="fixed"
    max_iters: int = 5000
    tol: float = 1e-10                   # relative squared-change threshold
    rank_budget: Optional[int] = None    # L, for the 2d projection
    init: str = "zeros"
    init_seed: Optional[int] = None
    gradient_scale: float = 1.0          # 2d gradient convention knob

    def __post_init__(self):
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.init not in INIT_KINDS:
            raise ValueError(f"unknown init {self.init!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.rank_budget is not None and self.rank_budget < 1:
            raise ValueError("rank_budget must be >= 1")
        if self.step_rule == "fixed" and self.step_value is None:
            raise ValueError("step_rule='fixed' requires step_value")
        if self.init == "random" and self.init_seed is None:
            raise ValueError("init='random' requires init_seed")
        if self.gradient_scale <= 0:
            raise ValueError("gradient_scale must be > 0")


@dataclass
class EstimateReport:
    estimate: ChannelSet
    iterations: int
    final_loss: float
    loss_trace: np.ndarray
    converged: bool
    backend: str = BACKEND


# ---------------------------------------------------------------------------
# 1d loss / gradient

def _coeffs(G) -> np.ndarray:
    return G.coefficients if isinstance(G, ChannelSet) else np.asarray(G)


def loss_1d(G, M: MeasurementSet) -> float:
    """|| Y - |B| - Re(Z o (G S)) ||_F^2."""
    G = _coeffs(G)
    R = M.Y - M.absB - (M.Z * (G @ M.S)).real
    return float(np.vdot(R, R).real)


def grad_1d(G, M: MeasurementSet) -> np.ndarray:
    """-2 ((Y - |B| - Re((G S) o Z)) o Z*) S^H.

    Packed real-parameter gradient: real/imag parts are the partials with
    respect to Re(G) and Im(G).
    """
    G = _coeffs(G)
    R = M.Y - M.absB - (M.Z * (G @ M.S)).real
    return -2.0 * ((R * M.Z.conj()) @ M.S.conj().T)


# ---------------------------------------------------------------------------
# tensor folding utilities

def unfold3(T: np.ndarray) -> np.ndarray:
    """Mode-3 unfolding: (I1, I2, P) -> (P, I1*I2), column (i2-1)*I1 + i1."""
    T = np.asarray(T)
    if T.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={T.ndim}")
    I1, I2, P = T.shape
    return T.reshape(I1 * I2, P, order="F").T


def fold3(Mtx: np.ndarray, dims: Tuple[int, int, int]) -> np.ndarray:
    """Inverse of unfold3; dims = (I1, I2, P)."""
    Mtx = np.asarray(Mtx)
    I1, I2, P = dims
    if Mtx.shape != (P, I1 * I2):
        raise ValueError(f"matrix shape {Mtx.shape} does not match dims {dims}")
    return Mtx.T.reshape(I1, I2, P, order="F")


def project_rank(M3: np.ndarray, L: int, dims: Tuple[int, int]) -> np.ndarray:
    """Per-row best rank-L approximation.

    Each row of M3 is reshaped to an I1 x I2 slice (same column pairing as
    unfold3), truncated to rank L via SVD, and re-flattened.
    """
    M3 = np.asarray(M3)
    I1, I2 = dims
    if M3.ndim != 2 or M3.shape[1] != I1 * I2:
        raise ValueError(f"row length {M3.shape} does not match dims {dims}")
    if not (1 <= L <= min(I1, I2)):
        raise ValueError(f"rank budget L={L} outside [1, min(I1, I2)]")
    if not np.all(np.isfinite(M3.view(float))):
        raise ValueError("non-finite input to project_rank")
    out = np.empty_like(M3, dtype=complex)
    for k in range(M3.shape[0]):
        slab = M3[k].reshape(I1, I2, order="F")
        U, s, Vh = np.linalg.svd(slab, full_matrices=False)
        s[L:] = 0.0
        out[k] = ((U * s) @ Vh).reshape(-1, order="F")
    return out


# ---------------------------------------------------------------------------
# 2d loss / gradient (unfolded form)

def loss_2d(G3, M: MeasurementSet) -> float:
    """|| Y - |B| - Re(Z o (S^T G3)) ||_F^2 on the unfolded P x M layout."""
    G3 = _coeffs(G3)
    R = M.Y - M.absB - (M.Z * (M.S.T @ G3)).real
    return float(np.vdot(R, R).real)


def grad_2d(G3, M: MeasurementSet, scale: float = 1.0) -> np.ndarray:
    """-scale * S* ((Y - |B| - Re(Z o (S^T G3))) o Z*).

    With scale=1 this is the half-size gradient convention (the packed
    real-parameter gradient is twice this); scale=2 recovers the 1d
    convention. Step-size defaults compensate, so the iteration trajectory
    does not depend on scale.
    """
    G3 = _coeffs(G3)
    R = M.Y - M.absB - (M.Z * (M.S.T @ G3)).real
    return -scale * (M.S.conj() @ (R * M.Z.conj()))


# ---------------------------------------------------------------------------
# shared estimator plumbing

def _spectral_norm_sq(S: np.ndarray) -> float:
    return float(np.linalg.norm(S, 2) ** 2)


def _initial_guess(shape, cfg: EstimatorConfig, D: np.ndarray,
                   Z: np.ndarray, S: np.ndarray, kind: str) -> np.ndarray:
    if cfg.init == "zeros":
        return np.zeros(shape, dtype=complex)
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.init_seed)
        n_cells = shape[0] if kind == "1d" else shape[1]
        v = float(np.vdot(D, D).real) / max(n_cells * np.linalg.norm(S) ** 2, 1e-300)
        g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        return np.sqrt(v / 2.0) * g
    # "spectral": matched filter of the de-biased data, scaled to LS size
    sn = _spectral_norm_sq(S)
    if kind == "1d":
        return ((D * Z.conj()) @ S.conj().T) / sn
    return (S.conj() @ (D * Z.conj())) / sn


def _check_divergence(trace: np.ndarray, context: str) -> None:
    initial = trace[0]
    bad = not np.all(np.isfinite(trace))
    if not bad and initial > 0:
        bad = bool(trace.max() > _DIVERGENCE_FACTOR * initial)
    if bad:
        raise DivergenceError(
            f"{context}: loss grew from {initial:.3e} to {trace.max():.3e} "
            f"after {len(trace) - 1} iterations; the step size is too large"
        )


def _backtracking_loop(loss_fn, grad_fn, G0, eta0, tol, max_iters,
                       project_fn=None):
    """Armijo backtracking descent shared by the 1d/2d python paths.

    The line search acts on the gradient step; for the projected variant
    the rank projection is applied after the accepted step.
    """
    G = G0.copy()
    trace = [loss_fn(G)]
    converged = False
    it = 0
    while it < max_iters:
        g = grad_fn(G)
        gnorm2 = float(np.vdot(g, g).real)
        f0 = trace[-1]
        eta = eta0
        while True:
            cand = G - eta * g
            if loss_fn(cand) <= f0 - _BT_C * eta * gnorm2 or eta < 1e-20:
                break
            eta *= _BT_BETA
        if project_fn is not None:
            cand = project_fn(cand)
        dn = float(np.linalg.norm(cand - G) ** 2)
        gn = float(np.linalg.norm(G) ** 2)
        G = cand
        it += 1
        trace.append(loss_fn(G))
        if dn <= tol * gn:
            converged = True
            break
    return G, it, np.array(trace), converged


def _as_c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


# ---------------------------------------------------------------------------
# estimators

def estimate_gd_1d(M: MeasurementSet, cfg: Optional[EstimatorConfig] = None
                   ) -> EstimateReport:
    """Gradient descent for the 1d linearized model."""
    if M.kind != "1d":
        raise ValueError("estimate_gd_1d requires 1d measurements")
    cfg = cfg or EstimatorConfig()
    D = M.Y - M.absB
    I = D.shape[0]
    K = M.S.shape[0]
    G0 = _initial_guess((I, K), cfg, D, M.Z, M.S, "1d")

    if cfg.step_rule == "backtracking":
        eta0 = 1.0 / _spectral_norm_sq(M.S)
        G, it, trace, converged = _backtracking_loop(
            lambda G: loss_1d(G, M), lambda G: grad_1d(G, M),
            G0, eta0, cfg.tol, cfg.max_iters)
    else:
        eta = (cfg.step_value if cfg.step_rule == "fixed"
               else 1.0 / (2.0 * _spectral_norm_sq(M.S)))
        G, it, trace, converged = kernels.gd_1d(
            _as_f64(D), _as_c128(M.Z), _as_c128(M.S), _as_c128(G0),
            float(eta), float(cfg.tol), int(cfg.max_iters), 2.0)
    _check_divergence(trace, "estimate_gd_1d")
    return EstimateReport(estimate=ChannelSet(kind="1d", coefficients=G),
                          iterations=it, final_loss=float(trace[-1]),
                          loss_trace=trace, converged=converged)


def estimate_pgd_2d(M: MeasurementSet, cfg: Optional[EstimatorConfig] = None
                    ) -> EstimateReport:
    """Projected gradient descent with per-user rank-L truncation (2d)."""
    if M.kind != "2d":
        raise ValueError("estimate_pgd_2d requires 2d measurements")
    cfg = cfg or EstimatorConfig()
    if cfg.rank_budget is None:
        raise ValueError("estimate_pgd_2d requires cfg.rank_budget (L)")
    I1, I2, _P = M.dims
    L = cfg.rank_budget
    if L > min(I1, I2):
        raise ValueError(f"rank budget L={L} exceeds min(I1, I2)")
    D = M.Y - M.absB
    K = M.S.shape[0]
    G0 = _initial_guess((K, I1 * I2), cfg, D, M.Z, M.S, "2d")
    scale = cfg.gradient_scale

    if cfg.step_rule == "backtracking":
        eta0 = 1.0 / (_spectral_norm_sq(M.S) * scale)
        project_fn = None
        if L < min(I1, I2):
            project_fn = lambda G: project_rank(G, L, (I1, I2))  # noqa: E731
        G3, it, trace, converged = _backtracking_loop(
            lambda G: loss_2d(G, M), lambda G: grad_2d(G, M, scale),
            G0, eta0, cfg.tol, cfg.max_iters, project_fn)
    else:
        eta = (cfg.step_value if cfg.step_rule == "fixed"
               else 1.0 / (2.0 * _spectral_norm_sq(M.S) * scale))
        G3, it, trace, converged = kernels.pgd_2d(
            _as_f64(D), _as_c128(M.Z), _as_c128(M.S), _as_c128(G0),
            int(I1), int(I2), int(L), float(eta), float(cfg.tol),
            int(cfg.max_iters), float(scale))
    _check_divergence(trace, "estimate_pgd_2d")
    tensor = G3.T.reshape(I1, I2, K, order="F")
    return EstimateReport(estimate=ChannelSet(kind="2d", coefficients=tensor,
                                              rank_budget=L),
                          iterations=it, final_loss=float(trace[-1]),
                          loss_trace=trace, converged=converged)


def estimate_gs_1d(M: MeasurementSet, cfg: Optional[EstimatorConfig] = None
                   ) -> EstimateReport:
    """Gerchberg-Saxton style baseline, reconstructed for the biased model.

    Alternates (i) C = G S + B, (ii) magnitude imposition
    C_hat = Y o exp(j angle(C)), (iii) least squares
    G = (C_hat - B) S^H (S S^H)^{-1}, until the exact-model magnitude
    residual stops changing. Runs on exact-model measurements only; the
    least-squares step needs P >= K.
    """
    if M.kind != "1d":
        raise ValueError("baseline is 1D-only")
    if M.model != "exact":
        raise ValueError("estimate_gs_1d requires exact-model measurements")
    cfg = cfg or EstimatorConfig()
    K, P = M.S.shape
    if P < K:
        raise ValueError("gs baseline needs P >= K for the LS step")
    B = M.absB * M.Z.conj()      # Z = exp(-j angle(B)) => B = |B| Z*
    try:
        pinv = M.S.conj().T @ np.linalg.inv(M.S @ M.S.conj().T)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular S S^H: {exc}") from exc
    D = M.Y - M.absB
    I = M.Y.shape[0]
    G0 = _initial_guess((I, K), cfg, D, M.Z, M.S, "1d")
    G, it, trace, converged = kernels.gs_1d(
        _as_f64(M.Y), _as_c128(B), _as_c128(M.S), _as_c128(pinv),
        _as_c128(G0), float(cfg.tol), int(cfg.max_iters))
    return EstimateReport(estimate=ChannelSet(kind="1d", coefficients=G),
                          iterations=it, final_loss=float(trace[-1]),
                          loss_trace=trace, converged=converged)
