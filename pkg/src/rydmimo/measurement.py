"""Measurement models: exact magnitude and strong-reference linearization.

Layout convention (shared with channel.synth_reference): 1d arrays produce
I x P matrices; 2d arrays produce the mode-3 unfolded P x (I1*I2) form with
cell index m = (i2-1)*I1 + i1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .channel import ChannelSet


@dataclass
class MeasurementSet:
    Y: np.ndarray          # real nonnegative
    Z: np.ndarray          # unit-modulus complex, exp(-j angle(b))
    absB: np.ndarray       # |b|
    S: np.ndarray          # complex K x P pilots
    sigma: float           # std of the complex noise n
    kind: str = "1d"
    dims: Tuple[int, ...] = ()
    model: str = "exact"

    def __post_init__(self):
        if self.Y.shape != self.Z.shape or self.Y.shape != self.absB.shape:
            raise ValueError("Y, Z, absB shapes differ")


def _signal_matrix(G, S: np.ndarray) -> Tuple[np.ndarray, str, Tuple[int, ...]]:
    """User-signal contribution in the measurement layout.

    Returns (A, kind, dims) with A = G S (1d, I x P) or S^T G3 (2d,
    P x M after unfolding the channel tensor).
    """
    coeffs = G.coefficients if isinstance(G, ChannelSet) else np.asarray(G)
    kind = G.kind if isinstance(G, ChannelSet) else ("1d" if coeffs.ndim == 2 else "2d")
    if kind == "1d":
        I, K = coeffs.shape
        if S.shape[0] != K:
            raise ValueError("pilot rows do not match channel users")
        return coeffs @ S, "1d", (I, S.shape[1])
    I1, I2, K = coeffs.shape
    if S.shape[0] != K:
        raise ValueError("pilot rows do not match channel users")
    G3 = coeffs.reshape(I1 * I2, K, order="F").T     # K x M
    return S.T @ G3, "2d", (I1, I2, S.shape[1])


def measure_exact(G, S: np.ndarray, B: np.ndarray, sigma: float,
                  seed=None) -> MeasurementSet:
    """y = |sum_k g s + b + n| with n ~ CN(0, sigma^2), elementwise."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    A, kind, dims = _signal_matrix(G, S)
    if A.shape != B.shape:
        raise ValueError(f"signal shape {A.shape} != reference shape {B.shape}")
    C = A + B
    if sigma > 0:
        rng = np.random.default_rng(seed)
        N = sigma / np.sqrt(2.0) * (rng.standard_normal(C.shape)
                                    + 1j * rng.standard_normal(C.shape))
        C = C + N
    Y = np.abs(C)
    return MeasurementSet(Y=Y, Z=np.exp(-1j * np.angle(B)), absB=np.abs(B),
                          S=np.asarray(S), sigma=float(sigma), kind=kind,
                          dims=dims, model="exact")


def measure_linearized(G, S: np.ndarray, B: np.ndarray, sigma: float,
                       seed=None) -> MeasurementSet:
    """y = |b| + Re(e^{-j angle(b)} * sum_k g s) + n with n ~ N(0, sigma^2/2)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if np.any(B == 0):
        raise ValueError("reference contains zero elements")
    A, kind, dims = _signal_matrix(G, S)
    if A.shape != B.shape:
        raise ValueError(f"signal shape {A.shape} != reference shape {B.shape}")
    Z = np.exp(-1j * np.angle(B))
    Y = np.abs(B) + (Z * A).real
    if sigma > 0:
        rng = np.random.default_rng(seed)
        Y = Y + sigma / np.sqrt(2.0) * rng.standard_normal(Y.shape)
    return MeasurementSet(Y=Y, Z=Z, absB=np.abs(B), S=np.asarray(S),
                          sigma=float(sigma), kind=kind, dims=dims,
                          model="linearized")


def linearization_gap(G, S: np.ndarray, B: np.ndarray) -> float:
    """Largest first-order Taylor residual, max | |a+b| - (|b| + Re(e^{-j ang b} a)) |.

    Noise-free; decays like 1/|b| as the reference grows at fixed signal.
    """
    if np.any(B == 0):
        raise ValueError("reference contains zero elements")
    A, _, _ = _signal_matrix(G, S)
    if A.shape != B.shape:
        raise ValueError(f"signal shape {A.shape} != reference shape {B.shape}")
    exact = np.abs(A + B)
    lin = np.abs(B) + (np.exp(-1j * np.angle(B)) * A).real
    return float(np.max(np.abs(exact - lin)))


def sigma_from_snr(G, S: np.ndarray, snr_db: float) -> float:
    """Noise std for a target SNR on the user-signal component.

    sigma^2 = mean |sum_k g s|^2 / 10^(snr_db/10); the reference is excluded
    from the power accounting.
    """
    A, _, _ = _signal_matrix(G, S)
    power = float(np.mean(np.abs(A) ** 2))
    if power == 0.0:
        raise ValueError("user signal is identically zero")
    return float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))


def export_measurements(M: MeasurementSet, path) -> None:
    """Columnar text export: i, p, y, re(z), im(z), |b| per element.

    For 2d sets, i is the flattened cell index m = (i2-1)*I1 + i1.
    """
    if M.kind == "1d":
        Y, Z, A = M.Y, M.Z, M.absB                 # I x P
    else:
        Y, Z, A = M.Y.T, M.Z.T, M.absB.T           # M x P view of P x M
    with open(path, "w", newline="\n") as f:
        f.write("i,p,y,re_z,im_z,abs_b\n")
        n_i, n_p = Y.shape
        for i in range(n_i):
            for p in range(n_p):
                f.write(f"{i + 1},{p + 1},{float(Y[i, p])!r},"
                        f"{float(Z[i, p].real)!r},{float(Z[i, p].imag)!r},"
                        f"{float(A[i, p])!r}\n")
