"""Channel synthesis from scene descriptions.

Coefficients follow the physical model: each path contributes the dipole
coupling (mu_eg . eps)/hbar times its complex gain, with a geometric phase
progression across cells set by the angle of arrival. No renormalization is
applied, so values are numerically large; NMSE is scale invariant and double
precision carries the dynamic range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .scene import Scene


@dataclass
class ChannelSet:
    """Synthesized channel coefficients.

    kind "1d": coefficients is I x K. kind "2d": I1 x I2 x K, where the
    frontal slice [:, :, k] is user k's channel. rank_budget records the
    per-slice rank bound L when the scene guarantees one.
    """

    kind: str
    coefficients: np.ndarray
    rank_budget: Optional[int] = None


def dipole_coupling(mu_eg: np.ndarray, eps: np.ndarray, hbar: float):
    """(mu_eg . eps) / hbar. eps may be a single 3-vector or (..., 3)."""
    mu_eg = np.asarray(mu_eg, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if not (np.all(np.isfinite(mu_eg)) and np.all(np.isfinite(eps))):
        raise ValueError("non-finite dipole or polarization vector")
    out = eps @ mu_eg / hbar
    return float(out) if out.ndim == 0 else out


def _path_coupling(scene: Scene, path) -> np.ndarray:
    """Per-cell coupling for a path component, shape () or (n_cells,)."""
    if path.coupling is not None:
        return np.asarray(path.coupling, dtype=float)
    return np.asarray(
        dipole_coupling(scene.constants.mu_eg, path.polarization,
                        scene.constants.hbar)
    )


def synth_channel_1d(scene: Scene) -> ChannelSet:
    """g_{i,k} = sum_l coupling * gain * exp(-j (i-1) phi_{l,k})."""
    geo = scene.geometry
    if geo.kind != "1d":
        raise ValueError("synth_channel_1d requires a 1d geometry")
    I = geo.counts[0]
    K = scene.K
    idx = np.arange(I)
    G = np.zeros((I, K), dtype=complex)
    for k, paths in enumerate(scene.users):
        if len(paths) != scene.L:
            raise ValueError("ragged path lists")
        for path in paths:
            phi = geo.phase_1d(path.elevation)
            c = _path_coupling(scene, path)   # scalar or (I,)
            G[:, k] += c * path.gain * np.exp(-1j * idx * phi)
    return ChannelSet(kind="1d", coefficients=G, rank_budget=None)


def synth_channel_2d(scene: Scene) -> ChannelSet:
    """g_{i1,i2,k} = sum_l coupling * gain * exp(-j[(i1-1)u + (i2-1)v]).

    With cell-independent polarization each slice is a sum of L outer
    products a(u) b(v)^T, hence rank <= L.
    """
    geo = scene.geometry
    if geo.kind != "2d":
        raise ValueError("synth_channel_2d requires a 2d geometry")
    I1, I2 = geo.counts
    K = scene.K
    i1 = np.arange(I1)
    i2 = np.arange(I2)
    G = np.zeros((I1, I2, K), dtype=complex)
    rank_bound_holds = True
    for k, paths in enumerate(scene.users):
        if len(paths) != scene.L:
            raise ValueError("ragged path lists")
        for path in paths:
            u, v = geo.phase_2d(path.elevation, path.azimuth)
            c = _path_coupling(scene, path)
            outer = np.exp(-1j * i1 * u)[:, None] * np.exp(-1j * i2 * v)[None, :]
            if c.ndim > 0:
                # per-cell coupling (ablation profile): no outer-product
                # form, so the rank-L guarantee is lost
                outer = outer * c.reshape(I1, I2, order="F")
                rank_bound_holds = False
            else:
                outer = outer * float(c)
            G[:, :, k] += path.gain * outer
    return ChannelSet(kind="2d", coefficients=G,
                      rank_budget=scene.L if rank_bound_holds else None)


def synth_reference(scene: Scene) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reference signal matrices (B, Z, absB).

    1d: all three are I x P. 2d: P x (I1*I2), matching the mode-3 unfolded
    measurement layout with cell index m = (i2-1)*I1 + i1 (i1 fastest).
    Z_{.,.} = exp(-j angle(b)) and absB = |b|, the two known quantities the
    linearized model consumes.
    """
    geo = scene.geometry
    ref = scene.reference
    P = scene.P

    if ref.coupling is not None:
        c = np.asarray(ref.coupling, dtype=float)
    else:
        c = np.asarray(
            dipole_coupling(scene.constants.mu_eg, ref.polarization,
                            scene.constants.hbar)
        )

    if geo.kind == "1d":
        I = geo.counts[0]
        phi = geo.phase_1d(ref.elevation)
        steer = np.exp(-1j * np.arange(I) * phi)
        cell = c * ref.gain * steer                       # (I,)
        B = cell[:, None] * ref.symbols[None, :]          # I x P
    else:
        I1, I2 = geo.counts
        u, v = geo.phase_2d(ref.elevation, ref.azimuth)
        slab = np.exp(-1j * np.arange(I1) * u)[:, None] \
            * np.exp(-1j * np.arange(I2) * v)[None, :]
        if c.ndim > 0:
            slab = slab * c.reshape(I1, I2, order="F")
        else:
            slab = slab * float(c)
        cell = (ref.gain * slab).reshape(I1 * I2, order="F")  # (M,)
        B = ref.symbols[:, None] * cell[None, :]              # P x M

    if np.any(B == 0):
        raise ValueError("reference contains zero elements; phase undefined")
    absB = np.abs(B)
    Z = np.exp(-1j * np.angle(B))
    return B, Z, absB
