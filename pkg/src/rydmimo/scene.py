"""Scene description and randomized scene generation.

A Scene is the ground truth for everything downstream: array geometry, the
multipath components of each user, the strong reference emitter, and the
pilot matrix. Scenes are drawn deterministically from a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .constants import PhysicalConstants, default_constants

PROFILES = ("default", "percell", "normalized")

# Reference symbol amplitude used by the stock profiles. Large relative to
# the unit-power user symbols so the receiver operates in the
# strong-reference regime the linearization assumes.
DEFAULT_REF_SYMBOL_AMP = 200.0


@dataclass
class ArrayGeometry:
    """Vapor-cell array layout: a 1D line or a 2D grid.

    counts holds (I,) for 1D and (I1, I2) for 2D; spacings likewise (d,) or
    (d1, d2) in meters.
    """

    kind: str
    counts: Tuple[int, ...]
    spacings: Tuple[float, ...]
    wavelength: float

    def __post_init__(self):
        if self.kind not in ("1d", "2d"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        expect = 1 if self.kind == "1d" else 2
        if len(self.counts) != expect or len(self.spacings) != expect:
            raise ValueError("counts/spacings do not match array kind")
        if any(c < 1 for c in self.counts):
            raise ValueError("cell counts must be >= 1")
        if any(d <= 0 for d in self.spacings) or self.wavelength <= 0:
            raise ValueError("spacings and wavelength must be positive")

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.counts))

    def phase_1d(self, elevation: float) -> float:
        """Per-cell phase increment phi = (2 pi d / lambda) cos(theta)."""
        return 2.0 * np.pi * self.spacings[0] / self.wavelength * np.cos(elevation)

    def phase_2d(self, elevation: float, azimuth: float) -> Tuple[float, float]:
        """(u, v) phase increments along the two grid axes."""
        u = 2.0 * np.pi * self.spacings[0] / self.wavelength * np.cos(elevation)
        v = (
            2.0 * np.pi * self.spacings[1] / self.wavelength
            * np.sin(elevation) * np.cos(azimuth)
        )
        return u, v


def half_wavelength_geometry(kind: str, counts: Tuple[int, ...],
                             constants: Optional[PhysicalConstants] = None
                             ) -> ArrayGeometry:
    """Standard geometry: half-wavelength spacing at the carrier frequency."""
    constants = constants or default_constants()
    lam = constants.wavelength
    spacings = tuple(lam / 2.0 for _ in counts)
    return ArrayGeometry(kind=kind, counts=tuple(int(c) for c in counts),
                         spacings=spacings, wavelength=lam)


@dataclass
class PathComponent:
    """One propagation path of one user.

    polarization is normally a real 3-vector shared by all cells; the
    "percell" ablation profile instead draws shape (n_cells, 3), which
    breaks the low-rank structure of 2D channel slices. coupling, when set,
    bypasses the dipole projection entirely (the "normalized" profile).
    """

    gain: complex
    elevation: float
    azimuth: float = 0.0
    polarization: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    coupling: Optional[Union[float, np.ndarray]] = None


@dataclass
class ReferenceEmitter:
    """The strong known emitter the measurement linearizes around."""

    gain: complex
    elevation: float
    azimuth: float = 0.0
    polarization: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    symbols: np.ndarray = field(default_factory=lambda: np.ones(1, dtype=complex))
    coupling: Optional[Union[float, np.ndarray]] = None


@dataclass
class Scene:
    constants: PhysicalConstants
    geometry: ArrayGeometry
    users: List[List[PathComponent]]   # K users, each a list of L paths
    reference: ReferenceEmitter
    pilots: np.ndarray                 # complex K x P
    profile: str = "default"
    seed: Optional[int] = None

    def __post_init__(self):
        lengths = {len(paths) for paths in self.users}
        if len(lengths) > 1:
            raise ValueError("all users must have the same number of paths")
        if self.reference.symbols.shape[0] != self.pilots.shape[1]:
            raise ValueError("reference symbols length must equal pilot length P")

    @property
    def K(self) -> int:
        return len(self.users)

    @property
    def L(self) -> int:
        return len(self.users[0])

    @property
    def P(self) -> int:
        return self.pilots.shape[1]


def _cn(rng: np.random.Generator, size=None) -> np.ndarray:
    """Standard circular complex Gaussian CN(0, 1)."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def draw_scene(rng_seed, K: int, L: int, geometry: ArrayGeometry,
               distribution_profile: str = "default", P: int = 30,
               ref_symbol_amp: float = DEFAULT_REF_SYMBOL_AMP,
               constants: Optional[PhysicalConstants] = None) -> Scene:
    """Draw a random scene.

    Profiles:
      default     gains CN(0,1), one N(0,1/3) polarization vector per path
                  shared across cells, reference polarization aligned with
                  the dipole axis, constant reference symbols.
      percell     like default but polarization drawn per cell for user
                  paths and the reference (ablation; breaks the 2D rank-L
                  slice structure and weakens some reference rows).
      normalized  couplings drawn N(0,1/3) directly instead of the
                  dipole projection (conditioning studies); reference
                  coupling fixed at sqrt(1/3).

    Angles: elevation uniform on [0, pi], azimuth uniform on [0, 2 pi).
    The reference gain is CN(0, 3.5); pilots are CN(0, 1).
    """
    if K < 1 or L < 1:
        raise ValueError("K and L must be >= 1")
    if distribution_profile not in PROFILES:
        raise ValueError(f"unknown distribution profile {distribution_profile!r}")
    constants = constants or default_constants()
    rng = np.random.default_rng(rng_seed)
    ncell = geometry.n_cells
    pol_std = np.sqrt(1.0 / 3.0)

    users: List[List[PathComponent]] = []
    for _ in range(K):
        paths = []
        for _ in range(L):
            gain = complex(_cn(rng))
            elevation = rng.uniform(0.0, np.pi)
            azimuth = rng.uniform(0.0, 2.0 * np.pi)
            if distribution_profile == "percell":
                pol = rng.normal(0.0, pol_std, size=(ncell, 3))
            else:
                pol = rng.normal(0.0, pol_std, size=3)
            coupling = None
            if distribution_profile == "normalized":
                coupling = float(rng.normal(0.0, pol_std))
            paths.append(PathComponent(gain=gain, elevation=elevation,
                                       azimuth=azimuth, polarization=pol,
                                       coupling=coupling))
        users.append(paths)

    ref_gain = complex(np.sqrt(3.5) * _cn(rng))
    ref_elev = rng.uniform(0.0, np.pi)
    ref_azim = rng.uniform(0.0, 2.0 * np.pi)
    if distribution_profile == "percell":
        ref_pol = rng.normal(0.0, pol_std, size=(ncell, 3))
        ref_coupling = None
    elif distribution_profile == "normalized":
        ref_pol = np.array([0.0, 1.0, 0.0])
        ref_coupling = pol_std  # fixed at the rms coupling of the user paths
    else:
        # aligned with the dipole axis: keeps every cell's reference strong,
        # which is what the strong-reference linearization needs
        ref_pol = np.array([0.0, 1.0, 0.0])
        ref_coupling = None
    symbols = np.full(P, ref_symbol_amp, dtype=complex)
    reference = ReferenceEmitter(gain=ref_gain, elevation=ref_elev,
                                 azimuth=ref_azim, polarization=ref_pol,
                                 symbols=symbols, coupling=ref_coupling)

    pilots = _cn(rng, size=(K, P))

    return Scene(constants=constants, geometry=geometry, users=users,
                 reference=reference, pilots=pilots,
                 profile=distribution_profile,
                 seed=rng_seed if isinstance(rng_seed, int) else None)


# ---------------------------------------------------------------------------
# serialization (frozen scenes; complex values stored as [re, im] pairs)

SCENE_SCHEMA = "rydmimo-scene/1"


def _c2pair(z: complex):
    return [float(np.real(z)), float(np.imag(z))]


def _pair2c(p) -> complex:
    return complex(p[0], p[1])


def scene_to_dict(scene: Scene) -> dict:
    geo = scene.geometry
    d = {
        "schema": SCENE_SCHEMA,
        "profile": scene.profile,
        "seed": scene.seed,
        "K": scene.K,
        "L": scene.L,
        "P": scene.P,
        "geometry": {
            "kind": geo.kind,
            "counts": list(geo.counts),
            "spacings": [float(s) for s in geo.spacings],
            "wavelength": float(geo.wavelength),
        },
        "users": [
            [
                {
                    "gain": _c2pair(p.gain),
                    "elevation": float(p.elevation),
                    "azimuth": float(p.azimuth),
                    "polarization": np.asarray(p.polarization).tolist(),
                    "coupling": None if p.coupling is None else float(p.coupling),
                }
                for p in paths
            ]
            for paths in scene.users
        ],
        "reference": {
            "gain": _c2pair(scene.reference.gain),
            "elevation": float(scene.reference.elevation),
            "azimuth": float(scene.reference.azimuth),
            "polarization": np.asarray(scene.reference.polarization).tolist(),
            "coupling": (None if scene.reference.coupling is None
                         else float(scene.reference.coupling)),
            "symbols": [_c2pair(s) for s in scene.reference.symbols],
        },
        "pilots": [[_c2pair(s) for s in row] for row in scene.pilots],
    }
    return d


def scene_from_dict(d: dict, constants: Optional[PhysicalConstants] = None) -> Scene:
    if d.get("schema") != SCENE_SCHEMA:
        raise ValueError(f"unsupported scene schema {d.get('schema')!r}")
    geo = ArrayGeometry(kind=d["geometry"]["kind"],
                        counts=tuple(d["geometry"]["counts"]),
                        spacings=tuple(d["geometry"]["spacings"]),
                        wavelength=d["geometry"]["wavelength"])
    users = [
        [
            PathComponent(gain=_pair2c(p["gain"]),
                          elevation=p["elevation"],
                          azimuth=p["azimuth"],
                          polarization=np.asarray(p["polarization"], dtype=float),
                          coupling=p.get("coupling"))
            for p in paths
        ]
        for paths in d["users"]
    ]
    r = d["reference"]
    reference = ReferenceEmitter(gain=_pair2c(r["gain"]),
                                 elevation=r["elevation"],
                                 azimuth=r["azimuth"],
                                 polarization=np.asarray(r["polarization"], dtype=float),
                                 coupling=r.get("coupling"),
                                 symbols=np.array([_pair2c(s) for s in r["symbols"]]))
    pilots = np.array([[_pair2c(s) for s in row] for row in d["pilots"]])
    return Scene(constants=constants or default_constants(), geometry=geo,
                 users=users, reference=reference, pilots=pilots,
                 profile=d.get("profile", "default"), seed=d.get("seed"))
