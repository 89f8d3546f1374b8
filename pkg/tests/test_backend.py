import os
import subprocess
import sys

import numpy as np
import pytest

from rydmimo._backend import BACKEND, available_backends, get_kernels
from rydmimo.scene import draw_scene, half_wavelength_geometry
from rydmimo.channel import synth_channel_1d, synth_channel_2d, synth_reference
from rydmimo.measurement import measure_exact, sigma_from_snr

HAVE_EXT = "ext" in available_backends()
needs_ext = pytest.mark.skipif(not HAVE_EXT,
                               reason="compiled extension not built")


def _problem(kind, counts, P=13, seed=30):
    sc = draw_scene(seed, 3, 4, half_wavelength_geometry(kind, counts), P=P)
    G = synth_channel_1d(sc) if kind == "1d" else synth_channel_2d(sc)
    B, _, _ = synth_reference(sc)
    sigma = sigma_from_snr(G, sc.pilots, 8.0)
    M = measure_exact(G, sc.pilots, B, sigma, seed + 1)
    return sc, G, M


def _c(a):
    return np.ascontiguousarray(a)


def test_pure_backend_always_available():
    assert "pure" in available_backends()
    assert BACKEND in available_backends()
    assert get_kernels("pure").BACKEND_NAME == "pure"
    with pytest.raises(ValueError, match="unknown backend"):
        get_kernels("bogus")


@needs_ext
def test_gd_1d_backends_agree():
    sc, G, M = _problem("1d", (8,))
    D = _c(M.Y - M.absB)
    G0 = np.zeros_like(G.coefficients)
    eta = 1.0 / (2.0 * np.linalg.norm(M.S, 2) ** 2)
    outs = {}
    for bk in ("pure", "ext"):
        outs[bk] = get_kernels(bk).gd_1d(D, _c(M.Z), _c(M.S), _c(G0),
                                         eta, 0.0, 60)
    scale = np.abs(outs["pure"][0]).max()
    assert np.abs(outs["pure"][0] - outs["ext"][0]).max() < 1e-9 * scale
    assert outs["pure"][1] == outs["ext"][1] == 60
    np.testing.assert_allclose(outs["pure"][2], outs["ext"][2], rtol=1e-9)


@needs_ext
@pytest.mark.parametrize("L", [8, 5, 1])
def test_pgd_2d_backends_agree(L):
    sc, G, M = _problem("2d", (8, 8))
    D = _c(M.Y - M.absB)
    G0 = np.zeros((3, 64), dtype=complex)
    eta = 1.0 / (2.0 * np.linalg.norm(M.S, 2) ** 2)
    outs = {}
    for bk in ("pure", "ext"):
        outs[bk] = get_kernels(bk).pgd_2d(D, _c(M.Z), _c(M.S), _c(G0),
                                          8, 8, L, eta, 0.0, 40)
    scale = np.abs(outs["pure"][0]).max()
    assert np.abs(outs["pure"][0] - outs["ext"][0]).max() < 1e-8 * scale
    np.testing.assert_allclose(outs["pure"][2], outs["ext"][2], rtol=1e-8)


@needs_ext
def test_gs_1d_backends_agree():
    sc, G, M = _problem("1d", (8,), P=9)
    B = _c(M.absB * M.Z.conj())
    pinv = _c(M.S.conj().T @ np.linalg.inv(M.S @ M.S.conj().T))
    G0 = np.zeros_like(G.coefficients)
    outs = {}
    for bk in ("pure", "ext"):
        outs[bk] = get_kernels(bk).gs_1d(_c(M.Y), B, _c(M.S), pinv, _c(G0),
                                         0.0, 40)
    scale = np.abs(outs["pure"][0]).max()
    assert np.abs(outs["pure"][0] - outs["ext"][0]).max() < 1e-8 * scale
    np.testing.assert_allclose(outs["pure"][2], outs["ext"][2], rtol=1e-8)


@needs_ext
def test_stopping_decisions_identical():
    # with a live tolerance both backends must stop at the same iteration
    sc, G, M = _problem("1d", (8,), P=20, seed=31)
    D = _c(M.Y - M.absB)
    G0 = np.zeros_like(G.coefficients)
    eta = 1.0 / (2.0 * np.linalg.norm(M.S, 2) ** 2)
    rp = get_kernels("pure").gd_1d(D, _c(M.Z), _c(M.S), _c(G0), eta,
                                   1e-10, 5000)
    re = get_kernels("ext").gd_1d(D, _c(M.Z), _c(M.S), _c(G0), eta,
                                  1e-10, 5000)
    assert rp[1] == re[1]
    assert rp[3] == re[3] is True


def test_env_var_selects_backend():
    code = "import rydmimo; print(rydmimo.BACKEND)"
    for name in available_backends():
        env = dict(os.environ, RYDMIMO_BACKEND=name)
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        assert out.stdout.strip() == name


def test_env_var_rejects_missing_backend():
    env = dict(os.environ, RYDMIMO_BACKEND="nonsense")
    out = subprocess.run([sys.executable, "-c", "import rydmimo"], env=env,
                         capture_output=True, text=True)
    assert out.returncode != 0
