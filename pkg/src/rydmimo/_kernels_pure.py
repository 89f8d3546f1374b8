"""Pure-numpy estimator inner loops.

Reference implementations of the hot kernels; the compiled extension in
_core.pyx mirrors these exactly (same update order, same stopping test) so
the two backends produce matching trajectories.

All kernels return (G, iterations, loss_trace, converged) where loss_trace
has one entry per iterate including the initial point.
"""

import numpy as np

BACKEND_NAME = "pure"


def gd_1d(D, Z, S, G0, eta, tol, max_iters, grad_scale=2.0):
    """Gradient descent on || D - Re(Z o (G S)) ||_F^2.

    D = Y - |B| is the de-biased data. Stops when the squared step size
    falls below tol times the squared norm of the pre-update iterate.
    """
    G = G0.copy()
    Zc = Z.conj()
    Sh = S.conj().T
    trace = np.empty(max_iters + 1)
    R = D - (Z * (G @ S)).real
    trace[0] = np.vdot(R, R).real
    it = 0
    converged = False
    while it < max_iters:
        grad = -grad_scale * ((R * Zc) @ Sh)
        Gn = G - eta * grad
        dn = np.linalg.norm(Gn - G) ** 2
        gn = np.linalg.norm(G) ** 2
        G = Gn
        it += 1
        R = D - (Z * (G @ S)).real
        trace[it] = np.vdot(R, R).real
        if dn <= tol * gn:
            converged = True
            break
    return G, it, trace[: it + 1].copy(), converged


def _truncate_rows(G, L, I1, I2):
    """Replace each row, viewed as an I1 x I2 slice (i1 fastest), by its
    best rank-L approximation."""
    out = np.empty_like(G)
    for k in range(G.shape[0]):
        M = G[k].reshape(I1, I2, order="F")
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
        s[L:] = 0.0
        out[k] = ((U * s) @ Vh).reshape(-1, order="F")
    return out


def pgd_2d(D, Z, S, G0, I1, I2, L, eta, tol, max_iters, grad_scale=1.0):
    """Projected gradient descent on the unfolded 2d problem.

    D, Z are P x M; G is K x M; the residual model is Re(Z o (S^T G)).
    When L >= min(I1, I2) the projection is the identity and the iteration
    is plain gradient descent.
    """
    G = G0.copy()
    St = S.T
    Sc = S.conj()
    Zc = Z.conj()
    project = L < min(I1, I2)
    trace = np.empty(max_iters + 1)
    R = D - (Z * (St @ G)).real
    trace[0] = np.vdot(R, R).real
    it = 0
    converged = False
    while it < max_iters:
        grad = -grad_scale * (Sc @ (R * Zc))
        Gn = G - eta * grad
        if project:
            Gn = _truncate_rows(Gn, L, I1, I2)
        dn = np.linalg.norm(Gn - G) ** 2
        gn = np.linalg.norm(G) ** 2
        G = Gn
        it += 1
        R = D - (Z * (St @ G)).real
        trace[it] = np.vdot(R, R).real
        if dn <= tol * gn:
            converged = True
            break
    return G, it, trace[: it + 1].copy(), converged


def gs_1d(Y, B, S, pinv, G0, tol, max_iters):
    """Alternating magnitude imposition and least squares.

    pinv = S^H (S S^H)^{-1}. The monitored loss is the exact-model
    magnitude residual || Y - |G S + B| ||_F^2; iteration stops when its
    change per sweep falls below tol times its previous value.
    """
    G = G0.copy()
    trace = np.empty(max_iters + 1)
    C = G @ S + B
    res = np.linalg.norm(Y - np.abs(C)) ** 2
    trace[0] = res
    it = 0
    converged = False
    while it < max_iters:
        absC = np.abs(C)
        phase = np.where(absC > 0, C / np.where(absC > 0, absC, 1.0), 1.0)
        G = (Y * phase - B) @ pinv
        it += 1
        C = G @ S + B
        new_res = np.linalg.norm(Y - np.abs(C)) ** 2
        trace[it] = new_res
        if abs(res - new_res) <= tol * res:
            res = new_res
            converged = True
            break
        res = new_res
    return G, it, trace[: it + 1].copy(), converged
