"""Dense complex 4x4 matrix kernel: Dirac matrices, commutators, eigensolver.

Everything downstream (spin operators, Hamiltonians, per-mode propagators)
reduces to exact arithmetic on 4x4 complex matrices.  The representation is
fixed to the standard one with beta diagonal,

    beta  = diag(+1, +1, -1, -1)
    alpha_i = [[0, sigma_i], [sigma_i, 0]]
    Sigma_i = [[sigma_i, 0], [0, sigma_i]]

so that "diagonal / off-diagonal in particle-antiparticle space" is literal
2x2 block structure.

The Hermitian eigensolver is a cyclic complex Jacobi iteration - deterministic
and dependency-free, accurate to ~1e-15 on 4x4 inputs.  Degenerate eigenvalues
are ordered ascending and each eigenvector's phase is fixed by making its
first nonzero component real and positive.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError

__all__ = [
    "SIGMA_X", "SIGMA_Y", "SIGMA_Z", "ID4",
    "dirac_matrices", "commutator", "anticommutator",
    "is_hermitian", "is_unitary", "herm_eigs", "exp_minus_iHt",
    "levi_civita",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID4 = np.eye(4, dtype=complex)

_Z2 = np.zeros((2, 2), dtype=complex)


def _offdiag(s):
    return np.block([[_Z2, s], [s, _Z2]])


def _blockdiag(s):
    return np.block([[s, _Z2], [_Z2, s]])


_ALPHA = tuple(_offdiag(s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))
_BETA = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
_SIGMA = tuple(_blockdiag(s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))

# Levi-Civita symbol, indexed [i, j, k].
_EPS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS[_i, _j, _k] = 1.0
    _EPS[_i, _k, _j] = -1.0


def levi_civita(i: int, j: int, k: int) -> float:
    return _EPS[i, j, k]


def dirac_matrices():
    """Return ``(alpha, beta, sigma)``: the three alpha_i, beta, and the
    three doubled Pauli matrices Sigma_i, all as fresh 4x4 complex arrays."""
    return (
        tuple(a.copy() for a in _ALPHA),
        _BETA.copy(),
        tuple(s.copy() for s in _SIGMA),
    )


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[a, b] = ab - ba."""
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """{a, b} = ab + ba."""
    return a @ b + b @ a


def is_hermitian(a: np.ndarray, tol: float = 1e-10) -> bool:
    scale = max(np.linalg.norm(a), 1.0)
    return np.linalg.norm(a - a.conj().T) <= tol * scale


def is_unitary(a: np.ndarray, tol: float = 1e-10) -> bool:
    n = a.shape[0]
    return np.linalg.norm(a.conj().T @ a - np.eye(n)) <= tol * max(1.0, np.linalg.norm(a))


def _jacobi_rotation(app, aqq, apq):
    """Unitary 2x2 rotation (c, s, phase) zeroing the (p,q) element of a
    Hermitian matrix with diagonal entries app, aqq and off-diagonal apq."""
    mod = abs(apq)
    phase = apq / mod
    tau = (aqq.real - app.real) / (2.0 * mod)
    if tau >= 0:
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c, phase


def herm_eigs(a: np.ndarray, tol: float = 1e-10):
    """Eigendecomposition of a Hermitian 4x4 (or nxn) complex matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvector columns ``v``.  Raises :class:`PreconditionError` when the
    input is not Hermitian within ``tol``.
    """
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        raise PreconditionError("herm_eigs requires a Hermitian matrix")
    n = a.shape[0]
    h = 0.5 * (a + a.conj().T)  # symmetrize roundoff, exact for Hermitian input
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(h), 1e-300)

    for _sweep in range(60):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += abs(h[p, q]) ** 2
        if np.sqrt(2.0 * off) <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(h[p, q]) <= 1e-18 * scale:
                    continue
                c, s, ph = _jacobi_rotation(h[p, p], h[q, q], h[p, q])
                # columns of the plane rotation: G[p,p]=c, G[q,p]=-s*conj(ph),
                # G[p,q]=s*ph, G[q,q]=c ; then h <- G^H h G, v <- v G
                gp = np.zeros(n, dtype=complex)
                gq = np.zeros(n, dtype=complex)
                gp[p], gp[q] = c, -s * np.conj(ph)
                gq[p], gq[q] = s * ph, c
                hp = h @ gp
                hq = h @ gq
                h[:, p], h[:, q] = hp, hq
                hp = np.conj(gp) @ h
                hq = np.conj(gq) @ h
                h[p, :], h[q, :] = hp, hq
                vp = v @ gp
                vq = v @ gq
                v[:, p], v[:, q] = vp, vq

    w = np.real(np.diag(h))
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    # phase convention: first component with non-negligible modulus made
    # real positive, so degenerate pairs come out reproducibly
    for k in range(n):
        col = v[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-12))
        ph = col[idx] / abs(col[idx])
        v[:, k] = col / ph
    return w, v


def exp_minus_iHt(h: np.ndarray, t: float, tol: float = 1e-10) -> np.ndarray:
    """exp(-i h t) for Hermitian h, via the spectral decomposition.

    The result is unitary to roundoff; composing with the inverse time step
    recovers the identity.
    """
    w, v = herm_eigs(h, tol)
    phases = np.exp(-1j * w * t)
    return (v * phases) @ v.conj().T
