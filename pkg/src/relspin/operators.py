"""Fixed-momentum spin operators and the proper-spin-operator condition checks.

Three candidate spin operators are supported:

* ``DIRAC``:  S = Sigma/2, momentum independent.
* ``FW``:     the mean-spin operator obtained by conjugating Sigma/2 with the
  free block-diagonalizing transformation,

      S_FW = Sigma/2 + i c beta (p x alpha) / (2 E_p)
             - c^2 p x (Sigma x p) / (2 E_p (E_p + m0 c^2)).

  Note the explicit factors of c: they are required for [S_FW, H_free] = 0 to
  hold at every momentum when c != 1 (the widely quoted c=1 form is recovered
  by dropping them).
* ``PRYCE``:  S_Py = beta Sigma/2 + (1 - beta)(Sigma.p)p / (2 p^2), singular
  at p = 0 where the longitudinal projector has no limit.

The condition checks quantify, at a fixed momentum: (i) commutation with the
free Dirac Hamiltonian, (ii) the SU(2) algebra [S_i, S_j] = i eps_ijk S_k,
(iii) the +-1/2 eigenvalue spectrum of every component.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .algebra import ID4, commutator, dirac_matrices, herm_eigs, levi_civita
from .errors import PreconditionError, SingularMomentumError

__all__ = [
    "PhysParams", "SpinKind", "energy_ep", "free_dirac_matrix",
    "spin_operator", "position_correction", "condition_checks",
    "ConditionReport", "spin_rotation_matrix",
]

ALPHA, BETA, SIGMA = dirac_matrices()


@dataclass(frozen=True)
class PhysParams:
    """Physical constants of a run.  hbar is identically 1 and not a knob."""

    m0: float = 1.0
    c: float = 1.0
    e: float = -1.0
    p_floor_scale: float = 1e-12  # |p| <= p_floor_scale * m0 * c refuses Pryce

    def __post_init__(self):
        if not self.m0 > 0:
            raise PreconditionError(f"rest mass must be positive, got {self.m0}")
        if not self.c > 0:
            raise PreconditionError(f"speed of light must be positive, got {self.c}")

    @property
    def rest_energy(self) -> float:
        return self.m0 * self.c**2

    @property
    def p_floor(self) -> float:
        return self.p_floor_scale * self.m0 * self.c


class SpinKind(enum.Enum):
    DIRAC = "dirac"
    FW = "fw"
    PRYCE = "pryce"


def energy_ep(p, params: PhysParams) -> float:
    """Relativistic energy sqrt(p^2 c^2 + m0^2 c^4) of momentum p."""
    p = np.asarray(p, dtype=float)
    return float(np.sqrt(np.dot(p, p) * params.c**2 + params.rest_energy**2))


def free_dirac_matrix(p, params: PhysParams) -> np.ndarray:
    """c alpha.p + beta m0 c^2 as an exact 4x4 matrix."""
    p = np.asarray(p, dtype=float)
    h = params.rest_energy * BETA.copy()
    for i in range(3):
        h += params.c * p[i] * ALPHA[i]
    return h


def _cross_matrix(vec_mats, p):
    """(v x p)_i for a list of three matrices v_j and a numeric 3-vector p."""
    out = []
    for i in range(3):
        m = np.zeros((4, 4), dtype=complex)
        for j in range(3):
            for k in range(3):
                e = levi_civita(i, j, k)
                if e:
                    m += e * vec_mats[j] * p[k]
        out.append(m)
    return out


def spin_operator(kind: SpinKind, p, params: PhysParams):
    """The three components (S_x, S_y, S_z) of the requested spin operator
    at fixed momentum, each a Hermitian 4x4 matrix.

    Raises :class:`SingularMomentumError` for the Pryce operator when
    |p| <= params.p_floor.
    """
    p = np.asarray(p, dtype=float)
    if kind is SpinKind.DIRAC:
        return tuple(0.5 * s for s in SIGMA)

    c = params.c
    p2 = float(np.dot(p, p))
    if kind is SpinKind.PRYCE:
        if np.sqrt(p2) <= params.p_floor:
            raise SingularMomentumError(
                "Pryce spin operator is singular at p=0; "
                f"|p|={np.sqrt(p2):.3e} <= floor {params.p_floor:.3e}"
            )
        sp = sum(p[m] * SIGMA[m] for m in range(3))
        lower = ID4 - BETA
        return tuple(
            0.5 * BETA @ SIGMA[i] + 0.5 * lower @ sp * (p[i] / p2)
            for i in range(3)
        )

    if kind is not SpinKind.FW:
        raise PreconditionError(f"unknown spin kind {kind!r}")

    e_p = energy_ep(p, params)
    w = e_p + params.rest_energy
    pxalpha = _cross_matrix(list(ALPHA), -p)  # (p x alpha)_i = -(alpha x p)_i
    sp = sum(p[m] * SIGMA[m] for m in range(3))
    out = []
    for i in range(3):
        term1 = 0.5 * SIGMA[i]
        term2 = 1j * c * BETA @ pxalpha[i] / (2.0 * e_p)
        # p x (Sigma x p) = Sigma p^2 - p (Sigma.p)
        term3 = -(c**2) * (SIGMA[i] * p2 - p[i] * sp) / (2.0 * e_p * w)
        out.append(term1 + term2 + term3)
    return tuple(out)


def position_correction(kind: SpinKind, p, params: PhysParams):
    """Momentum-dependent matrix correction R(p) such that the kind's
    position operator is r + R(p).

    R is fixed by the exact total-angular-momentum identity
    R(p) x p + S_kind(p) = Sigma/2.  For the Dirac kind R = 0; the Pryce
    correction carries a genuine 1/p^2 singularity and is refused at p = 0.
    """
    p = np.asarray(p, dtype=float)
    if kind is SpinKind.DIRAC:
        return tuple(np.zeros((4, 4), dtype=complex) for _ in range(3))

    p2 = float(np.dot(p, p))
    if kind is SpinKind.PRYCE:
        if np.sqrt(p2) <= params.p_floor:
            raise SingularMomentumError(
                "Pryce position correction is singular at p=0"
            )
        sxp = _cross_matrix(list(SIGMA), p)  # (Sigma x p)_i
        lower = ID4 - BETA
        return tuple(-0.5 * lower @ sxp[i] / p2 for i in range(3))

    c = params.c
    e_p = energy_ep(p, params)
    w = e_p + params.rest_energy
    ap = sum(p[m] * ALPHA[m] for m in range(3))
    sxp = _cross_matrix(list(SIGMA), p)
    out = []
    for j in range(3):
        r1 = 1j * c * BETA @ ALPHA[j] / (2.0 * e_p)
        r2 = -1j * c**3 * BETA @ ap * p[j] / (2.0 * e_p**2 * w)
        r3 = -(c**2) * sxp[j] / (2.0 * e_p * w)
        out.append(r1 + r2 + r3)
    return tuple(out)


@dataclass
class ConditionReport:
    """Outcome of the proper-spin-operator checks at one momentum."""

    kind: SpinKind
    p: np.ndarray
    su2_residual: float
    spectrum: list  # per component, eigenvalues ascending
    free_commutation_residual: float
    free_commutation_components: list = field(default_factory=list)
    spectrum_residual: float = field(init=False)

    def __post_init__(self):
        target = np.array([-0.5, -0.5, 0.5, 0.5])
        self.spectrum_residual = max(
            float(np.max(np.abs(np.asarray(s) - target))) for s in self.spectrum
        )


def condition_checks(kind: SpinKind, p, params: PhysParams) -> ConditionReport:
    """Evaluate the three fixed-momentum proper-spin-operator conditions.

    su2_residual           max_ij || [S_i,S_j] - i eps_ijk S_k ||_F
    spectrum               sorted eigenvalues of each component
    free_commutation_residual   max_i || [S_i, H_free(p)] ||_F
    """
    p = np.asarray(p, dtype=float)
    s = spin_operator(kind, p, params)
    h = free_dirac_matrix(p, params)

    su2 = 0.0
    for i in range(3):
        for j in range(3):
            target = np.zeros((4, 4), dtype=complex)
            for k in range(3):
                e = levi_civita(i, j, k)
                if e:
                    target += 1j * e * s[k]
            su2 = max(su2, float(np.linalg.norm(commutator(s[i], s[j]) - target)))

    spectrum = [herm_eigs(s[i])[0].tolist() for i in range(3)]
    free_components = [float(np.linalg.norm(commutator(s[i], h))) for i in range(3)]
    return ConditionReport(kind, p, su2, spectrum, max(free_components),
                           free_components)


def spin_rotation_matrix(axis: int, angle: float) -> np.ndarray:
    """Spinor-space rotation exp(-i angle Sigma_axis / 2)."""
    s = SIGMA[axis]
    return np.cos(angle / 2.0) * ID4 - 1j * np.sin(angle / 2.0) * s
