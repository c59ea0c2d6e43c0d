"""Closed-form electromagnetic field configurations.

Every model supplies the potentials (A, phi) together with E, B and the time
derivatives dB/dt, d2B/dt2 (plus dE/dt and div E, which the fourth-order
Hamiltonian terms need) as analytic closed forms -- derivatives are never
finite-differenced in production code.  ``maxwell_probe`` is the independent
stencil check that B = curl A and E = -dA/dt - grad phi actually hold for
whatever a model returns.

Models
------
Zero            everything vanishes.
UniformB        B(t) = B0 g(t) with the symmetric gauge A = B(t) x r / 2 and
                phi = 0, so E = -(B0 x r)/2 g'(t) is the induced field.  A
                strictly uniform time-varying B is an idealization (its
                source-free Maxwell partner would not be uniform); it is kept
                because the closed-form spin dynamics is derived in exactly
                this gauge.
UniformE        E(t) = E0 g(t) via the scalar potential phi = -E0.r g(t).
PlaneWavePulse  A = -(E0/omega) sin(u) G(u), u = k.r - omega t, with a
                Gaussian envelope G; E and B follow by differentiation and
                satisfy Faraday's law identically.

Envelopes g(t) are limited to shapes whose g' and g'' are closed-form:
constant, polynomials of degree <= 2, Gaussian, sinusoid.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import PreconditionError

__all__ = [
    "Envelope", "FieldSample", "FieldModel",
    "ZeroField", "UniformB", "UniformE", "PlaneWavePulse",
    "maxwell_probe",
]


@dataclass(frozen=True)
class Envelope:
    """Scalar time profile g(t) with analytic first and second derivatives.

    shape:
      "constant"    g = value
      "poly"        g = coeffs[0] + coeffs[1] t + coeffs[2] t^2
      "gaussian"    g = amplitude * exp(-(t-center)^2 / (2 width^2))
      "sinusoid"    g = amplitude * cos(omega t + phase)
    """

    shape: str = "constant"
    value: float = 1.0
    coeffs: tuple = (0.0, 0.0, 0.0)
    amplitude: float = 1.0
    center: float = 0.0
    width: float = 1.0
    omega: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.shape not in ("constant", "poly", "gaussian", "sinusoid"):
            raise PreconditionError(f"unsupported envelope shape {self.shape!r}")
        if self.shape == "gaussian" and not self.width > 0:
            raise PreconditionError("gaussian envelope needs width > 0")

    def __call__(self, t: float) -> float:
        return self.derivatives(t)[0]

    def derivatives(self, t: float):
        """(g, g', g'') at time t."""
        if self.shape == "constant":
            return self.value, 0.0, 0.0
        if self.shape == "poly":
            a0, a1, a2 = self.coeffs
            return a0 + a1 * t + a2 * t * t, a1 + 2.0 * a2 * t, 2.0 * a2
        if self.shape == "gaussian":
            u = (t - self.center) / self.width
            g = self.amplitude * np.exp(-0.5 * u * u)
            gp = -u / self.width * g
            gpp = (u * u - 1.0) / self.width**2 * g
            return g, gp, gpp
        w, ph = self.omega, self.phase
        g = self.amplitude * np.cos(w * t + ph)
        gp = -self.amplitude * w * np.sin(w * t + ph)
        gpp = -(w * w) * g
        return g, gp, gpp


@dataclass
class FieldSample:
    """All field quantities at one spacetime point (r, t)."""

    A: np.ndarray
    phi: float
    E: np.ndarray
    B: np.ndarray
    dBdt: np.ndarray
    d2Bdt2: np.ndarray
    dEdt: np.ndarray
    divE: float


class FieldModel:
    """Base class; subclasses implement :meth:`sample` plus the vectorized
    ``*_mesh`` evaluators used when building grid operators.  Mesh arguments
    are broadcastable coordinate arrays (absent axes enter as the scalar 0.0)
    and the returned components are arrays or scalars broadcastable against
    them.  ``sample`` remains the scalar reference implementation the mesh
    paths are tested against."""

    #: B, dB/dt, d2B/dt2 do not depend on position (true for all but plane waves)
    uniform_b = True
    #: A is identically zero
    has_vector_potential = False
    #: phi is identically zero
    has_scalar_potential = False

    def sample(self, r, t: float) -> FieldSample:
        raise NotImplementedError

    def a_mesh(self, r, t):
        return [0.0, 0.0, 0.0]

    def phi_mesh(self, r, t):
        return 0.0

    def e_mesh(self, r, t):
        return [0.0, 0.0, 0.0]

    def b_mesh(self, r, t):
        return [0.0, 0.0, 0.0]

    def dedt_mesh(self, r, t):
        return [0.0, 0.0, 0.0]

    def dbdt_mesh(self, r, t):
        return [0.0, 0.0, 0.0]

    def d2bdt2_mesh(self, r, t):
        return [0.0, 0.0, 0.0]

    def dive_mesh(self, r, t):
        return 0.0

    def b_of_t(self, t):
        """(B, dB/dt, d2B/dt2) at time t for uniform-B models."""
        if not self.uniform_b:
            raise PreconditionError("b_of_t is only defined for uniform-B models")
        s = self.sample(np.zeros(3), t)
        return s.B, s.dBdt, s.d2Bdt2

    def scaled(self, factor: float) -> "FieldModel":
        """A copy with the overall field amplitude multiplied by ``factor``."""
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


def _zeros3():
    return np.zeros(3)


@dataclass
class ZeroField(FieldModel):
    def sample(self, r, t):
        return FieldSample(_zeros3(), 0.0, _zeros3(), _zeros3(),
                           _zeros3(), _zeros3(), _zeros3(), 0.0)

    def scaled(self, factor):
        return ZeroField()

    def describe(self):
        return {"type": "zero"}


def _cross_mesh(v, r):
    """(v x r) for numeric 3-vector v and broadcastable meshes r."""
    rx, ry, rz = r
    return [v[1] * rz - v[2] * ry,
            v[2] * rx - v[0] * rz,
            v[0] * ry - v[1] * rx]


@dataclass
class UniformB(FieldModel):
    b0: np.ndarray = dataclass_field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    envelope: Envelope = dataclass_field(default_factory=Envelope)

    has_vector_potential = True

    def __post_init__(self):
        self.b0 = np.asarray(self.b0, dtype=float)

    def sample(self, r, t):
        r = np.asarray(r, dtype=float)
        g, gp, gpp = self.envelope.derivatives(t)
        b = self.b0 * g
        a = 0.5 * np.cross(b, r)
        e = -0.5 * np.cross(self.b0, r) * gp   # - dA/dt
        dedt = -0.5 * np.cross(self.b0, r) * gpp
        return FieldSample(a, 0.0, e, b, self.b0 * gp, self.b0 * gpp, dedt, 0.0)

    def a_mesh(self, r, t):
        g = self.envelope.derivatives(t)[0]
        return [0.5 * g * c for c in _cross_mesh(self.b0, r)]

    def e_mesh(self, r, t):
        gp = self.envelope.derivatives(t)[1]
        return [-0.5 * gp * c for c in _cross_mesh(self.b0, r)]

    def dedt_mesh(self, r, t):
        gpp = self.envelope.derivatives(t)[2]
        return [-0.5 * gpp * c for c in _cross_mesh(self.b0, r)]

    def b_mesh(self, r, t):
        g = self.envelope.derivatives(t)[0]
        return [self.b0[0] * g, self.b0[1] * g, self.b0[2] * g]

    def dbdt_mesh(self, r, t):
        gp = self.envelope.derivatives(t)[1]
        return [self.b0[0] * gp, self.b0[1] * gp, self.b0[2] * gp]

    def d2bdt2_mesh(self, r, t):
        gpp = self.envelope.derivatives(t)[2]
        return [self.b0[0] * gpp, self.b0[1] * gpp, self.b0[2] * gpp]

    def scaled(self, factor):
        return UniformB(self.b0 * factor, self.envelope)

    def describe(self):
        return {"type": "uniform_b", "b0": self.b0.tolist(),
                "envelope": self.envelope.shape}


@dataclass
class UniformE(FieldModel):
    e0: np.ndarray = dataclass_field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    envelope: Envelope = dataclass_field(default_factory=Envelope)

    has_scalar_potential = True

    def __post_init__(self):
        self.e0 = np.asarray(self.e0, dtype=float)

    def sample(self, r, t):
        r = np.asarray(r, dtype=float)
        g, gp, _ = self.envelope.derivatives(t)
        phi = -float(np.dot(self.e0, r)) * g
        return FieldSample(_zeros3(), phi, self.e0 * g, _zeros3(),
                           _zeros3(), _zeros3(), self.e0 * gp, 0.0)

    def phi_mesh(self, r, t):
        g = self.envelope.derivatives(t)[0]
        rx, ry, rz = r
        return -(self.e0[0] * rx + self.e0[1] * ry + self.e0[2] * rz) * g

    def e_mesh(self, r, t):
        g = self.envelope.derivatives(t)[0]
        return [self.e0[0] * g, self.e0[1] * g, self.e0[2] * g]

    def dedt_mesh(self, r, t):
        gp = self.envelope.derivatives(t)[1]
        return [self.e0[0] * gp, self.e0[1] * gp, self.e0[2] * gp]

    def scaled(self, factor):
        return UniformE(self.e0 * factor, self.envelope)

    def describe(self):
        return {"type": "uniform_e", "e0": self.e0.tolist(),
                "envelope": self.envelope.shape}


def _pulse_shape(u, center, width):
    """s = sin(u) G(u) with G a Gaussian; returns (s, s', s'', s''')."""
    x = (u - center) / width
    g = np.exp(-0.5 * x * x)
    g1 = -x / width * g
    g2 = (x * x - 1.0) / width**2 * g
    g3 = x * (3.0 - x * x) / width**3 * g
    sn, cs = np.sin(u), np.cos(u)
    s = sn * g
    s1 = cs * g + sn * g1
    s2 = -sn * g + 2.0 * cs * g1 + sn * g2
    s3 = -cs * g - 3.0 * sn * g1 + 3.0 * cs * g2 + sn * g3
    return s, s1, s2, s3


@dataclass
class PlaneWavePulse(FieldModel):
    """Gaussian-enveloped plane wave parametrized by the peak E amplitude.

    With u = k.r - omega t:
        A(r,t) = (E0/omega) s(u),    s(u) = sin(u) G(u)
        E = -dA/dt = E0 s'(u)           (peak |E| ~ |E0|)
        B = curl A = (k x E0/omega) s'(u)
    Faraday's law curl E = -dB/dt holds identically for any envelope.
    """

    e0: np.ndarray = dataclass_field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    wavevector: np.ndarray = dataclass_field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    omega: float = 1.0
    env_center: float = 0.0
    env_width: float = 5.0

    uniform_b = False
    has_vector_potential = True

    def __post_init__(self):
        self.e0 = np.asarray(self.e0, dtype=float)
        self.wavevector = np.asarray(self.wavevector, dtype=float)
        if self.omega == 0:
            raise PreconditionError("plane-wave pulse needs omega != 0")
        if not self.env_width > 0:
            raise PreconditionError("plane-wave pulse needs env_width > 0")

    def sample(self, r, t):
        r = np.asarray(r, dtype=float)
        u = float(np.dot(self.wavevector, r)) - self.omega * t
        s, s1, s2, s3 = _pulse_shape(u, self.env_center, self.env_width)
        a = (self.e0 / self.omega) * s
        e = self.e0 * s1
        kxe = np.cross(self.wavevector, self.e0)
        b = (kxe / self.omega) * s1
        dbdt = -kxe * s2                   # du/dt = -omega cancels 1/omega
        d2bdt2 = (kxe * self.omega) * s3
        dedt = -self.e0 * self.omega * s2
        dive = float(np.dot(self.wavevector, self.e0)) * s2
        return FieldSample(a, 0.0, e, b, dbdt, d2bdt2, dedt, dive)

    def _u_mesh(self, r, t):
        rx, ry, rz = r
        k = self.wavevector
        return k[0] * rx + k[1] * ry + k[2] * rz - self.omega * t

    def a_mesh(self, r, t):
        s = _pulse_shape(self._u_mesh(r, t), self.env_center, self.env_width)[0]
        return [(c / self.omega) * s for c in self.e0]

    def e_mesh(self, r, t):
        s1 = _pulse_shape(self._u_mesh(r, t), self.env_center, self.env_width)[1]
        return [c * s1 for c in self.e0]

    def b_mesh(self, r, t):
        s1 = _pulse_shape(self._u_mesh(r, t), self.env_center, self.env_width)[1]
        kxe = np.cross(self.wavevector, self.e0)
        return [(c / self.omega) * s1 for c in kxe]

    def dedt_mesh(self, r, t):
        s2 = _pulse_shape(self._u_mesh(r, t), self.env_center, self.env_width)[2]
        return [-c * self.omega * s2 for c in self.e0]

    def dbdt_mesh(self, r, t):
        s2 = _pulse_shape(self._u_mesh(r, t), self.env_center, self.env_width)[2]
        kxe = np.cross(self.wavevector, self.e0)
        return [-c * s2 for c in kxe]

    def d2bdt2_mesh(self, r, t):
        s3 = _pulse_shape(self._u_mesh(r, t), self.env_center, self.env_width)[3]
        kxe = np.cross(self.wavevector, self.e0)
        return [c * self.omega * s3 for c in kxe]

    def dive_mesh(self, r, t):
        s2 = _pulse_shape(self._u_mesh(r, t), self.env_center, self.env_width)[2]
        return float(np.dot(self.wavevector, self.e0)) * s2

    def scaled(self, factor):
        return PlaneWavePulse(self.e0 * factor, self.wavevector, self.omega,
                              self.env_center, self.env_width)

    def describe(self):
        return {"type": "plane_wave", "e0": self.e0.tolist(),
                "wavevector": self.wavevector.tolist(), "omega": self.omega}


def maxwell_probe(model: FieldModel, r, t: float, h: float = 1e-4) -> dict:
    """Second-order stencil check of a model's internal consistency.

    Compares central-difference curl A against the model's B, the numeric
    -dA/dt - grad phi against E, and reports div A.  Residuals are O(h^2)
    (exactly zero for potentials at most linear in the probed variable).
    """
    if not h > 0:
        raise PreconditionError("maxwell_probe needs h > 0")
    r = np.asarray(r, dtype=float)

    def a_at(rr, tt):
        return model.sample(rr, tt).A

    def phi_at(rr):
        return model.sample(rr, t).phi

    jac = np.zeros((3, 3))  # jac[i, j] = dA_i / dr_j
    grad_phi = np.zeros(3)
    for j in range(3):
        dr = np.zeros(3)
        dr[j] = h
        jac[:, j] = (a_at(r + dr, t) - a_at(r - dr, t)) / (2 * h)
        grad_phi[j] = (phi_at(r + dr) - phi_at(r - dr)) / (2 * h)
    curl = np.array([jac[2, 1] - jac[1, 2],
                     jac[0, 2] - jac[2, 0],
                     jac[1, 0] - jac[0, 1]])
    div_a = jac[0, 0] + jac[1, 1] + jac[2, 2]
    dadt = (a_at(r, t + h) - a_at(r, t - h)) / (2 * h)

    sample = model.sample(r, t)
    curl_residual = float(np.max(np.abs(curl - sample.B)))
    e_residual = float(np.max(np.abs(-dadt - grad_phi - sample.E)))
    return {
        "curl_residual": curl_residual,
        "e_residual": e_residual,
        "div_a": float(abs(div_a)),
    }
