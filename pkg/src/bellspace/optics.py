"""One subsystem's optical arrangement.

A single-photon polarization qubit in modes (x, y) meets a beam splitter
whose other input port is vacuum. Each output port passes a polarization
transformation and a polarizing beam splitter, feeding detectors
``1x, 1y`` (port 1) and ``2x, 2y`` (port 2). Exactly one detector clicks per
photon, so click statistics are given by four unnormalized detector states
in the two-dimensional input space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError
from .qcore import ATOL_ALGEBRA, SIGMA0, PureQubit, projector

DETECTORS = ("1x", "1y", "2x", "2y")

TWO_PI = 2 * math.pi


def canonical_angles(theta: float, phi: float) -> tuple[float, float]:
    """Fold ``(theta, phi)`` into ``theta in [0, pi]``, ``phi in [0, 2 pi)``.

    ``(2 pi - theta, phi + pi)`` names the same Poincare point, and the detector
    projectors built from it are identical (the kets only change sign).
    """
    theta = math.fmod(float(theta), TWO_PI)
    if theta < 0:
        theta += TWO_PI
    phi = float(phi)
    if theta > math.pi:
        theta = TWO_PI - theta
        phi += math.pi
    phi = math.fmod(phi, TWO_PI)
    if phi < 0:
        phi += TWO_PI
    if phi >= TWO_PI:  # fmod rounding on tiny negative inputs
        phi = 0.0
    return theta, phi


@dataclass(frozen=True)
class PolarizationSetting:
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        theta, phi = canonical_angles(self.theta, self.phi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float = 0.0) -> "PolarizationSetting":
        return cls(math.radians(theta_deg), math.radians(phi_deg))


@dataclass(frozen=True)
class BeamSplitter:
    """Lossless splitter with real per-polarization coefficients.

    Construction does not validate; see :func:`validate_arm`.
    """

    t_x: float
    t_y: float
    r_x: float
    r_y: float

    @classmethod
    def nonpolarizing(cls, r: float) -> "BeamSplitter":
        t = math.sqrt(max(0.0, 1.0 - r * r))
        return cls(t_x=t, t_y=t, r_x=r, r_y=r)

    @classmethod
    def balanced(cls) -> "BeamSplitter":
        return cls.nonpolarizing(1 / math.sqrt(2))

    @property
    def is_nonpolarizing(self) -> bool:
        return abs(self.t_x - self.t_y) <= ATOL_ALGEBRA and abs(self.r_x - self.r_y) <= ATOL_ALGEBRA


@dataclass(frozen=True)
class ArmConfig:
    bs: BeamSplitter
    omega1: PolarizationSetting = field(default_factory=PolarizationSetting)
    omega2: PolarizationSetting = field(default_factory=PolarizationSetting)


@dataclass(frozen=True)
class DetectorStates:
    psi_1x: np.ndarray
    psi_1y: np.ndarray
    psi_2x: np.ndarray
    psi_2y: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"1x": self.psi_1x, "1y": self.psi_1y, "2x": self.psi_2x, "2y": self.psi_2y}

    def projectors(self) -> dict[str, np.ndarray]:
        return {d: projector(v) for d, v in self.as_dict().items()}

    def completeness_residual(self) -> float:
        total = sum(self.projectors().values())
        return float(np.max(np.abs(total - SIGMA0)))


def poincare(omega: PolarizationSetting) -> np.ndarray:
    th, ph = omega.theta, omega.phi
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def _port_states(cx: float, cy: float, omega: PolarizationSetting):
    c, s = math.cos(omega.theta / 2), math.sin(omega.theta / 2)
    e = complex(math.cos(omega.phi), math.sin(omega.phi))
    plus = np.array([cx * c, cy * e * s], dtype=complex)
    minus = np.array([-cx * s, cy * e * c], dtype=complex)
    return plus, minus


def detector_states(arm: ArmConfig) -> DetectorStates:
    bs = arm.bs
    psi_1x, psi_1y = _port_states(bs.r_x, bs.r_y, arm.omega1)
    psi_2x, psi_2y = _port_states(bs.t_x, bs.t_y, arm.omega2)
    return DetectorStates(psi_1x, psi_1y, psi_2x, psi_2y)


@dataclass(frozen=True)
class ArmReport:
    x_residual: float
    y_residual: float
    in_range: bool
    completeness_residual: float
    atol: float = ATOL_ALGEBRA

    @property
    def valid(self) -> bool:
        return (
            self.in_range
            and self.x_residual <= self.atol
            and self.y_residual <= self.atol
            and self.completeness_residual <= self.atol
        )

    def failures(self) -> list[str]:
        out = []
        if self.x_residual > self.atol:
            out.append(f"t_x^2 + r_x^2 - 1 off by {self.x_residual:.3g}")
        if self.y_residual > self.atol:
            out.append(f"t_y^2 + r_y^2 - 1 off by {self.y_residual:.3g}")
        if not self.in_range:
            out.append("coefficients must lie in [0, 1]")
        if self.completeness_residual > self.atol:
            out.append(f"detector projectors miss identity by {self.completeness_residual:.3g}")
        return out


def validate_arm(arm: ArmConfig, atol: float = ATOL_ALGEBRA) -> ArmReport:
    bs = arm.bs
    coeffs = (bs.t_x, bs.t_y, bs.r_x, bs.r_y)
    return ArmReport(
        x_residual=abs(bs.t_x**2 + bs.r_x**2 - 1.0),
        y_residual=abs(bs.t_y**2 + bs.r_y**2 - 1.0),
        in_range=all(0.0 <= c <= 1.0 for c in coeffs),
        completeness_residual=detector_states(arm).completeness_residual(),
        atol=atol,
    )


def require_valid_arm(arm: ArmConfig, name: str = "arm") -> None:
    report = validate_arm(arm)
    if not report.valid:
        raise PreconditionError(f"{name}: " + "; ".join(report.failures()))


# -- independent Fock-sector path --------------------------------------------

# input modes (x, 0x, y, 0y); output modes (1x, 2x, 1y, 2y)
def mode_matrix(bs: BeamSplitter) -> np.ndarray:
    """Annihilation-operator map ``a_out = M a_in`` of the beam splitter."""
    return np.array(
        [
            [bs.r_x, bs.t_x, 0, 0],  # a_1x = t_x a_0x + r_x a_x
            [bs.t_x, -bs.r_x, 0, 0],  # a_2x = t_x a_x - r_x a_0x
            [0, 0, bs.r_y, bs.t_y],  # a_1y = t_y a_0y + r_y a_y
            [0, 0, bs.t_y, -bs.r_y],  # a_2y = t_y a_y - r_y a_0y
        ],
        dtype=complex,
    )


def _analyzer(omega: PolarizationSetting) -> np.ndarray:
    """Rows are the bras routed to the x and y detectors after the PBS."""
    c, s = math.cos(omega.theta / 2), math.sin(omega.theta / 2)
    e = complex(math.cos(omega.phi), math.sin(omega.phi))
    ket_plus = np.array([c, e * s])
    ket_minus = np.array([-s, e * c])
    return np.stack([ket_plus.conj(), ket_minus.conj()])


def fock_output_oracle(state: PureQubit, arm: ArmConfig) -> dict[str, float]:
    """Click probabilities from the full one-photon mode picture.

    The input photon ``mu a_x^dag + nu a_y^dag`` acting on vacuum is propagated
    through the unitary mode map; a creation operator transforms as
    ``a_in^dag = sum_out M[out, in] a_out^dag``. The output-port amplitudes are
    then analyzed by each port's polarization transformation followed by a
    polarizing split.
    """
    if state.norm_residual > ATOL_ALGEBRA:
        raise DomainError(f"input state is not normalized (residual {state.norm_residual:.3g})")
    m = mode_matrix(arm.bs)
    unitary_res = np.max(np.abs(m.conj().T @ m - np.eye(4)))
    if unitary_res > 1e-10:
        raise DomainError(f"beam splitter is not lossless (unitarity residual {unitary_res:.3g})")
    c_in = np.array([state.mu, 0, state.nu, 0], dtype=complex)
    c_out = m @ c_in
    port1 = np.array([c_out[0], c_out[2]])  # (1x, 1y)
    port2 = np.array([c_out[1], c_out[3]])  # (2x, 2y)
    a1 = _analyzer(arm.omega1) @ port1
    a2 = _analyzer(arm.omega2) @ port2
    probs = np.abs(np.concatenate([a1, a2])) ** 2
    return dict(zip(DETECTORS, (float(p) for p in probs)))


def click_probabilities(state: PureQubit, arm: ArmConfig) -> dict[str, float]:
    """Click probabilities ``|<psi_d|input>|^2`` from the reduced detector states."""
    vec = state.vector
    return {d: float(abs(np.vdot(psi, vec)) ** 2) for d, psi in detector_states(arm).as_dict().items()}


# -- random draws for property checks -----------------------------------------

def random_setting(rng: np.random.Generator) -> PolarizationSetting:
    """Setting whose Poincare vector is uniform on the sphere."""
    theta = math.acos(rng.uniform(-1.0, 1.0))
    return PolarizationSetting(theta, rng.uniform(0.0, TWO_PI))


def random_arm(rng: np.random.Generator, nonpolarizing: bool = False) -> ArmConfig:
    """Random lossless arm; independent x/y coefficients unless ``nonpolarizing``."""
    ax = rng.uniform(0.0, math.pi / 2)
    ay = ax if nonpolarizing else rng.uniform(0.0, math.pi / 2)
    bs = BeamSplitter(t_x=math.cos(ax), t_y=math.cos(ay), r_x=math.sin(ax), r_y=math.sin(ay))
    return ArmConfig(bs, random_setting(rng), random_setting(rng))


def random_pure_qubit(rng: np.random.Generator) -> PureQubit:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return PureQubit(complex(v[0]), complex(v[1]))
