"""Probability space 2: one noisy joint measurement of three observables.

The same four detectors are relabelled with two dichotomic variables:

    D1x -> (j=+1, k=+1)    D2x -> (j=+1, k=-1)
    D1y -> (j=-1, k=-1)    D2y -> (j=-1, k=+1)

When the elements take the form

    Delta(j, k) = (I + j gX SX.sigma + k gY SY.sigma + jk gXY SXY.sigma) / 4

the ``j`` and ``k`` marginals are noisy versions of ``SX.sigma`` and
``SY.sigma`` (attenuated by ``gX``, ``gY``) and the product ``jk`` carries
``SXY.sigma`` attenuated by ``gXY``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .errors import DomainError, GammaFormError, PreconditionError, SingularInversionError
from .optics import ArmConfig, BeamSplitter, PolarizationSetting, detector_states, require_valid_arm
from .qcore import (
    ATOL_ALGEBRA,
    ATOL_VALID,
    PAULI,
    DensityReport,
    as_operator,
    bloch_decompose,
    density_from_bloch,
    expectation,
    op_from_bloch,
    projector,
    tensor,
    validate_density,
)
from .stats import VALUES, ProbTable, joint_table, outcome_table

AXES = ("j", "k")
AXES_A = ("j_A", "k_A")
AXES_B = ("j_B", "k_B")

LABELS = {"1x": (1, 1), "1y": (-1, -1), "2x": (1, -1), "2y": (-1, 1)}

MINIMAL_TOMOGRAPHY_R = math.sqrt((1 + 1 / math.sqrt(3)) / 2)


@dataclass(frozen=True, eq=False)
class GammaForm:
    gammas: tuple[float, float, float]  # (gX, gY, gXY)
    axes: tuple  # unit vectors (SX, SY, SXY); None where the gamma vanishes
    residual: float

    @property
    def vectors(self) -> np.ndarray:
        """Rows ``gamma * axis``: the Bloch directions probed by ``j``, ``k`` and ``jk``."""
        return np.array(
            [np.zeros(3) if ax is None else g * ax for g, ax in zip(self.gammas, self.axes)]
        )


@dataclass(frozen=True, eq=False)
class Space2Povm:
    elements: dict  # (j, k) -> 2x2 operator
    gamma_form: GammaForm | None

    @property
    def gammas(self):
        return None if self.gamma_form is None else self.gamma_form.gammas

    @property
    def axes(self):
        return None if self.gamma_form is None else self.gamma_form.axes

    def require_gamma_form(self) -> GammaForm:
        if self.gamma_form is None:
            raise GammaFormError("POVM elements do not admit the (j, k, jk) gamma form")
        return self.gamma_form


def _orient(vec: np.ndarray) -> tuple[float, np.ndarray | None]:
    """Split ``vec`` into ``gamma * axis`` with the axis's dominant component positive."""
    norm = float(np.linalg.norm(vec))
    if norm <= ATOL_ALGEBRA:
        return 0.0, None
    axis = vec / norm
    mags = np.abs(axis)
    lead = int(np.flatnonzero(mags >= mags.max() - ATOL_ALGEBRA)[0])
    if axis[lead] < 0:
        return -norm, -axis
    return norm, axis


def extract_gamma_form(elements: Mapping[tuple, np.ndarray], atol: float = ATOL_VALID) -> GammaForm | None:
    """Fit the gamma form to four elements; ``None`` when it does not hold."""
    c0 = {}
    v = {}
    for key in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        c0[key], v[key] = bloch_decompose(elements[key])
    if any(abs(c - 0.25) > atol for c in c0.values()):
        return None
    a = sum(j * v[(j, k)] for j, k in v)
    b = sum(k * v[(j, k)] for j, k in v)
    c = sum(j * k * v[(j, k)] for j, k in v)
    residual = max(
        float(np.max(np.abs(elements[(j, k)] - op_from_bloch(0.25, (j * a + k * b + j * k * c) / 4))))
        for j, k in v
    )
    if residual > atol:
        return None
    parts = [_orient(vec) for vec in (a, b, c)]
    return GammaForm(
        gammas=tuple(g for g, _ in parts),
        axes=tuple(ax for _, ax in parts),
        residual=residual,
    )


def povm_space2(arm: ArmConfig) -> Space2Povm:
    require_valid_arm(arm)
    states = detector_states(arm).as_dict()
    elements = {LABELS[d]: projector(psi) for d, psi in states.items()}
    return Space2Povm(elements, extract_gamma_form(elements))


def particular_case_arm(r: float, t: float | None = None) -> ArmConfig:
    """Crossed splitter ``t_x = r_y = t``, ``t_y = r_x = r`` with ``theta = pi/2``, ``phi = +-pi/4``."""
    if t is None:
        if not 0.0 <= r <= 1.0:
            raise DomainError(f"r must lie in [0, 1], got {r}")
        t = math.sqrt(1.0 - r * r)
    if r < 0 or t < 0:
        raise DomainError("r and t must be nonnegative")
    if abs(r * r + t * t - 1.0) > ATOL_ALGEBRA:
        raise DomainError(f"r^2 + t^2 = {r * r + t * t!r}, expected 1")
    return ArmConfig(
        bs=BeamSplitter(t_x=t, t_y=r, r_x=r, r_y=t),
        omega1=PolarizationSetting(math.pi / 2, math.pi / 4),
        omega2=PolarizationSetting(math.pi / 2, -math.pi / 4),
    )


def minimal_tomography_arm() -> ArmConfig:
    """Particular case with all three gammas equal to ``1/sqrt(3)``."""
    return particular_case_arm(MINIMAL_TOMOGRAPHY_R)


def outcome_table_space2(rho_a, povm: Space2Povm, check: bool = True) -> ProbTable:
    return outcome_table(rho_a, povm.elements, AXES, check=check)


def joint_table_space2(rho, povm_a: Space2Povm, povm_b: Space2Povm, check: bool = True) -> ProbTable:
    return joint_table(rho, povm_a.elements, povm_b.elements, AXES_A, AXES_B, check=check)


# -- marginals -------------------------------------------------------------------

class MarginalOperators(NamedTuple):
    delta_x: dict  # j -> operator
    delta_y: dict  # k -> operator


def marginal_operators(povm: Space2Povm) -> MarginalOperators:
    """Sum out ``k`` (resp. ``j``) and check against ``(I +- gamma S.sigma) / 2``."""
    form = povm.require_gamma_form()
    vecs = form.vectors
    E = povm.elements
    delta_x = {j: E[(j, 1)] + E[(j, -1)] for j in VALUES}
    delta_y = {k: E[(1, k)] + E[(-1, k)] for k in VALUES}
    for j in VALUES:
        _agree(delta_x[j], op_from_bloch(0.5, j * vecs[0] / 2), f"Delta_X({j:+d})")
        _agree(delta_y[j], op_from_bloch(0.5, j * vecs[1] / 2), f"Delta_Y({j:+d})")
    return MarginalOperators(delta_x, delta_y)


def _agree(summed, closed, what):
    res = float(np.max(np.abs(summed - closed)))
    if res > ATOL_VALID:
        raise PreconditionError(f"{what}: summed POVM differs from closed form by {res:.3g}")


@dataclass(frozen=True)
class NoisyMarginal:
    variable: str  # "X" or "Y"
    gamma: float
    probs: dict  # kappa' -> probability


class NoisyMarginals(NamedTuple):
    x: NoisyMarginal
    y: NoisyMarginal
    jk_mean: float  # E[jk] = gXY <SXY.sigma>


def noisy_marginals(povm: Space2Povm, rho_a) -> NoisyMarginals:
    form = povm.require_gamma_form()
    ops = marginal_operators(povm)
    rho_a = as_operator(rho_a)
    px = {j: expectation(rho_a, ops.delta_x[j]) for j in VALUES}
    py = {k: expectation(rho_a, ops.delta_y[k]) for k in VALUES}
    jk = sum(j * k * expectation(rho_a, povm.elements[(j, k)]) for j in VALUES for k in VALUES)
    return NoisyMarginals(
        NoisyMarginal("X", form.gammas[0], px),
        NoisyMarginal("Y", form.gammas[1], py),
        float(jk),
    )


# -- noise model and its inverse --------------------------------------------------

def forward_kernel(gamma: float) -> np.ndarray:
    """``F[kappa', kappa] = (1 + gamma kappa kappa') / 2`` in storage order."""
    v = np.array(VALUES, dtype=float)
    return 0.5 * (1 + gamma * np.outer(v, v))


def inverse_kernel(gamma: float) -> np.ndarray:
    """``K[kappa, kappa'] = (1 + kappa kappa' / gamma) / 2``."""
    if abs(gamma) <= ATOL_ALGEBRA:
        raise SingularInversionError("noise with gamma = 0 cannot be inverted")
    v = np.array(VALUES, dtype=float)
    return 0.5 * (1 + np.outer(v, v) / gamma)


def _as_pair(p: Mapping[int, float]) -> np.ndarray:
    return np.array([p[1], p[-1]], dtype=float)


def noise_forward(p_exact: Mapping[int, float], gamma: float) -> dict[int, float]:
    if abs(gamma) > 1 + ATOL_ALGEBRA:
        raise DomainError(f"|gamma| must not exceed 1, got {gamma}")
    out = forward_kernel(gamma) @ _as_pair(p_exact)
    return {1: float(out[0]), -1: float(out[1])}


def noise_invert(p_noisy: Mapping[int, float], gamma: float) -> dict[int, float]:
    """Undo :func:`noise_forward`. The result may contain negative entries."""
    out = inverse_kernel(gamma) @ _as_pair(p_noisy)
    return {1: float(out[0]), -1: float(out[1])}


def invert_table(table: ProbTable, gammas: Mapping[str, float]) -> ProbTable:
    """Apply the single-variable inverse kernel along each named axis."""
    values = np.asarray(table.values)
    for name, gamma in gammas.items():
        if name not in table.axes:
            raise DomainError(f"unknown axis {name!r}; table has {table.axes}")
        ax = table.axes.index(name)
        values = np.moveaxis(np.tensordot(inverse_kernel(gamma), values, axes=([1], [ax])), 0, ax)
    return ProbTable(table.axes, values, quasi=True)


def quasi_joint(rho, povm_a: Space2Povm, povm_b: Space2Povm) -> ProbTable:
    """Noise-inverted joint of the four sharp observables ``X_A, Y_A, X_B, Y_B``.

    Axes keep the variable names ``(j_A, k_A, j_B, k_B)``; after inversion they
    refer to the sharp observables along the extracted ``SX``/``SY`` axes.
    """
    fa, fb = povm_a.require_gamma_form(), povm_b.require_gamma_form()
    for name, g in (("gX_A", fa.gammas[0]), ("gY_A", fa.gammas[1]), ("gX_B", fb.gammas[0]), ("gY_B", fb.gammas[1])):
        if abs(g) <= ATOL_ALGEBRA:
            raise SingularInversionError(f"{name} = 0; the quasi-joint is undefined")
    noisy = joint_table_space2(rho, povm_a, povm_b)
    return invert_table(
        noisy,
        {"j_A": fa.gammas[0], "k_A": fa.gammas[1], "j_B": fb.gammas[0], "k_B": fb.gammas[1]},
    )


def negativity(table: ProbTable) -> float:
    """``max(0, -min entry)``."""
    return max(0.0, -table.min_entry)


# -- tomography ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TomographyResult:
    rho: np.ndarray
    bloch: np.ndarray
    report: DensityReport
    clamped: bool = False

    @property
    def physical(self) -> bool:
        return self.report.valid


def moments(table: ProbTable) -> np.ndarray:
    """``(<j>, <k>, <jk>)`` of a two-variable table; first axis is ``j``."""
    if len(table.axes) != 2:
        raise DomainError(f"expected a (j, k) table, got axes {table.axes}")
    v = np.array(VALUES, dtype=float)
    p = table.values
    return np.array([v @ p.sum(axis=1), v @ p.sum(axis=0), v @ p @ v])


def tomography_reconstruct(p_observed: ProbTable, povm: Space2Povm, clamp: bool = False) -> TomographyResult:
    """Linear inversion ``<j> = gX SX.s``, ``<k> = gY SY.s``, ``<jk> = gXY SXY.s``.

    The estimate is returned as is, even when it leaves the Bloch ball, unless
    ``clamp`` is set, in which case it is scaled back onto the sphere.
    """
    form = povm.require_gamma_form()
    if any(abs(g) <= ATOL_ALGEBRA for g in form.gammas):
        raise SingularInversionError(f"gammas {form.gammas}: POVM is not tomographically complete")
    m = form.vectors
    if abs(np.linalg.det(m)) <= ATOL_VALID:
        raise SingularInversionError("POVM axes are coplanar: not tomographically complete")
    s = np.linalg.solve(m, moments(p_observed))
    clamped = False
    if clamp and np.linalg.norm(s) > 1:
        s = s / np.linalg.norm(s)
        clamped = True
    rho = density_from_bloch(s)
    return TomographyResult(rho, s, validate_density(rho), clamped)


def sharp_expectation(rho, op_a=None, op_b=None) -> float:
    """``<op_a (x) op_b>`` with identity standing in for a missing factor."""
    eye = np.eye(2)
    return expectation(rho, tensor(eye if op_a is None else op_a, eye if op_b is None else op_b))


def axis_operator(axis) -> np.ndarray:
    return np.tensordot(np.asarray(axis, dtype=float), PAULI, axes=1)
