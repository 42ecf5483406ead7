"""Probability space 1: random exact measurement of two observables per party.

With a nonpolarizing splitter, port 1 measures ``A_1 = S_1 . sigma`` and port 2
measures ``A_-1 = S_-1 . sigma``. Outcomes are labelled ``(j, alpha)`` on A and
``(k, beta)`` on B, where ``alpha``/``beta`` name the observable and
``j``/``k`` its result:

    D1x -> (j=+1, alpha=+1)    D2x -> (j=+1, alpha=-1)
    D1y -> (j=-1, alpha=+1)    D2y -> (j=-1, alpha=-1)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np

from .errors import ConditionalUndefinedError, DomainError, PreconditionError
from .optics import ArmConfig, detector_states, poincare, require_valid_arm
from .qcore import (
    ATOL_ALGEBRA,
    ATOL_VALID,
    SIGMA0,
    as_operator,
    density_from_bloch,
    expectation,
    op_from_bloch,
    projector,
)
from .stats import ProbTable, joint_table

AXES_A = ("j", "alpha")
AXES_B = ("k", "beta")
AXES = AXES_A + AXES_B

LABELS = {"1x": (1, 1), "1y": (-1, 1), "2x": (1, -1), "2y": (-1, -1)}

BellKind = Literal["standard", "dual", "mixed"]
BELL_KINDS = ("standard", "dual", "mixed")


@dataclass(frozen=True, eq=False)
class Space1Povm:
    elements: dict  # (j, alpha) -> 2x2 operator
    p_alpha: dict  # alpha -> probability of choosing A_alpha
    S: dict  # alpha -> unit Poincare vector of A_alpha

    def closed_form(self, j: int, alpha: int) -> np.ndarray:
        """``p(alpha) (I + j S_alpha . sigma) / 2``."""
        return op_from_bloch(self.p_alpha[alpha] / 2, self.p_alpha[alpha] * j * self.S[alpha] / 2)

    def sharp(self, j: int, alpha: int) -> np.ndarray:
        """Eigenprojector ``(I + j S_alpha . sigma) / 2`` of the exact observable."""
        return op_from_bloch(0.5, j * self.S[alpha] / 2)


def povm_space1(arm: ArmConfig) -> Space1Povm:
    require_valid_arm(arm)
    bs = arm.bs
    broken = []
    if abs(bs.t_x - bs.t_y) > ATOL_ALGEBRA:
        broken.append(f"t_x == t_y ({bs.t_x!r} vs {bs.t_y!r})")
    if abs(bs.r_x - bs.r_y) > ATOL_ALGEBRA:
        broken.append(f"r_x == r_y ({bs.r_x!r} vs {bs.r_y!r})")
    if broken:
        raise PreconditionError("space 1 needs a nonpolarizing splitter; violated: " + ", ".join(broken))
    states = detector_states(arm).as_dict()
    elements = {LABELS[d]: projector(psi) for d, psi in states.items()}
    return Space1Povm(
        elements=elements,
        p_alpha={1: bs.r_x**2, -1: bs.t_x**2},
        S={1: poincare(arm.omega1), -1: poincare(arm.omega2)},
    )


def joint_table_space1(rho, povm_a: Space1Povm, povm_b: Space1Povm, check: bool = True) -> ProbTable:
    """``p(j, alpha, k, beta)`` for a two-qubit state."""
    return joint_table(rho, povm_a.elements, povm_b.elements, AXES_A, AXES_B, check=check)


class Space1Marginals(NamedTuple):
    delta_alpha: dict
    delta_j: dict
    S_A: np.ndarray


def marginals_space1(povm: Space1Povm) -> Space1Marginals:
    """Marginal POVMs for ``alpha`` (trivial) and ``j`` (a single sharp-ish observable)."""
    E = povm.elements
    delta_alpha = {a: E[(1, a)] + E[(-1, a)] for a in (1, -1)}
    delta_j = {j: E[(j, 1)] + E[(j, -1)] for j in (1, -1)}
    S_A = povm.p_alpha[1] * povm.S[1] + povm.p_alpha[-1] * povm.S[-1]
    for a in (1, -1):
        _agree(delta_alpha[a], povm.p_alpha[a] * SIGMA0, f"Delta(alpha={a:+d})")
    for j in (1, -1):
        _agree(delta_j[j], op_from_bloch(0.5, j * S_A / 2), f"Delta(j={j:+d})")
    return Space1Marginals(delta_alpha, delta_j, S_A)


def _agree(summed, closed, what):
    res = float(np.max(np.abs(summed - closed)))
    if res > ATOL_VALID:
        raise PreconditionError(f"{what}: summed POVM differs from closed form by {res:.3g}")


class ConditionalStats(NamedTuple):
    p_j_given_alpha: dict  # (j, alpha) -> p(j | alpha)
    p_alpha_given_j: dict  # (alpha, j) -> p(alpha | j)


def conditional_stats(rho_a, povm: Space1Povm) -> ConditionalStats:
    """Both families of conditionals from the single-party joint ``p(j, alpha)``."""
    rho_a = as_operator(rho_a)
    joint = {key: expectation(rho_a, op) for key, op in povm.elements.items()}
    p_alpha = {a: joint[(1, a)] + joint[(-1, a)] for a in (1, -1)}
    p_j = {j: joint[(j, 1)] + joint[(j, -1)] for j in (1, -1)}
    given_alpha = {}
    given_j = {}
    for (j, a), p in joint.items():
        if p_alpha[a] <= ATOL_ALGEBRA:
            raise ConditionalUndefinedError({"alpha": a}, p_alpha[a])
        if p_j[j] <= ATOL_ALGEBRA:
            raise ConditionalUndefinedError({"j": j}, p_j[j])
        given_alpha[(j, a)] = p / p_alpha[a]
        given_j[(a, j)] = p / p_j[j]
    return ConditionalStats(given_alpha, given_j)


def alpha_given_j_closed_form(s_a, povm: Space1Povm, alpha: int, j: int) -> float:
    """``p(alpha) (1 + j S_alpha . s_A) / (1 + j S_A . s_A)``."""
    s_a = np.asarray(s_a, dtype=float)
    S_A = povm.p_alpha[1] * povm.S[1] + povm.p_alpha[-1] * povm.S[-1]
    return povm.p_alpha[alpha] * (1 + j * povm.S[alpha] @ s_a) / (1 + j * S_A @ s_a)


def gleason_state_for_alpha(s_a, povm: Space1Povm, alpha: int):
    """Density ``rho_alpha`` with ``tr[rho_alpha Delta(j)] = p(j | alpha)``, or ``None``.

    Only the component of ``s_alpha`` along ``S_A`` is constrained, so the
    minimal-norm choice is ``(s_A . S_alpha / |S_A|^2) S_A``. It lies in the
    Bloch ball exactly when ``|s_A . S_alpha| <= |S_A|``.
    """
    s_a = np.asarray(s_a, dtype=float)
    if np.linalg.norm(s_a) > 1 + ATOL_VALID:
        raise DomainError(f"|s_A| = {np.linalg.norm(s_a):.6g} exceeds 1")
    S_A = povm.p_alpha[1] * povm.S[1] + povm.p_alpha[-1] * povm.S[-1]
    target = float(s_a @ povm.S[alpha])
    norm_sa = float(np.linalg.norm(S_A))
    if norm_sa <= ATOL_ALGEBRA:
        if abs(target) <= ATOL_ALGEBRA:
            return density_from_bloch(np.zeros(3))
        return None
    if abs(target) > norm_sa + ATOL_ALGEBRA:
        return None
    s_alpha = target / norm_sa**2 * S_A
    n = np.linalg.norm(s_alpha)
    if n > 1:  # only reachable inside the tolerance band
        s_alpha = s_alpha / n
    return density_from_bloch(s_alpha)


@dataclass(frozen=True)
class NonPovmReport:
    max_deviation: float
    argmax: tuple  # (alpha, j)
    deviations: dict = field(default_factory=dict)  # (alpha, j) -> |p(alpha | j) - p(alpha)|

    def certifies_no_go(self, atol: float = ATOL_VALID) -> bool:
        """True when ``p(alpha | j)`` differs from the state-independent ``p(alpha)``."""
        return self.max_deviation > atol


def p_alpha_given_j_nonpovm_check(rho_a, povm: Space1Povm) -> NonPovmReport:
    """Largest ``|p(alpha | j) - p(alpha)|``.

    ``tr[rho_j Delta(alpha)] = p(alpha)`` for every ``rho_j`` because
    ``Delta(alpha)`` is proportional to the identity, so any nonzero deviation
    rules out reproducing ``p(alpha | j)`` through the marginal POVM.
    """
    cond = conditional_stats(rho_a, povm).p_alpha_given_j
    devs = {key: abs(p - povm.p_alpha[key[0]]) for key, p in cond.items()}
    key = max(devs, key=lambda k: (devs[k], k))
    return NonPovmReport(devs[key], key, devs)


# -- Bell quantities -------------------------------------------------------------

@dataclass(frozen=True)
class BellChoice:
    j: int = 1
    k: int = 1
    alpha: int = 1
    beta: int = 1

    def __post_init__(self):
        for name in ("j", "k", "alpha", "beta"):
            if getattr(self, name) not in (1, -1):
                raise DomainError(f"BellChoice.{name} must be +1 or -1")


# (fixed-outcome variables, conditioning variables) per kind
_ROLES = {
    "standard": (("j", "k"), ("alpha", "beta")),
    "dual": (("alpha", "beta"), ("j", "k")),
    "mixed": (("j", "beta"), ("alpha", "k")),
}


def bell_terms(kind: BellKind, table: ProbTable, choice: BellChoice, consistency_atol=1e-9) -> dict:
    """The six conditional probabilities entering C, C' or C''.

    With fixed outcomes ``(o1, o2)`` and conditioning variables ``(c1, c2)`` at
    base values ``(v1, v2)`` the quantity is

        p(o1,o2|v1,v2) - p(o1,o2|v1,-v2) + p(o1,o2|-v1,v2) + p(o1,o2|-v1,-v2)
        - p(o1|-v1) - p(o2|v2)

    Singles are plain conditionals of the joint table. For ``standard`` they are
    also checked to equal ``sum_k p(j,k|-alpha,beta')`` for both ``beta'`` (and
    likewise for ``p(k|beta)``); for ``mixed`` the factorization
    ``p(alpha,k) = p(alpha) p(k)`` is checked. Pass ``consistency_atol=None`` to
    skip these checks, e.g. for empirical tables.
    """
    if kind not in _ROLES:
        raise DomainError(f"unknown Bell kind {kind!r}; choose from {BELL_KINDS}")
    missing = [a for a in AXES if a not in table.axes]
    if missing:
        raise DomainError(f"table lacks axes {missing}")
    (o1, o2), (c1, c2) = _ROLES[kind]
    val = {"j": choice.j, "k": choice.k, "alpha": choice.alpha, "beta": choice.beta}
    ev = {o1: val[o1], o2: val[o2]}
    v1, v2 = val[c1], val[c2]

    def pair(s1, s2):
        return table.conditional({c1: s1, c2: s2}, **ev)

    terms = {
        "p(o1,o2|v1,v2)": pair(v1, v2),
        "p(o1,o2|v1,-v2)": pair(v1, -v2),
        "p(o1,o2|-v1,v2)": pair(-v1, v2),
        "p(o1,o2|-v1,-v2)": pair(-v1, -v2),
        "p(o1|-v1)": table.conditional({c1: -v1}, **{o1: val[o1]}),
        "p(o2|v2)": table.conditional({c2: v2}, **{o2: val[o2]}),
    }
    if consistency_atol is not None:
        if kind == "standard":
            for s2 in (1, -1):
                alt = table.conditional({c1: -v1, c2: s2}, **{o1: val[o1]})
                _consistent(alt, terms["p(o1|-v1)"], consistency_atol, f"p({o1}|{c1}) depends on {c2}")
            for s1 in (1, -1):
                alt = table.conditional({c1: s1, c2: v2}, **{o2: val[o2]})
                _consistent(alt, terms["p(o2|v2)"], consistency_atol, f"p({o2}|{c2}) depends on {c1}")
        elif kind == "mixed":
            for s1 in (1, -1):
                for s2 in (1, -1):
                    joint = table.prob(**{c1: s1, c2: s2})
                    prod = table.prob(**{c1: s1}) * table.prob(**{c2: s2})
                    _consistent(joint, prod, consistency_atol, f"p({c1},{c2}) does not factorize")
    return terms


def _consistent(a, b, atol, what):
    if abs(a - b) > atol:
        raise PreconditionError(f"{what} (difference {abs(a - b):.3g})")


def bell_quantity(kind: BellKind, table: ProbTable, choice: BellChoice, consistency_atol=1e-9) -> float:
    t = bell_terms(kind, table, choice, consistency_atol=consistency_atol)
    return (
        t["p(o1,o2|v1,v2)"]
        - t["p(o1,o2|v1,-v2)"]
        + t["p(o1,o2|-v1,v2)"]
        + t["p(o1,o2|-v1,-v2)"]
        - t["p(o1|-v1)"]
        - t["p(o2|v2)"]
    )


CLASSICAL_WINDOW = (-1.0, 0.0)


def in_classical_window(value: float, atol: float = 0.0) -> bool:
    lo, hi = CLASSICAL_WINDOW
    return lo - atol <= value <= hi + atol


def verdict(value: float, atol: float = 1e-12) -> str:
    return "OK" if in_classical_window(value, atol) else "VIOLATION"
