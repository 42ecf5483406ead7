"""Self-check suite run by ``bellspace check``.

Every check draws its random cases from ``numpy.random.default_rng(seed)``
so a run is reproducible from the seed alone.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import qcore, space1, space2
from .optics import (
    click_probabilities,
    detector_states,
    fock_output_oracle,
    random_arm,
    random_pure_qubit,
)
from .stats import marginalize


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _result(name, worst, tol) -> CheckResult:
    return CheckResult(name, bool(worst <= tol), f"max residual {worst:.3g} (tol {tol:g})")


def check_completeness(rng, n) -> CheckResult:
    worst = max(detector_states(random_arm(rng)).completeness_residual() for _ in range(n))
    return _result("povm completeness", worst, 1e-12)


def check_fock_oracle(rng, n) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        state, arm = random_pure_qubit(rng), random_arm(rng)
        fock = fock_output_oracle(state, arm)
        reduced = click_probabilities(state, arm)
        worst = max(worst, max(abs(fock[d] - reduced[d]) for d in fock))
    return _result("fock oracle equivalence", worst, 1e-12)


def check_space1(rng, n) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        povm_a = space1.povm_space1(random_arm(rng, nonpolarizing=True))
        povm_b = space1.povm_space1(random_arm(rng, nonpolarizing=True))
        for key, op in povm_a.elements.items():
            worst = max(worst, float(np.max(np.abs(op - povm_a.closed_form(*key)))))
        rho = qcore.random_density(rng, 4)
        table = space1.joint_table_space1(rho, povm_a, povm_b)
        ab = marginalize(table, ["alpha", "beta"])
        for a in (1, -1):
            for b in (1, -1):
                worst = max(worst, abs(ab[a, b] - povm_a.p_alpha[a] * povm_b.p_alpha[b]))
        cond = space1.conditional_stats(qcore.reduced_a(rho), povm_a).p_j_given_alpha
        red = qcore.reduced_a(rho)
        for (j, a), p in cond.items():
            worst = max(worst, abs(p - qcore.expectation(red, povm_a.sharp(j, a))))
    return _result("space-1 closed form and noise removal", worst, 1e-12)


def check_gamma_link(rng, n) -> CheckResult:
    worst = 0.0
    for r in np.linspace(0.0, 1.0, 101):
        g = space2.povm_space2(space2.particular_case_arm(float(r))).gammas
        worst = max(worst, abs(sum(x * x for x in g) - 1.0))
    g = space2.povm_space2(space2.minimal_tomography_arm()).gammas
    worst = max(worst, max(abs(x - 1 / math.sqrt(3)) for x in g))
    return _result("gamma link", worst, 1e-12)


def check_inversion(rng, n) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        p = rng.uniform()
        exact = {1: p, -1: 1 - p}
        gamma = rng.uniform(0.05, 1.0) * rng.choice([-1, 1])
        back = space2.noise_invert(space2.noise_forward(exact, gamma), gamma)
        worst = max(worst, abs(back[1] - exact[1]), abs(back[-1] - exact[-1]))
    return _result("noise inversion round trip", worst, 1e-12)


def check_tomography(rng, n) -> CheckResult:
    povm = space2.povm_space2(space2.minimal_tomography_arm())
    worst = 0.0
    for _ in range(n):
        rho = qcore.random_density(rng)
        res = space2.tomography_reconstruct(space2.outcome_table_space2(rho, povm), povm)
        worst = max(worst, float(np.max(np.abs(res.rho - rho))))
    return _result("tomography round trip", worst, 1e-10)


def check_separable_window(rng, n) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        rho = qcore.random_separable(rng, 20)
        pa = space1.povm_space1(random_arm(rng, nonpolarizing=True))
        pb = space1.povm_space1(random_arm(rng, nonpolarizing=True))
        table = space1.joint_table_space1(rho, pa, pb)
        choice = space1.BellChoice(*(int(v) for v in rng.choice([-1, 1], size=4)))
        for kind in ("standard", "mixed"):
            c = space1.bell_quantity(kind, table, choice)
            worst = max(worst, c, -1.0 - c)
    return CheckResult("separable classical window", bool(worst <= 1e-9), f"max excursion {worst:.3g}")


def check_config(cfg) -> CheckResult:
    """The configured arms build POVMs for the configured space."""
    build = space1.povm_space1 if cfg.space == 1 else space2.povm_space2
    worst = 0.0
    for arm in (cfg.arm_a, cfg.arm_b):
        total = sum(build(arm).elements.values())
        worst = max(worst, float(np.max(np.abs(total - qcore.SIGMA0))))
    return _result("configured arms", worst, 1e-12)


def run_all(cfg, n: int = 200, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = [check_config(cfg)]
    for fn in (
        check_completeness,
        check_fock_oracle,
        check_space1,
        check_gamma_link,
        check_inversion,
        check_tomography,
        check_separable_window,
    ):
        out.append(fn(rng, n))
    return out
