"""Parameter sweeps and derivative-free maximization of Bell-window breaches.

Parameter names address one field of the experiment:

    A.omega1.theta  A.omega1.phi  A.omega2.theta  A.omega2.phi   (same for B)
    A.r  B.r        reflection coefficient of that arm's splitter
    eta             Werner weight (state must be a Werner state)

Angles are periodic with period ``2 pi`` (a polar angle beyond ``pi`` is folded
onto the equivalent setting); ``r`` and ``eta`` are clamped to ``[0, 1]``.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .config import ScanParam, StateSpec
from .errors import BellspaceError, DomainError
from .optics import ArmConfig, BeamSplitter, PolarizationSetting
from .space1 import BELL_KINDS, BellChoice, bell_quantity, joint_table_space1, povm_space1
from .space2 import negativity, povm_space2, quasi_joint
from .stats import ProbTable, fmt

OBJECTIVES = BELL_KINDS + ("quasi-negativity",)
TWO_PI = 2 * math.pi
STEP0 = math.pi / 18


def window_breach(value: float) -> float:
    """Distance of ``value`` outside ``[-1, 0]``; zero inside."""
    return max(value, -1.0 - value, 0.0)


def violation_objective(kind: str, table: ProbTable, choice: BellChoice | None = None) -> float:
    if kind == "quasi-negativity":
        return negativity(table)
    return window_breach(bell_quantity(kind, table, choice or BellChoice()))


@dataclass(frozen=True)
class ScanSpec:
    params: tuple[ScanParam, ...]
    objective: str
    state: StateSpec
    arm_a: ArmConfig
    arm_b: ArmConfig
    choice: BellChoice = field(default_factory=BellChoice)

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise DomainError(f"unknown objective {self.objective!r}; choose from {OBJECTIVES}")
        for p in self.params:
            if p.count < 1:
                raise DomainError(f"{p.name}: grid count must be >= 1")
            _kind(p.name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)


def _kind(name: str) -> str:
    if name == "eta":
        return "unit"
    parts = name.split(".")
    if parts[0] in ("A", "B"):
        if parts[1:] == ["r"]:
            return "unit"
        if len(parts) == 3 and parts[1] in ("omega1", "omega2") and parts[2] in ("theta", "phi"):
            return "angle"
    raise DomainError(f"unknown scan parameter {name!r}")


def _with_r(bs: BeamSplitter, r: float, crossed_first: bool) -> BeamSplitter:
    """Replace the reflectivity, keeping the splitter's family.

    A balanced splitter is both nonpolarizing and crossed; ``crossed_first``
    (used for space-2 objectives) decides which family it belongs to.
    """
    t = math.sqrt(max(0.0, 1.0 - r * r))
    crossed = abs(bs.r_x - bs.t_y) <= 1e-12 and abs(bs.r_y - bs.t_x) <= 1e-12
    if crossed and (crossed_first or not bs.is_nonpolarizing):
        return BeamSplitter(t_x=t, t_y=r, r_x=r, r_y=t)
    if bs.is_nonpolarizing:
        return BeamSplitter(t_x=t, t_y=t, r_x=r, r_y=r)
    raise DomainError("'r' can only be scanned on nonpolarizing or crossed (t_x = r_y) splitters")


def apply_params(spec: ScanSpec, x: Sequence[float]):
    """``(rho, arm_a, arm_b)`` for the parameter vector ``x``."""
    arms = {"A": spec.arm_a, "B": spec.arm_b}
    eta = None
    for name, value in zip(spec.names, x):
        if name == "eta":
            eta = float(value)
            continue
        party, *rest = name.split(".")
        arm = arms[party]
        if rest == ["r"]:
            crossed_first = spec.objective == "quasi-negativity"
            arms[party] = replace(arm, bs=_with_r(arm.bs, float(value), crossed_first))
        else:
            which, angle = rest
            old = getattr(arm, which)
            theta = float(value) if angle == "theta" else old.theta
            phi = float(value) if angle == "phi" else old.phi
            arms[party] = replace(arm, **{which: PolarizationSetting(theta, phi)})
    return spec.state.density(eta), arms["A"], arms["B"]


def evaluate(spec: ScanSpec, x: Sequence[float]) -> tuple[float, float]:
    """``(objective, raw)`` where raw is C/C'/C'' or the quasi-joint minimum."""
    rho, arm_a, arm_b = apply_params(spec, x)
    if spec.objective == "quasi-negativity":
        q = quasi_joint(rho, povm_space2(arm_a), povm_space2(arm_b))
        return negativity(q), q.min_entry
    table = joint_table_space1(rho, povm_space1(arm_a), povm_space1(arm_b), check=False)
    c = bell_quantity(spec.objective, table, spec.choice)
    return window_breach(c), c


@dataclass
class ScanResult:
    names: tuple[str, ...]
    best_x: tuple[float, ...] | None
    best_value: float
    best_raw: float | None = None
    grid: list = field(default_factory=list)  # (x, objective, raw) per evaluated point
    trace: list = field(default_factory=list)  # best value after each refinement sweep
    skipped: int = 0
    evaluations: int = 0

    @property
    def best_params(self) -> dict[str, float]:
        return {} if self.best_x is None else dict(zip(self.names, self.best_x))


def _better(value, x, best_value, best_x) -> bool:
    if best_x is None or value > best_value:
        return True
    return value == best_value and tuple(x) < tuple(best_x)


def grid_points(spec: ScanSpec):
    axes = [np.linspace(p.lo, p.hi, p.count) if p.count > 1 else np.array([p.lo]) for p in spec.params]
    return [tuple(float(v) for v in pt) for pt in itertools.product(*axes)]


def grid_scan(spec: ScanSpec, workers: int = 1, keep_grid: bool = True) -> ScanResult:
    """Exhaustive Cartesian-grid evaluation; ties go to the lexicographically smallest point."""
    points = grid_points(spec)

    def safe(x):
        try:
            return evaluate(spec, x)
        except BellspaceError:
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(safe, points))
    else:
        outcomes = [safe(x) for x in points]

    result = ScanResult(spec.names, None, -math.inf, evaluations=len(points))
    for x, out in zip(points, outcomes):
        if out is None:
            result.skipped += 1
            continue
        value, raw = out
        if keep_grid:
            result.grid.append((x, value, raw))
        if _better(value, x, result.best_value, result.best_x):
            result.best_x, result.best_value, result.best_raw = x, value, raw
    return result


def coordinate_search(
    fn: Callable[[np.ndarray], float],
    x0: Sequence[float],
    periods: Sequence[float | None] | None = None,
    bounds: Sequence[tuple[float, float] | None] | None = None,
    step0: float = STEP0,
    shrink: float = 0.5,
    min_step: float = 1e-6,
    max_evals: int = 10_000,
    min_gain: float = 1e-14,
) -> tuple[np.ndarray, float, list[float], int]:
    """Maximize ``fn`` by compass steps along each coordinate.

    A move is taken only when it improves on the incumbent by more than
    ``min_gain`` (so rounding noise on a flat coordinate does not count);
    after a sweep with no move the step shrinks. Returns
    ``(x, f(x), trace, evaluations)``.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    periods = list(periods) if periods is not None else [None] * n
    bounds = list(bounds) if bounds is not None else [None] * n

    def fix(y):
        for i in range(n):
            if periods[i]:
                y[i] = math.fmod(y[i], periods[i])
                if y[i] < 0:
                    y[i] += periods[i]
            elif bounds[i]:
                y[i] = min(max(y[i], bounds[i][0]), bounds[i][1])
        return y

    best = fn(x)
    evals = 1
    trace = [best]
    step = step0
    while step >= min_step and evals < max_evals:
        moved = False
        for i in range(n):
            for sign in (1.0, -1.0):
                if evals >= max_evals:
                    break
                y = x.copy()
                y[i] += sign * step
                y = fix(y)
                if y[i] == x[i]:
                    continue
                fy = fn(y)
                evals += 1
                if fy > best + min_gain:
                    x, best, moved = y, fy, True
                    break
        trace.append(best)
        if not moved:
            step *= shrink
    return x, best, trace, evals


def refine(spec: ScanSpec, start: Sequence[float], **kwargs) -> ScanResult:
    """Coordinate-search refinement of ``spec``'s objective from ``start``."""
    periods = [TWO_PI if _kind(n) == "angle" else None for n in spec.names]
    bounds = [None if _kind(n) == "angle" else (0.0, 1.0) for n in spec.names]

    def objective(x):
        try:
            return evaluate(spec, x)[0]
        except BellspaceError:
            return -math.inf

    x, best, trace, evals = coordinate_search(objective, start, periods, bounds, **kwargs)
    x = tuple(float(v) for v in x)
    raw = evaluate(spec, x)[1] if math.isfinite(best) else None
    return ScanResult(spec.names, x, best, raw, trace=trace, evaluations=evals)


def run_scan(spec: ScanSpec, do_refine: bool = True, workers: int = 1, keep_grid: bool = True) -> ScanResult:
    """Grid scan followed, optionally, by refinement from the grid's best point."""
    result = grid_scan(spec, workers=workers, keep_grid=keep_grid)
    if do_refine and result.best_x is not None:
        ref = refine(spec, result.best_x)
        result.trace = ref.trace
        result.evaluations += ref.evaluations
        if ref.best_value > result.best_value:
            result.best_x, result.best_value, result.best_raw = ref.best_x, ref.best_value, ref.best_raw
    return result


def landscape_csv(result: ScanResult, objective: str) -> str:
    raw_name = "min_entry" if objective == "quasi-negativity" else "C"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(result.names) + ["objective", raw_name])
    for x, value, raw in result.grid:
        w.writerow([fmt(v) for v in x] + [fmt(value), fmt(raw)])
    return buf.getvalue()
