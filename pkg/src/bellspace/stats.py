"""Probability tables over dichotomic variables.

A :class:`ProbTable` stores one axis per named variable, each of length 2
with index 0 meaning ``+1`` and index 1 meaning ``-1``. Flattening in axis
order therefore lists outcomes with ``+1`` before ``-1`` on every axis; the
sampler's CDF uses the same order.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import rng as _rng
from .errors import ConditionalUndefinedError, DomainError, PreconditionError
from .qcore import ATOL_ALGEBRA, ATOL_VALID, as_operator, validate_density

VALUES = (1, -1)
NORM_ATOL = 1e-12


def value_index(v) -> int:
    if v == 1:
        return 0
    if v == -1:
        return 1
    raise DomainError(f"dichotomic value must be +1 or -1, got {v!r}")


def outcomes(n: int):
    """All value tuples of length ``n`` in storage order."""
    return itertools.product(VALUES, repeat=n)


@dataclass(frozen=True, eq=False)
class ProbTable:
    axes: tuple[str, ...]
    values: np.ndarray
    quasi: bool = False

    def __post_init__(self):
        axes = tuple(self.axes)
        values = np.asarray(self.values, dtype=float).reshape((2,) * len(axes))
        if len(set(axes)) != len(axes):
            raise DomainError(f"duplicate axis names in {axes}")
        total = float(values.sum())
        if abs(total - 1.0) > NORM_ATOL:
            raise DomainError(f"table is not normalized (sum {total!r})")
        if not self.quasi and values.size and values.min() < -NORM_ATOL:
            raise DomainError(
                f"negative entry {values.min():.3g} in a probability table; mark it quasi"
            )
        values.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, axes: Sequence[str], probs: Mapping[tuple, float], quasi=False):
        arr = np.zeros((2,) * len(axes))
        for key, p in probs.items():
            arr[tuple(value_index(v) for v in key)] = p
        return cls(tuple(axes), arr, quasi=quasi)

    @classmethod
    def uniform(cls, axes: Sequence[str]) -> "ProbTable":
        n = len(axes)
        return cls(tuple(axes), np.full((2,) * n, 0.5**n))

    @property
    def is_negative(self) -> bool:
        return self.min_entry < 0

    @property
    def min_entry(self) -> float:
        return float(self.values.min())

    def __getitem__(self, key) -> float:
        if not isinstance(key, tuple):
            key = (key,)
        if len(key) != len(self.axes):
            raise DomainError(f"need {len(self.axes)} values, got {len(key)}")
        return float(self.values[tuple(value_index(v) for v in key)])

    def items(self):
        for key in outcomes(len(self.axes)):
            yield key, self[key]

    def as_dict(self) -> dict[tuple, float]:
        return dict(self.items())

    def prob(self, **assignment) -> float:
        """Probability of a partial assignment, summing over the other axes."""
        idx = []
        for name in self.axes:
            idx.append(value_index(assignment.pop(name)) if name in assignment else slice(None))
        if assignment:
            raise DomainError(f"unknown variable(s) {sorted(assignment)}; axes are {self.axes}")
        return float(np.sum(self.values[tuple(idx)]))

    def conditional(self, given: Mapping[str, int], **event) -> float:
        """``p(event | given)``."""
        denom = self.prob(**dict(given))
        if denom <= 0.0:
            raise ConditionalUndefinedError(given, denom)
        return self.prob(**dict(given), **event) / denom

    def allclose(self, other: "ProbTable", atol: float = ATOL_ALGEBRA) -> bool:
        return self.axes == other.axes and bool(np.allclose(self.values, other.values, atol=atol, rtol=0))


def marginalize(table: ProbTable, keep: Iterable[str]) -> ProbTable:
    keep = tuple(keep)
    if not keep:
        raise DomainError("keep must name at least one variable")
    unknown = [k for k in keep if k not in table.axes]
    if unknown:
        raise DomainError(f"unknown variable(s) {unknown}; axes are {table.axes}")
    drop = tuple(i for i, a in enumerate(table.axes) if a not in keep)
    reduced = table.values.sum(axis=drop) if drop else table.values
    remaining = tuple(a for a in table.axes if a in keep)
    perm = [remaining.index(k) for k in keep]
    return ProbTable(keep, np.transpose(reduced, perm), quasi=table.quasi)


def condition(table: ProbTable, given: Mapping[str, int]) -> ProbTable:
    """Renormalized table over the axes not fixed by ``given``."""
    unknown = [k for k in given if k not in table.axes]
    if unknown:
        raise DomainError(f"unknown variable(s) {unknown}; axes are {table.axes}")
    idx = tuple(value_index(given[a]) if a in given else slice(None) for a in table.axes)
    sub = table.values[idx]
    denom = float(np.sum(sub))
    if denom <= 0.0:
        raise ConditionalUndefinedError(given, denom)
    remaining = tuple(a for a in table.axes if a not in given)
    return ProbTable(remaining, sub / denom, quasi=table.quasi)


def total_variation(a: ProbTable, b: ProbTable) -> float:
    if a.axes != b.axes:
        raise DomainError(f"axis mismatch: {a.axes} vs {b.axes}")
    return 0.5 * float(np.abs(a.values - b.values).sum())


# -- tables from states -------------------------------------------------------

def _stack(elements: Mapping[tuple, np.ndarray], n_axes: int) -> np.ndarray:
    try:
        return np.stack([as_operator(elements[key]) for key in outcomes(n_axes)])
    except KeyError as exc:
        raise DomainError(f"POVM is missing outcome {exc.args[0]}") from None


def check_povm(elements: Mapping[tuple, np.ndarray], atol: float = ATOL_VALID) -> None:
    ops = list(elements.values())
    total = sum(ops)
    res = float(np.max(np.abs(total - np.eye(total.shape[0]))))
    if res > atol:
        raise PreconditionError(f"POVM is incomplete (residual {res:.3g})")
    for key, op in elements.items():
        if np.linalg.eigvalsh((op + op.conj().T) / 2).min() < -atol:
            raise PreconditionError(f"POVM element {key} is not positive")


def outcome_table(rho, elements, axes: Sequence[str], check: bool = True) -> ProbTable:
    """Single-party table ``tr[rho E(outcome)]``."""
    rho = as_operator(rho)
    if check:
        _check_state(rho)
        check_povm(elements)
    ops = _stack(elements, len(axes))
    p = np.einsum("ij,mji->m", rho, ops).real
    return ProbTable(tuple(axes), p)


def joint_table(rho, elements_a, elements_b, axes_a, axes_b, check: bool = True) -> ProbTable:
    """Joint table ``tr[rho E_A(a) (x) E_B(b)]`` over ``axes_a + axes_b``."""
    rho = as_operator(rho)
    if rho.shape != (4, 4):
        raise DomainError(f"joint tables need a 4x4 state, got {rho.shape}")
    if check:
        _check_state(rho)
        check_povm(elements_a)
        check_povm(elements_b)
    ea = _stack(elements_a, len(axes_a))
    eb = _stack(elements_b, len(axes_b))
    r4 = rho.reshape(2, 2, 2, 2)  # [i, k, j, l] for A indices i,j and B indices k,l
    p = np.einsum("ikjl,mji,nlk->mn", r4, ea, eb).real
    return ProbTable(tuple(axes_a) + tuple(axes_b), p)


def _check_state(rho) -> None:
    report = validate_density(rho)
    if not report.valid:
        raise PreconditionError("invalid density matrix: " + "; ".join(report.failures()))


# -- sampling -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClickCounts:
    axes: tuple[str, ...]
    counts: np.ndarray
    n_total: int
    seed: int

    def __getitem__(self, key) -> int:
        if not isinstance(key, tuple):
            key = (key,)
        return int(self.counts[tuple(value_index(v) for v in key)])

    def frequencies(self) -> ProbTable:
        if self.n_total == 0:
            raise DomainError("no draws to form frequencies from")
        return ProbTable(self.axes, self.counts / self.n_total)


def sample_counts(table: ProbTable, n: int, seed: int) -> ClickCounts:
    """Multinomial draw by inverse CDF over the flattened table.

    Draw ``i`` picks the first outcome whose cumulative probability is strictly
    greater than the ``i``-th uniform of the SplitMix64 stream for ``seed``.
    """
    if table.quasi or table.min_entry < 0:
        raise DomainError("cannot sample from a quasi-probability table")
    n = int(n)
    if n < 0:
        raise DomainError(f"number of draws must be >= 0, got {n}")
    seed = _rng.check_seed(seed)
    flat = table.values.ravel()
    cdf = np.cumsum(flat)
    last = int(np.flatnonzero(flat > 0)[-1])
    u = _rng.uniforms(seed, n)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), last)
    counts = np.bincount(idx, minlength=flat.size).astype(np.int64)
    return ClickCounts(table.axes, counts.reshape(table.values.shape), n, seed)


# -- CSV ----------------------------------------------------------------------

def fmt(x: float) -> str:
    return format(float(x), ".17g")


def table_to_csv(table: ProbTable) -> str:
    buf = io.StringIO()
    if table.quasi:
        buf.write("# quasi=true\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(table.axes) + ["probability"])
    for key, p in table.items():
        w.writerow([str(v) for v in key] + [fmt(p)])
    return buf.getvalue()


def counts_to_csv(counts: ClickCounts) -> str:
    buf = io.StringIO()
    buf.write(f"# n_total={counts.n_total}\n# seed={counts.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(counts.axes) + ["count"])
    for key in outcomes(len(counts.axes)):
        w.writerow([str(v) for v in key] + [counts[key]])
    return buf.getvalue()


def _parse_csv(text: str):
    meta = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k.strip()] = v.strip()
        elif line.strip():
            rows.append(line)
    reader = csv.reader(rows)
    header = next(reader)
    return meta, header, list(reader)


def table_from_csv(text: str) -> ProbTable:
    meta, header, rows = _parse_csv(text)
    if header[-1] != "probability":
        raise DomainError("last CSV column must be 'probability'")
    axes = tuple(header[:-1])
    probs = {tuple(int(v) for v in row[:-1]): float(row[-1]) for row in rows}
    if len(probs) != 2 ** len(axes):
        raise DomainError(f"expected {2 ** len(axes)} rows, got {len(probs)}")
    return ProbTable.from_mapping(axes, probs, quasi=meta.get("quasi") == "true")


def counts_from_csv(text: str) -> ClickCounts:
    meta, header, rows = _parse_csv(text)
    axes = tuple(header[:-1])
    arr = np.zeros((2,) * len(axes), dtype=np.int64)
    for row in rows:
        arr[tuple(value_index(int(v)) for v in row[:-1])] = int(row[-1])
    n_total = int(meta.get("n_total", arr.sum()))
    return ClickCounts(axes, arr, n_total, int(meta.get("seed", 0)))
