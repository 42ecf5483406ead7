"""Experiment configuration: JSON schema validation plus physics checks."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import ConfigParseError, ConfigPhysicsError, ConfigSchemaError, DomainError
from .optics import ArmConfig, BeamSplitter, PolarizationSetting, validate_arm
from .qcore import ATOL_VALID, pure_two_qubit, product_state, singlet, werner
from .space1 import BellChoice

_DEG = re.compile(r"^(.*)deg$")


def load_schema() -> dict:
    text = resources.files("bellspace").joinpath("config.schema.json").read_text()
    return json.loads(text)


def parse_angle(value) -> float:
    """Radians from a number, or degrees from a ``"<number>deg"`` string."""
    if isinstance(value, str):
        m = _DEG.match(value.strip())
        if not m:
            raise DomainError(f"angle string must end in 'deg', got {value!r}")
        return math.radians(float(m.group(1)))
    return float(value)


@dataclass(frozen=True)
class StateSpec:
    kind: str  # singlet | product | werner | pure
    s_a: tuple = (0.0, 0.0, 0.0)
    s_b: tuple = (0.0, 0.0, 0.0)
    eta: float = 1.0
    amplitudes: tuple = ()

    def density(self, eta: float | None = None) -> np.ndarray:
        if eta is not None:
            if self.kind != "werner":
                raise DomainError("the 'eta' parameter needs a werner state")
            return werner(eta)
        if self.kind == "singlet":
            return singlet()
        if self.kind == "product":
            return product_state(self.s_a, self.s_b)
        if self.kind == "werner":
            return werner(self.eta)
        if self.kind == "pure":
            return pure_two_qubit(self.amplitudes)
        raise DomainError(f"unknown state kind {self.kind!r}")

    def to_json(self) -> dict:
        if self.kind == "singlet":
            return {"kind": "singlet"}
        if self.kind == "product":
            return {"kind": "product", "s_A": list(self.s_a), "s_B": list(self.s_b)}
        if self.kind == "werner":
            return {"kind": "werner", "eta": self.eta}
        return {"kind": "pure", "amplitudes": [[z.real, z.imag] for z in self.amplitudes]}


@dataclass(frozen=True)
class ScanParam:
    name: str
    lo: float
    hi: float
    count: int


@dataclass(frozen=True)
class ScanConfig:
    objective: str
    params: tuple[ScanParam, ...]
    refine: bool = True
    keep_grid: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    state: StateSpec
    arm_a: ArmConfig
    arm_b: ArmConfig
    space: int
    choice: BellChoice = field(default_factory=BellChoice)
    output: Path | None = None
    scan: ScanConfig | None = None
    invert_table: Path | None = None
    tomo_table: Path | None = None
    tomo_clamp: bool = False
    base_dir: Path = Path(".")


def locate_line(text: str | None, path) -> int | None:
    """Best-effort line number of the key at ``path`` inside the raw JSON text."""
    if not text:
        return None
    pos = 0
    found = None
    for part in path:
        if isinstance(part, int):
            continue
        idx = text.find(f'"{part}"', pos)
        if idx < 0:
            break
        found = pos = idx
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def _dotted(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def parse_config(data: Any, text: str | None = None, base_dir: Path | str = ".") -> ExperimentConfig:
    """Validate a decoded config object and build an :class:`ExperimentConfig`."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        raise ConfigSchemaError(err.message, _dotted(path) or "<root>", locate_line(text, path))

    def physics(msg, *path):
        raise ConfigPhysicsError(msg, _dotted(path), locate_line(text, path))

    base_dir = Path(base_dir)
    arms = {}
    for key in ("armA", "armB"):
        raw = data[key]
        bs = BeamSplitter(**{c: float(raw["bs"][c]) for c in ("t_x", "t_y", "r_x", "r_y")})
        arm = ArmConfig(
            bs=bs,
            omega1=PolarizationSetting(parse_angle(raw["omega1"]["theta"]), parse_angle(raw["omega1"]["phi"])),
            omega2=PolarizationSetting(parse_angle(raw["omega2"]["theta"]), parse_angle(raw["omega2"]["phi"])),
        )
        report = validate_arm(arm)
        if not report.valid:
            physics("; ".join(report.failures()), key, "bs")
        if data["space"] == 1 and not bs.is_nonpolarizing:
            physics("space 1 needs a nonpolarizing splitter (t_x == t_y, r_x == r_y)", key, "bs")
        arms[key] = arm

    st = data["state"]
    if st["kind"] == "product":
        for name in ("s_A", "s_B"):
            n = float(np.linalg.norm(st[name]))
            if n > 1 + ATOL_VALID:
                physics(f"Bloch vector has norm {n:.6g} > 1", "state", name)
        state = StateSpec("product", s_a=tuple(st["s_A"]), s_b=tuple(st["s_B"]))
    elif st["kind"] == "werner":
        state = StateSpec("werner", eta=float(st["eta"]))
    elif st["kind"] == "pure":
        amps = tuple(complex(*a) if isinstance(a, list) else complex(a) for a in st["amplitudes"])
        norm = math.sqrt(sum(abs(a) ** 2 for a in amps))
        if abs(norm - 1) > ATOL_VALID:
            physics(f"amplitudes have norm {norm:.12g}, expected 1", "state", "amplitudes")
        state = StateSpec("pure", amplitudes=amps)
    else:
        state = StateSpec("singlet")

    scan = None
    if "scan" in data:
        params = []
        for i, p in enumerate(data["scan"]["parameters"]):
            lo, hi = parse_angle(p["min"]), parse_angle(p["max"])
            lim = _param_domain(p["name"])
            if not (lim[0] - 1e-12 <= lo <= hi <= lim[1] + 1e-12):
                raise ConfigSchemaError(
                    f"range [{lo}, {hi}] of {p['name']} must satisfy {lim[0]} <= min <= max <= {lim[1]:.6g}",
                    f"scan.parameters[{i}]",
                    locate_line(text, ["scan", "parameters", i, "name"]),
                )
            if p["name"] == "eta" and st["kind"] != "werner":
                physics("scanning 'eta' requires a werner state", "state", "kind")
            params.append(ScanParam(p["name"], lo, hi, int(p["count"])))
        scan = ScanConfig(
            objective=data["scan"]["objective"],
            params=tuple(params),
            refine=data["scan"].get("refine", True),
            keep_grid=data["scan"].get("keep_grid", True),
        )

    def path_of(section):
        raw = data.get(section, {}).get("table") if section != "outputs" else data.get("outputs", {}).get("path")
        return None if raw is None else base_dir / raw

    return ExperimentConfig(
        state=state,
        arm_a=arms["armA"],
        arm_b=arms["armB"],
        space=int(data["space"]),
        choice=BellChoice(**data.get("choice", {})),
        output=path_of("outputs"),
        scan=scan,
        invert_table=path_of("invert"),
        tomo_table=path_of("tomo"),
        tomo_clamp=bool(data.get("tomo", {}).get("clamp", False)),
        base_dir=base_dir,
    )


def _param_domain(name: str) -> tuple[float, float]:
    if name.endswith("theta") or name.endswith("phi"):
        return 0.0, 2 * math.pi
    return 0.0, 1.0


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc.strerror}", str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, str(path), exc.lineno) from exc
    return parse_config(data, text, path.parent)


def default_config_data() -> dict:
    """Singlet at the planar settings that maximize the standard CH violation."""
    r = 1 / math.sqrt(2)
    bs = {"t_x": r, "t_y": r, "r_x": r, "r_y": r}
    return {
        "state": {"kind": "singlet"},
        "armA": {"bs": bs, "omega1": {"theta": "0deg", "phi": 0}, "omega2": {"theta": "90deg", "phi": 0}},
        "armB": {"bs": bs, "omega1": {"theta": "45deg", "phi": 0}, "omega2": {"theta": "135deg", "phi": 0}},
        "space": 1,
        "choice": {"j": 1, "k": 1, "alpha": 1, "beta": 1},
    }


def default_config() -> ExperimentConfig:
    return parse_config(default_config_data())
