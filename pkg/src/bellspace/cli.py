"""Command-line interface.

    bellspace <command> [--config PATH] [--seed N] [--n COUNT] [--out PATH] [--format json|csv|text]

Commands: povm, probs, bell, sample, invert, tomo, scan, check.
Exit status: 0 success, 1 validation/usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checks, qcore, space1, space2
from .config import ExperimentConfig, default_config, load_config
from .errors import BellspaceError, ConfigError
from .scan import ScanSpec, landscape_csv, run_scan
from .stats import (
    ClickCounts,
    ProbTable,
    counts_to_csv,
    fmt,
    marginalize,
    sample_counts,
    table_from_csv,
    table_to_csv,
)

COMMANDS = ("povm", "probs", "bell", "sample", "invert", "tomo", "scan", "check")


class UsageError(Exception):
    pass


# -- output ------------------------------------------------------------------------

def _json_value(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            obj = np.stack([obj.real, obj.imag], axis=-1)
        return _json_value(obj.tolist(), indent, level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError(f"cannot encode non-finite number {obj!r}")
        return fmt(obj + 0.0)  # folds -0.0 into 0.0
    if isinstance(obj, complex):
        return _json_value([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_json_value(v, indent, level + 1) for v in obj]
        if all(not p.startswith(("{", "[")) or "\n" not in p for p in parts) and sum(map(len, parts)) < 100:
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(pad + p for p in parts) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def to_json(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and complex numbers as ``[re, im]``."""
    return _json_value(obj, indent, 0) + "\n"


@dataclass
class CommandResult:
    data: dict
    table: object = None  # ProbTable, ClickCounts or CSV text for --format csv
    summary: list = field(default_factory=list)


def emit(result: CommandResult, fmt_name: str, path=None) -> str:
    """Render ``result`` as json or csv; write to ``path`` when given."""
    if fmt_name == "json":
        text = to_json(result.data)
    elif fmt_name == "csv":
        if isinstance(result.table, ProbTable):
            text = table_to_csv(result.table)
        elif isinstance(result.table, ClickCounts):
            text = counts_to_csv(result.table)
        elif isinstance(result.table, str):
            text = result.table
        else:
            raise UsageError("this command has no tabular output; use --format json")
    elif fmt_name == "text":
        text = "\n".join(result.summary) + "\n"
    else:
        raise UsageError(f"unknown format {fmt_name!r}")
    if not text.endswith("\n"):
        text += "\n"
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text


def _table_json(table: ProbTable) -> dict:
    return {
        "axes": list(table.axes),
        "quasi": table.quasi,
        "rows": [list(key) + [p] for key, p in table.items()],
    }


def _label(axes, key) -> str:
    return ",".join(f"{a}={v:+d}" for a, v in zip(axes, key))


# -- helpers -----------------------------------------------------------------------

def _require_space(cfg: ExperimentConfig, space: int, command: str):
    if cfg.space != space:
        raise ConfigError(f"`{command}` needs a space-{space} configuration", "space")


def _povms(cfg: ExperimentConfig):
    if cfg.space == 1:
        return space1.povm_space1(cfg.arm_a), space1.povm_space1(cfg.arm_b)
    return space2.povm_space2(cfg.arm_a), space2.povm_space2(cfg.arm_b)


def _joint(cfg: ExperimentConfig, rho=None) -> ProbTable:
    rho = cfg.state.density() if rho is None else rho
    pa, pb = _povms(cfg)
    if cfg.space == 1:
        return space1.joint_table_space1(rho, pa, pb)
    return space2.joint_table_space2(rho, pa, pb)


def _need_seed(args):
    if args.seed is None:
        raise UsageError(f"`{args.command}` requires --seed")
    return args.seed


# -- commands ----------------------------------------------------------------------

def cmd_povm(cfg: ExperimentConfig, args) -> CommandResult:
    out = {"space": cfg.space}
    summary = [f"space {cfg.space}"]
    for name, povm in zip(("armA", "armB"), _povms(cfg)):
        axes = space1.AXES_A if cfg.space == 1 else space2.AXES
        entry = {"elements": {_label(axes, key): op for key, op in sorted(povm.elements.items(), reverse=True)}}
        if cfg.space == 1:
            entry["p_alpha"] = {"+1": povm.p_alpha[1], "-1": povm.p_alpha[-1]}
            entry["S"] = {"+1": povm.S[1], "-1": povm.S[-1]}
            summary.append(f"{name}: p(alpha=+1) = {fmt(povm.p_alpha[1])}, p(alpha=-1) = {fmt(povm.p_alpha[-1])}")
        else:
            form = povm.gamma_form
            if form is None:
                entry["gammas"] = None
                summary.append(f"{name}: gamma form absent")
            else:
                entry["gammas"] = dict(zip(("X", "Y", "XY"), form.gammas))
                entry["axes"] = dict(zip(("X", "Y", "XY"), form.axes))
                summary.append(
                    f"{name}: gamma_X = {fmt(form.gammas[0])}, gamma_Y = {fmt(form.gammas[1])}, "
                    f"gamma_XY = {fmt(form.gammas[2])}"
                )
        out[name] = entry
    return CommandResult(out, None, summary)


def cmd_probs(cfg: ExperimentConfig, args) -> CommandResult:
    rho = cfg.state.density()
    joint = _joint(cfg, rho)
    data = {"space": cfg.space, "joint": _table_json(joint), "marginals": {}}
    for axis in joint.axes:
        m = marginalize(joint, [axis])
        data["marginals"][axis] = {"+1": m[1], "-1": m[-1]}
    summary = [f"{_label(joint.axes, key)}: {fmt(p)}" for key, p in joint.items()]
    if cfg.space == 1:
        pa, pb = _povms(cfg)
        cond = {}
        for party, povm, red, (o, s) in (
            ("A", pa, qcore.reduced_a(rho), ("j", "alpha")),
            ("B", pb, qcore.reduced_b(rho), ("k", "beta")),
        ):
            try:
                cs = space1.conditional_stats(red, povm)
            except BellspaceError as exc:
                cond[party] = {"error": str(exc)}
                continue
            cond[party] = {
                f"p({o}|{s})": {f"{o}={x:+d}|{s}={y:+d}": v for (x, y), v in cs.p_j_given_alpha.items()},
                f"p({s}|{o})": {f"{s}={y:+d}|{o}={x:+d}": v for (y, x), v in cs.p_alpha_given_j.items()},
            }
        data["conditionals"] = cond
    return CommandResult(data, joint, summary)


def cmd_bell(cfg: ExperimentConfig, args) -> CommandResult:
    rho = cfg.state.density()
    choice = cfg.choice
    data = {"space": cfg.space, "choice": {"j": choice.j, "k": choice.k, "alpha": choice.alpha, "beta": choice.beta}}
    summary = []
    if cfg.space == 1:
        table = _joint(cfg, rho)
        data["window"] = list(space1.CLASSICAL_WINDOW)
        for kind, symbol in zip(space1.BELL_KINDS, ("C", "C'", "C''")):
            terms = space1.bell_terms(kind, table, choice)
            value = space1.bell_quantity(kind, table, choice)
            v = space1.verdict(value)
            data[kind] = {"symbol": symbol, "value": value, "verdict": v, "terms": terms}
            summary.append(f"{kind:8s} {symbol:3s} = {value:+.6f}  {v}")
    else:
        pa, pb = _povms(cfg)
        q = space2.quasi_joint(rho, pa, pb)
        neg = space2.negativity(q)
        data["quasi_joint_min"] = q.min_entry
        data["negativity"] = neg
        data["verdict"] = "NEGATIVE" if neg > 1e-12 else "NONNEGATIVE"
        summary.append(f"quasi-joint min entry = {q.min_entry:+.6f}  {data['verdict']}")
    return CommandResult(data, None, summary)


def cmd_sample(cfg: ExperimentConfig, args) -> CommandResult:
    seed = _need_seed(args)
    table = _joint(cfg)
    counts = sample_counts(table, args.n, seed)
    data = {
        "axes": list(counts.axes),
        "n_total": counts.n_total,
        "seed": counts.seed,
        "rows": [list(key) + [counts[key]] for key, _ in table.items()],
    }
    summary = [f"n={counts.n_total} seed={counts.seed}"]
    summary += [f"{_label(table.axes, key)}: {counts[key]}" for key, _ in table.items()]
    return CommandResult(data, counts, summary)


def _gammas_for(axes, form_a, form_b) -> dict:
    lookup = {
        "j": form_a.gammas[0], "k": form_a.gammas[1],
        "j_A": form_a.gammas[0], "k_A": form_a.gammas[1],
        "j_B": form_b.gammas[0], "k_B": form_b.gammas[1],
    }
    unknown = [a for a in axes if a not in lookup]
    if unknown:
        raise ConfigError(f"cannot invert unknown axes {unknown}", "invert.table")
    return {a: lookup[a] for a in axes}


def cmd_invert(cfg: ExperimentConfig, args) -> CommandResult:
    _require_space(cfg, 2, "invert")
    pa, pb = _povms(cfg)
    fa, fb = pa.require_gamma_form(), pb.require_gamma_form()
    if cfg.invert_table is not None:
        noisy = table_from_csv(cfg.invert_table.read_text())
        source = "file"
    elif args.seed is not None and args.n:
        noisy = sample_counts(_joint(cfg), args.n, args.seed).frequencies()
        source = "sampled"
    else:
        noisy = _joint(cfg)
        source = "exact"
    quasi = space2.invert_table(noisy, _gammas_for(noisy.axes, fa, fb))
    neg = space2.negativity(quasi)
    data = {
        "source": source,
        "noisy": _table_json(noisy),
        "quasi": _table_json(quasi),
        "min_entry": quasi.min_entry,
        "negativity": neg,
    }
    summary = [f"source={source} min entry={quasi.min_entry:+.6f} negativity={neg:.6f}"]
    summary += [f"{_label(quasi.axes, key)}: {fmt(p)}" for key, p in quasi.items()]
    return CommandResult(data, quasi, summary)


def cmd_tomo(cfg: ExperimentConfig, args) -> CommandResult:
    _require_space(cfg, 2, "tomo")
    pa, _ = _povms(cfg)
    truth = qcore.reduced_a(cfg.state.density())
    if cfg.tomo_table is not None:
        observed = table_from_csv(cfg.tomo_table.read_text())
        source = "file"
    else:
        exact = space2.outcome_table_space2(truth, pa)
        if args.seed is not None and args.n:
            observed = sample_counts(exact, args.n, args.seed).frequencies()
            source = "sampled"
        else:
            observed = exact
            source = "exact"
    res = space2.tomography_reconstruct(observed, pa, clamp=cfg.tomo_clamp)
    data = {
        "source": source,
        "bloch": res.bloch,
        "rho": res.rho,
        "physical": res.physical,
        "clamped": res.clamped,
        "min_eigenvalue": res.report.min_eigenvalue,
    }
    if source != "file":
        data["true_bloch"] = qcore.bloch_of_density(truth)
    summary = [
        f"source={source} s = ({res.bloch[0]:+.6f}, {res.bloch[1]:+.6f}, {res.bloch[2]:+.6f})"
        f" physical={res.physical} clamped={res.clamped}"
    ]
    return CommandResult(data, None, summary)


def cmd_scan(cfg: ExperimentConfig, args) -> CommandResult:
    if cfg.scan is None:
        raise ConfigError("`scan` needs a 'scan' section", "scan")
    spec = ScanSpec(cfg.scan.params, cfg.scan.objective, cfg.state, cfg.arm_a, cfg.arm_b, cfg.choice)
    workers = max(1, int(os.environ.get("BELLSPACE_THREADS", "1") or 1))
    result = run_scan(spec, do_refine=cfg.scan.refine, workers=workers, keep_grid=cfg.scan.keep_grid)
    data = {
        "objective": cfg.scan.objective,
        "best": result.best_params,
        "best_value": result.best_value if math.isfinite(result.best_value) else None,
        "best_raw": result.best_raw,
        "evaluations": result.evaluations,
        "skipped": result.skipped,
        "trace": result.trace,
    }
    summary = [f"objective={cfg.scan.objective} best={fmt(result.best_value)} raw={result.best_raw}"]
    summary += [f"  {k} = {fmt(v)}" for k, v in result.best_params.items()]
    if result.skipped:
        summary.append(f"skipped {result.skipped} grid point(s)")
    return CommandResult(data, landscape_csv(result, cfg.scan.objective), summary)


def cmd_check(cfg: ExperimentConfig, args) -> CommandResult:
    seed = 0 if args.seed is None else args.seed
    n = 200 if args.n is None else args.n
    results = checks.run_all(cfg, n=n, seed=seed)
    data = {"seed": seed, "n": n, "checks": [r._asdict() for r in results]}
    summary = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
    return CommandResult(data, None, summary)


HANDLERS = {
    "povm": cmd_povm,
    "probs": cmd_probs,
    "bell": cmd_bell,
    "sample": cmd_sample,
    "invert": cmd_invert,
    "tomo": cmd_tomo,
    "scan": cmd_scan,
    "check": cmd_check,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().strip()}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bellspace", description="Generalized-measurement Bell tests in two probability spaces.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="experiment JSON (default: built-in singlet config)")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed for sampling")
    p.add_argument("--n", type=int, default=None, help="number of draws / random cases")
    p.add_argument("--out", type=Path, help="output file")
    p.add_argument("--format", choices=("json", "csv", "text"), default=None)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.n is not None and args.n < 0:
            raise UsageError("--n must be >= 0")
        if args.command == "sample" and args.n is None:
            args.n = 1000
        cfg = load_config(args.config) if args.config else default_config()
        result = HANDLERS[args.command](cfg, args)
        out_path = args.out or cfg.output
        fmt_name = args.format or ("json" if out_path else "text")
        text = emit(result, fmt_name, out_path)
        if out_path is None:
            stdout.write(text)
        else:
            stdout.write("\n".join(result.summary) + "\n")
    except (UsageError, ConfigError) as exc:
        print(f"bellspace: {exc}", file=stderr)
        return 1
    except (BellspaceError, OSError, ValueError) as exc:
        print(f"bellspace: error: {exc}", file=stderr)
        return 2
    if args.command == "check" and not all(r["passed"] for r in result.data["checks"]):
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
