"""Batch front-end: run diagnostic tasks described by a YAML scenario.

Scenario schema (all keys other than ``name``, ``model`` and ``tasks`` are
optional)::

    name: gauss16
    seed: 0                 # drives every sampling task
    samples: 50             # random vectors per sampling task
    output_dir: out         # relative to the config file
    model:
      kind: gabor           # gabor | explicit | synthetic
      L: 16
      window: gaussian      # gaussian | identity
      grid: [4, 4]          # lattice steps (a, b), or "full"
    algebra: {family: jaffard, s: 3}        # or schur / bgs with weight
    weights:
      - {p: 2, weight: {kind: polynomial, s: 0}}
      - {p: inf, weight: {kind: polynomial, s: 2}}
    tasks: [bounds, dual, gram_factorization]

``explicit`` models read ``path`` (an ``.npz`` with ``points``, ``operators``
and optional ``period``).  ``synthetic`` models take ``generator``
(``random`` or ``localized``), ``count``, ``n``, a mandatory ``seed`` and,
for ``localized``, ``decay``.

Each task writes ``<task>.csv``; ``summary.json`` echoes the scenario and
records the tool version and per-task status.  Wall time is printed but
never written, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import yaml

from . import __version__
from .blockmat import BlockVector, IndexSet
from .coorbit import (
    SeqSpaceSpec,
    bochner_norm,
    conjugate_exponent,
    coorbit_norm,
    duality_pairing,
    holder_bound,
    norm_equivalence_check,
)
from .exceptions import ConfigError, GFrameError, InsufficientDataError
from .gabor import GaborGSystem, WindowOperator, build_gabor_gsystem
from .gframe import (
    GFrame,
    canonical_dual,
    frame_bounds,
    gram,
    is_dual_pair,
    mixed_gram,
    reconstruct,
    synthesis,
    verify_gram_factorization,
)
from .localization import AlgebraSpec, fit_polynomial_decay, localization_report, weighted_opnorm
from .weights import Weight

__all__ = ["TASKS", "Scenario", "parse_scenario", "run", "list_tasks", "version", "main"]

TASKS = ("bounds", "dual", "gram_factorization", "localization", "decay", "coorbit", "equivalence", "pairing")

MAX_L = 256
MAX_SIZE = 4096

EXIT_OK, EXIT_CONFIG, EXIT_TASK = 0, 2, 3

_TOP_KEYS = {"name", "seed", "samples", "output_dir", "model", "algebra", "weights", "tasks"}
_MODEL_KEYS = {
    "gabor": {"kind", "L", "window", "grid"},
    "explicit": {"kind", "path"},
    "synthetic": {"kind", "generator", "count", "n", "seed", "decay"},
}


@dataclass(frozen=True)
class Scenario:
    name: str
    model: dict
    algebra: AlgebraSpec
    weights: Tuple[Tuple[float, Weight], ...]
    tasks: Tuple[str, ...]
    seed: int = 0
    samples: int = 50
    output_dir: Path = Path("out")
    echo: dict = field(default_factory=dict, compare=False)


def list_tasks():
    return "\n".join(TASKS)


def version():
    return __version__


# ---------------------------------------------------------------- parsing


def _fail(where, msg):
    raise ConfigError(f"{where}: {msg}")


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        _fail(where, "expected a mapping")
    extra = sorted(set(d) - allowed)
    if extra:
        _fail(where, f"unknown key(s) {', '.join(map(str, extra))}")


def _int(d, key, where, lo=None, hi=None, default=None):
    if key not in d:
        if default is None:
            _fail(f"{where}.{key}", "required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(f"{where}.{key}", f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        _fail(f"{where}.{key}", f"must be >= {lo}")
    if hi is not None and v > hi:
        _fail(f"{where}.{key}", f"must be <= {hi}")
    return v


def _real(v, where):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return float("inf")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(where, f"expected a number, got {v!r}")
    return float(v)


def _weight(d, where):
    _check_keys(d, {"kind", "s", "table"}, where)
    kind = d.get("kind", "polynomial")
    if kind == "polynomial":
        return Weight("polynomial", _real(d.get("s", 0.0), f"{where}.s"))
    if kind == "samples":
        table = d.get("table")
        if not isinstance(table, list):
            _fail(f"{where}.table", "expected a list of {point: [...], value: ...}")
        entries = {}
        for i, e in enumerate(table):
            _check_keys(e, {"point", "value"}, f"{where}.table[{i}]")
            entries[tuple(np.atleast_1d(e["point"]).tolist())] = _real(e["value"], f"{where}.table[{i}].value")
        try:
            return Weight("samples", table=entries)
        except GFrameError as exc:
            _fail(where, str(exc))
    _fail(f"{where}.kind", f"unknown weight kind {kind!r}")


def _algebra(d):
    where = "algebra"
    _check_keys(d, {"family", "s", "weight"}, where)
    family = d.get("family", "jaffard")
    try:
        if family == "jaffard":
            return AlgebraSpec.jaffard(_real(d.get("s", 3.0), f"{where}.s"))
        if family in ("schur", "bgs"):
            w = _weight(d.get("weight", {}), f"{where}.weight")
            return AlgebraSpec(family, weight=w)
    except ConfigError:
        raise
    except GFrameError as exc:
        _fail(where, str(exc))
    _fail(f"{where}.family", f"unknown algebra family {family!r}")


def _model(d, base):
    where = "model"
    if not isinstance(d, dict):
        _fail(where, "expected a mapping")
    kind = d.get("kind")
    if kind not in _MODEL_KEYS:
        _fail(f"{where}.kind", f"expected one of gabor, explicit, synthetic, got {kind!r}")
    _check_keys(d, _MODEL_KEYS[kind], where)
    if kind == "gabor":
        if isinstance(d.get("L"), int) and d["L"] > MAX_L:
            _fail(f"{where}.L", f"desk-scale guard: L={d['L']} exceeds {MAX_L}")
        L = _int(d, "L", where, lo=4)
        window = d.get("window", "gaussian")
        if window not in ("gaussian", "identity"):
            _fail(f"{where}.window", f"expected gaussian or identity, got {window!r}")
        grid = d.get("grid", "full")
        if grid == "full":
            a = b = 1
        elif isinstance(grid, list) and len(grid) == 2 and all(isinstance(g, int) and not isinstance(g, bool) for g in grid):
            a, b = grid
            if a < 1 or b < 1 or L % a or L % b:
                _fail(f"{where}.grid", f"steps {grid} must be positive divisors of L={L}")
        else:
            _fail(f"{where}.grid", f"expected [a, b] or 'full', got {grid!r}")
        size = (L // a) * (L // b) * L
        if size > MAX_SIZE:
            _fail(where, f"desk-scale guard: |X| n = {size} exceeds {MAX_SIZE}")
        return {"kind": kind, "L": L, "window": window, "grid": [a, b]}
    if kind == "explicit":
        if not isinstance(d.get("path"), str):
            _fail(f"{where}.path", "required")
        path = Path(d["path"])
        if not path.is_absolute():
            path = base / path
        return {"kind": kind, "path": str(path)}
    if "seed" not in d:
        _fail(f"{where}.seed", "seed required for synthetic models")
    gen = d.get("generator")
    if gen not in ("random", "localized"):
        _fail(f"{where}.generator", f"expected random or localized, got {gen!r}")
    count = _int(d, "count", where, lo=1)
    n = _int(d, "n", where, lo=1)
    if count * n > MAX_SIZE:
        _fail(where, f"desk-scale guard: |X| n = {count * n} exceeds {MAX_SIZE}")
    out = {"kind": kind, "generator": gen, "count": count, "n": n, "seed": _int(d, "seed", where, lo=0)}
    if gen == "localized":
        out["decay"] = _real(d.get("decay", 2.0), f"{where}.decay")
    return out


def _echo_model(model):
    echo = dict(model)
    if "path" in echo:
        # the file name only, so the summary does not depend on the checkout location
        echo["path"] = Path(echo["path"]).name
    return echo


def parse_scenario(text, base_dir=None):
    """Validate a YAML scenario document and return a :class:`Scenario`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark is not None else "document"
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}: {problem}") from None
    if not isinstance(doc, dict):
        raise ConfigError("document: expected a mapping at top level")
    _check_keys(doc, _TOP_KEYS, "scenario")
    base = Path(base_dir) if base_dir is not None else Path(".")

    name = doc.get("name")
    if not isinstance(name, str) or not name:
        _fail("name", "required nonempty string")
    if "model" not in doc:
        _fail("model", "required")
    model = _model(doc["model"], base)
    algebra = _algebra(doc.get("algebra", {}))

    weights_doc = doc.get("weights", [{"p": 2}])
    if not isinstance(weights_doc, list) or not weights_doc:
        _fail("weights", "expected a nonempty list")
    weights = []
    for i, w in enumerate(weights_doc):
        _check_keys(w, {"p", "weight"}, f"weights[{i}]")
        p = _real(w.get("p", 2), f"weights[{i}].p")
        if not p > 0:
            _fail(f"weights[{i}].p", "must be positive")
        weights.append((p, _weight(w.get("weight", {}), f"weights[{i}].weight")))

    tasks = doc.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        _fail("tasks", "required nonempty list")
    for t in tasks:
        if t not in TASKS:
            _fail("tasks", f"unknown task {t!r}; expected a subset of {', '.join(TASKS)}")
    if len(set(tasks)) != len(tasks):
        _fail("tasks", "duplicate task")

    seed = _int(doc, "seed", "scenario", lo=0, default=0)
    samples = _int(doc, "samples", "scenario", lo=1, hi=10000, default=50)
    out = doc.get("output_dir", "out")
    if not isinstance(out, str):
        _fail("output_dir", "expected a path string")
    out = Path(out)
    if not out.is_absolute():
        out = base / out

    echo = {
        "name": name,
        "seed": seed,
        "samples": samples,
        "model": _echo_model(model),
        "algebra": algebra.label,
        "weights": [{"p": _fmt(p), "weight": w.label} for p, w in weights],
        "tasks": list(tasks),
    }
    return Scenario(name, model, algebra, tuple(weights), tuple(tasks), seed, samples, out, echo)


# ---------------------------------------------------------------- models


def _rng(seed, *stream):
    """Counter-based generator keyed by the seed and a stream label."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def build_model(model):
    kind = model["kind"]
    if kind == "gabor":
        L = model["L"]
        window = WindowOperator.gaussian(L) if model["window"] == "gaussian" else WindowOperator.identity(L)
        return build_gabor_gsystem(GaborGSystem.grid(window, *model["grid"]))
    if kind == "explicit":
        try:
            with np.load(model["path"]) as data:
                points = data["points"]
                ops = data["operators"]
                period = float(data["period"]) if "period" in data.files else None
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"model.path: cannot read frame file ({exc})") from None
        if ops.ndim != 3 or ops.shape[0] * ops.shape[1] > MAX_SIZE:
            raise ConfigError("model.path: operators must be (N, n, n) with N n <= 4096")
        return GFrame(IndexSet(points, period), ops)
    count, n = model["count"], model["n"]
    rng = _rng(model["seed"], 0)
    ops = _complex_normal(rng, (count, n, n))
    if model["generator"] == "localized":
        k = np.arange(count)[:, None, None]
        i = np.arange(n)[None, :, None]
        j = np.arange(n)[None, None, :]
        s = model["decay"]
        ops = ops * (1.0 + np.abs(k - i)) ** -s * (1.0 + np.abs(k - j)) ** -s
    return GFrame(IndexSet.line(count), ops)


# ---------------------------------------------------------------- tasks


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        if np.isnan(x):
            return "nan"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def _task_bounds(T, sc, rng):
    b = frame_bounds(T)
    cond = b.upper / b.lower if b.lower > 0 else float("inf")
    return ["lower", "upper", "condition", "is_frame"], [[b.lower, b.upper, cond, b.is_frame]]


def _task_dual(T, sc, rng):
    b = frame_bounds(T)
    Td = canonical_dual(T)
    bd = frame_bounds(Td)
    _, residual = is_dual_pair(T, Td)
    rel = max(abs(bd.lower - 1 / b.upper) * b.upper, abs(bd.upper - 1 / b.lower) * b.lower)
    header = ["dual_lower", "dual_upper", "inverse_upper", "inverse_lower", "relative_bound_error", "dual_pair_residual"]
    return header, [[bd.lower, bd.upper, 1 / b.upper, 1 / b.lower, rel, residual]]


def _task_gram_factorization(T, sc, rng):
    # past 1024 rows each spectral norm costs a full SVD; Frobenius bounds it from above
    r = verify_gram_factorization(T, norm="spectral" if len(T) * T.n <= 1024 else "frobenius")
    return ["residual_dual_gram", "residual_mixed", "projection_defect", "norm"], [
        [r.residual_dual_gram, r.residual_mixed, r.projection_defect, r.norm]
    ]


def _task_localization(T, sc, rng):
    Td = canonical_dual(T)
    rows = []
    # localization_report(T, U) inspects G_{U,T}; "mixed" is G_{T,Td} = [T_k Td_l^*]
    for label, A, B in (("primal", T, None), ("mixed", Td, T), ("dual", Td, None)):
        rep = localization_report(A, B, sc.algebra)
        k, l = rep.sup_attained_at
        rows.append([label, sc.algebra.label, rep.norm_value, k, l])
    return ["matrix", "algebra", "norm_value", "sup_k", "sup_l"], rows


def _task_decay(T, sc, rng):
    Td = canonical_dual(T)
    rows = []
    for label, G in (("primal", gram(T)), ("mixed", mixed_gram(T, Td)), ("dual", gram(Td))):
        try:
            f = fit_polynomial_decay(G)
            rows.append([label, f.C, f.s_fit, f.rms_log_residual, f.pairs_used])
        except InsufficientDataError:
            rows.append([label, None, None, None, 0])
    return ["matrix", "C", "s_fit", "rms_log_residual", "pairs_used"], rows


def _vectors(rng, n, count):
    return _complex_normal(rng, (count, n))


def _task_coorbit(T, sc, rng):
    Td = canonical_dual(T)
    F = _vectors(rng, T.n, sc.samples)
    rows = []
    for p, w in sc.weights:
        spec = SeqSpaceSpec(p, w)
        err_primal = err_dual = 0.0
        for f in F:
            nf = coorbit_norm(f, Td, spec)
            err_primal = max(err_primal, coorbit_norm(f - reconstruct(T, Td, f, "primal"), Td, spec) / nf)
            err_dual = max(err_dual, coorbit_norm(f - reconstruct(T, Td, f, "dual"), Td, spec) / nf)
        # synthesis bound: ||D_T g||_{H(Td)} <= ||G_{Td,T}|| ||g||
        bound = weighted_opnorm(mixed_gram(Td, T), p, w, seed=int(rng.integers(2**31))).upper
        worst = 0.0
        for _ in range(sc.samples):
            g = BlockVector(T.index_set, _complex_normal(rng, (len(T), T.n)))
            worst = max(worst, coorbit_norm(synthesis(T, g), Td, spec) / bochner_norm(g, spec))
        rows.append([_fmt(p), w.label, sc.samples, err_primal, err_dual, worst, bound, worst <= bound * (1 + 1e-9)])
    header = ["p", "weight", "samples", "max_rel_error_primal", "max_rel_error_dual",
              "max_synthesis_ratio", "synthesis_bound", "synthesis_bound_holds"]
    return header, rows


def _task_equivalence(T, sc, rng):
    Td = canonical_dual(T)
    rows = []
    for p, w in sc.weights:
        r = norm_equivalence_check(Td, T, T, Td, SeqSpaceSpec(p, w), samples=sc.samples,
                                   seed=int(rng.integers(2**31)))
        rows.append([_fmt(p), w.label, r.max_ratio_forward, r.max_ratio_backward,
                     r.bound_forward, r.bound_backward, r.holds])
    header = ["p", "weight", "max_ratio_forward", "max_ratio_backward", "bound_forward", "bound_backward", "holds"]
    return header, rows


def _task_pairing(T, sc, rng):
    Td = canonical_dual(T)
    F = _vectors(rng, T.n, sc.samples)
    G = _vectors(rng, T.n, sc.samples)
    rows = []
    for p, w in sc.weights:
        if p < 1:
            continue
        spec = SeqSpaceSpec(p, w)
        err = ratio = 0.0
        for f, g in zip(F, G):
            beta = duality_pairing(f, g, T, Td)
            inner = np.vdot(g, f)
            err = max(err, abs(beta - inner) / (np.linalg.norm(f) * np.linalg.norm(g)))
            ratio = max(ratio, abs(beta) / holder_bound(f, g, T, Td, spec))
        rows.append([_fmt(p), _fmt(conjugate_exponent(p)), w.label, err, ratio, ratio <= 1 + 1e-12])
    return ["p", "q", "weight", "max_pairing_error", "max_holder_ratio", "holder_holds"], rows


_RUNNERS = {
    "bounds": _task_bounds,
    "dual": _task_dual,
    "gram_factorization": _task_gram_factorization,
    "localization": _task_localization,
    "decay": _task_decay,
    "coorbit": _task_coorbit,
    "equivalence": _task_equivalence,
    "pairing": _task_pairing,
}


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


@dataclass
class Report:
    summary: dict
    tables: Dict[str, str]
    failures: List[str]
    wall_time: float

    @property
    def exit_code(self):
        return EXIT_TASK if self.failures else EXIT_OK


def run(scenario: Scenario, write=True):
    """Execute the scenario's tasks; write ``<task>.csv`` and ``summary.json`` when ``write``."""
    start = time.perf_counter()
    tables, status, failures = {}, {}, []
    try:
        T = build_model(scenario.model)
    except ConfigError:
        raise
    except GFrameError as exc:
        raise ConfigError(f"model: {exc}") from None
    for index, task in enumerate(TASKS):
        if task not in scenario.tasks:
            continue
        rng = _rng(scenario.seed, 1, index)
        try:
            header, rows = _RUNNERS[task](T, scenario, rng)
        except (GFrameError, np.linalg.LinAlgError) as exc:
            failures.append(task)
            status[task] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
            continue
        tables[task] = _csv_text(header, rows)
        status[task] = {"status": "ok", "csv": f"{task}.csv", "rows": len(rows)}
    summary = {
        "tool": "gframeloc",
        "version": __version__,
        "scenario": scenario.echo,
        "model": {"index_points": len(T), "n": T.n},
        "tasks": status,
    }
    if write:
        out = Path(scenario.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for task, text in tables.items():
            (out / f"{task}.csv").write_text(text, encoding="utf-8")
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return Report(summary, tables, failures, time.perf_counter() - start)


# ---------------------------------------------------------------- entry point


def _build_parser():
    parser = argparse.ArgumentParser(prog="gframeloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("config", type=Path)
    r.add_argument("--output-dir", type=Path, default=None)
    r.add_argument("--seed-override", type=int, default=None)
    r.add_argument("--tasks", default=None, help="comma-separated subset of the scenario's tasks")
    r.add_argument("--quiet", action="store_true")
    sub.add_parser("list-tasks", help="print the task names")
    sub.add_parser("version", help="print the tool version")
    return parser


def _apply_overrides(sc, args):
    changes = {}
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    if args.seed_override is not None:
        if args.seed_override < 0:
            raise ConfigError("--seed-override: must be >= 0")
        changes["seed"] = args.seed_override
        model = dict(sc.model)
        if model["kind"] == "synthetic":
            model["seed"] = args.seed_override
        changes["model"] = model
    if args.tasks is not None:
        wanted = [t.strip() for t in args.tasks.split(",") if t.strip()]
        for t in wanted:
            if t not in TASKS:
                raise ConfigError(f"--tasks: unknown task {t!r}")
        changes["tasks"] = tuple(t for t in sc.tasks if t in wanted)
    if not changes:
        return sc
    echo = dict(sc.echo)
    if "seed" in changes:
        echo["seed"] = changes["seed"]
        echo["model"] = _echo_model(changes["model"])
    if "tasks" in changes:
        echo["tasks"] = list(changes["tasks"])
    fields = {f: getattr(sc, f) for f in Scenario.__dataclass_fields__}
    fields.update(changes)
    fields["echo"] = echo
    return Scenario(**fields)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "list-tasks":
        print(list_tasks())
        return EXIT_OK
    if args.command == "version":
        print(version())
        return EXIT_OK
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        sc = _apply_overrides(parse_scenario(text, base_dir=args.config.parent), args)
        report = run(sc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for task in report.failures:
        print(f"task {task} failed: {report.summary['tasks'][task]['error']}", file=sys.stderr)
    if not args.quiet:
        for task, info in report.summary["tasks"].items():
            print(f"{task}: {info['status']}")
        print(f"wrote {sc.output_dir} in {report.wall_time:.2f} s")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
