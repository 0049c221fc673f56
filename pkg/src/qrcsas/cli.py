"""Command-line front end.

Every subcommand reads an optional YAML run configuration, writes CSV
detail files and a ``summary.json`` into ``--out``, and exits with

* 0 when the check passes (or is purely diagnostic),
* 1 when the check's verdict is a failure,
* 2 on usage or configuration errors,
* 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import injectivity as inj
from . import quantum as qm
from . import sas as sasmod
from . import tasks
from .errors import ChannelError, EspViolationError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------- schemas

_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 1}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}
_POINT = {"anyOf": [_NUM, _NUMS]}
_INPUT_PARAM = {
    "type": "object",
    "properties": {"input": {"type": "integer", "minimum": 0}, "gain": _NUM, "offset": _NUM},
    "required": ["input"],
    "additionalProperties": False,
}
_PARAM = {"anyOf": [_NUM, _INPUT_PARAM]}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": ["number", "string"]}}}
_STAGE_NAMES = [
    "identity",
    "amplitude_damping",
    "dephasing",
    "depolarizing",
    "reset_rate",
    "rotation",
    "hadamard",
    "unitary",
]
_STAGE = {
    "type": "object",
    "properties": {
        "channel": {"enum": _STAGE_NAMES},
        "lambda": _PARAM,
        "epsilon": _PARAM,
        "z": _PARAM,
        "angle": _PARAM,
        "axis": {"enum": ["x", "y", "z"]},
        "sigma": {"anyOf": [{"type": "string"}, _MATRIX]},
        "matrix": _MATRIX,
    },
    "required": ["channel"],
    "additionalProperties": False,
}
_STAGES = {"type": "array", "items": _STAGE, "minItems": 1}


def _section(**props):
    return {"type": "object", "properties": props, "additionalProperties": False}


CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "properties": {
                "type": {"enum": ["stages", "contracted", "lindblad", "stm"]},
                "stages": _STAGES,
                "encoding": _STAGES,
                "outer": _STAGES,
                "gamma": _NUM,
                "dtau": _NUM,
                "hamiltonian": {"enum": ["linear", "quadratic"]},
                "epsilon": _NUM,
                "g": _NUM,
            },
            "required": ["type"],
            "additionalProperties": False,
        },
        "domain": _section(lo=_POINT, hi=_POINT),
        "grid": _section(resolution=_INT),
        "seed": {"type": "integer", "minimum": 0},
        "tol": _NUM,
        "fixed_point": _section(inputs={"type": "array", "items": _POINT}),
        "local_injectivity": _section(inputs={"type": "array", "items": _POINT}),
        "scan": _section(samples=_INT, seq_len=_INT, resolution=_INT),
        "constant_filter": _section(starts=_INT, sequences=_INT, steps=_INT),
        "preimage": _section(x0=_NUMS, z0=_POINT, n_sequences=_INT, seq_len=_INT),
        "counterexample": _section(
            generator={"enum": ["shifted", "random", "identical"]},
            shift=_NUM,
            trials=_INT,
            seq_len=_INT,
            tol_in=_NUM,
            tol_out=_NUM,
        ),
        "fig1": _section(
            gamma_min=_NUM,
            gamma_max=_NUM,
            z_min=_NUM,
            z_max=_NUM,
            resolution=_INT,
            dtau=_NUM,
            hamiltonian={"enum": ["linear", "quadratic"]},
        ),
        "fig2": _section(
            epsilons=_NUMS,
            g_grid=_NUMS,
            washout=_INT,
            n_train=_INT,
            n_test=_INT,
            ridge=_NUM,
            realizations=_INT,
        ),
    },
    "additionalProperties": False,
}

SUMMARY_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"type": "string"},
        "verdict": {"type": "string"},
        "passed": {"type": ["boolean", "null"]},
        "seed": {"type": "integer"},
        "details": {"type": "object"},
        "files": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["command", "verdict", "passed", "seed", "details", "files"],
    "additionalProperties": False,
}


def load_config(path):
    """Parse and validate a YAML run configuration; ``None`` gives an empty config."""
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    cfg = {} if cfg is None else cfg
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {loc}: {exc.message}") from exc
    return cfg


# ------------------------------------------------------------ models


def _matrix(rows):
    try:
        return np.array([[complex(v) for v in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad matrix entry: {exc}") from exc


def _state(desc):
    if isinstance(desc, str):
        return qm.state(desc)
    return _matrix(desc)


_REQUIRED = {
    "identity": (),
    "amplitude_damping": ("lambda",),
    "dephasing": ("lambda",),
    "depolarizing": ("z",),
    "reset_rate": ("epsilon", "sigma"),
    "rotation": ("axis", "angle"),
    "hadamard": (),
    "unitary": ("matrix",),
}


def _resolve(value, z):
    if isinstance(value, dict):
        return value.get("offset", 0.0) + value.get("gain", 1.0) * float(z[value["input"]])
    return value


def _make_channel(stage, z):
    name = stage["channel"]
    v = {k: _resolve(val, z) for k, val in stage.items() if k != "channel"}
    if name == "identity":
        return qm.identity_channel(2)
    if name == "amplitude_damping":
        return qm.amplitude_damping(v["lambda"])
    if name == "dephasing":
        return qm.dephasing(v["lambda"])
    if name == "depolarizing":
        return qm.depolarizing_input(v["z"])
    if name == "reset_rate":
        return qm.reset_rate(v["epsilon"], _state(stage["sigma"]))
    if name == "rotation":
        return qm.rotation(v["axis"], v["angle"])
    if name == "hadamard":
        return qm.hadamard()
    return qm.unitary(_matrix(stage["matrix"]))


def _stage(stage, lo, hi):
    name = stage["channel"]
    extra = set(stage) - {"channel"} - set(_REQUIRED[name])
    missing = set(_REQUIRED[name]) - set(stage)
    if missing or extra:
        raise ConfigError(f"stage {name!r}: missing {sorted(missing)}, unexpected {sorted(extra)}")
    inputs = [val["input"] for val in stage.values() if isinstance(val, dict)]
    if any(k >= len(lo) for k in inputs):
        raise ConfigError(f"stage {name!r} refers to an input coordinate outside the domain")
    if not inputs:
        return _make_channel(stage, None)
    # probe once so parameter errors surface as configuration errors
    _make_channel(stage, lo)
    return qm.ParamChannel(2, lo, hi, lambda z, s=stage: _make_channel(s, z), name=name)


def _chain(stages, lo, hi):
    built = [_stage(s, lo, hi) for s in stages]
    if all(isinstance(b, qm.Channel) for b in built):
        out = built[0]
        for b in built[1:]:
            out = qm.compose(b, out)
        return out
    return qm.chain_family(built, lo, hi)


def _domain(cfg, default):
    dom = cfg.get("domain", {})
    lo = np.atleast_1d(np.asarray(dom.get("lo", default[0]), dtype=float))
    hi = np.atleast_1d(np.asarray(dom.get("hi", default[1]), dtype=float))
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ConfigError("domain bounds must have equal length with lo <= hi")
    return lo, hi


_MODEL_KEYS = {
    "stages": {"stages"},
    "contracted": {"encoding", "outer"},
    "lindblad": {"gamma", "dtau", "hamiltonian"},
    "stm": {"epsilon", "g"},
}


def build_model(cfg):
    """Return ``(SasModel, ParamChannel, ContractedEncoding or None)`` for a config."""
    if "model" not in cfg:
        raise ConfigError("config has no model section")
    m = cfg["model"]
    kind = m["type"]
    extra = set(m) - {"type"} - _MODEL_KEYS[kind]
    if extra:
        raise ConfigError(f"model type {kind!r} does not accept {sorted(extra)}")
    try:
        if kind == "lindblad":
            lo, hi = _domain(cfg, (-2.0, 2.0))
            model = qm.LindbladModel(m.get("gamma", 1.0), m.get("dtau", 1.0), m.get("hamiltonian", "linear"))
            pch = qm.lindblad_family(model, lo, hi)
            split = None
        elif kind == "stm":
            lo, hi = _domain(cfg, (0.0, 1.0))
            if "epsilon" not in m or "g" not in m:
                raise ConfigError("stm model needs epsilon and g")
            pch = qm.compose_family(
                qm.reset_rate(m["epsilon"], qm.state("0")),
                qm.rotation_family("y", gain=m["g"], lo=lo, hi=hi),
            )
            split = None
        elif kind == "stages":
            lo, hi = _domain(cfg, (0.0, 1.0))
            pch = _chain(m.get("stages") or [], lo, hi) if m.get("stages") else None
            if pch is None:
                raise ConfigError("stages model needs a nonempty stage list")
            if isinstance(pch, qm.Channel):
                pch = qm.constant_family(pch, lo, hi)
            split = None
        else:
            lo, hi = _domain(cfg, (0.0, 1.0))
            if "encoding" not in m or "outer" not in m:
                raise ConfigError("contracted model needs encoding and outer stage lists")
            outer = _chain(m["outer"], lo, hi)
            if not isinstance(outer, qm.Channel):
                raise ConfigError("outer stages must not depend on the input")
            enc = _chain(m["encoding"], lo, hi)
            if isinstance(enc, qm.Channel):
                enc = qm.constant_family(enc, lo, hi)
            enc = _with_unitary(enc, m["encoding"])
            pch = qm.compose_family(outer, enc)
            split = inj.ContractedEncoding(outer, enc)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc
    sas = sasmod.extract_sas(pch)
    res = cfg.get("grid", {}).get("resolution")
    if res:
        sas = sasmod.SasModel(
            sas.n, sas.N, sas.lo, sas.hi, sas.pq_batch, sas.source, sas.basis, sas.channel, res
        )
    return sas, pch, split


def _with_unitary(enc, stages):
    """Attach ``U(z)`` when every encoding stage is a unitary conjugation."""
    if not all(s["channel"] in ("rotation", "hadamard", "unitary", "identity") for s in stages):
        return enc

    def u_of_z(z):
        u = np.eye(2, dtype=complex)
        for s in stages:
            k = _make_channel(s, z).kraus[0]
            u = k @ u
        return u

    return qm.ParamChannel(enc.d, enc.lo, enc.hi, enc.builder, enc.superops, u_of_z, enc.name)


# ------------------------------------------------------------- output


def _cmat(m):
    m = np.asarray(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


class Run:
    def __init__(self, command, args, cfg):
        self.command = command
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        self.tol = args.tol if args.tol is not None else cfg.get("tol")
        self.jobs = args.jobs
        self.fast = args.fast
        self.files = []

    def csv(self, name, header, rows):
        path = self.out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        self.files.append(name)
        return path

    def finish(self, verdict, passed, details):
        summary = {
            "command": self.command,
            "verdict": verdict,
            "passed": passed,
            "seed": self.seed,
            "details": details,
            "files": self.files + ["summary.json"],
        }
        jsonschema.validate(summary, SUMMARY_SCHEMA)
        with open(self.out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
        print(f"{self.command}: {verdict}")
        return EXIT_FAIL if passed is False else EXIT_PASS


def _r(v):
    return repr(float(v))


def _zcols(n):
    return ["z"] if n == 1 else [f"z{k + 1}" for k in range(n)]


def _grid(sas, resolution=None):
    return sasmod.domain_grid(sas.lo, sas.hi, resolution or sas.grid_resolution)


def _points(values, n):
    return np.array([np.atleast_1d(v) for v in values], dtype=float).reshape(-1, n)


# ----------------------------------------------------------- commands


def cmd_sas_extract(run, cfg):
    sas, _, _ = build_model(cfg)
    grid = _grid(sas)
    sasmod.write_sas_csv(sas, grid, run.out / "p.csv", run.out / "q.csv")
    run.files += ["p.csv", "q.csv"]
    esp = sas.esp
    return run.finish(
        "extracted",
        None,
        {"n": sas.n, "N": sas.N, "grid_points": len(grid), "max_norm_p": esp.max_norm, "esp_margin": esp.margin},
    )


def cmd_fixed_point(run, cfg):
    sas, _, _ = build_model(cfg)
    inputs = cfg.get("fixed_point", {}).get("inputs")
    zs = _points(inputs, sas.n) if inputs else _grid(sas)
    xs = sasmod.fixed_points(sas, zs)
    run.csv(
        "fixed_points.csv",
        _zcols(sas.n) + [f"x{i + 1}" for i in range(sas.N)],
        [[_r(v) for v in z] + [_r(v) for v in x] for z, x in zip(zs, xs)],
    )
    return run.finish("computed", None, {"points": len(zs), "first": xs[0].tolist()})


def cmd_esp_check(run, cfg):
    sas, _, _ = build_model(cfg)
    rep = sasmod.esp_check(sas)
    run.csv("esp.csv", _zcols(sas.n) + ["norm"], [[_r(v) for v in z] + [_r(nv)] for z, nv in zip(rep.grid, rep.norms)])
    return run.finish(rep.verdict, rep.passed, {"max_norm": rep.max_norm, "margin": rep.margin})


def cmd_constant_filter(run, cfg):
    sas, _, split = build_model(cfg)
    opts = cfg.get("constant_filter", {})
    tol = run.tol if run.tol is not None else 1e-8
    rep = inj.constant_filter_check(
        sas,
        tol=tol,
        split=split,
        n_starts=opts.get("starts", 25),
        n_sequences=opts.get("sequences", 20),
        steps=opts.get("steps", 200),
        seed=run.seed,
    )
    run.csv(
        "fixed_points.csv",
        _zcols(sas.n) + [f"x{i + 1}" for i in range(sas.N)],
        [[_r(v) for v in z] + [_r(v) for v in x] for z, x in zip(rep.grid, rep.fixed_points)],
    )
    collapsed = rep.collapse_spread < 1e-7
    details = {
        "deviation": rep.deviation,
        "tol": tol,
        "collapse_spread": rep.collapse_spread,
        "trajectories_collapse": collapsed,
    }
    if split is not None:
        details.update(
            rho_T=_cmat(rep.rho_T),
            rho_prime=_cmat(rep.rho_prime),
            rho_prime_defect=rep.rho_prime_defect,
            rho_E=_cmat(rep.rho_E),
        )
        if rep.commutator_residual is not None:
            details["commutator_residual"] = rep.commutator_residual
    # the check fails only if the fixed-point verdict and the trajectory evidence disagree
    return run.finish(rep.verdict, rep.constant == collapsed, details)


def cmd_injectivity_scan(run, cfg):
    sas, _, _ = build_model(cfg)
    opts = cfg.get("scan", {})
    xs = inj.reachable_sample(sas, opts.get("samples", 50), opts.get("seq_len"), seed=run.seed)
    grid = _grid(sas, opts.get("resolution"))
    rel = run.tol if run.tol is not None else 1e-10
    scan = inj.global_injectivity_scan(sas, grid, xs, rel_tol=rel)
    run.csv(
        "rank.csv",
        _zcols(sas.n) + [f"x{i + 1}" for i in range(sas.N)] + ["norm", "rank", "min_singular_value"],
        [[_r(v) for v in r.z] + [_r(v) for v in r.x] + [_r(r.norm), r.rank, _r(r.min_singular_value)] for r in scan.reports],
    )
    return run.finish(
        scan.verdict,
        scan.passed,
        {
            "grid_points": scan.grid_size,
            "samples": scan.sample_size,
            "min_singular_value": scan.min_singular_value,
            "witnesses": [{"z": z.tolist(), "x": x.tolist()} for z, x in scan.witnesses[:50]],
            "evidence": "sampling, not proof",
        },
    )


def cmd_local_injectivity(run, cfg):
    sas, _, _ = build_model(cfg)
    inputs = cfg.get("local_injectivity", {}).get("inputs")
    zs = _points(inputs, sas.n) if inputs else _grid(sas)
    rel = run.tol if run.tol is not None else 1e-10
    reports = [inj.local_injectivity_at_constant(sas, z, rel_tol=rel) for z in zs]
    run.csv(
        "local_rank.csv",
        _zcols(sas.n) + ["norm", "rank", "min_singular_value"],
        [[_r(v) for v in r.z] + [_r(r.norm), r.rank, _r(r.min_singular_value)] for r in reports],
    )
    bad = [r.z.tolist() for r in reports if not r.passed]
    return run.finish("full-rank" if not bad else "rank-deficient", not bad, {"points": len(reports), "witnesses": bad})


def cmd_preimage(run, cfg):
    sas, _, _ = build_model(cfg)
    opts = cfg.get("preimage", {})
    if "x0" in opts:
        x0 = np.asarray(opts["x0"], dtype=float)
    else:
        x0 = sasmod.fixed_point(sas, np.atleast_1d(opts.get("z0", sas.lo)))
    tol = run.tol if run.tol is not None else inj.PREIMAGE_TOL
    pre = inj.preimage_constant_output(
        sas, x0, _grid(sas), tol, opts.get("n_sequences", 20), opts.get("seq_len", 200), run.seed
    )
    run.csv("preimage.csv", _zcols(sas.n), [[_r(v) for v in z] for z in pre.points])
    held = pre.sequence_deviation is not None and pre.sequence_deviation < 1e-7
    return run.finish(
        "empty" if pre.empty else f"{len(pre.clusters)}-cluster",
        (not pre.empty) and held,
        {
            "x0": x0.tolist(),
            "tol": tol,
            "representatives": pre.representatives.tolist(),
            "sequence_deviation": None if pre.sequence_deviation is None else pre.sequence_deviation,
        },
    )


def cmd_counterexample(run, cfg):
    sas, _, _ = build_model(cfg)
    opts = cfg.get("counterexample", {})
    kind = opts.get("generator", "random")
    if kind == "shifted":
        gen = inj.shifted_pairs(sas.lo, sas.hi, opts.get("shift", 1.0))
    elif kind == "identical":
        gen = inj.identical_pairs(sas.lo, sas.hi)
    else:
        gen = inj.random_pairs(sas.lo, sas.hi)
    tol_out = run.tol if run.tol is not None else opts.get("tol_out", 1e-10)
    try:
        res = inj.counterexample_search(
            sas,
            gen,
            tol_in=opts.get("tol_in", 0.5),
            tol_out=tol_out,
            trials=opts.get("trials", 1000),
            seq_len=opts.get("seq_len", 50),
            seed=run.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    details = {"trials": res.trials, "skipped_pairs": res.skipped, "smallest_output_gap": _num(res.smallest_output_gap)}
    if res.found:
        a, b = res.witness
        details.update(input_gap=res.input_gap, output_gap=res.output_gap)
        run.csv(
            "witness.csv",
            ["t"] + [f"z{k + 1}" for k in range(sas.n)] + [f"z{k + 1}_prime" for k in range(sas.n)],
            [[t] + [_r(v) for v in a[t]] + [_r(v) for v in b[t]] for t in range(len(a))],
        )
    return run.finish("witness-found" if res.found else "no-witness", not res.found, details)


def cmd_fig1(run, cfg):
    opts = cfg.get("fig1", {})
    res_n = opts.get("resolution", 101)
    gmin = opts.get("gamma_min", 2.0 / res_n)
    gammas = np.linspace(gmin, opts.get("gamma_max", 2.0), res_n)
    zs = np.linspace(opts.get("z_min", -2.0), opts.get("z_max", 2.0), res_n)
    enc = opts.get("hamiltonian", "linear")
    res = inj.fig1_scan(gammas, zs, opts.get("dtau", 1.0), enc, jobs=run.jobs)
    res.write_csv(run.out / "fig1.csv")
    run.files.append("fig1.csv")
    off = ~res.near_singular & ~res.failed
    max_res = float(np.nanmax(res.residual))
    min_norm = float(np.min(res.norm[off])) if np.any(off) else math.nan
    passed = max_res < 1e-8 and min_norm > 1e-8 and not res.failed.any()
    return run.finish(
        "pass" if passed else "fail",
        passed,
        {
            "grid": [len(gammas), len(zs)],
            "max_residual": _num(max_res),
            "min_norm_off_singular_set": _num(min_norm),
            "failed_points": int(res.failed.sum()),
            "hamiltonian": enc,
        },
    )


def cmd_fig2(run, cfg):
    opts = cfg.get("fig2", {})
    config = tasks.TaskConfig(
        washout=opts.get("washout", 100),
        n_train=opts.get("n_train", 1000),
        n_test=opts.get("n_test", 1000),
        ridge=opts.get("ridge", 1e-10),
        realizations=opts.get("realizations", 100),
        seed=run.seed,
    )
    if run.fast:
        config = config.fast()
    eps = opts.get("epsilons", list(tasks.FIG2_EPSILONS))
    g_grid = opts.get("g_grid")
    rows = tasks.fig2_sweep(eps, g_grid, config, jobs=run.jobs)
    tasks.write_fig2_csv(rows, run.out / "fig2.csv")
    run.files.append("fig2.csv")
    in_range = all(-1e-9 <= r[2] <= 1 + 1e-9 for r in rows)
    collapse = {str(r[0]): r[2] for r in rows if abs(r[1] - 2 * math.pi) < 1e-12}
    passed = in_range and all(v < 0.05 for v in collapse.values())
    return run.finish(
        "pass" if passed else "fail",
        passed,
        {"rows": len(rows), "realizations": config.realizations, "mean_C_at_2pi": collapse},
    )


COMMANDS = {
    "sas-extract": (cmd_sas_extract, "Write p and q over the domain grid as CSV."),
    "fixed-point": (cmd_fixed_point, "Constant-input fixed points."),
    "esp-check": (cmd_esp_check, "Spectral-norm contraction check of p over the grid."),
    "constant-filter": (cmd_constant_filter, "Detect an input-independent filter."),
    "injectivity-scan": (cmd_injectivity_scan, "Rank condition over grid inputs and reachable states."),
    "local-injectivity": (cmd_local_injectivity, "Rank condition at constant-input fixed points."),
    "preimage": (cmd_preimage, "Inputs whose fixed point equals a target state."),
    "counterexample": (cmd_counterexample, "Search for distinct inputs with identical outputs."),
    "fig1": (cmd_fig1, "Rank-condition norm for the damped driven qubit over (gamma, z)."),
    "fig2": (cmd_fig2, "Short-term-memory capacity sweep over reset rate and input gain."),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed; overrides the config")
    common.add_argument(
        "--jobs", type=int, metavar="N", default=os.cpu_count() or 1, help="worker processes; 1 runs serially"
    )
    common.add_argument("--fast", action="store_true", help="reduced realizations for quick runs")
    common.add_argument("--tol", type=float, metavar="FLOAT", help="override the command's main tolerance")
    parser = argparse.ArgumentParser(prog="qrcsas", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config)
        if args.command not in ("fig1", "fig2") and "model" not in cfg:
            raise ConfigError(f"{args.command} needs a config with a model section")
        return func(Run(args.command, args, cfg), cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, EspViolationError, ChannelError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
