"""Command-line entry point: config files, run orchestration, result files.

A run is one JSON config document plus one subcommand. Subcommands write
their tables as CSV with 17 significant digits and a fixed row order, so
two runs of the same config and seed produce byte-identical files; all
timing data lives in the manifest, never in the CSVs. The manifest is
written last and atomically, which makes its presence a completion
certificate: a run that died half way leaves no manifest behind.

The solver itself is single threaded by design (the batched evaluator owns
the vectorization, and fixed accumulation order is what keeps reruns
reproducible). The --threads flag and the REINSURE_DP_THREADS fallback are
therefore recorded in the manifest for bookkeeping but do not fan work out.

Config documents carry the optional keys cost_of_capital_rate and
risk_free_rate. Both are documentation: the model's discount factor beta
already folds them together, so they are echoed into the manifest untouched.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .distributions import DiscreteDistribution, FamilySpec, discretize, make_discrete
from .dp import (
    GridSpec,
    ModelConfig,
    PolicyTable,
    SearchSpec,
    StageData,
    evaluate_policy,
    solve_finite,
    solve_infinite,
)
from .errors import NumericError, ParseError, ValidationError
from .oracles import oracle_es_uniform, oracle_var_layer
from .premiums import PremiumSpec, treaty_premium
from .risk import RiskSpec, distortion_preset, is_coherent
from .sim import simulate_paths
from .treaties import make_treaty

__all__ = ["main", "parse_config", "read_policy_csv", "run", "write_config"]

_SUBCOMMANDS = (
    "solve-finite",
    "solve-infinite",
    "evaluate-policy",
    "oracle-compare",
    "simulate",
)
_DOC_KEYS = ("cost_of_capital_rate", "risk_free_rate")


def _fmt(x) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# config parsing


def _field(prefix: str, key: str) -> str:
    return f"{prefix}.{key}" if prefix else key


def _need(doc, key, prefix=""):
    if not isinstance(doc, dict) or doc.get(key) is None:
        raise ParseError(f"field {_field(prefix, key)}: required")
    return doc[key]


def _wrap(exc: ValidationError, path: str):
    raise type(exc)(f"field {path}: {exc}") from exc


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def _parse_dist(obj, path) -> DiscreteDistribution:
    if not isinstance(obj, dict):
        raise ParseError(f"field {path}: expected an object")
    try:
        if "pairs" in obj:
            return make_discrete(obj["pairs"])
        spec = FamilySpec(
            str(_need(obj, "family", path)),
            tuple(_need(obj, "params", path)),
            truncation=obj.get("truncation"),
            atoms=int(obj.get("atoms", 2)),
        )
        return discretize(spec)
    except ValidationError as exc:
        _wrap(exc, path)


def _parse_risk(obj, path) -> RiskSpec:
    kind = str(_need(obj, "kind", path))
    try:
        if kind == "value-at-risk":
            return RiskSpec(kind, alpha=float(_need(obj, "alpha", path)))
        if kind == "expected-shortfall":
            return RiskSpec(kind, alpha=float(_need(obj, "alpha", path)))
        if kind == "entropic":
            return RiskSpec(kind, gamma=float(_need(obj, "gamma", path)))
        if kind == "distortion":
            preset = str(_need(obj, "preset", path))
            return RiskSpec(kind, distortion=distortion_preset(preset))
    except ValidationError as exc:
        _wrap(exc, path)
    raise ValidationError(
        f"field {path}: risk kind {kind!r} has no config form; use value-at-risk,"
        " expected-shortfall, entropic, or distortion with a preset name"
    )


def _parse_premium(obj, path) -> PremiumSpec:
    kind = str(_need(obj, "kind", path))
    theta = float(obj.get("theta", 0.0))
    try:
        if kind == "expected":
            return PremiumSpec("expected", theta=theta)
        if kind == "ph":
            return PremiumSpec("ph", theta=theta, gamma=float(_need(obj, "gamma", path)))
        if kind == "wang":
            preset = str(_need(obj, "preset", path))
            return PremiumSpec("wang", theta=theta, distortion=distortion_preset(preset))
    except ValidationError as exc:
        _wrap(exc, path)
    raise ValidationError(f"field {path}: unknown premium kind {kind!r}")


def _parse_stage(obj, idx) -> StageData:
    path = f"stages[{idx}]"
    dY = _parse_dist(_need(obj, "claims", path), f"{path}.claims")
    dZ = _parse_dist(_need(obj, "income", path), f"{path}.income")
    risk = _parse_risk(_need(obj, "risk", path), f"{path}.risk")
    prem = _parse_premium(_need(obj, "premium", path), f"{path}.premium")
    try:
        stage = StageData(
            dY=dY,
            dZ=dZ,
            risk=risk,
            premium=prem,
            beta=float(_need(obj, "beta", path)),
            budget_constrained=bool(obj.get("budget_constrained", True)),
        )
    except ValidationError as exc:
        _wrap(exc, path)
    # normalization probe: a fully retained book carries no reinsurance price
    probe = treaty_premium(prem, dY, make_treaty("identity", {}))
    if abs(probe) > 1e-12:
        raise ValidationError(
            f"field {path}.premium: normalization probe failed"
            f" (identity treaty priced at {probe!r})"
        )
    return stage


def _parse_grid(obj) -> GridSpec:
    try:
        return GridSpec(
            float(_need(obj, "lo", "grid")),
            float(_need(obj, "hi", "grid")),
            int(_need(obj, "count", "grid")),
        )
    except ValidationError as exc:
        _wrap(exc, "grid")


def _parse_search(obj) -> SearchSpec:
    kwargs = {}
    if obj.get("resolution") is not None:
        kwargs["resolution"] = int(obj["resolution"])
    if obj.get("layer_upper") is not None:
        kwargs["layer_upper"] = float(obj["layer_upper"])
    if obj.get("knots") is not None:
        kwargs["knots"] = tuple(float(k) for k in obj["knots"])
    if obj.get("sweeps") is not None:
        kwargs["sweeps"] = int(obj["sweeps"])
    try:
        return SearchSpec(str(_need(obj, "family", "search")), **kwargs)
    except ValidationError as exc:
        _wrap(exc, "search")


def _config_from_doc(doc) -> ModelConfig:
    if not isinstance(doc, dict):
        raise ParseError("config root must be a JSON object")
    if "horizon" not in doc:
        raise ParseError("field horizon: required (integer, or null for infinite)")
    horizon = doc["horizon"]
    if horizon is not None:
        horizon = int(horizon)
    grid = _parse_grid(_need(doc, "grid"))
    search = _parse_search(_need(doc, "search"))
    stages_doc = _need(doc, "stages")
    if not isinstance(stages_doc, list) or not stages_doc:
        raise ParseError("field stages: expected a nonempty array")
    stages = tuple(_parse_stage(s, i) for i, s in enumerate(stages_doc))
    config = ModelConfig(horizon, stages, grid, search, float(doc.get("tol", 1e-4)))
    if config.is_infinite and not is_coherent(stages[0].risk):
        raise ValidationError(
            "field stages[0].risk: infinite horizon: coherence required, but"
            f" {stages[0].risk.kind!r} is not coherent"
        )
    return config


def parse_config(path) -> ModelConfig:
    """Read and validate a JSON config file."""
    return _config_from_doc(_load_json(path))


# ---------------------------------------------------------------------------
# config writing


def _dist_doc(d: DiscreteDistribution) -> dict:
    return {"pairs": d.to_pairs()}


def _risk_doc(spec: RiskSpec) -> dict:
    if spec.kind in ("value-at-risk", "expected-shortfall"):
        return {"kind": spec.kind, "alpha": spec.alpha}
    if spec.kind == "entropic":
        return {"kind": spec.kind, "gamma": spec.gamma}
    if spec.kind == "distortion":
        name = getattr(spec.distortion, "name", "")
        if not name:
            raise ValidationError("cannot serialize a distortion without a preset name")
        return {"kind": spec.kind, "preset": name}
    raise ValidationError(f"risk kind {spec.kind!r} has no config form")


def _premium_doc(spec: PremiumSpec) -> dict:
    if spec.kind == "expected":
        return {"kind": spec.kind, "theta": spec.theta}
    if spec.kind == "ph":
        return {"kind": spec.kind, "theta": spec.theta, "gamma": spec.gamma}
    name = getattr(spec.distortion, "name", "")
    if not name:
        raise ValidationError("cannot serialize a distortion without a preset name")
    return {"kind": spec.kind, "theta": spec.theta, "preset": name}


def config_to_doc(config: ModelConfig) -> dict:
    return {
        "horizon": config.horizon,
        "grid": {"lo": config.grid.lo, "hi": config.grid.hi, "count": config.grid.count},
        "search": {
            "family": config.search.family,
            "resolution": config.search.resolution,
            "layer_upper": config.search.layer_upper,
            "knots": None if config.search.knots is None else list(config.search.knots),
            "sweeps": config.search.sweeps,
        },
        "tol": config.tol,
        "stages": [
            {
                "claims": _dist_doc(s.dY),
                "income": _dist_doc(s.dZ),
                "risk": _risk_doc(s.risk),
                "premium": _premium_doc(s.premium),
                "beta": s.beta,
                "budget_constrained": s.budget_constrained,
            }
            for s in config.stages
        ],
    }


def write_config(config: ModelConfig, path) -> None:
    """Write the canonical JSON form; parse_config reads it back equal."""
    with open(path, "w") as fh:
        json.dump(config_to_doc(config), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# CSV artifacts


def _write_text(path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _values_csv(blocks) -> str:
    # blocks: iterable of (stage label, ValueFunction)
    lines = ["stage,x,value"]
    for label, vf in blocks:
        for x, v in zip(vf.grid, vf.values):
            lines.append(f"{label},{_fmt(x)},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def _policy_csv(policy: PolicyTable, labels) -> str:
    lines = ["stage,x,family,p1,p2"]
    for n, label in enumerate(labels):
        for x, f in zip(policy.grid, policy.rows[n]):
            if f.family == "proportional":
                p1, p2 = _fmt(f.params["c"]), ""
            elif f.family == "stop-loss":
                p1, p2 = _fmt(f.params["a"]), ""
            elif f.family == "layer":
                p1, p2 = _fmt(f.params["a"]), _fmt(f.params["w"])
            else:
                raise ValidationError(f"family {f.family!r} has no CSV form")
            lines.append(f"{label},{_fmt(x)},{f.family},{p1},{p2}")
    return "\n".join(lines) + "\n"


def read_policy_csv(path) -> PolicyTable:
    """Rebuild a PolicyTable from a policy.csv written by this tool."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read policy {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: empty policy file")
    order: list[str] = []
    by_stage: dict[str, list] = {}
    for row in rows:
        label = row.get("stage")
        if label is None or row.get("x") is None or row.get("family") is None:
            raise ParseError(f"{path}: needs stage,x,family,p1,p2 columns")
        if label not in by_stage:
            order.append(label)
            by_stage[label] = []
        fam = row["family"]
        if fam == "proportional":
            treaty = make_treaty(fam, {"c": float(row["p1"])})
        elif fam == "stop-loss":
            treaty = make_treaty(fam, {"a": float(row["p1"])})
        elif fam == "layer":
            treaty = make_treaty(fam, {"a": float(row["p1"]), "w": float(row["p2"])})
        else:
            raise ParseError(f"{path}: unsupported treaty family {fam!r}")
        by_stage[label].append((float(row["x"]), treaty))
    first = [x for x, _ in by_stage[order[0]]]
    for label in order[1:]:
        if [x for x, _ in by_stage[label]] != first:
            raise ParseError(f"{path}: stage blocks disagree on the state grid")
    grid = np.asarray(first, dtype=np.float64)
    return PolicyTable(
        grid, tuple(tuple(t for _, t in by_stage[label]) for label in order)
    )


def _atomic_json(path, obj) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# subcommand bodies


def _run_solve_finite(doc, config, out_dir):
    stats: list = []
    values, policy = solve_finite(config, stats=stats)
    _write_text(
        os.path.join(out_dir, "values.csv"),
        _values_csv((str(k), vf) for k, vf in enumerate(values)),
    )
    _write_text(
        os.path.join(out_dir, "policy.csv"),
        _policy_csv(policy, [str(n) for n in range(config.horizon)]),
    )
    return ["values.csv", "policy.csv"], stats, {}


def _run_solve_infinite(doc, config, out_dir):
    sol = solve_infinite(config)
    _write_text(os.path.join(out_dir, "values.csv"), _values_csv([("inf", sol.value)]))
    _write_text(os.path.join(out_dir, "policy.csv"), _policy_csv(sol.policy, ["inf"]))
    certs = {"iterations": sol.iterations, "certificate": sol.certificate}
    return ["values.csv", "policy.csv"], [], certs


def _run_evaluate_policy(doc, config, out_dir, policy_path):
    if policy_path is None:
        raise ValidationError("evaluate-policy needs --policy pointing at a policy.csv")
    table = read_policy_csv(policy_path)
    vf = evaluate_policy(table, config)
    _write_text(os.path.join(out_dir, "values.csv"), _values_csv([("0", vf)]))
    return ["values.csv"], [], {}


def _gap_rows(label, grid, dp_params, oracle_params):
    for x, d, o in zip(grid, dp_params, oracle_params):
        yield f"{label},{_fmt(x)},{_fmt(d)},{_fmt(o)},{_fmt(abs(d - o))}"


def _run_oracle_compare(doc, config, out_dir):
    kind = doc.get("oracle")
    if kind is None:
        raise ValidationError("field oracle: required for oracle-compare"
                              " (es-uniform or var-layer)")
    if config.is_infinite:
        raise ValidationError("oracle-compare needs a finite horizon")
    stats: list = []
    values, policy = solve_finite(config, stats=stats)
    _write_text(
        os.path.join(out_dir, "values.csv"),
        _values_csv((str(k), vf) for k, vf in enumerate(values)),
    )
    _write_text(
        os.path.join(out_dir, "policy.csv"),
        _policy_csv(policy, [str(n) for n in range(config.horizon)]),
    )
    grid = config.grid.points()
    lines = ["stage,x,dp_param,oracle_param,gap"]
    if kind == "es-uniform":
        last = config.horizon - 1
        s = config.stage(last)
        if s.risk.kind != "expected-shortfall" or s.premium.kind != "expected":
            raise ValidationError(
                "oracle es-uniform needs expected-shortfall risk and expected premium"
            )
        oracle_params = np.array(
            [oracle_es_uniform(s.premium.theta, s.risk.alpha, x) for x in grid]
        )
        lines.extend(_gap_rows(str(last), grid, policy.stage_params(last), oracle_params))
    elif kind == "var-layer":
        shared_sol = None
        for n in range(config.horizon):
            s = config.stage(n)
            if s.risk.kind != "value-at-risk" or s.premium.kind != "expected":
                raise ValidationError(
                    "oracle var-layer needs value-at-risk risk and expected premium"
                )
            if shared_sol is None or len(config.stages) > 1:
                shared_sol = oracle_var_layer(
                    s.dY, distortion_preset("identity"), s.premium.theta, s.risk.alpha
                )
                if abs(float(config.search.layer_upper) - shared_sol.var_level) > 1e-9:
                    raise ValidationError(
                        "oracle var-layer needs search.layer_upper equal to the"
                        " claim VaR at the risk level"
                    )
            oracle_params = np.array([shared_sol.a_of_x(x) for x in grid])
            lines.extend(_gap_rows(str(n), grid, policy.stage_params(n), oracle_params))
    else:
        raise ValidationError(f"field oracle: unknown oracle {kind!r}")
    _write_text(os.path.join(out_dir, "oracle_gap.csv"), "\n".join(lines) + "\n")
    return ["values.csv", "policy.csv", "oracle_gap.csv"], stats, {}


def _run_simulate(doc, config, out_dir, seed, policy_path):
    block = doc.get("simulate")
    if not isinstance(block, dict):
        raise ValidationError(
            'field simulate: required for the simulate subcommand, e.g.'
            ' {"x0": 1.0, "paths": 100000}'
        )
    x0 = float(_need(block, "x0", "simulate"))
    n_paths = int(_need(block, "paths", "simulate"))
    stats: list = []
    outputs = ["sim.json"]
    if policy_path is None:
        values, table = solve_finite(config, stats=stats)
        _write_text(
            os.path.join(out_dir, "values.csv"),
            _values_csv((str(k), vf) for k, vf in enumerate(values)),
        )
        _write_text(
            os.path.join(out_dir, "policy.csv"),
            _policy_csv(table, [str(n) for n in range(config.horizon)]),
        )
        outputs = ["values.csv", "policy.csv", "sim.json"]
    else:
        table = read_policy_csv(policy_path)
        values = None
    result = simulate_paths(table, config, x0, n_paths, seed, values=values)
    payload = {"x0": x0, "seed": seed, **result.to_json_dict()}
    _write_text(os.path.join(out_dir, "sim.json"), json.dumps(payload, indent=2) + "\n")
    return outputs, stats, {}


def _resolve_threads(threads):
    if threads is None:
        env = os.environ.get("REINSURE_DP_THREADS", "")
        threads = int(env) if env.strip() else 1
    threads = int(threads)
    if threads < 1:
        raise ValidationError("threads must be >= 1")
    return threads


def run(subcommand, config_path, out_dir, *, seed=0, threads=None, tol=None,
        policy=None) -> int:
    """Execute one subcommand; returns the process exit status.

    0 on success, 1 on validation/config errors, 2 on numeric failures.
    The manifest is written only after every other artifact is on disk.
    """
    try:
        t0 = time.perf_counter()
        if subcommand not in _SUBCOMMANDS:
            raise ValidationError(
                f"unknown subcommand {subcommand!r}; expected one of"
                f" {', '.join(_SUBCOMMANDS)}"
            )
        seed = int(seed)
        if seed < 0:
            raise ValidationError("seed must be nonnegative")
        threads = _resolve_threads(threads)
        doc = _load_json(config_path)
        config = _config_from_doc(doc)
        if tol is not None:
            config = replace(config, tol=float(tol))
        os.makedirs(out_dir, exist_ok=True)
        if subcommand == "solve-finite":
            outputs, stats, certs = _run_solve_finite(doc, config, out_dir)
        elif subcommand == "solve-infinite":
            outputs, stats, certs = _run_solve_infinite(doc, config, out_dir)
        elif subcommand == "evaluate-policy":
            outputs, stats, certs = _run_evaluate_policy(doc, config, out_dir, policy)
        elif subcommand == "oracle-compare":
            outputs, stats, certs = _run_oracle_compare(doc, config, out_dir)
        else:
            outputs, stats, certs = _run_simulate(doc, config, out_dir, seed, policy)
        manifest = {
            "artifact_version": __version__,
            "subcommand": subcommand,
            "seed": seed,
            "threads": threads,
            "tol": config.tol,
            "config": config_to_doc(config),
            "documentation": {k: doc[k] for k in _DOC_KEYS if k in doc},
            "stats": {
                "runtime_seconds": time.perf_counter() - t0,
                "per_stage": stats,
            },
            "certificates": certs,
            "outputs": outputs,
        }
        _atomic_json(os.path.join(out_dir, "manifest.json"), manifest)
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reinsure-dp",
        description="Dynamic reinsurance solver: solve, evaluate, compare, simulate.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "solve-finite": "backward induction over a finite horizon",
        "solve-infinite": "stationary fixed point with an error certificate",
        "evaluate-policy": "cost-to-go of a stored policy.csv",
        "oracle-compare": "solve, then gap against the named closed form",
        "simulate": "Monte Carlo ruin statistics under a policy",
    }
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help="recorded in the manifest; REINSURE_DP_THREADS fallback")
        p.add_argument("--tol", type=float, default=None,
                       help="override the config tolerance")
        if name in ("evaluate-policy", "simulate"):
            p.add_argument("--policy", default=None, help="policy.csv to load")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    return run(
        args.subcommand,
        args.config,
        args.out,
        seed=args.seed,
        threads=args.threads,
        tol=args.tol,
        policy=getattr(args, "policy", None),
    )
