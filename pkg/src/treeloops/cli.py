"""Command-line front end for reproducible batch runs.

Every command writes UTF-8 CSV (or a JSON record) plus a sidecar
``<out>.meta.json`` with the fully resolved configuration, seed, version
and wall time.  Outputs are written atomically, so failed runs leave no
partial files.  Identical configurations and seeds give byte-identical
CSVs regardless of ``--threads``.

Exit codes: 0 success, 2 validation error, 3 diagnostic refusal
(no transition found, non-monotone scan, degenerate sample).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .errors import DiagnosticError, InvalidParameterError, TreeloopsError
from .estimators import (
    RegularTree,
    domination_report,
    survival_curve,
    threshold_bisection,
)
from .gwt import (
    GeneratingFunction,
    expected_Y,
    h_of_beta,
    link_threshold,
    poisson_sufficient,
    theoremB_condition,
)
from .multilink import unilink_branching_criterion
from .percolation import PruningParams, pruning_probability, verify_pruning_probability_mc
from .potential import conductance_profile, exponential_gauge, theorem53_probe
from .trees import OffspringLaw, generate_galton_watson, generate_regular, parse_tree, serialize_tree

COMMANDS = (
    "gen-tree",
    "survival",
    "threshold",
    "dominate",
    "prune-prob",
    "gwt-check",
    "conductance",
    "probe-53",
    "unilink",
)


@dataclass
class RunConfig:
    command: str
    tree: str = ""
    law: str = ""
    model: str = "loop"
    grid: str = ""
    beta: float = 0.0
    u: float = 1.0
    depth: int = 8
    replicas: int = 10000
    seed: int = 0
    threads: int = 0  # 0 = machine parallelism
    out: str = ""
    target: float = 0.05
    tol: float = 0.01
    bracket: str = "1e-6,20"
    quenched: bool = False
    nodes: int = 256
    mc_replicas: int = 10000
    d_values: str = "2,3,4,5,6,7,8"
    dstar_values: str = "1,2,3,4,5,6,7,8"
    lam_values: str = "0.3,0.7,1,2"
    u_values: str = "0,0.5,1"
    eps: str = "1e-2,1e-3,1e-4"
    q_values: str = "0.2,0.3,0.4,0.5,0.6,0.7"
    depths: str = ""
    components: int = 100
    lam: float = 1.0


def _parse_call(text: str, what: str) -> tuple[str, list[float]]:
    text = text.strip()
    if "(" not in text or not text.endswith(")"):
        raise InvalidParameterError(f"{what} must look like name(arg,...), got {text!r}")
    name, rest = text.split("(", 1)
    args = [float(x) for x in rest[:-1].split(",")] if rest[:-1].strip() else []
    return name.strip().lower(), args


def parse_law(text: str) -> OffspringLaw:
    name, args = _parse_call(text, "law")
    try:
        if name == "poisson":
            return OffspringLaw.poisson(*args)
        if name == "deterministic":
            return OffspringLaw.deterministic(int(args[0]))
        if name == "binomial":
            return OffspringLaw.binomial(int(args[0]), args[1])
        if name == "geometric":
            return OffspringLaw.geometric(*args)
        if name == "powerlaw":
            cutoff = int(args[1]) if len(args) > 1 else 1_000_000
            return OffspringLaw.power_law(args[0], cutoff)
    except (IndexError, TypeError) as exc:
        raise InvalidParameterError(f"bad arguments for law {text!r}: {exc}") from exc
    raise InvalidParameterError(f"unknown law kind {name!r}")


def parse_tree_spec(text: str, depth: int):
    """Tree input: ``regular(d)``, an offspring-law call (annealed
    Galton-Watson), or ``file:PATH`` for a serialized tree."""
    if text.startswith("file:"):
        with open(text[5:], "r", encoding="utf-8") as fh:
            return parse_tree(fh.read())
    name, args = _parse_call(text, "tree")
    if name == "regular":
        return RegularTree(int(args[0]))
    return parse_law(text)


def _parse_grid(text: str) -> list[float]:
    text = text.strip()
    if not text:
        raise InvalidParameterError("grid must be given as lo:hi:n or a comma list")
    if ":" in text:
        lo, hi, n = text.split(":")
        return list(np.linspace(float(lo), float(hi), int(n)))
    return [float(x) for x in text.split(",")]


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_outputs(config: RunConfig, text: str, started: float) -> None:
    if not config.out:
        sys.stdout.write(text)
        return
    _write_atomic(config.out, text)
    meta = {
        "command": config.command,
        "config": asdict(config),
        "version": __version__,
        "wall_time_s": round(time.time() - started, 3),
    }
    _write_atomic(config.out + ".meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    started = time.time()
    if config.command not in COMMANDS:
        raise InvalidParameterError(f"unknown command {config.command!r}")
    if config.replicas < 1:
        raise InvalidParameterError("replicas must be >= 1")
    if not 0.0 <= config.u <= 1.0:
        raise InvalidParameterError("u must be in [0,1]")
    if config.threads < 0:
        raise InvalidParameterError("threads must be >= 0 (0 = machine parallelism)")
    if config.threads == 0:
        config.threads = os.cpu_count() or 1
    out_text = _dispatch(config)
    _write_outputs(config, out_text, started)
    return 0


def _dispatch(config: RunConfig) -> str:
    cmd = config.command
    if cmd == "gen-tree":
        spec = parse_tree_spec(config.tree, config.depth)
        if isinstance(spec, RegularTree):
            tree = generate_regular(spec.d, config.depth)
        elif isinstance(spec, OffspringLaw):
            tree = generate_galton_watson(spec, config.depth, config.seed)
        else:
            tree = spec
        return serialize_tree(tree)

    if cmd == "survival":
        curve = survival_curve(
            config.model,
            parse_tree_spec(config.tree, config.depth),
            _parse_grid(config.grid),
            config.u,
            config.depth,
            config.replicas,
            config.seed,
            threads=config.threads,
            quenched_seed=(config.seed ^ 0x5EED if config.quenched else None),
        )
        return curve.to_csv()

    if cmd == "threshold":
        lo, hi = _parse_floats(config.bracket)
        est = threshold_bisection(
            config.model,
            parse_tree_spec(config.tree, config.depth),
            config.u,
            config.depth,
            config.replicas,
            target=config.target,
            tol=config.tol,
            seed=config.seed,
            bracket=(lo, hi),
            threads=config.threads,
            quenched_seed=(config.seed ^ 0x5EED if config.quenched else None),
        )
        return json.dumps(est.to_record(), sort_keys=True) + "\n"

    if cmd == "dominate":
        rep = domination_report(
            parse_tree_spec(config.tree, config.depth),
            _parse_grid(config.grid),
            config.u,
            config.depth,
            config.replicas,
            config.seed,
            threads=config.threads,
        )
        return rep.to_csv()

    if cmd == "prune-prob":
        lines = ["d,d_star,lambda,u,r_quadrature,r_mc,mc_stderr"]
        for d in _parse_ints(config.d_values):
            for ds in _parse_ints(config.dstar_values):
                for lam in _parse_floats(config.lam_values):
                    for uu in _parse_floats(config.u_values):
                        params = PruningParams(lam, uu, config.nodes)
                        r = pruning_probability(d, ds, params)
                        if d >= 2 and ds >= 1 and config.mc_replicas >= 1000:
                            mc, se = verify_pruning_probability_mc(
                                d, ds, params, config.mc_replicas, config.seed
                            )
                        else:
                            mc, se = float("nan"), float("nan")
                        lines.append(
                            f"{d},{ds},{_fmt(lam)},{_fmt(uu)},{_fmt(r)},{_fmt(mc)},{_fmt(se)}"
                        )
        return "\n".join(lines) + "\n"

    if cmd == "gwt-check":
        law = parse_law(config.law)
        f = GeneratingFunction(law)
        eps = _parse_floats(config.eps)
        verdicts = theoremB_condition(f, eps)
        lines = ["law,beta,h,expected_Y,thmB_eps,thmB_holds"]
        info = [f"# link_threshold={_fmt(link_threshold(law.mean()))}"]
        for beta in _parse_grid(config.grid):
            h = h_of_beta(beta)
            ey = expected_Y(beta, f)
            if law.kind == "poisson":
                info.append(
                    f"# poisson_sufficient(beta={_fmt(beta)})={int(poisson_sufficient(beta, law.a))}"
                )
            for e, v in zip(eps, verdicts):
                lines.append(
                    f"{law.describe()},{_fmt(beta)},{_fmt(h)},{_fmt(ey)},{_fmt(e)},{int(v)}"
                )
        return "\n".join(lines + info) + "\n"

    if cmd == "conductance":
        spec = parse_tree_spec(config.tree, config.depth)
        if isinstance(spec, RegularTree):
            tree = generate_regular(spec.d, config.depth)
        elif isinstance(spec, OffspringLaw):
            tree = generate_galton_watson(spec, config.depth, config.seed)
        else:
            tree = spec
        depths = _parse_ints(config.depths) if config.depths else list(range(2, config.depth + 1))
        lines = ["q,D,conductance"]
        for q in _parse_floats(config.q_values):
            rep = conductance_profile(tree, exponential_gauge(tree, q), depths, desc=f"q^-depth(q={q:g})")
            for dd, c in zip(rep.depths, rep.conductances):
                lines.append(f"{_fmt(q)},{dd},{_fmt(c)}")
        return "\n".join(lines) + "\n"

    if cmd == "probe-53":
        spec = parse_tree_spec(config.tree, config.depth)
        if isinstance(spec, RegularTree):
            tree = generate_regular(spec.d, config.depth)
        elif isinstance(spec, OffspringLaw):
            tree = generate_galton_watson(spec, config.depth, config.seed)
        else:
            tree = spec
        probe = theorem53_probe(
            tree, config.lam, config.u, config.depth, config.components, config.seed
        )
        lines = [
            "lambda,u,D,br_before,br_after_mean,stderr",
            f"{_fmt(probe.lam)},{_fmt(probe.u)},{probe.depth},{_fmt(probe.br_before)},"
            f"{_fmt(probe.br_after_mean)},{_fmt(probe.stderr)}",
        ]
        return "\n".join(lines) + "\n"

    if cmd == "unilink":
        law = parse_law(config.law)
        rep = unilink_branching_criterion(
            law, config.beta, config.u, config.depth, config.replicas, config.seed
        )
        lines = [
            "law,beta,u,D,N,mean_C1,stderr,truncation_hits",
            f"{rep.law},{_fmt(rep.beta)},{_fmt(rep.u)},{rep.depth},{rep.replicas},"
            f"{_fmt(rep.mean_C1)},{_fmt(rep.stderr)},{rep.truncation_hits}",
        ]
        return "\n".join(lines) + "\n"

    raise InvalidParameterError(f"unknown command {cmd!r}")  # pragma: no cover


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treeloops",
        description="Random loop model on rooted trees: simulation and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    defaults = RunConfig(command="x")
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", default="", help="JSON config file; flags override its keys")
        for f in fields(RunConfig):
            if f.name == "command":
                continue
            flag = "--" + f.name.replace("_", "-")
            if f.type == "bool" or isinstance(getattr(defaults, f.name), bool):
                p.add_argument(flag, action="store_true", default=None)
            else:
                p.add_argument(flag, type=type(getattr(defaults, f.name)), default=None)
    return parser


def build_config(argv) -> RunConfig:
    args = _build_parser().parse_args(argv)
    values = {"command": args.command}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidParameterError(f"cannot read config file {args.config!r}: {exc}") from exc
        valid = {f.name for f in fields(RunConfig)} - {"command"}
        for key, val in loaded.items():
            if key not in valid:
                raise InvalidParameterError(f"unknown config key {key!r} (valid: {sorted(valid)})")
            values[key] = val
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = build_config(argv)
        return run(config)
    except (InvalidParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DiagnosticError as exc:
        print(f"diagnostic: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TreeloopsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
