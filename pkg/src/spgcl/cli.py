"""Command-line entry point.

Every command writes one JSON report envelope ``{tool, version, command,
config, timing, results}``. Only ``timing`` varies between reruns with the
same config and seed. Relative paths resolve against ``--out-dir``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from spgcl import fileio
from spgcl.augment import KINDS, AugmentSpec, apply
from spgcl.contrastive import TrainConfig, train
from spgcl.encoder import EncoderParams
from spgcl.errors import ConfigError, ShapeError, SpgclError
from spgcl.experiments import ABLATABLE, ablate, representation, spectral_study
from spgcl.graph import check_labels, edge_homophily, node_homophily
from spgcl.probe import linear_probe
from spgcl.spectral import DEFAULT_BANDS
from spgcl.synth import CsbmParams, csbm_by_degree, generate_csbm, two_class_means
from spgcl.verify import SUITES, run_suite

CHECKPOINT = "checkpoint.bin"
METRICS = "metrics.jsonl"


def tool_version() -> str:
    try:
        return version("spgcl")
    except PackageNotFoundError:
        return "0+unknown"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seed(args) -> int:
    env = os.environ.get("SPGCL_SEED")
    if env is None:
        return args.seed
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"SPGCL_SEED must be an integer, got {env!r}") from None


def _path(args, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else Path(args.out_dir) / p


def _load_inputs(args, need_labels=True):
    x = fileio.read_features(_path(args, args.features))
    g = fileio.read_graph(_path(args, args.graph))
    if g.num_nodes > len(x):
        raise ShapeError(f"features have {len(x)} rows but the graph has {g.num_nodes} nodes")
    if g.num_nodes < len(x):  # trailing isolated nodes absent from the edge list
        g = fileio.read_graph(_path(args, args.graph), num_nodes=len(x))
    y = None
    if need_labels or args.labels:
        y = check_labels(fileio.read_labels(_path(args, args.labels)), g.num_nodes)
    return g, x, y


# ---------------------------------------------------------------- commands

def cmd_synth(args):
    seed = _seed(args)
    if args.mean_degree is not None:
        params = csbm_by_degree(args.n, args.mean_degree, args.homophily, args.separation, args.features, seed)
    else:
        if args.p is None or args.s is None:
            raise ConfigError("give either --mean-degree or both --p and --s")
        params = CsbmParams(args.n, args.p, args.s, two_class_means(args.separation, args.features), seed)
    g, x, y = generate_csbm(params)
    fileio.write_graph(_path(args, "graph.tsv"), g)
    fileio.write_features(_path(args, "features.csv"), x)
    fileio.write_labels(_path(args, "labels.txt"), y)
    config = {"n": args.n, "p": params.p, "s": params.s, "separation": args.separation,
              "features": args.features, "seed": seed}
    results = {"num_nodes": g.num_nodes, "num_edges": g.num_edges,
               "mean_degree": float(g.degrees().mean()),
               "edge_homophily": edge_homophily(g, y) if g.num_edges else None,
               "node_homophily": node_homophily(g, y),
               "files": ["graph.tsv", "features.csv", "labels.txt"]}
    return config, results


def cmd_augment(args):
    seed = _seed(args)
    spec = AugmentSpec(args.kind, args.ratio, args.alpha, seed)
    g = fileio.read_graph(_path(args, args.graph))
    x = fileio.read_features(_path(args, args.features)) if args.features else None
    out = apply(spec, g, x)
    results = {"kind": args.kind, "out": args.out}
    if args.kind in ("edge_drop", "edge_add"):
        fileio.write_graph(_path(args, args.out), out)
        results.update(num_edges_before=g.num_edges, num_edges_after=out.num_edges)
    else:
        fileio.write_features(_path(args, args.out), out)
        results["shape"] = list(out.shape)
    config = {"kind": args.kind, "ratio": args.ratio, "alpha": args.alpha, "seed": seed,
              "graph": args.graph, "features": args.features}
    return config, results


def _train_config(args) -> TrainConfig:
    """Config file values, with the seed taken from SPGCL_SEED, else the file, else --seed."""
    d = fileio.read_json(_path(args, args.config)) if args.config else {}
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    cfg = TrainConfig.from_dict(d)
    if os.environ.get("SPGCL_SEED") is not None or "seed" not in d:
        cfg.seed = _seed(args)
    return cfg


def cmd_train(args):
    cfg = _train_config(args)
    g, x, y = _load_inputs(args, need_labels=False)
    params, metrics = train(g, x, cfg, labels=y)
    meta = {"train_config": cfg.to_dict(), "bn_enabled": params.bn_enabled}
    fileio.save_tensors(_path(args, CHECKPOINT), params.tensors(), meta)
    _path(args, METRICS).write_text("".join(fileio.dumps_json_line(m) for m in metrics), encoding="utf-8")
    results = {"epochs": len(metrics), "final_loss": metrics[-1]["loss"] if metrics else None,
               "final_cover_ratio": metrics[-1]["cover_ratio"] if metrics else None,
               "checkpoint": CHECKPOINT, "metrics": METRICS}
    return cfg.to_dict(), results


def cmd_eval(args):
    seed = _seed(args)
    tensors, meta = fileio.load_tensors(_path(args, args.checkpoint))
    params = EncoderParams.from_tensors(tensors, bool(meta.get("bn_enabled", False)))
    g, x, y = _load_inputs(args)
    res = linear_probe(representation(params, g, x, args.representation), y,
                       repeats=args.repeats, seed=seed, epochs=args.epochs)
    config = {"checkpoint": args.checkpoint, "repeats": args.repeats, "seed": seed,
              "representation": args.representation, "epochs": args.epochs}
    return config, res.to_dict()


def cmd_spectral(args):
    g = fileio.read_graph(_path(args, args.graph))
    x = fileio.read_features(_path(args, args.features)) if args.features else None
    seed = _seed(args)
    results = spectral_study(g, args.aug_kind, args.ratio, args.alpha, args.bands, args.seeds, x,
                             base_seed=seed)
    config = {"graph": args.graph, "aug_kind": args.aug_kind, "ratio": args.ratio,
              "alpha": args.alpha, "bands": args.bands, "seeds": args.seeds, "seed": seed}
    return config, results


def cmd_verify(args):
    seed = _seed(args)
    return {"suite": args.suite, "seed": seed}, run_suite(args.suite, seed)


def cmd_ablate(args):
    cfg = _train_config(args)
    g, x, y = _load_inputs(args)
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated integers, got {args.values!r}") from None
    results = ablate(g, x, y, cfg, args.param, values, args.repeats, args.representation, args.epochs)
    config = {"train_config": cfg.to_dict(), "param": args.param, "values": values,
              "repeats": args.repeats, "representation": args.representation, "epochs": args.epochs}
    return config, results


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spgcl", description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default=".", help="base directory for relative paths and outputs")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=tool_version())
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, report):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=report, help="report path (relative to --out-dir)")

    s = sub.add_parser("synth", help="sample a two-class CSBM graph")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--p", type=float)
    s.add_argument("--s", type=float)
    s.add_argument("--mean-degree", type=float)
    s.add_argument("--homophily", type=float, default=0.8)
    s.add_argument("--separation", type=float, default=2.0)
    s.add_argument("--features", type=int, default=32)
    common(s, "synth_report.json")

    s = sub.add_parser("augment", help="apply one augmentation")
    s.add_argument("--kind", choices=KINDS, required=True)
    s.add_argument("--ratio", type=float, default=0.2)
    s.add_argument("--alpha", type=float, default=0.15)
    s.add_argument("--graph", required=True)
    s.add_argument("--features")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="augmented graph or matrix")
    s.add_argument("--report", default="augment_report.json")

    for name, hlp in (("train", "train the encoder"), ("ablate", "sweep K_pos or T")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--graph", required=True)
        s.add_argument("--features", required=True)
        s.add_argument("--labels", required=(name == "ablate"))
        s.add_argument("--config", help="TrainConfig JSON")
        common(s, f"{name}_report.json")
        if name == "ablate":
            s.add_argument("--param", choices=sorted(ABLATABLE), required=True)
            s.add_argument("--values", required=True, help="comma-separated integers")
            s.add_argument("--repeats", type=int, default=3)
            s.add_argument("--representation", choices=("h", "z"), default="h")
            s.add_argument("--epochs", type=int, default=1000, help="probe epochs")

    s = sub.add_parser("eval", help="linear probe on a trained checkpoint")
    s.add_argument("--checkpoint", default=CHECKPOINT)
    s.add_argument("--graph", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--labels", required=True)
    s.add_argument("--repeats", type=int, default=10)
    s.add_argument("--representation", choices=("h", "z"), default="h")
    s.add_argument("--epochs", type=int, default=1000, help="probe epochs")
    common(s, "result.json")

    s = sub.add_parser("spectral", help="per-band augmentation distances")
    s.add_argument("--graph", required=True)
    s.add_argument("--features")
    s.add_argument("--aug-kind", choices=KINDS, required=True)
    s.add_argument("--ratio", type=float, default=0.2)
    s.add_argument("--alpha", type=float, default=0.15)
    s.add_argument("--bands", type=int, default=DEFAULT_BANDS)
    s.add_argument("--seeds", type=int, default=10)
    common(s, "spectral_report.json")

    s = sub.add_parser("verify", help="numeric checks of the theory")
    s.add_argument("--suite", choices=SUITES + ("all",), default="all")
    common(s, "verify_report.json")
    return p


COMMANDS = {"synth": cmd_synth, "augment": cmd_augment, "train": cmd_train, "eval": cmd_eval,
            "spectral": cmd_spectral, "verify": cmd_verify, "ablate": cmd_ablate}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"E_USAGE: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        config, results = COMMANDS[args.command](args)
        envelope = {"tool": "spgcl", "version": tool_version(), "command": args.command,
                    "config": config, "timing": {"seconds": time.perf_counter() - start},
                    "results": results}
        report = args.report if args.command == "augment" else args.out
        fileio.write_json(_path(args, report), envelope)
    except FileNotFoundError as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 2
    except SpgclError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
