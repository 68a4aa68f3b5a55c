"""Command-line entry point: ``gala <verb> [--config PATH] [--seed N] [--out DIR] [--a.b VALUE ...]``.

Verbs: train, evaluate, linkpred, ablate, synth, radius. Any extra
``--section.key value`` pair overrides the JSON config (values parse as JSON
literals, falling back to strings). Exit codes: 0 ok, 1 other failure,
2 bad config, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import pipeline
from .config import ConfigError, RunConfig, load_config, parse_override_value, validate
from .data_io import load_edge_list, save_dataset, save_embeddings
from .graph_ops import GraphError, build_operator, spectral_radius
from .model import load_checkpoint, save_checkpoint
from .trainer import NumericalError, latent

log = logging.getLogger("gala")

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
VERBS = ("train", "evaluate", "linkpred", "ablate", "synth", "radius")


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _report_config(cfg: RunConfig) -> dict:
    # the output location is not part of the experiment
    d = cfg.to_dict()
    d.pop("out")
    return d


def _timed(label: str, t0: float) -> None:
    # wall time stays out of the JSON reports so reruns are byte-identical
    print(f"{label}: {time.perf_counter() - t0:.2f} s", file=sys.stderr)


def cmd_train(cfg: RunConfig, out: Path) -> int:
    t0 = time.perf_counter()
    ds = pipeline.load_run_dataset(cfg)
    tm = pipeline.train_model(ds, cfg)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoint.json", tm.specs, tm.params)
    h = tm.latent(ds.features)
    save_embeddings(h, out / "embeddings.tsv")
    report = {stage: r.to_dict() for stage, r in tm.reports.items()}
    report["config"] = _report_config(cfg)
    _dump(out / "train_report.json", report)
    if ds.labels is not None:
        _dump(out / "metrics.json", pipeline.clustering_report(h, ds.labels, cfg, cfg.seed).to_dict())
    _timed("train", t0)
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, out: Path, checkpoint: str | None) -> int:
    t0 = time.perf_counter()
    ckpt = Path(checkpoint) if checkpoint else out / "checkpoint.json"
    if not ckpt.is_file():
        raise ConfigError(f"checkpoint not found: {ckpt} (run 'gala train' first or pass --checkpoint)")
    ds = pipeline.load_run_dataset(cfg)
    if ds.labels is None:
        raise ConfigError("evaluate scores clusters against ground truth, so it needs data.labels (or data.synth)")
    specs, params = load_checkpoint(ckpt)
    h = latent(ds.features, pipeline.encoder_graph(ds, cfg), specs, params)
    report = pipeline.clustering_report(h, ds.labels, cfg, cfg.seed, runs=cfg.eval.runs)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "metrics.json", report.to_dict())
    m = report.metrics
    print(f"ACC {m['acc_mean']:.4f} ± {m['acc_std']:.4f}  NMI {m['nmi_mean']:.4f} ± {m['nmi_std']:.4f}  "
          f"ARI {m['ari_mean']:.4f} ± {m['ari_std']:.4f}")
    _timed("evaluate", t0)
    return EXIT_OK


def cmd_linkpred(cfg: RunConfig, out: Path) -> int:
    t0 = time.perf_counter()
    ds = pipeline.load_run_dataset(cfg)
    if ds.affinity is None:
        raise ConfigError("linkpred needs a graph: set data.edges or data.synth")
    result = pipeline.run_linkpred(ds, cfg)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "metrics.json", {"metrics": result, "config": _report_config(cfg), "seed": cfg.seed})
    print(f"AUC {result['auc_mean']:.4f} ± {result['auc_stderr']:.4f}  AP {result['ap_mean']:.4f} ± {result['ap_stderr']:.4f}")
    _timed("linkpred", t0)
    return EXIT_OK


def cmd_ablate(cfg: RunConfig, out: Path) -> int:
    t0 = time.perf_counter()
    rows = pipeline.run_ablation(cfg)
    table = pipeline.format_table(rows)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "ablation_table.json", {"rows": rows, "config": _report_config(cfg)})
    (out / "ablation_table.txt").write_text(table)
    print(table, end="")
    _timed("ablate", t0)
    return EXIT_OK


def cmd_synth(cfg: RunConfig, out: Path) -> int:
    if cfg.data.synth is None:
        raise ConfigError("synth needs a data.synth section (e.g. --data.synth '{}')")
    paths = save_dataset(pipeline.load_run_dataset(cfg), out)
    for kind, p in sorted(paths.items()):
        print(f"{kind}: {p}")
    return EXIT_OK


def cmd_radius(cfg: RunConfig, out: Path) -> int:
    d = cfg.data
    if d.synth is not None or d.features is not None:
        g = pipeline.encoder_graph(pipeline.load_run_dataset(cfg), cfg)
    elif d.edges is not None:
        g = load_edge_list(d.edges)
    else:
        raise ConfigError("radius needs a graph: set data.edges or data.synth")
    if g.num_edges == 0:
        raise GraphError("graph has no edges; the operators' spectral radii are not informative")
    radii = {}
    for kind in ("smoothing", "naive_sharpening", "stable_sharpening"):
        radii[kind] = spectral_radius(build_operator(g, kind))
        print(f"{kind:<18} {radii[kind]:.12g}")
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "radius.json", {"n": g.n, "edges": g.num_edges, "radius": radii})
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="gala", description="Symmetric graph convolutional autoencoder.")
    sub = p.add_subparsers(dest="verb", required=True)
    helps = {
        "train": "pre-train (and optionally fine-tune), write checkpoint/embeddings/reports",
        "evaluate": "cluster a trained model's latent over repeated k-means seeds",
        "linkpred": "edge split, link-loss training, AUC/AP over several initializations",
        "ablate": "decoder x loss-mode comparison table",
        "synth": "write a stochastic-block-model dataset to files",
        "radius": "spectral radius of the three propagation operators",
    }
    for verb in VERBS:
        sp = sub.add_parser(verb, parents=[common], help=helps[verb])
        if verb == "evaluate":
            sp.add_argument("--checkpoint", help="checkpoint file (default OUT/checkpoint.json)")
    return p


def parse_overrides(extra: list[str]) -> dict:
    """``['--a.b', '1', '--c', 'x']`` -> ``{'a.b': 1, 'c': 'x'}``; ``--k=v`` also works."""
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}; overrides look like --section.key value")
        key = tok[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"override {tok} is missing a value")
            raw = extra[i + 1]
            i += 2
        out[key] = parse_override_value(raw)
    return out


def _run(args, extra) -> int:
    overrides = parse_overrides(extra)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    cfg = load_config(args.config, overrides)
    validate(cfg, command=args.verb)
    out = Path(cfg.out)
    if args.verb == "evaluate":
        return cmd_evaluate(cfg, out, args.checkpoint)
    return globals()[f"cmd_{args.verb}"](cfg, out)


def main(argv: list[str] | None = None) -> int:
    args, extra = _parser().parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = int(os.environ.get("GALA_THREADS", "1"))
    try:
        with threadpool_limits(limits=threads):
            return _run(args, extra)
    except ConfigError as exc:
        print(f"gala: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"gala: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # noqa: BLE001 - top-level reporter
        print(f"gala: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
