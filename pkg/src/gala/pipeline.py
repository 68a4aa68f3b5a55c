"""End-to-end runs shared by the command line and the acceptance tests."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .clustering_eval import (
    auc_ap,
    evaluate_node_clustering,
    repeated_clustering,
    sample_non_edges,
    split_edges,
)
from .config import RunConfig
from .data_io import Dataset, SbmSpec, load_dataset, sbm_generate
from .graph_ops import Graph, knn_graph
from .model import LayerSpec, ModelConfig, ModelParams
from .objectives import LinkConfig, SubspaceConfig, edge_scores
from .seeding import substream, subseed
from .trainer import TrainConfig, TrainReport, finetune, latent, pretrain, train_linkpred

log = logging.getLogger(__name__)


def load_run_dataset(cfg: RunConfig, seed: int | None = None) -> Dataset:
    d = cfg.data
    if d.synth is not None:
        s = d.synth
        spec = SbmSpec(tuple(s.block_sizes), s.p_in, s.p_out, s.noise, cfg.seed if seed is None else seed)
        return sbm_generate(spec)
    return load_dataset(d.features, d.edges, d.labels)


def encoder_graph(ds: Dataset, cfg: RunConfig) -> Graph:
    """The dataset's own graph, or a k-NN graph on raw features when it has none."""
    if ds.affinity is not None:
        return ds.affinity
    return knn_graph(ds.features, min(cfg.train.k_nn_graph, ds.n - 1))


def model_config(cfg: RunConfig, **changes) -> ModelConfig:
    m = cfg.model
    base = dict(
        hidden_dims=tuple(m.hidden_dims),
        decoder=m.decoder,
        hidden_activation=m.hidden_activation,
        latent_activation=m.latent_activation,
        final_activation=m.final_activation,
    )
    base.update(changes)
    return ModelConfig(**base)


def train_config(cfg: RunConfig, seed: int) -> TrainConfig:
    t = cfg.train
    return TrainConfig(t.learning_rate, t.max_epochs, t.convergence_window, t.convergence_rel_tol, "recon", seed)


def finetune_config(cfg: RunConfig, seed: int) -> TrainConfig:
    return TrainConfig(cfg.finetune.learning_rate, cfg.finetune.epochs, convergence_rel_tol=None,
                       mode="recon+subspace", seed=seed)


def subspace_config(cfg: RunConfig) -> SubspaceConfig:
    return SubspaceConfig(cfg.subspace.lam, cfg.subspace.mu)


@dataclass
class TrainedModel:
    specs: list[LayerSpec]
    params: ModelParams
    graph: Graph
    reports: dict[str, TrainReport]

    def latent(self, features) -> np.ndarray:
        return latent(features, self.graph, self.specs, self.params)


def train_model(ds: Dataset, cfg: RunConfig, seed: int | None = None, mode: str | None = None, **model_changes) -> TrainedModel:
    """Pre-train on reconstruction; fine-tune with the subspace cost when ``mode`` asks for it."""
    seed = cfg.seed if seed is None else seed
    mode = mode or cfg.train.mode
    g = encoder_graph(ds, cfg)
    pre = pretrain(ds.features, g, model_config(cfg, **model_changes), train_config(cfg, seed))
    reports = {"pretrain": pre}
    params = pre.params
    if mode == "recon+subspace":
        fine = finetune(params, pre.specs, ds.features, g, subspace_config(cfg), finetune_config(cfg, seed))
        reports["finetune"] = fine
        params = fine.params
    return TrainedModel(pre.specs, params, g, reports)


def clustering_report(h, labels, cfg: RunConfig, seed: int, runs: int | None = None):
    e = cfg.eval
    if runs is None:
        return evaluate_node_clustering(h, labels, e.k_nn, e.k_clusters, seed, e.affinity, subspace_config(cfg))
    return repeated_clustering(h, labels, runs, seed, e.k_nn, e.k_clusters, e.affinity, subspace_config(cfg))


def run_linkpred(ds: Dataset, cfg: RunConfig) -> dict:
    """Split once, train ``link.runs`` differently initialized models, score held-out pairs."""
    if ds.affinity is None:
        raise ValueError("link prediction needs a dataset with a graph (data.edges or data.synth)")
    lk = cfg.link
    split = split_edges(ds.affinity, lk.val_frac, lk.test_frac, seed=cfg.seed)
    positives = split.train_graph.edges()
    mc = model_config(cfg, latent_activation=lk.latent_activation)
    runs = []
    for r in range(lk.runs):
        negatives = sample_non_edges(split.train_graph, len(positives), substream(cfg.seed, "negatives", r))
        link = LinkConfig(lk.gamma, positives, negatives)
        tc = train_config(cfg, subseed(cfg.seed, "linkpred-init", r))
        report = train_linkpred(ds.features, split.train_graph, link, mc, tc)
        h = latent(ds.features, split.train_graph, report.specs, report.params)
        auc, ap = auc_ap(edge_scores(h, split.test_pos), edge_scores(h, split.test_neg))
        val_auc, val_ap = auc_ap(edge_scores(h, split.val_pos), edge_scores(h, split.val_neg))
        runs.append({"auc": auc, "ap": ap, "val_auc": val_auc, "val_ap": val_ap, "epochs": report.epochs})
        log.info("linkpred run %d: AUC %.4f AP %.4f", r, auc, ap)
    auc = np.array([r["auc"] for r in runs])
    ap = np.array([r["ap"] for r in runs])
    # standard error of the mean; zero for a single run
    se = lambda v: float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
    return {
        "auc_mean": float(auc.mean()),
        "auc_stderr": se(auc),
        "ap_mean": float(ap.mean()),
        "ap_stderr": se(ap),
        "runs": runs,
        "split": {
            "train_edges": split.train_graph.num_edges,
            "val_pairs": int(len(split.val_pos)),
            "test_pairs": int(len(split.test_pos)),
        },
    }


def run_ablation(cfg: RunConfig) -> list[dict]:
    """Decoder x loss-mode grid; one row per cell with per-seed and mean ACC/NMI/ARI.

    With a synthetic dataset every seed draws a fresh SBM instance; with file
    data the seeds vary initialization and clustering only.
    """
    a = cfg.ablate
    cells = {(dec, mode): {"acc": [], "nmi": [], "ari": []} for dec in a.decoders for mode in a.modes}
    for seed in a.seeds:
        ds = load_run_dataset(cfg, seed=seed)
        if ds.labels is None:
            raise ValueError("ablation needs labels (data.labels or data.synth)")
        for dec in a.decoders:
            need_fine = "recon+subspace" in a.modes
            tm = train_model(ds, cfg, seed=seed, mode="recon+subspace" if need_fine else "recon", decoder=dec)
            for mode in a.modes:
                params = tm.reports["pretrain"].params if mode == "recon" else tm.params
                h = latent(ds.features, tm.graph, tm.specs, params)
                m = clustering_report(h, ds.labels, cfg, seed).metrics
                for key in ("acc", "nmi", "ari"):
                    cells[(dec, mode)][key].append(m[key])
                log.info("ablate seed %d %s/%s: %s", seed, dec, mode, m)
    rows = []
    for (dec, mode), vals in cells.items():
        row = {"decoder": dec, "mode": mode}
        row.update({k: float(np.mean(v)) for k, v in vals.items()})
        row["per_seed"] = vals
        row["seeds"] = list(a.seeds)
        rows.append(row)
    return rows


def format_table(rows: list[dict]) -> str:
    header = f"{'decoder':<18} {'mode':<15} {'ACC':>7} {'NMI':>7} {'ARI':>7}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r['decoder']:<18} {r['mode']:<15} {r['acc']:7.4f} {r['nmi']:7.4f} {r['ari']:7.4f}")
    return "\n".join(lines) + "\n"
