"""Cross-validated training, evaluation and the two architecture ablations."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .data import DatasetSplit, ScenarioSpec, load_dataset, make_folds, synthesize
from .metrics import THRESHOLDS, F1Report, aggregate_folds, evaluate_timelines, timeline_from_labels
from .model import CatsModel, ModelConfig
from .optim import Adam
from .scene import SceneSequence
from .temporal import decode_timeline, frame_loss

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class OptimConfig:
    lr: float = 1e-3
    clip_norm: float = 5.0
    epochs: int = 200
    tau_start: float = 1.0
    tau_end: float = 0.5
    # stop a fold early once training frame accuracy reaches this value (0 disables)
    stop_train_acc: float = 0.0


@dataclass
class RunConfig:
    seed: int = 0
    dataset: str = ""           # path to a dataset file; empty means synthesize from `scenario`
    fold_policy: str = "leave_two_subjects_out"
    output_dir: str = ""        # empty: keep everything in memory
    max_folds: int = 0          # 0 means every fold
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)

    def load_data(self) -> List[SceneSequence]:
        if self.dataset:
            if not Path(self.dataset).exists():
                raise FileNotFoundError(f"dataset {self.dataset} does not exist")
            return load_dataset(self.dataset)
        return synthesize(self.scenario)

    def resolved_model(self, data: Sequence[SceneSequence]) -> ModelConfig:
        """Fill data-dependent sizes (visual width, joint count) from the dataset."""
        first = data[0]
        top = max(int(s.labels.max()) for s in data if s.labels.size)
        if top >= self.model.num_classes:
            raise ValueError(f"dataset has label {top} but model.num_classes is {self.model.num_classes}")
        return replace(self.model, vis_dim=first.visual_human.shape[-1], joints=first.J)


@dataclass
class FoldResult:
    name: str
    checksum: str
    loss_log: List[float]
    train_acc: float            # checkpointed (best held-out F1@10) model
    final_train_acc: float      # model after the last epoch, before restoring the checkpoint
    best_epoch: int
    report: F1Report
    checkpoint: Optional[str] = None


@dataclass
class RunArtifacts:
    folds: List[FoldResult]
    report: F1Report
    run_dir: Optional[str] = None

    def loss_log_text(self) -> str:
        lines = []
        for f in self.folds:
            lines += [f"{f.name}\t{e}\t{v!r}" for e, v in enumerate(f.loss_log)]
        return "\n".join(lines) + "\n"


def _seq_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([seed, *keys])


def frame_accuracy(model: CatsModel, videos: Sequence[SceneSequence]) -> float:
    hit = tot = 0
    for seq in videos:
        pred = model.predict(seq)
        hit += int((pred == seq.labels).sum())
        tot += seq.labels.size
    return hit / tot if tot else 0.0


def timeline_pairs(model: CatsModel, videos: Sequence[SceneSequence]):
    """(pred, gt) timeline per human per video."""
    for seq in videos:
        preds = decode_timeline(model.forward(seq, train=False)["logits"])
        for h, pred in enumerate(preds):
            yield pred, timeline_from_labels(seq.labels[h])


def evaluate_model(model: CatsModel, videos: Sequence[SceneSequence], fold_name: str = "fold0") -> F1Report:
    return evaluate_timelines(timeline_pairs(model, videos), THRESHOLDS, fold_name)


def evaluate_ground_truth(videos: Sequence[SceneSequence], fold_name: str = "fold0") -> F1Report:
    """Score the labels against themselves: the protocol's upper bound."""
    pairs = [(timeline_from_labels(s.labels[h]),) * 2 for s in videos for h in range(s.H)]
    return evaluate_timelines(pairs, THRESHOLDS, fold_name)


def _dump_nonfinite(out_dir: Optional[Path], fold: str, epoch: int, seq: SceneSequence, model: CatsModel):
    info = {"fold": fold, "epoch": epoch, "video_id": seq.video_id, "T": seq.T, "H": seq.H, "O": seq.O,
            "param_norms": {k: float(np.linalg.norm(p.data)) for k, p in model.parameters().items()},
            "nonfinite_params": [k for k, p in model.parameters().items() if not np.all(np.isfinite(p.data))]}
    if out_dir is not None:
        (out_dir / "nonfinite_dump.json").write_text(json.dumps(info, indent=1))
    return info


def train_fold(config: RunConfig, model_cfg: ModelConfig, videos: Dict[str, SceneSequence],
               split: DatasetSplit, fold_index: int, out_dir: Optional[Path] = None) -> FoldResult:
    opt_cfg = config.optim
    model = CatsModel(model_cfg, seed=config.seed)
    params = model.parameters()
    opt = Adam(params, lr=opt_cfg.lr, clip_norm=opt_cfg.clip_norm)
    train = [videos[v] for v in split.train]
    test = [videos[v] for v in split.test]
    order_rng = _seq_rng(config.seed, fold_index, 0)

    def snapshot():
        return {k: p.data.copy() for k, p in params.items()}

    best = (-1.0, -1, snapshot())
    losses: List[float] = []
    E = opt_cfg.epochs
    for epoch in range(E):
        tau = opt_cfg.tau_start + (opt_cfg.tau_end - opt_cfg.tau_start) * (epoch / max(1, E - 1))
        total, hit, frames = 0.0, 0, 0
        for i in order_rng.permutation(len(train)):
            seq = train[i]
            noise_rng = _seq_rng(config.seed, fold_index, epoch + 1, int(i))
            opt.zero_grad()
            out = model.forward(seq, train=True, rng=noise_rng, tau=tau)
            loss = frame_loss(out["logits"], seq.labels)
            if not np.isfinite(loss.data):
                info = _dump_nonfinite(out_dir, split.name, epoch, seq, model)
                raise TrainingError(f"non-finite loss on {seq.video_id} at epoch {epoch}: {json.dumps(info)[:400]}")
            loss.backward()
            opt.step()
            total += float(loss.data) * seq.labels.size
            hit += int((out["logits"].data.argmax(-1).T == seq.labels).sum())
            frames += seq.labels.size
        losses.append(total / frames)
        train_acc = hit / frames
        f1 = evaluate_model(model, test, split.name).fold_f1[0.10][0]
        log.info("fold %s epoch %d loss %.4f train-acc %.3f F1@10 %.1f", split.name, epoch, losses[-1],
                 train_acc, f1)
        if f1 > best[0]:
            best = (f1, epoch, snapshot())
        if opt_cfg.stop_train_acc and train_acc >= opt_cfg.stop_train_acc:
            break

    final_train_acc = frame_accuracy(model, train)
    for k, p in params.items():
        p.data = best[2][k]
    if E == 0:
        best = (0.0, -1, best[2])
    ckpt = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt = str(out_dir / "best.npz")
        model.save(ckpt)
        (out_dir / "loss.log").write_text("".join(f"{e}\t{v!r}\n" for e, v in enumerate(losses)))
    return FoldResult(name=split.name, checksum=split.checksum(), loss_log=losses,
                      train_acc=frame_accuracy(model, train), final_train_acc=final_train_acc,
                      best_epoch=best[1],
                      report=evaluate_model(model, test, split.name), checkpoint=ckpt)


def _folds(config: RunConfig, data: Sequence[SceneSequence]) -> List[DatasetSplit]:
    folds = make_folds(data, config.fold_policy)
    return folds[:config.max_folds] if config.max_folds else folds


def train(config: RunConfig) -> RunArtifacts:
    data = config.load_data()
    if not data:
        raise ValueError("dataset is empty")
    model_cfg = config.resolved_model(data)
    videos = {s.video_id: s for s in data}
    run_dir = Path(config.output_dir) if config.output_dir else None
    if run_dir is not None:
        run_dir.mkdir(parents=True, exist_ok=True)
        from .config import dump_config
        (run_dir / "config.ini").write_text(dump_config(config))
    results = []
    for i, split in enumerate(_folds(config, data)):
        fold_dir = run_dir / f"fold{i:02d}" if run_dir is not None else None
        results.append(train_fold(config, model_cfg, videos, split, i, fold_dir))
    report = aggregate_folds([r.report for r in results])
    arts = RunArtifacts(folds=results, report=report, run_dir=str(run_dir) if run_dir else None)
    if run_dir is not None:
        write_report(run_dir, report, "CATS")
        (run_dir / "loss.log").write_text(arts.loss_log_text())
    return arts


def write_report(run_dir: Path, report: F1Report, title: str) -> None:
    (run_dir / "report.txt").write_text(report.to_table(title) + "\n")
    (run_dir / "report.jsonl").write_text(report.to_jsonl())


def evaluate(config: RunConfig, checkpoint: str) -> F1Report:
    """Re-evaluate saved fold checkpoints (``checkpoint`` is a run directory or one .npz)."""
    data = config.load_data()
    expect = config.resolved_model(data)
    videos = {s.video_id: s for s in data}
    path = Path(checkpoint)
    reports = []
    for i, split in enumerate(_folds(config, data)):
        ckpt = path if path.is_file() else path / f"fold{i:02d}" / "best.npz"
        if not ckpt.exists():
            raise FileNotFoundError(f"missing checkpoint {ckpt}")
        model = CatsModel.load(ckpt, expect=expect)
        reports.append(evaluate_model(model, [videos[v] for v in split.test], split.name))
    return aggregate_folds(reports)


# -- ablations -----------------------------------------------------------------------
@dataclass
class ComparisonTable:
    title: str
    rows: List[str]
    reports: List[F1Report]
    checksums: List[List[str]]

    def to_text(self) -> str:
        ks = self.reports[0].thresholds
        head = f"{'Model':<32}" + "".join(f"{self.reports[0].column(k):>15}" for k in ks)
        lines = [self.title, head]
        for name, rep in zip(self.rows, self.reports):
            lines.append(f"{name:<32}" + "".join(f"{rep.summary(k):>15}" for k in ks))
        return "\n".join(lines) + "\n"

    def records(self) -> List[dict]:
        out = []
        for name, rep, sums in zip(self.rows, self.reports, self.checksums):
            for rec in rep.records():
                out.append({"row": name, **rec})
            out.append({"row": name, "fold_checksums": sums})
        return out


def _run_variant(config: RunConfig, name: str, **model_changes) -> tuple:
    cfg = replace(config, model=replace(config.model, **model_changes),
                  output_dir=str(Path(config.output_dir) / name) if config.output_dir else "")
    arts = train(cfg)
    return arts.report, [f.checksum for f in arts.folds]


def _finish(config: RunConfig, table: ComparisonTable, stem: str) -> ComparisonTable:
    if config.output_dir:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.txt").write_text(table.to_text())
        (out / f"{stem}.jsonl").write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in table.records()))
    return table


def ablate_gcn_depth(config: RunConfig, depths: Sequence[int] = (1, 2, 3, 4, 5)) -> ComparisonTable:
    rows, reports, sums = [], [], []
    for d in depths:
        rep, cs = _run_variant(config, f"depth{d}", gcn_depth=d)
        rows.append(f"{d}-layer GCN")
        reports.append(rep)
        sums.append(cs)
    table = ComparisonTable("GCN depth ablation", rows, reports, sums)
    return _finish(config, table, "ablate_depth")


def ablate_independent_entity(config: RunConfig) -> ComparisonTable:
    rep_i, cs_i = _run_variant(config, "independent", independent=True)
    rep_c, cs_c = _run_variant(config, "cats", independent=False)
    table = ComparisonTable("Architecture alternatives", ["Independent-entity architecture", "CATS"],
                            [rep_i, rep_c], [cs_i, cs_c])
    return _finish(config, table, "ablate_independent")
