"""Simulated annotator: parametric label/error/timing model plus A/B runs.

The annotator sees only the presentation plan and its own ground truth and
per-item ambiguity; it never reads the learner's internals. Per item, in plan
order, the draw order is fixed: one error draw, then one timing-noise draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .clustering import PresentationPlan
from .records import Dataset, EmbeddingTable, Gazetteer, ImageRecord
from .session import Session, SessionConfig


@dataclass(frozen=True)
class CostModelParams:
    """Simulated per-item annotation time:
    t_base + t_amb * perceived_ambiguity + t_switch * [label switched]
    + Gaussian(0, noise_sd) jitter, clamped at zero."""

    t_base: float = 2000.0
    t_switch: float = 1500.0
    t_amb: float = 3000.0
    context_discount: float = 0.5
    rng_seed: int = 0
    noise_sd: float = 100.0

    def __post_init__(self):
        if min(self.t_base, self.t_switch, self.t_amb, self.noise_sd) < 0:
            raise ValueError("times must be >= 0")
        if not (0.0 <= self.context_discount <= 1.0):
            raise ValueError("context_discount must be in [0, 1]")


@dataclass(frozen=True)
class ErrorModelParams:
    """Label-flip probability min(0.5, p0 + p_amb * perceived_ambiguity)."""

    p0: float = 0.02
    p_amb: float = 0.15

    def __post_init__(self):
        if self.p0 < 0 or self.p_amb < 0:
            raise ValueError("error probabilities must be >= 0")


def perceived_ambiguity(alpha: float, true_class: str, group_true_classes: Sequence[str],
                        context_discount: float) -> float:
    """Effective difficulty after context discount from same-class neighbors.

    ``group_true_classes`` lists the true classes of the *other* items shown
    in the same group; s is the fraction of them sharing ``true_class``
    (0 for singleton groups). Returns alpha * (1 - discount * s).
    """
    if not group_true_classes:
        return alpha
    s = sum(1 for c in group_true_classes if c == true_class) / len(group_true_classes)
    return alpha * (1.0 - context_discount * s)


@dataclass(frozen=True)
class LabelAction:
    item_id: str
    chosen_class: str
    elapsed_ms: float


def truth_table(records: Sequence[ImageRecord]) -> dict[str, tuple[str, float]]:
    """id -> (true class, intrinsic ambiguity); missing alpha defaults to 0."""
    table = {}
    for r in records:
        if r.label is None:
            continue
        table[r.id] = (r.label, r.alpha if r.alpha is not None else 0.0)
    return table


def annotate(plan: PresentationPlan, truth: Mapping[str, tuple[str, float]],
             classes: Sequence[str], cost: CostModelParams, err: ErrorModelParams,
             rng: np.random.Generator) -> list[LabelAction]:
    """Label one batch in plan order, producing chosen classes and elapsed times."""
    if len(classes) != 2:
        raise ValueError("annotator handles binary class sets")
    other = {classes[0]: classes[1], classes[1]: classes[0]}

    actions: list[LabelAction] = []
    prev_chosen: str | None = None
    for group in plan.groups:
        group_truths = [truth[item.item_id][0] for item in group]
        for pos, item in enumerate(group):
            true_class, alpha = truth[item.item_id]
            neighbors = group_truths[:pos] + group_truths[pos + 1:]
            a_eff = perceived_ambiguity(alpha, true_class, neighbors,
                                        cost.context_discount)
            p_err = min(0.5, err.p0 + err.p_amb * a_eff)
            chosen = other[true_class] if rng.random() < p_err else true_class
            noise = rng.normal(0.0, cost.noise_sd)
            switched = prev_chosen is not None and chosen != prev_chosen
            elapsed = (cost.t_base + cost.t_amb * a_eff
                       + (cost.t_switch if switched else 0.0) + noise)
            actions.append(LabelAction(item.item_id, chosen, max(0.0, elapsed)))
            prev_chosen = chosen
    return actions


@dataclass
class SimulationResult:
    session: Session
    cumulative_ms: float
    final_f1: float
    switches_total: int
    labeled_total: int


def run_session(session: Session, cost: CostModelParams, err: ErrorModelParams,
                rng: np.random.Generator,
                truth: Mapping[str, tuple[str, float]] | None = None) -> SimulationResult:
    """Drive a session to completion with the simulated annotator."""
    if truth is None:
        truth = truth_table(session.dataset.records)
    classes = session.dataset.classes
    switches = 0
    while not session.is_complete:
        plan = session.current_plan
        actions = annotate(plan, truth, classes, cost, err, rng)
        switches += sum(1 for a, b in zip(actions, actions[1:])
                        if a.chosen_class != b.chosen_class)
        for action in actions:
            session.submit_label(action.item_id, action.chosen_class, action.elapsed_ms)
    m = session.metrics()
    cumulative = m.batches[-1].cumulative_ms if m.batches else 0.0
    labeled = session.events[-1].payload.get("labeled_total", 0)
    return SimulationResult(session=session, cumulative_ms=cumulative,
                            final_f1=m.final_f1, switches_total=switches,
                            labeled_total=labeled)


@dataclass(frozen=True)
class AbRow:
    seed: int
    mode: str
    cumulative_ms: float
    final_f1: float
    switches_total: int


@dataclass
class AbReport:
    rows: list[AbRow] = field(default_factory=list)

    def arm(self, mode: str) -> dict[int, AbRow]:
        return {r.seed: r for r in self.rows if r.mode == mode}

    def summary(self) -> dict:
        caiaf, plain = self.arm("caiaf"), self.arm("plain")
        seeds = sorted(set(caiaf) & set(plain))
        wins = sum(1 for s in seeds if caiaf[s].cumulative_ms < plain[s].cumulative_ms)
        return {
            "n_seeds": len(seeds),
            "caiaf_time_wins": wins,
            "mean_cumulative_ms_caiaf": float(np.mean([caiaf[s].cumulative_ms for s in seeds])) if seeds else 0.0,
            "mean_cumulative_ms_plain": float(np.mean([plain[s].cumulative_ms for s in seeds])) if seeds else 0.0,
            "mean_final_f1_caiaf": float(np.mean([caiaf[s].final_f1 for s in seeds])) if seeds else 0.0,
            "mean_final_f1_plain": float(np.mean([plain[s].final_f1 for s in seeds])) if seeds else 0.0,
        }


def run_ab(dataset: Dataset, base_config: SessionConfig, cost: CostModelParams,
           err: ErrorModelParams, seeds: Sequence[int],
           embeddings: EmbeddingTable | None = None,
           gazetteer: Gazetteer | None = None) -> AbReport:
    """Paired caiaf-vs-plain sessions per seed with common random numbers.

    Both arms of a seed share the dataset, the session seed (hence split and
    selection), and the annotator seed ``default_rng([cost.rng_seed, seed])``;
    only the presentation mode differs. Rows come out sorted by (seed, mode).
    """
    truth = truth_table(dataset.records)
    rows: list[AbRow] = []
    for s in sorted(seeds):
        for mode in ("caiaf", "plain"):
            config = replace(base_config, mode=mode, rng_seed=s,
                             cluster=replace(base_config.cluster, rng_seed=s))
            session = Session(config, dataset, embeddings=embeddings,
                              gazetteer=gazetteer)
            rng = np.random.default_rng([cost.rng_seed, s])
            result = run_session(session, cost, err, rng, truth=truth)
            rows.append(AbRow(seed=s, mode=mode, cumulative_ms=result.cumulative_ms,
                              final_f1=result.final_f1,
                              switches_total=result.switches_total))
    return AbReport(rows=rows)


def write_ab_report_csv(report: AbReport, path) -> None:
    import csv
    from pathlib import Path

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "mode", "cumulative_ms", "final_f1", "switches_total"])
        for r in report.rows:
            writer.writerow([r.seed, r.mode, r.cumulative_ms, r.final_f1,
                             r.switches_total])
