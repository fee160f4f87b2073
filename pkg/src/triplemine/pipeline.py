"""End-to-end drivers: classification (Task 1) and mining (Task 2).

Scoring fans out over a bounded worker pool; reduction (lambda search,
clustering, ranking, export) is single-threaded and deterministic, so
a warm cache makes re-runs byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .backends import CausalScorer, MaskedScorer
from .coherency import select_best
from .core import LabeledTriple, Triple
from .errors import (
    ConfigError,
    DataError,
    MissingEntryError,
    QueryError,
    SamplingError,
    SpanNotFoundError,
    TransportError,
)
from .mixture import classify_by_mixture, f1_score, fit_gmm_em, tune_lambda_grid
from .morpho import Tagger
from .pmi import PmiScore, locate_spans, span_components
from .sentences import (
    GENERATION_MODES,
    MODE_COHERENCY,
    MODE_CONCAT,
    CandidateSentence,
    TemplateRegistry,
    enumerate_candidates,
    generate_concatenation,
    generate_deterministic,
)

logger = logging.getLogger(__name__)

DEFAULT_MINING_LAMBDA = 4.0


@dataclass
class RunConfig:
    """Everything a run needs; backends arrive already constructed."""

    mode: str = MODE_COHERENCY
    masked_backend: MaskedScorer | None = None
    causal_backend: CausalScorer | None = None
    lam: float | None = None  # None -> AIC grid search (Task 1 only)
    grid_lo: float = 0.5
    grid_hi: float = 5.0
    grid_points: int = 90
    seed: int = 0
    concurrency: int = 1
    length_normalize: bool = False
    registry: TemplateRegistry | None = None
    tagger: Tagger | None = None

    def validate_for_generation(self):
        if self.mode not in GENERATION_MODES:
            raise ConfigError(f"unknown generation mode {self.mode!r}")
        if self.mode == MODE_COHERENCY and self.causal_backend is None:
            raise ConfigError("coherency mode requires a causal backend")
        if self.concurrency < 1:
            raise ConfigError(f"concurrency must be >= 1, got {self.concurrency}")

    def validate_for_scoring(self):
        self.validate_for_generation()
        if self.masked_backend is None:
            raise ConfigError("scoring requires a masked backend")
        if self.lam is not None and self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class ReportRow:
    triple: Triple
    sentence: str
    pmi: PmiScore
    label: bool | None = None
    predicted: bool | None = None
    rank: int | None = None


@dataclass(frozen=True)
class RunReport:
    """A finished run: per-triple rows plus run-level outcomes."""

    task: str  # task1 | task2 | score
    mode: str
    lam: float
    rows: tuple[ReportRow, ...]
    f1: float | None = None
    grid: tuple[tuple[float, float], ...] | None = None
    masked_tag: str | None = None
    causal_tag: str | None = None
    skipped: int = 0


def sentence_for(triple: Triple, config: RunConfig) -> CandidateSentence:
    """Render the sentence this run's mode assigns to the triple."""
    if config.mode == MODE_CONCAT:
        return generate_concatenation(triple)
    if config.mode == MODE_COHERENCY:
        candidates = enumerate_candidates(triple, config.registry, config.tagger)
        ranked = select_best(candidates, config.causal_backend, config.length_normalize)
        return ranked.best
    return generate_deterministic(triple, config.mode, config.registry, config.tagger)


def _score_one(triple: Triple, config: RunConfig):
    sentence = sentence_for(triple, config)
    roles = locate_spans(sentence)
    components = span_components(roles, config.masked_backend)
    return sentence, components


def score_triples(config: RunConfig, triples: Sequence[Triple]):
    """(sentence, components) per triple, input order preserved."""
    if config.concurrency > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            return list(pool.map(lambda t: _score_one(t, config), triples))
    return [_score_one(t, config) for t in triples]


def sample_negatives(valid: Sequence[Triple], seed: int) -> list[LabeledTriple]:
    """One corrupted triple per valid triple.

    Uniformly pick head/relation/tail, replace it with the same element
    from a uniformly chosen other triple, and redraw until the result
    differs from the source. Deterministic given the seed.
    """
    if len(valid) < 2:
        raise SamplingError(f"need at least 2 valid triples to sample negatives, got {len(valid)}")
    rng = random.Random(seed)
    negatives = []
    for index, source in enumerate(valid):
        for _ in range(1000):
            slot = rng.choice(("head", "relation", "tail"))
            donor_index = rng.randrange(len(valid))
            if donor_index == index:
                continue
            donor = valid[donor_index]
            corrupted = dataclasses.replace(source, **{slot: getattr(donor, slot)})
            if corrupted != source:
                negatives.append(LabeledTriple(corrupted, False))
                break
        else:
            raise SamplingError(f"could not corrupt {source}; pool elements too uniform")
    return negatives


def stratified_sample(candidates: Sequence[Triple], per_relation: int, seed: int) -> list[Triple]:
    """Up to per_relation triples per relation, input order preserved."""
    rng = random.Random(seed)
    by_relation: dict[str, list[int]] = {}
    for index, triple in enumerate(candidates):
        by_relation.setdefault(triple.relation, []).append(index)
    keep: set[int] = set()
    for relation in sorted(by_relation):
        indices = by_relation[relation]
        if len(indices) > per_relation:
            keep.update(rng.sample(indices, per_relation))
        else:
            keep.update(indices)
    return [candidates[i] for i in sorted(keep)]


def _model_tags(config: RunConfig) -> tuple[str | None, str | None]:
    masked = getattr(config.masked_backend, "model_tag", None)
    causal = getattr(config.causal_backend, "model_tag", None)
    return masked, causal


def run_task1(config: RunConfig, data: Sequence[LabeledTriple]) -> RunReport:
    """Score, pick lambda (grid or fixed), cluster, and report F1."""
    config.validate_for_scoring()
    labels = [record.label for record in data]
    if not any(labels) or all(labels):
        raise DataError("task 1 input must contain both valid and invalid triples")

    triples = [record.triple for record in data]
    scored = score_triples(config, triples)
    components = [c for _, c in scored]

    grid = None
    if config.lam is None:
        search = tune_lambda_grid(
            components, config.grid_lo, config.grid_hi, config.grid_points, config.seed
        )
        lam, scores, grid = search.best_lambda, list(search.scores_at_best), search.grid
    else:
        lam = config.lam
        scores = [PmiScore.from_components(*c, lam).value for c in components]

    model = fit_gmm_em(scores, seed=config.seed)
    predicted = classify_by_mixture(scores, model)

    rows = tuple(
        ReportRow(
            triple=triple,
            sentence=sentence.text,
            pmi=PmiScore.from_components(*comps, lam),
            label=label,
            predicted=pred,
        )
        for triple, (sentence, comps), label, pred in zip(triples, scored, labels, predicted)
    )
    masked_tag, causal_tag = _model_tags(config)
    return RunReport(
        task="task1",
        mode=config.mode,
        lam=lam,
        rows=rows,
        f1=f1_score(predicted, labels),
        grid=grid,
        masked_tag=masked_tag,
        causal_tag=causal_tag,
    )


_SKIPPABLE = (DataError, SpanNotFoundError, MissingEntryError, QueryError)


def _score_or_skip(triple: Triple, config: RunConfig):
    try:
        return _score_one(triple, config)
    except TransportError:
        raise  # a dead backend is not a bad record
    except _SKIPPABLE as exc:
        return exc


def run_task2(config: RunConfig, candidates: Sequence[Triple], top_k: int = 100) -> RunReport:
    """Score candidates at fixed lambda and export the top_k by PMI.

    Record-level failures are logged and dropped; transport failures
    abort the run.
    """
    config.validate_for_scoring()
    if not candidates:
        raise DataError("no candidate triples to mine")
    lam = DEFAULT_MINING_LAMBDA if config.lam is None else config.lam

    if config.concurrency > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            results = list(pool.map(lambda t: _score_or_skip(t, config), candidates))
    else:
        results = [_score_or_skip(t, config) for t in candidates]

    scored: list[tuple[Triple, CandidateSentence, PmiScore]] = []
    skipped = 0
    for triple, result in zip(candidates, results):
        if isinstance(result, Exception):
            skipped += 1
            logger.warning("skipping %s: %s", triple, result)
            continue
        sentence, comps = result
        scored.append((triple, sentence, PmiScore.from_components(*comps, lam)))

    order = sorted(range(len(scored)), key=lambda i: (-scored[i][2].value, i))
    rows = tuple(
        ReportRow(
            triple=scored[i][0],
            sentence=scored[i][1].text,
            pmi=scored[i][2],
            rank=rank,
        )
        for rank, i in enumerate(order[:top_k], start=1)
    )
    masked_tag, causal_tag = _model_tags(config)
    return RunReport(
        task="task2",
        mode=config.mode,
        lam=lam,
        rows=rows,
        masked_tag=masked_tag,
        causal_tag=causal_tag,
        skipped=skipped,
    )


def run_score(config: RunConfig, candidates: Sequence[Triple]) -> RunReport:
    """Score every candidate at fixed lambda without ranking or labels."""
    config.validate_for_scoring()
    if not candidates:
        raise DataError("no triples to score")
    lam = 1.0 if config.lam is None else config.lam
    scored = score_triples(config, candidates)
    rows = tuple(
        ReportRow(triple=triple, sentence=sentence.text, pmi=PmiScore.from_components(*comps, lam))
        for triple, (sentence, comps) in zip(candidates, scored)
    )
    masked_tag, causal_tag = _model_tags(config)
    return RunReport(
        task="score", mode=config.mode, lam=lam, rows=rows, masked_tag=masked_tag, causal_tag=causal_tag
    )


# --- export ---------------------------------------------------------------

_BASE_COLUMNS = (
    "relation",
    "head",
    "tail",
    "sentence",
    "cond_tail",
    "marg_tail",
    "cond_head",
    "marg_head",
    "lambda",
    "score",
)


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def report_columns(report: RunReport) -> tuple[str, ...]:
    if report.task == "task1":
        return _BASE_COLUMNS + ("label", "predicted")
    if report.task == "task2":
        return _BASE_COLUMNS + ("rank",)
    return _BASE_COLUMNS


def _row_values(report: RunReport, row: ReportRow) -> tuple[str, ...]:
    base = (
        row.triple.relation,
        row.triple.head_text,
        row.triple.tail_text,
        row.sentence,
        _fmt(row.pmi.cond_tail),
        _fmt(row.pmi.marg_tail),
        _fmt(row.pmi.cond_head),
        _fmt(row.pmi.marg_head),
        _fmt(report.lam),
        _fmt(row.pmi.value),
    )
    if report.task == "task1":
        return base + (str(int(row.label)), str(int(row.predicted)))
    if report.task == "task2":
        return base + (str(row.rank),)
    return base


def render_tsv(report: RunReport) -> str:
    lines = ["\t".join(report_columns(report))]
    lines.extend("\t".join(_row_values(report, row)) for row in report.rows)
    return "\n".join(lines) + "\n"


def render_json(report: RunReport) -> str:
    payload = {
        "task": report.task,
        "mode": report.mode,
        "lambda": _fmt(report.lam),
        "model_tags": {"masked": report.masked_tag, "causal": report.causal_tag},
        "rows": [
            dict(zip(report_columns(report), _row_values(report, row))) for row in report.rows
        ],
    }
    if report.f1 is not None:
        payload["f1"] = _fmt(report.f1)
    if report.grid is not None:
        payload["grid"] = [[_fmt(lam), _fmt(value) if value != float("inf") else "inf"] for lam, value in report.grid]
    if report.skipped:
        payload["skipped"] = report.skipped
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def export_report(report: RunReport, path, fmt: str = "tsv"):
    """Write the report with stable field order and 6-decimal floats.

    Identical reports always produce identical bytes.
    """
    if fmt == "tsv":
        text = render_tsv(report)
    elif fmt == "json":
        text = render_json(report)
    else:
        raise ConfigError(f"unknown export format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
