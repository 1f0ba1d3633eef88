"""Citation corpora: ingestion, per-paper series, windowing, synthesis.

File formats
------------
Edge list: UTF-8 CSV with header ``citing_id,cited_id,year``, one citation
event per row. Paper list: UTF-8 CSV with header ``paper_id,pub_year``.
Series export: JSON lines, one object per paper,
``{"paper_id": ..., "pub_year": ..., "cumulative": [...]}``.

A paper's series is cumulative: entry t is the number of distinct citing
papers with citation year at most ``pub_year + t``. Duplicate
(citing, cited) pairs collapse to the earliest year so the count stays a
set cardinality. Citing ids that do not resolve to a corpus paper are
kept and counted; cited ids must resolve.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .numkit import Rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CitationEvent:
    citing_id: str
    cited_id: str
    year: int


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    pub_year: int


@dataclass
class IngestReport:
    """Row accounting for one ingest run."""

    rows: int = 0
    papers: int = 0
    events: int = 0
    duplicates: int = 0
    self_loops: int = 0
    unknown_cited: int = 0
    out_of_span: int = 0
    unresolved_citing: int = 0

    def as_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class CitationSeries:
    """Cumulative citation counts indexed by years since publication."""

    paper_id: str
    pub_year: int
    cumulative: list[int]

    def __post_init__(self):
        prev = 0
        for i, value in enumerate(self.cumulative):
            if value < prev:
                raise ValueError(
                    f"series for {self.paper_id} decreases at year {i}: "
                    f"{prev} -> {value}"
                )
            prev = value


@dataclass
class FeatureSequence:
    """One training example: input windows plus horizon targets.

    ``inputs`` holds raw yearly new-citation counts, shape
    (observation length, window); ``targets`` the cumulative counts for
    the following horizons; ``last_observed`` the cumulative count at the
    end of the observation window.
    """

    paper_id: str
    inputs: np.ndarray
    targets: np.ndarray
    last_observed: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.int64)
        if self.inputs.ndim != 2:
            raise ValueError(f"inputs must be 2-D, got shape {self.inputs.shape}")
        if np.any(self.targets[:-1] > self.targets[1:]):
            raise ValueError(f"targets for {self.paper_id} are not non-decreasing")
        if self.targets.size and self.targets[0] < self.last_observed:
            raise ValueError(
                f"first target for {self.paper_id} below last observed count"
            )


@dataclass
class Corpus:
    """Immutable paper/event collection with an in-edge index."""

    papers: dict[str, PaperRecord]
    events: list[CitationEvent]
    span: tuple[int, int]
    report: IngestReport | None = None
    _in_edges: dict[str, list[tuple[str, int]]] = field(
        init=False, repr=False, default_factory=dict
    )

    def __post_init__(self):
        for ev in self.events:
            if ev.cited_id not in self.papers:
                raise ValueError(f"event cites unknown paper {ev.cited_id!r}")
            self._in_edges.setdefault(ev.cited_id, []).append(
                (ev.citing_id, ev.year)
            )

    def in_edges(self, paper_id: str) -> list[tuple[str, int]]:
        return self._in_edges.get(paper_id, [])


def _read_papers(path: str) -> dict[str, PaperRecord]:
    papers: dict[str, PaperRecord] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["paper_id", "pub_year"]:
            raise DataError(f"{path}:1: expected header paper_id,pub_year")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0]:
                raise DataError(f"{path}:{lineno}: malformed paper row {row!r}")
            try:
                year = int(row[1])
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: pub_year is not an integer: {row[1]!r}"
                ) from None
            if row[0] in papers:
                raise DataError(f"{path}:{lineno}: duplicate paper_id {row[0]!r}")
            papers[row[0]] = PaperRecord(row[0], year)
    return papers


def ingest_edge_list(
    paper_path: str,
    edge_path: str,
    span: tuple[int, int] | None = None,
) -> Corpus:
    """Read paper and edge CSVs into a deduplicated Corpus.

    Rows are dropped and counted when they are self-citations, cite an
    unknown paper, or fall outside ``span``; duplicate (citing, cited)
    pairs keep the earliest year. ``span`` defaults to the range covered
    by the data. Malformed rows raise DataError with the line number.
    """
    papers = _read_papers(paper_path)
    if not papers:
        raise DataError(f"{paper_path}: no papers found")

    report = IngestReport(papers=len(papers))
    raw_rows: list[tuple[str, str, int]] = []
    with open(edge_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["citing_id", "cited_id", "year"]:
            raise DataError(f"{edge_path}:1: expected header citing_id,cited_id,year")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3 or not row[0] or not row[1]:
                raise DataError(f"{edge_path}:{lineno}: malformed edge row {row!r}")
            try:
                year = int(row[2])
            except ValueError:
                raise DataError(
                    f"{edge_path}:{lineno}: year is not an integer: {row[2]!r}"
                ) from None
            report.rows += 1
            raw_rows.append((row[0], row[1], year))

    if span is None:
        years = [p.pub_year for p in papers.values()] + [r[2] for r in raw_rows]
        span = (min(years), max(years))

    kept: dict[tuple[str, str], int] = {}
    for citing, cited, year in raw_rows:
        if citing == cited:
            report.self_loops += 1
            continue
        if not span[0] <= year <= span[1]:
            report.out_of_span += 1
            continue
        if cited not in papers:
            report.unknown_cited += 1
            continue
        key = (citing, cited)
        if key in kept:
            report.duplicates += 1
            kept[key] = min(kept[key], year)
        else:
            kept[key] = year

    events = [CitationEvent(c, d, y) for (c, d), y in kept.items()]
    if not events:
        raise DataError(f"{edge_path}: no usable citation events")
    report.events = len(events)
    report.unresolved_citing = sum(1 for ev in events if ev.citing_id not in papers)
    return Corpus(papers=papers, events=events, span=span, report=report)


def build_series(corpus: Corpus, paper_id: str, t_max: int) -> CitationSeries:
    """Cumulative citation series for one paper over years 0..t_max."""
    record = corpus.papers.get(paper_id)
    if record is None:
        raise DataError(f"unknown paper_id: {paper_id!r}")
    if t_max < 0:
        raise ValueError(f"t_max must be non-negative, got {t_max}")
    counts = np.zeros(t_max + 1, dtype=np.int64)
    for _, year in corpus.in_edges(paper_id):
        offset = year - record.pub_year
        if offset <= 0:
            counts[0] += 1
        elif offset <= t_max:
            counts[offset] += 1
    return CitationSeries(paper_id, record.pub_year, counts.cumsum().tolist())


def filter_eligible(
    corpus: Corpus,
    min_citations: int = 5,
    window: int = 5,
    t_obs: int = 5,
    horizons: int = 5,
) -> list[str]:
    """Paper ids with enough early citations and full horizon coverage.

    A paper qualifies when it has at least ``min_citations`` citations
    within years 0..window-1 after publication, and its publication year
    leaves ``t_obs + horizons`` fully observable years inside the corpus
    span.
    """
    out = []
    for paper_id in sorted(corpus.papers):
        record = corpus.papers[paper_id]
        if record.pub_year + t_obs + horizons > corpus.span[1]:
            continue
        early = sum(
            1
            for _, year in corpus.in_edges(paper_id)
            if year - record.pub_year <= window - 1
        )
        if early >= min_citations:
            out.append(paper_id)
    return out


def _windowed_example(
    series: CitationSeries, t_obs: int, horizons: int, window: int
) -> FeatureSequence:
    cum = series.cumulative
    yearly = np.diff(np.concatenate(([0], cum)))
    inputs = np.zeros((t_obs, window), dtype=np.float64)
    for t in range(t_obs):
        for k in range(window):
            idx = t - window + 1 + k
            if idx >= 0:
                inputs[t, k] = yearly[idx]
    return FeatureSequence(
        paper_id=series.paper_id,
        inputs=inputs,
        targets=np.asarray(cum[t_obs : t_obs + horizons], dtype=np.int64),
        last_observed=int(cum[t_obs - 1]),
    )


def examples_from_series(
    series_list: list[CitationSeries], t_obs: int, horizons: int, window: int
) -> list[FeatureSequence]:
    """Window a batch of series into training examples.

    Series shorter than ``t_obs + horizons`` lack full targets and are
    skipped; the skip count is logged.
    """
    if t_obs < 1 or horizons < 1 or window < 1:
        raise ValueError("t_obs, horizons, and window must all be positive")
    out, skipped = [], 0
    for series in series_list:
        if len(series.cumulative) < t_obs + horizons:
            skipped += 1
            continue
        out.append(_windowed_example(series, t_obs, horizons, window))
    if skipped:
        logger.info(
            "skipped %d series lacking %d observable years", skipped, t_obs + horizons
        )
    return out


def make_examples(
    corpus: Corpus, ids: list[str], t_obs: int, horizons: int, window: int
) -> list[FeatureSequence]:
    """Build feature sequences for the given papers.

    Inputs at step t are the yearly new-citation counts over the
    ``window`` years ending at year t, zero-padded before publication.
    Targets are the cumulative counts for the ``horizons`` years after
    the observation window. Papers whose horizon extends past the corpus
    span are skipped and logged.
    """
    if t_obs < 1 or horizons < 1 or window < 1:
        raise ValueError("t_obs, horizons, and window must all be positive")
    series_list = []
    skipped = 0
    for paper_id in ids:
        record = corpus.papers.get(paper_id)
        if record is None:
            raise DataError(f"unknown paper_id: {paper_id!r}")
        if record.pub_year + t_obs + horizons > corpus.span[1]:
            skipped += 1
            continue
        series_list.append(build_series(corpus, paper_id, t_obs + horizons - 1))
    if skipped:
        logger.info("skipped %d papers lacking full horizon coverage", skipped)
    return examples_from_series(series_list, t_obs, horizons, window)


def synth_corpus(
    rng: Rng,
    n_papers: int,
    years: int,
    m_refs: int,
    fitness_spread: float,
    start_year: int = 2000,
    peak_years: float = 2.0,
    peak_spread: float = 0.8,
    longevity: float = 0.8,
) -> Corpus:
    """Grow a synthetic citation corpus by fitness-weighted attachment.

    Papers arrive at a constant rate across the year span. Each new
    paper cites ``min(m_refs, older papers)`` distinct earlier papers,
    sampled with probability proportional to

        (current citations + 1) * fitness * aging(age)

    where fitness is log-normal with the given spread and aging is a
    per-paper log-normal bump over the cited paper's age: it peaks when
    the age reaches the paper's own peak time (log-normal across papers
    around ``peak_years`` with sigma ``peak_spread``) and has log-age
    width ``longevity``. The +1 keeps uncited papers reachable, the
    fitness tail produces a heavy-tailed citation distribution, and the
    heterogeneous peaks produce early bloomers and late bloomers whose
    observed trajectory shape, not just its endpoint, carries signal
    about future counts. Deterministic for a given rng seed.
    """
    if n_papers < 2:
        raise ValueError(f"n_papers must be at least 2, got {n_papers}")
    if m_refs < 1:
        raise ValueError(f"m_refs must be at least 1, got {m_refs}")
    if years < 1:
        raise ValueError(f"years must be at least 1, got {years}")
    if peak_years <= 0.0:
        raise ValueError(f"peak_years must be positive, got {peak_years}")
    if peak_spread < 0.0 or longevity <= 0.0:
        raise ValueError(
            f"need peak_spread >= 0 and longevity > 0, "
            f"got {peak_spread} and {longevity}"
        )

    fitness = rng.lognormal(0.0, fitness_spread, n_papers)
    log_peak = rng.normal(np.log1p(peak_years), peak_spread, n_papers)
    width = len(str(n_papers - 1))
    ids = [f"P{i:0{width}d}" for i in range(n_papers)]
    pub_years = np.array(
        [start_year + (i * years) // n_papers for i in range(n_papers)]
    )
    papers = {
        ids[i]: PaperRecord(ids[i], int(pub_years[i])) for i in range(n_papers)
    }

    citations = np.zeros(n_papers, dtype=np.float64)
    events: list[CitationEvent] = []
    for i in range(1, n_papers):
        m = min(m_refs, i)
        log_age = np.log1p(pub_years[i] - pub_years[:i])
        aging = np.exp(
            -((log_age - log_peak[:i]) ** 2) / (2.0 * longevity * longevity)
        )
        weights = (citations[:i] + 1.0) * fitness[:i] * aging
        probs = weights / weights.sum()
        refs = rng.choice(i, size=m, replace=False, p=probs)
        for j in sorted(int(r) for r in refs):
            events.append(CitationEvent(ids[i], ids[j], int(pub_years[i])))
            citations[j] += 1.0
    return Corpus(
        papers=papers,
        events=events,
        span=(start_year, start_year + years - 1),
    )


def split_train_test(
    ids: list[str], rng: Rng, test_fraction: float
) -> tuple[list[str], list[str]]:
    """Disjoint, exhaustive, seed-deterministic train/test split."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    pool = sorted(ids)
    if len(pool) < 2:
        raise ValueError(f"need at least 2 ids to split, got {len(pool)}")
    order = rng.permutation(len(pool))
    n_test = min(max(1, round(len(pool) * test_fraction)), len(pool) - 1)
    test = sorted(pool[i] for i in order[:n_test])
    train = sorted(pool[i] for i in order[n_test:])
    return train, test


def save_series_jsonl(path: str, series_list: list[CitationSeries]) -> None:
    """Write series as JSON lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for series in series_list:
            fh.write(
                json.dumps(
                    {
                        "paper_id": series.paper_id,
                        "pub_year": series.pub_year,
                        "cumulative": [int(v) for v in series.cumulative],
                    }
                )
                + "\n"
            )


def load_series_jsonl(path: str) -> list[CitationSeries]:
    """Read series from JSON lines, validating each record."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                series = CitationSeries(
                    paper_id=obj["paper_id"],
                    pub_year=int(obj["pub_year"]),
                    cumulative=[int(v) for v in obj["cumulative"]],
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad series record: {exc}") from None
            out.append(series)
    if not out:
        raise DataError(f"{path}: no series records found")
    return out
