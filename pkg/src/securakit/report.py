"""Analysis report container and its serialized forms.

JSON is the canonical machine format: emission is deterministic (sorted
keys, fixed separators) and lossless, so ``from_json(to_json(r)) == r``
field for field and repeated runs of a seeded analysis produce
byte-identical documents.  CSV exists for plotting pipelines (one row per
result, one section per series) and the table form is for humans; neither
carries the round-trip guarantee.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import DomainError

TOOL_VERSION = "0.1.0"

METHOD_LABELS = frozenset({"analytic", "paper_rate_sum", "monte_carlo", "rank_regression", "mle"})

FORMATS = ("json", "csv", "table")


@dataclass
class Result:
    """One named metric with the method that produced it.

    ``uncertainty`` is the standard error for sampled metrics and ``None``
    for exact ones.
    """

    metric: str
    value: float
    method: str
    uncertainty: float | None = None

    def __post_init__(self):
        if self.method not in METHOD_LABELS:
            raise DomainError(f"method must be one of {sorted(METHOD_LABELS)}, got {self.method!r}")


@dataclass
class Series:
    """Named (t, value) curve for plotting."""

    name: str
    t: list[float]
    values: list[float]

    def __post_init__(self):
        if len(self.t) != len(self.values):
            raise DomainError("series t and values must have equal length")


@dataclass
class AnalysisReport:
    """Metric bundle with provenance: every value carries a method label."""

    model_echo: dict
    results: list[Result]
    series: list[Series] = field(default_factory=list)
    tool_version: str = TOOL_VERSION
    seed_used: int | None = None


def to_json(report: AnalysisReport) -> str:
    payload = {
        "tool_version": report.tool_version,
        "seed_used": report.seed_used,
        "model_echo": report.model_echo,
        "results": [
            {"metric": r.metric, "value": r.value, "method": r.method, "uncertainty": r.uncertainty}
            for r in report.results
        ],
        "series": [{"name": s.name, "t": s.t, "values": s.values} for s in report.series],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> AnalysisReport:
    payload = json.loads(text)
    return AnalysisReport(
        model_echo=payload["model_echo"],
        results=[
            Result(
                metric=r["metric"],
                value=r["value"],
                method=r["method"],
                uncertainty=r.get("uncertainty"),
            )
            for r in payload["results"]
        ],
        series=[Series(name=s["name"], t=s["t"], values=s["values"]) for s in payload.get("series", [])],
        tool_version=payload["tool_version"],
        seed_used=payload.get("seed_used"),
    )


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def to_csv(report: AnalysisReport) -> str:
    lines = ["metric,value,method,uncertainty"]
    for r in report.results:
        unc = _fmt(r.uncertainty) if r.uncertainty is not None else ""
        lines.append(f"{r.metric},{_fmt(r.value)},{r.method},{unc}")
    for s in report.series:
        lines.append("")
        lines.append(f"# series: {s.name}")
        lines.append("t,value")
        for t, v in zip(s.t, s.values):
            lines.append(f"{t!r},{v!r}")
    return "\n".join(lines) + "\n"


def to_table(report: AnalysisReport) -> str:
    width = max([len("metric")] + [len(r.metric) for r in report.results]) + 2
    lines = [
        f"{'metric':<{width}}{'value':>14}  {'method':<15}{'uncertainty':>12}",
        f"{'-' * 6:<{width}}{'-' * 5:>14}  {'-' * 6:<15}{'-' * 11:>12}",
    ]
    for r in report.results:
        unc = _fmt(r.uncertainty) if r.uncertainty is not None else "-"
        lines.append(f"{r.metric:<{width}}{_fmt(r.value):>14}  {r.method:<15}{unc:>12}")
    for s in report.series:
        lines.append("")
        lines.append(f"series: {s.name} ({len(s.t)} points)")
        lines.append(f"{'t':>14}{'value':>16}")
        for t, v in zip(s.t, s.values):
            lines.append(f"{_fmt(t):>14}{_fmt(v):>16}")
    if report.seed_used is not None:
        lines.append("")
        lines.append(f"seed: {report.seed_used}")
    return "\n".join(lines) + "\n"


def emit_report(report: AnalysisReport, format: str = "json") -> str:
    """Serialize a report as ``json`` (canonical), ``csv``, or ``table``."""
    if format == "json":
        return to_json(report)
    if format == "csv":
        return to_csv(report)
    if format == "table":
        return to_table(report)
    raise DomainError(f"format must be one of {FORMATS}, got {format!r}")
