"""Run and comparison reports: delimited output, JSON, and rendered figures.

Schemas are documented in docs/report-schema.md and kept deliberately flat
so CI scripts can consume them.  The compare pipeline renders bar-chart
figures next to the CSV it writes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

from .engine import EngineStats, Verdict
from .pogp import performance, reduction_ratio

RUN_COLUMNS = [
    "file",
    "format",
    "strategy",
    "mode",
    "reverse",
    "constraint_mode",
    "seed",
    "verdict",
    "exit_code",
    "wall_time_s",
    "frames_opened",
    "clauses_learned",
    "mean_clause_size",
    "pos_generated",
    "gen_time_share",
    "mean_reduction_ratio",
]

COMPARE_COLUMNS = [
    "instance",
    "strategy",
    "mode",
    "removed",
    "total_state_bits",
    "reduction_ratio",
    "performance",
    "time_s",
    "sound",
]


@dataclass
class RunReport:
    file: str
    format: str
    strategy: str
    mode: str
    reverse: bool
    constraint_mode: str
    seed: int | None
    verdict: str
    exit_code: int
    wall_time_s: float
    frames_opened: int
    clauses_learned: int
    mean_clause_size: float
    pos_generated: int
    gen_time_share: float
    mean_reduction_ratio: float

    @classmethod
    def from_verdict(
        cls,
        verdict: Verdict,
        *,
        file: str,
        format: str,
        strategy: str,
        mode: str,
        reverse: bool,
        constraint_mode: str,
        seed: int | None,
    ) -> "RunReport":
        stats: EngineStats = verdict.stats
        return cls(
            file=file,
            format=format,
            strategy=strategy,
            mode=mode,
            reverse=reverse,
            constraint_mode=constraint_mode,
            seed=seed,
            verdict=verdict.verdict,
            exit_code=verdict.exit_code,
            wall_time_s=round(stats.wall_time, 6),
            frames_opened=stats.frames_opened,
            clauses_learned=stats.clauses_learned,
            mean_clause_size=round(stats.mean_clause_size, 3),
            pos_generated=stats.pos_generated,
            gen_time_share=round(stats.gen_time_share, 6),
            mean_reduction_ratio=round(stats.mean_reduction_ratio, 6),
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=RUN_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(asdict(self))
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{k}: {v}" for k, v in asdict(self).items()]
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        return self.to_text()


@dataclass
class CompareRow:
    instance: str
    strategy: str
    mode: str
    removed: int
    total_state_bits: int
    reduction_ratio: float
    performance: float
    time_s: float
    sound: bool


@dataclass
class StrategyAggregate:
    strategy: str
    instances: int
    mean_reduction_ratio: float
    mean_performance: float


@dataclass
class CompareReport:
    rows: list[CompareRow] = field(default_factory=list)
    reference: str = "max-qbf"

    def add(
        self,
        instance: str,
        strategy: str,
        mode: str,
        removed: int,
        total: int,
        removed_reference: int,
        time_s: float,
        sound: bool,
    ) -> None:
        self.rows.append(
            CompareRow(
                instance=instance,
                strategy=strategy,
                mode=mode,
                removed=removed,
                total_state_bits=total,
                reduction_ratio=round(reduction_ratio(removed, total), 6),
                performance=round(performance(removed, removed_reference), 6),
                time_s=round(time_s, 6),
                sound=sound,
            )
        )

    def aggregates(self) -> list[StrategyAggregate]:
        by_strategy: dict[str, list[CompareRow]] = {}
        for row in self.rows:
            by_strategy.setdefault(row.strategy, []).append(row)
        out = []
        for strategy in sorted(by_strategy):
            rows = by_strategy[strategy]
            finite = [r.performance for r in rows if math.isfinite(r.performance)]
            out.append(
                StrategyAggregate(
                    strategy=strategy,
                    instances=len(rows),
                    mean_reduction_ratio=round(
                        sum(r.reduction_ratio for r in rows) / len(rows), 6
                    ),
                    mean_performance=round(sum(finite) / len(finite), 6)
                    if finite
                    else 0.0,
                )
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in sorted(self.rows, key=lambda r: (r.instance, r.strategy)):
            writer.writerow(asdict(row))
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "reference": self.reference,
            "rows": [asdict(r) for r in sorted(self.rows, key=lambda r: (r.instance, r.strategy))],
            "aggregates": [asdict(a) for a in self.aggregates()],
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_text(self) -> str:
        lines = ["strategy                    n   red%    perf%"]
        for agg in self.aggregates():
            lines.append(
                f"{agg.strategy:<25} {agg.instances:>3}  "
                f"{100 * agg.mean_reduction_ratio:6.1f}  {100 * agg.mean_performance:6.1f}"
            )
        return "\n".join(lines) + "\n"

    def render_figures(self, directory) -> list[str]:
        """Bar charts of the aggregate columns, written as PNG files."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        from pathlib import Path

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        aggs = self.aggregates()
        names = [a.strategy for a in aggs]
        written = []
        for attr, title, fname in (
            ("mean_reduction_ratio", "Mean reduction ratio", "reduction_ratio.png"),
            ("mean_performance", "Mean performance vs " + self.reference, "performance.png"),
        ):
            values = [100 * getattr(a, attr) for a in aggs]
            fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(names) + 1.5), 3.2))
            ax.bar(range(len(names)), values, color="#4878a8")
            ax.set_xticks(range(len(names)))
            ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
            ax.set_ylabel(title + " (%)")
            ax.set_ylim(0, max(100.0, max(values, default=0.0) * 1.05))
            ax.spines["right"].set_visible(False)
            ax.spines["top"].set_visible(False)
            fig.tight_layout()
            path = directory / fname
            fig.savefig(path, dpi=120)
            plt.close(fig)
            written.append(str(path))
        return written
