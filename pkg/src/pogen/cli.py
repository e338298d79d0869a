"""Command-line surface: model checking runs, obligation extraction, and
strategy comparison with figure rendering."""

from __future__ import annotations

import random
import sys
from pathlib import Path

import click

from .circuit import AigerError
from .engine import (
    EngineConfig,
    EngineError,
    Safe,
    SoundnessAlarm,
    Unsafe,
    aiger_witness,
    check as engine_check,
    check_portfolio,
    invariant_dimacs,
)
from .formats import (
    ConstraintMode,
    FormatError,
    load_transition_system,
)
from .pogp import brute_force_oracle, dumps_instance, loads_instance, verify_po
from .reports import CompareReport, RunReport
from .strategies import (
    InapplicableStrategyError,
    check_applicable,
    get_strategy,
    parse_strategy_name,
    strategy_names,
)

EXIT_SAFE = 0
EXIT_UNSAFE = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3
EXIT_UNSOUND = 4

CONSTRAINT_MODES = {
    "keep-separate": ConstraintMode.KEEP_SEPARATE,
    "self-loops": ConstraintMode.SELF_LOOPS,
    "dead-end": ConstraintMode.DEAD_END,
    "reject": ConstraintMode.REJECT,
}


@click.group()
def main() -> None:
    """Bit-level PDR model checking with pluggable obligation generalization."""


def _load(file: str, fmt: str | None, constraint_mode: str):
    mode = CONSTRAINT_MODES[constraint_mode]
    return load_transition_system(file, fmt, mode)


@main.command("check")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["aiger", "dimspec"]), default=None)
@click.option("--strategy", default="lifting", show_default=True)
@click.option("--mode", type=click.Choice(["fix", "free"]), default="fix", show_default=True)
@click.option("--reverse", is_flag=True, help="Run over the reverted transition relation.")
@click.option(
    "--constraint-mode",
    type=click.Choice(sorted(CONSTRAINT_MODES)),
    default="keep-separate",
    show_default=True,
)
@click.option("--portfolio", default=None, help="Comma-separated strategies run concurrently.")
@click.option("--seed", type=int, envvar="POGEN_SEED", default=None)
@click.option("--max-frames", type=int, default=None)
@click.option("--max-obligations", type=int, default=None)
@click.option(
    "--lifting-variant",
    type=click.Choice(["auto", "plain", "extended"]),
    default="auto",
    show_default=True,
)
@click.option("--unsafe", "allow_unsound", is_flag=True, help="Run strategies whose applicability check fails.")
@click.option("--no-po-push", is_flag=True, help="Do not re-enqueue discharged obligations forward.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--report-format", type=click.Choice(["json", "csv", "text"]), default=None)
@click.option("--witness", "witness_path", type=click.Path(dir_okay=False), default=None)
def cmd_check(
    file,
    fmt,
    strategy,
    mode,
    reverse,
    constraint_mode,
    portfolio,
    seed,
    max_frames,
    max_obligations,
    lifting_variant,
    allow_unsound,
    no_po_push,
    report_path,
    report_format,
    witness_path,
):
    """Model-check FILE and report the verdict (exit 0 safe, 1 unsafe, 2 unknown)."""
    try:
        ts = _load(file, fmt, constraint_mode)
    except (AigerError, FormatError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)

    def make_config(name: str) -> EngineConfig:
        base, parsed_mode = parse_strategy_name(name)
        eff_mode = "free" if (parsed_mode == "free" or mode == "free") else "fix"
        return EngineConfig(
            strategy=base,
            mode=eff_mode,
            reverse=reverse,
            po_push=not no_po_push,
            max_frames=max_frames,
            max_obligations=max_obligations,
            lifting_variant=lifting_variant,
            allow_unsound=allow_unsound,
        )

    names = [s.strip() for s in portfolio.split(",")] if portfolio else [strategy]
    from .formats import reverse as reverse_fn

    effective = reverse_fn(ts) if reverse and ts.constraint is None else ts
    for name in names:
        base, parsed_mode = parse_strategy_name(name)
        eff_mode = "free" if (parsed_mode == "free" or mode == "free") else "fix"
        app = check_applicable(base, effective, eff_mode, lifting_variant)
        if not app.ok and not allow_unsound:
            click.echo(
                f"error: strategy {name!r} is not applicable to this system: "
                f"requires {app.missing}"
                + (f" ({app.detail})" if app.detail else ""),
                err=True,
            )
            sys.exit(EXIT_ERROR)

    try:
        if len(names) > 1:
            winner, verdict = check_portfolio(ts, [make_config(n) for n in names])
            used = names[winner]
        else:
            verdict = engine_check(ts, make_config(names[0]))
            used = names[0]
    except SoundnessAlarm as exc:
        click.echo(f"unsound generalization detected: {exc}", err=True)
        sys.exit(EXIT_UNSOUND)
    except (EngineError, InapplicableStrategyError, FormatError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)

    report = RunReport.from_verdict(
        verdict,
        file=str(file),
        format=fmt or ("dimspec" if ts.origin == "dimspec" else "aiger"),
        strategy=used,
        mode=mode,
        reverse=reverse,
        constraint_mode=constraint_mode,
        seed=seed,
    )
    if report_path:
        out_fmt = report_format or _sniff_format(report_path)
        Path(report_path).write_text(report.render(out_fmt))
    click.echo(report.to_text(), nl=False)
    if witness_path:
        if isinstance(verdict, Unsafe):
            Path(witness_path).write_text(aiger_witness(ts, verdict.trace))
        elif isinstance(verdict, Safe):
            Path(witness_path).write_text(invariant_dimacs(verdict.invariant))
    sys.exit(verdict.exit_code)


def _sniff_format(path: str) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        return "json"
    if suffix == ".csv":
        return "csv"
    return "text"


@main.command("extract")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["aiger", "dimspec"]), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="pogps",
              show_default=True)
@click.option("--strategy", default="lifting", show_default=True,
              help="Baseline generalization driving the run.")
@click.option(
    "--constraint-mode",
    type=click.Choice(sorted(CONSTRAINT_MODES)),
    default="keep-separate",
    show_default=True,
)
@click.option("--reverse", is_flag=True)
@click.option("--filter", "filter_", type=click.Choice(["none", "oracle"]), default="none",
              show_default=True, help="Keep only instances the oracle can shrink.")
@click.option("--oracle-bound", type=int, default=12, show_default=True)
@click.option("--sample", type=int, default=None, help="Randomly keep at most N instances.")
@click.option("--seed", type=int, envvar="POGEN_SEED", default=0, show_default=True)
@click.option("--max-frames", type=int, default=None)
def cmd_extract(
    file, fmt, out_dir, strategy, constraint_mode, reverse, filter_, oracle_bound,
    sample, seed, max_frames,
):
    """Run the engine on FILE and write one .pogp file per obligation."""
    try:
        ts = _load(file, fmt, constraint_mode)
    except (AigerError, FormatError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    collected = []
    cfg = EngineConfig(
        strategy=strategy,
        reverse=reverse,
        max_frames=max_frames,
        extract_hook=collected.append,
    )
    try:
        engine_check(ts, cfg)
    except (EngineError, InapplicableStrategyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)

    kept = []
    for inst in collected:
        inst.validate()
        if filter_ == "oracle":
            if len(inst.ts.state_vars) > oracle_bound:
                continue
            if brute_force_oracle(inst, bound=oracle_bound).removed < 1:
                continue
        kept.append(inst)
    if sample is not None and len(kept) > sample:
        rng = random.Random(seed)
        kept = [kept[i] for i in sorted(rng.sample(range(len(kept)), sample))]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for idx, inst in enumerate(kept):
        (out / f"pogp-{idx:05d}.pogp").write_text(dumps_instance(inst))
    click.echo(f"{len(kept)}")


@main.command("compare")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--strategies", default=None,
              help="Comma-separated strategy names (default: every applicable one).")
@click.option("--oracle-bound", type=int, default=12, show_default=True,
              help="Enumeration bound for the soundness cross-check.")
@click.option("--out", "out_csv", type=click.Path(dir_okay=False), default="compare.csv",
              show_default=True)
@click.option("--json", "out_json", type=click.Path(dir_okay=False), default=None)
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render aggregate bar charts beside the CSV.")
@click.option("--seed", type=int, envvar="POGEN_SEED", default=0, show_default=True)
def cmd_compare(directory, strategies, oracle_bound, out_csv, out_json, figures, seed):
    """Replay every .pogp instance under DIRECTORY through the strategies."""
    import time as time_mod

    paths = sorted(Path(directory).glob("*.pogp"))
    if not paths:
        click.echo("error: no .pogp instances found", err=True)
        sys.exit(EXIT_ERROR)
    wanted = None
    if strategies:
        wanted = [s.strip() for s in strategies.split(",") if s.strip()]
        for name in wanted:
            base, _ = parse_strategy_name(name)
            if base not in strategy_names():
                click.echo(f"error: unknown strategy {name!r}", err=True)
                sys.exit(EXIT_ERROR)
    report = CompareReport()
    loaded = 0
    for path in paths:
        try:
            inst = loads_instance(path.read_text())
            inst.validate()
        except Exception as exc:  # noqa: BLE001 - skip unreadable, warn
            click.echo(f"warning: skipping {path.name}: {exc}", err=True)
            continue
        loaded += 1
        ts = inst.ts
        names = wanted or strategy_names()
        reference = get_strategy("max-qbf", ts).generalize(inst)
        ref_check = verify_po(ts, reference.cube, inst.d_next)
        if not ref_check.sound:
            click.echo(
                f"error: reference strategy unsound on {path.name}", err=True
            )
            sys.exit(EXIT_UNSOUND)
        for name in names:
            base, mode = parse_strategy_name(name)
            if not check_applicable(base, ts, mode).ok:
                if wanted:
                    click.echo(
                        f"warning: {name} not applicable to {path.name}", err=True
                    )
                continue
            strat = get_strategy(base, ts, mode=mode)
            started = time_mod.perf_counter()
            result = strat.generalize(inst)
            elapsed = time_mod.perf_counter() - started
            frame = inst.frame if mode == "free" else None
            sound = verify_po(ts, result.cube, inst.d_next, with_frame=frame).sound
            if not sound:
                click.echo(
                    f"error: strategy {name} produced an unsound result on "
                    f"{path.name}",
                    err=True,
                )
                sys.exit(EXIT_UNSOUND)
            report.add(
                instance=path.name,
                strategy=name,
                mode=mode,
                removed=result.removed,
                total=len(ts.state_vars),
                removed_reference=reference.removed,
                time_s=elapsed,
                sound=sound,
            )
    if not loaded:
        click.echo("error: every instance was unreadable", err=True)
        sys.exit(EXIT_ERROR)
    Path(out_csv).write_text(report.to_csv())
    if out_json:
        Path(out_json).write_text(report.to_json())
    if figures:
        written = report.render_figures(Path(out_csv).parent or Path("."))
        for w in written:
            click.echo(f"figure: {w}")
    click.echo(report.to_text(), nl=False)


if __name__ == "__main__":
    main()
