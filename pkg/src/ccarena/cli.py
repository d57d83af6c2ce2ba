"""Command-line front end: ``ccarena run|sweep|dump-scenario|summarize``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import cc as ccmod
from .metrics import (REPORT_HEADER, format_cadence, parse_cadence, summary_rows, write_run_csv,
                      write_summary_csv, write_trace)
from .scenarios import (PAPER_BUFFERS, PROFILES, Scenario, ScenarioError, SweepSpec, build_exp1,
                        build_exp2, dump_scenario, load_scenario, run_scenario, run_sweep)

log = logging.getLogger("ccarena")

DEFAULT_OUT = "ccarena-out"
MISSING = "—"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    scenario: str = "exp2"
    variant: Optional[str] = None
    buffer: Optional[int] = None
    duration: Optional[float] = None
    seed: int = 0
    profile: str = "homogeneous"
    scale: float = 1.0
    out: Path = Path(DEFAULT_OUT)
    overrides: dict[str, str] = field(default_factory=dict)
    trace_cadence: "str | float" = "per-ack"
    trace: bool = True
    variants: list[str] = field(default_factory=list)
    buffers: list[int] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    workers: int = 1
    file: Optional[Path] = None
    inputs: list[Path] = field(default_factory=list)


def _parse_set(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    try:
        ccmod.validate_overrides(out)
    except ccmod.UnknownParameter as exc:
        raise UsageError(f"unknown parameter key {exc.args[0]!r}; known keys: "
                         + ", ".join(ccmod.known_keys())) from None
    for key, value in out.items():
        try:
            ccmod.variant_params(key.split(".", 1)[0], {key: value})
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {exc}") from None
    return out


def _check_variant(name: str) -> str:
    if name not in ccmod.REGISTRY:
        raise UsageError(f"unknown variant {name!r}; choose from {', '.join(ccmod.VARIANTS)}")
    return name


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccarena", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, single: bool):
        sp.add_argument("--duration", type=float, help="simulated seconds")
        sp.add_argument("--scale", type=float, default=1.0,
                        help="multiply link rates and queue sizes (0.1 gives 100 Mbps links)")
        sp.add_argument("--out", type=Path, help="output directory (default $CC_ARENA_OUT or "
                                                 f"./{DEFAULT_OUT})")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="variant parameter override, e.g. cubic.beta=0.3")
        if single:
            sp.add_argument("--scenario", default="exp2",
                            help="exp1, exp2 or a scenario file")
            sp.add_argument("--variant")
            sp.add_argument("--buffer", type=int, help="bottleneck buffer in packets")
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--profile", choices=PROFILES, default="homogeneous")

    run = sub.add_parser("run", help="run one scenario")
    common(run, single=True)
    run.add_argument("--trace-cadence", default="per-ack",
                     help="per-ack or interval:<ms>")
    run.add_argument("--no-trace", action="store_true", help="skip cwnd trace files")

    sweep = sub.add_parser("sweep", help="run the buffer sweep of the shared-bottleneck experiment")
    common(sweep, single=False)
    sweep.add_argument("--variants", default=",".join(ccmod.VARIANTS))
    sweep.add_argument("--buffers", default=",".join(map(str, PAPER_BUFFERS)))
    sweep.add_argument("--profile", choices=[*PROFILES, "both"], default="homogeneous")
    sweep.add_argument("--seed", type=int, default=None, help="single seed (default 0)")
    sweep.add_argument("--seeds", default=None, help="comma-separated seeds")
    sweep.add_argument("--workers", type=int, default=1)

    dump = sub.add_parser("dump-scenario", help="write a built-in scenario to a file")
    common(dump, single=True)
    dump.add_argument("--file", type=Path, required=True)

    summ = sub.add_parser("summarize", help="print per-buffer comparison panels")
    summ.add_argument("inputs", nargs="+", type=Path, help="summary CSV files")
    return p


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parse and validate ``argv``; raises ``UsageError`` or ``SystemExit``."""
    ns = build_parser().parse_args(argv)
    if getattr(ns, "verbose", False):
        logging.basicConfig(level=logging.INFO)
    cfg = RunConfig(command=ns.command)
    if ns.command == "summarize":
        cfg.inputs = list(ns.inputs)
        return cfg
    cfg.duration = ns.duration
    if cfg.duration is not None and cfg.duration <= 0:
        raise UsageError("--duration must be positive")
    cfg.scale = ns.scale
    if cfg.scale <= 0:
        raise UsageError("--scale must be positive")
    cfg.overrides = _parse_set(ns.set)
    out = ns.out or Path(os.environ.get("CC_ARENA_OUT") or DEFAULT_OUT)
    cfg.out = Path(out)
    if ns.command == "sweep":
        cfg.variants = [_check_variant(v) for v in ns.variants.split(",") if v]
        cfg.buffers = _int_list(ns.buffers)
        if any(b < 1 for b in cfg.buffers):
            raise UsageError("buffers must be positive")
        cfg.profile = ns.profile
        if ns.seeds is not None:
            cfg.seeds = _int_list(ns.seeds)
        else:
            cfg.seeds = [0 if ns.seed is None else ns.seed]
        cfg.workers = max(1, ns.workers)
        return cfg
    cfg.scenario = ns.scenario
    cfg.variant = _check_variant(ns.variant) if ns.variant else None
    cfg.buffer = ns.buffer
    if cfg.buffer is not None and cfg.buffer < 1:
        raise UsageError("--buffer must be at least 1")
    cfg.seed = ns.seed
    cfg.profile = ns.profile
    if ns.command == "run":
        try:
            cfg.trace_cadence = parse_cadence(ns.trace_cadence)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        cfg.trace = not ns.no_trace
    else:
        cfg.file = ns.file
    if cfg.scenario not in ("exp1", "exp2") and not Path(cfg.scenario).is_file():
        raise UsageError(f"scenario {cfg.scenario!r} is neither exp1, exp2 nor a readable file")
    if cfg.command == "dump-scenario" and cfg.scenario not in ("exp1", "exp2"):
        raise UsageError("dump-scenario needs a built-in scenario (exp1 or exp2)")
    return cfg


def scenario_from_config(cfg: RunConfig) -> Scenario:
    if cfg.scenario == "exp1":
        if not cfg.variant:
            raise UsageError("--variant is required")
        kw = {"buffer_pkts": cfg.buffer} if cfg.buffer else {}
        sc = build_exp1(cfg.variant, scale=cfg.scale, duration=cfg.duration or 100.0,
                        seed=cfg.seed, params=cfg.overrides, **kw)
    elif cfg.scenario == "exp2":
        if not cfg.variant:
            raise UsageError("--variant is required")
        if cfg.buffer is None:
            raise UsageError("--buffer is required for exp2")
        sc = build_exp2(cfg.variant, cfg.buffer, cfg.profile, scale=cfg.scale,
                        duration=cfg.duration or 100.0, seed=cfg.seed, params=cfg.overrides)
    else:
        if cfg.buffer is not None:
            raise UsageError("--buffer cannot be combined with a scenario file")
        try:
            sc = load_scenario(cfg.scenario)
        except ScenarioError as exc:
            raise UsageError(str(exc)) from None
        if cfg.variant:
            for f in sc.flows:
                f.variant = cfg.variant
        if cfg.duration:
            sc.duration = cfg.duration
        sc.params.update(cfg.overrides)
    if cfg.command == "run":
        sc.trace_cadence = cfg.trace_cadence
    return sc


def _ensure_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {path}: {exc}") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def run_tag(variant: str, buffer_pkts: int, profile: str, seed: int) -> str:
    return f"{variant}_b{buffer_pkts}_{profile}_s{seed}"


def cmd_run(cfg: RunConfig) -> int:
    sc = scenario_from_config(cfg)
    out = _ensure_out(cfg.out)
    result = run_scenario(sc, trace=cfg.trace)
    tag = run_tag(sc.variant, sc.buffer_pkts, sc.rtt_profile, sc.seed)
    write_run_csv(out / f"metrics_{tag}.csv", result.report)
    write_summary_csv(out / "summary.csv", summary_rows([result.report]))
    if cfg.trace:
        for fid, points in sorted(result.traces.items()):
            write_trace(out / f"trace_{tag}_flow{fid}.tsv", points)
    r = result.report
    print(f"{sc.name} {sc.variant} buffer={sc.buffer_pkts} profile={sc.rtt_profile}: "
          f"aggregate {r.aggregate_throughput:.2f} Mbps, loss ratio {r.loss_ratio:.4f}, "
          f"trace cadence {format_cadence(sc.trace_cadence)} -> {out}")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    out = _ensure_out(cfg.out)
    profiles = list(PROFILES) if cfg.profile == "both" else [cfg.profile]
    spec = SweepSpec(variants=cfg.variants, buffers=cfg.buffers, profiles=profiles,
                     seeds=cfg.seeds, scale=cfg.scale, duration=cfg.duration or 100.0,
                     params=cfg.overrides, workers=cfg.workers)
    result = run_sweep(spec)
    for report in result.reports:
        tag = run_tag(report.variant, report.buffer_pkts, report.rtt_profile, report.seed)
        write_run_csv(out / f"metrics_{tag}.csv", report)
    write_summary_csv(out / "summary.csv", summary_rows(result.reports))
    print(f"{len(result.reports)} runs completed, {len(result.failures)} failed -> {out}")
    for run, err in result.failures:
        print(f"failed: {run}: {err}", file=sys.stderr)
    return 0 if not result.failures else 1


def cmd_dump(cfg: RunConfig) -> int:
    sc = scenario_from_config(cfg)
    if cfg.file.parent and not cfg.file.parent.exists():
        raise UsageError(f"directory {cfg.file.parent} does not exist")
    dump_scenario(sc, cfg.file)
    print(f"wrote {cfg.file}")
    return 0


# -- summarize -------------------------------------------------------------------

PANEL_COLUMNS = [("throughput_mbps", "Throughput"), ("loss_ratio", "LossRatio"),
                 ("intra_fair", "Intra-fair"), ("rtt_fair", "RTT-fair")]


def read_summaries(paths: Sequence[Path]) -> dict[tuple[str, int], dict]:
    """Collect summary rows keyed by (variant, buffer); later files win."""
    cells: dict[tuple[str, int], dict] = {}
    for path in paths:
        try:
            fh = open(path, newline="")
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from None
        with fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not set(REPORT_HEADER) <= set(reader.fieldnames):
                raise UsageError(f"{path} is not a summary CSV (expected columns "
                                 f"{','.join(REPORT_HEADER)})")
            for row in reader:
                key = (row["variant"], int(row["buffer_pkts"]))
                if key in cells:
                    log.warning("duplicate cell %s/%s in %s; keeping the latest", key[0],
                                key[1], path)
                cells[key] = row
    return cells


def _fmt(text: Optional[str]) -> str:
    if text is None or text == "":
        return MISSING
    return f"{float(text):.2f}"


def format_panels(cells: dict[tuple[str, int], dict]) -> str:
    if not cells:
        raise UsageError("no report rows found")
    lines = []
    width = max(len("Variant"), *(len(v) for v, _ in cells))
    for buffer_pkts in sorted({b for _, b in cells}):
        lines.append(f"{buffer_pkts} pckts buffer")
        header = "Variant".ljust(width) + "".join(f"  {name:>10}" for _, name in PANEL_COLUMNS)
        lines.append(header)
        lines.append("-" * len(header))
        for variant in sorted(v for v, b in cells if b == buffer_pkts):
            row = cells[(variant, buffer_pkts)]
            lines.append(variant.ljust(width) + "".join(f"  {_fmt(row.get(col)):>10}"
                                                        for col, _ in PANEL_COLUMNS))
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def cmd_summarize(cfg: RunConfig) -> int:
    sys.stdout.write(format_panels(read_summaries(cfg.inputs)))
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "dump-scenario": cmd_dump,
            "summarize": cmd_summarize}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = parse_args(argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"ccarena: error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, ccmod.UnknownVariant, ccmod.UnknownParameter) as exc:
        print(f"ccarena: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
