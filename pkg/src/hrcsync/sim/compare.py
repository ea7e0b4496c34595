"""Gaze versus IMU on identical scripts: idle and assembly-time statistics."""

from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from ..imu.lstm import LstmParams
from .runner import EventLog, MetricsReport, run_scenario
from .scenario import CHANNELS, ScenarioScript

COLUMNS = ("idle_mean_s", "idle_sd_s", "total_mean_s", "total_sd_s")


def _mean(xs):
    return statistics.fmean(xs) if xs else None


def _sd(xs):
    # sample SD; undefined for fewer than two values
    return statistics.stdev(xs) if len(xs) >= 2 else None


@dataclass
class ComparisonTable:
    rows: dict[str, dict[str, float | None]]
    reports: dict[tuple[int, str], MetricsReport]
    seeds: list[int]
    logs: dict[tuple[int, str], EventLog] = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["channel," + ",".join(COLUMNS)]
        for ch, stats in self.rows.items():
            lines.append(ch + "," + ",".join("undefined" if stats[c] is None else repr(stats[c]) for c in COLUMNS))
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        head = f"{'channel':<8}" + "".join(f"{c:>14}" for c in COLUMNS)
        lines = [head, "-" * len(head)]
        for ch, stats in self.rows.items():
            cells = "".join(f"{'undefined':>14}" if stats[c] is None else f"{stats[c]:>14.3f}" for c in COLUMNS)
            lines.append(f"{ch:<8}{cells}")
        lines.append(f"seeds: {', '.join(map(str, self.seeds))}")
        incomplete = sorted(k for k, r in self.reports.items() if not r.complete)
        if incomplete:
            lines.append(f"incomplete runs: {incomplete}")
        return "\n".join(lines) + "\n"


def _one(args):
    script, params, seed, channel, keep = args
    s = script.with_overrides(seed=seed, channel=channel)
    log, report = run_scenario(s, params if channel == "imu" else None)
    return (seed, channel), (report, log if keep else None)


def summarise(reports: dict, seeds) -> dict[str, dict[str, float | None]]:
    """Per-channel statistics over ``seeds``; idle pools every wait of every seed."""
    rows = {}
    for ch in CHANNELS:
        reps = [reports[(s, ch)] for s in seeds]
        idle = [d for r in reps for d in r.idle]
        totals = [r.total_time for r in reps]
        rows[ch] = {
            "idle_mean_s": _mean(idle),
            "idle_sd_s": _sd(idle),
            "total_mean_s": _mean(totals),
            "total_sd_s": _sd(totals),
        }
    return rows


def compare(
    script: ScenarioScript,
    seeds,
    params: LstmParams | None,
    *,
    workers: int = 1,
    keep_logs: bool = False,
) -> ComparisonTable:
    """Run every (seed, channel) pair and summarise per channel.

    Idle statistics pool every wait of every seed; assembly-time statistics
    are over seeds. With ``workers > 1`` runs go to a process pool and are
    merged by key, so the table does not depend on completion order.
    ``keep_logs`` retains each run's event log on the table.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("compare needs at least one seed")
    jobs = [(script, params, seed, ch, keep_logs) for seed in seeds for ch in CHANNELS]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = dict(ex.map(_one, jobs))
    else:
        results = dict(map(_one, jobs))
    keys = sorted(results)
    reports = {k: results[k][0] for k in keys}
    logs = {k: results[k][1] for k in keys} if keep_logs else {}
    return ComparisonTable(summarise(reports, seeds), reports, seeds, logs)
