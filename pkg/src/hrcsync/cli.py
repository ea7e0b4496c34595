"""Command-line entry point: ``hrcsync <subcommand> [options]``.

Exit codes: 0 success, 2 usage, 3 parse error, 4 validation error,
5 runtime error (including a simulation timeout), 6 acceptance threshold
not met (``gradcheck``).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import formats
from .formats import FormatError
from .gaze import GazePolicy, GazeStreamError, classify_gaze
from .htn import DomainParseError, DomainValidationError, PlanningError, load_domain
from .imu.frames import GapError, assemble_frames, window_stream
from .imu.io import load_dataset, load_weights, save_dataset, save_weights, weights_to_text
from .imu.lstm import LstmParams, classify_window, gradient_check, predict_proba
from .imu.metrics import eval_metrics
from .imu.synth import SynthConfig, synth_dataset
from .imu.training import TrainConfig, TrainingError, gradcheck_case, train
from .sim.compare import compare
from .sim.runner import run_scenario
from .sim.scenario import ScenarioError, ScenarioParseError, load_scenario
from .world import PreconditionViolation

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_THRESHOLD = 0, 2, 3, 4, 5, 6
GRADCHECK_LIMIT = 1e-4
DEFAULT_N_PER_CLASS = 400


class RuntimeFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation: what ran, on which inputs, with which overrides.

    Overrides map one-to-one onto module settings: ``dwell_s`` (gaze dwell),
    ``k`` (consecutive Idle outputs to release a wait), ``stride`` (IMU window
    stride), ``hidden`` (LSTM size H), ``threshold`` (Working probability
    threshold), ``lr`` and ``epochs`` (training).
    """

    subcommand: str
    inputs: dict = field(default_factory=dict)
    out: str | None = None
    channel: str | None = None
    seed: int | None = None
    overrides: dict = field(default_factory=dict)

    OVERRIDES = ("dwell_s", "k", "stride", "hidden", "threshold", "lr", "epochs")

    def __post_init__(self):
        unknown = set(self.overrides) - set(self.OVERRIDES)
        if unknown:
            raise ValueError(f"unknown overrides {sorted(unknown)}")

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        d = vars(ns)
        inputs = {k: d[k] for k in ("scenario", "domain", "trace", "weights", "dataset") if d.get(k) is not None}
        overrides = {k: d[k] for k in cls.OVERRIDES if d.get(k) is not None}
        return cls(ns.command, inputs, d.get("out"), d.get("channel"), d.get("seed"), overrides)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(cfg: RunConfig, **extra):
    o = cfg.overrides
    return load_scenario(
        cfg.inputs.get("scenario"),
        channel=cfg.channel,
        seed=cfg.seed,
        dwell_s=o.get("dwell_s"),
        release_k=o.get("k"),
        stride=o.get("stride"),
        threshold=o.get("threshold"),
        weights=cfg.inputs.get("weights"),
        **extra,
    )


def _params_for(script) -> LstmParams | None:
    if script.classifier.weights is None:
        return None
    return load_weights(script.classifier.weights)


# -- subcommands ----------------------------------------------------------


def cmd_plan(cfg: RunConfig, ns) -> int:
    script = _scenario(cfg, check=False)
    if "domain" in cfg.inputs:
        script = replace(script, domain_text=Path(cfg.inputs["domain"]).read_text())
    domain = load_domain(script.domain_text)
    plan = script.plan()
    out = _outdir(cfg)
    (out / "plan.txt").write_text(plan.dump())
    print(domain.summary())
    print(f"plan: {len(plan)} actions, {plan.count('release')} releases, {plan.count('wait')} waits")
    return EXIT_OK


def cmd_classify(cfg: RunConfig, ns) -> int:
    out = _outdir(cfg)
    trace = Path(cfg.inputs["trace"])
    if cfg.channel == "gaze":
        script = _scenario(cfg, check=False)
        with trace.open() as fh:
            labels = list(classify_gaze(formats.read_gaze_trace(fh), script.aois,
                                        GazePolicy(dwell_s=script.classifier.dwell_s)))
    else:
        script = _scenario(cfg, check=False)
        params = _params_for(script)
        if params is None:
            raise ScenarioError("classify --channel imu needs --weights")
        with trace.open() as fh:
            windows = list(window_stream(assemble_frames(formats.read_imu_trace(fh)), script.classifier.stride))
        labels = []
        if windows:
            probs = predict_proba(params, np.stack([w.frames for w in windows]))
            for w, p in zip(windows, probs):
                t_end = w.start + (len(w.frames) - 1) / 30.0
                labels.append((t_end, classify_window(float(p), script.classifier.threshold)))
    with (out / "labels.txt").open("w") as fh:
        formats.write_labels(fh, labels)
    counts = {}
    for _, lab in labels:
        counts[lab.value] = counts.get(lab.value, 0) + 1
    print(f"{len(labels)} labels: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def cmd_synth(cfg: RunConfig, ns) -> int:
    out = _outdir(cfg)
    data = synth_dataset(cfg.seed, ns.n_per_class, SynthConfig())
    save_dataset(data, out / "dataset.bin")
    (out / "dataset.json").write_text(_dump_json({"config": cfg.to_dict(), "n_per_class": ns.n_per_class,
                                                  "windows": len(data), "generator": SynthConfig().to_dict()}))
    print(f"{len(data)} windows written")
    return EXIT_OK


def _train_config(cfg: RunConfig) -> TrainConfig:
    o = cfg.overrides
    kw = {"seed": cfg.seed}
    for src, dst in (("hidden", "hidden"), ("lr", "lr"), ("epochs", "epochs")):
        if src in o:
            kw[dst] = o[src]
    return TrainConfig(**kw)


def cmd_train(cfg: RunConfig, ns) -> int:
    out = _outdir(cfg)
    if "dataset" in cfg.inputs:
        data = load_dataset(cfg.inputs["dataset"])
    else:
        data = synth_dataset(cfg.seed, ns.n_per_class)
    hyper = _train_config(cfg)
    params, curve = train(data, hyper)
    save_weights(params, out / "weights.lstm")
    (out / "weights.json").write_text(weights_to_text(params))
    (out / "loss.csv").write_text(curve.to_csv())
    (out / "train.json").write_text(_dump_json({
        "config": cfg.to_dict(),
        "hyper": hyper.to_dict(),
        "data": data.meta if "dataset" not in cfg.inputs else {"path": cfg.inputs["dataset"], **data.meta},
        "n_per_class": ns.n_per_class if "dataset" not in cfg.inputs else None,
        "final_loss": curve.epochs[-1],
        "warnings": curve.warnings,
    }))
    for w in curve.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"trained H={hyper.hidden} for {hyper.epochs} epochs, final loss {curve.epochs[-1]:.6g}")
    return EXIT_OK


def cmd_gradcheck(cfg: RunConfig, ns) -> int:
    params, window, label = gradcheck_case(cfg.overrides.get("hidden", 4), cfg.seed, ns.steps)
    if "weights" in cfg.inputs:
        params = load_weights(cfg.inputs["weights"])
    err = gradient_check(params, window, label, epsilon=ns.epsilon)
    ok = err < GRADCHECK_LIMIT
    print(f"max relative error {err:.3e} (H={params.hidden_size}, T={ns.steps}, eps={ns.epsilon:g}) "
          f"{'ok' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_THRESHOLD


def cmd_eval(cfg: RunConfig, ns) -> int:
    params = load_weights(cfg.inputs["weights"])
    if "dataset" in cfg.inputs:
        data = load_dataset(cfg.inputs["dataset"])
    else:
        data = synth_dataset(cfg.seed, ns.n_per_class)
    thr = cfg.overrides.get("threshold", 0.5)
    rep = eval_metrics(params, data, thr)
    d = rep.to_dict()
    out = _outdir(cfg)
    (out / "eval.json").write_text(_dump_json({"config": cfg.to_dict(), "threshold": thr, "report": d}))
    print("  ".join(f"{k} {v if isinstance(v, (int, str)) else f'{v:.4f}'}" for k, v in d.items()))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, ns) -> int:
    o = {} if ns.timeout is None else {"timeout_s": ns.timeout}
    script = _scenario(cfg, **o)
    params = _params_for(script) if script.channel == "imu" else None
    log, report = run_scenario(script, params)
    out = _outdir(cfg)
    (out / "events.log").write_text(log.dumps())
    (out / "metrics.json").write_text(_dump_json({"config": cfg.to_dict(), "scenario": script.resolved(),
                                                  "metrics": report.to_dict()}))
    (out / "metrics.csv").write_text(report.to_csv())
    (out / "metrics.txt").write_text(report.to_table())
    print(report.to_table(), end="")
    if not report.complete:
        raise RuntimeFailure(f"simulation timed out after {script.timeout_s:g} s (partial outputs written)")
    return EXIT_OK


def _seeds(spec: str) -> list[int]:
    seeds = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


def cmd_compare(cfg: RunConfig, ns) -> int:
    script = _scenario(cfg)
    params = _params_for(script)
    if params is None:
        raise ScenarioError("compare runs the imu channel and needs weights")
    seeds = _seeds(ns.seeds)
    table = compare(script, seeds, params, workers=ns.workers)
    out = _outdir(cfg)
    (out / "compare.csv").write_text(table.to_csv())
    (out / "compare.txt").write_text(table.to_table())
    (out / "compare.json").write_text(_dump_json({
        "config": cfg.to_dict(),
        "scenario": {k: v for k, v in script.resolved().items() if k not in ("channel", "seed")},
        "seeds": seeds,
        "rows": table.rows,
        "runs": [dict(r.to_dict()) for r in table.reports.values()],
    }))
    print(table.to_table(), end="")
    return EXIT_OK


def cmd_report(cfg: RunConfig, ns) -> int:
    src = Path(ns.results)
    parts = ["# hrcsync report", ""]
    found = False
    for name, title in (("compare", "Channel comparison"), ("metrics", "Simulation")):
        js = src / f"{name}.json"
        txt = src / f"{name}.txt"
        if not js.exists():
            continue
        found = True
        data = json.loads(js.read_text())
        parts += [f"## {title}", "", "```", txt.read_text().rstrip("\n"), "```", "",
                  "Resolved configuration:", "", "```json",
                  json.dumps({k: data[k] for k in ("config", "scenario") if k in data}, indent=2, sort_keys=True),
                  "```", ""]
    if not found:
        raise FormatError(f"no metrics.json or compare.json in {src}")
    out = _outdir(cfg)
    (out / "report.md").write_text("\n".join(parts))
    print(f"report written to {out / 'report.md'}")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def _common(p: argparse.ArgumentParser, seed_default: int = 0):
    p.add_argument("--out", "-o", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=seed_default, help="the single source of randomness")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hrcsync", description="HTN-driven human-robot synchronisation toolkit")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    def scen(p):
        p.add_argument("--scenario", help="scenario TOML (default: shipped stool scenario)")

    def clf(p):
        p.add_argument("--dwell", dest="dwell_s", type=float, help="gaze dwell time in seconds")
        p.add_argument("--k", type=int, help="consecutive Idle outputs needed to release a wait")
        p.add_argument("--stride", type=int, help="IMU window stride in frames")
        p.add_argument("--threshold", type=float, help="Working probability threshold")
        p.add_argument("--weights", help="LSTM weights file")

    p = sub.add_parser("plan", help="decompose the scenario's root task and dump the plan")
    scen(p)
    p.add_argument("--domain", help="domain file overriding the scenario's")
    p.add_argument("--channel", choices=("gaze", "imu"))
    _common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("classify", help="label a gaze or IMU trace file")
    p.add_argument("--channel", choices=("gaze", "imu"), required=True)
    p.add_argument("trace", help="trace file")
    scen(p)
    clf(p)
    _common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synth", help="write a synthetic labelled IMU dataset")
    p.add_argument("--n-per-class", type=int, default=DEFAULT_N_PER_CLASS)
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the LSTM; writes weights and the loss curve")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--synth", action="store_true", help="train on the synthetic generator (seeded by --seed)")
    g.add_argument("--dataset", help="dataset file from 'synth'")
    p.add_argument("--n-per-class", type=int, default=DEFAULT_N_PER_CLASS)
    p.add_argument("--hidden", type=int, help="hidden size H")
    p.add_argument("--lr", type=float, help="learning rate")
    p.add_argument("--epochs", type=int, help="training epochs")
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("gradcheck", help="compare BPTT gradients with central differences")
    p.add_argument("--weights", help="check these weights instead of a random init")
    p.add_argument("--hidden", type=int, help="hidden size for the random init (default 4)")
    p.add_argument("--steps", type=int, default=500, help="sequence length (default 500)")
    p.add_argument("--epsilon", type=float, default=1e-5)
    _common(p, seed_default=7)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("eval", help="precision, recall and F-score of weights on a dataset")
    p.add_argument("--weights", required=True)
    p.add_argument("--dataset", help="dataset file (default: synthetic held-out set from --seed)")
    p.add_argument("--n-per-class", type=int, default=200)
    p.add_argument("--threshold", type=float)
    _common(p, seed_default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="run one scenario; writes event log and metrics")
    scen(p)
    p.add_argument("--channel", choices=("gaze", "imu"))
    clf(p)
    p.add_argument("--timeout", type=float, help="simulated-time limit in seconds")
    p.add_argument("--out", "-o", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, help="seed (default: the scenario's)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="both channels over several seeds; writes the comparison table")
    scen(p)
    clf(p)
    p.add_argument("--seeds", default="0-9", help="e.g. '0-9' or '1,4,7' (default 0-9)")
    p.add_argument("--workers", type=int, default=1, help="parallel runs (results merged by key)")
    p.add_argument("--out", "-o", default=".", help="output directory (default: current)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render simulate/compare outputs into report.md")
    p.add_argument("results", help="directory holding metrics.json and/or compare.json")
    p.add_argument("--out", "-o", default=".", help="output directory (default: current)")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    if ns.command is None:
        ap.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = RunConfig.from_args(ns)
        return ns.func(cfg, ns)
    except (DomainParseError, FormatError, ScenarioParseError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (PlanningError, TrainingError, RuntimeFailure, GapError, GazeStreamError, PreconditionViolation, OSError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except (DomainValidationError, ScenarioError, ValueError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
