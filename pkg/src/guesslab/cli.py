"""Command line front end.

Every verb that writes a report embeds a run manifest (tool, version, verb,
seed, parameters) in the output: as a ``#``-prefixed comment line on CSV, as
a ``manifest`` key on JSON, and as the first line of JSONL traces.  Outputs
carry no timestamps, so rerunning a verb with identical arguments and seed
reproduces files byte for byte.

Seeds resolve in order: ``--seed``, then the ``GUESSLAB_SEED`` environment
variable, then zero.

Exit codes: 0 on success, 1 on domain or input errors (including refusal to
overwrite without ``--force`` and malformed JSON, reported with line and
column), 2 on command line usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cpc_sim.harness import (
    CalibrationConfig,
    RotationFamily,
    gate_sequence_error,
    run_calibration,
    sample_size_experiment,
)
from .cpc_sim.instrument import Instrument
from .cpc_sim.tmp import TMP, ProgramTable, run_program
from .errors import GuesslabError
from .linalg import random_unitary, rotation_matrix
from .petri_net import (
    Marking,
    SchedulerPolicy,
    Token,
    analyze,
    coarsen_colors,
    decode_color,
    deserialize_net,
    encode_color,
    marking_from_json,
    marking_to_json,
    refine_colors,
    serialize_net,
    simulate,
)
from .qm_model import (
    OutcomeRecord,
    PhaseAssignment,
    construct_fitting_model,
    construct_orthogonal_pair,
    model_to_json_obj,
)
from .stat_distance import (
    CommandWeights,
    min_sample_size,
    statistical_distance,
    weighted_model_distance,
)


class CliError(Exception):
    """An input problem reported on stderr with exit code 1."""


# ---------------------------------------------------------------------------
# small shared helpers
# ---------------------------------------------------------------------------

def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    try:
        return int(os.environ.get("GUESSLAB_SEED", "0"))
    except ValueError as exc:
        raise CliError(f"GUESSLAB_SEED is not an integer: {exc}") from None


def _load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(str(exc)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(
            f"invalid JSON in {path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None


def _prepare_out(path: str | None, force: bool) -> Path | None:
    if path is None:
        return None
    out = Path(path)
    if out.exists() and not force:
        raise CliError(f"refusing to overwrite {out} (pass --force)")
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(verb: str, seed: int, **parameters) -> dict:
    return {
        "tool": "guesslab",
        "version": __version__,
        "verb": verb,
        "seed": seed,
        "parameters": parameters,
    }


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _csv_text(manifest: dict, header: list[str], rows: list[list]) -> str:
    buffer = io.StringIO()
    buffer.write("# " + _canonical(manifest) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_cell(cell) for cell in row])
    return buffer.getvalue()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        print(f"wrote {out}")


def _emit_json(payload: dict, out: Path | None) -> None:
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise CliError(f"expected comma-separated numbers, got {text!r}: {exc}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise CliError(f"expected comma-separated integers, got {text!r}: {exc}") from None


def _figure_path(out: Path | None, enabled: bool, force: bool) -> Path | None:
    if out is None or not enabled:
        return None
    fig = out.with_suffix(".png")
    if fig == out:
        fig = out.with_name(out.name + ".png")
    if fig.exists() and not force:
        raise CliError(f"refusing to overwrite {fig} (pass --force)")
    return fig


# ---------------------------------------------------------------------------
# net verbs
# ---------------------------------------------------------------------------

def _cmd_net_validate(args) -> int:
    net = deserialize_net(_load_json(args.net))
    seed = _resolve_seed(args.seed)
    payload = {
        "manifest": _manifest("net-validate", seed, net=args.net),
        "ok": True,
        "states": sorted(net.states),
        "inputs": sorted(net.inputs),
        "outputs": sorted(net.outputs),
        "events": sorted(net.events),
        "color_count": len({c for s in net.all_state_ids() for c in net.color_set(s)}),
    }
    _emit_json(payload, _prepare_out(args.out, args.force))
    return 0


def _parse_injections(specs: list[str]) -> dict[int, list[tuple[str, str]]]:
    injections: dict[int, list[tuple[str, str]]] = {}
    for spec in specs or []:
        parts = spec.split(":", 2)
        if len(parts) != 3:
            raise CliError(f"bad --inject {spec!r}, expected STEP:STATE:COLOR")
        try:
            step = int(parts[0])
        except ValueError:
            raise CliError(f"bad --inject step in {spec!r}") from None
        injections.setdefault(step, []).append((parts[1], parts[2]))
    return injections


def _cmd_net_simulate(args) -> int:
    net = deserialize_net(_load_json(args.net))
    seed = _resolve_seed(args.seed)
    marking = marking_from_json(_load_json(args.marking)) if args.marking else Marking()
    priority = tuple(args.priority.split(",")) if args.priority else ()
    policy = SchedulerPolicy(kind=args.policy, priority=priority, seed=seed)
    injections = _parse_injections(args.inject)
    result = simulate(net, marking, args.steps, policy, injections,
                      drain_outputs=not args.keep_outputs)
    manifest = _manifest(
        "net-simulate", seed, net=args.net, steps=args.steps, policy=args.policy,
        priority=list(priority), inject=sorted(args.inject or []),
    )
    if args.out:
        out = _prepare_out(args.out, args.force)
        lines = [_canonical({"manifest": manifest})]
        lines += [_canonical(row) for row in result.trace]
        out.write_text("\n".join(lines) + "\n")
        print(f"wrote {out}")
    payload = {
        "manifest": manifest,
        "fired": dict(sorted(result.fired_counts.items())),
        "final_marking": marking_to_json(result.marking),
        "trace_rows": len(result.trace),
    }
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_net_analyze(args) -> int:
    net = deserialize_net(_load_json(args.net))
    seed = _resolve_seed(args.seed)
    initial = [s for s in (args.initial.split(",") if args.initial else []) if s]
    result = analyze(net, initial, bound=args.bound)
    reachable = sorted(sorted(m) for m in result.reachable)
    payload = {
        "manifest": _manifest("net-analyze", seed, net=args.net,
                              initial=sorted(initial), bound=args.bound),
        "reachable_count": len(reachable),
        "reachable": reachable if len(reachable) <= args.max_listed else None,
        "live_events": sorted(result.live_events),
        "dead_events": sorted(result.dead_events),
        "contact_pairs": [
            {"marking": sorted(marking), "event": eid}
            for marking, eid in result.contact_pairs
        ],
    }
    _emit_json(payload, _prepare_out(args.out, args.force))
    return 0


def _cmd_net_refine(args) -> int:
    net = deserialize_net(_load_json(args.net))
    seed = _resolve_seed(args.seed)
    raw = _load_json(args.partition)
    if not isinstance(raw, dict):
        raise CliError("partition file must map state ids to lists of color blocks")
    partition = {
        state: [[decode_color(c) for c in block] for block in blocks]
        for state, blocks in raw.items()
    }
    result = refine_colors(net, partition)
    payload = {
        "manifest": _manifest("net-refine", seed, net=args.net, partition=args.partition),
        "net": serialize_net(result.net),
        "event_map": dict(sorted(result.event_map.items())),
    }
    _emit_json(payload, _prepare_out(args.out, args.force))
    return 0


def _cmd_net_coarsen(args) -> int:
    net = deserialize_net(_load_json(args.net))
    seed = _resolve_seed(args.seed)
    payload = {
        "manifest": _manifest("net-coarsen", seed, net=args.net),
        "net": serialize_net(coarsen_colors(net)),
    }
    _emit_json(payload, _prepare_out(args.out, args.force))
    return 0


# ---------------------------------------------------------------------------
# model verbs
# ---------------------------------------------------------------------------

def _cmd_fit_models(args) -> int:
    record = OutcomeRecord.from_json_obj(_load_json(args.record))
    seed = _resolve_seed(args.seed)
    if args.phases == "random":
        phases = PhaseAssignment.random(np.random.default_rng(seed))
    else:
        phases = PhaseAssignment.zero()
    if args.orthogonal_pair:
        models = list(construct_orthogonal_pair(record, args.eigenspace_dim))
    else:
        models = [construct_fitting_model(record, phases, args.padding_dim)]
    weights = CommandWeights.uniform(record.commands)
    residuals = [weighted_model_distance(m, record, weights) for m in models]
    payload = {
        "manifest": _manifest(
            "fit-models", seed, record=args.record, phases=args.phases,
            padding_dim=args.padding_dim, orthogonal_pair=args.orthogonal_pair,
            eigenspace_dim=args.eigenspace_dim,
        ),
        "models": [model_to_json_obj(m) for m in models],
        "residuals": residuals,
    }
    _emit_json(payload, _prepare_out(args.out, args.force))
    return 0


def _cmd_distance(args) -> int:
    d = statistical_distance(_floats(args.p), _floats(args.q))
    print(f"{d:.7f}")
    return 0


# ---------------------------------------------------------------------------
# experiment verbs
# ---------------------------------------------------------------------------

def _cmd_sample_size(args) -> int:
    epsilons = _floats(args.epsilons)
    seed = _resolve_seed(args.seed)
    manifest = _manifest(
        "sample-size", seed, epsilons=epsilons, empirical=args.empirical,
        power=args.power, repetitions=args.repetitions, max_n=args.max_n,
    )
    out = _prepare_out(args.out, args.force)
    if not args.empirical:
        rows = [[eps, min_sample_size(eps)] for eps in epsilons]
        _emit(_csv_text(manifest, ["epsilon", "n_bound"], rows), out)
        return 0
    result = sample_size_experiment(
        epsilons, power_target=args.power, repetitions=args.repetitions,
        seed=seed, max_n=args.max_n,
    )
    rows = [
        [r.epsilon, r.n_bound, r.n_empirical, r.power, r.saturated]
        for r in result.rows
    ]
    header = ["epsilon", "n_bound", "n_empirical", "power", "saturated"]
    _emit(_csv_text(manifest, header, rows), out)
    figure = _figure_path(out, not args.no_figure, args.force)
    if figure is not None:
        from .plots import sample_size_figure
        sample_size_figure(result, figure)
        print(f"wrote {figure}")
    return 0


def _cmd_calibrate(args) -> int:
    cfg = _load_json(args.config)
    if not isinstance(cfg, dict):
        raise CliError("calibration config must be a JSON object")
    seed = _resolve_seed(args.seed)
    family = RotationFamily(bits=int(cfg.get("family_bits", 12)))
    target_angle = float(cfg.get("target_angle", 0.8))
    offset = float(cfg.get("offset", 0.3))
    schedule = tuple(float(e) for e in cfg.get("schedule", [0.2, 0.1, 0.05]))
    factor = int(cfg.get("budget_factor", 8))
    config = CalibrationConfig(
        target_gate=rotation_matrix(target_angle),
        command_family=family.command,
        gate_model=family.gate_model(),
        epsilon_schedule=schedule,
        budget_rule=lambda eps: factor * min_sample_size(eps),
        guess_policy=cfg.get("policy", "coordinate-descent"),
        seed=seed,
        initial_theta=tuple(float(t) for t in cfg.get("initial_theta", [0.0])),
        initial_step=float(cfg.get("initial_step", 0.4)),
        max_evals_per_stage=int(cfg.get("max_evals_per_stage", 60)),
    )
    instrument = Instrument(family.instrument_model(offset), seed)
    report = run_calibration(config, instrument)

    manifest = _manifest(
        "calibrate", seed, config=args.config, family_bits=family.bits,
        target_angle=target_angle, offset=offset, schedule=list(schedule),
        budget_factor=factor, policy=config.guess_policy,
    )
    header = ["stage", "epsilon", "budget", "trials_used", "evaluations",
              "theta", "achieved_distance", "model_predicted_distance",
              "calibrated", "passed"]
    rows = []
    for i, stage in enumerate(report.stages, start=1):
        theta_cell = ";".join(f"{t:.9f}" for t in stage.theta)
        rows.append([i, stage.epsilon, stage.budget, stage.trials_used,
                     stage.evaluations, theta_cell, stage.achieved_distance,
                     stage.model_predicted_distance, stage.calibrated, stage.passed])
    out = _prepare_out(args.out, args.force)
    _emit(_csv_text(manifest, header, rows), out)

    if args.trace:
        trace_out = _prepare_out(args.trace, args.force)
        lines = [_canonical({"manifest": manifest})]
        lines += [_canonical(row) for row in report.trace]
        trace_out.write_text("\n".join(lines) + "\n")
        print(f"wrote {trace_out}")

    figure = _figure_path(out, not args.no_figure, args.force)
    if figure is not None:
        from .plots import calibration_figure
        calibration_figure(report, figure)
        print(f"wrote {figure}")

    summary = {
        "final_theta": list(report.final_theta),
        "stages_passed": sum(1 for s in report.stages if s.passed),
        "stages_total": len(report.stages),
    }
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_gate_error(args) -> int:
    lengths = _ints(args.lengths)
    seed = _resolve_seed(args.seed)
    if any(k < 1 for k in lengths):
        raise CliError("sequence lengths must be positive")
    results = []
    for k in lengths:
        rng = np.random.default_rng((seed, k))
        gates = [random_unitary(rng, args.dim) for _ in range(k)]
        results.append(gate_sequence_error(gates, args.per_gate_error,
                                           draws=args.draws, seed=seed + k))
    manifest = _manifest(
        "gate-error", seed, lengths=lengths, per_gate_error=args.per_gate_error,
        draws=args.draws, dim=args.dim,
    )
    header = ["gate_count", "per_gate_error", "bound", "max_measured", "mean_measured"]
    rows = [
        [r.gate_count, r.per_gate_error, r.bound, r.max_measured,
         sum(r.measured) / len(r.measured)]
        for r in results
    ]
    out = _prepare_out(args.out, args.force)
    _emit(_csv_text(manifest, header, rows), out)
    figure = _figure_path(out, not args.no_figure, args.force)
    if figure is not None:
        from .plots import gate_error_figure
        gate_error_figure(results, figure)
        print(f"wrote {figure}")
    return 0


def _cmd_tmp_run(args) -> int:
    program = ProgramTable.from_json_obj(_load_json(args.program))
    seed = _resolve_seed(args.seed)
    inputs = [part for part in (args.inputs.split(",") if args.inputs else []) if part]
    interrupts = {}
    for spec in args.interrupt or []:
        step_text, _, color = spec.partition(":")
        if not color:
            raise CliError(f"bad --interrupt {spec!r}, expected STEP:COLOR")
        try:
            interrupts[int(step_text)] = Token(color)
        except ValueError:
            raise CliError(f"bad --interrupt step in {spec!r}") from None
    result = run_program(TMP(), program, inputs,
                         max_steps=args.max_steps, interrupts=interrupts)
    payload = {
        "manifest": _manifest(
            "tmp-run", seed, program=args.program, inputs=inputs,
            max_steps=args.max_steps, interrupt=sorted(args.interrupt or []),
        ),
        "outputs": [encode_color(c) for c in result.outputs],
        "steps": result.steps,
        "halted": result.halted,
        "timed_out": result.timed_out,
        "tape": result.machine.tape_string(),
        "control_state": result.machine.tm_state,
    }
    _emit_json(payload, _prepare_out(args.out, args.force))
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser, out: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed (default: GUESSLAB_SEED or 0)")
    if out:
        parser.add_argument("--out", default=None, help="output file (default: stdout)")
        parser.add_argument("--force", action="store_true",
                            help="overwrite existing output files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guesslab",
        description="Command-driven models, nets, and machine experiments.",
    )
    parser.add_argument("--version", action="version", version=f"guesslab {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("net-validate", help="validate a net fragment file")
    p.add_argument("net")
    _add_common(p)
    p.set_defaults(func=_cmd_net_validate)

    p = sub.add_parser("net-simulate", help="run a net under a scheduler")
    p.add_argument("net")
    p.add_argument("--marking", default=None, help="initial marking JSON file")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--policy", choices=["priority", "random"], default="priority")
    p.add_argument("--priority", default=None, help="comma-separated event order")
    p.add_argument("--inject", action="append", default=None,
                   metavar="STEP:STATE:COLOR", help="inject a token (repeatable)")
    p.add_argument("--keep-outputs", action="store_true",
                   help="do not drain exogenous output states between rounds")
    _add_common(p)
    p.set_defaults(func=_cmd_net_simulate)

    p = sub.add_parser("net-analyze", help="reachability, liveness, and contact")
    p.add_argument("net")
    p.add_argument("--initial", default=None, help="comma-separated marked states")
    p.add_argument("--bound", type=int, default=10_000)
    p.add_argument("--max-listed", type=int, default=100,
                   help="list reachable markings only up to this count")
    _add_common(p)
    p.set_defaults(func=_cmd_net_analyze)

    p = sub.add_parser("net-refine", help="split events along a color partition")
    p.add_argument("net")
    p.add_argument("--partition", required=True,
                   help="JSON file mapping state ids to lists of color blocks")
    _add_common(p)
    p.set_defaults(func=_cmd_net_refine)

    p = sub.add_parser("net-coarsen", help="forget colors (every set becomes {black})")
    p.add_argument("net")
    _add_common(p)
    p.set_defaults(func=_cmd_net_coarsen)

    p = sub.add_parser("fit-models", help="build perfect-fit models for a record")
    p.add_argument("record", help="outcome record JSON file")
    p.add_argument("--phases", choices=["zero", "random"], default="zero")
    p.add_argument("--padding-dim", type=int, default=None)
    p.add_argument("--orthogonal-pair", action="store_true",
                   help="emit two fits with orthogonal prepared states")
    p.add_argument("--eigenspace-dim", type=int, default=2)
    _add_common(p)
    p.set_defaults(func=_cmd_fit_models)

    p = sub.add_parser("distance", help="statistical distance of two distributions")
    p.add_argument("p", help="comma-separated probabilities")
    p.add_argument("q", help="comma-separated probabilities")
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("sample-size", help="trial-count floors (and, opted in, "
                                           "the empirical minimum)")
    p.add_argument("--epsilons", required=True, help="comma-separated gaps")
    p.add_argument("--empirical", action="store_true",
                   help="run the Monte-Carlo search (slow)")
    p.add_argument("--power", type=float, default=0.95)
    p.add_argument("--repetitions", type=int, default=500)
    p.add_argument("--max-n", type=int, default=1_000_000)
    p.add_argument("--no-figure", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_sample_size)

    p = sub.add_parser("calibrate", help="run the run/test/calibrate loop")
    p.add_argument("--config", required=True, help="calibration config JSON file")
    p.add_argument("--trace", default=None, help="write the scheduler-net trace JSONL")
    p.add_argument("--no-figure", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("gate-error", help="error accumulation along gate sequences")
    p.add_argument("--lengths", required=True, help="comma-separated sequence lengths")
    p.add_argument("--per-gate-error", type=float, default=0.01)
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--no-figure", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_gate_error)

    p = sub.add_parser("tmp-run", help="run a program on the token machine")
    p.add_argument("--program", required=True, help="program table JSON file")
    p.add_argument("--inputs", default=None, help="comma-separated input tokens")
    p.add_argument("--interrupt", action="append", default=None,
                   metavar="STEP:COLOR", help="override the input at a step")
    p.add_argument("--max-steps", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(func=_cmd_tmp_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, GuesslabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
