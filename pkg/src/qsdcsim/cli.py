"""Command line interface.

Subcommands: `run` (sampled Monte Carlo), `exact` (analytic enumeration only),
`sweep` (one report row per parameter value). Exit codes: 0 success, 1 for
configuration or parse errors, 2 for unsupported analytic combinations or
runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .runner import (
    AnalyticUnavailableError,
    ConfigError,
    analytic_mode,
    build_scenario,
    emit_report,
    emit_reports,
    load_document,
    run_trials,
    sweep_scenarios,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsdcsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="sampled mode; flags override file fields")
    run_p.add_argument("--scenario", required=True, help="path to the scenario document")
    run_p.add_argument("--seed", type=int, default=None, help="override run.seed")
    run_p.add_argument("--trials", type=int, default=None, help="override run.trials")
    run_p.add_argument("--out", default=None, help="write the report here instead of stdout")
    run_p.add_argument("--format", choices=["json", "csv"], default="json")
    run_p.add_argument("--plot", action="store_true", help="render a PNG figure next to the report")

    exact_p = sub.add_parser("exact", help="analytic mode (exact enumeration, no sampling)")
    exact_p.add_argument("--scenario", required=True)
    exact_p.add_argument("--out", default=None)

    sweep_p = sub.add_parser("sweep", help="one report row per swept value")
    sweep_p.add_argument("--scenario", required=True)
    sweep_p.add_argument("--param", required=True, help="dotted scenario key, e.g. channel.p")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--trials", type=int, default=None)
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--format", choices=["json", "csv"], default="csv")
    sweep_p.add_argument("--plot", action="store_true")
    return parser


def _apply_overrides(doc: dict, args) -> dict:
    run = dict(doc.get("run") or {})
    if getattr(args, "seed", None) is not None:
        run["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        run["trials"] = args.trials
    if run:
        doc = dict(doc)
        doc["run"] = run
    return doc


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _figure_path(args, scenario_id: str) -> Path:
    if args.out is not None:
        return Path(args.out).with_suffix(".png")
    return Path(f"{scenario_id}.png")


def _dispatch(args) -> int:
    scenario_path = Path(args.scenario)
    scenario_id = scenario_path.stem
    doc = load_document(scenario_path.read_text())

    if args.command == "run":
        doc = _apply_overrides(doc, args)
        scenario = build_scenario(doc, scenario_id=scenario_id, output_format=args.format)
        report = run_trials(scenario)
        _write_output(emit_report(report, args.format), args.out)
        if args.plot:
            from .plotting import save_report_figure

            fig_path = _figure_path(args, scenario_id)
            save_report_figure(report, fig_path)
            print(f"figure written to {fig_path}", file=sys.stderr)
        return 0

    if args.command == "exact":
        scenario = build_scenario(doc, scenario_id=scenario_id)
        report = analytic_mode(scenario)
        _write_output(emit_report(report, "json"), args.out)
        return 0

    # sweep
    doc = _apply_overrides(doc, args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep requires at least one value")
    scenarios = sweep_scenarios(doc, args.param, values, scenario_id=scenario_id)
    reports = [run_trials(s) for s in scenarios]
    _write_output(emit_reports(reports, args.format), args.out)
    if args.plot:
        from .plotting import save_sweep_figure

        fig_path = _figure_path(args, f"{scenario_id}_sweep")
        save_sweep_figure(reports, args.param, values, fig_path)
        print(f"figure written to {fig_path}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AnalyticUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
