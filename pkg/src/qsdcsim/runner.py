"""Scenario configuration, seeded Monte Carlo trials, and report emission.

Seed splitting is counter-based: trial k draws from a numpy Philox generator
keyed as (master seed, k). Distinct keys give independent streams, so trial k
is reproducible in isolation and the aggregate does not depend on execution
order or parallelism. Reports render numbers rounded to 12 significant digits
with a stable key order, so identical (config, seed) yields identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from copy import deepcopy
from dataclasses import dataclass

import numpy as np
import yaml

from .adversary import AttackKind, AttackName, InterceptPolicy
from .analytic import AnalyticUnavailableError, analytic_payload
from .channel import NoiseKind, NoiseModel
from .protocol import ProtocolConfig, SessionReport, Verdict, run_session
from .states import KeyPairKind


class ConfigError(ValueError):
    """Scenario document rejected: syntax, unknown key, or constraint violation."""


# section -> field -> (type tag, default)
SCENARIO_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "protocol": {
        "n_pairs": ("int", 64),
        "a_squared": ("float", 0.5),
        "decoy_fraction": ("float", 0.1),
        "error_threshold": ("float", 0.05),
        "rounds": ("int", 1),
        "mode": ("str", "sampled"),
    },
    "attack": {
        "kind": ("str", "none"),
        "policy": ("str", "always_z"),
        "probability": ("float", 1.0),
    },
    "channel": {
        "model": ("str", "ideal"),
        "p": ("float", 0.0),
    },
    "run": {
        "trials": ("int", 100),
        "seed": ("int", 0),
    },
}

CSV_COLUMNS = [
    "scenario_id",
    "seed",
    "trials",
    "decoy_error_rate",
    "decoy_error_ci3",
    "detection_rate",
    "message_bit_error_rate",
    "eve_bit_accuracy",
    "eve_xor_accuracy",
    "mean_key_fidelity",
    "analytic_decoy_error",
    "analytic_eve_accuracy",
]


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: ProtocolConfig
    attack: AttackKind
    channel: NoiseModel
    trials: int
    seed: int
    scenario_id: str = "scenario"
    output_format: str = "json"

    def echo(self) -> dict:
        """Normalized configuration with every default applied, schema order."""
        return {
            "protocol": {
                "n_pairs": self.protocol.n_pairs,
                "a_squared": self.protocol.a_squared,
                "decoy_fraction": self.protocol.decoy_fraction,
                "error_threshold": self.protocol.error_threshold,
                "rounds": self.protocol.rounds,
                "mode": self.protocol.mode,
            },
            "attack": {
                "kind": self.attack.name.value,
                "policy": self.attack.policy.value,
                "probability": self.attack.probability,
            },
            "channel": {"model": self.channel.kind.value, "p": self.channel.p},
            "run": {"trials": self.trials, "seed": self.seed},
        }


@dataclass
class AggregateReport:
    scenario_id: str
    seed: int
    trials: int
    config: dict
    sampled: dict | None
    analytic: dict | None


def load_document(text: str) -> dict:
    """YAML -> plain dict; an empty document means all defaults."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"scenario syntax error: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a mapping of sections")
    return doc


def _coerce(path: str, value, typ: str):
    if typ == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if typ == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _section(doc: dict, name: str) -> dict:
    raw = doc.get(name, {})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    schema = SCENARIO_SCHEMA[name]
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown configuration key")
    out = {}
    for field_name, (typ, default) in schema.items():
        if field_name in raw:
            out[field_name] = _coerce(f"{name}.{field_name}", raw[field_name], typ)
        else:
            out[field_name] = default
    return out


def build_scenario(doc: dict, scenario_id: str = "scenario", output_format: str = "json") -> ScenarioConfig:
    """Validate a parsed document against the strict schema."""
    unknown = set(doc) - set(SCENARIO_SCHEMA)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown configuration section")
    proto = _section(doc, "protocol")
    attack = _section(doc, "attack")
    chan = _section(doc, "channel")
    run = _section(doc, "run")

    try:
        protocol = ProtocolConfig(
            n_pairs=proto["n_pairs"],
            a_squared=proto["a_squared"],
            decoy_fraction=proto["decoy_fraction"],
            error_threshold=proto["error_threshold"],
            rounds=proto["rounds"],
            mode=proto["mode"],
        )
    except ValueError as exc:
        raise ConfigError(f"protocol: {exc}") from exc
    try:
        name = AttackName(attack["kind"])
    except ValueError:
        raise ConfigError(
            f"attack.kind: unknown kind {attack['kind']!r}; expected one of {[a.value for a in AttackName]}"
        ) from None
    try:
        policy = InterceptPolicy(attack["policy"])
    except ValueError:
        raise ConfigError(
            f"attack.policy: unknown policy {attack['policy']!r}; expected one of {[p.value for p in InterceptPolicy]}"
        ) from None
    try:
        attack_kind = AttackKind(name=name, policy=policy, probability=attack["probability"])
    except ValueError as exc:
        raise ConfigError(f"attack: {exc}") from exc
    try:
        model = NoiseModel(NoiseKind(chan["model"]), chan["p"])
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from exc

    if run["trials"] < 1:
        raise ConfigError(f"run.trials: must be >= 1, got {run['trials']}")
    if not 0 <= run["seed"] < 2**64:
        raise ConfigError(f"run.seed: must be an unsigned 64-bit integer, got {run['seed']}")

    return ScenarioConfig(
        protocol=protocol,
        attack=attack_kind,
        channel=model,
        trials=run["trials"],
        seed=run["seed"],
        scenario_id=scenario_id,
        output_format=output_format,
    )


def parse_scenario(text: str, scenario_id: str = "scenario") -> ScenarioConfig:
    """Parse and validate one scenario document (strict: unknown keys rejected)."""
    return build_scenario(load_document(text), scenario_id)


def trial_stream(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial stream: Philox keyed by (seed, trial_index)."""
    return np.random.Generator(np.random.Philox(key=[seed, trial_index]))


def run_single_trial(scenario: ScenarioConfig, trial_index: int) -> SessionReport:
    rng = trial_stream(scenario.seed, trial_index)
    return run_session(scenario.protocol, scenario.attack, scenario.channel, rng)


def _stat(mean: float, n: int) -> dict:
    ci3 = 3.0 * math.sqrt(max(mean * (1.0 - mean), 0.0) / n) if n > 0 else None
    return {"mean": mean, "ci3": ci3, "n": n}


def _score_eve(sessions) -> tuple[dict | None, dict | None]:
    """Pool Eve's guesses against ground truth across all sessions.

    Per-bit accuracy takes the better of match rate and its complement per key
    kind (the best affine decode given the kind); XOR guesses are scored where
    both positions are message slots of the same key index.
    """
    matches = {KeyPairKind.PSI: 0, KeyPairKind.PHI: 0}
    counts = {KeyPairKind.PSI: 0, KeyPairKind.PHI: 0}
    xor_ok = xor_n = 0
    for s in sessions:
        logs = {(log.attempt, log.round_index): log for log in s.round_logs}
        for (phase, pos), guess in s.inference.bit_guesses.items():
            log = logs.get((phase[1], phase[2]))
            if log is None:
                continue
            role = log.slot_roles.get(pos)
            if role is None or role[0] != "message":
                continue
            kinds = s.kinds_by_attempt.get(phase[1])
            if kinds is None:
                continue
            kind = kinds[role[1]]
            counts[kind] += 1
            matches[kind] += guess == log.message_bits[role[1]]
        for (attempt, r1, r2, pos), guess in s.inference.xor_guesses.items():
            log1, log2 = logs.get((attempt, r1)), logs.get((attempt, r2))
            if log1 is None or log2 is None:
                continue
            role1, role2 = log1.slot_roles.get(pos), log2.slot_roles.get(pos)
            if not role1 or not role2 or role1[0] != "message" or role2[0] != "message":
                continue
            if role1[1] != role2[1]:
                continue
            truth = log1.message_bits[role1[1]] ^ log2.message_bits[role2[1]]
            xor_n += 1
            xor_ok += guess == truth

    total = counts[KeyPairKind.PSI] + counts[KeyPairKind.PHI]
    bit_stat = None
    if total:
        acc = 0.0
        for kind, c in counts.items():
            if c:
                m = matches[kind] / c
                acc += c * max(m, 1.0 - m)
        bit_stat = _stat(acc / total, total)
    xor_stat = _stat(xor_ok / xor_n, xor_n) if xor_n else None
    return bit_stat, xor_stat


def aggregate_sessions(scenario: ScenarioConfig, sessions) -> dict:
    """Order-insensitive pooling of per-session tallies into the sampled section."""
    decoy_err = decoy_n = 0
    detected = 0
    msg_wrong = msg_n = 0
    fid_by_round: dict[int, list[float]] = {r: [] for r in range(1, scenario.protocol.rounds + 1)}
    for s in sessions:
        detected += s.abort_count > 0
        for chk in s.s1_checks:
            decoy_err += chk.decoy_errors
            decoy_n += chk.decoys_checked
        for log in s.round_logs:
            decoy_err += log.result.decoy_errors
            decoy_n += log.result.decoys_checked
            if log.result.verdict is Verdict.ACCEPT:
                fid_by_round[log.round_index].append(log.mean_key_fidelity)
                for k, bit in enumerate(log.message_bits):
                    got = log.result.received_bits[k]
                    if got is None:
                        continue
                    msg_n += 1
                    msg_wrong += got != bit

    eve_bit, eve_xor = _score_eve(sessions)
    n_trials = len(sessions)
    return {
        "decoy_error_rate": _stat(decoy_err / decoy_n, decoy_n) if decoy_n else {"mean": None, "ci3": None, "n": 0},
        "detection_rate": _stat(detected / n_trials, n_trials),
        "message_bit_error_rate": _stat(msg_wrong / msg_n, msg_n) if msg_n else {"mean": None, "ci3": None, "n": 0},
        "eve_bit_accuracy": eve_bit,
        "eve_xor_accuracy": eve_xor,
        "key_fidelity_per_round": [
            (sum(v) / len(v)) if (v := fid_by_round[r]) else None
            for r in range(1, scenario.protocol.rounds + 1)
        ],
    }


def _analytic_section(scenario: ScenarioConfig) -> dict:
    return analytic_payload(
        scenario.attack, scenario.channel, scenario.protocol.pair_param, scenario.protocol.rounds
    )


def run_trials(scenario: ScenarioConfig) -> AggregateReport:
    """Sampled mode: independent seeded sessions, pooled statistics.

    When protocol.mode is "exact" the analytic section is attached as well;
    an unsupported combination is an error there, never a silent fallback.
    """
    sessions = [run_single_trial(scenario, k) for k in range(scenario.trials)]
    sampled = aggregate_sessions(scenario, sessions)
    analytic = _analytic_section(scenario) if scenario.protocol.mode == "exact" else None
    return AggregateReport(
        scenario_id=scenario.scenario_id,
        seed=scenario.seed,
        trials=scenario.trials,
        config=scenario.echo(),
        sampled=sampled,
        analytic=analytic,
    )


def analytic_mode(scenario: ScenarioConfig) -> AggregateReport:
    """Exact mode only: no sampling at all."""
    return AggregateReport(
        scenario_id=scenario.scenario_id,
        seed=scenario.seed,
        trials=scenario.trials,
        config=scenario.echo(),
        sampled=None,
        analytic=_analytic_section(scenario),
    )


def sweep_scenarios(doc: dict, param: str, values, scenario_id: str = "scenario") -> list[ScenarioConfig]:
    """One scenario per value, setting the dotted schema key each time."""
    try:
        section, field_name = param.split(".")
        typ, _default = SCENARIO_SCHEMA[section][field_name]
    except (ValueError, KeyError):
        raise ConfigError(f"sweep parameter {param!r} is not a known scenario key") from None
    out = []
    for raw in values:
        if typ == "int":
            try:
                value: object = int(raw)
            except ValueError:
                raise ConfigError(f"{param}: cannot parse {raw!r} as an integer") from None
        elif typ == "float":
            try:
                value = float(raw)
            except ValueError:
                raise ConfigError(f"{param}: cannot parse {raw!r} as a number") from None
        else:
            value = raw
        d = deepcopy(doc)
        d.setdefault(section, {})[field_name] = value
        out.append(build_scenario(d, scenario_id=f"{scenario_id}[{param}={raw}]"))
    return out


def _round12(x):
    if isinstance(x, float):
        return float(format(x, ".12g"))
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return _round12(obj)


def _report_payload(report: AggregateReport) -> dict:
    return {
        "config": report.config,
        "seed": report.seed,
        "sampled": report.sampled,
        "analytic": report.analytic,
    }


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _csv_row(report: AggregateReport) -> list[str]:
    sampled = report.sampled or {}

    def stat_mean(name):
        stat = sampled.get(name)
        return stat["mean"] if stat else None

    decoy = sampled.get("decoy_error_rate") or {}
    fids = [f for f in sampled.get("key_fidelity_per_round", []) if f is not None]
    analytic = report.analytic or {}
    return [
        _csv_cell(v)
        for v in [
            report.scenario_id,
            report.seed,
            report.trials,
            decoy.get("mean"),
            decoy.get("ci3"),
            stat_mean("detection_rate"),
            stat_mean("message_bit_error_rate"),
            stat_mean("eve_bit_accuracy"),
            stat_mean("eve_xor_accuracy"),
            (sum(fids) / len(fids)) if fids else None,
            analytic.get("decoy_error_rate"),
            analytic.get("eve_bit_accuracy"),
        ]
    ]


def emit_report(report: AggregateReport, output_format: str = "json") -> str:
    """Serialize one report; stable key order, 12 significant digits."""
    return emit_reports([report], output_format)


def emit_reports(reports, output_format: str = "json") -> str:
    if output_format == "json":
        payloads = [_jsonable(_report_payload(r)) for r in reports]
        doc = payloads[0] if len(payloads) == 1 else payloads
        return json.dumps(doc, indent=2) + "\n"
    if output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow(_csv_row(r))
        return buf.getvalue()
    raise ConfigError(f"unknown output format {output_format!r}; expected json or csv")


__all__ = [
    "AggregateReport",
    "AnalyticUnavailableError",
    "ConfigError",
    "ScenarioConfig",
    "SCENARIO_SCHEMA",
    "CSV_COLUMNS",
    "aggregate_sessions",
    "analytic_mode",
    "build_scenario",
    "emit_report",
    "emit_reports",
    "load_document",
    "parse_scenario",
    "run_single_trial",
    "run_trials",
    "sweep_scenarios",
    "trial_stream",
]
