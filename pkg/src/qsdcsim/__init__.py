"""Exact, seedable simulator of quantum secure direct communication with
quantum encryption: reusable pure entangled key pairs drive CNOT
encryption/decryption of message qubits, decoy photons police the channel,
and pluggable attacks plus noise models quantify detection and leakage.
"""

from .adversary import (
    AttackKind,
    AttackName,
    EveInference,
    EveState,
    InterceptPolicy,
    infer,
    tap_forward,
)
from .analytic import (
    AnalyticUnavailableError,
    analytic_payload,
    decoy_error_probability,
    message_and_eve_stats,
    xor_accuracy,
)
from .channel import NoiseKind, NoiseModel, transmit
from .protocol import (
    KeyPair,
    ProtocolConfig,
    RoundResult,
    SessionReport,
    Verdict,
    alice_prepare_round,
    bob_process_round,
    check_errors,
    ensemble_eve_view,
    new_key_pair,
    run_session,
    s1_distribute_key,
)
from .qcore import (
    Basis,
    DensityMatrix,
    PureState,
    apply_1q,
    apply_cnot,
    basis_state,
    born_distribution,
    fidelity,
    measure,
    mix,
    partial_trace,
    tensor,
)
from .register import Register
from .runner import (
    AggregateReport,
    ConfigError,
    ScenarioConfig,
    analytic_mode,
    emit_report,
    parse_scenario,
    run_single_trial,
    run_trials,
    trial_stream,
)
from .states import (
    DecoyLabel,
    DecoyPreparation,
    KeyPairKind,
    PairParam,
    make_bell,
    make_pair,
    prepare_decoy,
    x_correlation_probs,
)

__version__ = "0.1.0"
