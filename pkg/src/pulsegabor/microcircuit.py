"""The four-neuron subtraction microcircuit and its rate experiments.

Two relay units forward their input trains to a correlator unit (via
the two slow adaptive synapses) and to an output unit.  The output
unit's single transmission branch carries the plus train; gate taps
from the counter-input relay and from the correlator collapse the
branch weight whenever their charge is waiting as a plus pulse passes,
so matched pulses are swallowed and only the rate surplus gets
through: the assembly subtracts pulse rates, clipped at zero.

Rate experiments drive the circuit with evenly spaced trains and read
pulse statistics off the second half of the run, after the adaptation
transient.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .banks import MicrocircuitBank
from .kernel import Network, PulseTrain, SimConfig, regular_train
from .plasticity import DendriteRuleParams, MembraneRuleParams

__all__ = [
    "NEURON_NAMES",
    "MicrocircuitParams",
    "Microcircuit",
    "CorrelationStats",
    "build_microcircuit",
    "correlation",
    "run_subtractor",
    "sweep_subtractor",
    "sweep_to_csv",
]

# loop delay from a relay emission to the matching correlator emission:
# one tick relay -> correlator, one tick to resolve
CORRELATOR_LAG_TICKS = 2

NEURON_NAMES = ("plus_input", "minus_input", "correlator", "output")


@dataclass(frozen=True)
class MicrocircuitParams:
    """Everything needed to build and clock one microcircuit.

    Initial adaptive weights default to half threshold; the branch
    starts at its resting weight.
    """

    sim: SimConfig = field(default_factory=SimConfig)
    plus_rule: MembraneRuleParams = field(default_factory=lambda: MembraneRuleParams(gain=0.5))
    minus_rule: MembraneRuleParams = field(default_factory=lambda: MembraneRuleParams(gain=-0.5))
    branch_rule: DendriteRuleParams = field(default_factory=DendriteRuleParams)
    gate_minus_weight: float = 1.0
    gate_corr_weight: float = 1.0
    init_plus: float | None = None
    init_minus: float | None = None

    def __post_init__(self) -> None:
        if self.gate_minus_weight < 0 or self.gate_corr_weight < 0:
            raise ValueError("gate weights must be >= 0")
        for name in ("init_plus", "init_minus"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    def initial_plus(self) -> float:
        return 0.5 * self.sim.theta if self.init_plus is None else self.init_plus

    def initial_minus(self) -> float:
        return 0.5 * self.sim.theta if self.init_minus is None else self.init_minus


@dataclass
class Microcircuit:
    """One built circuit: the network plus handles to its five synapses."""

    params: MicrocircuitParams
    network: Network
    synapses: dict

    def run(self, plus_ticks, minus_ticks, n_ticks: int | None = None, **record):
        """Drive the relays with arrival-tick schedules and record."""
        self.network.schedule("drive_plus", plus_ticks)
        self.network.schedule("drive_minus", minus_ticks)
        return self.network.run(n_ticks, **record)


def build_microcircuit(params: MicrocircuitParams | None = None) -> Microcircuit:
    """Wire the four units and five synapses; weights at initial values.

    The two external drive connections (one per relay, unit weight) are
    plumbing, not part of the circuit proper, and are excluded from
    ``synapses``.
    """
    if params is None:
        params = MicrocircuitParams()
    theta = params.sim.theta
    net = Network(params.sim)
    net.add_source("drive_plus")
    net.add_source("drive_minus")
    for name in NEURON_NAMES:
        net.add_neuron(name)
    net.add_synapse("drive_plus", "plus_input", theta)
    net.add_synapse("drive_minus", "minus_input", theta)
    plus_corr = net.add_synapse(
        "plus_input", "correlator", params.initial_plus(), "membrane", params.plus_rule
    )
    minus_corr = net.add_synapse(
        "minus_input", "correlator", params.initial_minus(), "membrane", params.minus_rule
    )
    branch = net.add_synapse(
        "plus_input", "output", params.branch_rule.rest, "dendrite", params.branch_rule
    )
    gate_minus = net.add_synapse(
        "minus_input", "output", params.gate_minus_weight, "gate", onto=branch
    )
    gate_corr = net.add_synapse(
        "correlator", "output", params.gate_corr_weight, "gate", onto=branch
    )
    return Microcircuit(
        params,
        net,
        {
            "plus_corr": plus_corr,
            "minus_corr": minus_corr,
            "branch": branch,
            "gate_minus": gate_minus,
            "gate_corr": gate_corr,
        },
    )


@dataclass(frozen=True)
class CorrelationStats:
    """Pulse statistics of one run window.

    ``c13`` is the fraction of ticks on which trains 1 and 3 fire
    together, ``c11`` the fraction on which train 1 fires at all, and
    ``c13_norm = c13/c11`` their ratio (0 for an empty train 1);
    ``d13_norm`` is its complement.  Rates are pulses per unit time
    over the same window.
    """

    c13: float
    c11: float
    c13_norm: float
    d13_norm: float
    rate_1: float
    rate_2: float
    rate_4: float


def correlation(
    train1: PulseTrain,
    train3: PulseTrain,
    t0: float,
    t1: float,
    *,
    train2: PulseTrain | None = None,
    train4: PulseTrain | None = None,
) -> CorrelationStats:
    """Same-tick coincidence statistics over the window [t0, t1).

    Callers that need a propagation delay removed shift a train before
    calling.  ``train2``/``train4`` only contribute their window rates.
    """
    if t1 <= t0:
        raise ValueError(f"empty window [{t0}, {t1})")
    if train1.dt != train3.dt:
        raise ValueError("trains must share a clock")
    dt = train1.dt
    lo = int(np.ceil(t0 / dt - 1e-9))
    hi = int(np.ceil(t1 / dt - 1e-9))
    in1 = train1.ticks[(train1.ticks >= lo) & (train1.ticks < hi)]
    in3 = train3.ticks[(train3.ticks >= lo) & (train3.ticks < hi)]
    both = np.intersect1d(in1, in3, assume_unique=True).size
    span = t1 - t0
    c13 = both * dt / span
    c11 = in1.size * dt / span
    c13_norm = both / in1.size if in1.size else 0.0
    return CorrelationStats(
        c13=c13,
        c11=c11,
        c13_norm=c13_norm,
        d13_norm=1.0 - c13_norm,
        rate_1=in1.size / span,
        rate_2=train2.rate(t0, t1) if train2 is not None else 0.0,
        rate_4=train4.rate(t0, t1) if train4 is not None else 0.0,
    )


def _experiment_params(dt: float, theta: float, plus_rule, minus_rule, branch_rule, duration):
    """Parameter set for rate experiments at a given clock.

    The branch relaxation defaults to 1/dt: a collapsed branch recovers
    to its resting weight in exactly one tick, so a single gated pulse
    never shadows the next one.
    """
    if branch_rule is None:
        branch_rule = DendriteRuleParams(relax=1.0 / dt)
    sim = SimConfig(dt=dt, duration=duration, theta=theta)
    kwargs = {"sim": sim, "branch_rule": branch_rule}
    if plus_rule is not None:
        kwargs["plus_rule"] = plus_rule
    if minus_rule is not None:
        kwargs["minus_rule"] = minus_rule
    return MicrocircuitParams(**kwargs)


def _run_rate_lanes(r1: float, r2s, params: MicrocircuitParams):
    """Lockstep subtractor lanes, one per counter rate; returns stats.

    The counter train is offset half a period so generic rate pairs
    interleave instead of colliding tick-for-tick.
    """
    sim = params.sim
    n_ticks = sim.n_ticks
    dt = sim.dt
    r2s = [float(r) for r in r2s]
    n = len(r2s)
    drive1 = regular_train(float(r1), n_ticks, dt)
    drive2 = [regular_train(r2, n_ticks, dt, phase=0.5) for r2 in r2s]

    # relay emissions land at the adaptive core one tick later
    x_plus = np.zeros((n_ticks, n), dtype=bool)
    x_minus = np.zeros((n_ticks, n), dtype=bool)
    e1 = drive1.shifted(1)
    feed1 = drive1.shifted(2).indicator()
    for i, d2 in enumerate(drive2):
        x_plus[:, i] = feed1
        x_minus[:, i] = d2.shifted(2).indicator()

    bank = MicrocircuitBank(
        n,
        dt=dt,
        theta=sim.theta,
        plus_rule=params.plus_rule,
        minus_rule=params.minus_rule,
        branch_rule=params.branch_rule,
        gate_minus_weight=params.gate_minus_weight,
        gate_corr_weight=params.gate_corr_weight,
    )
    bank.w_plus[:] = params.initial_plus()
    bank.w_minus[:] = params.initial_minus()
    corr, out = bank.run(x_plus, x_minus)

    t0 = 0.5 * sim.duration  # adaptation transient discarded
    t1 = n_ticks * dt
    stats = []
    for i, d2 in enumerate(drive2):
        train3 = PulseTrain(np.flatnonzero(corr[:, i]), dt, n_ticks)
        train4 = PulseTrain(np.flatnonzero(out[:, i]), dt, n_ticks)
        stats.append(
            correlation(
                e1,
                train3.shifted(-CORRELATOR_LAG_TICKS),
                t0,
                t1,
                train2=d2.shifted(1),
                train4=train4,
            )
        )
    return stats


def run_subtractor(
    r1: float,
    r2: float,
    duration: float = 120.0,
    *,
    dt: float = 0.0025,
    theta: float = 1.0,
    plus_rule: MembraneRuleParams | None = None,
    minus_rule: MembraneRuleParams | None = None,
    branch_rule: DendriteRuleParams | None = None,
) -> CorrelationStats:
    """Drive one circuit with regular trains at (r1, r2); measure rates.

    Statistics cover the second half of the run.  The reported
    coincidence numbers compare the correlator train against the plus
    train with the fixed two-tick loop delay removed, so they reflect
    phase alignment, not pipeline latency.  Rates above one pulse per
    tick are rejected by the train generator.
    """
    if r1 < 0 or r2 < 0:
        raise ValueError("rates must be >= 0")
    params = _experiment_params(dt, theta, plus_rule, minus_rule, branch_rule, duration)
    return _run_rate_lanes(r1, [r2], params)[0]


def sweep_subtractor(
    r1: float,
    r2_values,
    duration: float = 120.0,
    *,
    dt: float = 0.0025,
    theta: float = 1.0,
    plus_rule: MembraneRuleParams | None = None,
    minus_rule: MembraneRuleParams | None = None,
    branch_rule: DendriteRuleParams | None = None,
) -> list:
    """Run one lockstep lane per counter rate; returns stats per lane."""
    if r1 < 0 or any(r < 0 for r in r2_values):
        raise ValueError("rates must be >= 0")
    params = _experiment_params(dt, theta, plus_rule, minus_rule, branch_rule, duration)
    return _run_rate_lanes(r1, list(r2_values), params)


def sweep_to_csv(path, r1: float, r2_values, stats, include_analytic: bool = False) -> None:
    """Write sweep results as CSV: r1, r2, rate_4, c13_norm, d13_norm."""
    header = "r1,r2,rate_4,c13_norm,d13_norm"
    if include_analytic:
        header += ",analytic_rate_4"
    lines = [header]
    for r2, s in zip(r2_values, stats):
        row = f"{r1:g},{r2:g},{s.rate_4:.6f},{s.c13_norm:.6f},{s.d13_norm:.6f}"
        if include_analytic:
            row += f",{max(r1 - r2, 0.0):.6f}"
        lines.append(row)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
