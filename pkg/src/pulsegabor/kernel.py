"""Fixed-timestep core for pulse-coupled integrate-and-fire units.

The engine is deliberately rigid: one global clock, one phase order for
every unit, one tick of delay on every connection.  Units accumulate
charge without leak, emit a single pulse when the accumulator reaches
threshold, and restart from zero, discarding any overshoot.  Each tick
runs four phases over the whole assembly:

1. resolve  -- units that integrated past threshold last tick emit now
               and reset; the post-reset accumulators are snapshotted
2. gate     -- transmission branches bank arriving gate charge and step
               their fast weight rule; a transmitted pulse samples and
               clears the banked charge
3. deliver  -- arriving pulses add weight-scaled charge to their target
               accumulators, using the weights as of this tick
4. adapt    -- membrane-rule synapses step their slow weight rule
               against the phase-1 accumulator snapshot

A pulse emitted at tick t therefore arrives at tick t+1 and can first
be re-emitted downstream at tick t+2.  External source trains are given
in arrival ticks: a source pulse scheduled at t is charge landing at t,
so a unit one connection away from a source fires at t+1.

All randomness lives outside this module; running the same assembly
twice produces bit-identical histories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .plasticity import (
    DendriteRuleParams,
    MembraneRuleParams,
    SynapseState,
    check_step_stability,
    dendrite_update,
    membrane_update,
)

__all__ = [
    "ConfigurationError",
    "SimConfig",
    "PulseTrain",
    "regular_train",
    "iaf_step",
    "Network",
    "Synapse",
    "NetworkTrace",
    "run_step",
]


class ConfigurationError(ValueError):
    """An assembly references units or ports that do not exist."""


@dataclass(frozen=True)
class SimConfig:
    """Global clock settings shared by every unit in a run."""

    dt: float = 0.1
    duration: float = 1.0
    theta: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        if self.theta <= 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.dt))


def iaf_step(accumulator: float, charge: float, theta: float = 1.0):
    """Integrate one charge packet into a non-leaky unit.

    Returns ``(accumulator, fired)``.  Crossing the threshold discards
    the overshoot: the unit restarts from exactly zero.  Units are
    excitatory only, so negative charge is rejected outright.
    """
    if charge < 0:
        raise ValueError(f"negative charge {charge} rejected")
    total = accumulator + charge
    if total >= theta:
        return 0.0, True
    return total, False


@dataclass(frozen=True)
class PulseTrain:
    """Pulse ticks of one unit over a run window.

    ``ticks`` holds sorted, unique tick indices; ``n_ticks`` is the run
    length the train was recorded over, so empty windows still carry
    their duration.
    """

    ticks: np.ndarray
    dt: float
    n_ticks: int

    def __post_init__(self) -> None:
        ticks = np.asarray(self.ticks, dtype=np.int64)
        object.__setattr__(self, "ticks", ticks)
        if ticks.ndim != 1:
            raise ValueError("ticks must be one-dimensional")
        if ticks.size:
            if np.any(np.diff(ticks) <= 0):
                raise ValueError("ticks must be strictly increasing")
            if ticks[0] < 0 or ticks[-1] >= self.n_ticks:
                raise ValueError("ticks out of run range")

    def __len__(self) -> int:
        return int(self.ticks.size)

    def count(self, t0: float = 0.0, t1: float | None = None) -> int:
        """Pulses with t0 <= tick * dt < t1."""
        if t1 is None:
            t1 = self.n_ticks * self.dt
        lo = int(np.ceil(t0 / self.dt - 1e-9))
        hi = int(np.ceil(t1 / self.dt - 1e-9))
        return int(np.searchsorted(self.ticks, hi) - np.searchsorted(self.ticks, lo))

    def rate(self, t0: float = 0.0, t1: float | None = None) -> float:
        """Mean pulse rate over [t0, t1) in pulses per unit time."""
        if t1 is None:
            t1 = self.n_ticks * self.dt
        if t1 <= t0:
            raise ValueError("empty measurement window")
        return self.count(t0, t1) / (t1 - t0)

    def indicator(self) -> np.ndarray:
        """Boolean per-tick activity vector of length n_ticks."""
        out = np.zeros(self.n_ticks, dtype=bool)
        out[self.ticks] = True
        return out

    def shifted(self, offset: int) -> "PulseTrain":
        """Same train moved by ``offset`` ticks, clipped to the run."""
        moved = self.ticks + offset
        keep = (moved >= 0) & (moved < self.n_ticks)
        return PulseTrain(moved[keep], self.dt, self.n_ticks)


def regular_train(rate: float, n_ticks: int, dt: float, phase: float = 0.0) -> PulseTrain:
    """Evenly spaced train at ``rate`` pulses per unit time.

    Generated by the same accumulate-and-carry law the retina uses: a
    normalized accumulator starts at ``phase``, gains rate*dt per tick,
    and emits whenever it reaches one, keeping the remainder.  The
    long-run rate is exact; ``phase=0.5`` shifts the train by half a
    period.  Rates above one pulse per tick cannot be represented.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if not 0.0 <= phase < 1.0:
        raise ValueError(f"phase must be in [0, 1), got {phase}")
    if rate == 0 or n_ticks == 0:
        return PulseTrain(np.empty(0, dtype=np.int64), dt, n_ticks)
    if rate * dt > 1.0:
        raise ValueError(f"rate {rate} exceeds one pulse per tick at dt={dt}")
    # pulse k (1-based) fires at the first tick t with
    # phase + rate*dt*(t+1) >= k
    total = int(np.floor(phase + rate * dt * n_ticks))
    ks = np.arange(1, total + 1, dtype=np.float64)
    ticks = np.ceil((ks - phase) / (rate * dt)).astype(np.int64) - 1
    ticks = ticks[(ticks >= 0) & (ticks < n_ticks)]
    return PulseTrain(ticks, dt, n_ticks)


@dataclass
class Synapse:
    """Directed connection with its weight state.

    Transmission synapses own up to two gate taps; a gate synapse
    deposits charge on its branch, where it is held until the next
    transmitted pulse samples it.
    """

    pre: str
    post: str
    state: SynapseState
    gates: list = field(default_factory=list)
    held: bool = False  # gate synapses: charge banked on the branch

    @property
    def weight(self) -> float:
        return self.state.weight


@dataclass
class NetworkTrace:
    """Recorded history of one run."""

    config: SimConfig
    fired: dict
    acc: dict
    weights: dict

    def train(self, name: str) -> PulseTrain:
        if name not in self.fired:
            raise KeyError(name)
        return PulseTrain(
            np.asarray(self.fired[name], dtype=np.int64),
            self.config.dt,
            self.n_ticks,
        )

    @property
    def n_ticks(self) -> int:
        return self._n_ticks

    def __post_init__(self) -> None:
        self._n_ticks = 0


class Network:
    """Small assembly of named sources, units, and synapses.

    This is the plain object-graph engine: clear, slow, and used for
    hand-sized circuits and as the reference the vectorized banks are
    checked against.  Construction order fixes evaluation order, which
    in turn fixes the floating-point story, so two identically built
    networks agree bit for bit.
    """

    def __init__(self, config: SimConfig) -> None:
        self.config = config
        self._sources: dict[str, np.ndarray] = {}
        self._neurons: dict[str, float] = {}
        self._synapses: list[Synapse] = []
        self._prev_fired: dict[str, bool] = {}

    # -- construction ---------------------------------------------------

    def add_source(self, name: str, ticks=()) -> None:
        """External pulse source; ``ticks`` are arrival ticks."""
        self._check_fresh(name)
        self._sources[name] = np.asarray(sorted(set(int(t) for t in ticks)), dtype=np.int64)

    def schedule(self, name: str, ticks) -> None:
        if name not in self._sources:
            raise ConfigurationError(f"unknown source {name!r}")
        self._sources[name] = np.asarray(sorted(set(int(t) for t in ticks)), dtype=np.int64)

    def add_neuron(self, name: str) -> None:
        self._check_fresh(name)
        self._neurons[name] = 0.0
        self._prev_fired[name] = False

    def add_synapse(
        self,
        pre: str,
        post: str,
        weight: float,
        rule: str = "fixed",
        params: MembraneRuleParams | DendriteRuleParams | None = None,
        onto: Synapse | None = None,
    ) -> Synapse:
        """Connect ``pre`` to ``post``; returns the synapse handle.

        ``rule='gate'`` requires ``onto``, the transmission synapse
        whose branch the gate charge lands on.
        """
        if pre not in self._sources and pre not in self._neurons:
            raise ConfigurationError(f"dangling synapse endpoint {pre!r}")
        if post not in self._neurons:
            raise ConfigurationError(f"dangling synapse endpoint {post!r}")
        if rule in ("membrane", "dendrite") and params is None:
            raise ConfigurationError(f"rule {rule!r} needs params")
        if params is not None:
            check_step_stability(self.config.dt, params)
        syn = Synapse(pre, post, SynapseState(weight, rule, params))
        if rule == "gate":
            if onto is None:
                raise ConfigurationError("gate synapse needs a branch to land on")
            if onto.state.rule != "dendrite":
                raise ConfigurationError("gates attach to transmission synapses")
            if onto.post != post:
                raise ConfigurationError("gate and branch must share a target")
            if len(onto.gates) >= 2:
                raise ConfigurationError("a branch carries at most two gate taps")
            onto.gates.append(syn)
        elif onto is not None:
            raise ConfigurationError("only gate synapses attach to a branch")
        self._synapses.append(syn)
        return syn

    def _check_fresh(self, name: str) -> None:
        if name in self._sources or name in self._neurons:
            raise ConfigurationError(f"duplicate unit name {name!r}")

    # -- inspection -----------------------------------------------------

    @property
    def neuron_names(self) -> list:
        return list(self._neurons)

    @property
    def source_names(self) -> list:
        return list(self._sources)

    @property
    def synapses(self) -> list:
        return list(self._synapses)

    def accumulator(self, name: str) -> float:
        return self._neurons[name]

    # -- execution ------------------------------------------------------

    def _arrived(self, name: str, t: int) -> bool:
        if name in self._sources:
            ticks = self._sources[name]
            i = np.searchsorted(ticks, t)
            return bool(i < ticks.size and ticks[i] == t)
        return self._prev_fired[name]

    def run(self, n_ticks: int | None = None, record_acc=(), record_weights=False) -> NetworkTrace:
        """Step the assembly and record pulse history.

        ``record_acc`` names units whose accumulator is sampled after
        every tick; ``record_weights`` keeps per-tick weight traces for
        all adaptive synapses, keyed by ``(pre, post)``.
        """
        if n_ticks is None:
            n_ticks = self.config.n_ticks
        fired: dict = {name: [] for name in self._neurons}
        for name, ticks in self._sources.items():
            fired[name] = [int(t) for t in ticks if 0 <= t < n_ticks]
        acc_rec: dict = {name: [] for name in record_acc}
        w_rec: dict = {}
        if record_weights:
            w_rec = {
                (s.pre, s.post): []
                for s in self._synapses
                if s.state.rule in ("membrane", "dendrite")
            }
        for t in range(n_ticks):
            emitted = run_step(self, t)
            for name in emitted:
                fired[name].append(t)
            for name in acc_rec:
                acc_rec[name].append(self._neurons[name])
            for key in w_rec:
                syn = next(
                    s for s in self._synapses if (s.pre, s.post) == key
                )
                w_rec[key].append(syn.weight)
        trace = NetworkTrace(
            self.config,
            fired,
            {k: np.asarray(v) for k, v in acc_rec.items()},
            {k: np.asarray(v) for k, v in w_rec.items()},
        )
        trace._n_ticks = n_ticks
        return trace


def run_step(net: Network, t: int) -> list:
    """Advance ``net`` by one tick; returns names of units that emitted.

    The four phases run over the whole assembly in construction order.
    Kept as a free function so traces and tests can drive an assembly
    tick by tick.
    """
    cfg = net.config
    theta = cfg.theta
    dt = cfg.dt

    # phase 1: resolve threshold crossings from charge delivered last tick
    emitted = []
    for name in net._neurons:
        acc, did_fire = iaf_step(net._neurons[name], 0.0, theta)
        net._neurons[name] = acc
        if did_fire:
            emitted.append(name)
    now_fired = {name: (name in emitted) for name in net._neurons}
    snapshot = dict(net._neurons)  # post-reset, pre-delivery

    arrived = {}
    for name in list(net._sources) + list(net._neurons):
        arrived[name] = net._arrived(name, t)

    # phase 2: branch gating
    for syn in net._synapses:
        if syn.state.rule != "dendrite":
            continue
        for g in syn.gates:
            if arrived[g.pre]:
                g.held = True
        pulse = arrived[syn.pre]
        g0 = syn.gates[0] if len(syn.gates) > 0 else None
        g1 = syn.gates[1] if len(syn.gates) > 1 else None
        syn.state.weight = float(
            dendrite_update(
                syn.state.weight,
                pulse,
                g0.held if g0 else False,
                g1.held if g1 else False,
                g0.weight if g0 else 0.0,
                g1.weight if g1 else 0.0,
                syn.state.params,
                dt,
            )
        )
        if pulse:
            for g in syn.gates:
                g.held = False

    # phase 3: deliver charge with this tick's weights
    for syn in net._synapses:
        if syn.state.rule == "gate":
            continue  # gate charge acts on the branch, not the accumulator
        if arrived[syn.pre]:
            net._neurons[syn.post] = net._neurons[syn.post] + syn.weight

    # phase 4: slow adaptation against the phase-1 snapshot
    for syn in net._synapses:
        if syn.state.rule != "membrane":
            continue
        syn.state.weight = float(
            membrane_update(
                syn.state.weight,
                snapshot[syn.post],
                arrived[syn.pre],
                syn.state.params,
                dt,
            )
        )

    net._prev_fired = now_fired
    return emitted
