"""Vectorized lockstep engines for many identical circuits.

The object-graph engine in :mod:`.kernel` is the readable reference;
these banks run the same tick discipline over numpy arrays so that tens
of thousands of circuits advance per vector operation.  Operation order
inside a tick mirrors the reference engine exactly (resolve, gate,
deliver, adapt, with left-associated charge sums), so a bank of one is
bit-identical to the equivalent hand-built network.
"""

from __future__ import annotations

import numpy as np

from .plasticity import (
    DendriteRuleParams,
    MembraneRuleParams,
    check_step_stability,
    dendrite_update,
    membrane_update,
)

__all__ = ["MicrocircuitBank", "SummationArray"]


class MicrocircuitBank:
    """N subtraction microcircuits stepped in lockstep.

    Each lane holds the adaptive core of one circuit: the correlator
    unit with its two membrane-rule synapses and the output unit with
    its gated transmission branch.  The two input units are pure
    relays, so callers drive the bank directly with the arrival trains
    ``x_plus`` and ``x_minus`` (what the relays would have forwarded)
    and read pulses off ``step``'s return.
    """

    def __init__(
        self,
        n: int,
        *,
        dt: float,
        theta: float = 1.0,
        plus_rule: MembraneRuleParams | None = None,
        minus_rule: MembraneRuleParams | None = None,
        branch_rule: DendriteRuleParams | None = None,
        gate_minus_weight: float = 1.0,
        gate_corr_weight: float = 1.0,
        init_plus: float | None = None,
        init_minus: float | None = None,
    ) -> None:
        if n <= 0:
            raise ValueError(f"need at least one lane, got {n}")
        self.n = int(n)
        self.dt = float(dt)
        self.theta = float(theta)
        self.plus_rule = plus_rule if plus_rule is not None else MembraneRuleParams()
        self.minus_rule = (
            minus_rule
            if minus_rule is not None
            else MembraneRuleParams(gain=-MembraneRuleParams().gain)
        )
        self.branch_rule = branch_rule if branch_rule is not None else DendriteRuleParams()
        check_step_stability(self.dt, self.plus_rule, self.minus_rule, self.branch_rule)
        self.gate_minus_weight = float(gate_minus_weight)
        self.gate_corr_weight = float(gate_corr_weight)

        half = 0.5 * self.theta
        init_plus = half if init_plus is None else float(init_plus)
        init_minus = half if init_minus is None else float(init_minus)
        for name, value in (("init_plus", init_plus), ("init_minus", init_minus)):
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        self.acc_corr = np.zeros(n)
        self.acc_out = np.zeros(n)
        self.w_plus = np.full(n, init_plus)    # input -> correlator
        self.w_minus = np.full(n, init_minus)  # counter-input -> correlator
        self.w_pass = np.full(n, self.branch_rule.rest)  # transmission branch
        self.held_minus = np.zeros(n, dtype=bool)
        self.held_corr = np.zeros(n, dtype=bool)
        self._corr_sent = np.zeros(n, dtype=bool)  # emitted last tick, lands now

    def step(self, x_plus: np.ndarray, x_minus: np.ndarray):
        """One tick for all lanes; returns ``(corr_fired, out_fired)``.

        ``x_plus`` and ``x_minus`` are boolean arrival vectors for this
        tick.  Returned pulses are stamped with the tick they resolve
        on, same as the reference engine.
        """
        x_plus = np.asarray(x_plus, dtype=bool)
        x_minus = np.asarray(x_minus, dtype=bool)

        # phase 1: resolve
        corr_fired = self.acc_corr >= self.theta
        self.acc_corr = np.where(corr_fired, 0.0, self.acc_corr)
        out_fired = self.acc_out >= self.theta
        self.acc_out = np.where(out_fired, 0.0, self.acc_out)
        a_corr = self.acc_corr  # post-reset snapshot (copied by np.where above)

        x_corr = self._corr_sent  # correlator pulses land one tick after emission

        # phase 2: branch gating with held charge
        self.held_minus = self.held_minus | x_minus
        self.held_corr = self.held_corr | x_corr
        self.w_pass = dendrite_update(
            self.w_pass,
            x_plus,
            self.held_minus,
            self.held_corr,
            self.gate_minus_weight,
            self.gate_corr_weight,
            self.branch_rule,
            self.dt,
        )
        self.held_minus = self.held_minus & ~x_plus
        self.held_corr = self.held_corr & ~x_plus

        # phase 3: deliver with this tick's weights
        self.acc_corr = self.acc_corr + self.w_plus * x_plus + self.w_minus * x_minus
        self.acc_out = self.acc_out + self.w_pass * x_plus

        # phase 4: slow adaptation against the snapshot
        self.w_plus = membrane_update(self.w_plus, a_corr, x_plus, self.plus_rule, self.dt)
        self.w_minus = membrane_update(self.w_minus, a_corr, x_minus, self.minus_rule, self.dt)

        self._corr_sent = corr_fired
        return corr_fired, out_fired

    def run(self, x_plus: np.ndarray, x_minus: np.ndarray):
        """Step through two (n_ticks, n) arrival matrices; stacks output."""
        x_plus = np.asarray(x_plus, dtype=bool)
        x_minus = np.asarray(x_minus, dtype=bool)
        if x_plus.shape != x_minus.shape:
            raise ValueError("arrival matrices must agree in shape")
        n_ticks = x_plus.shape[0]
        corr = np.zeros((n_ticks, self.n), dtype=bool)
        out = np.zeros((n_ticks, self.n), dtype=bool)
        for t in range(n_ticks):
            corr[t], out[t] = self.step(x_plus[t], x_minus[t])
        return corr, out


class SummationArray:
    """Fixed-weight integrators that merge many pulse trains into one.

    Every incoming pulse deposits theta/capacity, so a unit needs
    ``capacity`` pulses per output pulse and never gains more than
    theta in a single tick as long as its fan-in stays within
    capacity.  The overshoot discarded at reset is then bounded by the
    last tick's deposit, keeping the count compression small.
    """

    def __init__(self, n: int, capacity: int, *, theta: float = 1.0) -> None:
        if n <= 0:
            raise ValueError(f"need at least one unit, got {n}")
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.n = int(n)
        self.capacity = int(capacity)
        self.theta = float(theta)
        self.weight = self.theta / self.capacity
        self.acc = np.zeros(n)

    def step(self, arriving: np.ndarray) -> np.ndarray:
        """One tick; ``arriving`` counts pulses landing per unit now."""
        fired = self.acc >= self.theta
        self.acc = np.where(fired, 0.0, self.acc)
        self.acc = self.acc + arriving * self.weight
        return fired
