"""Weight-update rules for the two adaptive synapse families.

Both rules are explicit one-step integrations evaluated once per tick.
The membrane rule is slow and centred on half threshold: charge arriving
while the target accumulator sits above theta/2 strengthens the synapse
(for positive gain) and weakens it below, with an unconditional decay
that forgets weights the input statistics stop reinforcing.  The branch
rule is fast and effectively binary: a transmitted pulse that coincides
with held gate charge collapses the weight to zero before the charge is
delivered, anything else relaxes the weight back toward its resting
value.  The speed gap between the two rules is deliberate and large.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MembraneRuleParams",
    "DendriteRuleParams",
    "SynapseState",
    "membrane_update",
    "dendrite_update",
    "check_step_stability",
]


def _clamp(value, lo, hi):
    # order-stable, works for scalars and arrays alike
    return np.minimum(np.maximum(value, lo), hi)


@dataclass(frozen=True)
class MembraneRuleParams:
    """Slow rule driven by the postsynaptic accumulator level.

    ``gain`` may be negative: the counter-input synapse of a subtraction
    circuit uses the mirrored rule so that charge arriving on an empty
    accumulator strengthens it instead.
    """

    decay: float = 0.05        # 1/time, unconditional pull toward zero
    gain: float = 0.5          # charge response around half threshold
    theta: float = 1.0         # firing threshold of the target unit
    w_max: float = 2.0         # hard ceiling, twice threshold

    def __post_init__(self) -> None:
        if self.decay < 0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")
        if self.theta <= 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if self.w_max <= 0:
            raise ValueError(f"w_max must be > 0, got {self.w_max}")


@dataclass(frozen=True)
class DendriteRuleParams:
    """Fast gating rule for the transmission branch of an output unit.

    ``gate_gain`` is large and negative; with held gate charge above
    ``gate_threshold`` a single coincident pulse wipes the weight out.
    Without gate charge the bracket is slightly negative, so the same
    pulse nudges the weight up instead, and the relaxation term pulls
    it back toward ``rest`` whenever the branch is quiet.
    """

    relax: float = 8.0           # 1/time, recovery toward rest
    gate_gain: float = -1000.0   # collapse speed, negative
    rest: float = 1.0            # resting transmission weight
    gate_threshold: float = 0.02 # held charge below this is ignored
    w_max: float = 2.0

    def __post_init__(self) -> None:
        if self.relax < 0:
            raise ValueError(f"relax must be >= 0, got {self.relax}")
        if self.rest < 0:
            raise ValueError(f"rest must be >= 0, got {self.rest}")
        if self.gate_threshold < 0:
            raise ValueError(
                f"gate_threshold must be >= 0, got {self.gate_threshold}"
            )
        if self.w_max <= 0:
            raise ValueError(f"w_max must be > 0, got {self.w_max}")


@dataclass
class SynapseState:
    """Weight plus the rule that governs it.

    ``rule`` is one of ``fixed``, ``membrane``, ``dendrite``, ``gate``.
    Gate entries carry charge to a transmission branch's gate instead of
    the target accumulator, and their weight never changes.
    """

    weight: float
    rule: str = "fixed"
    params: MembraneRuleParams | DendriteRuleParams | None = field(default=None)

    def __post_init__(self) -> None:
        if self.rule not in ("fixed", "membrane", "dendrite", "gate"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.weight < 0:
            raise ValueError(f"weight must be >= 0, got {self.weight}")
        ceiling = getattr(self.params, "w_max", None)
        if ceiling is not None and self.weight > ceiling:
            raise ValueError(
                f"weight {self.weight} exceeds ceiling {ceiling}"
            )


def membrane_update(w, a_post, pre_fired, p: MembraneRuleParams, dt: float):
    """One tick of the slow rule.

    ``a_post`` is the target accumulator as the pulse arrives, before
    this tick's charge is integrated; ``pre_fired`` marks ticks with an
    arriving presynaptic pulse.  Scalar and array arguments broadcast.
    """
    drift = -p.decay * w + p.gain * (a_post - 0.5 * p.theta) * pre_fired
    return _clamp(w + dt * drift, 0.0, p.w_max)


def dendrite_update(
    w,
    pre_fired,
    minus_held,
    corr_held,
    minus_weight,
    corr_weight,
    p: DendriteRuleParams,
    dt: float,
):
    """One tick of the branch rule.

    ``minus_held`` and ``corr_held`` flag gate charge waiting on the
    branch from the two gate taps; the charge is only read out when a
    transmitted pulse (``pre_fired``) samples it.  Callers clear the
    held flags after a sampled tick.  Scalar and array arguments
    broadcast.
    """
    drive = corr_held * corr_weight + minus_held * minus_weight - p.gate_threshold
    drift = -p.relax * (w - p.rest) + p.gate_gain * drive * w * pre_fired
    return _clamp(w + dt * drift, 0.0, p.w_max)


def check_step_stability(dt: float, *params) -> None:
    """Reject dt/rate combinations whose relaxation step overshoots.

    An explicit step with dt * rate > 1 crosses its own fixed point and
    can oscillate between the clamp bounds instead of converging; every
    assembly validates its parameter set against its clock up front.
    """
    for p in params:
        if isinstance(p, MembraneRuleParams):
            if dt * p.decay > 1.0:
                raise ValueError(
                    f"membrane decay {p.decay} unstable at dt={dt}"
                )
        elif isinstance(p, DendriteRuleParams):
            if dt * p.relax > 1.0:
                raise ValueError(
                    f"branch relaxation {p.relax} unstable at dt={dt}"
                )
        else:
            raise TypeError(f"unsupported params {type(p).__name__}")
