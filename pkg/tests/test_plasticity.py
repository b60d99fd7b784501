"""Weight-rule tests: slow membrane rule, fast branch rule, guards."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulsegabor.plasticity import (
    DendriteRuleParams,
    MembraneRuleParams,
    SynapseState,
    check_step_stability,
    dendrite_update,
    membrane_update,
)


class TestMembraneRule:
    def test_decay_only_on_quiet_ticks(self):
        p = MembraneRuleParams(decay=0.05)
        # no pulse: w' = w * (1 - dt*decay);  1.0 -> 0.9 at dt = 2
        assert membrane_update(1.0, 0.0, False, p, 2.0) == pytest.approx(0.9)

    def test_drive_brackets_zero_at_half_threshold(self):
        p = MembraneRuleParams(decay=0.05, gain=0.5, theta=1.0)
        at_half = membrane_update(1.0, 0.5, True, p, 0.1)
        quiet = membrane_update(1.0, 0.5, False, p, 0.1)
        assert at_half == pytest.approx(quiet)  # pulse term vanishes exactly

    def test_positive_gain_strengthens_above_half(self):
        p = MembraneRuleParams(decay=0.0, gain=0.5)
        assert membrane_update(1.0, 0.9, True, p, 0.1) > 1.0
        assert membrane_update(1.0, 0.1, True, p, 0.1) < 1.0

    def test_negative_gain_mirrors(self):
        p = MembraneRuleParams(decay=0.0, gain=-0.5)
        # charge landing on an empty accumulator strengthens instead
        assert membrane_update(1.0, 0.0, True, p, 0.1) > 1.0
        assert membrane_update(1.0, 1.0, True, p, 0.1) < 1.0

    def test_clamped_to_floor_and_ceiling(self):
        p = MembraneRuleParams(decay=0.0, gain=100.0, w_max=2.0)
        assert membrane_update(1.9, 1.0, True, p, 1.0) == 2.0
        assert membrane_update(0.1, 0.0, True, p, 1.0) == 0.0

    def test_array_broadcast_matches_scalar_loop(self):
        p = MembraneRuleParams()
        w = np.array([0.2, 0.5, 1.7])
        a = np.array([0.0, 0.6, 0.3])
        fired = np.array([True, False, True])
        out = membrane_update(w, a, fired, p, 0.1)
        for i in range(3):
            assert out[i] == membrane_update(w[i], a[i], bool(fired[i]), p, 0.1)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            MembraneRuleParams(decay=-0.1)
        with pytest.raises(ValueError):
            MembraneRuleParams(theta=0.0)
        with pytest.raises(ValueError):
            MembraneRuleParams(w_max=0.0)

    @settings(max_examples=100, deadline=None)
    @given(
        w=st.floats(min_value=0.0, max_value=2.0),
        a=st.floats(min_value=0.0, max_value=1.0),
        fired=st.booleans(),
        gain=st.floats(min_value=-5.0, max_value=5.0),
        dt=st.floats(min_value=1e-4, max_value=1.0),
    )
    def test_weight_stays_bounded(self, w, a, fired, gain, dt):
        p = MembraneRuleParams(gain=gain)
        out = membrane_update(w, a, fired, p, dt)
        assert 0.0 <= out <= p.w_max


class TestDendriteRule:
    def test_held_charge_plus_pulse_collapses(self):
        p = DendriteRuleParams()
        out = dendrite_update(1.0, True, True, False, 1.0, 1.0, p, 0.1)
        assert out == 0.0
        out = dendrite_update(1.0, True, False, True, 1.0, 1.0, p, 0.1)
        assert out == 0.0

    def test_held_charge_without_pulse_is_inert(self):
        p = DendriteRuleParams()
        out = dendrite_update(1.0, False, True, True, 1.0, 1.0, p, 0.1)
        assert out == pytest.approx(1.0)  # at rest, relaxation has nothing to do

    def test_pulse_without_charge_nudges_up(self):
        # empty gates leave the drive slightly negative (-gate_threshold),
        # so an unopposed pulse grows the weight a little
        p = DendriteRuleParams(relax=0.0)
        out = dendrite_update(1.0, True, False, False, 1.0, 1.0, p, 0.1)
        assert out > 1.0

    def test_charge_below_gate_threshold_ignored(self):
        p = DendriteRuleParams(relax=0.0, gate_threshold=0.5)
        out = dendrite_update(1.0, True, True, False, 0.3, 1.0, p, 0.1)
        assert out > 1.0  # 0.3 held is under the 0.5 floor: no collapse

    def test_relaxation_toward_rest(self):
        p = DendriteRuleParams(relax=8.0, rest=1.0)
        w = 0.0
        seen = []
        for _ in range(3):
            w = dendrite_update(w, False, False, False, 1.0, 1.0, p, 0.1)
            seen.append(w)
        assert seen == [pytest.approx(0.8), pytest.approx(0.96), pytest.approx(0.992)]

    def test_deadbeat_relaxation_recovers_in_one_tick(self):
        dt = 0.0025
        p = DendriteRuleParams(relax=1.0 / dt)
        assert dendrite_update(0.0, False, False, False, 1.0, 1.0, p, dt) == pytest.approx(1.0)
        assert dendrite_update(1.7, False, False, False, 1.0, 1.0, p, dt) == pytest.approx(1.0)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            DendriteRuleParams(relax=-1.0)
        with pytest.raises(ValueError):
            DendriteRuleParams(rest=-0.5)
        with pytest.raises(ValueError):
            DendriteRuleParams(gate_threshold=-0.01)
        with pytest.raises(ValueError):
            DendriteRuleParams(w_max=0.0)

    @settings(max_examples=100, deadline=None)
    @given(
        w=st.floats(min_value=0.0, max_value=2.0),
        pulse=st.booleans(),
        h0=st.booleans(),
        h1=st.booleans(),
        dt=st.floats(min_value=1e-4, max_value=0.1),
    )
    def test_weight_stays_bounded(self, w, pulse, h0, h1, dt):
        p = DendriteRuleParams()
        out = dendrite_update(w, pulse, h0, h1, 1.0, 1.0, p, dt)
        assert 0.0 <= out <= p.w_max

    def test_speed_separation_at_shared_clock(self):
        # one tick of the branch rule moves farther than one tick of the
        # membrane rule by orders of magnitude: that gap is the design
        dt = 0.1
        slow = MembraneRuleParams()
        fast = DendriteRuleParams()
        dw_slow = abs(membrane_update(0.5, 0.0, True, slow, dt) - 0.5)
        dw_fast = abs(dendrite_update(1.0, True, True, False, 1.0, 1.0, fast, dt) - 1.0)
        assert dw_fast > 30 * dw_slow


class TestGuards:
    def test_stability_check(self):
        check_step_stability(0.1, MembraneRuleParams(), DendriteRuleParams())
        with pytest.raises(ValueError):
            check_step_stability(0.2, DendriteRuleParams(relax=8.0))
        with pytest.raises(ValueError):
            check_step_stability(30.0, MembraneRuleParams(decay=0.05))
        with pytest.raises(TypeError):
            check_step_stability(0.1, object())

    def test_synapse_state_validation(self):
        SynapseState(1.0)
        with pytest.raises(ValueError):
            SynapseState(1.0, "unknown")
        with pytest.raises(ValueError):
            SynapseState(-0.5)
        with pytest.raises(ValueError):
            SynapseState(3.0, "membrane", MembraneRuleParams(w_max=2.0))
