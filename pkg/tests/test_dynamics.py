import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layersnn.dynamics import (
    NumericFault,
    gather_currents,
    inject_input_layer,
    izhikevich_step,
    resting_state,
    synaptic_current,
)
from layersnn.topology import FF, LAT, LayerSpec, SynapseTable

RS = dict(a=0.02, b=0.2, c=-65.0, d=2.0)


def reference_spike_times(current, steps, a=0.02, b=0.2, c=-65.0, d=2.0, v=-65.0, threshold=-30.0):
    """Straight-line scalar version of the two-half-step scheme."""
    u = b * v
    times = []
    for t in range(steps):
        v = v + 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
        v = v + 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
        u = u + (a * (b * v - u))
        if v >= threshold:
            times.append(t)
            v = c
            u = u + d
    return times


def engine_spike_times(current, steps):
    v, u = np.array([-65.0]), np.array([-13.0])
    times = []
    for t in range(steps):
        v, u, fired = izhikevich_step(v, u, **RS, current=np.array([current]))
        if fired[0]:
            times.append(t)
    return times


def test_rest_derivative_and_first_half_step():
    dv = 0.04 * (-65.0) ** 2 + 5 * (-65.0) + 140 - (-13.0) + 0
    assert dv == pytest.approx(-3.0, abs=1e-12)
    v, u, fired = izhikevich_step(np.array([-65.0]), np.array([-13.0]), **RS, current=np.array([0.0]))
    assert not fired[0]
    half = -65.0 + 0.5 * -3.0
    second = 0.04 * half * half + 5 * half + 140 + 13.0
    assert v[0] == pytest.approx(half + 0.5 * second, abs=1e-12)
    assert u[0] == pytest.approx(-13.0 + 0.02 * (0.2 * v[0] + 13.0), abs=1e-12)


@pytest.mark.parametrize("u0", [-20.0, -13.0, 0.0, 10.0, 20.0])
def test_near_threshold_fires_and_resets(u0):
    v, u, fired = izhikevich_step(np.array([-29.0]), np.array([u0]), **RS, current=np.array([0.0]))
    assert fired[0]
    assert v[0] == RS["c"]
    # u advanced one step with the pre-reset voltage, then gained d
    vv = -29.0
    vv = vv + 0.5 * (0.04 * vv * vv + 5 * vv + 140 - u0)
    vv = vv + 0.5 * (0.04 * vv * vv + 5 * vv + 140 - u0)
    assert u[0] == (u0 + 0.02 * (0.2 * vv - u0)) + 2.0


def test_tonic_spiking_matches_reference():
    ref = reference_spike_times(10.0, 1000)
    assert len(ref) > 10
    assert engine_spike_times(10.0, 1000) == ref


def test_reset_invariant_vectorised():
    rng = np.random.default_rng(0)
    v = rng.uniform(-80, -20, 500)
    u = rng.uniform(-20, 10, 500)
    c = rng.uniform(-65, -50, 500)
    d = rng.uniform(-4, 2, 500)
    v2, u2, fired = izhikevich_step(v, u, 0.02, 0.2, c, d, rng.uniform(0, 30, 500))
    assert fired.any()
    assert np.array_equal(v2[fired], c[fired])
    assert np.all(v2 < -30.0)


def test_resting_equilibrium_is_stable():
    v0, u0 = resting_state(0.2)
    assert v0 == pytest.approx(-70.0)
    v, u = np.array([v0]), np.array([u0])
    for _ in range(1000):
        v, u, fired = izhikevich_step(v, u, **RS, current=np.zeros(1))
        assert not fired[0]
    assert abs(v[0] - v0) < 1e-6 and abs(u[0] - u0) < 1e-6


def test_gain_20_drives_spike_quickly():
    assert engine_spike_times(20.0, 10)[0] <= 5


def test_non_finite_raises_numeric_fault():
    with pytest.raises(NumericFault) as exc:
        izhikevich_step(np.array([-65.0, np.nan]), np.zeros(2), **RS, current=np.zeros(2), step=7)
    assert exc.value.neuron == 1 and exc.value.step == 7
    with pytest.raises(NumericFault):
        izhikevich_step(np.array([-65.0]), np.zeros(1), **RS, current=np.array([1e308]))


class TestInputInjection:
    def test_zero_frame(self):
        assert np.all(inject_input_layer(np.zeros((4, 4), bool), 20.0) == 0)

    def test_paper_literal_gain(self):
        f = np.zeros((4, 4), bool)
        f[1, 2] = True
        cur = inject_input_layer(f, 1.0)
        assert cur[6] == 1.0 and cur.sum() == 1.0

    def test_default_gain(self):
        f = np.ones((2, 2), bool)
        assert np.all(inject_input_layer(f, 20.0) == 20.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            inject_input_layer(np.zeros((3, 4)), 20.0, shape=(4, 4))


def table_from(entries, num_neurons):
    """entries: (pre, post, kind, weight), already canonical."""
    pre = np.array([e[0] for e in entries], dtype=np.int64)
    post = np.array([e[1] for e in entries], dtype=np.int64)
    kind = np.array([e[2] for e in entries], dtype=np.uint8)
    w = np.array([e[3] for e in entries], dtype=float)
    indptr = np.zeros(num_neurons + 1, dtype=np.int64)
    np.cumsum(np.bincount(post, minlength=num_neurons), out=indptr[1:])
    return SynapseTable(num_neurons, LayerSpec(1, 1), pre, post, kind, w, indptr)


class TestSynapticCurrent:
    table = table_from([(0, 3, FF, 3.0), (1, 3, FF, -30.0), (2, 3, FF, 7.0), (4, 3, LAT, 1.5)], 5)

    def test_no_pre_fired(self):
        assert synaptic_current(3, self.table, np.zeros(5, bool)) == 0.0

    def test_single_cap_weight(self):
        s = np.zeros(5, bool)
        s[2] = True
        assert synaptic_current(3, self.table, s) == 7.0

    def test_excitatory_plus_inhibitory(self):
        s = np.zeros(5, bool)
        s[[0, 1]] = True
        assert synaptic_current(3, self.table, s) == -27.0

    def test_gather_matches_scalar(self):
        s = np.array([1, 1, 0, 0, 1], bool)
        cur = gather_currents(self.table, s)
        assert cur[3] == synaptic_current(3, self.table, s) == 3.0 - 30.0 + 1.5


@settings(max_examples=60, deadline=None)
@given(
    weights=st.lists(st.floats(-30, 7, allow_nan=False), min_size=1, max_size=40),
    data=st.data(),
)
def test_gather_is_bitwise_canonical_sum(weights, data):
    n = len(weights)
    spikes = np.array(data.draw(st.lists(st.booleans(), min_size=n + 1, max_size=n + 1)))
    entries = [(i, n, FF, w) for i, w in enumerate(weights)]
    table = table_from(entries, n + 1)
    total = 0.0
    for i, w in enumerate(weights):
        total += w * float(spikes[i])
    assert gather_currents(table, spikes)[n] == total
    # additivity over a split of the incoming list, at higher precision
    k = len(weights) // 2
    exact = math.fsum(w for w, s in zip(weights, spikes) if s)
    lo = math.fsum(w for w, s in zip(weights[:k], spikes[:k]) if s)
    hi = math.fsum(w for w, s in zip(weights[k:], spikes[k:n]) if s)
    assert lo + hi == pytest.approx(exact, abs=1e-9)

