"""Izhikevich membrane update, input injection and synaptic current gathering."""

from __future__ import annotations

import numpy as np

from .topology import SynapseTable

V_THRESHOLD = -30.0
V_REST = -65.0
DEFAULT_INPUT_GAIN = 20.0


class NumericFault(FloatingPointError):
    """A neuron state or input became non-finite."""

    def __init__(self, neuron: int, step: int | None = None, detail: str = ""):
        self.neuron = neuron
        self.step = step
        where = f"neuron {neuron}" + (f" at step {step}" if step is not None else "")
        super().__init__(f"non-finite value in {where}{': ' + detail if detail else ''}")


def izhikevich_step(v, u, a, b, c, d, current, dt=1.0, threshold=V_THRESHOLD, step=None):
    """Advance every neuron by one ``dt``.

    ``v`` takes two forward-Euler half steps, then ``u`` one full step using the
    new ``v``; neurons at or above ``threshold`` reset to ``c`` and gain ``d``.
    The arithmetic sequence is fixed so a scalar reimplementation agrees
    bit-for-bit. Returns new ``(v, u, fired)`` arrays.
    """
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    current = np.asarray(current, dtype=np.float64)
    bad = ~(np.isfinite(v) & np.isfinite(u) & np.isfinite(current))
    if bad.any():
        raise NumericFault(int(np.flatnonzero(bad.ravel())[0]), step, "state or input")
    h = 0.5 * dt
    with np.errstate(over="ignore", invalid="ignore"):
        v = v + h * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
        v = v + h * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
        u = u + dt * (a * (b * v - u))
    if not np.isfinite(v).all():
        raise NumericFault(int(np.flatnonzero(~np.isfinite(v).ravel())[0]), step, "voltage diverged")
    fired = v >= threshold
    v = np.where(fired, c, v)
    u = np.where(fired, u + d, u)
    return v, u, fired


def resting_state(b: float) -> tuple[float, float]:
    """Stable fixed point of the zero-input dynamics for recovery sensitivity ``b``."""
    # 0.04 v^2 + (5 - b) v + 140 = 0, lower root is stable
    p = 5.0 - b
    v = (-p - np.sqrt(p * p - 4 * 0.04 * 140.0)) / (2 * 0.04)
    return float(v), float(b * v)


def inject_input_layer(frame, gain: float = DEFAULT_INPUT_GAIN, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Flat layer-1 current ``gain * frame`` from a binary frame."""
    frame = np.asarray(frame)
    if shape is not None and frame.shape != tuple(shape):
        raise ValueError(f"frame shape {frame.shape} does not match layer shape {tuple(shape)}")
    return gain * frame.astype(np.float64).ravel()


def synaptic_current(post: int, table: SynapseTable, prev_spikes) -> float:
    """Sum of ``weight * spiked`` over the incoming list of ``post``, in canonical order."""
    total = 0.0
    for s in range(table.indptr[post], table.indptr[post + 1]):
        if prev_spikes[table.pre[s]]:
            total += float(table.weight[s])
    return total


def gather_currents(table: SynapseTable, prev_spikes: np.ndarray, start: int = 0) -> np.ndarray:
    """Currents into every post neuron with id >= ``start``.

    ``np.bincount`` accumulates each bin sequentially in input order, and the
    table is sorted canonically, so each sum matches ``synaptic_current``
    exactly.
    """
    contrib = table.weight * prev_spikes[table.pre]
    n_out = table.num_neurons - start
    return np.bincount(table.post - start, weights=contrib, minlength=n_out)[:n_out]
