"""Spike traces, trace-based STDP and homeostatic inhibitory STDP.

One trace per neuron serves as both the pre- and the post-synaptic trace.
Per step the engine decays all traces, applies the weight rules with the
decayed (not yet bumped) values, then sets the trace of every neuron that
fired to ``T_MAX``. Only feed-forward synapses are plastic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

T_MAX = 2.0


@dataclass(frozen=True)
class PlasticityConfig:
    a_ltp: float = 0.010
    a_ltd: float = 0.012
    tau_trace: float = 20.0
    w_max_exc: float = 7.0
    w_max_inh_mag: float = 30.0
    istdp_enabled: bool = False
    istdp_eta: float = 0.001
    istdp_target_rate: float = 5.0  # Hz
    paper_literal_sign_convention: bool = False

    def __post_init__(self):
        for name in ("a_ltp", "a_ltd", "istdp_eta", "istdp_target_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.tau_trace <= 0 or self.w_max_exc <= 0 or self.w_max_inh_mag <= 0:
            raise ValueError("tau_trace and weight caps must be > 0")

    @property
    def istdp_alpha(self) -> float:
        """Homeostatic offset ``2 * rate * tau`` with the rate in spikes per ms."""
        return 2.0 * (self.istdp_target_rate / 1000.0) * self.tau_trace

    def decay_factor(self, dt: float = 1.0) -> float:
        return math.exp(-dt / self.tau_trace)

    def to_dict(self) -> dict:
        return asdict(self)


def decay_traces(traces: np.ndarray, factor: float) -> None:
    traces *= factor


def bump_traces(traces: np.ndarray, spikes: np.ndarray) -> None:
    traces[spikes] = T_MAX


def decay_and_bump_traces(traces: np.ndarray, spikes: np.ndarray, dt: float, tau_trace: float) -> np.ndarray:
    out = traces * math.exp(-dt / tau_trace)
    out[np.asarray(spikes, dtype=bool)] = T_MAX
    return out


@dataclass
class PlasticSets:
    """Synapse ids each rule may touch, fixed once per network."""

    stdp: np.ndarray  # FF with excitatory pre
    istdp: np.ndarray  # FF with inhibitory pre onto excitatory post

    @classmethod
    def from_network(cls, net) -> "PlasticSets":
        from .topology import FF

        t = net.table
        ff = t.kind == FF
        pre_inh = net.inhibitory[t.pre]
        post_inh = net.inhibitory[t.post]
        return cls(np.flatnonzero(ff & ~pre_inh), np.flatnonzero(ff & pre_inh & ~post_inh))


def apply_stdp(weights, pre, post, syn, spikes, traces, cfg: PlasticityConfig) -> None:
    """In-place trace STDP on synapses ``syn`` (feed-forward, excitatory pre).

    Default pairing: a pre spike depresses by ``a_ltd * w * T_post`` and a post
    spike potentiates by ``a_ltp * w * T_pre``; both apply on coincident spikes,
    depression first. The literal convention swaps which event potentiates.
    """
    p, q = pre[syn], post[syn]
    pf, qf = spikes[p], spikes[q]
    active = pf | qf
    if not active.any():
        return
    syn, p, q, pf, qf = syn[active], p[active], q[active], pf[active], qf[active]
    w = weights[syn]
    if cfg.paper_literal_sign_convention:
        w = np.where(pf, w + cfg.a_ltp * w * traces[q], w)
        w = np.where(qf, w - cfg.a_ltd * w * traces[p], w)
    else:
        w = np.where(pf, w - cfg.a_ltd * w * traces[q], w)
        w = np.where(qf, w + cfg.a_ltp * w * traces[p], w)
    weights[syn] = np.clip(w, 0.0, cfg.w_max_exc)


def apply_istdp(weights, pre, post, syn, spikes, traces, cfg: PlasticityConfig) -> None:
    """In-place homeostatic rule on inhibitory-pre synapses onto excitatory posts.

    Magnitudes move by ``eta * (T_post - alpha)`` on a pre spike and by
    ``eta * T_pre`` on a post spike, so a post neuron firing above the target
    rate accumulates inhibition while a silent one sheds it.
    """
    if not cfg.istdp_enabled:
        return
    p, q = pre[syn], post[syn]
    pf, qf = spikes[p], spikes[q]
    active = pf | qf
    if not active.any():
        return
    syn, p, q, pf, qf = syn[active], p[active], q[active], pf[active], qf[active]
    m = -weights[syn]
    m = np.where(pf, m + cfg.istdp_eta * (traces[q] - cfg.istdp_alpha), m)
    m = np.where(qf, m + cfg.istdp_eta * traces[p], m)
    weights[syn] = -np.clip(m, 0.0, cfg.w_max_inh_mag)


def clamp_weights(weights: np.ndarray, pre_inhibitory: np.ndarray, cfg: PlasticityConfig) -> np.ndarray:
    """Project every weight onto its polarity interval, in place; returns ``weights``."""
    np.copyto(
        weights,
        np.where(
            pre_inhibitory,
            np.clip(weights, -cfg.w_max_inh_mag, 0.0),
            np.clip(weights, 0.0, cfg.w_max_exc),
        ),
    )
    return weights
