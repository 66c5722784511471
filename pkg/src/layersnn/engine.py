"""Simulation state and the per-step pipeline.

A step runs these phases in order, each finishing before the next starts:

1. layer-1 current from the active input frame
2. currents for deeper layers, gathered from the previous step's spikes
3. Izhikevich update of every neuron, producing this step's spikes
4. trace decay
5. STDP / iSTDP (when training) with this step's spikes and decayed traces
6. trace bump for this step's spikes
7. weight clamp
8. buffer swap, counters, analytics windows
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dynamics, plasticity
from .analytics import SpikeCountWindow
from .plasticity import PlasticityConfig, PlasticSets
from .rng import RandomStream
from .topology import Network, TopologyConfig, build_network


class StimulusExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    dt: float = 1.0
    v_threshold: float = dynamics.V_THRESHOLD
    input_gain: float = dynamics.DEFAULT_INPUT_GAIN
    window_ms: float = 10.0
    train: bool = True
    loop_stimulus: bool = False
    psth_window_ms: float = 300.0
    entropy_every_ms: float = 300.0
    entropy_include_lateral: bool = False
    checkpoint_every: int = 10000
    downscale: int = 1

    def __post_init__(self):
        if self.dt != 1.0:
            raise ValueError("only dt = 1 ms is supported")
        if self.window_ms <= 0 or self.psth_window_ms <= 0 or self.entropy_every_ms <= 0:
            raise ValueError("windows must be positive")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def config_document(topology: TopologyConfig, plast: PlasticityConfig, engine: EngineConfig) -> dict:
    return {"topology": topology.to_dict(), "plasticity": plast.to_dict(), "engine": engine.to_dict()}


def config_digest(doc: dict) -> bytes:
    import json

    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).digest()


@dataclass
class StepReport:
    step: int
    spikes_per_layer: list[int]
    fired: np.ndarray
    wall_time: float
    completed_windows: list = field(default_factory=list)


@dataclass
class SimulationState:
    net: Network
    plasticity: PlasticityConfig
    engine: EngineConfig
    v: np.ndarray
    u: np.ndarray
    traces: np.ndarray
    spikes_prev: np.ndarray
    rng: RandomStream
    counts: SpikeCountWindow
    step: int = 0
    raster_digest: bytes = b"\x00" * 32
    spike_total: int = 0
    currents: np.ndarray | None = None
    _sets: PlasticSets | None = None

    @classmethod
    def fresh(cls, topology: TopologyConfig, plast: PlasticityConfig | None = None,
              engine: EngineConfig | None = None) -> "SimulationState":
        plast = plast or PlasticityConfig()
        engine = engine or EngineConfig()
        net, rng = build_network(topology)
        N = net.num_neurons
        v = np.full(N, dynamics.V_REST)
        return cls(
            net=net,
            plasticity=plast,
            engine=engine,
            v=v,
            u=net.params.b * v,
            traces=np.zeros(N),
            spikes_prev=np.zeros(N, dtype=bool),
            rng=rng,
            counts=SpikeCountWindow(N, engine.psth_window_ms, engine.dt),
        )

    @property
    def sets(self) -> PlasticSets:
        if self._sets is None:
            self._sets = PlasticSets.from_network(self.net)
        return self._sets

    @property
    def elapsed_ms(self) -> float:
        return self.step * self.engine.dt

    def config_doc(self) -> dict:
        return config_document(self.net.config, self.plasticity, self.engine)

    def frame_index(self) -> int:
        return int(math.floor(self.elapsed_ms / self.engine.window_ms))

    def weights_digest(self) -> str:
        return hashlib.sha256(self.net.table.weight.tobytes()).hexdigest()

    def state_digest(self) -> str:
        """Digest over weights, neuron state, traces, buffers, counters and raster history."""
        h = hashlib.sha256()
        for arr in (self.net.table.weight, self.v, self.u, self.traces, self.spikes_prev, self.counts.counts):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(self.step.to_bytes(8, "little"))
        h.update(self.raster_digest)
        return h.hexdigest()


def select_frame(state: SimulationState, frames: np.ndarray | None) -> np.ndarray | None:
    if frames is None:
        return None
    idx = state.frame_index()
    if idx >= len(frames):
        if not state.engine.loop_stimulus or len(frames) == 0:
            raise StimulusExhausted(f"stimulus has {len(frames)} frames, step {state.step} needs frame {idx}")
        idx %= len(frames)
    return frames[idx]


def step(state: SimulationState, frames: np.ndarray | None = None, train: bool | None = None) -> StepReport:
    """Advance ``state`` by one step in place and report what fired."""
    t0 = time.perf_counter()
    net, eng, cfg = state.net, state.engine, state.plasticity
    n, N = net.n, net.num_neurons
    train = eng.train if train is None else train
    table = net.table

    current = np.empty(N)
    frame = select_frame(state, frames)
    if frame is None:
        current[:n] = 0.0
    else:
        current[:n] = dynamics.inject_input_layer(frame, eng.input_gain, net.config.layer.shape)
    current[n:] = dynamics.gather_currents(table, state.spikes_prev, start=n)
    state.currents = current

    p = net.params
    v, u, fired = dynamics.izhikevich_step(
        state.v, state.u, p.a, p.b, p.c, p.d, current, eng.dt, eng.v_threshold, step=state.step
    )
    state.v, state.u = v, u

    plasticity.decay_traces(state.traces, cfg.decay_factor(eng.dt))
    if train:
        sets = state.sets
        plasticity.apply_stdp(table.weight, table.pre, table.post, sets.stdp, fired, state.traces, cfg)
        plasticity.apply_istdp(table.weight, table.pre, table.post, sets.istdp, fired, state.traces, cfg)
    plasticity.bump_traces(state.traces, fired)
    if train:
        plasticity.clamp_weights(table.weight, net.inhibitory[table.pre], cfg)

    ids = np.flatnonzero(fired)
    state.raster_digest = hashlib.sha256(
        state.raster_digest + state.step.to_bytes(8, "little") + ids.astype("<i8").tobytes()
    ).digest()
    state.spike_total += len(ids)
    windows = state.counts.update(fired, state.step)
    state.spikes_prev = fired
    report = StepReport(
        step=state.step,
        spikes_per_layer=np.bincount(ids // n, minlength=net.config.num_layers).tolist(),
        fired=ids,
        wall_time=time.perf_counter() - t0,
        completed_windows=windows,
    )
    state.step += 1
    return report
