"""Throughput measurement for the sparse engine and the dense oracle."""

from __future__ import annotations

import dataclasses
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, replace_section
from .engine import SimulationState, step
from .oracle import DenseState, dense_oracle_step, oracle_frame
from .runner import stimulus_frames

RATIO_BAND = (1.2, 3.0)


@dataclass
class BenchReport:
    steps: int
    neurons: int = 0
    synapses: int = 0
    rate_plastic_off: float | None = None  # steps/s
    rate_plastic_on: float | None = None
    plasticity_ratio: float | None = None  # off / on
    synapse_events_per_s: float | None = None
    oracle_steps: int = 0
    oracle_rate: float | None = None
    oracle_speedup: float | None = None  # sparse (plastic) / oracle

    @property
    def empty(self) -> bool:
        return self.steps == 0

    def rows(self) -> list[tuple[str, str]]:
        def fmt(x):
            return "-" if x is None else f"{x:.4g}"

        return [
            ("steps", str(self.steps)),
            ("neurons", str(self.neurons)),
            ("synapses", str(self.synapses)),
            ("steps/s (plasticity off)", fmt(self.rate_plastic_off)),
            ("steps/s (plasticity on)", fmt(self.rate_plastic_on)),
            ("plasticity overhead (off/on)", fmt(self.plasticity_ratio)),
            ("synapse events/s", fmt(self.synapse_events_per_s)),
            ("oracle steps/s", fmt(self.oracle_rate)),
            ("sparse/oracle speedup", fmt(self.oracle_speedup)),
        ]

    def to_csv(self) -> str:
        names = [f.name for f in dataclasses.fields(self)]
        vals = ["" if getattr(self, k) is None else repr(getattr(self, k)) for k in names]
        return ",".join(names) + "\n" + ",".join(vals) + "\n"


def _timed(state, frames, steps, train):
    out_degree = np.bincount(state.net.table.pre, minlength=state.net.num_neurons)
    events = 0
    t0 = time.perf_counter()
    for _ in range(steps):
        r = step(state, frames, train=train)
        events += int(out_degree[r.fired].sum())
    return time.perf_counter() - t0, events


def benchmark(
    config: RunConfig,
    steps: int,
    warmup: int = 20,
    compare_oracle: bool = False,
    oracle_steps: int = 3,
    frames: np.ndarray | None = None,
) -> BenchReport:
    """Time ``steps`` sparse steps with plasticity off and on, after ``warmup`` untimed steps.

    The off/on ratio is checked against ``RATIO_BAND`` and only warned about.
    """
    if steps <= 0:
        return BenchReport(steps=0)
    config = replace_section(config, "engine", loop_stimulus=True)
    if frames is None:
        frames = stimulus_frames(config)
    report = BenchReport(steps=steps)
    rates = {}
    for train in (False, True):
        state = SimulationState.fresh(config.topology, config.plasticity, config.engine)
        for _ in range(warmup):
            step(state, frames, train=train)
        elapsed, events = _timed(state, frames, steps, train)
        rates[train] = steps / elapsed
        if not train:
            report.synapse_events_per_s = events / elapsed
            report.neurons = state.net.num_neurons
            report.synapses = len(state.net.table)
    report.rate_plastic_off, report.rate_plastic_on = rates[False], rates[True]
    report.plasticity_ratio = rates[False] / rates[True]
    lo, hi = RATIO_BAND
    if not lo <= report.plasticity_ratio <= hi:
        warnings.warn(
            f"plasticity off/on throughput ratio {report.plasticity_ratio:.3g} outside [{lo}, {hi}]",
            RuntimeWarning,
            stacklevel=2,
        )

    if compare_oracle and oracle_steps > 0:
        state = SimulationState.fresh(config.topology, config.plasticity, config.engine)
        for _ in range(warmup):
            step(state, frames, train=True)
        ds = DenseState.from_state(state)
        t0 = time.perf_counter()
        for _ in range(oracle_steps):
            dense_oracle_step(ds, oracle_frame(ds, frames), train=True)
        report.oracle_steps = oracle_steps
        report.oracle_rate = oracle_steps / (time.perf_counter() - t0)
        report.oracle_speedup = report.rate_plastic_on / report.oracle_rate
    return report
