"""Full runs: stimulus preparation, stepping, artifact cadence and summaries."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import analytics
from .checkpoint import save_checkpoint
from .config import RunConfig
from .engine import SimulationState, StimulusExhausted, step
from .events import batch_frames, gen_moving_bar, read_events


def stimulus_frames(config: RunConfig) -> np.ndarray:
    stim, layer = config.stimulus, config.topology.layer
    if stim.path:
        stream = read_events(stim.path)
    else:
        stream = gen_moving_bar(layer.width, layer.height, stim.bar_width, stim.speed_px_per_s,
                                stim.duration_ms, stim.seed)
    return batch_frames(stream, config.engine.window_ms, layer.shape, config.engine.downscale)


@dataclass
class RunSummary:
    steps: int
    spikes_per_layer: list[int]
    mean_entropy_exc: list[float]
    mean_entropy_inh: list[float]
    initial_mean_entropy_exc: list[float]
    halted_early: bool
    state_digest: str
    artifacts: dict[str, str] = field(default_factory=dict)  # name -> sha256

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def entropy_maps(state: SimulationState) -> list[analytics.EntropyMap]:
    lat = state.engine.entropy_include_lateral
    return [analytics.layer_entropy_map(state.net, ell, lat) for ell in range(state.net.config.num_layers)]


def _write_maps(out: Path, maps, tag: str) -> None:
    for m in maps:
        analytics.export_map_pgm(m.e_exc, out / f"entropy_L{m.layer + 1}_exc_{tag}.pgm")
        analytics.export_map_pgm(m.e_inh, out / f"entropy_L{m.layer + 1}_inh_{tag}.pgm")


def run(
    config: RunConfig,
    frames: np.ndarray | None = None,
    steps: int | None = None,
    out_dir=None,
    state: SimulationState | None = None,
    on_window: Callable[[int, list[int], list[float]], None] | None = None,
    keep_windows: bool = False,
) -> tuple[RunSummary, SimulationState, list]:
    """Run ``steps`` steps from ``state`` (or a fresh build) and write artifacts.

    ``on_window`` receives ``(window_index, spikes_per_layer, mean_e_exc_per_layer)``
    each time a PSTH window completes. Returns the summary, the final state and
    the completed PSTH windows when ``keep_windows`` is set.
    """
    steps = config.steps if steps is None else steps
    if state is None:
        state = SimulationState.fresh(config.topology, config.plasticity, config.engine)
    if frames is None:
        frames = stimulus_frames(config)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    L, n = state.net.config.num_layers, state.net.n
    eng = state.engine
    initial = entropy_maps(state)
    if out is not None:
        _write_maps(out, initial, f"t{state.step:08d}")
    raster = analytics.RasterLog()
    windows = []
    totals = np.zeros(L, dtype=np.int64)
    entropy_period = max(1, int(round(eng.entropy_every_ms / eng.dt)))
    halted = False

    def window_done(index, counts):
        if keep_windows or out is not None:
            windows.append((index, counts))
        if on_window is not None:
            per_layer = counts.reshape(L, n).sum(axis=1).tolist()
            on_window(index, per_layer, [m.mean_exc() for m in entropy_maps(state)])

    for _ in range(steps):
        try:
            report = step(state, frames)
        except StimulusExhausted:
            halted = True
            break
        raster.append(report.step, report.fired)
        totals += report.spikes_per_layer
        for index, counts in report.completed_windows:
            window_done(index, counts)
        if out is not None:
            if state.step % entropy_period == 0:
                _write_maps(out, entropy_maps(state), f"t{state.step:08d}")
            if eng.checkpoint_every and state.step % eng.checkpoint_every == 0:
                save_checkpoint(state, out / f"ckpt_{state.step:08d}.snnc")

    final = entropy_maps(state)
    summary = RunSummary(
        steps=state.step,
        spikes_per_layer=totals.tolist(),
        mean_entropy_exc=[m.mean_exc() for m in final],
        mean_entropy_inh=[m.mean_inh() for m in final],
        initial_mean_entropy_exc=[m.mean_exc() for m in initial],
        halted_early=halted,
        state_digest=state.state_digest(),
    )
    if out is not None:
        _write_maps(out, final, "final")
        analytics.export_raster_csv(raster, out / "raster.csv")
        analytics.export_counts_csv(windows, out / "counts.csv")
        save_checkpoint(state, out / "final.snnc")
        summary.artifacts = {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(out.iterdir())
            if p.is_file() and p.name != "summary.json"
        }
        (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
    return summary, state, windows

