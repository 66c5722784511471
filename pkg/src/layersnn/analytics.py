"""Network entropy, windowed spike counts, raster logs and their file exports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .topology import FF, Network


def neuron_entropy(weights) -> float:
    """Degree-normalised Shannon entropy of one neuron's outgoing weights.

    ``p_j = |w_j| / sum|w|`` over the non-zero weights; the result is divided
    by ``ln K`` so it lies in [0, 1]. ``K <= 1`` or an all-zero list gives 0.
    All weights must share one sign.
    """
    w = np.asarray(weights, dtype=np.float64)
    if (w > 0).any() and (w < 0).any():
        raise ValueError("weights mix excitatory and inhibitory signs")
    w = np.abs(w[w != 0])
    k = len(w)
    total = w.sum()
    if k <= 1 or total == 0:
        return 0.0
    if (w == w[0]).all():
        # exactly uniform; the float sum would land a few ulp short of 1
        return 1.0
    p = w / total
    return float(-np.sum(p * np.log(p)) / math.log(k))


@dataclass
class EntropyMap:
    """Per-neuron entropies of one layer, each of shape ``(H, W)``."""

    layer: int
    e_exc: np.ndarray
    e_inh: np.ndarray
    k_exc: np.ndarray
    k_inh: np.ndarray

    def mean_exc(self) -> float:
        """Mean over neurons with at least two excitatory outgoing synapses."""
        sel = self.k_exc >= 2
        return float(self.e_exc[sel].mean()) if sel.any() else 0.0

    def mean_inh(self) -> float:
        sel = self.k_inh >= 2
        return float(self.e_inh[sel].mean()) if sel.any() else 0.0


def layer_entropy_map(net: Network, layer: int, include_lateral: bool = False) -> EntropyMap:
    t = net.table
    n = net.n
    lo = layer * n
    sel = (t.pre >= lo) & (t.pre < lo + n) & (t.weight != 0)
    if not include_lateral:
        sel &= t.kind == FF
    pre = t.pre[sel] - lo
    w = t.weight[sel]
    mag = np.abs(w)
    inh = w < 0
    maps, ks = [], []
    for cls in (~inh, inh):
        pc, mc = pre[cls], mag[cls]
        k = np.bincount(pc, minlength=n)
        total = np.bincount(pc, weights=mc, minlength=n)
        p = mc / total[pc]
        h = -np.bincount(pc, weights=p * np.log(p), minlength=n)
        e = np.zeros(n)
        ok = k >= 2
        e[ok] = h[ok] / np.log(k[ok])
        w_max = np.full(n, -np.inf)
        w_min = np.full(n, np.inf)
        np.maximum.at(w_max, pc, mc)
        np.minimum.at(w_min, pc, mc)
        e[ok & (w_max == w_min)] = 1.0
        maps.append(np.clip(e, 0.0, 1.0).reshape(net.config.layer.shape))
        ks.append(k.reshape(net.config.layer.shape))
    return EntropyMap(layer, maps[0], maps[1], ks[0], ks[1])


@dataclass
class SpikeCountWindow:
    """Per-neuron spike counts over half-open windows of ``window_ms``."""

    num_neurons: int
    window_ms: float = 300.0
    dt: float = 1.0
    index: int = 0
    counts: np.ndarray = None

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.num_neurons, dtype=np.int64)

    def window_of(self, step: int) -> int:
        return int(math.floor(step * self.dt / self.window_ms))

    def update(self, spikes: np.ndarray, step: int) -> list[tuple[int, np.ndarray]]:
        """Count ``spikes`` of ``step``; return windows completed before it."""
        done = []
        w = self.window_of(step)
        while w > self.index:
            done.append((self.index, self.counts))
            self.counts = np.zeros(self.num_neurons, dtype=np.int64)
            self.index += 1
        self.counts += spikes
        return done


@dataclass
class RasterLog:
    steps: list = field(default_factory=list)
    ids: list = field(default_factory=list)

    def append(self, step: int, fired_ids: np.ndarray) -> None:
        if self.steps and step < self.steps[-1][0]:
            raise ValueError("raster steps must be nondecreasing")
        if len(fired_ids):
            self.steps.append(np.full(len(fired_ids), step, dtype=np.int64))
            self.ids.append(np.asarray(fired_ids, dtype=np.int64))

    def __len__(self) -> int:
        return sum(len(a) for a in self.ids)

    def records(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.ids:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.concatenate(self.steps), np.concatenate(self.ids)


def export_map_pgm(field_2d, path) -> None:
    """Plain ``P2`` graymap, maxval 255, pixel ``round(255 x)`` with halves rounded up."""
    x = np.asarray(field_2d, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("map must be two-dimensional")
    if not ((x >= 0) & (x <= 1)).all():
        raise ValueError("map values must lie in [0, 1]")
    px = np.floor(255.0 * x + 0.5).astype(np.int64)
    h, w = px.shape
    lines = [f"P2\n{w} {h}\n255"] + [" ".join(map(str, row)) for row in px]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = open(path).read().split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    return np.array(tokens[4:], dtype=np.int64).reshape(h, w)


def export_raster_csv(log: RasterLog, path) -> None:
    steps, ids = log.records()
    with open(path, "w", newline="\n") as fh:
        fh.write("step,neuron_id\n")
        for s, i in zip(steps.tolist(), ids.tolist()):
            fh.write(f"{s},{i}\n")


def export_counts_csv(windows: list[tuple[int, np.ndarray]], path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("window,neuron_id,count\n")
        for index, counts in windows:
            for nid, c in enumerate(counts.tolist()):
                fh.write(f"{index},{nid},{c}\n")


def hot_clusters(counts_2d: np.ndarray, quantile: float = 0.9) -> list[int]:
    """Sizes of 4-connected components among top-quantile (non-zero) count cells, largest first."""
    counts_2d = np.asarray(counts_2d)
    if counts_2d.max(initial=0) == 0:
        return []
    thresh = np.quantile(counts_2d, quantile)
    hot = (counts_2d >= thresh) & (counts_2d > 0)
    labels, n = ndimage.label(hot)
    sizes = np.bincount(labels.ravel())[1:]
    return sorted(sizes.tolist(), reverse=True)
