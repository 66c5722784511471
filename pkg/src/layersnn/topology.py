"""Layered sheet construction: polarity, neuron parameters, kernel connectivity.

Neurons are addressed by a global id ``layer * n + row * width + col`` where
``n = width * height``. Synapses are stored incoming-indexed: sorted by post
neuron, feed-forward entries before lateral ones, each group ascending by pre
id. Plasticity mutates ``SynapseTable.weight`` in place and never reorders.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .rng import RandomStream

FF = 0
LAT = 1


@dataclass(frozen=True)
class LayerSpec:
    width: int = 32
    height: int = 32

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"layer dimensions must be >= 1, got {self.width}x{self.height}")

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True)
class TopologyConfig:
    num_layers: int = 3
    layer: LayerSpec = field(default_factory=LayerSpec)
    kernel_ff: int = 5
    kernel_lat: int = 5
    p_keep_ff: float = 0.20
    p_keep_lat: float = 0.30
    inhibitory_fraction: float = 0.20
    w_init_max_exc: float = 7.0
    w_init_max_inh_mag: float = 30.0
    # Initial weights are drawn from [(1 - spread) * max, max]; spread = 1 is
    # the full (0, max] range.
    w_init_spread: float = 0.1
    # reset randomisation: c = -65 + c_jitter r^2, d = 2 - d_jitter r^2
    c_jitter: float = 15.0
    d_jitter: float = 6.0
    seed: int = 1

    def __post_init__(self):
        if self.num_layers < 2:
            raise ValueError("num_layers must be >= 2")
        for name in ("kernel_ff", "kernel_lat"):
            k = getattr(self, name)
            if k < 1 or k % 2 == 0:
                raise ValueError(f"{name} must be odd and >= 1, got {k}")
        for name in ("p_keep_ff", "p_keep_lat", "inhibitory_fraction", "w_init_spread"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.w_init_max_exc < 0 or self.w_init_max_inh_mag < 0:
            raise ValueError("initial weight maxima must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class NeuronParams:
    """Per-neuron Izhikevich parameters, one entry per global id."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray


@dataclass
class SynapseTable:
    num_layers: int
    layer: LayerSpec
    pre: np.ndarray  # int64 global ids
    post: np.ndarray  # int64 global ids
    kind: np.ndarray  # uint8, FF or LAT
    weight: np.ndarray  # float64, signed
    indptr: np.ndarray  # CSR offsets over post global ids

    def __len__(self) -> int:
        return len(self.weight)

    @property
    def num_neurons(self) -> int:
        return self.num_layers * self.layer.size

    def incoming(self, post: int) -> list[tuple[int, int, float, int]]:
        """Canonical ``(pre_layer, pre_index, weight, kind)`` entries of one post neuron."""
        n = self.layer.size
        lo, hi = self.indptr[post], self.indptr[post + 1]
        return [
            (int(self.pre[s]) // n, int(self.pre[s]) % n, float(self.weight[s]), int(self.kind[s]))
            for s in range(lo, hi)
        ]

    def outgoing(self, pre: int, kind: int | None = FF) -> np.ndarray:
        """Synapse ids leaving ``pre`` (optionally restricted to one kind)."""
        sel = self.pre == pre
        if kind is not None:
            sel &= self.kind == kind
        return np.flatnonzero(sel)


@dataclass
class Network:
    config: TopologyConfig
    params: NeuronParams
    inhibitory: np.ndarray  # bool per global id (the polarity mask)
    table: SynapseTable

    @property
    def n(self) -> int:
        return self.config.layer.size

    @property
    def num_neurons(self) -> int:
        return self.config.num_layers * self.n

    def layer_slice(self, layer: int) -> slice:
        return slice(layer * self.n, (layer + 1) * self.n)


def kernel_targets(layer_dims: LayerSpec, center: tuple[int, int], side: int) -> list[tuple[int, int]]:
    """In-bounds cells of the ``side`` x ``side`` box centred on ``center``, row-major."""
    row, col = center
    if not (0 <= row < layer_dims.height and 0 <= col < layer_dims.width):
        raise ValueError(f"center {center} outside {layer_dims.height}x{layer_dims.width} sheet")
    if side < 1 or side % 2 == 0:
        raise ValueError(f"kernel side must be odd and >= 1, got {side}")
    h = side // 2
    return [
        (r, c)
        for r in range(max(0, row - h), min(layer_dims.height, row + h + 1))
        for c in range(max(0, col - h), min(layer_dims.width, col + h + 1))
    ]


def _candidates(layer: LayerSpec, side: int, exclude_self: bool) -> tuple[np.ndarray, np.ndarray]:
    """All (pre, target) flat-index pairs: pre row-major, then target row-major, clipped."""
    h = side // 2
    offs = np.arange(-h, h + 1)
    dr, dc = np.meshgrid(offs, offs, indexing="ij")
    dr, dc = dr.ravel(), dc.ravel()
    if exclude_self:
        keep = (dr != 0) | (dc != 0)
        dr, dc = dr[keep], dc[keep]
    rows, cols = np.divmod(np.arange(layer.size), layer.width)
    tr = rows[:, None] + dr[None, :]
    tc = cols[:, None] + dc[None, :]
    valid = (tr >= 0) & (tr < layer.height) & (tc >= 0) & (tc < layer.width)
    pre = np.broadcast_to(np.arange(layer.size)[:, None], tr.shape)[valid]
    tgt = (tr * layer.width + tc)[valid]
    return pre, tgt


def candidate_count(layer: LayerSpec, side: int, exclude_self: bool = False) -> int:
    """Total clipped-box size summed over every neuron of a sheet."""
    return len(_candidates(layer, side, exclude_self)[0])


def _assign_polarity(rng: RandomStream, n: int, fraction: float) -> np.ndarray:
    keys = rng.uniform(n)
    n_inh = int(np.floor(fraction * n + 0.5))
    inh = np.zeros(n, dtype=bool)
    inh[np.argsort(keys, kind="stable")[:n_inh]] = True
    return inh


def _draw_synapses(rng, pre_local, tgt_local, p_keep, pre_inh, cfg):
    draws = rng.uniform(2 * len(pre_local)).reshape(-1, 2)
    kept = draws[:, 0] < p_keep
    pre_local, tgt_local, u = pre_local[kept], tgt_local[kept], draws[kept, 1]
    inh = pre_inh[pre_local]
    s = cfg.w_init_spread
    w = np.where(
        inh,
        -(cfg.w_init_max_inh_mag - cfg.w_init_max_inh_mag * s * u),
        cfg.w_init_max_exc - cfg.w_init_max_exc * s * u,
    )
    return pre_local, tgt_local, w


def build_network(config: TopologyConfig) -> tuple[Network, RandomStream]:
    """Build the whole network from ``config`` alone.

    Draw order, per layer in turn: polarity keys, the per-neuron reset
    randomiser ``r``, then a (keep, weight) pair for every feed-forward
    candidate out of the layer, then every lateral candidate within it.
    The input layer has no lateral synapses since its current is the frame.

    Returns the network and the stream positioned after the last draw.
    """
    rng = RandomStream(config.seed)
    layer = config.layer
    n, L = layer.size, config.num_layers
    inhibitory = np.zeros(L * n, dtype=bool)
    a = np.full(L * n, 0.02)
    b = np.full(L * n, 0.2)
    c = np.empty(L * n)
    d = np.empty(L * n)

    ff_pre, ff_tgt = _candidates(layer, config.kernel_ff, exclude_self=False)
    lat_pre, lat_tgt = _candidates(layer, config.kernel_lat, exclude_self=True)

    pres, posts, kinds, weights = [], [], [], []
    for ell in range(L):
        sl = slice(ell * n, (ell + 1) * n)
        inhibitory[sl] = _assign_polarity(rng, n, config.inhibitory_fraction)
        r = rng.uniform(n)
        c[sl] = -65.0 + config.c_jitter * r * r
        d[sl] = 2.0 - config.d_jitter * r * r
        pre_inh = inhibitory[sl]
        if ell < L - 1:
            p, t, w = _draw_synapses(rng, ff_pre, ff_tgt, config.p_keep_ff, pre_inh, config)
            pres.append(p + ell * n)
            posts.append(t + (ell + 1) * n)
            kinds.append(np.full(len(p), FF, dtype=np.uint8))
            weights.append(w)
        if ell > 0:
            p, t, w = _draw_synapses(rng, lat_pre, lat_tgt, config.p_keep_lat, pre_inh, config)
            pres.append(p + ell * n)
            posts.append(t + ell * n)
            kinds.append(np.full(len(p), LAT, dtype=np.uint8))
            weights.append(w)

    pre = np.concatenate(pres).astype(np.int64)
    post = np.concatenate(posts).astype(np.int64)
    kind = np.concatenate(kinds)
    weight = np.concatenate(weights).astype(np.float64)
    order = np.lexsort((pre, kind, post))
    pre, post, kind, weight = pre[order], post[order], kind[order], weight[order]
    indptr = np.zeros(L * n + 1, dtype=np.int64)
    np.cumsum(np.bincount(post, minlength=L * n), out=indptr[1:])

    table = SynapseTable(L, layer, pre, post, kind, weight, indptr)
    params = NeuronParams(a, b, c, d)
    return Network(config, params, inhibitory, table), rng
