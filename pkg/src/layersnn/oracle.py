"""Dense reference implementation of the step semantics.

Weights live in per-layer dense ``(pre, post)`` matrices and every phase is a
plain loop: currents add one presynaptic row at a time in ascending pre index
(feed-forward rows, then lateral rows), neurons are updated one scalar at a
time, and plasticity walks the rows of firing pre neurons and the columns of
firing post neurons. Adding a zero row leaves a float sum unchanged, so the
sums match the sparse engine's canonical order exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import SimulationState
from .topology import FF


@dataclass
class DenseState:
    num_layers: int
    n: int
    shape: tuple[int, int]
    w_ff: list  # w_ff[l]: (n, n) weights from layer l-1 into layer l; None for l = 0
    w_lat: list
    has_ff: list  # existence masks
    has_lat: list
    inhibitory: list  # per layer, bool (n,)
    a: list
    b: list
    c: list
    d: list
    v: list
    u: list
    traces: list
    spikes_prev: list
    plasticity: object
    engine: object
    step: int = 0

    @classmethod
    def from_state(cls, st: SimulationState) -> "DenseState":
        net, t = st.net, st.net.table
        L, n = net.config.num_layers, net.n
        # layer 0 receives only the frame
        w_ff = [None] + [np.zeros((n, n)) for _ in range(1, L)]
        w_lat = [None] + [np.zeros((n, n)) for _ in range(1, L)]
        has_ff = [None] + [np.zeros((n, n), dtype=bool) for _ in range(1, L)]
        has_lat = [None] + [np.zeros((n, n), dtype=bool) for _ in range(1, L)]
        for s in range(len(t)):
            pre, post = int(t.pre[s]), int(t.post[s])
            ell = post // n
            if t.kind[s] == FF:
                w_ff[ell][pre % n, post % n] = t.weight[s]
                has_ff[ell][pre % n, post % n] = True
            else:
                w_lat[ell][pre % n, post % n] = t.weight[s]
                has_lat[ell][pre % n, post % n] = True

        def split(x):
            return [np.array(x[ell * n:(ell + 1) * n], dtype=x.dtype) for ell in range(L)]

        p = net.params
        return cls(
            L, n, net.config.layer.shape, w_ff, w_lat, has_ff, has_lat, split(net.inhibitory),
            split(p.a), split(p.b), split(p.c), split(p.d), split(st.v), split(st.u),
            split(st.traces), split(st.spikes_prev), st.plasticity, st.engine, st.step,
        )

    def weight_of(self, pre: int, post: int, kind: int) -> float:
        n = self.n
        mats = self.w_ff if kind == FF else self.w_lat
        return float(mats[post // n][pre % n, post % n])

    def table_weights(self, table) -> np.ndarray:
        """Dense weights read back in the sparse table's synapse order."""
        return np.array([self.weight_of(int(p), int(q), int(k)) for p, q, k in zip(table.pre, table.post, table.kind)])


def _izhikevich_scalar(v, u, a, b, c, d, current, threshold):
    v = v + 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
    v = v + 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
    u = u + 1.0 * (a * (b * v - u))
    if v >= threshold:
        return c, u + d, True
    return v, u, False


def dense_oracle_step(ds: DenseState, frame=None, train: bool | None = None) -> list[np.ndarray]:
    """Advance ``ds`` one step; return the per-layer spike flags."""
    if ds.num_layers == 0:
        return []
    eng, cfg = ds.engine, ds.plasticity
    train = eng.train if train is None else train
    L, n = ds.num_layers, ds.n

    currents = []
    for ell in range(L):
        if ell == 0:
            if frame is None:
                acc = np.zeros(n)
            else:
                acc = eng.input_gain * np.asarray(frame, dtype=np.float64).ravel()
        else:
            acc = np.zeros(n)
            src = ds.spikes_prev[ell - 1].astype(np.float64)
            for j in range(n):
                acc = acc + ds.w_ff[ell][j] * src[j]
            src = ds.spikes_prev[ell].astype(np.float64)
            for j in range(n):
                acc = acc + ds.w_lat[ell][j] * src[j]
        currents.append(acc)

    fired = []
    for ell in range(L):
        f = np.zeros(n, dtype=bool)
        v, u = ds.v[ell], ds.u[ell]
        for i in range(n):
            v[i], u[i], f[i] = _izhikevich_scalar(
                float(v[i]), float(u[i]), float(ds.a[ell][i]), float(ds.b[ell][i]),
                float(ds.c[ell][i]), float(ds.d[ell][i]), float(currents[ell][i]), eng.v_threshold,
            )
        fired.append(f)

    decay = cfg.decay_factor(eng.dt)
    for ell in range(L):
        ds.traces[ell] = ds.traces[ell] * decay

    if train:
        for ell in range(1, L):
            _dense_plasticity(ds, ell, fired[ell - 1], fired[ell])

    for ell in range(L):
        ds.traces[ell][fired[ell]] = 2.0

    if train:
        for ell in range(1, L):
            inh = ds.inhibitory[ell - 1][:, None]
            w = ds.w_ff[ell]
            ds.w_ff[ell] = np.where(inh, np.clip(w, -cfg.w_max_inh_mag, 0.0), np.clip(w, 0.0, cfg.w_max_exc))

    ds.spikes_prev = fired
    ds.step += 1
    return fired


def _dense_plasticity(ds: DenseState, ell: int, pre_fired, post_fired) -> None:
    cfg = ds.plasticity
    W, mask = ds.w_ff[ell], ds.has_ff[ell]
    pre_inh = ds.inhibitory[ell - 1]
    post_inh = ds.inhibitory[ell]
    t_pre, t_post = ds.traces[ell - 1], ds.traces[ell]

    exc_cols = mask & ~pre_inh[:, None]
    lit = cfg.paper_literal_sign_convention
    for j in np.flatnonzero(pre_fired & ~pre_inh):
        cols = exc_cols[j]
        w = W[j, cols]
        if lit:
            W[j, cols] = w + cfg.a_ltp * w * t_post[cols]
        else:
            W[j, cols] = w - cfg.a_ltd * w * t_post[cols]
    for i in np.flatnonzero(post_fired):
        rows = exc_cols[:, i]
        w = W[rows, i]
        if lit:
            W[rows, i] = w - cfg.a_ltd * w * t_pre[rows]
        else:
            W[rows, i] = w + cfg.a_ltp * w * t_pre[rows]
    exc_rows = np.flatnonzero(exc_cols.any(axis=1))
    W[exc_rows] = np.where(exc_cols[exc_rows], np.clip(W[exc_rows], 0.0, cfg.w_max_exc), W[exc_rows])

    if not cfg.istdp_enabled:
        return
    inh_mask = mask & pre_inh[:, None] & ~post_inh[None, :]
    M = -W
    for j in np.flatnonzero(pre_fired & pre_inh):
        cols = inh_mask[j]
        M[j, cols] = M[j, cols] + cfg.istdp_eta * (t_post[cols] - cfg.istdp_alpha)
    for i in np.flatnonzero(post_fired & ~post_inh):
        rows = inh_mask[:, i]
        M[rows, i] = M[rows, i] + cfg.istdp_eta * t_pre[rows]
    W[inh_mask] = -np.clip(M[inh_mask], 0.0, cfg.w_max_inh_mag)


def oracle_frame(ds: DenseState, frames):
    """Frame for the oracle's current step, using the engine's cursor rule."""
    if frames is None:
        return None
    idx = int(math.floor(ds.step * ds.engine.dt / ds.engine.window_ms))
    if idx >= len(frames):
        if not ds.engine.loop_stimulus or len(frames) == 0:
            raise IndexError("stimulus exhausted")
        idx %= len(frames)
    return frames[idx]
