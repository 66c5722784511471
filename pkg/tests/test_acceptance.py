"""Acceptance criteria, one test each, each printing a PASS/FAIL line."""

import dataclasses
import math
import time
import warnings

import numpy as np
import pytest

from layersnn.analytics import hot_clusters, neuron_entropy
from layersnn.bench import RATIO_BAND, benchmark
from layersnn.checkpoint import load_checkpoint, save_checkpoint
from layersnn.config import RunConfig, StimulusConfig
from layersnn.dynamics import izhikevich_step
from layersnn.engine import EngineConfig, SimulationState, step
from layersnn.events import EventStream, batch_frames, gen_moving_bar, read_events, write_events
from layersnn.oracle import DenseState, dense_oracle_step, oracle_frame
from layersnn.plasticity import PlasticityConfig
from layersnn.runner import entropy_maps, run
from layersnn.topology import FF, LayerSpec, TopologyConfig, build_network, candidate_count
from motifs import pairing_protocol


def test_criterion_01_entropy_unit_value(criterion):
    e = neuron_entropy([4, 2, 1, 1])
    uniform = [neuron_entropy([0.37] * k) for k in range(2, 65)]
    ok = abs(e - 0.875) <= 1e-9 and all(x == 1.0 for x in uniform)
    criterion(1, "entropy unit value", ok, f"E(4,2,1,1)={e:.12f}, uniform K=2..64 exact: {all(x == 1.0 for x in uniform)}")
    assert ok


def straight_line_rs(current, steps):
    a, b, c, d = 0.02, 0.2, -65.0, 2.0
    v = -65.0
    u = b * v
    out = []
    for t in range(steps):
        v = v + 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
        v = v + 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
        u = u + (a * (b * v - u))
        if v >= -30.0:
            out.append(t)
            v = c
            u = u + d
    return out


def test_criterion_02_izhikevich_conformance(criterion):
    v, u = np.array([-65.0]), np.array([-13.0])
    times = []
    for t in range(1000):
        v, u, fired = izhikevich_step(v, u, 0.02, 0.2, -65.0, 2.0, np.array([10.0]))
        if fired[0]:
            times.append(t)
    ref = straight_line_rs(10.0, 1000)
    ok = times == ref and len(ref) > 0
    criterion(2, "Izhikevich RS conformance", ok, f"{len(times)} spikes, first {times[:3]}")
    assert ok


def test_criterion_03_stdp_sign_structure(criterion):
    w0 = 1.0
    finals = {dt: pairing_protocol(dt, reps=60, w0=w0)[-1] for dt in (5, 10, 20, 40, -5, -10, -20, -40)}
    up = pairing_protocol(5, reps=60, w0=w0)
    down = pairing_protocol(-5, reps=60, w0=w0)
    strict = bool(np.all(np.diff(np.r_[w0, up]) > 0) and np.all(np.diff(np.r_[w0, down]) < 0))
    ltp = [finals[dt] - w0 for dt in (5, 10, 20, 40)]
    ltd = [w0 - finals[-dt] for dt in (5, 10, 20, 40)]
    decaying = all(x > y > 0 for x, y in zip(ltp, ltp[1:])) and all(x > y > 0 for x, y in zip(ltd, ltd[1:]))
    ok = strict and decaying
    criterion(3, "STDP sign structure", ok,
              "LTP " + " ".join(f"{x:.4f}" for x in ltp) + " | LTD " + " ".join(f"{x:.4f}" for x in ltd))
    assert ok


def test_criterion_04_weight_bounds_fuzz(criterion):
    top = TopologyConfig(num_layers=3, layer=LayerSpec(32, 32), seed=11)
    st = SimulationState.fresh(top, PlasticityConfig(istdp_enabled=True), EngineConfig(loop_stimulus=True))
    rng = np.random.default_rng(2024)
    frames = rng.random((1000, 32, 32)) < 0.08
    t = st.net.table
    inh = st.net.inhibitory[t.pre]
    w0 = t.weight.copy()
    violations = 0
    samples = 0
    for k in range(10_000):
        step(st, frames)
        if k % 100 == 99:
            w = t.weight
            samples += 1
            violations += int(np.sum(~inh & ((w < 0) | (w > 7.0))))
            violations += int(np.sum(inh & ((w > 0) | (w < -30.0))))
    changed = int(np.sum(t.weight != w0))
    ok = violations == 0 and changed > 0
    criterion(4, "weight bounds fuzz", ok,
              f"{samples} samples, {violations} violations, {changed} weights moved, {st.spike_total} spikes")
    assert ok


def test_criterion_05_oracle_equivalence(criterion):
    top = TopologyConfig(num_layers=3, layer=LayerSpec(16, 16), seed=5)
    st = SimulationState.fresh(top, PlasticityConfig(), EngineConfig())
    frames = batch_frames(gen_moving_bar(16, 16, 3, 200.0, 1100), 10, (16, 16))
    ds = DenseState.from_state(st)
    mismatched = 0
    for _ in range(1000):
        fired = dense_oracle_step(ds, oracle_frame(ds, frames), train=True)
        r = step(st, frames, train=True)
        mismatched += np.flatnonzero(np.concatenate(fired)).tolist() != r.fired.tolist()
    dw = float(np.max(np.abs(ds.table_weights(st.net.table) - st.net.table.weight)))
    ok = mismatched == 0 and dw <= 1e-12 and st.spike_total > 0
    criterion(5, "sparse vs dense oracle", ok, f"{mismatched} raster mismatches, max |dw|={dw:.3g}, {st.spike_total} spikes")
    assert ok


def test_criterion_06_entropy_decrease(criterion):
    # stimulus lasts the whole run (10,000 steps at 1 ms)
    cfg = RunConfig(stimulus=StimulusConfig(duration_ms=10_001), steps=10_000)
    fresh = SimulationState.fresh(cfg.topology, cfg.plasticity, cfg.engine)
    initial = [m.mean_exc() for m in entropy_maps(fresh)]
    summary, st, windows = run(cfg, out_dir=None, keep_windows=True)
    n = st.net.n
    before, after = summary.initial_mean_entropy_exc[1], summary.mean_entropy_exc[1]
    idx, counts = windows[-1]
    layer2 = counts[n:2 * n].reshape(cfg.topology.layer.shape)
    clusters = hot_clusters(layer2, quantile=0.9)
    biggest = clusters[0] if clusters else 0
    fresh_ok = min(initial[:2]) >= 0.99
    ok = fresh_ok and before - after >= 0.01 and biggest >= 5 and not summary.halted_early
    criterion(6, "entropy decrease on moving bar", ok,
              f"fresh mean E_exc {initial[0]:.5f}/{initial[1]:.5f}, layer-2 {before:.5f} -> {after:.5f}, "
              f"window {idx} largest hot cluster {biggest}")
    assert ok


def test_criterion_07_determinism_and_resume(criterion, tmp_path):
    cfg = RunConfig(stimulus=StimulusConfig(duration_ms=1100), steps=1000)
    a, _, _ = run(cfg, out_dir=tmp_path / "a")
    b, _, _ = run(cfg, out_dir=tmp_path / "b")
    same_artifacts = a.artifacts == b.artifacts and len(a.artifacts) > 0
    _, part, _ = run(cfg, steps=400, out_dir=None)
    save_checkpoint(part, tmp_path / "k400.snnc")
    resumed, _, _ = run(cfg, steps=600, out_dir=None, state=load_checkpoint(tmp_path / "k400.snnc"))
    ok = same_artifacts and resumed.state_digest == a.state_digest and resumed.steps == 1000
    criterion(7, "determinism and resume", ok,
              f"{len(a.artifacts)} artifacts equal: {same_artifacts}, 400+600 digest equal: {resumed.state_digest == a.state_digest}")
    assert ok


def test_criterion_08_event_format(criterion, tmp_path):
    rng = np.random.default_rng(8)
    n = 10_000
    t = np.sort(rng.integers(0, 5_000_000, n))
    s = EventStream.from_arrays(128, 96, t, rng.integers(0, 128, n), rng.integers(0, 96, n), rng.integers(0, 2, n))
    p1, p2 = tmp_path / "a.dvse", tmp_path / "b.dvse"
    write_events(s, p1)
    back = read_events(p1)
    write_events(back, p2)
    identical = p1.read_bytes() == p2.read_bytes() and back == s
    frames = batch_frames(s, 10, (96, 128))
    distinct = len(set(zip((t // 10_000).tolist(), s.events["y"].tolist(), s.events["x"].tolist())))
    conserved = int(frames.sum()) == distinct <= n
    # equality case: one event per (pixel, window)
    k = np.arange(2000)
    uniq = EventStream.from_arrays(128, 96, k * 10_000, k % 128, k % 96, k % 2)
    equal_case = int(batch_frames(uniq, 10, (96, 128)).sum()) == len(uniq)
    ok = identical and conserved and equal_case
    criterion(8, "event format round trip and batching", ok,
              f"{n} events, {p1.stat().st_size} bytes, active pixels {int(frames.sum())} <= {n}")
    assert ok


def test_criterion_09_topology_statistics(criterion):
    layer = LayerSpec(100, 100)
    net, _ = build_network(TopologyConfig(num_layers=3, layer=layer, seed=1))
    per_layer = [int(net.inhibitory[net.layer_slice(ell)].sum()) for ell in range(3)]
    exact = per_layer == [round(0.2 * layer.size)] * 3 == [2000] * 3
    p = 0.2
    cand = candidate_count(layer, 5)
    counts = []
    for seed in range(100):
        net, _ = build_network(TopologyConfig(num_layers=2, layer=layer, seed=seed))
        counts.append(int(np.sum(net.table.kind == FF)))
    sigma = math.sqrt(cand * p * (1 - p))
    mean = float(np.mean(counts))
    z = (mean - p * cand) / (sigma / math.sqrt(len(counts)))
    within = sum(abs(c - p * cand) <= 3 * sigma for c in counts)
    ok = exact and abs(z) <= 3
    criterion(9, "topology statistics", ok,
              f"inhibitory {per_layer}, FF mean {mean:.1f} vs {p * cand:.1f} (z={z:+.2f}), {within}/100 seeds within 3 sigma")
    assert ok


def test_criterion_10_performance_gate(criterion):
    cfg = RunConfig(topology=TopologyConfig(num_layers=3, layer=LayerSpec(64, 64)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        r = benchmark(cfg, steps=200, warmup=20, compare_oracle=True, oracle_steps=3)
    lo, hi = RATIO_BAND
    band = lo <= r.plasticity_ratio <= hi
    for w in caught:
        warnings.warn(w.message)
    ok = r.oracle_speedup >= 10
    criterion(10, "sparse >= 10x dense oracle (hard); off/on ratio band (soft)", ok,
              f"speedup {r.oracle_speedup:.1f}x, off/on {r.plasticity_ratio:.2f} "
              f"({'in' if band else 'OUTSIDE'} [{lo}, {hi}]), {r.rate_plastic_off:.0f}/{r.rate_plastic_on:.0f} steps/s")
    assert ok
