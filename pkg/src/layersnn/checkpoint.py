"""Binary checkpoints for bit-exact resume.

Layout (little-endian)::

    b"SNNC" | u16 version | 32-byte config digest
    section*: 4-byte tag | u64 payload length | payload
    final section b"SHA2" holding sha256 of every preceding byte

Sections: CONF (JSON config), TOPO (structure and polarity), WGHT, PARM,
STAT (v, u), TRAC, SPIK, RNG_, CNTR.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .analytics import SpikeCountWindow
from .engine import EngineConfig, SimulationState, config_digest
from .plasticity import PlasticityConfig
from .rng import RandomStream
from .topology import LayerSpec, Network, NeuronParams, SynapseTable, TopologyConfig

MAGIC = b"SNNC"
VERSION = 1
_PREFIX = struct.Struct("<4sH32s")
_SECTION = struct.Struct("<4sQ")
_ORDER = (b"CONF", b"TOPO", b"WGHT", b"PARM", b"STAT", b"TRAC", b"SPIK", b"RNG_", b"CNTR")


class CheckpointError(ValueError):
    pass


def _f64(*arrays) -> bytes:
    return b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)


def _encode(state: SimulationState) -> bytes:
    net, t = state.net, state.net.table
    doc = json.dumps(state.config_doc(), sort_keys=True, separators=(",", ":")).encode()
    rng_state, rng_inc = state.rng.get_state()
    sections = {
        b"CONF": doc,
        b"TOPO": struct.pack("<QQ", len(t), net.num_neurons)
        + t.pre.astype("<i8").tobytes()
        + t.post.astype("<i8").tobytes()
        + t.kind.astype("u1").tobytes()
        + net.inhibitory.astype("u1").tobytes(),
        b"WGHT": _f64(t.weight),
        b"PARM": _f64(net.params.a, net.params.b, net.params.c, net.params.d),
        b"STAT": _f64(state.v, state.u),
        b"TRAC": _f64(state.traces),
        b"SPIK": state.spikes_prev.astype("u1").tobytes(),
        b"RNG_": rng_state.to_bytes(16, "little") + rng_inc.to_bytes(16, "little"),
        b"CNTR": struct.pack("<QQQ", state.step, state.counts.index, state.spike_total)
        + state.raster_digest
        + state.counts.counts.astype("<i8").tobytes(),
    }
    out = bytearray(_PREFIX.pack(MAGIC, VERSION, config_digest(state.config_doc())))
    for tag in _ORDER:
        out += _SECTION.pack(tag, len(sections[tag])) + sections[tag]
    out += _SECTION.pack(b"SHA2", 32) + hashlib.sha256(out).digest()
    return bytes(out)


def save_checkpoint(state: SimulationState, path) -> None:
    data = _encode(state)
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def read_sections(data: bytes) -> tuple[int, bytes, dict[bytes, bytes]]:
    """Validate framing and integrity; return ``(version, digest, sections)``."""
    if len(data) < _PREFIX.size:
        raise CheckpointError("truncated checkpoint header")
    magic, version, digest = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"checkpoint version {version} does not match supported version {VERSION}")
    pos = _PREFIX.size
    sections = {}
    while True:
        if pos + _SECTION.size > len(data):
            raise CheckpointError(f"truncated section header at byte {pos}")
        tag, length = _SECTION.unpack_from(data, pos)
        start = pos + _SECTION.size
        if start + length > len(data):
            raise CheckpointError(f"section {tag!r} truncated at byte {pos}")
        payload = data[start:start + length]
        if tag == b"SHA2":
            if hashlib.sha256(data[:pos]).digest() != payload:
                raise CheckpointError("content digest mismatch (corrupted checkpoint)")
            if start + length != len(data):
                raise CheckpointError("trailing bytes after digest section")
            break
        sections[tag] = payload
        pos = start + length
    missing = [t.decode() for t in _ORDER if t not in sections]
    if missing:
        raise CheckpointError(f"missing sections: {', '.join(missing)}")
    if config_digest(json.loads(sections[b"CONF"])) != digest:
        raise CheckpointError("config digest mismatch")
    return version, digest, sections


def config_from_doc(doc: dict) -> tuple[TopologyConfig, PlasticityConfig, EngineConfig]:
    top = dict(doc["topology"])
    top["layer"] = LayerSpec(**top["layer"])
    return TopologyConfig(**top), PlasticityConfig(**doc["plasticity"]), EngineConfig(**doc["engine"])


def load_checkpoint(path) -> SimulationState:
    data = Path(path).read_bytes()
    _, _, sec = read_sections(data)
    topology, plast, engine = config_from_doc(json.loads(sec[b"CONF"]))

    topo = sec[b"TOPO"]
    nsyn, N = struct.unpack_from("<QQ", topo)
    off = 16
    pre = np.frombuffer(topo, "<i8", nsyn, off).astype(np.int64)
    off += 8 * nsyn
    post = np.frombuffer(topo, "<i8", nsyn, off).astype(np.int64)
    off += 8 * nsyn
    kind = np.frombuffer(topo, "u1", nsyn, off).copy()
    off += nsyn
    inhibitory = np.frombuffer(topo, "u1", N, off).astype(bool)
    if N != topology.num_layers * topology.layer.size:
        raise CheckpointError("neuron count does not match config")

    def f64(tag, count, parts):
        arr = np.frombuffer(sec[tag], "<f8").astype(np.float64)
        if len(arr) != count * parts:
            raise CheckpointError(f"section {tag.decode()} has wrong length")
        return np.split(arr, parts) if parts > 1 else arr

    weight = f64(b"WGHT", nsyn, 1)
    a, b, c, d = f64(b"PARM", N, 4)
    v, u = f64(b"STAT", N, 2)
    traces = f64(b"TRAC", N, 1)
    spikes = np.frombuffer(sec[b"SPIK"], "u1").astype(bool)
    if len(spikes) != N:
        raise CheckpointError("section SPIK has wrong length")
    rng_raw = sec[b"RNG_"]
    cntr = sec[b"CNTR"]
    step, win_index, spike_total = struct.unpack_from("<QQQ", cntr)
    raster_digest = cntr[24:56]
    counts = np.frombuffer(cntr, "<i8", N, 56).astype(np.int64)

    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(np.bincount(post, minlength=N), out=indptr[1:])
    table = SynapseTable(topology.num_layers, topology.layer, pre, post, kind, weight, indptr)
    net = Network(topology, NeuronParams(a, b, c, d), inhibitory, table)
    rng = RandomStream(topology.seed)
    rng.set_state(int.from_bytes(rng_raw[:16], "little"), int.from_bytes(rng_raw[16:32], "little"))
    window = SpikeCountWindow(N, engine.psth_window_ms, engine.dt, index=win_index, counts=counts)
    return SimulationState(
        net=net,
        plasticity=plast,
        engine=engine,
        v=v,
        u=u,
        traces=traces,
        spikes_prev=spikes,
        rng=rng,
        counts=window,
        step=step,
        raster_digest=raster_digest,
        spike_total=spike_total,
    )
