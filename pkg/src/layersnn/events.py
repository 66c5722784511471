"""DVS event streams: native file format, frame batching and synthetic stimuli.

Native ``DVSE`` layout, all little-endian::

    b"DVSE" | u16 version (=1) | u16 width | u16 height | u64 count
    count x ( u32 t_us | u16 x | u16 y | u8 polarity )   # 0 = OFF, 1 = ON
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .rng import RandomStream

MAGIC = b"DVSE"
VERSION = 1
HEADER = struct.Struct("<4sHHHQ")
RECORD_DTYPE = np.dtype([("t", "<u4"), ("x", "<u2"), ("y", "<u2"), ("p", "u1")])
OFF, ON = 0, 1


class EventFormatError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")


class UnsupportedFormatError(EventFormatError):
    pass


class DvsEvent(NamedTuple):
    t: int
    x: int
    y: int
    polarity: int


@dataclass
class EventStream:
    width: int
    height: int
    events: np.ndarray  # structured, RECORD_DTYPE

    def __post_init__(self):
        self.events = np.ascontiguousarray(self.events, dtype=RECORD_DTYPE)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        for e in self.events:
            yield DvsEvent(int(e["t"]), int(e["x"]), int(e["y"]), int(e["p"]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            (self.width, self.height) == (other.width, other.height)
            and self.events.tobytes() == other.events.tobytes()
        )

    @classmethod
    def from_events(cls, width: int, height: int, events) -> "EventStream":
        arr = np.array([tuple(e) for e in events], dtype=RECORD_DTYPE)
        return cls(width, height, arr)

    @classmethod
    def from_arrays(cls, width, height, t, x, y, p) -> "EventStream":
        arr = np.empty(len(t), dtype=RECORD_DTYPE)
        arr["t"], arr["x"], arr["y"], arr["p"] = t, x, y, p
        return cls(width, height, arr)

    def validate(self, header_size: int = 0) -> None:
        """Raise ``EventFormatError`` at the first record breaking the stream invariants."""
        ev = self.events
        rec = RECORD_DTYPE.itemsize
        if len(ev) > 1:
            back = np.flatnonzero(ev["t"][1:] < ev["t"][:-1])
            if back.size:
                i = int(back[0]) + 1
                raise EventFormatError(f"timestamp regression at event {i}", header_size + i * rec)
        bad = np.flatnonzero((ev["x"] >= self.width) | (ev["y"] >= self.height) | (ev["p"] > 1))
        if bad.size:
            i = int(bad[0])
            e = ev[i]
            raise EventFormatError(
                f"event {i} (x={e['x']}, y={e['y']}, p={e['p']}) outside "
                f"{self.width}x{self.height} sensor or bad polarity",
                header_size + i * rec,
            )


def write_events(stream: EventStream, path) -> None:
    stream.validate()
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, stream.width, stream.height, len(stream)))
        fh.write(stream.events.tobytes())


def read_header(data: bytes) -> tuple[int, int, int, int]:
    if len(data) < HEADER.size:
        raise EventFormatError("truncated header", len(data))
    magic, version, width, height, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise EventFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise UnsupportedFormatError(f"unsupported DVSE version {version}", 4)
    return version, width, height, count


def read_events(path) -> EventStream:
    data = Path(path).read_bytes()
    _, width, height, count = read_header(data)
    rec = RECORD_DTYPE.itemsize
    body = len(data) - HEADER.size
    if body < count * rec:
        i = body // rec
        raise EventFormatError(f"truncated record {i} of {count}", HEADER.size + i * rec)
    if body > count * rec:
        raise EventFormatError("trailing bytes after last record", HEADER.size + count * rec)
    events = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=HEADER.size).copy()
    stream = EventStream(width, height, events)
    stream.validate(HEADER.size)
    return stream


def batch_frames(stream: EventStream, window_ms: float, layer_shape: tuple[int, int], downscale: int = 1) -> np.ndarray:
    """Binary frames over half-open windows ``[n*w, (n+1)*w)``, shape ``(frames, H, W)``.

    A cell is 1 when any event of either polarity landed on it in the window.
    Frames run from t=0 through the window of the last event.
    """
    height, width = layer_shape
    if downscale < 1 or stream.width // downscale != width or stream.height // downscale != height:
        raise ValueError(
            f"sensor {stream.width}x{stream.height} does not map onto layer {width}x{height} "
            f"with downscale {downscale}"
        )
    window_us = int(round(window_ms * 1000))
    if window_us <= 0:
        raise ValueError("window_ms must be positive")
    ev = stream.events
    if len(ev) == 0:
        return np.zeros((0, height, width), dtype=bool)
    idx = ev["t"].astype(np.int64) // window_us
    frames = np.zeros((int(idx[-1]) + 1, height, width), dtype=bool)
    frames[idx, ev["y"] // downscale, ev["x"] // downscale] = True
    return frames


def gen_moving_bar(
    width: int,
    height: int,
    bar_width: int,
    speed_px_per_s: float,
    duration_ms: int,
    seed: int = 0,
    jitter_us: int = 0,
) -> EventStream:
    """Vertical bar sliding right with wraparound.

    At ``t`` ms the bar's left column is ``floor(speed * t / 1000) mod width``.
    Each ms the columns the leading edge enters emit ON events and the columns
    the trailing edge vacates emit OFF events, for every row. Optional jitter
    adds a seeded ``[0, jitter_us)`` offset per event.
    """
    if not 1 <= bar_width < width:
        raise ValueError(f"bar width {bar_width} must lie in [1, {width})")
    if speed_px_per_s < 0:
        raise ValueError("speed must be >= 0")
    ts, xs, ps = [], [], []
    rows = np.arange(height, dtype=np.uint16)
    prev = 0
    for t in range(1, int(duration_ms)):
        pos = int(np.floor(speed_px_per_s * t / 1000.0))
        for s in range(prev + 1, pos + 1):
            ts.append(t)
            xs.append((s - 1) % width)
            ps.append(OFF)
            ts.append(t)
            xs.append((s + bar_width - 1) % width)
            ps.append(ON)
        prev = pos
    n_cols = len(ts)
    t = np.repeat(np.asarray(ts, dtype=np.int64) * 1000, height)
    x = np.repeat(np.asarray(xs, dtype=np.uint16), height)
    p = np.repeat(np.asarray(ps, dtype=np.uint8), height)
    y = np.tile(rows, n_cols)
    if jitter_us > 0 and len(t):
        t = t + (RandomStream(seed).uniform(len(t)) * jitter_us).astype(np.int64)
        order = np.argsort(t, kind="stable")
        t, x, y, p = t[order], x[order], y[order], p[order]
    if len(t) and t[-1] >= 2**32:
        raise ValueError("stimulus too long for 32-bit microsecond timestamps")
    return EventStream.from_arrays(width, height, t.astype(np.uint32), x, y, p)


def concat_streams(first: EventStream, second: EventStream, offset_us: int = 0) -> EventStream:
    if (first.width, first.height) != (second.width, second.height):
        raise ValueError("streams have different sensor sizes")
    tail = second.events.copy()
    tail["t"] = tail["t"] + np.uint32(offset_us)
    return EventStream(first.width, first.height, np.concatenate([first.events, tail]))


# AEDAT 2.0 address layouts (big-endian u32 address, u32 timestamp in us).
_AEDAT2_SENSORS = {
    # DVS128: x is mirrored, polarity bit is 1 for OFF
    "dvs128": dict(width=128, height=128, xmask=0x00FE, xshift=1, ymask=0x7F00, yshift=8, pmask=0x1, pshift=0, typemask=0),
    # DAVIS240/346 family as written by jAER; bit 31 set marks APS/IMU samples
    "davis346": dict(
        width=346, height=260, xmask=0x003FF000, xshift=12, ymask=0x7FC00000, yshift=22, pmask=0x800, pshift=11, typemask=0x80000000
    ),
}


def import_aedat(path, sensor: str = "dvs128", rebase: bool = True) -> EventStream:
    """Decode an AEDAT 2.0 recording into an ``EventStream``.

    Only version 2.0 is decoded; 3.x and 4.0 containers raise
    ``UnsupportedFormatError`` naming the version found. With ``rebase`` the
    first timestamp becomes 0.
    """
    data = Path(path).read_bytes()
    if not data.startswith(b"#!AER-DAT"):
        raise EventFormatError("not an AEDAT file (missing '#!AER-DAT' header)", 0)
    first = data.split(b"\n", 1)[0].strip()
    version = first[len(b"#!AER-DAT"):].decode("ascii", "replace")
    if version != "2.0":
        raise UnsupportedFormatError(f"unsupported AEDAT version {version}", 0)
    pos = 0
    while pos < len(data) and data[pos:pos + 1] == b"#":
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise EventFormatError("unterminated header line", pos)
        pos = nl + 1
    if (len(data) - pos) % 8:
        raise EventFormatError("truncated event record", pos + ((len(data) - pos) // 8) * 8)
    if sensor not in _AEDAT2_SENSORS:
        raise ValueError(f"unknown sensor layout {sensor!r}")
    lay = _AEDAT2_SENSORS[sensor]
    raw = np.frombuffer(data, dtype=">u4", offset=pos).reshape(-1, 2)
    addr, ts = raw[:, 0].astype(np.int64), raw[:, 1].astype(np.int64)
    keep = (addr & lay["typemask"]) == 0
    addr, ts = addr[keep], ts[keep]
    width, height = lay["width"], lay["height"]
    x = (width - 1) - ((addr & lay["xmask"]) >> lay["xshift"])
    y = (addr & lay["ymask"]) >> lay["yshift"]
    p = 1 - ((addr & lay["pmask"]) >> lay["pshift"])
    bad = np.flatnonzero((x < 0) | (x >= width) | (y >= height))
    if bad.size:
        i = int(np.flatnonzero(keep)[bad[0]])
        raise EventFormatError(
            f"AEDAT event {i} at ({int(x[bad[0]])}, {int(y[bad[0]])}) outside {width}x{height} sensor",
            pos + 8 * i,
        )
    back = np.flatnonzero(np.diff(ts) < 0)
    if back.size:
        i = int(np.flatnonzero(keep)[back[0] + 1])
        raise EventFormatError(f"AEDAT timestamp regression at event {i}", pos + 8 * i)
    if rebase and len(ts):
        ts = ts - ts[0]
    return EventStream.from_arrays(width, height, ts.astype(np.uint32), x, y, p)
