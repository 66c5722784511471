"""Command line entry point: ``layersnn gen | run | bench | inspect``.

Exit codes: 0 success, 2 usage or configuration error, 3 numeric fault.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import struct
import sys
from pathlib import Path

from . import checkpoint, events
from .bench import benchmark
from .config import ConfigError, RunConfig, load_config, replace_section
from .dynamics import NumericFault
from .topology import LayerSpec

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


def _on_off(text: str) -> bool:
    if text.lower() in ("on", "true", "1", "yes"):
        return True
    if text.lower() in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layersnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a moving-bar DVSE event file")
    g.add_argument("--width", type=int, default=64)
    g.add_argument("--height", type=int, default=64)
    g.add_argument("--bar-width", type=int, default=4)
    g.add_argument("--speed", type=float, default=100.0, help="pixels per second")
    g.add_argument("--duration", type=int, default=2000, help="milliseconds")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--jitter", type=int, default=0, help="per-event jitter in microseconds")
    g.add_argument("--out", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--layers", type=int)
        p.add_argument("--width", type=int)
        p.add_argument("--height", type=int)
        p.add_argument("--stimulus", help="DVSE event file (default: generated moving bar)")
        p.add_argument("--gain", type=float, help="input gain for layer-1 frames")
        p.add_argument("--window-ms", type=float, help="frame batching window")
        p.add_argument("--train", type=_on_off)
        p.add_argument("--istdp", type=_on_off)
        p.add_argument("--loop-stimulus", type=_on_off)

    r = sub.add_parser("run", help="run a simulation and write artifacts")
    add_config_flags(r)
    r.add_argument("--steps", type=int)
    r.add_argument("--out-dir")
    r.add_argument("--resume", help="checkpoint to resume from")

    b = sub.add_parser("bench", help="measure engine throughput")
    add_config_flags(b)
    b.add_argument("--steps", type=int, default=200)
    b.add_argument("--warmup", type=int, default=20)
    b.add_argument("--compare-oracle", action="store_true")
    b.add_argument("--oracle-steps", type=int, default=3)
    b.add_argument("--csv", help="also write the report as CSV")

    i = sub.add_parser("inspect", help="describe a checkpoint or event file")
    i.add_argument("path")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    top = {}
    if args.seed is not None:
        top["seed"] = args.seed
    if args.layers is not None:
        top["num_layers"] = args.layers
    if args.width is not None or args.height is not None:
        top["layer"] = LayerSpec(args.width or cfg.topology.layer.width, args.height or cfg.topology.layer.height)
    eng = {}
    if args.gain is not None:
        eng["input_gain"] = args.gain
    if args.window_ms is not None:
        eng["window_ms"] = args.window_ms
    if args.train is not None:
        eng["train"] = args.train
    if args.loop_stimulus is not None:
        eng["loop_stimulus"] = args.loop_stimulus
    try:
        if top:
            cfg = replace_section(cfg, "topology", **top)
        if eng:
            cfg = replace_section(cfg, "engine", **eng)
        if args.istdp is not None:
            cfg = replace_section(cfg, "plasticity", istdp_enabled=args.istdp)
        if args.stimulus is not None:
            cfg = replace_section(cfg, "stimulus", path=args.stimulus)
        if getattr(args, "steps", None) is not None:
            cfg = dataclasses.replace(cfg, steps=args.steps)
        if getattr(args, "out_dir", None) is not None:
            cfg = dataclasses.replace(cfg, out_dir=args.out_dir)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def cmd_gen(args) -> int:
    stream = events.gen_moving_bar(args.width, args.height, args.bar_width, args.speed, args.duration,
                                   args.seed, args.jitter)
    events.write_events(stream, args.out)
    if len(stream) == 0:
        print(f"warning: {args.out} contains zero events", file=sys.stderr)
    print(f"wrote {len(stream)} events to {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .runner import run, stimulus_frames

    cfg = resolve_config(args)
    state = None
    if args.resume:
        state = checkpoint.load_checkpoint(args.resume)
        if state.config_doc() != _engine_doc(cfg):
            raise ConfigError("checkpoint config differs from the requested configuration")

    def on_window(index, spikes, mean_exc):
        ent = " ".join(f"{e:.6f}" for e in mean_exc)
        print(f"window {index}: spikes {' '.join(map(str, spikes))} | mean_E_exc {ent}", flush=True)

    frames = stimulus_frames(cfg)
    summary, _, _ = run(cfg, frames, out_dir=cfg.out_dir, state=state, on_window=on_window)
    status = " (stimulus exhausted)" if summary.halted_early else ""
    print(f"done: {summary.steps} steps{status}, spikes {' '.join(map(str, summary.spikes_per_layer))}, "
          f"state {summary.state_digest[:16]}")
    return EXIT_OK


def _engine_doc(cfg: RunConfig) -> dict:
    from .engine import config_document

    return config_document(cfg.topology, cfg.plasticity, cfg.engine)


def cmd_bench(args) -> int:
    cfg = resolve_config(args)
    report = benchmark(cfg, args.steps, warmup=args.warmup, compare_oracle=args.compare_oracle,
                       oracle_steps=args.oracle_steps)
    if report.empty:
        print("no steps requested: benchmark table is empty")
        return EXIT_OK
    width = max(len(k) for k, _ in report.rows())
    for key, val in report.rows():
        print(f"{key:<{width}}  {val}")
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


def cmd_inspect(args) -> int:
    data = Path(args.path).read_bytes()
    if data[:4] == events.MAGIC:
        version, width, height, count = events.read_header(data)
        print(f"DVSE v{version}, {width}x{height}, {count} events")
        return EXIT_OK
    if data[:4] == checkpoint.MAGIC:
        version, digest, sec = checkpoint.read_sections(data)
        doc = json.loads(sec[b"CONF"])
        nsyn, _ = struct.unpack_from("<QQ", sec[b"TOPO"])
        step = struct.unpack_from("<Q", sec[b"CNTR"])[0]
        layer = doc["topology"]["layer"]
        print(f"SNNC v{version}, step={step}, layers={doc['topology']['num_layers']}, "
              f"size={layer['width']}x{layer['height']}, synapses={nsyn}, config digest={digest.hex()}")
        return EXIT_OK
    raise ConfigError(f"{args.path}: unrecognised file (magic {data[:4]!r})")


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "bench": cmd_bench, "inspect": cmd_inspect}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NumericFault as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, events.EventFormatError, checkpoint.CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
