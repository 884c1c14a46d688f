"""Command-line front end.

Exit codes: 0 ok, 1 usage, 2 data error, 3 capacity/payload error.  Errors go
to stderr as ``hdrsteg: error[<kind>]: <message>``.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, cost_model, image_io, pipeline
from .errors import (
    CapacityExceededError,
    HdrStegError,
    NoCapacityError,
    PayloadError,
    SaturationError,
)
from .float_plane import capacity

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def _bits_to_bytes(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def cmd_keygen(args):
    key = pipeline.StegoKey(
        relative_payload=args.payload,
        planes=args.planes,
        perm_seed=args.seed,
        cost_model=args.cost_model,
        stc_h=args.stc_h,
        framing=not args.no_framing,
    )
    key.save(args.out)


def cmd_embed(args):
    cover = image_io.read_cover(args.cover)
    key = pipeline.StegoKey.load(args.key)
    bits = _bytes_to_bits(Path(args.message).read_bytes())
    stego = pipeline.embed(cover, bits, key)
    image_io.write_cover(stego, args.out)


def cmd_extract(args):
    stego = image_io.read_cover(args.stego)
    key = pipeline.StegoKey.load(args.key)
    Path(args.out).write_bytes(_bits_to_bytes(pipeline.extract(stego, key)))


def cmd_simulate(args):
    cover = image_io.read_cover(args.cover)
    key = pipeline.StegoKey.load(args.key)
    m = key.total_bits(cover.size) if args.bits is None else args.bits
    stego, mask = pipeline.simulate_embed(cover, m, key, args.seed)
    image_io.write_cover(stego, args.out)
    if args.mask:
        report = analysis.EmbedReport(mask.sum(axis=(1, 2)), 0.0, 0.0, mask.any(axis=0))
        analysis.change_map_image(report, args.mask)
    print(f"planes = {key.planes}")
    print(f"bits = {m}")
    print(f"flips = {int(mask.sum())}")


def cmd_inspect(args):
    img = image_io.read_cover(args.image)
    cap = capacity(img)
    values, counts = np.unique(cap.n, return_counts=True)
    print(f"size = {img.shape[1]}x{img.shape[0]}")
    print(f"min = {float(img.min())!r}")
    print(f"max = {float(img.max())!r}")
    print(f"dynamic_range = {image_io.dynamic_range(img):.6g}")
    print(f"n_x = {cap.n_x}")
    print("capacity_histogram = " + " ".join(f"{v}:{c}" for v, c in zip(values, counts)))


def cmd_prep(args):
    sources = [Path(p) for p in args.inputs]
    if args.manifest:
        sources += image_io.read_manifest(args.manifest)
    if not sources:
        raise UsageError("no input images given")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    min_range = None if args.no_range_filter else args.min_range
    written = []
    for src in sources:
        data = image_io.read_float_tiff(src)
        lum = image_io.extract_luminance(data) if data.ndim == 3 else data
        for idx, t in enumerate(image_io.tile(lum, args.size)):
            if not image_io.filter_by_capacity([t], args.threshold, min_range):
                continue
            path = out_dir / f"{src.stem}_{idx:04d}.tif"
            image_io.write_cover(t, path)
            written.append(path)
    image_io.write_manifest(written, out_dir / "manifest.txt")
    print(f"tiles = {len(written)}")


def cmd_report(args):
    cover = image_io.read_cover(args.cover)
    stego = image_io.read_cover(args.stego)
    key = pipeline.StegoKey.load(args.key)
    costs = pipeline.corrected_costs(cover, key)
    rep = analysis.diff_report(cover, stego, costs, planes=key.planes)
    print("flips_per_plane = " + " ".join(str(int(v)) for v in rep.flips_per_plane))
    print(f"total_flips = {rep.total_flips}")
    print(f"total_distortion = {rep.total_distortion!r}")
    print(f"change_rate = {rep.change_rate!r}")
    if args.map:
        analysis.change_map_image(rep, args.map)
    if args.export:
        analysis.steganalysis_export(stego, args.export)
    if args.costs:
        cost_model.export_costs(costs, args.costs)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hdrsteg", description="Mantissa-plane steganography for float32 HDR luminance images.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("keygen", help="write a stego key file")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, required=True, help="permutation seed")
    s.add_argument("--payload", type=float, default=0.05, help="bits per pixel per plane")
    s.add_argument("--planes", type=int, default=1)
    s.add_argument("--cost-model", default="directional", choices=sorted(cost_model.MODELS))
    s.add_argument("--stc-h", type=int, default=10)
    s.add_argument("--no-framing", action="store_true")
    s.set_defaults(func=cmd_keygen)

    s = sub.add_parser("embed", help="hide a message file in a cover TIFF")
    s.add_argument("--cover", required=True)
    s.add_argument("--key", required=True)
    s.add_argument("--message", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("extract", help="recover the message from a stego TIFF")
    s.add_argument("--stego", required=True)
    s.add_argument("--key", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("simulate", help="optimal-embedding simulation instead of STC")
    s.add_argument("--cover", required=True)
    s.add_argument("--key", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--bits", type=int, help="payload in bits (default: the key's full payload)")
    s.add_argument("--out", required=True)
    s.add_argument("--mask", help="write the any-plane change map as PGM")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("inspect", help="capacity map summary of a cover")
    s.add_argument("image")
    s.set_defaults(func=cmd_inspect)

    s = sub.add_parser("prep", help="luminance extraction, tiling and capacity filtering")
    s.add_argument("inputs", nargs="*", help="float32 TIFF sources (gray or RGB)")
    s.add_argument("--manifest", help="text file listing source paths, one per line")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--size", type=int, default=512)
    s.add_argument("--threshold", type=int, default=0, help="minimum n_x to keep a tile")
    s.add_argument("--min-range", type=float, default=2.0**8)
    s.add_argument("--no-range-filter", action="store_true")
    s.set_defaults(func=cmd_prep)

    s = sub.add_parser("report", help="diff statistics and exports for a cover/stego pair")
    s.add_argument("--cover", required=True)
    s.add_argument("--stego", required=True)
    s.add_argument("--key", required=True)
    s.add_argument("--map", help="change map PGM output")
    s.add_argument("--export", help="clamped integer export of the stego for steganalysis")
    s.add_argument("--costs", help="corrected cost map export")
    s.set_defaults(func=cmd_report)
    return p


def _fail(kind, code, exc):
    print(f"hdrsteg: error[{kind}]: {exc}", file=sys.stderr)
    return code


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        return _fail("usage", EXIT_USAGE, exc)
    except (CapacityExceededError, PayloadError, SaturationError, NoCapacityError) as exc:
        return _fail("capacity", EXIT_CAPACITY, exc)
    except (HdrStegError, OSError, ValueError) as exc:
        return _fail("data", EXIT_DATA, exc)
    return EXIT_OK


def main():
    sys.exit(run())
