"""Batch command-line interface.

Subcommands: convert, segment-grid, evaluate, phantom, serve.
Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import oct_io, phantom as phantom_mod
from .annotate import grid_boundary
from .config import BoundaryId, PipelineConfig, default_config
from .errors import LivewireOctError, ScanMismatch, TooFewClicks
from .livewire import Anchor
from .metrics import compare_records, mean_boundary
from .records import SegmentationRecord
from .service import serve_forever, serve_ws_forever
from .volume import Volume

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(path: str | None) -> PipelineConfig:
    path = path or os.environ.get("LIVEWIRE_OCT_CONFIG")
    if path:
        return PipelineConfig.load(path)
    return default_config()


def _load_volume(path: Path) -> Volume:
    if path.suffix.lower() == ".vol":
        return oct_io.parse_vol_file(path)
    return oct_io.load_portable(path)


def _load_record_set(path: Path) -> list[SegmentationRecord]:
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        files = [f for f in files if f.name != "manifest.json"]
    else:
        files = [path]
    if not files:
        raise ScanMismatch(f"no record files under {path}")
    return [oct_io.load_record(f) for f in files]


def _cmd_convert(args) -> int:
    volume = _load_volume(Path(args.input))
    manifest = oct_io.save_portable(volume, Path(args.out))
    print(f"wrote {manifest}")
    return EXIT_OK


def _cmd_segment_grid(args) -> int:
    _load_config(args.config)  # validate early; grid mode itself has no knobs
    volume = _load_volume(Path(args.volume))
    data = json.loads(Path(args.clicks).read_text())
    grader = data.get("grader_id", "")
    by_scan: dict[int, SegmentationRecord] = {}
    failures = 0
    for entry in data["clicks"]:
        index = int(entry["bscan"])
        boundary_id = BoundaryId(entry["boundary"])
        if not (0 <= index < len(volume.bscans)):
            print(f"skipping entry: no B-scan {index}", file=sys.stderr)
            failures += 1
            continue
        clicks = [Anchor(x=int(x), y=float(y)) for x, y in entry["points"]]
        try:
            boundary = grid_boundary(
                clicks, volume.width, volume.height, boundary_id=boundary_id
            )
        except TooFewClicks as exc:
            print(f"skipping {boundary_id.value} on B-scan {index}: {exc}",
                  file=sys.stderr)
            failures += 1
            continue
        record = by_scan.setdefault(
            index,
            SegmentationRecord(volume_id=volume.id, bscan_index=index,
                               grader_id=grader),
        )
        record.boundaries[boundary_id] = boundary
    out_dir = Path(args.out)
    for index, record in sorted(by_scan.items()):
        oct_io.export_record(record, volume.bscans[index], out_dir)
    print(f"wrote {len(by_scan)} record(s) to {out_dir}"
          + (f" ({failures} entries skipped)" if failures else ""))
    if not by_scan:
        return EXIT_DATA
    return EXIT_OK


def _average_record_sets(
    sets: list[list[SegmentationRecord]],
) -> list[SegmentationRecord]:
    """Per-column mean across graders: the gold-standard construction."""
    if len(sets) == 1:
        return sets[0]
    keyed = [
        {(r.volume_id, r.bscan_index): r for r in records} for records in sets
    ]
    common = set(keyed[0])
    for k in keyed[1:]:
        common &= set(k)
    if not common:
        raise ScanMismatch("gold-standard inputs share no scans")
    gold = []
    for key in sorted(common):
        graders = [k[key] for k in keyed]
        boundaries = set(graders[0].boundaries)
        for g in graders[1:]:
            boundaries &= set(g.boundaries)
        record = SegmentationRecord(
            volume_id=key[0], bscan_index=key[1], grader_id="gold"
        )
        for bid in boundaries:
            curves = [g.boundaries[bid].y for g in graders]
            averaged = mean_boundary(curves)
            template = graders[0].boundaries[bid]
            record.boundaries[bid] = type(template)(
                y=averaged, id=bid, mode=template.mode
            )
        gold.append(record)
    return gold


def _cmd_evaluate(args) -> int:
    sets_a = [_load_record_set(Path(p)) for p in args.a]
    records_a = _average_record_sets(sets_a)
    records_b = _load_record_set(Path(args.b))
    keys_a = {(r.volume_id, r.bscan_index) for r in records_a}
    keys_b = {(r.volume_id, r.bscan_index) for r in records_b}
    if not (keys_a & keys_b):
        raise ScanMismatch("record sets share no (volume, B-scan) identities")
    report = compare_records(records_a, records_b)
    paths = report.write(Path(args.out))
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_phantom(args) -> int:
    spec = phantom_mod.PhantomSpec.from_json(Path(args.spec))
    bscan, truth = phantom_mod.generate(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    volume = Volume(
        id=args.id, bscans=[bscan], scale_x_mm=0.0117, scale_z_mm=0.0039,
        spacing_y_mm=0.1,
    )
    manifest = oct_io.save_portable(volume, out_dir / "volume")
    truth_path = out_dir / "truth.json"
    truth_path.write_text(json.dumps({
        "boundaries": {
            bid.value: [float(v) for v in curve]
            for bid, curve in sorted(truth.boundaries.items(),
                                     key=lambda kv: kv[0].value)
        },
        "shadow_columns": sorted(truth.shadow_columns),
        "n_fluids": len(truth.fluid_masks),
    }, indent=2, sort_keys=True))
    for i, mask in enumerate(truth.fluid_masks):
        Image.fromarray((mask * np.uint8(255))).save(
            out_dir / f"fluid_mask_{i:02d}.png"
        )
    print(f"wrote {manifest} and {truth_path}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    config = _load_config(args.config)
    host, _, port = args.bind.rpartition(":")
    host = host or "127.0.0.1"
    if args.ws:
        serve_ws_forever(host, int(port), config)
    else:
        serve_forever(host, int(port), config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="livewire-oct",
                     description="Semi-automatic OCT segmentation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[], help="convert a volume to the "
                       "portable manifest format")
    p.add_argument("input", help=".vol file or portable manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("segment-grid", help="batch grid-manual segmentation "
                       "from a clicks file")
    p.add_argument("volume", help=".vol file or portable manifest")
    p.add_argument("clicks", help="JSON clicks file")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_segment_grid)

    p = sub.add_parser("evaluate", help="compare two record sets")
    p.add_argument("--a", action="append", required=True,
                   help="record file/dir; repeat to average graders into a "
                        "gold standard")
    p.add_argument("--b", required=True, help="record file/dir to compare")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("phantom", help="generate a synthetic B-scan with "
                       "ground truth")
    p.add_argument("spec", help="phantom spec JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--id", default="phantom")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("serve", help="run the interactive session service")
    p.add_argument("--bind", default="127.0.0.1:8791")
    p.add_argument("--config", default=None)
    p.add_argument("--ws", action="store_true",
                   help="serve the WebSocket endpoint instead of raw TCP")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except LivewireOctError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
