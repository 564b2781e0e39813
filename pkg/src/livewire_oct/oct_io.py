"""Volume loading (.vol binary and portable manifest) and record export.

.vol layout (little-endian): a 2048-byte file header starting with the
ASCII version string "HSF-OCT-..." at offset 0, SizeX/NumBScans/SizeZ as
int32 at offsets 12/16/20, ScaleX/Distance/ScaleZ as float64 at
24/32/40, SizeXSlo/SizeYSlo as int32 at 48/52, ScanPosition as char[4]
at 84, ScanPattern and BScanHdrSize as int32 at 96/100, and a char[16]
series id at 104. The header is followed by a SizeXSlo*SizeYSlo-byte
fundus image (skipped), then per B-scan a BScanHdrSize-byte header
(skipped) and SizeX*SizeZ float32 raw reflectivities.

Raw values map to display intensities via clamp(raw, 0, 1)**0.25; the
format's invalid-pixel sentinel (float32 max) maps to 0.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .config import BoundaryId
from .errors import (
    BadMagic,
    DimensionMismatch,
    InconsistentHeader,
    IoFailure,
    MissingSlice,
    TruncatedFile,
)
from .records import SegmentationRecord
from .volume import BScan, Eye, ScanKind, Volume

_MAGIC = b"HSF-OCT-"
_HEADER_SIZE = 2048
_INVALID_SENTINEL = 3.4e38


def parse_vol(data: bytes) -> Volume:
    """Parse a .vol byte stream into a Volume."""
    if len(data) < len(_MAGIC) or not data.startswith(_MAGIC):
        raise BadMagic("not a .vol stream (missing HSF-OCT- prefix)")
    if len(data) < _HEADER_SIZE:
        raise TruncatedFile("file shorter than the 2048-byte header")
    size_x, num_bscans, size_z = struct.unpack_from("<iii", data, 12)
    scale_x, distance, scale_z = struct.unpack_from("<ddd", data, 24)
    slo_w, slo_h = struct.unpack_from("<ii", data, 48)
    scan_position = data[84:88].split(b"\x00")[0].decode("ascii", "replace")
    scan_pattern, bscan_hdr_size = struct.unpack_from("<ii", data, 96)
    series_id = data[104:120].split(b"\x00")[0].decode("ascii", "replace")

    if size_x <= 0 or size_z <= 0 or num_bscans <= 0:
        raise InconsistentHeader(
            f"non-positive dimensions: SizeX={size_x} NumBScans={num_bscans} "
            f"SizeZ={size_z}"
        )
    if slo_w < 0 or slo_h < 0 or bscan_hdr_size < 0:
        raise InconsistentHeader("negative block sizes in header")
    if scale_x <= 0 or scale_z <= 0 or distance <= 0:
        raise InconsistentHeader("physical scales must be strictly positive")

    offset = _HEADER_SIZE + slo_w * slo_h
    frame_bytes = size_x * size_z * 4
    bscans = []
    for i in range(num_bscans):
        offset += bscan_hdr_size
        chunk = data[offset : offset + frame_bytes]
        if len(chunk) < frame_bytes:
            raise TruncatedFile(
                f"B-scan {i}: expected {frame_bytes} payload bytes, "
                f"got {len(chunk)}"
            )
        raw = np.frombuffer(chunk, dtype="<f4").reshape(size_z, size_x)
        bscans.append(BScan(pixels=_display_transform(raw), index=i))
        offset += frame_bytes

    eye = Eye.OD if scan_position.startswith("OD") else (
        Eye.OS if scan_position.startswith("OS") else Eye.UNKNOWN
    )
    kind = ScanKind.CIRCUMPAPILLARY if scan_pattern == 2 else ScanKind.MACULAR
    return Volume(
        id=series_id or "volume",
        bscans=bscans,
        scale_x_mm=scale_x,
        scale_z_mm=scale_z,
        spacing_y_mm=distance,
        scan_kind=kind,
        eye=eye,
    )


def _display_transform(raw: np.ndarray) -> np.ndarray:
    raw = raw.astype(np.float64)
    invalid = ~np.isfinite(raw) | (raw >= _INVALID_SENTINEL)
    out = np.clip(raw, 0.0, 1.0) ** 0.25
    out[invalid] = 0.0
    return out


def parse_vol_file(path: str | Path) -> Volume:
    return parse_vol(Path(path).read_bytes())


def build_vol_bytes(
    raw_bscans: list[np.ndarray],
    scale_x: float = 0.0117,
    distance: float = 0.1,
    scale_z: float = 0.0039,
    eye: str = "OD",
    scan_pattern: int = 3,
    bscan_hdr_size: int = 256,
    series_id: str = "fixture",
    slo_size: tuple[int, int] = (16, 16),
    version: bytes = b"HSF-OCT-103",
) -> bytes:
    """Assemble a .vol byte stream from raw float32 frames.

    Test/synthesis fixture only; this writer covers exactly the fields
    the parser consumes and zero-fills the rest.
    """
    if not raw_bscans:
        raise ValueError("need at least one B-scan")
    size_z, size_x = raw_bscans[0].shape
    header = bytearray(_HEADER_SIZE)
    header[0 : len(version[:12])] = version[:12]
    struct.pack_into("<iii", header, 12, size_x, len(raw_bscans), size_z)
    struct.pack_into("<ddd", header, 24, scale_x, distance, scale_z)
    struct.pack_into("<ii", header, 48, slo_size[0], slo_size[1])
    header[84:88] = eye.encode("ascii")[:4].ljust(4, b"\x00")
    struct.pack_into("<ii", header, 96, scan_pattern, bscan_hdr_size)
    header[104:120] = series_id.encode("ascii")[:16].ljust(16, b"\x00")

    parts = [bytes(header), bytes(slo_size[0] * slo_size[1])]
    for frame in raw_bscans:
        if frame.shape != (size_z, size_x):
            raise ValueError("all frames must share one shape")
        parts.append(bytes(bscan_hdr_size))
        parts.append(np.ascontiguousarray(frame, dtype="<f4").tobytes())
    return b"".join(parts)


def write_vol(path: str | Path, raw_bscans: list[np.ndarray], **kwargs) -> Path:
    path = Path(path)
    path.write_bytes(build_vol_bytes(raw_bscans, **kwargs))
    return path


# --- portable manifest format -------------------------------------------


def load_portable(manifest_path: str | Path) -> Volume:
    """Load a volume from a JSON manifest referencing grayscale slices."""
    manifest_path = Path(manifest_path)
    data = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    bscans = []
    expected = None
    for i, rel in enumerate(data["slices"]):
        slice_path = base / rel
        if not slice_path.exists():
            raise MissingSlice(f"slice file missing: {slice_path}")
        pixels = _load_gray(slice_path)
        if expected is None:
            expected = pixels.shape
        elif pixels.shape != expected:
            raise DimensionMismatch(
                f"slice {i} is {pixels.shape[1]}x{pixels.shape[0]}, "
                f"expected {expected[1]}x{expected[0]}"
            )
        bscans.append(BScan(pixels=pixels, index=i))
    return Volume(
        id=data.get("id", manifest_path.stem),
        bscans=bscans,
        scale_x_mm=float(data.get("scale_x_mm", 1.0)),
        scale_z_mm=float(data.get("scale_z_mm", 1.0)),
        spacing_y_mm=float(data.get("spacing_y_mm", 1.0)),
        scan_kind=ScanKind(data.get("scan_kind", "Macular")),
        eye=Eye(data.get("eye", "Unknown")),
    )


def _load_gray(path: Path) -> np.ndarray:
    img = Image.open(path)
    if img.mode in ("I;16", "I;16B", "I"):
        arr = np.asarray(img, dtype=np.float64)
        return np.clip(arr / 65535.0, 0.0, 1.0)
    if img.mode != "L":
        img = img.convert("L")
    return np.asarray(img, dtype=np.float64) / 255.0


def save_portable(volume: Volume, out_dir: str | Path) -> Path:
    """Write a volume as manifest.json plus 16-bit grayscale PNG slices."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        names = []
        for b in volume.bscans:
            name = f"slice_{b.index:03d}.png"
            arr = np.rint(b.pixels * 65535.0).astype(np.uint16)
            Image.fromarray(arr).save(out_dir / name)
            names.append(name)
        manifest = {
            "id": volume.id,
            "scan_kind": volume.scan_kind.value,
            "eye": volume.eye.value,
            "scale_x_mm": volume.scale_x_mm,
            "scale_z_mm": volume.scale_z_mm,
            "spacing_y_mm": volume.spacing_y_mm,
            "slices": names,
        }
        manifest_path = out_dir / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    except OSError as exc:
        raise IoFailure(f"cannot write portable volume: {exc}") from exc
    return manifest_path


# --- record export --------------------------------------------------------

_BOUNDARY_COLORS = {
    BoundaryId.ILM: (255, 64, 64),
    BoundaryId.RNFL_GCL: (255, 160, 0),
    BoundaryId.GCL_IPL: (255, 255, 0),
    BoundaryId.IPL_INL: (64, 255, 64),
    BoundaryId.INL_OPL: (0, 220, 220),
    BoundaryId.OPL_ONL: (64, 128, 255),
    BoundaryId.ONL_PR: (160, 64, 255),
    BoundaryId.PR_RPE: (255, 64, 255),
    BoundaryId.RPE_OUTER: (255, 255, 255),
}
_FLUID_COLOR = (0, 255, 255)


def render_overlay(bscan: BScan, record: SegmentationRecord) -> Image.Image:
    """B-scan with committed boundaries and fluid contours drawn on top."""
    gray = np.rint(bscan.pixels * 255.0).astype(np.uint8)
    img = Image.fromarray(gray, mode="L").convert("RGB")
    draw = ImageDraw.Draw(img)
    for bid, boundary in record.boundaries.items():
        pts = [(x, float(boundary.y[x])) for x in range(boundary.width)]
        draw.line(pts, fill=_BOUNDARY_COLORS[bid], width=1)
    for fluid in record.fluids:
        loop = [(int(x), int(y)) for x, y in fluid.contour]
        if loop:
            draw.line(loop + [loop[0]], fill=_FLUID_COLOR, width=1)
    return img


def export_record(
    record: SegmentationRecord, bscan: BScan, out_dir: str | Path
) -> list[Path]:
    """Write the record as JSON, one CSV per boundary, and an overlay PNG.

    Returns the written paths; re-loading the JSON with load_record
    reproduces the record exactly.
    """
    for bid, b in record.boundaries.items():
        if b.width != bscan.width:
            raise ValueError(
                f"boundary {bid.value} has {b.width} columns, scan has "
                f"{bscan.width}"
            )
    out_dir = Path(out_dir)
    stem = f"record_{record.volume_id}_{record.bscan_index:03d}"
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path = out_dir / f"{stem}.json"
        json_path.write_text(
            json.dumps(record.to_dict(), indent=2, sort_keys=True)
        )
        written.append(json_path)
        for bid, boundary in sorted(
            record.boundaries.items(), key=lambda kv: kv[0].value
        ):
            csv_path = out_dir / f"{stem}_{bid.value}.csv"
            with csv_path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["column", "y"])
                for x in range(boundary.width):
                    writer.writerow([x, f"{boundary.y[x]:.3f}"])
            written.append(csv_path)
        overlay_path = out_dir / f"{stem}_overlay.png"
        render_overlay(bscan, record).save(overlay_path)
        written.append(overlay_path)
    except OSError as exc:
        raise IoFailure(f"cannot export record: {exc}") from exc
    return written


def load_record(path: str | Path) -> SegmentationRecord:
    return SegmentationRecord.from_dict(json.loads(Path(path).read_text()))
