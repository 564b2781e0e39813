"""Evaluation mathematics: unsigned boundary error, dice overlap,
irregularity index, Bland-Altman agreement, and effort summaries."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BothEmpty, DegenerateSegment, IoFailure, LengthMismatch
from .records import SegmentationRecord


def unsigned_error(x, y) -> float:
    """Mean absolute per-column difference between two boundaries, in
    pixels: sum(|x_i - y_i|) / w."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.shape[0] < 1:
        raise LengthMismatch("boundaries must share one length >= 1")
    return float(np.mean(np.abs(x - y)))


def dice(mask_x, mask_y) -> float:
    """Overlap similarity 2|X n Y| / (|X| + |Y|) between binary masks."""
    x = np.asarray(mask_x, dtype=bool)
    y = np.asarray(mask_y, dtype=bool)
    if x.shape != y.shape:
        raise LengthMismatch("masks must share dimensions")
    nx, ny = int(x.sum()), int(y.sum())
    if nx == 0 and ny == 0:
        raise BothEmpty("dice is undefined for two empty masks")
    return 2.0 * int((x & y).sum()) / (nx + ny)


def irregularity_index(points) -> float:
    """Endpoint chord length over arc length of an ordered point list;
    1 for straight segments, smaller the wavier the boundary gets."""
    pts = [(float(px), float(py)) for px, py in points]
    if len(pts) < 2:
        raise DegenerateSegment("need at least 2 points")
    arc = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        step = math.hypot(x1 - x0, y1 - y0)
        if step == 0.0:
            raise DegenerateSegment("consecutive points must be distinct")
        arc += step
    chord = math.hypot(pts[-1][0] - pts[0][0], pts[-1][1] - pts[0][1])
    return chord / arc


def boundary_irregularity(y: np.ndarray) -> float:
    """Irregularity of a full-width boundary sampled once per column."""
    return irregularity_index([(x, y[x]) for x in range(len(y))])


@dataclass(frozen=True)
class BlandAltmanStats:
    n: int
    mean_diff: float
    sd_diff: float
    loa_low: float
    loa_high: float
    pct_within: float

    def __post_init__(self):
        if self.loa_low > self.loa_high:
            raise ValueError("limits of agreement out of order")
        if not (0.0 <= self.pct_within <= 100.0):
            raise ValueError("pct_within must lie in [0, 100]")


def bland_altman(a, b) -> BlandAltmanStats:
    """Agreement statistics over paired measurements: mean difference,
    SD (n-1 denominator), mean +/- 1.96 SD limits, and the percentage of
    differences inside those limits."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 2:
        raise LengthMismatch("paired measurements must share one length >= 2")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    lo, hi = mean - 1.96 * sd, mean + 1.96 * sd
    within = np.count_nonzero((d >= lo) & (d <= hi))
    return BlandAltmanStats(
        n=d.shape[0],
        mean_diff=mean,
        sd_diff=sd,
        loa_low=lo,
        loa_high=hi,
        pct_within=100.0 * within / d.shape[0],
    )


def mean_boundary(curves: list[np.ndarray]) -> np.ndarray:
    """Per-column arithmetic mean of several graders' boundaries: the
    gold-standard construction for agreement runs."""
    if not curves:
        raise LengthMismatch("need at least one boundary")
    stack = np.stack([np.asarray(c, dtype=np.float64) for c in curves])
    return stack.mean(axis=0)


def summarize_effort(records: list[SegmentationRecord]) -> dict[str, dict]:
    """Arithmetic mean time and clicks per boundary across records."""
    if not records:
        raise LengthMismatch("need at least one record")
    sums: dict[str, list[float]] = {}
    for rec in records:
        for key, stat in rec.session_stats.items():
            entry = sums.setdefault(key, [0.0, 0.0, 0])
            entry[0] += stat.elapsed_seconds
            entry[1] += stat.click_count
            entry[2] += 1
    return {
        key: {"mean_seconds": s / n, "mean_clicks": c / n}
        for key, (s, c, n) in sorted(sums.items())
    }


# --- record-set comparison ------------------------------------------------


@dataclass
class BoundaryComparison:
    boundary: str
    n: int
    unsigned_errors: list[float]
    mean_unsigned_error: float
    bland_altman: BlandAltmanStats | None
    ba_pairs: list[tuple[float, float]]  # (mean level, difference) per scan
    irregularity_a: list[float]
    irregularity_b: list[float]


@dataclass
class MetricsReport:
    boundaries: list[BoundaryComparison] = field(default_factory=list)
    dice_scores: dict[str, float] = field(default_factory=dict)
    effort_a: dict[str, dict] = field(default_factory=dict)
    effort_b: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "boundaries": [
                {
                    "boundary": bc.boundary,
                    "n": bc.n,
                    "unsigned_errors": bc.unsigned_errors,
                    "mean_unsigned_error": bc.mean_unsigned_error,
                    "bland_altman": None
                    if bc.bland_altman is None
                    else {
                        "n": bc.bland_altman.n,
                        "mean_diff": bc.bland_altman.mean_diff,
                        "sd_diff": bc.bland_altman.sd_diff,
                        "loa_low": bc.bland_altman.loa_low,
                        "loa_high": bc.bland_altman.loa_high,
                        "pct_within": bc.bland_altman.pct_within,
                    },
                    "irregularity_a": bc.irregularity_a,
                    "irregularity_b": bc.irregularity_b,
                }
                for bc in self.boundaries
            ],
            "dice_scores": self.dice_scores,
            "effort_a": self.effort_a,
            "effort_b": self.effort_b,
        }

    def write(self, out_dir: str | Path) -> list[Path]:
        """Emit report.json, report.csv (per-boundary rows), an effort
        table mirroring the time/clicks comparison, and the Bland-Altman
        scatter pairs for external plotting."""
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            paths = [out_dir / "report.json"]
            paths[0].write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

            report_csv = out_dir / "report.csv"
            with report_csv.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(
                    ["boundary", "n", "mean_unsigned_error_px", "ba_mean_diff",
                     "ba_loa_low", "ba_loa_high", "ba_pct_within",
                     "mean_irregularity_a", "mean_irregularity_b"]
                )
                for bc in self.boundaries:
                    ba = bc.bland_altman
                    writer.writerow([
                        bc.boundary,
                        bc.n,
                        f"{bc.mean_unsigned_error:.4f}",
                        "" if ba is None else f"{ba.mean_diff:.4f}",
                        "" if ba is None else f"{ba.loa_low:.4f}",
                        "" if ba is None else f"{ba.loa_high:.4f}",
                        "" if ba is None else f"{ba.pct_within:.1f}",
                        _mean_or_blank(bc.irregularity_a),
                        _mean_or_blank(bc.irregularity_b),
                    ])
            paths.append(report_csv)

            ba_csv = out_dir / "bland_altman.csv"
            with ba_csv.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["boundary", "mean", "difference"])
                for bc in self.boundaries:
                    for level, diff in bc.ba_pairs:
                        writer.writerow([bc.boundary, f"{level:.4f}", f"{diff:.4f}"])
            paths.append(ba_csv)

            effort_csv = out_dir / "effort.csv"
            with effort_csv.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["boundary", "mean_seconds_a", "mean_clicks_a",
                                 "mean_seconds_b", "mean_clicks_b"])
                for key in sorted(set(self.effort_a) | set(self.effort_b)):
                    ea = self.effort_a.get(key)
                    eb = self.effort_b.get(key)
                    writer.writerow([
                        key,
                        "" if ea is None else f"{ea['mean_seconds']:.2f}",
                        "" if ea is None else f"{ea['mean_clicks']:.2f}",
                        "" if eb is None else f"{eb['mean_seconds']:.2f}",
                        "" if eb is None else f"{eb['mean_clicks']:.2f}",
                    ])
            paths.append(effort_csv)
        except OSError as exc:
            raise IoFailure(f"cannot write metrics report: {exc}") from exc
        return paths


def _mean_or_blank(values: list[float]) -> str:
    return f"{np.mean(values):.4f}" if values else ""


def _fluid_union(record: SegmentationRecord, shape) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for fluid in record.fluids:
        mask |= fluid.mask
    return mask


def compare_records(
    records_a: list[SegmentationRecord], records_b: list[SegmentationRecord]
) -> MetricsReport:
    """Pair records by (volume_id, bscan_index) and compute the full
    per-boundary and fluid comparison between the two sets."""
    index_b = {(r.volume_id, r.bscan_index): r for r in records_b}
    pairs = [
        (a, index_b[(a.volume_id, a.bscan_index)])
        for a in records_a
        if (a.volume_id, a.bscan_index) in index_b
    ]
    per_boundary: dict[str, dict] = {}
    dice_scores: dict[str, float] = {}
    for a, b in pairs:
        for bid in sorted(set(a.boundaries) & set(b.boundaries), key=lambda v: v.value):
            ya, yb = a.boundaries[bid].y, b.boundaries[bid].y
            if ya.shape != yb.shape:
                raise LengthMismatch(
                    f"{bid.value}: boundary widths differ for "
                    f"{a.volume_id}/{a.bscan_index}"
                )
            entry = per_boundary.setdefault(
                bid.value,
                {"err": [], "mean_a": [], "mean_b": [], "irr_a": [], "irr_b": []},
            )
            entry["err"].append(unsigned_error(ya, yb))
            entry["mean_a"].append(float(np.mean(ya)))
            entry["mean_b"].append(float(np.mean(yb)))
            entry["irr_a"].append(boundary_irregularity(ya))
            entry["irr_b"].append(boundary_irregularity(yb))
        if a.fluids or b.fluids:
            shape = (a.fluids or b.fluids)[0].mask.shape
            key = f"{a.volume_id}/{a.bscan_index}"
            dice_scores[key] = dice(_fluid_union(a, shape), _fluid_union(b, shape))

    comparisons = []
    for name, entry in sorted(per_boundary.items()):
        mean_a = np.array(entry["mean_a"])
        mean_b = np.array(entry["mean_b"])
        ba = bland_altman(mean_a, mean_b) if mean_a.shape[0] >= 2 else None
        entry["pairs"] = [
            (float((a + b) / 2.0), float(a - b)) for a, b in zip(mean_a, mean_b)
        ]
        comparisons.append(
            BoundaryComparison(
                boundary=name,
                n=len(entry["err"]),
                unsigned_errors=entry["err"],
                mean_unsigned_error=float(np.mean(entry["err"])),
                bland_altman=ba,
                ba_pairs=entry["pairs"],
                irregularity_a=entry["irr_a"],
                irregularity_b=entry["irr_b"],
            )
        )
    return MetricsReport(
        boundaries=comparisons,
        dice_scores=dice_scores,
        effort_a=summarize_effort(records_a) if records_a else {},
        effort_b=summarize_effort(records_b) if records_b else {},
    )
