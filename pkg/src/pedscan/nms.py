"""Greedy non-maximum suppression over detections."""

from __future__ import annotations

from .classify import Detection


def iou(a: Detection, b: Detection) -> float:
    ix = min(a.x + a.width, b.x + b.width) - max(a.x, b.x)
    iy = min(a.y + a.height, b.y + b.height) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.width * a.height + b.width * b.height - inter
    return inter / union


def _rank(d: Detection):
    return (-d.score, d.y, d.x, d.level)


def nms_greedy(detections, overlap_threshold: float = 0.5) -> list[Detection]:
    """Keep the best remaining box, drop everything overlapping it by more
    than ``overlap_threshold`` IoU, repeat.

    Output is in descending score order; equal scores go by (y, x, level).
    """
    if not 0.0 < overlap_threshold < 1.0:
        raise ValueError(f"overlap_threshold must be in (0, 1), got {overlap_threshold}")
    remaining = sorted(detections, key=_rank)
    kept: list[Detection] = []
    while remaining:
        best = remaining.pop(0)
        kept.append(best)
        remaining = [d for d in remaining if iou(best, d) <= overlap_threshold]
    return kept
