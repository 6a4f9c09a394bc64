"""Closed-form reference curves for the damped-oscillator decoherence model.

These are analytic approximations for an underdamped oscillator monitored
by an oscillator bath, useful as overlays next to simulated
partial-information plots. Nothing here simulates the oscillator; points
carry an ``analytic-approximation`` tag so downstream plots cannot
mistake them for exact results.

The native form of the mutual-information expression uses natural
logarithms; set ``units="bits"`` to get the same curve with both the
entropy and the half-log term converted (divide by ln 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

NOTE = "analytic-approximation"


@dataclass(frozen=True)
class QbmParams:
    """System entropy, squeeze factor, and information deficit.

    ``h_s`` is interpreted in ``units`` ("bits" or "nats"). The squeeze
    factor ``s`` >= 1 quantifies how delocalized the initial state is.
    """

    h_s: float
    s: float = 1.0
    delta: float = 0.1
    units: str = "bits"

    def __post_init__(self) -> None:
        if self.units not in ("bits", "nats"):
            raise ValueError(f"units must be 'bits' or 'nats', got {self.units!r}")
        if self.s < 1.0:
            raise ValueError("squeeze factor must be at least 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.h_s < 0.0:
            raise ValueError("system entropy must be non-negative")


@dataclass(frozen=True)
class QbmPoint:
    f: float
    i_value: float
    clamped: bool


@dataclass(frozen=True)
class QbmCurve:
    points: tuple[QbmPoint, ...]
    params: QbmParams
    note: str = NOTE


def qbm_mutual_information_raw(params: QbmParams, f: float) -> float:
    """Unclamped I(f) = H_S + (1/2) log(f / (1-f)), in the params' units.

    Antisymmetric about f = 1/2, where it equals H_S exactly; diverges at
    the endpoints, which are therefore rejected.
    """
    if not 0.0 < f < 1.0:
        raise ValueError("fraction must lie strictly inside (0, 1)")
    log = math.log if params.units == "nats" else math.log2
    return params.h_s + 0.5 * log(f / (1.0 - f))


def qbm_mutual_information(params: QbmParams, f_grid: Sequence[float]) -> QbmCurve:
    """Reference mutual-information curve, clamped to [0, 2 H_S] for plotting.

    Clamped points are flagged; the raw value is available through
    ``qbm_mutual_information_raw``.
    """
    points = []
    for f in f_grid:
        raw = qbm_mutual_information_raw(params, float(f))
        clamped_value = min(max(raw, 0.0), 2.0 * params.h_s)
        points.append(QbmPoint(float(f), clamped_value, clamped_value != raw))
    return QbmCurve(tuple(points), params)


def qbm_redundancy(params: QbmParams) -> float:
    """Redundancy of an initially squeezed state: s ** (2 delta)."""
    return params.s ** (2.0 * params.delta)
