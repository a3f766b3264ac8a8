"""Image-quality metrics for the scanner compatibility tests.

SNR uses the two-region method (signal mean over background standard
deviation). Uniformity and homogeneity are computed on a 3x3 mean-filtered
ROI; the filter only averages neighbours that are themselves inside the ROI,
so values at the ROI edge are not pulled toward the surroundings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, UndefinedValueError
from .image import GrayImage, Roi

HOMOGENEITY_DEFINITIONS = ("peak_to_peak_ppm", "fractional_range")


def roi_values(img: GrayImage, roi: Roi) -> np.ndarray:
    return img.pixels[roi.to_mask(img)].astype(np.float64)


def filtered_roi_values(img: GrayImage, roi: Roi) -> np.ndarray:
    """3x3 mean of each ROI pixel over its in-ROI neighbours."""
    mask = roi.to_mask(img)
    vals = np.where(mask, img.pixels.astype(np.float64), 0.0)
    pv = np.pad(vals, 1)
    pm = np.pad(mask.astype(np.float64), 1)
    h, w = mask.shape
    total = np.zeros((h, w))
    count = np.zeros((h, w))
    for dy in range(3):
        for dx in range(3):
            total += pv[dy:dy + h, dx:dx + w]
            count += pm[dy:dy + h, dx:dx + w]
    return total[mask] / count[mask]


def snr(img: GrayImage, signal_roi: Roi, noise_roi: Roi) -> float:
    """Mean of the signal ROI over the population std of the noise ROI.

    Returns ``math.inf`` when the noise ROI is perfectly flat.
    """
    sm, nm = signal_roi.to_mask(img), noise_roi.to_mask(img)
    if np.any(sm & nm):
        raise ConfigError("signal and noise ROIs overlap")
    signal = img.pixels[sm].astype(np.float64).mean()
    noise = img.pixels[nm].astype(np.float64).std()
    if noise == 0.0:
        return math.inf
    return float(signal / noise)


def piu(img: GrayImage, roi: Roi) -> float:
    """Percent integral uniformity ``100 * (1 - (max - min) / (max + min))``."""
    v = filtered_roi_values(img, roi)
    hi, lo = v.max(), v.min()
    if hi + lo == 0.0:
        return 100.0
    return float(100.0 * (1.0 - (hi - lo) / (hi + lo)))


def homogeneity(img: GrayImage, roi: Roi, definition: str = "peak_to_peak_ppm") -> float:
    """Spread of the filtered ROI relative to its mean.

    ``peak_to_peak_ppm``: ``1e6 * (max - min) / mean``;
    ``fractional_range``: ``100 * (max - min) / (2 * mean)`` (percent).
    """
    if definition not in HOMOGENEITY_DEFINITIONS:
        raise ConfigError(f"homogeneity definition {definition!r}: expected one of {HOMOGENEITY_DEFINITIONS}")
    v = filtered_roi_values(img, roi)
    mean = v.mean()
    if mean == 0.0:
        raise UndefinedValueError("homogeneity undefined for a zero-mean ROI")
    spread = v.max() - v.min()
    if definition == "peak_to_peak_ppm":
        return float(1e6 * spread / mean)
    return float(100.0 * spread / (2.0 * mean))


def subtract(a: GrayImage, b: GrayImage) -> GrayImage:
    """Per-pixel absolute difference."""
    if a.pixels.shape != b.pixels.shape:
        raise ConfigError(f"image sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    diff = np.abs(a.pixels.astype(np.int32) - b.pixels.astype(np.int32))
    return GrayImage(np.clip(diff, 0, 65535).astype(np.uint16))


@dataclass
class MetricsReport:
    snr: float
    piu: float
    homogeneity: float
    homogeneity_definition: str
    rois: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)
    difference: dict | None = None

    def as_dict(self) -> dict:
        out = {
            "labels": self.labels,
            "snr": self.snr if math.isfinite(self.snr) else "inf",
            "piu_percent": self.piu,
            "homogeneity": {"value": self.homogeneity, "definition": self.homogeneity_definition},
            "rois": self.rois,
        }
        if self.difference is not None:
            out["difference"] = self.difference
        return out


def evaluate(img: GrayImage, uniformity_roi: Roi, signal_roi: Roi, noise_roi: Roi,
             definition: str = "peak_to_peak_ppm", reference: GrayImage | None = None,
             labels: dict | None = None) -> MetricsReport:
    """All metrics for one image; with ``reference`` also a subtraction summary."""
    report = MetricsReport(
        snr=snr(img, signal_roi, noise_roi),
        piu=piu(img, uniformity_roi),
        homogeneity=homogeneity(img, uniformity_roi, definition),
        homogeneity_definition=definition,
        rois={"uniformity": uniformity_roi.describe(), "signal": signal_roi.describe(),
              "noise": noise_roi.describe()},
        labels=dict(labels or {}),
    )
    if reference is not None:
        d = subtract(img, reference).pixels
        report.difference = {"nonzero_pixels": int(np.count_nonzero(d)), "max": int(d.max()),
                             "mean": float(d.mean())}
    return report
