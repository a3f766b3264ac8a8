"""Synthetic water phantom images for exercising the metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .image import GrayImage


@dataclass(frozen=True)
class PhantomArtifact:
    """Geometric and intensity perturbations applied to the disk.

    ``shift_x``/``shift_y`` move the disk [px]; ``radius_scale`` resizes it;
    ``gradient`` is the fractional intensity change from disk centre to rim
    along +x (field inhomogeneity).
    """

    shift_x: float = 0.0
    shift_y: float = 0.0
    radius_scale: float = 1.0
    gradient: float = 0.0


def disk_geometry(width, height, artifact=None):
    a = artifact or PhantomArtifact()
    cx = (width - 1) / 2.0 + a.shift_x
    cy = (height - 1) / 2.0 + a.shift_y
    r = 0.35 * min(width, height) * a.radius_scale
    return cx, cy, r


def disk_mask(width, height, artifact=None) -> np.ndarray:
    cx, cy, r = disk_geometry(width, height, artifact)
    yy, xx = np.mgrid[0:height, 0:width]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


def synth_phantom(seed: int, width: int, height: int, signal_level: float, noise_std: float,
                  artifact: PhantomArtifact | None = None, background_level: float = 100.0,
                  ) -> GrayImage:
    """Bright disk on a dark background plus seeded Gaussian noise.

    The background sits at ``background_level`` rather than zero so that the
    noise is not clipped at the bottom of the range.
    """
    if noise_std < 0.0:
        raise ConfigError("noise_std must be >= 0")
    if width < 1 or height < 1:
        raise ConfigError("image dimensions must be >= 1")
    a = artifact or PhantomArtifact()
    cx, _, r = disk_geometry(width, height, a)
    mask = disk_mask(width, height, a)
    xx = np.arange(width, dtype=np.float64)[None, :].repeat(height, axis=0)
    shading = 1.0 + a.gradient * (xx - cx) / r
    img = np.where(mask, signal_level * shading, float(background_level))
    if noise_std > 0.0:
        rng = np.random.default_rng(seed)
        img = img + rng.normal(0.0, noise_std, img.shape)
    return GrayImage(np.clip(np.rint(img), 0, 65535).astype(np.uint16))
