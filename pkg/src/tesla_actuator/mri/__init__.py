"""Image-quality metrics for MRI compatibility checks."""

from .image import GrayImage, Roi, decode_pgm, encode_pgm, read_pgm, write_pgm
from .metrics import MetricsReport, evaluate, homogeneity, piu, snr, subtract
from .phantom import PhantomArtifact, disk_mask, synth_phantom
