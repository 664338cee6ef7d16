"""Image-quality metrics and the bicubic upsampling baseline.

Conventions (they matter when comparing against published tables):

* PSNR is computed per band and averaged; zero-error bands contribute a
  finite cap (default 100 dB). A whole-cube variant is available via
  ``per_band=False``.
* ERGAS uses the spatial resolution ratio directly (100/ratio * ...);
  zero-mean reference bands are excluded with a warning.
* SAM is the mean per-pixel spectral angle in degrees; pixels whose
  reference or estimate spectrum is identically zero are skipped.
* SSIM is single-scale with an 11x11 Gaussian window (sigma 1.5) and the
  standard constants C1=(0.01 peak)^2, C2=(0.03 peak)^2, computed on the
  valid interior and averaged over bands.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError, MetricUndefinedError
from .tensor import mode_n_product

PSNR_CAP_DB = 100.0


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ergas: float
    sam: float
    ssim: float


def _check_same_shape(ref, est):
    ref = np.asarray(ref, dtype=float)
    est = np.asarray(est, dtype=float)
    if ref.shape != est.shape or ref.ndim != 3:
        raise DimensionError(
            f"metric inputs must be 3-way tensors of equal shape, "
            f"got {ref.shape} vs {est.shape}"
        )
    return ref, est


def psnr(ref, est, peak, cap=PSNR_CAP_DB, per_band=True):
    """Peak signal-to-noise ratio in dB (per-band average by default)."""
    ref, est = _check_same_shape(ref, est)
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    err2 = (ref - est) ** 2
    mse = err2.mean(axis=(0, 1)) if per_band else np.array([err2.mean()])
    out = np.full(mse.shape, float(cap))
    pos = mse > 0
    out[pos] = 10.0 * np.log10(peak * peak / mse[pos])
    return float(out.mean())


def ergas(ref, est, ratio):
    """Relative dimensionless global synthesis error (lower is better)."""
    ref, est = _check_same_shape(ref, est)
    if not ratio > 0:
        raise ValueError(f"resolution ratio must be positive, got {ratio}")
    mse = ((ref - est) ** 2).mean(axis=(0, 1))
    mu = ref.mean(axis=(0, 1))
    usable = mu != 0
    if not usable.any():
        raise MetricUndefinedError("ERGAS undefined: every reference band has zero mean")
    skipped = int((~usable).sum())
    if skipped:
        warnings.warn(f"ERGAS: excluded {skipped} zero-mean reference band(s)")
    return float(100.0 / ratio * np.sqrt(np.mean(mse[usable] / mu[usable] ** 2)))


def sam(ref, est):
    """Mean spectral angle between per-pixel spectra, in degrees."""
    ref, est = _check_same_shape(ref, est)
    bands = ref.shape[2]
    r = ref.reshape(-1, bands)
    e = est.reshape(-1, bands)
    nr = np.linalg.norm(r, axis=1)
    ne = np.linalg.norm(e, axis=1)
    valid = (nr > 0) & (ne > 0)
    if not valid.any():
        raise MetricUndefinedError("SAM undefined: every pixel spectrum is zero")
    skipped = int((~valid).sum())
    if skipped:
        warnings.warn(f"SAM: skipped {skipped} pixel(s) with a zero spectrum")
    cosang = np.einsum("ij,ij->i", r[valid], e[valid]) / (nr[valid] * ne[valid])
    return float(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))).mean())


def _gaussian_window(size, sigma):
    k = np.arange(size, dtype=float) - (size - 1) / 2
    w = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return w / w.sum()


def _filter_valid(img, w):
    # separable 'valid' correlation with the 1-d window along both axes
    out = np.einsum("ijk,k->ij", sliding_window_view(img, w.size, axis=0), w)
    out = np.einsum("ijk,k->ij", sliding_window_view(out, w.size, axis=1), w)
    return out


def ssim(ref, est, peak, win_size=11, win_sigma=1.5):
    """Single-scale structural similarity, averaged over bands."""
    ref, est = _check_same_shape(ref, est)
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    if ref.shape[0] < win_size or ref.shape[1] < win_size:
        raise DimensionError(
            f"image {ref.shape[:2]} smaller than the {win_size}x{win_size} window"
        )
    w = _gaussian_window(win_size, win_sigma)
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    vals = []
    for b in range(ref.shape[2]):
        x = ref[:, :, b]
        y = est[:, :, b]
        mu_x = _filter_valid(x, w)
        mu_y = _filter_valid(y, w)
        var_x = _filter_valid(x * x, w) - mu_x * mu_x
        var_y = _filter_valid(y * y, w) - mu_y * mu_y
        cov = _filter_valid(x * y, w) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
        den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
        vals.append(float((num / den).mean()))
    return float(np.mean(vals))


def _keys_kernel(x, a=-0.5):
    ax = abs(x)
    if ax <= 1.0:
        return (a + 2.0) * ax**3 - (a + 3.0) * ax**2 + 1.0
    if ax < 2.0:
        return a * (ax**3 - 5.0 * ax**2 + 8.0 * ax - 4.0)
    return 0.0


def _bicubic_matrix(n, factor):
    """(factor*n) x n interpolation matrix with the Keys a=-0.5 kernel.

    Output sample j reads input coordinate (j + 0.5)/factor - 0.5; edge taps
    are clamped (replicated).
    """
    out_n = n * factor
    m = np.zeros((out_n, n))
    for j in range(out_n):
        src = (j + 0.5) / factor - 0.5
        base = int(np.floor(src))
        t = src - base
        for off in (-1, 0, 1, 2):
            idx = min(max(base + off, 0), n - 1)
            m[j, idx] += _keys_kernel(t - off)
    return m


def bicubic_upsample(x, factor):
    """Per-band bicubic interpolation to factor-times spatial size."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise DimensionError(f"expected a 3-way tensor, got ndim={x.ndim}")
    factor = int(factor)
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return x.copy()
    b1 = _bicubic_matrix(x.shape[0], factor)
    b2 = _bicubic_matrix(x.shape[1], factor)
    return mode_n_product(mode_n_product(x, b1, 1), b2, 2)


def evaluate(ref, est, peak=None, ratio=1.0):
    """All four metrics in one report; peak defaults to the reference maximum."""
    ref, est = _check_same_shape(ref, est)
    if peak is None:
        peak = float(ref.max())
        if not peak > 0:
            raise MetricUndefinedError(
                "peak undefined: reference maximum is not positive"
            )
    return MetricReport(
        psnr=psnr(ref, est, peak),
        ergas=ergas(ref, est, ratio),
        sam=sam(ref, est),
        ssim=ssim(ref, est, peak),
    )
