"""Gradient tensors, correlated TV regularizers, and their numerical property checks.

``nms_tctv`` is the regularizer the solver minimizes: for each spatial mode n
it measures the mode-(3-n) non-convex pseudo nuclear norm of the mode-n
gradient tensor, so low-rankness and smoothness are encoded jointly and
cross-mode ("mode-shuffled").
"""

from dataclasses import dataclass

import numpy as np

from .tensor import (
    atv_norm,
    diff_matrix,
    mode_n_product,
    mode_shuffle,
    tv_norm,
)
from .tsvd import _fourier_singular_values, mode_ntpnn, tnn


def gradient_tensor(a, n):
    """First-order difference of a along mode n: a x_n D_{I_n}."""
    a = np.asarray(a)
    return mode_n_product(a, diff_matrix(a.shape[n - 1]), n)


def tctv(a, modes=(1, 2)):
    """Correlated TV: mean of TNNs of the mode-n gradient tensors, n in modes."""
    modes = tuple(modes)
    if not modes:
        raise ValueError("tctv needs at least one mode")
    if any(n not in (1, 2, 3) for n in modes):
        raise ValueError(f"modes must be a subset of {{1,2,3}}, got {modes}")
    return float(np.mean([tnn(gradient_tensor(a, n)) for n in modes]))


def nms_tctv(a, psi):
    """Mode-shuffled non-convex correlated TV.

    Averages, over the two spatial modes, the mode-(3-n) NTPNN of the mode-n
    gradient tensor (mode-2 norm on the mode-1 gradient and vice versa).
    """
    return 0.5 * (
        mode_ntpnn(gradient_tensor(a, 1), 2, psi)
        + mode_ntpnn(gradient_tensor(a, 2), 1, psi)
    )


def tsvd_rank(t, rel_tol=1e-8):
    """Numerical t-SVD rank: max over Fourier slices of singular values above
    rel_tol times the global maximum."""
    sv = _fourier_singular_values(np.asarray(t, dtype=float))
    smax = sv.max() if sv.size else 0.0
    if smax == 0.0:
        return 0
    return int((sv > rel_tol * smax).sum(axis=1).max())


def mode_tsvd_rank(t, n, rel_tol=1e-8):
    """t-SVD rank after rotating mode n into the tube position."""
    return tsvd_rank(mode_shuffle(t, n), rel_tol)


@dataclass(frozen=True)
class RankSandwichReport:
    """Whether rank(z) - 1 <= rank(gradient) <= rank(z) held (mode-(3-n) ranks)."""

    mode: int
    rank_z: int
    rank_grad: int

    @property
    def holds(self):
        return self.rank_z - 1 <= self.rank_grad <= self.rank_z


def check_rank_sandwich(z, s, n, tol=1e-8):
    """Verify the gradient-rank sandwich for z = a x_3 s with semi-unitary s.

    The spatial tensor is recovered as a = z x_3 s^T, which is exact on the
    stated precondition. Ranks use the numerical threshold tol * sigma_max.
    """
    s = np.asarray(s, dtype=float)
    gram_residual = np.linalg.norm(s.T @ s - np.eye(s.shape[1]))
    if gram_residual > tol:
        raise ValueError(
            f"spectral basis is not semi-unitary: |S^T S - I|_F = {gram_residual:.3e} "
            f"exceeds tol {tol:g}"
        )
    if n not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {n}")
    a = mode_n_product(np.asarray(z, dtype=float), s.T, 3)
    grad = gradient_tensor(a, n)
    return RankSandwichReport(
        mode=n,
        rank_z=mode_tsvd_rank(z, 3 - n, tol),
        rank_grad=mode_tsvd_rank(grad, 3 - n, tol),
    )


@dataclass(frozen=True)
class TvSandwichReport:
    """Empirical sandwich of nms_tctv between scaled TV and ATV norms.

    Constants: b = psi(x_max)/x_max with x_max the largest observed Fourier
    singular value, g = psi'(0+), i_max = max(I1, I2), and
    m_star = max_n min(I_n, R) for the upper-bound rank factor (the larger of
    the two per-mode candidates; reported here because the bound's rank factor
    is mode-dependent).
    """

    nms: float
    tv: float
    atv: float
    b: float
    g: float
    i_max: int
    m_star: int
    tv_lower_ok: bool
    tv_upper_ok: bool
    atv_lower_ok: bool
    atv_upper_ok: bool

    @property
    def holds(self):
        return (
            self.tv_lower_ok
            and self.tv_upper_ok
            and self.atv_lower_ok
            and self.atv_upper_ok
        )


def check_tv_sandwich(a, psi, rel_slack=1e-10):
    """Check that nms_tctv is sandwiched by TV and ATV norms with the
    boundedness/limit-slope constants; returns a report with both chains."""
    a = np.asarray(a, dtype=float)
    i1, i2, r = a.shape
    sv1 = _fourier_singular_values(mode_shuffle(gradient_tensor(a, 1), 2))
    sv2 = _fourier_singular_values(mode_shuffle(gradient_tensor(a, 2), 1))
    nms = 0.5 * float(
        psi.value(sv1).sum() / i2 + psi.value(sv2).sum() / i1
    )
    tv = tv_norm(a)
    atv = atv_norm(a)
    x_max = max(sv1.max(initial=0.0), sv2.max(initial=0.0))
    g = float(psi.deriv_at_zero)
    i_max = max(i1, i2)
    m_star = max(min(i1, r), min(i2, r))
    if x_max == 0.0:
        # zero gradients: every side is zero and the chains hold trivially
        return TvSandwichReport(nms, tv, atv, 0.0, g, i_max, m_star,
                                True, True, True, True)
    b = float(psi.value(x_max) / x_max)
    slack = rel_slack * (1.0 + nms + tv + atv)
    return TvSandwichReport(
        nms=nms,
        tv=tv,
        atv=atv,
        b=b,
        g=g,
        i_max=i_max,
        m_star=m_star,
        tv_lower_ok=nms >= b / (2.0 * np.sqrt(i_max)) * tv - slack,
        tv_upper_ok=nms <= g * np.sqrt(2.0 * m_star) * tv + slack,
        atv_lower_ok=nms >= b / (2.0 * np.sqrt(i_max * i1 * i2 * r)) * atv - slack,
        atv_upper_ok=nms <= g * np.sqrt(m_star) * atv + slack,
    )
