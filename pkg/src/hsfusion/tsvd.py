"""t-product algebra: t-SVD, tensor nuclear norms, non-convex variants, prox operators.

Everything here works slice-wise in the mode-3 Fourier domain. For real input
only the first floor(I3/2)+1 Fourier slices are factorized; the remaining ones
are filled in by conjugate symmetry, which keeps the assembled factors exactly
real (up to inverse-FFT rounding) and halves the SVD work. Fourier slices 0
and Nyquist of a real tensor are real matrices and are factorized with the
real-path SVD.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FactorizationError
from .tensor import fft_mode3, ifft_mode3, mode_shuffle, real_part


@dataclass(frozen=True)
class LogSurrogate:
    """Concave singular-value penalty log(gamma*x + 1)/log(gamma + 1).

    Normalized so value(0) = 0 and value(1) = 1. The derivative is convex,
    nonincreasing, and finite at 0+ (gamma/log(gamma+1)).
    """

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"surrogate gamma must be positive, got {self.gamma}")

    def value(self, x):
        return np.log1p(self.gamma * np.asarray(x)) / np.log1p(self.gamma)

    def deriv(self, x):
        return self.gamma / ((self.gamma * np.asarray(x) + 1.0) * np.log1p(self.gamma))

    @property
    def deriv_at_zero(self):
        return self.gamma / np.log1p(self.gamma)


@dataclass(frozen=True)
class TSvdFactors:
    """Orthogonal u (I1,I1,I3), f-diagonal s (I1,I2,I3), orthogonal v (I2,I2,I3)."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def identity_tensor(n, tubes):
    """n x n x tubes tensor whose first frontal slice is I_n, the rest zero."""
    t = np.zeros((n, n, tubes))
    t[:, :, 0] = np.eye(n)
    return t


def t_transpose(a):
    """Tensor (conjugate) transpose: slice 0 transposed, slices 1..I3-1 reversed."""
    a = np.asarray(a)
    b = np.concatenate([a[:, :, :1], a[:, :, :0:-1]], axis=2)
    b = np.swapaxes(b, 0, 1)
    return np.ascontiguousarray(np.conj(b))


def t_product(a, b):
    """t-product of (I1,K,I3) and (K,I2,I3): slice-wise products in Fourier domain."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 3 or b.ndim != 3:
        raise ValueError("t_product expects two 3-way tensors")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions disagree: {a.shape} vs {b.shape}")
    if a.shape[2] != b.shape[2]:
        raise DimensionError(f"tube lengths disagree: {a.shape[2]} vs {b.shape[2]}")
    ch = np.einsum("ikf,kjf->ijf", fft_mode3(a), fft_mode3(b))
    c = ifft_mode3(ch)
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return c
    return real_part(c)


def _fourier_slice_pairs(n_tubes):
    """Indices (f, mirror) covering the spectrum of a real signal once."""
    half = n_tubes // 2
    for f in range(half + 1):
        yield f, (n_tubes - f) % n_tubes


def t_svd(t):
    """t-SVD of a real 3-way tensor: t = u * s * v^T with orthogonal u, v.

    Per-Fourier-slice SVDs, conjugate-mirrored so the inverse transform is
    exactly real. Singular values within each slice come out nonnegative and
    nonincreasing.
    """
    t = np.asarray(t, dtype=float)
    i1, i2, i3 = t.shape
    th = fft_mode3(t)
    uh = np.zeros((i1, i1, i3), dtype=complex)
    sh = np.zeros((i1, i2, i3), dtype=complex)
    vh = np.zeros((i2, i2, i3), dtype=complex)
    k = min(i1, i2)
    diag = np.arange(k)
    for f, m in _fourier_slice_pairs(i3):
        slab = th[:, :, f]
        if f == m or f == 0:
            slab = slab.real  # bins 0 and Nyquist of a real signal are real
        try:
            u, s, vt = np.linalg.svd(slab, full_matrices=True)
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(f"SVD failed on Fourier slice {f}: {exc}") from exc
        uh[:, :, f] = u
        sh[diag, diag, f] = s
        vh[:, :, f] = vt.conj().T
        if m != f:
            uh[:, :, m] = u.conj()
            sh[diag, diag, m] = s
            vh[:, :, m] = vh[:, :, f].conj()
    return TSvdFactors(
        u=real_part(ifft_mode3(uh)),
        s=real_part(ifft_mode3(sh)),
        v=real_part(ifft_mode3(vh)),
    )


def _fourier_singular_values(t):
    """Singular values of every Fourier slice, shape (I3, min(I1, I2))."""
    th = np.moveaxis(fft_mode3(t), 2, 0)
    try:
        return np.linalg.svd(th, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"batched Fourier-slice SVD failed: {exc}") from exc


def tnn(t):
    """Tensor nuclear norm: mean over Fourier slices of matrix nuclear norms."""
    t = np.asarray(t, dtype=float)
    return float(_fourier_singular_values(t).sum() / t.shape[2])


def ntpnn(t, psi):
    """Non-convex tensor pseudo nuclear norm: TNN with psi applied valuewise."""
    t = np.asarray(t, dtype=float)
    return float(psi.value(_fourier_singular_values(t)).sum() / t.shape[2])


def mode_ntpnn(t, n, psi):
    """NTPNN evaluated after rotating mode n into the tube position."""
    return ntpnn(mode_shuffle(t, n), psi)


def prox_singular_values(sig, rho, psi):
    """Elementwise global minimizer of psi(x) + rho*(x - sig)^2 over x >= 0.

    For the log surrogate the stationary points solve
    2*rho*gamma*x^2 + 2*rho*(1 - gamma*sig)*x + (gamma/log(gamma+1) - 2*rho*sig) = 0;
    the returned value is the best of the nonnegative real roots and 0.
    """
    sig = np.asarray(sig, dtype=float)
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    g = psi.gamma
    a = 2.0 * rho * g
    b = 2.0 * rho * (1.0 - g * sig)
    c = psi.deriv_at_zero - 2.0 * rho * sig
    disc = b * b - 4.0 * a * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    ok = disc >= 0
    r_hi = np.where(ok, np.maximum((-b + sq) / (2.0 * a), 0.0), 0.0)
    r_lo = np.where(ok, np.maximum((-b - sq) / (2.0 * a), 0.0), 0.0)

    def objective(x):
        return psi.value(x) + rho * (x - sig) ** 2

    best_x = np.zeros_like(sig)
    best_f = rho * sig**2  # objective at x = 0
    for cand in (r_lo, r_hi):
        f = objective(cand)
        take = f < best_f
        best_x = np.where(take, cand, best_x)
        best_f = np.where(take, f, best_f)
    return best_x


def scalar_prox(s, rho, psi):
    """Scalar form of :func:`prox_singular_values`."""
    if s < 0:
        raise ValueError(f"prox input must be nonnegative, got {s}")
    return float(prox_singular_values(np.asarray([s], dtype=float), rho, psi)[0])


def ntpnn_prox(c, rho, psi):
    """Minimizer of ntpnn(g, psi) + rho*|g - c|_F^2 over real tensors g.

    Computes the t-SVD of c slice-wise, shrinks each Fourier-domain singular
    value with the scalar prox, and reassembles. Any mode shuffling is the
    caller's responsibility.
    """
    c = np.asarray(c, dtype=float)
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    ch = fft_mode3(c)
    out = np.zeros_like(ch)
    for f, m in _fourier_slice_pairs(c.shape[2]):
        slab = ch[:, :, f]
        if f == m or f == 0:
            slab = slab.real
        try:
            u, s, vt = np.linalg.svd(slab, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(f"SVD failed on Fourier slice {f}: {exc}") from exc
        shrunk = prox_singular_values(s, rho, psi)
        out[:, :, f] = (u * shrunk) @ vt
        if m != f:
            out[:, :, m] = out[:, :, f].conj()
    return real_part(ifft_mode3(out))
