"""Bucket the permuted, windowed signal into B frequency bins.

The bin vector is the permuted spectrum seen through the flat window,
subsampled at the B bucket centers:

    u[j] ~= sum_{h(i)=j} (xhat - zhat)[i] * response(-o(i)) * exp(-2j*pi*sigma*a*i/n)

up to ``delta * l1(xhat)`` per bin.  Subsampling the spectrum of the windowed
product at stride n/B equals aliasing the time-domain product into B samples
and taking a B-point transform, which is what keeps the whole call at
O(|supp(G)| + B log B) instead of an n-point transform.  Under the unitary
signal convention the correct bin scale comes from the *unnormalized*
B-point FFT of the folded product; that factor is pinned by an oracle
calibration test at n=64.

The running estimate zhat is subtracted exactly: each support coordinate of
zhat contributes to at most one bin, since the idealized response vanishes at
and beyond half a bucket width.
"""

from __future__ import annotations

import numpy as np

from .core import Signal, SparseSpectrum, fft_raw
from .filters import FilterPair
from .permutation import PermutationParams, permute_time_many

__all__ = ["hash_to_bins"]


def hash_to_bins(
    x: Signal,
    z: SparseSpectrum | None,
    p: PermutationParams,
    fp: FilterPair,
) -> np.ndarray:
    """Return the length-B complex bin vector for one (sigma, a, b) draw.

    Reads at most ``fp.support_size`` distinct (counted) samples of ``x``.
    """
    n = x.n
    if fp.n != n:
        raise ValueError(f"filter built for n={fp.n}, signal has n={n}")
    if p.n != n:
        raise ValueError(f"permutation built for n={p.n}, signal has n={n}")
    if z is not None and z.n != n:
        raise ValueError(f"estimate has n={z.n}, signal has n={n}")
    B = fp.buckets
    if n % B != 0:
        raise ValueError(f"bucket count {B} must divide n={n}")

    t_abs = fp.offsets % n
    y = fp.taps * permute_time_many(x, p, t_abs)

    folded = t_abs % B
    u = np.bincount(folded, weights=y.real, minlength=B) + 1j * np.bincount(
        folded, weights=y.imag, minlength=B
    )
    u_hat = fft_raw(u, inverse=False)

    if z is not None and len(z) > 0:
        support = z.support
        coeffs = np.array([z.get(int(s)) for s in support], dtype=np.complex128)
        w = n // B
        pf = (p.sigma * (support - p.b)) % n
        h_raw = (2 * pf + w) // (2 * w)
        offs = pf - h_raw * w
        sa = (p.sigma * p.a) % n
        phase = np.exp((-2j * np.pi / n) * ((sa * support) % n))
        contrib = coeffs * fp.response(offs) * phase
        j = h_raw % B
        u_hat -= np.bincount(j, weights=contrib.real, minlength=B) + 1j * np.bincount(
            j, weights=contrib.imag, minlength=B
        )
    return u_hat
