r"""Independent verification layer: Monte Carlo matrix sampling and
low-dimensional quadrature oracles for the characteristic-polynomial-average
identities

$$ P(x) = \langle \det(x - X) \rangle, \qquad
   Q(x) = \mathrm{Res}_{z=x} \langle \det(z - X)^{-1} \rangle, \qquad
   K_N(x,y) = \frac{1}{x-y}\,\mathrm{Res}_{z=y}
              \Big\langle \frac{\det(x - X)}{\det(z - X)} \Big\rangle. $$

Sampling is exact for the Gaussian potential only (completion of the
square, ``X = A/2 + G``); every identity under test is potential-agnostic,
so Gaussian suffices.  Residues are taken in the Sokhotski–Plemelj form
$(1/\pi)\,\mathrm{Im}\,F(x - i\varepsilon)$ over a decreasing
$\varepsilon$-schedule and extrapolated to $\varepsilon \to 0$.

Determinism contract: every sample's normal variates come from a
counter-based stream keyed by ``(seed, sample_index)``, and all reductions
run in fixed sample order, so results are bitwise identical for any worker
count.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.special import ndtri

from .chgue import ChgueParams, chgue_kernel, w_alpha
from .ensembles import (
    HalfLine,
    Segment,
    op_from_weight,
)
from .errors import CapacityError, DomainError, NumericWarning, UnsupportedModelError
from .numerics import gauss_laguerre, gauss_legendre

__all__ = [
    "AvgEstimate",
    "SourceModel",
    "sample_matrix",
    "sample_spectra",
    "avg_charpoly",
    "avg_inv_charpoly",
    "residue_extract",
    "RatioOracle",
    "kernel_from_ratio",
    "Rho1Report",
    "rho1_check",
]

DEFAULT_EPS_SCHEDULE = (1e-2, 5e-3, 2.5e-3)
_CHUNK = 65536


@dataclass(frozen=True)
class AvgEstimate:
    """Monte Carlo (or oracle) estimate: value, standard error of the mean,
    sample count, and the seed that reproduces it bitwise."""

    value: float | complex
    std_error: float
    samples: int
    seed: int


@dataclass(frozen=True)
class SourceModel:
    """Matrix model with an external source.

    ``kind`` is ``"hermitian"`` (N x N, density ~ e^{-tr X^2 + tr A X};
    ``a`` holds the diagonal of A, WLOG by unitary invariance) or
    ``"chiral"`` ((N+alpha) x N complex, density ~
    e^{-tr X^dag X + Re tr X A^dag}; ``a`` holds the squared-singular-value
    parameters a_i = t_i^2/4, and alpha must be a nonnegative integer so the
    matrix dimensions exist).
    """

    kind: str
    n: int
    a: tuple[float, ...]
    alpha: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if self.kind not in ("hermitian", "chiral"):
            raise UnsupportedModelError(
                f"kind must be 'hermitian' or 'chiral', got {self.kind!r} "
                f"(only the Gaussian potential is exactly samplable)"
            )
        if self.n < 1:
            raise DomainError(f"SourceModel requires n >= 1, got {self.n}")
        if len(self.a) != self.n:
            raise DomainError(f"need {self.n} source parameters, got {len(self.a)}")
        if self.kind == "chiral":
            if any(v < 0 for v in self.a):
                raise DomainError(f"chiral source parameters must be >= 0, got {self.a}")
            if self.alpha < 0 or int(self.alpha) != self.alpha:
                raise DomainError(
                    f"chiral sampling needs integer alpha = M - N >= 0, got {self.alpha}"
                )

    @property
    def stride(self) -> int:
        """Number of standard normals consumed per sample."""
        if self.kind == "hermitian":
            return self.n * self.n
        return 2 * (self.n + int(self.alpha)) * self.n


def _normals(seed: int, start: int, count: int, stride: int) -> NDArray[np.float64]:
    """(count, stride) standard normals from per-sample Philox counter
    blocks: sample ``i`` owns 128-bit blocks [i*bps, (i+1)*bps) of the
    keyed stream, so any chunking/worker split sees identical variates."""
    bps = (stride + 3) // 4  # 4 uint64 outputs per 128-bit Philox block
    bg = np.random.Philox(key=seed, counter=[start * bps, 0, 0, 0])
    raw = bg.random_raw(count * bps * 4).reshape(count, bps * 4)[:, :stride]
    uniforms = (raw >> np.uint64(11)) * (2.0**-53) + 2.0**-54
    return ndtri(uniforms)


def _spectra_chunk(m: SourceModel, seed: int, start: int, count: int) -> NDArray[np.float64]:
    z = _normals(seed, start, count, m.stride)
    n = m.n
    if m.kind == "hermitian":
        # H with density ~ e^{-tr H^2}: diag N(0, 1/2), offdiag Re/Im N(0, 1/4)
        h = np.zeros((count, n, n), dtype=complex)
        idx = np.arange(n)
        pos = 0
        h[:, idx, idx] = z[:, :n] * math.sqrt(0.5)
        pos = n
        iu, ju = np.triu_indices(n, k=1)
        noff = iu.size
        re = z[:, pos : pos + noff] * 0.5
        im = z[:, pos + noff : pos + 2 * noff] * 0.5
        h[:, iu, ju] = re + 1j * im
        h[:, ju, iu] = re - 1j * im
        h[:, idx, idx] += np.asarray(m.a) / 2.0
        return np.linalg.eigvalsh(h)
    big_m = n + int(m.alpha)
    g = z.reshape(count, 2, big_m, n)
    x = (g[:, 0] + 1j * g[:, 1]) * math.sqrt(0.5)
    x[:, np.arange(n), np.arange(n)] += np.sqrt(np.asarray(m.a))
    xtx = np.einsum("sji,sjk->sik", x.conj(), x)
    return np.linalg.eigvalsh(xtx)


def sample_matrix(m: SourceModel, seed: int, index: int = 0) -> NDArray[np.float64]:
    """One spectrum draw (ascending): eigenvalues of ``A/2 + H`` in the
    Hermitian case, eigenvalues of ``X^dag X`` with ``X = A/2 + G`` in the
    chiral case.  ``index`` selects the sample's position in the stream."""
    return _spectra_chunk(m, seed, index, 1)[0]


def sample_spectra(
    m: SourceModel, seed: int, count: int, start: int = 0, workers: int = 1
) -> NDArray[np.float64]:
    """(count, n) array of spectra.  Chunk boundaries are fixed (64k samples)
    independently of ``workers``, and each chunk lands at its own offset, so
    the result is bitwise identical for any worker count."""
    out = np.empty((count, m.n))
    chunks = [
        (start + lo, min(_CHUNK, count - lo)) for lo in range(0, count, _CHUNK)
    ]
    if workers <= 1 or len(chunks) == 1:
        for i, (lo, c) in enumerate(chunks):
            out[lo - start : lo - start + c] = _spectra_chunk(m, seed, lo, c)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_spectra_chunk, m, seed, lo, c) for lo, c in chunks]
        for (lo, c), fut in zip(chunks, futures):
            out[lo - start : lo - start + c] = fut.result()
    return out


def _mc_estimate(values: NDArray, samples: int, seed: int) -> AvgEstimate:
    mean = values.mean()
    if np.iscomplexobj(values):
        var = np.var(values.real) + np.var(values.imag)
        return AvgEstimate(complex(mean), math.sqrt(var / samples), samples, seed)
    return AvgEstimate(float(mean), float(values.std() / math.sqrt(samples)), samples, seed)


def avg_charpoly(
    m: SourceModel, x: float, samples: int, seed: int, workers: int = 1
) -> AvgEstimate:
    r"""$\langle \prod_i (x - \lambda_i) \rangle$ by Monte Carlo."""
    lam = sample_spectra(m, seed, samples, workers=workers)
    return _mc_estimate(np.prod(x - lam, axis=1), samples, seed)


def avg_inv_charpoly(
    m: SourceModel, z: complex, samples: int, seed: int, workers: int = 1
) -> AvgEstimate:
    r"""$\langle \prod_i (z - \lambda_i)^{-1} \rangle$ for $z$ off the real
    axis (on-axis the integrand is singular on the spectrum's support)."""
    if z.imag == 0:
        raise DomainError("avg_inv_charpoly requires Im z != 0")
    lam = sample_spectra(m, seed, samples, workers=workers)
    return _mc_estimate(np.prod(1.0 / (z - lam), axis=1), samples, seed)


def residue_extract(
    f: Callable,
    x: float,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    assume_order: int | None = None,
) -> float:
    r"""Sokhotski–Plemelj residue: evaluates $(1/\pi)\,\mathrm{Im}\,
    f(x - i\varepsilon)$ on the schedule and extrapolates to
    $\varepsilon \to 0$.

    By default the extrapolation fits a polynomial in $\varepsilon$ through
    all schedule points (the smoothing error of the Poisson kernel has a
    genuine linear term, so a pure even-order Richardson step stalls);
    ``assume_order=k`` instead performs Richardson steps assuming an
    $O(\varepsilon^k)$ error.  Non-monotone convergence across the schedule
    attaches a :class:`NumericWarning`."""
    eps = np.asarray(sorted(eps_schedule, reverse=True), dtype=float)
    if eps.size < 1 or np.any(eps <= 0):
        raise DomainError("eps_schedule must contain positive values")
    vals = np.array([(f(complex(x, -e))).imag / math.pi for e in eps])
    if eps.size == 1:
        return float(vals[0])
    diffs = np.abs(np.diff(vals))
    if np.any(np.diff(diffs) > 0):
        warnings.warn(
            f"residue_extract at x={x}: non-monotone convergence across the "
            f"eps schedule (values {vals.tolist()}); result may be unreliable",
            NumericWarning,
            stacklevel=2,
        )
    if assume_order is None:
        # exact polynomial through all (eps, value) points, evaluated at 0
        coeffs = np.polynomial.polynomial.polyfit(eps, vals, deg=eps.size - 1)
        return float(coeffs[0])
    # single Richardson step eliminating the assumed-order term, using the
    # two smallest eps of the schedule: F(eps) ~ L + c eps^k
    k = assume_order
    e1, e2 = eps[-2], eps[-1]
    v1, v2 = vals[-2], vals[-1]
    return float((v2 * e1**k - v1 * e2**k) / (e1**k - e2**k))


# ---------------------------------------------------------------------------
# quadrature oracle
# ---------------------------------------------------------------------------

def _pole_resolving_nodes(
    interval, y: float, eps_min: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Composite Gauss-Legendre rule whose panels grade dyadically into the
    near-pole point y (down to width ~eps_min/4), so integrands with an
    off-axis pole at y - i*eps stay resolved for every eps in the schedule."""
    if isinstance(interval, HalfLine):
        lo, hi = 0.0, 45.0
    else:
        lo, hi = interval.a, interval.b
    if not lo < y < hi:
        raise DomainError(f"pole location {y} outside the integration window ({lo}, {hi})")
    w0 = 1.0
    j_max = max(1, math.ceil(math.log2(w0 / (eps_min / 4.0))))
    cuts = [y - w0]
    for j in range(j_max):
        cuts.append(y - w0 * 2.0 ** -(j + 1))
    cuts.append(y)
    for j in range(j_max, 0, -1):
        cuts.append(y + w0 * 2.0 ** -j)
    cuts.append(y + w0)
    cuts = [min(max(c, lo), hi) for c in cuts]
    panels: list[tuple[float, float, int]] = []
    # smooth backbone away from the pole
    if cuts[0] - lo > 1e-12:
        panels.append((lo, cuts[0], 24))
    for a, b in zip(cuts, cuts[1:]):
        if b - a > 1e-14:
            panels.append((a, b, 8))
    right = cuts[-1]
    if isinstance(interval, HalfLine):
        for b in (right + 5.0, 20.0, 45.0):
            if b - right > 1e-12:
                panels.append((right, min(b, hi), 24))
                right = min(b, hi)
    elif hi - right > 1e-12:
        panels.append((right, hi, 24))
    nodes, weights = [], []
    for a, b, k in panels:
        r = gauss_legendre(k, a, b)
        nodes.append(r.nodes)
        weights.append(r.weights)
    return np.concatenate(nodes), np.concatenate(weights)


class RatioOracle:
    r"""Tensor-quadrature evaluator of symmetric-function averages
    $\langle \prod_i g(x_i) \rangle$ over the exact joint density, on a
    composite rule resolving a pole near ``y``.

    The base tensor $B[k_1..k_N] = \prod_i w_{k_i}\cdot
    \det[\eta_i(t_{k_j})]\,\det[\xi_i(t_{k_j})]$ is precomputed once per
    ``(model, y)``; each average is then $N$ contractions with the vector
    $g(t)$, normalized by the contraction with ones.  Capacity-guarded at
    $N \le 3$ (the tensor is dense).
    """

    def __init__(self, m: SourceModel, y: float, eps_min: float = min(DEFAULT_EPS_SCHEDULE)):
        if m.n > 3:
            raise CapacityError(
                f"quadrature oracle supports N <= 3, got N = {m.n}"
            )
        self.model = m
        n = m.n
        if m.kind == "chiral":
            interval = HalfLine()
            alpha = float(m.alpha)
            xi = [w_alpha(alpha, ai) for ai in m.a]
        else:
            interval = Segment(-8.0, 8.0)
            distinct = len(set(m.a))
            if distinct == n:
                xi = [(lambda t, ai=ai: np.exp(-t * t + ai * t)) for ai in m.a]
            elif distinct == 1:
                # fully coincident source: the determinant degenerates into
                # the Vandermonde-limit basis t^i e^{-t^2 + a t}
                a0 = m.a[0]
                xi = [(lambda t, i=i: t**i * np.exp(-t * t + a0 * t)) for i in range(n)]
            else:
                raise DomainError(
                    "hermitian oracle supports fully distinct or fully "
                    f"coincident source parameters, got {m.a}"
                )
        t, w = _pole_resolving_nodes(interval, y, eps_min)
        self.nodes = t
        eta = np.vstack([t**i for i in range(n)])
        xiv = np.vstack([f(t) for f in xi])
        mm = t.size
        if n == 1:
            self.base = w * eta[0] * xiv[0]
        elif n == 2:
            det_e = eta[0][:, None] * eta[1][None, :] - eta[1][:, None] * eta[0][None, :]
            det_x = xiv[0][:, None] * xiv[1][None, :] - xiv[1][:, None] * xiv[0][None, :]
            self.base = (w[:, None] * w[None, :]) * det_e * det_x
        else:
            base = np.empty((mm, mm, mm))
            perms = [
                ((0, 1, 2), 1.0), ((1, 2, 0), 1.0), ((2, 0, 1), 1.0),
                ((0, 2, 1), -1.0), ((2, 1, 0), -1.0), ((1, 0, 2), -1.0),
            ]
            slab = 32
            for lo in range(0, mm, slab):
                hi = min(lo + slab, mm)
                de = np.zeros((hi - lo, mm, mm))
                dx = np.zeros((hi - lo, mm, mm))
                for (p0, p1, p2), s in perms:
                    de += s * (
                        eta[p0][lo:hi, None, None]
                        * eta[p1][None, :, None]
                        * eta[p2][None, None, :]
                    )
                    dx += s * (
                        xiv[p0][lo:hi, None, None]
                        * xiv[p1][None, :, None]
                        * xiv[p2][None, None, :]
                    )
                base[lo:hi] = (
                    w[lo:hi, None, None] * w[None, :, None] * w[None, None, :]
                ) * de * dx
            self.base = base
        self.norm = self._contract(np.ones(mm, dtype=float))

    def _contract(self, g: NDArray) -> float | complex:
        n = self.model.n
        b = self.base
        if n == 1:
            return np.dot(b, g)
        if np.iscomplexobj(g):
            gr, gi = g.real, g.imag
            if n == 2:
                t1 = b @ gr + 1j * (b @ gi)
                return g @ t1
            mm = g.size
            flat = b.reshape(mm * mm, mm)
            t1 = (flat @ gr + 1j * (flat @ gi)).reshape(mm, mm)
            return g @ (t1 @ g)
        if n == 2:
            return g @ (b @ g)
        mm = g.size
        t1 = (b.reshape(mm * mm, mm) @ g).reshape(mm, mm)
        return g @ (t1 @ g)

    def average(self, g: Callable) -> float | complex:
        r"""$\langle \prod_i g(x_i) \rangle$ for vectorized ``g``."""
        return self._contract(np.asarray(g(self.nodes))) / self.norm

    def ratio_average(self, x: float, z: complex) -> complex:
        r"""$\langle \det(x - X)/\det(z - X) \rangle
        = \langle \prod_i (x - \lambda_i)/(z - \lambda_i) \rangle$."""
        return self.average(lambda t: (x - t) / (z - t))


def kernel_from_ratio(
    m: SourceModel,
    x: float,
    y: float,
    mode: str = "quadrature",
    samples: int = 10**6,
    seed: int = 0,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    workers: int = 1,
) -> float:
    r"""The kernel through the ratio identity
    $K_N(x,y) = \frac{1}{x-y}\,\mathrm{Res}_{z=y}\,
    \langle \det(x-X)/\det(z-X) \rangle$, with the residue taken by
    :func:`residue_extract` over the $\varepsilon$-schedule.

    ``mode="quadrature"`` integrates the ratio against the exact joint
    density (N <= 3); ``mode="montecarlo"`` averages over sampled spectra
    (all $\varepsilon$ reuse one set of draws)."""
    if abs(x - y) < 1e-6:
        raise DomainError("kernel_from_ratio requires |x - y| >= 1e-6")
    if mode == "quadrature":
        oracle = RatioOracle(m, y, eps_min=min(eps_schedule))
        res = residue_extract(lambda z: oracle.ratio_average(x, z), y, eps_schedule)
    elif mode == "montecarlo":
        lam = sample_spectra(m, seed, samples, workers=workers)
        num = np.prod(x - lam, axis=1)

        def ratio(z: complex) -> complex:
            return complex(np.mean(num * np.prod(1.0 / (z - lam), axis=1)))

        res = residue_extract(ratio, y, eps_schedule)
    else:
        raise DomainError(f"mode must be 'quadrature' or 'montecarlo', got {mode!r}")
    return res / (x - y)


@dataclass(frozen=True)
class Rho1Report:
    """Histogram-vs-kernel comparison: bin edges, empirical density values
    (normalized to total mass N), the reference density at bin centers, and
    per-bin z-scores under the Poisson count approximation."""

    edges: NDArray[np.float64]
    density: NDArray[np.float64]
    reference: NDArray[np.float64]
    z_scores: NDArray[np.float64]

    @property
    def fraction_within(self) -> float:
        """Fraction of bins with |z| <= 3."""
        return float(np.mean(np.abs(self.z_scores) <= 3.0))


def _kernel_diagonal_reference(m: SourceModel) -> Callable:
    """rho_1(x) = K_N(x, x) for the supported reference cases."""
    if m.kind == "chiral":
        if all(v == 0 for v in m.a):
            alpha = float(m.alpha)
            sys = op_from_weight(
                lambda t: t**alpha * np.exp(-t),
                HalfLine(),
                m.n,
                quad=gauss_laguerre(64, alpha),
            )
            w = lambda t: t**alpha * np.exp(-t)
        else:
            p = ChgueParams(float(m.alpha), m.a)
            return lambda xs: np.array([chgue_kernel(p, v, v) for v in np.atleast_1d(xs)])
    else:
        if any(v != 0 for v in m.a):
            raise DomainError(
                "rho1 reference for the Hermitian model is only available at A = 0"
            )
        sys = op_from_weight(lambda t: np.exp(-t * t), Segment(-7.5, 7.5), m.n)
        w = lambda t: np.exp(-t * t)

    def rho(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        total = np.zeros_like(xs)
        for k in range(m.n):
            total += sys.eval(k, xs) ** 2 / sys.norms[k]
        return w(xs) * total

    return rho


def rho1_check(
    m: SourceModel,
    bins: int,
    samples: int,
    seed: int,
    support: tuple[float, float] | None = None,
    workers: int = 1,
) -> Rho1Report:
    """Empirical one-point density of all sampled eigenvalues against the
    kernel diagonal, with per-bin z-scores (expected counts from the
    reference curve, Poisson standard deviation — conservative for
    determinantal statistics, whose bin counts are under-dispersed)."""
    if support is None:
        support = (0.0, 12.0) if m.kind == "chiral" else (-4.0, 4.0)
    rho = _kernel_diagonal_reference(m)
    lam = sample_spectra(m, seed, samples, workers=workers).ravel()
    edges = np.linspace(support[0], support[1], bins + 1)
    counts, _ = np.histogram(lam, bins=edges)
    widths = np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    reference = rho(centers)
    expected = samples * reference * widths
    sigma = np.sqrt(np.maximum(expected, 1.0))
    z = (counts - expected) / sigma
    return Rho1Report(
        edges=edges,
        density=counts / (samples * widths),
        reference=reference,
        z_scores=z,
    )
