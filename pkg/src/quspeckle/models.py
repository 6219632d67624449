"""Parameter types, sampling, and densities for the Nakagami and Homodyned-K models.

Parametrization note: the toolkit uses the sampling convention throughout,
    a = sqrt((eps + X*s)^2 + (Y*s)^2),  s = sigma*sqrt(Z/alpha),  Z ~ Gamma(alpha, 1),
so the mean diffuse intensity is 2*sigma^2 regardless of alpha (the Gamma
texture is normalized by its mean). Some of the HK literature instead scales
the diffuse variance by Z itself, giving diffuse power 2*sigma_lit^2*alpha;
the two conventions are related by sigma_lit^2 = sigma^2 / alpha. The density
evaluated by :func:`pdf_hk` is the density of :func:`sample_hk`'s output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import AccuracyError, ParameterDomainError
from .rng import RngState

__all__ = [
    "HKParams",
    "NakagamiParams",
    "EnvelopeField",
    "QuadSpec",
    "sample_hk",
    "sample_nakagami",
    "pdf_nakagami",
    "pdf_hk",
    "nakagami_pseudo_m",
    "nakagami_moment_m",
]


@dataclass(frozen=True)
class HKParams:
    """Homodyned-K parameters: coherent amplitude, diffuse scale, clustering.

    ``alpha`` tracks the effective scatterer number density; small values give
    heavy-tailed (under-developed) speckle, large values approach Rayleigh.
    """

    epsilon: float
    sigma: float
    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ParameterDomainError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterDomainError(f"sigma must be finite and > 0, got {self.sigma}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterDomainError(f"alpha must be finite and > 0, got {self.alpha}")

    @property
    def coherent_power(self) -> float:
        return self.epsilon**2

    @property
    def mean_intensity(self) -> float:
        """E[a^2] under the sampling convention: eps^2 + 2 sigma^2."""
        return self.epsilon**2 + 2.0 * self.sigma**2

    @property
    def coherent_to_diffuse_ratio(self) -> float:
        """k, the amplitude ratio of coherent to RMS diffuse signal: k^2 = eps^2 / (2 sigma^2)."""
        return self.epsilon / (self.sigma * math.sqrt(2.0))


@dataclass(frozen=True)
class NakagamiParams:
    """Nakagami shape ``m`` and scale ``omega`` (the mean intensity)."""

    m: float
    omega: float

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m > 0):
            raise ParameterDomainError(f"m must be finite and > 0, got {self.m}")
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ParameterDomainError(f"omega must be finite and > 0, got {self.omega}")


@dataclass(frozen=True, eq=False)
class EnvelopeField:
    """A 2-D grid of nonnegative envelope amplitudes, stored as float32.

    float32 is the on-disk payload type, so keeping fields in float32 makes
    write/read round-trips bitwise.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ParameterDomainError(f"envelope must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ParameterDomainError("envelope values must be finite and >= 0")
        v = np.ascontiguousarray(v, dtype=np.float32)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def sample_hk(params: HKParams, count: int, rng: RngState) -> np.ndarray:
    """Draw ``count`` i.i.d. Homodyned-K envelope amplitudes.

    a = sqrt((eps + X*s)^2 + (Y*s)^2) with X, Y unit normal, s = sigma*sqrt(Z/alpha),
    Z ~ Gamma(alpha, 1). Pure in (params, count, rng); draw order is X, Y, Z.
    """
    if count < 1:
        raise ParameterDomainError(f"count must be >= 1, got {count}")
    g = rng.generator()
    x = g.standard_normal(count)
    y = g.standard_normal(count)
    z = g.gamma(params.alpha, 1.0, count)
    s = params.sigma * np.sqrt(z / params.alpha)
    return np.hypot(params.epsilon + x * s, y * s)


def sample_nakagami(params: NakagamiParams, count: int, rng: RngState) -> np.ndarray:
    """Draw ``count`` i.i.d. Nakagami amplitudes (sqrt of Gamma(m, omega/m) intensity)."""
    if count < 1:
        raise ParameterDomainError(f"count must be >= 1, got {count}")
    g = rng.generator()
    return np.sqrt(g.gamma(params.m, params.omega / params.m, count))


def pdf_nakagami(params: NakagamiParams, x) -> np.ndarray | float:
    """Nakagami density 2 m^m x^(2m-1) / (Gamma(m) Omega^m) * exp(-m x^2 / Omega), 0 for x < 0."""
    m, omega = params.m, params.omega
    xs = np.asarray(x, dtype=float)
    out = np.zeros_like(xs)
    pos = xs > 0
    lx = np.log(xs[pos])
    out[pos] = np.exp(
        math.log(2.0)
        + m * math.log(m)
        + (2.0 * m - 1.0) * lx
        - special.gammaln(m)
        - m * math.log(omega)
        - m * xs[pos] ** 2 / omega
    )
    if np.any(xs == 0):
        # limit at the origin: 0 for m > 1/2, finite for m = 1/2, divergent below
        at0 = math.sqrt(2.0 / (math.pi * omega)) if m == 0.5 else (0.0 if m > 0.5 else np.inf)
        out[xs == 0] = at0
    return out if np.ndim(x) else float(out)


# --- Homodyned-K density: oscillatory Hankel-type integral -------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_J0_ZEROS = special.jn_zeros(0, 8192)


@dataclass(frozen=True)
class QuadSpec:
    """Accuracy controls for :func:`pdf_hk`.

    ``weight_cutoff`` sets the plain-truncation point of the Gamma mixing
    weight; the oscillatory tail past the node budget is series-accelerated
    instead of integrated term by term.
    """

    abs_tol: float = 1e-6
    max_nodes: int = 200_000
    weight_cutoff: float = 1e-10


def _gauss_panel(f, a: float, b: float) -> float:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.sum(_GL_WEIGHTS * f(mid + half * _GL_NODES)))


def _wynn_epsilon(partial_sums) -> float:
    """Best even-column Wynn epsilon extrapolation of a partial-sum sequence."""
    e_prev = np.zeros(len(partial_sums) + 1)
    e_curr = np.asarray(partial_sums, dtype=float)
    best = e_curr[-1]
    for k in range(1, len(partial_sums)):
        d = np.diff(e_curr)
        with np.errstate(divide="ignore", invalid="ignore"):
            e_next = e_prev[1 : len(e_curr)] + 1.0 / d
        e_prev, e_curr = e_curr, e_next
        if len(e_curr) == 0:
            break
        if k % 2 == 0 and np.isfinite(e_curr[-1]):
            best = e_curr[-1]
    return float(best)


def _pdf_hk_scalar(params: HKParams, x: float, quad: QuadSpec) -> float:
    if x < 0:
        return 0.0
    if x == 0:
        return 0.0
    eps, sigma, alpha = params.epsilon, params.sigma, params.alpha
    s2a = 0.5 * sigma * sigma / alpha  # Gamma-mixture weight scale under the sampling convention

    def integrand(u):
        return x * u * special.j0(u * eps) * special.j0(u * x) * (1.0 + s2a * u * u) ** (-alpha)

    u_cut = math.sqrt((quad.weight_cutoff ** (-1.0 / alpha) - 1.0) / s2a)
    x_osc = max(x, eps)
    zeros = _J0_ZEROS
    nodes_used = 0
    budget_panels = quad.max_nodes // len(_GL_NODES)

    def head_breakpoints(limit: float) -> np.ndarray:
        # geometric refinement on the weight scale, merged with oscillation zeros
        pts = [0.0]
        step = 0.25 * min(1.0 / math.sqrt(s2a), limit)
        while pts[-1] < limit:
            pts.append(min(pts[-1] + step, limit))
            step *= 1.6
        zs = zeros[zeros < x_osc * limit] / x_osc
        return np.unique(np.concatenate([np.asarray(pts), zs]))

    k0 = 8
    if x_osc * u_cut <= zeros[k0 - 1]:
        # the mixing weight dies before the integrand oscillates: truncate outright
        pts = head_breakpoints(u_cut)
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            total += _gauss_panel(integrand, a, b)
        return total

    u_head = zeros[k0 - 1] / x_osc
    pts = head_breakpoints(u_head)
    head = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        head += _gauss_panel(integrand, a, b)
    nodes_used += (len(pts) - 1) * len(_GL_NODES)

    # Tail: integrate between consecutive J0 zeros of the fastest factor. For
    # eps = 0 the block sums alternate; with a coherent component the product
    # of Bessel factors beats at |x - eps|, so blocks are grouped per half-beat
    # before Wynn extrapolation.
    beat = abs(x - eps) if eps > 0 else x
    group = 1 if eps == 0 else int(np.clip(round(x_osc / max(beat, x_osc / 48.0)), 1, 48))
    sums: list[float] = []
    total = 0.0
    in_group = 0
    prev_best: float | None = None
    last_block = 0.0
    residual = math.inf
    k = k0
    while nodes_used < quad.max_nodes and k < len(zeros) - 1:
        a = zeros[k - 1] / x_osc
        b = zeros[k] / x_osc
        last_block = _gauss_panel(integrand, a, b)
        nodes_used += len(_GL_NODES)
        total += last_block
        in_group += 1
        k += 1
        if b >= u_cut and abs(last_block) * group < 0.25 * quad.abs_tol:
            return head + total
        if in_group == group:
            sums.append(total)
            in_group = 0
            if len(sums) >= 8 and len(sums) % 2 == 0:
                best = _wynn_epsilon(sums[-40:])
                if prev_best is not None and math.isfinite(best):
                    residual = abs(best - prev_best)
                    if residual < 0.25 * quad.abs_tol:
                        return head + best
                prev_best = best
    if not math.isfinite(residual):
        residual = abs(last_block)
    raise AccuracyError(
        f"pdf_hk did not converge within {quad.max_nodes} nodes "
        f"(eps={eps}, sigma={sigma}, alpha={alpha}, x={x})",
        residual=residual,
    )


def pdf_hk(params: HKParams, x, quad: QuadSpec = QuadSpec()) -> np.ndarray | float:
    """Homodyned-K envelope density at ``x``.

    Evaluates x * int_0^inf u J0(u eps) J0(u x) (1 + u^2 sigma^2 / (2 alpha))^(-alpha) du
    by panelwise Gauss-Legendre quadrature with Wynn-epsilon acceleration of
    the oscillatory tail. Raises :class:`AccuracyError` carrying a residual
    estimate when the node budget is exhausted first (this can happen for
    alpha <= 0.5 with a coherent component at x close to eps, where the
    density is near-singular).
    """
    if np.ndim(x) == 0:
        return _pdf_hk_scalar(params, float(x), quad)
    return np.array([_pdf_hk_scalar(params, float(v), quad) for v in np.asarray(x).ravel()]).reshape(
        np.shape(x)
    )


# --- Nakagami shape implied by a clustering parameter -------------------------

M_BRACKET = (1e-3, 1e3)  # search bracket for the Nakagami shape root


def solve_m_from_log_moment_gap(gap) -> np.ndarray | float:
    """Solve log(m) - digamma(m) = gap for m, elementwise.

    The left side decreases monotonically from +inf to 0 on m in (0, inf), so
    the root is unique for gap > 0. Newton iteration from the
    Greenwood-Durand starting point, safeguarded by bisection within
    [1e-3, 1e3]; values of ``gap`` outside the bracket's range saturate.
    """
    s = np.asarray(gap, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise ParameterDomainError("log-moment gap must be finite and > 0")
    lo = np.full(s.shape, M_BRACKET[0])
    hi = np.full(s.shape, M_BRACKET[1])
    f_lo = np.log(lo) - special.digamma(lo) - s
    f_hi = np.log(hi) - special.digamma(hi) - s
    m = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    m = np.clip(m, lo, hi)
    below = f_lo <= 0  # root saturates at the lower bracket edge
    above = f_hi >= 0
    for _ in range(100):
        fm = np.log(m) - special.digamma(m) - s
        lo = np.where(fm > 0, m, lo)
        hi = np.where(fm > 0, hi, m)
        if np.all(np.abs(fm) < 1e-12):
            break
        step = fm / (1.0 / m - special.polygamma(1, m))
        nxt = m - step
        bad = (nxt <= lo) | (nxt >= hi) | ~np.isfinite(nxt)
        nxt = np.where(bad, 0.5 * (lo + hi), nxt)
        m = np.where(np.abs(fm) < 1e-14, m, nxt)
    m = np.where(below, M_BRACKET[0], np.where(above, M_BRACKET[1], m))
    return m if np.ndim(gap) else float(m)


def nakagami_pseudo_m(alpha) -> np.ndarray | float:
    """Population Nakagami shape for K-distributed (eps = 0) data with clustering ``alpha``.

    This is the fixed point the Nakagami MLE converges to on infinite data:
    the m solving log(m) - digamma(m) = log(alpha) - digamma(alpha) + euler_gamma.
    Used as the ground-truth m map for synthesized fields.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a <= 0):
        raise ParameterDomainError("alpha must be finite and > 0")
    gap = np.log(a) - special.digamma(a) + np.euler_gamma
    m = solve_m_from_log_moment_gap(gap)
    return m if np.ndim(alpha) else float(m)


def nakagami_moment_m(alpha) -> np.ndarray | float:
    """Moment-matched alternative ground-truth mapping: m = alpha / (alpha + 2)."""
    a = np.asarray(alpha, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a <= 0):
        raise ParameterDomainError("alpha must be finite and > 0")
    out = a / (a + 2.0)
    return out if np.ndim(alpha) else float(out)
