"""Independent reference implementations used to check the library.

Nothing here is imported by the package; each oracle takes a different route
to a quantity the library computes (closed forms, generic quadrature of a
mixture representation), so agreement is evidence rather than tautology.
"""

import numpy as np
from scipy import special
from scipy.integrate import quad


def pdf_k_closed_form(x, sigma: float, alpha: float):
    """K-distribution amplitude density (eps = 0 Homodyned-K) in closed form.

    Derived by integrating the Rayleigh-given-texture mixture: with
    c = alpha x^2 / (2 sigma^2),
    pdf(x) = 2 alpha x / (sigma^2 Gamma(alpha)) * c^((alpha-1)/2) * K_{alpha-1}(2 sqrt(c)).
    """
    x = np.asarray(x, dtype=float)
    c = x * np.sqrt(2.0 * alpha) / sigma
    return (
        (2.0 * alpha * x / (sigma**2 * special.gamma(alpha)))
        * (alpha * x**2 / (2.0 * sigma**2)) ** ((alpha - 1.0) / 2.0)
        * special.kv(alpha - 1.0, c)
    )


def pdf_k_gamma_mixture(x: float, sigma: float, alpha: float) -> float:
    """Same density by direct quadrature over the Gamma texture (no Bessel K)."""

    def integrand(z):
        if z <= 0:
            return 0.0
        lg = (
            np.log(x * alpha / (sigma**2 * z))
            - alpha * x**2 / (2.0 * sigma**2 * z)
            + (alpha - 1.0) * np.log(z)
            - z
            - special.gammaln(alpha)
        )
        return np.exp(lg)

    value, _ = quad(integrand, 0.0, np.inf, limit=200)
    return value


def pdf_hk_rice_mixture(x: float, eps: float, sigma: float, alpha: float) -> float:
    """General HK density as a Rice-given-texture mixture, by quadrature."""

    def integrand(z):
        if z <= 0:
            return 0.0
        s2 = sigma * sigma * z / alpha
        t = x * eps / s2
        lg = (
            np.log(x / s2)
            - (x * x + eps * eps) / (2.0 * s2)
            + np.log(special.i0e(t))
            + t
            + (alpha - 1.0) * np.log(z)
            - z
            - special.gammaln(alpha)
        )
        return np.exp(lg)

    value, _ = quad(integrand, 0.0, np.inf, limit=400)
    return value


def pdf_rayleigh(x, omega: float):
    """Rayleigh amplitude density with mean intensity omega."""
    x = np.asarray(x, dtype=float)
    return 2.0 * x / omega * np.exp(-(x**2) / omega)


def cdf_nakagami(x, m: float, omega: float):
    """Nakagami CDF via the regularized lower incomplete gamma function."""
    x = np.asarray(x, dtype=float)
    return special.gammainc(m, m * x**2 / omega)
