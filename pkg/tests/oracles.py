"""Independent reference computations used by the tests.

None of these go through the package's closed-form paths: they integrate
numerically, sample, or recompute in extended precision.
"""
from __future__ import annotations

import mpmath
import numpy as np

from ssbsl.bayes import ClassPosteriorState, GaussWishartParams


def sample_wishart(rng: np.random.Generator, nu: float, w: np.ndarray, size: int) -> np.ndarray:
    """Bartlett decomposition: Lambda = L A A' L' with W = L L'."""
    d = w.shape[0]
    chol = np.linalg.cholesky(w)
    a = np.zeros((size, d, d))
    for i in range(d):
        a[:, i, i] = np.sqrt(rng.chisquare(nu - i, size=size))
        if i:
            a[:, i, :i] = rng.standard_normal((size, i))
    la = chol @ a
    return la @ la.transpose(0, 2, 1)


def mc_predictive(
    rng: np.random.Generator, p: GaussWishartParams, x: np.ndarray, draws: int
) -> tuple[float, float]:
    """Monte-Carlo estimate (and standard error) of the marginal density of x.

    Averages N(x | mu, Lambda^-1) over (mu, Lambda) drawn from the
    Gaussian-Wishart posterior.
    """
    d = p.dim
    lam = sample_wishart(rng, p.nu, np.linalg.inv(p.w_inv), draws)
    # mu | Lambda ~ N(m, (beta Lambda)^-1): mu = m + (beta Lambda)^{-1/2} z via Cholesky of the precision
    lchol = np.linalg.cholesky(p.beta * lam)
    z = rng.standard_normal((draws, d, 1))
    # solve L' u = z  gives u with covariance (L L')^-1
    u = np.linalg.solve(lchol.transpose(0, 2, 1), z)[..., 0]
    mu = p.m + u
    diff = x - mu
    maha = np.einsum("ni,nij,nj->n", diff, lam, diff)
    _, logdet = np.linalg.slogdet(lam)
    dens = np.exp(0.5 * logdet - 0.5 * d * np.log(2 * np.pi) - 0.5 * maha)
    return float(dens.mean()), float(dens.std(ddof=1) / np.sqrt(draws))


def mc_class_posterior(
    rng: np.random.Generator, state: ClassPosteriorState, x: np.ndarray, draws: int
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo class probabilities with delta-method standard errors.

    Each class's joint term pi_c * N(x | mu_c, Lambda_c^-1) is averaged over
    independent draws of pi ~ Dir(alpha) and (mu_c, Lambda_c) from the
    class posterior; the probabilities are the normalized joint terms.
    """
    c = state.num_classes
    pis = rng.dirichlet(state.mixing.alpha, size=draws)
    terms = np.empty((draws, c))
    for k, p in enumerate(state.per_class):
        d = p.dim
        lam = sample_wishart(rng, p.nu, np.linalg.inv(p.w_inv), draws)
        lchol = np.linalg.cholesky(p.beta * lam)
        u = np.linalg.solve(lchol.transpose(0, 2, 1), rng.standard_normal((draws, d, 1)))[..., 0]
        diff = x - (p.m + u)
        maha = np.einsum("ni,nij,nj->n", diff, lam, diff)
        _, logdet = np.linalg.slogdet(lam)
        terms[:, k] = pis[:, k] * np.exp(0.5 * logdet - 0.5 * d * np.log(2 * np.pi) - 0.5 * maha)
    joint = terms.mean(axis=0)
    # the shared pi draw correlates the class terms, so keep the full covariance
    cov = np.atleast_2d(np.cov(terms, rowvar=False)) / draws
    total = joint.sum()
    probs = joint / total
    # d p_c / d J_k = (delta_ck * S - J_c) / S^2
    grad = (np.eye(c) * total - joint[:, None]) / total**2
    se = np.sqrt(np.einsum("ck,kl,cl->c", grad, cov, grad))
    return probs, se


def mp_class_posterior(state: ClassPosteriorState, x, dps: int = 50) -> list:
    """Student-t class posterior evaluated entirely in mpmath at ``dps`` digits."""
    with mpmath.workdps(dps):
        logs = []
        alpha_sum = mpmath.fsum(mpmath.mpf(float(a)) for a in state.mixing.alpha)
        for c, p in enumerate(state.per_class):
            d = p.dim
            beta, nu = mpmath.mpf(p.beta), mpmath.mpf(p.nu)
            dof = nu + 1 - d
            scale = mpmath.matrix(p.w_inv.tolist()) * ((1 + beta) / (beta * dof))
            diff = mpmath.matrix([mpmath.mpf(float(v)) for v in x]) - mpmath.matrix(p.m.tolist())
            maha = (diff.T * mpmath.inverse(scale) * diff)[0]
            logdens = (
                mpmath.loggamma((dof + d) / 2) - mpmath.loggamma(dof / 2)
                - mpmath.mpf(d) / 2 * mpmath.log(dof * mpmath.pi)
                - mpmath.log(mpmath.det(scale)) / 2
                - (dof + d) / 2 * mpmath.log(1 + maha / dof)
            )
            logs.append(logdens + mpmath.log(mpmath.mpf(float(state.mixing.alpha[c])) / alpha_sum))
        top = max(logs)
        w = [mpmath.exp(v - top) for v in logs]
        s = mpmath.fsum(w)
        return [float(v / s) for v in w]


def mp_butterworth2(cutoff_hz, sample_rate_hz, dps: int = 60) -> dict:
    """Bilinear transform of H(s) = wc^2 / (s^2 + sqrt(2) wc s + wc^2) in extended precision.

    Substitutes s = 2 fs (1 - z^-1) / (1 + z^-1) with the analog cutoff
    prewarped to wc = 2 fs tan(pi fc / fs), then expands the polynomials
    in z^-1 term by term.
    """
    with mpmath.workdps(dps):
        fs = mpmath.mpf(sample_rate_hz)
        fc = mpmath.mpf(cutoff_hz)
        wc = 2 * fs * mpmath.tan(mpmath.pi * fc / fs)
        k = 2 * fs
        r2 = mpmath.sqrt(2)
        # numerator  wc^2 (1 + z^-1)^2
        num = [wc**2, 2 * wc**2, wc**2]
        # denominator k^2 (1 - z^-1)^2 + sqrt2 wc k (1 - z^-1)(1 + z^-1) + wc^2 (1 + z^-1)^2
        den = [
            k**2 + r2 * wc * k + wc**2,
            -2 * k**2 + 2 * wc**2,
            k**2 - r2 * wc * k + wc**2,
        ]
        a0 = den[0]
        return {
            "b0": num[0] / a0, "b1": num[1] / a0, "b2": num[2] / a0,
            "a1": den[1] / a0, "a2": den[2] / a0,
        }


def biquad_impulse_response(b, a, n: int) -> np.ndarray:
    """Impulse response from the partial-fraction expansion of a biquad.

    H(z) = b0/a2 * ... is split as  h[k] = c0 * delta[k] + sum_i r_i p_i^k
    using the residues of the two (distinct) poles.
    """
    b = np.asarray(b, dtype=complex)
    a1, a2 = complex(a[1]), complex(a[2])
    p1, p2 = np.roots([1.0, a1, a2])
    # polynomial division in z^-1: H = b2/a2 + (remainder) / (1 + a1 z^-1 + a2 z^-2)
    q = b[2] / a2
    r0 = b[0] - q
    r1 = b[1] - q * a1
    # remainder (r0 + r1 z^-1) / ((1 - p1 z^-1)(1 - p2 z^-1)) = A/(1 - p1 z^-1) + B/(1 - p2 z^-1)
    res_a = (r0 * p1 + r1) / (p1 - p2)
    res_b = (r0 * p2 + r1) / (p2 - p1)
    k = np.arange(n)
    h = res_a * p1**k + res_b * p2**k
    h[0] += q
    return h.real
