"""Greedy single-coordinate corrections that drive the residual correlation of
an approximate target toward zero.

Starting from a target vector, each step picks the feature with the largest
absolute residual correlation against the noiseless mean response and takes an
exact gradient step on that coordinate, scaled by the squared column scale.
Within k steps some iterate is guaranteed to have residual correlation at most
a/sqrt(k+1) times the root mean squared approximation error; the certificate
below locates it and verifies the companion displacement bound.

The mean response here is the noiseless E[y], not an observed sample: the
construction is a statement about approximation error, and feeding noisy
observations would silently change its meaning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_design, as_vector, gram
from .diagnostics import DEFAULT_BUDGET, rho_mu
from .errors import CertificateNotFound, CombinatorialBudgetExceeded, ZeroColumnScale

_EXACT_STOP = 1e-14
_CERT_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class GreedyTrace:
    """Full record of the correction sequence.

    ``iterates[k]`` is the k-step vector (``iterates[0]`` is the input
    target); ``residual_corr_inf[k]`` is the max-norm residual correlation at
    step k; ``energies[k]`` the unnormalized squared prediction error.
    """

    iterates: tuple[np.ndarray, ...]
    picked_indices: tuple[int, ...]
    step_sizes: tuple[float, ...]
    residual_corr_inf: tuple[float, ...]
    energies: tuple[float, ...]
    column_scale: float

    @property
    def steps(self) -> int:
        return len(self.picked_indices)


@dataclass(frozen=True)
class CertificateResult:
    k_star: int
    bound_holds: bool
    threshold: float
    residual_at_k_star: float
    displacement_ok: bool | None


def greedy_correct(X, mean_response, beta_bar, k_max: int) -> GreedyTrace:
    """Run up to ``k_max`` correction steps, stopping early once the residual
    correlation vanishes.  Argmax ties resolve to the lower index."""
    X = as_design(X)
    n, d = X.shape
    ey = as_vector(mean_response, n, "mean response")
    beta = as_vector(beta_bar, d, "target").copy()
    if k_max < 0:
        raise ValueError(f"k_max must be nonnegative, got {k_max}")
    col_sq = (X * X).sum(axis=0) / n
    a_sq = float(col_sq.max())
    if a_sq <= 0.0:
        raise ZeroColumnScale("design has no nonzero column")

    resid = X @ beta - ey
    corr = X.T @ resid / n

    iterates = [beta.copy()]
    picked: list[int] = []
    steps: list[float] = []
    corr_inf = [float(np.abs(corr).max())]
    energies = [float(resid @ resid)]

    for _ in range(k_max):
        if corr_inf[-1] <= _EXACT_STOP:
            break
        j = int(np.argmax(np.abs(corr)))
        alpha = -float(corr[j]) / a_sq
        beta[j] += alpha
        resid += alpha * X[:, j]
        corr = X.T @ resid / n
        iterates.append(beta.copy())
        picked.append(j)
        steps.append(alpha)
        corr_inf.append(float(np.abs(corr).max()))
        energies.append(float(resid @ resid))

    return GreedyTrace(
        iterates=tuple(iterates),
        picked_indices=tuple(picked),
        step_sizes=tuple(steps),
        residual_corr_inf=tuple(corr_inf),
        energies=tuple(energies),
        column_scale=math.sqrt(a_sq),
    )


def prop51_certificate(trace: GreedyTrace, X, mean_response, beta_bar, k: int, mu2=None) -> CertificateResult:
    """Locate the first iterate whose residual correlation meets the
    a/sqrt(k+1) threshold and verify the 2-norm displacement bound.

    One such iterate must exist within k steps; a missing certificate on a
    sufficiently long trace indicates an implementation bug and raises.
    """
    X = as_design(X)
    n, d = X.shape
    ey = as_vector(mean_response, n, "mean response")
    beta_bar = as_vector(beta_bar, d, "target")
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")

    approx_err = math.sqrt(trace.energies[0] / n)
    a = trace.column_scale
    threshold = a / math.sqrt(k + 1.0) * approx_err
    slack = _CERT_SLACK * max(1.0, threshold)

    k_star = None
    for idx in range(min(k, len(trace.iterates) - 1) + 1):
        if trace.residual_corr_inf[idx] <= threshold + slack:
            k_star = idx
            break
    if k_star is None:
        if len(trace.iterates) <= k:
            raise CertificateNotFound(
                f"trace has only {len(trace.iterates) - 1} steps; rerun with k_max >= {k}"
            )
        raise CertificateNotFound(
            "no iterate meets the residual threshold within k steps; "
            "this contradicts the deterministic guarantee and indicates a bug"
        )

    displacement_ok = None
    if k_star == 0:
        displacement_ok = True
    elif k >= 1:
        if mu2 is None:
            try:
                _, mu2 = rho_mu(gram(X).values, min(k, d), 2.0, DEFAULT_BUDGET)
            except CombinatorialBudgetExceeded:
                mu2 = None
        if mu2 is not None and mu2 > 0.0:
            displacement = float(np.linalg.norm(trace.iterates[k_star] - beta_bar))
            limit = 2.0 * approx_err / math.sqrt(mu2)
            displacement_ok = displacement <= limit + _CERT_SLACK * max(1.0, limit)

    return CertificateResult(
        k_star=k_star,
        bound_holds=displacement_ok is not False,
        threshold=threshold,
        residual_at_k_star=trace.residual_corr_inf[k_star],
        displacement_ok=displacement_ok,
    )
