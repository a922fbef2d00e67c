"""Worst-case sub-matrix quantities of a gram matrix, by exhaustive enumeration.

For a symmetric PSD matrix A and subset sizes (k, ell), the quantities below
measure how far small diagonal blocks are from the identity and how large the
off-diagonal blocks can get:

    rho, mu     extreme p-operator gains of k x k diagonal blocks
    omega       smallest value of v^T B v^{p-1} / ||v||_p^p over blocks B
    theta       largest p-norm gain of k x ell off-diagonal blocks over the
                max-norm ball
    gamma       as theta, with the block premultiplied by the inverse diagonal
                block
    pi          largest cross-term-to-quadratic-form ratio
    theta_bar   largest spectral norm of off-diagonal blocks

Everything ranges over *all* admissible index subsets, so the cost is
combinatorial; a hard evaluation budget guards against blow-up and exceeding
it raises instead of approximating.  Norm indices are restricted to
{1, 2, inf}: these admit exact operator norms and exact vertex enumeration of
the max-norm ball.  omega at p != 2 and pi are not exactly computable by
enumeration; they are returned as certified one-sided bounds and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import GramMatrix
from .errors import CombinatorialBudgetExceeded, NonNormalizedDiagonal

DEFAULT_BUDGET = 200_000

_SINGULAR_RTOL = 1e-12
_HEURISTIC_SEED = 0x5EED
_HEURISTIC_SAMPLES = 32


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, GramMatrix):
        return A.values
    arr = np.asarray(A, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    scale = max(1.0, float(np.abs(arr).max()))
    if np.abs(arr - arr.T).max() > 1e-10 * scale:
        raise ValueError("matrix must be symmetric")
    return arr


def _norm_index(p) -> float:
    if p in ("inf", "Inf", "INF"):
        return math.inf
    p = float(p)
    if p not in (1.0, 2.0) and not math.isinf(p):
        raise ValueError(f"norm index must be 1, 2, or inf, got {p}")
    return p


def _check_budget(count: int, budget: int, what: str):
    if count > budget:
        raise CombinatorialBudgetExceeded(
            f"{what} needs {count} evaluations, budget is {budget}"
        )


def _sign_vertices(ell: int) -> np.ndarray:
    """All sign patterns of length ell with the first entry fixed at +1."""
    if ell == 0:
        return np.zeros((0, 1))
    rest = np.array(np.meshgrid(*([[1.0, -1.0]] * (ell - 1)), indexing="ij")).reshape(ell - 1, -1) if ell > 1 else np.zeros((0, 1))
    return np.vstack([np.ones((1, rest.shape[1])), rest])


def mutual_coherence(A) -> float:
    """Largest absolute off-diagonal entry of a unit-diagonal matrix."""
    A = _as_matrix(A)
    if np.abs(np.diag(A) - 1.0).max() > 1e-10:
        raise NonNormalizedDiagonal("mutual coherence requires a unit diagonal")
    if A.shape[0] == 1:
        return 0.0
    off = A - np.diag(np.diag(A))
    return float(np.abs(off).max())


def _comb_array(pool, r: int) -> np.ndarray:
    return np.array(list(combinations(pool, r)), dtype=np.intp).reshape(-1, r)


def _diag_blocks(A: np.ndarray, k: int) -> np.ndarray:
    """All k x k diagonal blocks stacked as (C(d,k), k, k)."""
    I = _comb_array(range(A.shape[0]), k)
    return A[I[:, :, None], I[:, None, :]]


def rho_mu(A, k: int, p, budget: int = DEFAULT_BUDGET) -> tuple[float, float]:
    """Largest and smallest p-operator gain of k x k diagonal blocks.

    At p = 2 these are the extreme eigenvalues over all blocks; at p in
    {1, inf} the lower gain is 1/||B^{-1}||_p per block, reported as 0 when a
    block is singular.
    """
    A = _as_matrix(A)
    p = _norm_index(p)
    d = A.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must satisfy 1 <= k <= {d}, got {k}")
    _check_budget(math.comb(d, k), budget, f"rho_mu(k={k})")
    blocks = _diag_blocks(A, k)
    w = np.linalg.eigvalsh(blocks)
    if p == 2.0:
        return float(w[:, -1].max()), float(w[:, 0].min())
    sums = np.abs(blocks).sum(axis=1)  # column sums; rows by symmetry
    rho = float(sums.max(axis=1).max())
    singular = w[:, 0] <= _SINGULAR_RTOL * np.maximum(1.0, np.abs(w[:, -1]))
    if singular.any():
        return rho, 0.0
    inv_norms = np.abs(np.linalg.inv(blocks)).sum(axis=1).max(axis=1)
    return rho, float((1.0 / inv_norms).min())


def _cross_block_gains(rows: np.ndarray, J: np.ndarray, verts, p: float) -> np.ndarray:
    """Per-J max-norm-ball gain of each k x ell cross block rows[:, J[c]]."""
    M = rows[:, J]  # (k, CJ, ell)
    if math.isinf(p):
        return np.abs(M).sum(axis=2).max(axis=0)
    P = np.einsum("kce,ev->kcv", M, verts)
    if p == 1.0:
        return np.abs(P).sum(axis=0).max(axis=1)
    return np.sqrt((P * P).sum(axis=0)).max(axis=1)


def _theta_impl(A, k, ell, p, budget, what):
    d = A.shape[0]
    if k < 1 or ell < 1 or k + ell > d:
        raise ValueError(f"need k, ell >= 1 and k + ell <= {d}, got k={k}, ell={ell}")
    patterns = 1 if math.isinf(p) else 2 ** (ell - 1)
    _check_budget(math.comb(d, k) * math.comb(d - k, ell) * patterns, budget, what)
    verts = None if math.isinf(p) else _sign_vertices(ell)
    J = _comb_array(range(d - k), ell)
    best = 0.0
    best_pair = None
    for I in combinations(range(d), k):
        rest = np.array([j for j in range(d) if j not in I], dtype=np.intp)
        gains = _cross_block_gains(A[np.ix_(I, rest)], J, verts, p)
        c = int(np.argmax(gains))
        if gains[c] > best:
            best = float(gains[c])
            best_pair = (I, tuple(int(rest[j]) for j in J[c]))
    return best, best_pair


def theta(A, k: int, ell: int, p, budget: int = DEFAULT_BUDGET) -> float:
    """Worst-case ||A_{I,J} u||_p over disjoint subsets and the max-norm ball."""
    A = _as_matrix(A)
    p = _norm_index(p)
    return _theta_impl(A, k, ell, p, budget, f"theta(k={k},ell={ell})")[0]


def gamma(A, k: int, ell: int, p, budget: int = DEFAULT_BUDGET) -> float:
    """As theta with the block premultiplied by A_{I,I}^{-1}.

    Subsets with a singular diagonal block contribute +inf.
    """
    A = _as_matrix(A)
    p = _norm_index(p)
    d = A.shape[0]
    if k < 1 or ell < 1 or k + ell > d:
        raise ValueError(f"need k, ell >= 1 and k + ell <= {d}, got k={k}, ell={ell}")
    patterns = 1 if math.isinf(p) else 2 ** (ell - 1)
    _check_budget(math.comb(d, k) * math.comb(d - k, ell) * patterns, budget, f"gamma(k={k},ell={ell})")
    verts = None if math.isinf(p) else _sign_vertices(ell)
    J = _comb_array(range(d - k), ell)
    best = 0.0
    for I in combinations(range(d), k):
        B = A[np.ix_(I, I)]
        w = np.linalg.eigvalsh(B)
        if w[0] <= _SINGULAR_RTOL * max(1.0, abs(w[-1])):
            return math.inf
        rest = np.array([j for j in range(d) if j not in I], dtype=np.intp)
        rows = np.linalg.inv(B) @ A[np.ix_(I, rest)]
        best = max(best, float(_cross_block_gains(rows, J, verts, p).max()))
    return best


@dataclass(frozen=True)
class OmegaValue:
    """omega quantity; ``exact`` is False when only the diagonal-dominance
    lower bound is available (p != 2)."""

    value: float
    exact: bool


def omega(A, k: int, p, budget: int = DEFAULT_BUDGET) -> OmegaValue:
    """Smallest normalized quadratic-form value over k x k diagonal blocks.

    Exact at p = 2 (clamped smallest block eigenvalue); at p in {1, inf} a
    certified lower bound min_i A_ii - sup_I ||offdiag(A_II)||_p is returned.
    """
    A = _as_matrix(A)
    p = _norm_index(p)
    d = A.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must satisfy 1 <= k <= {d}, got {k}")
    _check_budget(math.comb(d, k), budget, f"omega(k={k})")
    blocks = _diag_blocks(A, k)
    if p == 2.0:
        worst = float(np.linalg.eigvalsh(blocks)[:, 0].min())
        return OmegaValue(value=max(0.0, worst), exact=True)
    off = np.abs(blocks).sum(axis=1) - np.abs(
        blocks[:, np.arange(k), np.arange(k)]
    )  # off-diagonal column sums; rows agree by symmetry
    return OmegaValue(value=float(np.diag(A).min()) - float(off.max()), exact=False)


@dataclass(frozen=True)
class PiValue:
    """pi quantity: a certified upper bound plus a feasible-point lower
    estimate; ``degenerate`` marks a vanishing quadratic-form denominator."""

    upper: float
    lower_estimate: float
    degenerate: bool


def _pi_ratio(B, M, v, u) -> float:
    # p = 2 ratio: (v^T M u) ||v||_2 / (v^T B v)
    den = float(v @ B @ v)
    if den <= 0.0:
        return -math.inf
    num = float(v @ M @ u) * float(np.linalg.norm(v))
    return num / den


def _pi_lower_p2(B, M) -> float:
    k = B.shape[0]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=_HEURISTIC_SEED)))
    candidates = [np.ones(k)]
    w, vecs = np.linalg.eigh(B)
    candidates.extend(vecs[:, i] for i in range(k))
    col_norms = np.linalg.norm(M, axis=0)
    lead = M[:, int(np.argmax(col_norms))]
    if np.linalg.norm(lead) > 0:
        candidates.append(lead)
        if w[0] > _SINGULAR_RTOL * max(1.0, abs(w[-1])):
            candidates.append(np.linalg.solve(B, lead))
    candidates.extend(rng.standard_normal(k) for _ in range(_HEURISTIC_SAMPLES))
    best = 0.0
    for v in candidates:
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v = v / nv
        u = np.sign(M.T @ v)
        u[u == 0.0] = 1.0
        val = _pi_ratio(B, M, v, u)
        for _ in range(2):  # alternate a couple of exact u-steps
            u = np.sign(M.T @ v)
            u[u == 0.0] = 1.0
            val = max(val, _pi_ratio(B, M, v, u))
        best = max(best, val)
    return max(0.0, best)


def pi(A, k: int, ell: int, p, budget: int = DEFAULT_BUDGET) -> PiValue:
    """Certified upper bound on the cross-term ratio, with a heuristic
    feasible-point lower estimate at p = 2 (0 otherwise).

    The upper bound is the smaller of two routes: the eigenvalue-gap route
    (p = 2 only) and theta/omega; both are mathematically valid so the bound
    is conservative, never optimistic.
    """
    A = _as_matrix(A)
    p = _norm_index(p)
    th, best_pair = _theta_impl(A, k, ell, p, budget, f"pi(k={k},ell={ell})")
    om = omega(A, k, p, budget)
    degenerate = om.value <= 0.0
    routes = []
    if not degenerate:
        routes.append(th / om.value)
    if p == 2.0:
        rho_ell, _ = rho_mu(A, ell, 2.0, budget)
        _, mu_kl = rho_mu(A, k + ell, 2.0, budget)
        if mu_kl > 0.0:
            routes.append(0.5 * math.sqrt(ell) * math.sqrt(max(0.0, rho_ell / mu_kl - 1.0)))
    upper = min(routes) if routes else math.inf
    lower = 0.0
    if p == 2.0 and best_pair is not None:
        I, J = best_pair
        lower = _pi_lower_p2(A[np.ix_(I, I)], A[np.ix_(I, J)])
    return PiValue(upper=upper, lower_estimate=min(lower, upper), degenerate=degenerate)


def theta_bar(A, k: int, ell: int, budget: int = DEFAULT_BUDGET) -> float:
    """Largest spectral norm of k x ell off-diagonal blocks."""
    A = _as_matrix(A)
    d = A.shape[0]
    if k < 1 or ell < 1 or k + ell > d:
        raise ValueError(f"need k, ell >= 1 and k + ell <= {d}, got k={k}, ell={ell}")
    _check_budget(math.comb(d, k) * math.comb(d - k, ell), budget, f"theta_bar(k={k},ell={ell})")
    J = _comb_array(range(d - k), ell)
    best = 0.0
    for I in combinations(range(d), k):
        rest = np.array([j for j in range(d) if j not in I], dtype=np.intp)
        M = A[np.ix_(I, rest)][:, J]  # (k, CJ, ell)
        svals = np.linalg.svd(np.moveaxis(M, 1, 0), compute_uv=False)
        best = max(best, float(svals[:, 0].max()))
    return best


def identity_deviation(A, size: int, budget: int = DEFAULT_BUDGET) -> float:
    """max(rho - 1, 1 - mu) at p = 2 for blocks of the given size."""
    rho, mu = rho_mu(A, size, 2.0, budget)
    return max(rho - 1.0, 1.0 - mu)


@dataclass(frozen=True, eq=False)
class SubsetQuantities:
    """All quantities at one (k, ell, p) with per-quantity exactness flags.

    ``exactness`` values: "exact", "bound" (certified one-sided), or
    "estimate" (feasible-point value, not certified).
    """

    k: int
    ell: int
    p: float
    rho: float
    mu: float
    theta: float
    gamma: float
    omega: float
    pi: float
    pi_lower_estimate: float
    theta_bar: float
    exactness: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        tol = 1e-9 * max(1.0, abs(self.rho))
        if self.mu > self.rho + tol:
            raise ValueError("mu exceeds rho")
        if self.exactness.get("omega") == "exact" and self.omega > self.mu + tol:
            raise ValueError("omega exceeds mu")
        for name in ("rho", "theta", "theta_bar"):
            if getattr(self, name) < -tol:
                raise ValueError(f"{name} must be nonnegative")


def subset_quantities(A, k: int, ell: int, p, budget: int = DEFAULT_BUDGET) -> SubsetQuantities:
    """Compute the full quantity set at one (k, ell, p)."""
    A = _as_matrix(A)
    p = _norm_index(p)
    rho, mu = rho_mu(A, k, p, budget)
    om = omega(A, k, p, budget)
    piv = pi(A, k, ell, p, budget)
    return SubsetQuantities(
        k=k,
        ell=ell,
        p=p,
        rho=rho,
        mu=mu,
        theta=theta(A, k, ell, p, budget),
        gamma=gamma(A, k, ell, p, budget),
        omega=om.value,
        pi=piv.upper,
        pi_lower_estimate=piv.lower_estimate,
        theta_bar=theta_bar(A, k, ell, budget),
        exactness={
            "rho": "exact",
            "mu": "exact",
            "theta": "exact",
            "gamma": "exact",
            "omega": "exact" if om.exact else "bound",
            "pi": "bound",
            "pi_lower_estimate": "estimate",
            "theta_bar": "exact",
        },
    )


@dataclass(frozen=True)
class InequalityCheck:
    """One 'lhs <= rhs' relation with its slack and exactness of each side."""

    name: str
    p: float
    lhs: float
    rhs: float
    lhs_exact: bool
    rhs_exact: bool

    @property
    def slack(self) -> float:
        if math.isinf(self.rhs):
            return math.inf
        return self.rhs - self.lhs


def check_prop31(A, k: int, ell: int, budget: int = DEFAULT_BUDGET) -> list[InequalityCheck]:
    """Evaluate the internal inequality chain among the quantities.

    Each entry is an 'lhs <= rhs' relation; pi relations use the heuristic
    lower estimate on the left (marked inexact), everything else is exact at
    p in {1, 2, inf}.
    """
    A = _as_matrix(A)
    d = A.shape[0]
    if k + ell > d:
        raise ValueError(f"need k + ell <= {d}")
    checks: list[InequalityCheck] = []

    rho2_k, _ = rho_mu(A, k, 2.0, budget)
    rho2_l, _ = rho_mu(A, ell, 2.0, budget)
    _, mu2_kl = rho_mu(A, k + ell, 2.0, budget)
    th2 = theta(A, k, ell, 2.0, budget)
    gap = max(0.0, rho2_k - mu2_kl) * max(0.0, rho2_l - mu2_kl)
    checks.append(
        InequalityCheck("theta2_le_sqrt_ell_eig_gap", 2.0, th2, math.sqrt(ell) * math.sqrt(gap), True, True)
    )

    gam2 = gamma(A, k, ell, 2.0, budget)
    pi2 = pi(A, k, ell, 2.0, budget)
    if mu2_kl > 0.0:
        rhs = 0.5 * math.sqrt(ell) * math.sqrt(max(0.0, rho2_l / mu2_kl - 1.0))
    else:
        rhs = math.inf
    checks.append(InequalityCheck("pi2_le_eig_route", 2.0, pi2.lower_estimate, rhs, False, True))

    for p in (1.0, 2.0, math.inf):
        th_p = th2 if p == 2.0 else theta(A, k, ell, p, budget)
        gam_p = gam2 if p == 2.0 else gamma(A, k, ell, p, budget)
        rho_p, mu_p = rho_mu(A, k, p, budget)
        om_p = omega(A, k, p, budget)
        pi_lower = pi2.lower_estimate if p == 2.0 else 0.0
        kpow = k ** max(0.0, (1.0 / p if not math.isinf(p) else 0.0) - 0.5)
        if p != 2.0:
            checks.append(InequalityCheck("theta_p_le_kpow_theta2", p, th_p, kpow * th2, True, True))
            checks.append(InequalityCheck("gamma_p_le_kpow_gamma2", p, gam_p, kpow * gam2, True, True))
        checks.append(
            InequalityCheck(
                "pi_le_theta_over_omega",
                p,
                pi_lower,
                th_p / om_p.value if om_p.value > 0 else math.inf,
                False,
                om_p.exact,
            )
        )
        checks.append(
            InequalityCheck(
                "gamma_le_theta_over_mu", p, gam_p, th_p / mu_p if mu_p > 0 else math.inf, True, True
            )
        )
        dominance = float(np.diag(A).min()) - _sup_offdiag_norm(A, k, p, budget)
        checks.append(InequalityCheck("diag_dominance_le_omega", p, dominance, om_p.value, True, om_p.exact))
        checks.append(InequalityCheck("omega_le_mu", p, om_p.value, mu_p, om_p.exact, True))
    return checks


def _sup_offdiag_norm(A, k, p, budget) -> float:
    d = A.shape[0]
    _check_budget(math.comb(d, k), budget, f"offdiag_norm(k={k})")
    blocks = _diag_blocks(A, k).copy()
    idx = np.arange(k)
    blocks[:, idx, idx] = 0.0
    if p == 2.0:
        w = np.linalg.eigvalsh(blocks)
        return float(np.abs(w).max())
    return float(np.abs(blocks).sum(axis=1).max())


@dataclass(frozen=True)
class BoundCheck:
    name: str
    bound: float
    computed: float
    slack: float
    computed_exactness: str


@dataclass(frozen=True, eq=False)
class IncoherenceReport:
    """Coherence-based envelopes on every quantity, with slack against the
    enumerated values."""

    coherence: float
    k: int
    ell: int
    p: float
    checks: tuple[BoundCheck, ...]


def incoherence_bounds(A, k: int, ell: int, p, budget: int = DEFAULT_BUDGET) -> IncoherenceReport:
    """Evaluate the mutual-coherence envelopes at one (k, ell, p)."""
    A = _as_matrix(A)
    p = _norm_index(p)
    M = mutual_coherence(A)
    rho, mu = rho_mu(A, k, p, budget)
    om = omega(A, k, p, budget)
    th = theta(A, k, ell, p, budget)
    gm = gamma(A, k, ell, p, budget)
    piv = pi(A, k, ell, p, budget)
    kpow = 1.0 if math.isinf(p) else k ** (1.0 / p)
    denom = max(0.0, 1.0 - M * k)
    ratio_bound = M * kpow * ell / denom if denom > 0 else math.inf

    def mk(name, bound, computed, sense, exactness):
        # sense +1: computed <= bound; sense -1: computed >= bound
        if math.isinf(bound):
            slack = math.inf
        else:
            slack = bound - computed if sense > 0 else computed - bound
        return BoundCheck(name=name, bound=bound, computed=computed, slack=slack, computed_exactness=exactness)

    checks = (
        mk("rho_le_1_plus_Mk", 1.0 + M * k, rho, +1, "exact"),
        mk("mu_ge_1_minus_Mk", 1.0 - M * k, mu, -1, "exact"),
        mk("omega_ge_1_minus_Mk", 1.0 - M * k, om.value, -1, "exact" if om.exact else "bound"),
        mk("theta_le_Mk1p_ell", M * kpow * ell, th, +1, "exact"),
        mk("pi_le_ratio", ratio_bound, piv.upper, +1, "bound"),
        mk("gamma_le_ratio", ratio_bound, gm, +1, "exact"),
    )
    return IncoherenceReport(coherence=M, k=k, ell=ell, p=p, checks=checks)
