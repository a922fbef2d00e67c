"""Estimation-error bound evaluators: precondition checklists plus right-hand
sides, computed from design-matrix quantities supplied by the diagnostics
module.

Evaluators never recompute quantities; they consume a QuantitySet so that
certified one-sided bounds are used conservatively.  An upper bound on pi or
gamma is sound both for gating (conditions get harder) and inside a
right-hand side (the result gets larger); a lower bound on omega or mu is
likewise sound in denominators.  Heuristic estimates are rejected.  When any
condition fails the right-hand side is undefined (None), never a sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .diagnostics import SubsetQuantities
from .errors import DomainError, MissingQuantity

# quantity name -> which one-sided certificate is sound for bound evaluation
_SOUND_DIRECTION = {
    "rho": "upper",
    "theta": "upper",
    "gamma": "upper",
    "pi": "upper",
    "theta_bar": "upper",
    "mu": "lower",
    "omega": "lower",
}


class QuantitySet:
    """Lookup table of SubsetQuantities keyed by (k, ell, p)."""

    def __init__(self, entries=()):
        self._entries: dict[tuple[int, int, float], SubsetQuantities] = {}
        for q in entries:
            self.add(q)

    def add(self, q: SubsetQuantities):
        self._entries[(q.k, q.ell, q.p)] = q

    def get(self, k: int, ell: int, p: float) -> SubsetQuantities:
        key = (int(k), int(ell), float(p))
        if key not in self._entries:
            raise MissingQuantity(f"no quantities at (k={k}, ell={ell}, p={p})")
        q = self._entries[key]
        for name, flag in q.exactness.items():
            if name in _SOUND_DIRECTION and flag not in ("exact", "bound"):
                raise MissingQuantity(
                    f"quantity {name} at (k={k}, ell={ell}, p={p}) is a {flag}, "
                    "which cannot certify a bound"
                )
        return q

    def items(self):
        return self._entries.items()


@dataclass(frozen=True)
class BoundInputs:
    """Everything a bound evaluator may need; unused fields can stay None."""

    n: int
    d: int
    k: int | None = None
    ell: int | None = None
    s: int | None = None
    q: int | None = None
    p: float = 2.0
    q_norm: float | None = None
    t: float | None = None
    t_dantzig: float | None = None
    lam: float | None = None
    alpha: float | None = None
    epsilon_fs: float | None = None
    sigma: float = 0.0
    a: float = 1.0
    delta: float | None = None
    tail1: float = 0.0
    tailp: float = 0.0
    approx_noise: float = 0.0
    approx_err: float | None = None
    coherence: float | None = None
    quantities: QuantitySet | None = None

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise MissingQuantity(f"bound input {name!r} is required but missing")


@dataclass(frozen=True)
class Condition:
    text: str
    holds: bool
    margin: float


@dataclass(frozen=True)
class BoundReport:
    """Checklist outcome plus the evaluated right-hand side.

    ``rhs`` is present only when every condition holds.
    """

    bound_name: str
    conditions: tuple[Condition, ...]
    rhs: float | None
    values: dict[str, float] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.conditions)


def _finish(name, conditions, rhs_fn, values=None, notes=()):
    conditions = tuple(conditions)
    ok = all(c.holds for c in conditions)
    return BoundReport(
        bound_name=name,
        conditions=conditions,
        rhs=float(rhs_fn()) if ok else None,
        values=dict(values or {}),
        notes=tuple(notes),
    )


def _cond(text, holds, margin):
    return Condition(text=text, holds=bool(holds), margin=float(margin))


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def _noise_width(n: int, d: int, delta: float) -> float:
    return math.sqrt(2.0 * math.log(2.0 * d / delta) / n)


def lambda_floor(inputs: BoundInputs) -> float:
    """Smallest regularization level the estimation bounds require:
    (4(2-t)/t) * (sigma * a * sqrt((2/n) ln(2d/delta)) + approx_noise)."""
    inputs.require("t", "delta")
    t, delta = inputs.t, inputs.delta
    # t = 1 is the degenerate endpoint (leading factor 4); the bound gates
    # themselves still require t < 1 strictly
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    width = inputs.sigma * inputs.a * _noise_width(inputs.n, inputs.d, delta)
    return 4.0 * (2.0 - t) / t * (width + inputs.approx_noise)


def theorem41_rhs(inputs: BoundInputs, claim: int, q_norm=None) -> BoundReport:
    """General p-norm estimation-error bound, claim 1 (cross-ratio route) or
    claim 2 (inverse-block route), in the norm index ``q_norm`` in {1, p}."""
    inputs.require("k", "ell", "lam", "t", "delta", "quantities")
    k, ell, p, t, lam = inputs.k, inputs.ell, inputs.p, inputs.t, inputs.lam
    qn = inputs.p if q_norm is None else float(q_norm)
    if qn not in (1.0, inputs.p):
        raise ValueError(f"q_norm must be 1 or p={inputs.p}, got {qn}")
    quant = inputs.quantities.get(k + ell, ell, p)
    floor = lambda_floor(inputs)
    invp, invq = _inv(p), _inv(qn)
    kq = k ** (invq - invp)

    if claim == 1:
        gate = 1.0 - quant.pi * k ** (1.0 - invp) / ell
        gate_name = "t <= 1 - pi*k^(1-1/p)/ell"
    elif claim == 2:
        gate = 1.0 - quant.gamma * k ** (1.0 - invp) / ell
        gate_name = "t <= 1 - gamma*k^(1-1/p)/ell"
    else:
        raise ValueError(f"claim must be 1 or 2, got {claim}")

    conditions = [
        _cond("k <= ell", k <= ell, ell - k),
        _cond("ell <= (d - k)/2", ell <= (inputs.d - k) / 2, (inputs.d - k) / 2 - ell),
        _cond("0 < t < 1", 0.0 < t < 1.0, min(t, 1.0 - t)),
        _cond(gate_name, t <= gate, gate - t),
        _cond("lambda >= floor", lam >= floor, lam - floor),
    ]

    def rhs_claim1():
        lead = 8.0 * kq / (t * quant.omega)
        return (
            lead * (quant.rho * inputs.tailp + k**invp * lam)
            + 32.0 * kq / t * quant.pi * inputs.tail1 / ell
            + 4.0 * kq * inputs.tailp
            + 4.0 * inputs.tail1 * ell ** (invq - 1.0)
        )

    def rhs_claim2():
        return (
            8.0 * kq / t * (4.0 * quant.gamma * inputs.tail1 / ell + lam * (k + ell) ** invp / quant.mu)
            + 4.0 * inputs.tail1 * ell ** (invq - 1.0)
        )

    if claim == 1 and quant.omega <= 0.0:
        conditions.append(_cond("omega > 0", False, quant.omega))
    if claim == 2 and quant.mu <= 0.0:
        conditions.append(_cond("mu > 0", False, quant.mu))
    return _finish(
        f"theorem41_claim{claim}",
        conditions,
        rhs_claim1 if claim == 1 else rhs_claim2,
        values={"lambda_floor": floor, "q_norm": qn},
    )


def corollary41_rhs(inputs: BoundInputs) -> BoundReport:
    """Coherence-gated p-norm bound for unit-diagonal designs."""
    inputs.require("k", "ell", "lam", "t", "delta", "coherence")
    k, ell, p, t, lam, M = inputs.k, inputs.ell, inputs.p, inputs.t, inputs.lam, inputs.coherence
    floor = 4.0 * (2.0 - t) / t * (
        inputs.sigma * _noise_width(inputs.n, inputs.d, inputs.delta) + inputs.approx_noise
    )
    invp = _inv(p)
    gate = (1.0 - t) / (2.0 - t)
    conditions = [
        _cond("k <= ell", k <= ell, ell - k),
        _cond("ell <= (d - k)/2", ell <= (inputs.d - k) / 2, (inputs.d - k) / 2 - ell),
        _cond("0 < t < 1", 0.0 < t < 1.0, min(t, 1.0 - t)),
        _cond("M(k + ell) <= (1 - t)/(2 - t)", M * (k + ell) <= gate, gate - M * (k + ell)),
        _cond("lambda >= floor", lam >= floor, lam - floor),
    ]

    def rhs():
        return (
            8.0 * (2.0 - t) / t * (1.5 * inputs.tailp + k**invp * lam)
            + 4.0 * inputs.tailp
            + 4.0 * (8.0 - 7.0 * t) / t * inputs.tail1 * ell ** (invp - 1.0)
        )

    return _finish("corollary41", conditions, rhs, values={"lambda_floor": floor})


def corollary51_rhs(inputs: BoundInputs) -> BoundReport:
    """2-norm bound in terms of the least-squares approximation error."""
    inputs.require("k", "ell", "lam", "t", "delta", "coherence", "approx_err")
    k, ell, t, lam, M, eps = (
        inputs.k,
        inputs.ell,
        inputs.t,
        inputs.lam,
        inputs.coherence,
        inputs.approx_err,
    )
    floor = 4.0 * (2.0 - t) / t * (
        inputs.sigma * _noise_width(inputs.n, inputs.d, inputs.delta) + eps / math.sqrt(k + 1.0)
    )
    gate = (1.0 - t) / (2.0 - t)
    conditions = [
        _cond("2k <= ell", 2 * k <= ell, ell - 2 * k),
        _cond("ell <= (d - 2k)/2", ell <= (inputs.d - 2 * k) / 2, (inputs.d - 2 * k) / 2 - ell),
        _cond("0 < t < 1", 0.0 < t < 1.0, min(t, 1.0 - t)),
        _cond("M(2k + ell) <= (1 - t)/(2 - t)", M * (2 * k + ell) <= gate, gate - M * (2 * k + ell)),
        _cond("lambda >= floor", lam >= floor, lam - floor),
    ]

    def rhs():
        return (
            8.0 * (2.0 - t) / t * (1.5 * inputs.tailp + math.sqrt(2.0 * k) * lam)
            + 4.0 * inputs.tailp
            + 4.0 * (8.0 - 7.0 * t) / t * inputs.tail1 / math.sqrt(ell)
            + 4.0 * eps
        )

    return _finish("corollary51", conditions, rhs, values={"lambda_floor": floor})


def corollary61_rhs(inputs: BoundInputs) -> BoundReport:
    """2-norm bound with t derived from the cross-ratio quantity.

    Uses the certified upper bound on pi, which can only shrink t, so the
    evaluated bound stays valid (larger RHS, larger lambda floor).
    """
    inputs.require("k", "ell", "lam", "delta", "quantities")
    k, ell, lam = inputs.k, inputs.ell, inputs.lam
    quant = inputs.quantities.get(k + ell, ell, 2.0)
    t = 1.0 - quant.pi * math.sqrt(k) / ell
    floor = (
        4.0 * (2.0 - t) / t * inputs.sigma * inputs.a * _noise_width(inputs.n, inputs.d, inputs.delta)
        if t > 0.0
        else math.inf
    )
    conditions = [
        _cond("k <= ell", k <= ell, ell - k),
        _cond("ell <= (d - k)/2", ell <= (inputs.d - k) / 2, (inputs.d - k) / 2 - ell),
        _cond("t = 1 - pi*sqrt(k)/ell > 0", t > 0.0, t),
        _cond("lambda >= floor", lam >= floor, lam - floor if math.isfinite(floor) else -math.inf),
        _cond("mu > 0", quant.mu > 0.0, quant.mu),
    ]

    def rhs():
        ratio = quant.rho / (t * quant.mu)
        return (
            (32.0 * ratio + 4.0) * inputs.tail1 / math.sqrt(ell)
            + (8.0 * ratio + 4.0) * inputs.tailp
            + 8.0 / (t * quant.mu) * math.sqrt(k) * lam
        )

    return _finish("corollary61", conditions, rhs, values={"t": t, "lambda_floor": floor})


def dantzig_constants(d: int, delta: float, t_dantzig: float, a_in: float, b_in: float):
    """Constants (lambda_D, C0, C2) of the comparison bound for the
    correlation-constrained L1 estimator."""
    if d < 2:
        raise DomainError("need d >= 2 for the log terms")
    if t_dantzig <= 0:
        raise DomainError("t_dantzig must be positive")
    rem = 1.0 - a_in - b_in
    if rem <= 0:
        raise DomainError(f"need a + b < 1, got a={a_in}, b={b_in}")
    ln_d = math.log(d)
    radicand = 1.0 - (math.log(delta) + math.log(math.sqrt(math.pi * ln_d))) / ln_d
    if radicand < 0:
        raise DomainError("lambda_D radicand is negative")
    lam_d = (math.sqrt(radicand) + 1.0 / t_dantzig) * math.sqrt(2.0 * ln_d)
    c0 = 2.0 * math.sqrt(2.0) * (1.0 + (1.0 - a_in**2) / rem) + (1.0 + 1.0 / math.sqrt(2.0)) * (1.0 + a_in) ** 2 / rem
    c2 = 2.0 * c0 / rem + 2.0 * b_in * (1.0 + a_in) / rem**2 + (1.0 + a_in) / rem
    return lam_d, c0, c2


def dantzig_report(inputs: BoundInputs) -> BoundReport:
    """Comparison-estimator bound sqrt(C2 ((k+1) sigma^2 / n + tailp^2)) * lambda_D / sqrt(n)
    with a = identity deviation at 2s and b = cross block norm at (2s, s)."""
    inputs.require("k", "s", "delta", "t_dantzig", "quantities")
    s = inputs.s
    quant = inputs.quantities.get(2 * s, s, 2.0)
    a_in = max(quant.rho - 1.0, 1.0 - quant.mu)
    b_in = quant.theta_bar
    try:
        lam_d, c0, c2 = dantzig_constants(inputs.d, inputs.delta, inputs.t_dantzig, a_in, b_in)
    except DomainError:
        return BoundReport(
            bound_name="dantzig",
            conditions=(_cond("a + b < 1 - t_D", False, 1.0 - inputs.t_dantzig - a_in - b_in),),
            rhs=None,
            values={"a": a_in, "b": b_in},
        )
    gate = 1.0 - inputs.t_dantzig
    conditions = [
        _cond("a + b < 1 - t_D", a_in + b_in < gate, gate - a_in - b_in),
        _cond("0 < delta < 1", 0.0 < inputs.delta < 1.0, min(inputs.delta, 1.0 - inputs.delta)),
    ]

    def rhs():
        return math.sqrt(c2 * ((inputs.k + 1.0) * inputs.sigma**2 / inputs.n + inputs.tailp**2)) * lam_d

    return _finish(
        "dantzig",
        conditions,
        rhs,
        values={"lambda_D": lam_d, "C0": c0, "C2": c2, "a": a_in, "b": b_in},
    )


def theorem71_conditions(inputs: BoundInputs) -> BoundReport:
    """Support-recovery window checks; on success the max-norm estimation
    error is below epsilon * alpha, which sandwiches the thresholded support."""
    inputs.require("k", "ell", "lam", "t", "alpha", "epsilon_fs", "delta", "quantities")
    k, ell, p, t, lam = inputs.k, inputs.ell, inputs.p, inputs.t, inputs.lam
    eps, alpha = inputs.epsilon_fs, inputs.alpha
    quant = inputs.quantities.get(k + ell, ell, p)
    invp = _inv(p)
    floor = 4.0 * (2.0 - t) / t * inputs.sigma * inputs.a * _noise_width(inputs.n, inputs.d, inputs.delta)

    route_a_lo = 8.0 / (eps * alpha * quant.omega) * k**invp * lam if quant.omega > 0 else math.inf
    route_a_hi = 1.0 - quant.pi * k ** (1.0 - invp) / ell
    route_b_lo = 8.0 / (eps * alpha * quant.mu) * (k + ell) ** invp * lam if quant.mu > 0 else math.inf
    route_b_hi = 1.0 - quant.gamma * k ** (1.0 - invp) / ell
    route_a = route_a_lo <= t <= route_a_hi
    route_b = route_b_lo <= t <= route_b_hi

    conditions = [
        _cond("k <= ell", k <= ell, ell - k),
        _cond("ell <= (d - k)/2", ell <= (inputs.d - k) / 2, (inputs.d - k) / 2 - ell),
        _cond("0 < t < 1", 0.0 < t < 1.0, min(t, 1.0 - t)),
        _cond("0 < epsilon < 1", 0.0 < eps < 1.0, min(eps, 1.0 - eps)),
        _cond("lambda >= floor", lam >= floor, lam - floor),
        _cond(
            "window route (cross-ratio or inverse-block)",
            route_a or route_b,
            max(min(t - route_a_lo, route_a_hi - t), min(t - route_b_lo, route_b_hi - t)),
        ),
    ]
    notes = []
    if route_a:
        notes.append("cross-ratio route holds")
    if route_b:
        notes.append("inverse-block route holds")
    return _finish(
        "theorem71", conditions, lambda: eps * alpha, values={"lambda_floor": floor}, notes=notes
    )


def corollary71_conditions(inputs: BoundInputs) -> BoundReport:
    """Coherence specialization of the support-recovery check; on success the
    implied window parameter is epsilon = 32 lambda / alpha."""
    inputs.require("k", "lam", "alpha", "delta", "coherence")
    k, lam, alpha, M = inputs.k, inputs.lam, inputs.alpha, inputs.coherence
    floor = 12.0 * inputs.sigma * _noise_width(inputs.n, inputs.d, inputs.delta)
    conditions = [
        _cond("k*M <= 0.25", k * M <= 0.25, 0.25 - k * M),
        _cond("3k <= d", 3 * k <= inputs.d, inputs.d - 3 * k),
        _cond("lambda <= alpha/32", lam <= alpha / 32.0, alpha / 32.0 - lam),
        _cond("lambda >= 12 sigma sqrt(2 ln(2d/delta)/n)", lam >= floor, lam - floor),
    ]
    eps = 32.0 * lam / alpha
    return _finish(
        "corollary71",
        conditions,
        lambda: eps * alpha,
        values={"epsilon": eps, "lambda_floor": floor},
    )


def theorem81_rhs(inputs: BoundInputs) -> BoundReport:
    """Two-stage estimation bound; needs quantities at (k+ell, ell, 2) and
    (s+ell, ell, p).

    The first selection window divides by omega rather than the printed mu:
    omega <= mu, so the check is conservative and matches the thresholding
    argument the bound rests on.
    """
    inputs.require("k", "ell", "s", "q", "lam", "t", "alpha", "delta", "quantities")
    k, ell, s, q, p = inputs.k, inputs.ell, inputs.s, inputs.q, inputs.p
    t, lam, alpha, delta = inputs.t, inputs.lam, inputs.alpha, inputs.delta
    q2 = inputs.quantities.get(k + ell, ell, 2.0)
    qp = inputs.quantities.get(s + ell, ell, p)
    invp = _inv(p)
    floor = 4.0 * (2.0 - t) / t * inputs.sigma * inputs.a * _noise_width(inputs.n, inputs.d, delta)

    gate2 = 1.0 - q2.pi * math.sqrt(k) / ell
    route_a_lo = 16.0 / (alpha * qp.omega) * s**invp * lam if qp.omega > 0 else math.inf
    route_a_hi = 1.0 - qp.pi * s ** (1.0 - invp) / ell
    route_b_lo = 16.0 / (alpha * qp.mu) * (s + ell) ** invp * lam if qp.mu > 0 else math.inf
    route_b_hi = 1.0 - qp.gamma * s ** (1.0 - invp) / ell
    route_a = route_a_lo <= t <= route_a_hi
    route_b = route_b_lo <= t <= route_b_hi

    conditions = [
        _cond("0 < delta < 0.5", 0.0 < delta < 0.5, min(delta, 0.5 - delta)),
        _cond("s <= ell", s <= ell, ell - s),
        _cond("ell <= (d - s)/2", ell <= (inputs.d - s) / 2, (inputs.d - s) / 2 - ell),
        _cond("0 < t < 1", 0.0 < t < 1.0, min(t, 1.0 - t)),
        _cond("t <= 1 - pi2*sqrt(k)/ell", t <= gate2, gate2 - t),
        _cond("lambda <= alpha/2", lam <= 0.5 * alpha, 0.5 * alpha - lam),
        _cond("lambda >= floor", lam >= floor, lam - floor),
        _cond(
            "selection window route",
            route_a or route_b,
            max(min(t - route_a_lo, route_a_hi - t), min(t - route_b_lo, route_b_hi - t)),
        ),
        _cond("q <= k", q <= k, k - q),
        _cond("mu2 > 0", q2.mu > 0.0, q2.mu),
    ]

    def rhs():
        noise = inputs.a * inputs.sigma * (1.0 + math.sqrt(20.0 * math.log(1.0 / delta))) * math.sqrt(q / inputs.n)
        core = 5.0 * q2.rho * inputs.tailp + math.sqrt(k - q) * lam + noise
        return 8.0 / (t * q2.mu) * core + 8.0 * inputs.tailp

    return _finish("theorem81", conditions, rhs, values={"lambda_floor": floor})


def corollary81_rhs(inputs: BoundInputs) -> BoundReport:
    """Coherence specialization of the two-stage bound.

    The tail carries the constant 168 on the 2-norm tail of the target, the
    value implied by substituting the coherence envelopes into the general
    form.
    """
    inputs.require("k", "s", "q", "lam", "alpha", "delta", "coherence")
    k, s, q, lam, alpha, M, delta = (
        inputs.k,
        inputs.s,
        inputs.q,
        inputs.lam,
        inputs.alpha,
        inputs.coherence,
        inputs.delta,
    )
    floor = 12.0 * inputs.sigma * _noise_width(inputs.n, inputs.d, delta)
    conditions = [
        _cond("0 < delta < 0.5", 0.0 < delta < 0.5, min(delta, 0.5 - delta)),
        _cond("s <= d/3", s <= inputs.d / 3, inputs.d / 3 - s),
        _cond("M*s <= 1/6", M * s <= 1.0 / 6.0, 1.0 / 6.0 - M * s),
        _cond("lambda <= alpha/48", lam <= alpha / 48.0, alpha / 48.0 - lam),
        _cond("lambda >= floor", lam >= floor, lam - floor),
        _cond("q <= k", q <= k, k - q),
    ]

    def rhs():
        return (
            24.0 * math.sqrt(k - q) * lam
            + 24.0 * inputs.sigma * (1.0 + math.sqrt(20.0 * q / inputs.n * math.log(1.0 / delta)))
            + 168.0 * inputs.tailp
        )

    return _finish("corollary81", conditions, rhs, values={"lambda_floor": floor})


BOUND_EVALUATORS = {
    "theorem41_claim1": lambda inp: theorem41_rhs(inp, claim=1, q_norm=inp.q_norm),
    "theorem41_claim2": lambda inp: theorem41_rhs(inp, claim=2, q_norm=inp.q_norm),
    "corollary41": corollary41_rhs,
    "corollary51": corollary51_rhs,
    "corollary61": corollary61_rhs,
    "dantzig": dantzig_report,
    "theorem71": theorem71_conditions,
    "corollary71": corollary71_conditions,
    "theorem81": theorem81_rhs,
    "corollary81": corollary81_rhs,
}


def evaluate_bound(name: str, inputs: BoundInputs) -> BoundReport:
    if name not in BOUND_EVALUATORS:
        raise KeyError(f"unknown bound {name!r}; known: {sorted(BOUND_EVALUATORS)}")
    return BOUND_EVALUATORS[name](inputs)


def with_fields(inputs: BoundInputs, **kw) -> BoundInputs:
    """Return a copy of the inputs with the given fields replaced."""
    return replace(inputs, **kw)
