"""Hot coordinate-descent loop, JIT-compiled when numba is available.

The kernel is plain nopython-compatible code; without numba the same function
runs under the interpreter with identical arithmetic, only slower.
"""

from __future__ import annotations

import numpy as np


def _cd_loop(A, diag, zhat, beta, penalized, usable, half_lam, lam, y_sq, kkt_target, cc_tol, max_sweeps, obj_out):
    """Run full-pass / active-set coordinate descent until the gram-space
    optimality residual drops below ``kkt_target``.

    Mutates ``beta`` in place and records the objective after every sweep in
    ``obj_out``.  Returns (sweeps_used, converged, last_residual).
    """
    d = beta.shape[0]
    c = np.dot(A, beta)

    def _objective(c_vec):
        pen = 0.0
        for j in range(d):
            if penalized[j]:
                pen += abs(beta[j])
        return float(np.dot(beta, c_vec)) - 2.0 * float(np.dot(zhat, beta)) + y_sq + lam * pen

    def _sweep(coords, c_vec):
        max_delta = 0.0
        for idx in range(coords.shape[0]):
            j = coords[idx]
            ajj = diag[j]
            bj = beta[j]
            zj = zhat[j] - c_vec[j] + ajj * bj
            if penalized[j]:
                if zj > half_lam:
                    nb = (zj - half_lam) / ajj
                elif zj < -half_lam:
                    nb = (zj + half_lam) / ajj
                else:
                    nb = 0.0
            else:
                nb = zj / ajj
            delta = nb - bj
            if delta != 0.0:
                beta[j] = nb
                row = A[j]  # symmetric, so row j is column j
                for m in range(d):
                    c_vec[m] += row[m] * delta
                ad = abs(delta)
                if ad > max_delta:
                    max_delta = ad
        return max_delta

    def _residual(c_vec, coords):
        worst = 0.0
        for idx in range(coords.shape[0]):
            j = coords[idx]
            g = 2.0 * (c_vec[j] - zhat[j])
            if penalized[j]:
                if beta[j] > 0.0:
                    v = abs(g + lam)
                elif beta[j] < 0.0:
                    v = abs(g - lam)
                else:
                    v = abs(g) - lam
                    if v < 0.0:
                        v = 0.0
            else:
                v = abs(g)
            if v > worst:
                worst = v
        return worst

    all_idx = np.arange(d)
    obj_out[0] = _objective(c)
    sweeps = 0
    converged = False
    res = np.inf
    while sweeps < max_sweeps:
        max_delta = _sweep(usable, c)
        sweeps += 1
        c = np.dot(A, beta)  # refresh to cancel accumulated update drift
        obj_out[sweeps] = _objective(c)
        res = _residual(c, all_idx)
        if res <= kkt_target:
            converged = True
            break
        if max_delta <= cc_tol:
            break
        n_active = 0
        for idx in range(usable.shape[0]):
            j = usable[idx]
            if beta[j] != 0.0 or not penalized[j]:
                n_active += 1
        active = np.empty(n_active, np.int64)
        pos = 0
        for idx in range(usable.shape[0]):
            j = usable[idx]
            if beta[j] != 0.0 or not penalized[j]:
                active[pos] = j
                pos += 1
        while sweeps < max_sweeps:
            max_delta = _sweep(active, c)
            sweeps += 1
            obj_out[sweeps] = _objective(c)
            if max_delta <= cc_tol:
                break
            if _residual(c, active) <= 0.5 * kkt_target:
                break
    return sweeps, converged, res


try:  # pragma: no cover - exercised indirectly
    from numba import njit

    cd_loop = njit(cache=True)(_cd_loop)
except ImportError:  # pragma: no cover
    cd_loop = _cd_loop
