"""Vectorised adaptive Gauss-Legendre quadrature.

Many independent integrals are refined together: every round evaluates the
integrand once on all active panels, so the Python overhead grows with the
refinement depth rather than with the number of panels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORDER = 10
INNER_CHUNK = 20_000
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(ORDER)


class QuadratureError(RuntimeError):
    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


@dataclass
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    panels: int


def _panel_rules(lo, hi):
    """Nodes for the whole panel and its two halves, plus the matching weights."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    quarter = 0.5 * half
    whole = mid[:, None] + half[:, None] * _NODES
    left = (lo + quarter)[:, None] + quarter[:, None] * _NODES
    right = (mid + quarter)[:, None] + quarter[:, None] * _NODES
    return whole, left, right, half, quarter


def integrate_batch(f, lo, hi, rel_tol=1e-6, abs_tol=1e-14, breakpoints=None,
                    max_rounds=60, max_panels=200_000) -> QuadResult:
    """Integrate ``f`` over [lo[k], hi[k]] for every k at once.

    ``f(x, owner)`` receives flat arrays of nodes and the index of the
    integral each node belongs to, and returns values of shape ``(len(x),)``
    or ``(len(x), p)`` for vector-valued integrands.  A panel is split when
    its error estimate (whole-panel rule versus the two half-panel rules)
    exceeds its share of the remaining error budget.  ``breakpoints[k]`` may
    list known kinks inside [lo[k], hi[k]].
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    nint = lo.shape[0]

    plo, phi, pown = [], [], []
    for k in range(nint):
        cuts = [lo[k], hi[k]]
        if breakpoints is not None and breakpoints[k] is not None:
            cuts += [b for b in breakpoints[k] if lo[k] < b < hi[k]]
        cuts = np.unique(cuts)
        plo.append(cuts[:-1])
        phi.append(cuts[1:])
        pown.append(np.full(len(cuts) - 1, k))
    plo = np.concatenate(plo)
    phi = np.concatenate(phi)
    pown = np.concatenate(pown)
    keep = phi > plo
    plo, phi, pown = plo[keep], phi[keep], pown[keep]

    done_val = None
    done_err = None
    total = None
    accepted = 0
    for _ in range(max_rounds):
        whole, left, right, half, quarter = _panel_rules(plo, phi)
        npan = len(plo)
        nodes = np.concatenate([whole.ravel(), left.ravel(), right.ravel()])
        owners = np.tile(np.repeat(pown, ORDER), 3)
        vals = np.asarray(f(nodes, owners), dtype=float)
        vec = vals.ndim == 2
        if not vec:
            vals = vals[:, None]
        p = vals.shape[1]
        if done_val is None:
            done_val = np.zeros((nint, p))
            done_err = np.zeros((nint, p))
        vals = vals.reshape(3, npan, ORDER, p)
        i_whole = half[:, None] * np.einsum("j,kjp->kp", _WEIGHTS, vals[0])
        i_halves = quarter[:, None] * (np.einsum("j,kjp->kp", _WEIGHTS, vals[1])
                                       + np.einsum("j,kjp->kp", _WEIGHTS, vals[2]))
        err = np.abs(i_whole - i_halves)

        est = done_val.copy()
        np.add.at(est, pown, i_halves)
        est_err = done_err.copy()
        np.add.at(est_err, pown, err)
        budget = np.maximum(rel_tol * np.abs(est), abs_tol)
        # panels still open per owner decide each panel's share of the budget
        nopen = np.bincount(pown, minlength=nint).astype(float)
        share = budget[pown] / (2.0 * np.maximum(nopen[pown], 1.0))[:, None]
        accept = np.all(err <= share, axis=1) | np.all(est_err[pown] <= budget[pown], axis=1)
        np.add.at(done_val, pown[accept], i_halves[accept])
        np.add.at(done_err, pown[accept], err[accept])
        accepted += int(accept.sum())

        todo = ~accept
        if not np.any(todo):
            total = done_val
            break
        mid = 0.5 * (plo[todo] + phi[todo])
        plo = np.concatenate([plo[todo], mid])
        phi = np.concatenate([mid, phi[todo]])
        pown = np.concatenate([pown[todo], pown[todo]])
        if len(plo) > max_panels:
            break
    if total is None:
        raise QuadratureError("adaptive quadrature did not converge", est[:, 0] if not vec else est, est_err)
    value = total if vec else total[:, 0]
    error = done_err if vec else done_err[:, 0]
    return QuadResult(value, error, accepted)


def integrate(f, a: float, b: float, rel_tol=1e-10, abs_tol=1e-14, breakpoints=None) -> float:
    """Scalar convenience wrapper around :func:`integrate_batch`."""
    res = integrate_batch(lambda x, _k: f(x), [a], [b], rel_tol=rel_tol, abs_tol=abs_tol,
                          breakpoints=None if breakpoints is None else [breakpoints])
    return float(res.value[0])


def integrate_nested_batch(inner, outer_weight, u_lo, u_hi, z_bounds, rel_tol=1e-6, abs_tol=1e-14,
                           breakpoints=None, inner_breakpoints=None):
    """Many two-dimensional integrals  int_u  w_k(u) * int_z inner_k(u, z) dz  du  at once.

    ``inner(u, z, owner)``, ``z_bounds(u, owner)`` and ``outer_weight(u, owner)``
    receive flat arrays plus the index of the integral each node belongs to;
    ``outer_weight`` returns shape (len(u), p) so that several outputs share
    one inner integral.  ``breakpoints[k]`` lists kinks in u for integral k
    and ``inner_breakpoints(u, owner)`` optional kinks in z.  Returns
    (value, error), each of shape (k, p).
    """
    inner_tol = 0.1 * rel_tol

    def outer(u, owner):
        zl, zh = z_bounds(u, owner)
        nonempty = zh > zl
        b = np.zeros_like(u)
        if np.any(nonempty):
            uu = u[nonempty]
            oo = owner[nonempty]

            def g(z, k):
                return inner(uu[k], z, oo[k])

            bp = None
            if inner_breakpoints is not None:
                bp = [inner_breakpoints(x, o) for x, o in zip(uu, oo)]
            zl_n, zh_n = zl[nonempty], zh[nonempty]
            vals = np.empty(uu.size)
            # the panel cap applies per chunk of inner integrals
            for a in range(0, uu.size, INNER_CHUNK):
                sl = slice(a, min(a + INNER_CHUNK, uu.size))
                res = integrate_batch(lambda z, k, off=a: g(z, k + off), zl_n[sl], zh_n[sl],
                                      rel_tol=inner_tol, abs_tol=abs_tol * 1e-2,
                                      breakpoints=None if bp is None else bp[sl])
                vals[sl] = res.value
            b[nonempty] = vals
        return outer_weight(u, owner) * b[:, None]

    res = integrate_batch(outer, u_lo, u_hi, rel_tol=rel_tol, abs_tol=abs_tol, breakpoints=breakpoints)
    return res.value, res.error


def integrate_nested(inner, outer_weight, u_lo, u_hi, z_bounds, rel_tol=1e-6, abs_tol=1e-14,
                     breakpoints=None, inner_breakpoints=None):
    """Single two-dimensional integral  int_u  w(u) * int_z inner(u, z) dz  du.

    ``z_bounds(u)`` returns the inner limits for an array of u values and
    ``outer_weight(u)`` an array of shape (len(u), p).
    """
    value, error = integrate_nested_batch(
        lambda u, z, _o: inner(u, z),
        lambda u, _o: outer_weight(u),
        [u_lo], [u_hi],
        lambda u, _o: z_bounds(u),
        rel_tol=rel_tol, abs_tol=abs_tol,
        breakpoints=None if breakpoints is None else [breakpoints],
        inner_breakpoints=None if inner_breakpoints is None else (lambda u, _o: inner_breakpoints(u)),
    )
    return value[0], error[0]
