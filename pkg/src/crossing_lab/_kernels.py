"""Compiled crossing predicates and pair-counting loops.

Predicates return small integer codes so that batch loops can tally
outcomes without allocating Python objects:

    0  no crossing
    1  crossing
    2  degenerate: supporting great circles (or lines) coincide
    3  degenerate: an intersection candidate touches an endpoint
    4  degenerate: the two edges share an endpoint exactly
"""

import math

import numpy as np
from numba import njit

NO_CROSS = 0
CROSS = 1
DEG_COCIRCULAR = 2
DEG_TOUCH = 3
DEG_SHARED = 4

EPS_DEG = 1e-12
EPS_INT = 1e-12
EPS_ORIENT = 1e-12


# Row views (A[i]) cost a reference-count round trip in compiled code, so
# the predicates work on scalars and the wrappers index arrays directly.


@njit(cache=True, inline="always")
def _status(al, be, eps):
    # 1 = strictly interior, 0 = touching an endpoint, -1 = off the arc
    if al > eps and be > eps:
        return 1
    if (abs(al) <= eps and be >= -eps) or (abs(be) <= eps and al >= -eps):
        return 0
    return -1


@njit(cache=True, inline="always")
def _arc_core(a10, a11, a12, b10, b11, b12, m0, m1, m2,
              a20, a21, a22, b20, b21, b22, k0, k1, k2):
    """Arc predicate on scalars; (m0, m1, m2) and (k0, k1, k2) are unit normals.

    With p = n1 x n2 the interiority triple products reduce to plane sides,
    (a1 x p).n1 = a1.n2 and (p x b1).n1 = -b1.n2 (likewise for the second
    arc), so each candidate +-p costs four dot products.
    """
    if ((a10 == a20 and a11 == a21 and a12 == a22) or (a10 == b20 and a11 == b21 and a12 == b22)
            or (b10 == a20 and b11 == a21 and b12 == a22) or (b10 == b20 and b11 == b21 and b12 == b22)):
        return DEG_SHARED
    px = m1 * k2 - m2 * k1
    py = m2 * k0 - m0 * k2
    pz = m0 * k1 - m1 * k0
    s = math.sqrt(px * px + py * py + pz * pz)
    if s <= EPS_DEG:
        return DEG_COCIRCULAR
    al1 = a10 * k0 + a11 * k1 + a12 * k2
    be1 = -(b10 * k0 + b11 * k1 + b12 * k2)
    al2 = -(a20 * m0 + a21 * m1 + a22 * m2)
    be2 = b20 * m0 + b21 * m1 + b22 * m2
    # tolerances refer to the normalised candidate p / s
    eps = EPS_INT * s
    s1 = _status(al1, be1, eps)
    s2 = _status(al2, be2, eps)
    if (s1 == 0 and s2 >= 0) or (s2 == 0 and s1 >= 0):
        return DEG_TOUCH
    hits = 1 if (s1 == 1 and s2 == 1) else 0
    s1 = _status(-al1, -be1, eps)
    s2 = _status(-al2, -be2, eps)
    if (s1 == 0 and s2 >= 0) or (s2 == 0 and s1 >= 0):
        return DEG_TOUCH
    if s1 == 1 and s2 == 1:
        hits += 1
    if hits == 1:
        return CROSS
    if hits == 0:
        return NO_CROSS
    return DEG_TOUCH


@njit(cache=True, nogil=True)
def arc_code_n(a1, b1, n1, a2, b2, n2):
    """Crossing code for arcs [a1 b1], [a2 b2] with unit normals n1, n2."""
    return _arc_core(a1[0], a1[1], a1[2], b1[0], b1[1], b1[2], n1[0], n1[1], n1[2],
                     a2[0], a2[1], a2[2], b2[0], b2[1], b2[2], n2[0], n2[1], n2[2])


@njit(cache=True, inline="always")
def _normal(ax, ay, az, bx, by, bz):
    x = ay * bz - az * by
    y = az * bx - ax * bz
    z = ax * by - ay * bx
    s = math.sqrt(x * x + y * y + z * z)
    if s == 0.0:
        return 0.0, 0.0, 0.0
    return x / s, y / s, z / s


@njit(cache=True)
def arc_code(a1, b1, a2, b2):
    m0, m1, m2 = _normal(a1[0], a1[1], a1[2], b1[0], b1[1], b1[2])
    k0, k1, k2 = _normal(a2[0], a2[1], a2[2], b2[0], b2[1], b2[2])
    return _arc_core(a1[0], a1[1], a1[2], b1[0], b1[1], b1[2], m0, m1, m2,
                     a2[0], a2[1], a2[2], b2[0], b2[1], b2[2], k0, k1, k2)


@njit(cache=True, nogil=True)
def arc_codes(A1, B1, A2, B2):
    """Vectorised arc predicate over rows of (k, 3) arrays."""
    k = A1.shape[0]
    out = np.empty(k, dtype=np.int8)
    for i in range(k):
        m0, m1, m2 = _normal(A1[i, 0], A1[i, 1], A1[i, 2], B1[i, 0], B1[i, 1], B1[i, 2])
        k0, k1, k2 = _normal(A2[i, 0], A2[i, 1], A2[i, 2], B2[i, 0], B2[i, 1], B2[i, 2])
        out[i] = _arc_core(A1[i, 0], A1[i, 1], A1[i, 2], B1[i, 0], B1[i, 1], B1[i, 2], m0, m1, m2,
                           A2[i, 0], A2[i, 1], A2[i, 2], B2[i, 0], B2[i, 1], B2[i, 2], k0, k1, k2)
    return out


@njit(cache=True, inline="always")
def _orient(px, py, qx, qy, rx, ry):
    return (qx - px) * (ry - py) - (qy - py) * (rx - px)


@njit(cache=True, inline="always")
def _seg_core(p1x, p1y, q1x, q1y, p2x, p2y, q2x, q2y):
    if ((p1x == p2x and p1y == p2y) or (p1x == q2x and p1y == q2y)
            or (q1x == p2x and q1y == p2y) or (q1x == q2x and q1y == q2y)):
        return DEG_SHARED
    xmin = min(p1x, q1x, p2x, q2x)
    xmax = max(p1x, q1x, p2x, q2x)
    ymin = min(p1y, q1y, p2y, q2y)
    ymax = max(p1y, q1y, p2y, q2y)
    scale = max(xmax - xmin, ymax - ymin)
    tol_len = EPS_ORIENT * scale
    # separated bounding boxes
    if min(p1x, q1x) > max(p2x, q2x) + tol_len or min(p2x, q2x) > max(p1x, q1x) + tol_len:
        return NO_CROSS
    if min(p1y, q1y) > max(p2y, q2y) + tol_len or min(p2y, q2y) > max(p1y, q1y) + tol_len:
        return NO_CROSS
    tol = EPS_ORIENT * scale * scale
    d1 = _orient(p1x, p1y, q1x, q1y, p2x, p2y)
    d2 = _orient(p1x, p1y, q1x, q1y, q2x, q2y)
    if (d1 > tol and d2 > tol) or (d1 < -tol and d2 < -tol):
        return NO_CROSS
    d3 = _orient(p2x, p2y, q2x, q2y, p1x, p1y)
    d4 = _orient(p2x, p2y, q2x, q2y, q1x, q1y)
    if (d3 > tol and d4 > tol) or (d3 < -tol and d4 < -tol):
        return NO_CROSS
    if abs(d1) <= tol and abs(d2) <= tol and abs(d3) <= tol and abs(d4) <= tol:
        return DEG_COCIRCULAR
    if abs(d1) <= tol or abs(d2) <= tol or abs(d3) <= tol or abs(d4) <= tol:
        return DEG_TOUCH
    return CROSS


@njit(cache=True, nogil=True)
def seg_code(p1, q1, p2, q2):
    """Crossing code for open planar segments [p1 q1], [p2 q2]."""
    return _seg_core(p1[0], p1[1], q1[0], q1[1], p2[0], p2[1], q2[0], q2[1])


@njit(cache=True, nogil=True)
def seg_codes(P1, Q1, P2, Q2):
    k = P1.shape[0]
    out = np.empty(k, dtype=np.int8)
    for i in range(k):
        out[i] = _seg_core(P1[i, 0], P1[i, 1], Q1[i, 0], Q1[i, 1],
                           P2[i, 0], P2[i, 1], Q2[i, 0], Q2[i, 1])
    return out


# ---------------------------------------------------------------------------
# counting loops; each handles the edge rows [i0, i1) against all later edges


@njit(cache=True, nogil=True, inline="always")
def _pair_code(sphere, E1, E2, N, i, j):
    if sphere:
        return _arc_core(E1[i, 0], E1[i, 1], E1[i, 2], E2[i, 0], E2[i, 1], E2[i, 2],
                         N[i, 0], N[i, 1], N[i, 2],
                         E1[j, 0], E1[j, 1], E1[j, 2], E2[j, 0], E2[j, 1], E2[j, 2],
                         N[j, 0], N[j, 1], N[j, 2])
    return _seg_core(E1[i, 0], E1[i, 1], E2[i, 0], E2[i, 1], E1[j, 0], E1[j, 1], E2[j, 0], E2[j, 1])


@njit(cache=True, nogil=True)
def count_brute_rows(sphere, edges, E1, E2, N, i0, i1, degen_out):
    """Return (crossings, tested, adjacent, degenerate) for rows i0..i1-1.

    Degenerate pairs are written to ``degen_out`` up to its capacity.
    """
    m = edges.shape[0]
    cross = 0
    tested = 0
    adj = 0
    deg = 0
    cap = degen_out.shape[0]
    for i in range(i0, i1):
        u0 = edges[i, 0]
        u1 = edges[i, 1]
        for j in range(i + 1, m):
            v0 = edges[j, 0]
            v1 = edges[j, 1]
            if u0 == v0 or u0 == v1 or u1 == v0 or u1 == v1:
                adj += 1
                continue
            tested += 1
            c = _pair_code(sphere, E1, E2, N, i, j)
            if c == CROSS:
                cross += 1
            elif c != NO_CROSS:
                if deg < cap:
                    degen_out[deg, 0] = i
                    degen_out[deg, 1] = j
                deg += 1
    return cross, tested, adj, deg


@njit(cache=True, nogil=True)
def _bounds_overlap(sphere, C, R, i, j):
    if sphere:
        # caps: centre C, columns of R hold (cos r, sin r)
        d = C[i, 0] * C[j, 0] + C[i, 1] * C[j, 1] + C[i, 2] * C[j, 2]
        lim = R[i, 0] * R[j, 0] - R[i, 1] * R[j, 1]
        return d >= lim - 1e-12
    # boxes: centre C, half extents R
    return (abs(C[i, 0] - C[j, 0]) <= R[i, 0] + R[j, 0] + 1e-12
            and abs(C[i, 1] - C[j, 1]) <= R[i, 1] + R[j, 1] + 1e-12)


@njit(cache=True, nogil=True)
def count_grid_rows(sphere, edges, E1, E2, N, C, R, cell_of, ncell, dim,
                    order, cell_start, i0, i1, degen_out):
    """Pruned counting: only edges in neighbouring cells with overlapping bounds.

    ``order`` lists edge indices sorted by cell id and ``cell_start`` is the
    CSR offset table into it.  Each unordered pair is visited from its
    smaller edge index, so rows can be processed independently.  Edge ids
    inside each cell must be ascending.
    """
    cross = 0
    tested = 0
    adj = 0
    deg = 0
    cap = degen_out.shape[0]
    for i in range(i0, i1):
        u0 = edges[i, 0]
        u1 = edges[i, 1]
        ci = cell_of[i]
        cx = ci % ncell
        cy = (ci // ncell) % ncell
        cz = ci // (ncell * ncell) if dim == 3 else 0
        zlo = -1 if dim == 3 else 0
        zhi = 1 if dim == 3 else 0
        for dz in range(zlo, zhi + 1):
            z = cz + dz
            if z < 0 or z >= ncell:
                continue
            for dy in range(-1, 2):
                y = cy + dy
                if y < 0 or y >= ncell:
                    continue
                for dx in range(-1, 2):
                    x = cx + dx
                    if x < 0 or x >= ncell:
                        continue
                    cell = x + ncell * (y + ncell * z)
                    cs = cell_start[cell]
                    ce = cell_start[cell + 1]
                    # within a cell the edge ids are ascending: skip to j > i
                    k0 = cs + np.searchsorted(order[cs:ce], i, side="right")
                    for k in range(k0, ce):
                        j = order[k]
                        v0 = edges[j, 0]
                        v1 = edges[j, 1]
                        if u0 == v0 or u0 == v1 or u1 == v0 or u1 == v1:
                            adj += 1
                            continue
                        if not _bounds_overlap(sphere, C, R, i, j):
                            continue
                        tested += 1
                        c = _pair_code(sphere, E1, E2, N, i, j)
                        if c == CROSS:
                            cross += 1
                        elif c != NO_CROSS:
                            if deg < cap:
                                degen_out[deg, 0] = i
                                degen_out[deg, 1] = j
                            deg += 1
    return cross, tested, adj, deg


@njit(cache=True, nogil=True)
def smoothed_pair_values(near_ptr, near_idx, near_val, qx, qy,
                         adj_ptr, adj_idx, n):
    """Evaluate the kernel-smoothed edge density on query pairs.

    ``near_*`` is a CSR table: for query point q, the vertices within the
    kernel radius and their kernel weights.  Edges are visited as sorted
    unordered pairs (u < v) of the union of both neighbourhoods, and each
    contributes K_u(x) K_v(y) + K_v(x) K_u(y), so swapping x and y gives a
    bit-identical sum.
    """
    k = qx.shape[0]
    out = np.zeros(k)
    for t in range(k):
        a = qx[t]
        b = qy[t]
        la = near_ptr[a + 1] - near_ptr[a]
        lb = near_ptr[b + 1] - near_ptr[b]
        if la == 0 or lb == 0:
            continue
        # merge the two sorted neighbour lists
        ids = np.empty(la + lb, dtype=np.int64)
        kx = np.zeros(la + lb)
        ky = np.zeros(la + lb)
        ia = near_ptr[a]
        ib = near_ptr[b]
        ea = near_ptr[a + 1]
        eb = near_ptr[b + 1]
        s = 0
        while ia < ea or ib < eb:
            if ib >= eb or (ia < ea and near_idx[ia] < near_idx[ib]):
                ids[s] = near_idx[ia]
                kx[s] = near_val[ia]
                ia += 1
            elif ia >= ea or near_idx[ib] < near_idx[ia]:
                ids[s] = near_idx[ib]
                ky[s] = near_val[ib]
                ib += 1
            else:
                ids[s] = near_idx[ia]
                kx[s] = near_val[ia]
                ky[s] = near_val[ib]
                ia += 1
                ib += 1
            s += 1
        acc = 0.0
        for p in range(s):
            u = ids[p]
            # adjacency rows are sorted; look for partners v > u in the union
            q = p + 1
            for r in range(adj_ptr[u], adj_ptr[u + 1]):
                v = adj_idx[r]
                if v <= u:
                    continue
                while q < s and ids[q] < v:
                    q += 1
                if q >= s:
                    break
                if ids[q] == v:
                    acc += kx[p] * ky[q] + kx[q] * ky[p]
        out[t] = acc / (n * n)
    return out
