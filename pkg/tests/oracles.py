"""Independent reference computations used only by the tests."""

import itertools

import numpy as np


def lp_rows(lp):
    """All constraints of ``lp`` as ``G x <= h`` plus equality rows ``E x = e``."""
    G, h = [], []
    for a, rhs, sense in zip(lp.A, lp.b, lp.row_senses):
        if sense == "<=":
            G.append(a)
            h.append(rhs)
        else:
            G.append(-a)
            h.append(-rhs)
    n = lp.n
    G.extend(np.eye(n))
    h.extend(np.ones(n))
    G.extend(-np.eye(n))
    h.extend(np.zeros(n))
    E = [lp.eq[0]] if lp.eq is not None else []
    e = [lp.eq[1]] if lp.eq is not None else []
    return np.array(G), np.array(h), np.array(E).reshape(-1, n), np.array(e)


def vertex_enumeration(lp, tol=1e-9):
    """Optimum over all vertices: every choice of n linearly independent
    active constraints (equalities always active). Returns ``(obj, x)`` or
    ``None`` when no vertex is feasible."""
    G, h, E, e = lp_rows(lp)
    n = lp.n
    need = n - E.shape[0]
    best = None
    sign = 1.0 if lp.sense == "max" else -1.0
    for rows in itertools.combinations(range(G.shape[0]), need):
        M = np.vstack([E, G[list(rows)]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, np.concatenate([e, h[list(rows)]]))
        if np.all(G @ x <= h + tol) and np.allclose(E @ x, e, atol=tol):
            val = sign * float(lp.c @ x)
            if best is None or val > best[0] + 1e-12:
                best = (val, x)
    if best is None:
        return None
    return sign * best[0], best[1]


def finite_difference_dual(lp, row, eps=1e-6):
    """Slope of the vertex-enumeration optimum w.r.t. row ``row``'s rhs (one-sided, +eps)."""
    from dataclasses import replace

    base = vertex_enumeration(lp)[0]
    if row < lp.b.size:
        b = lp.b.copy()
        b[row] += eps
        moved = replace(lp, b=b)
    else:
        moved = replace(lp, eq=(lp.eq[0], lp.eq[1] + eps))
    return (vertex_enumeration(moved)[0] - base) / eps


def naive_first_fit(inst, key, last=None, last_key=None):
    """Straight transcription: sort by (-key, index), take items while all capacities hold.

    Items flagged in ``last`` go after all others, sorted by ``-last_key``.
    """
    last = np.zeros(inst.n, dtype=bool) if last is None else last
    order = sorted(range(inst.n),
                   key=lambda j: (1, -last_key[j], j) if last[j] else (0, -key[j], j))
    used = np.zeros(inst.m)
    x = np.zeros(inst.n, dtype=np.uint8)
    for j in order:
        if np.all(used + inst.r[:, j] <= inst.b):
            used += inst.r[:, j]
            x[j] = 1
    return x


def is_maximal(inst, x):
    """No unselected item can be added without violating a constraint."""
    resid = inst.b - inst.r @ x
    for j in np.flatnonzero(x == 0):
        if np.all(inst.r[:, j] <= resid):
            return False
    return True
