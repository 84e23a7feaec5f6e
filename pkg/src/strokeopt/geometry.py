"""Control-geometric layer: spanning fields, Lie brackets, and the rank test.

States are 4-vectors xi = (s1, s2, s3, r): a point of the ellipsoid plus the
net displacement coordinate.  The three spanning fields X_j of the tangent
distribution lift to fields Z_j = (X_j, L(X_j)) on the extended space; their
iterated brackets certify controllability through a numerical rank test.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .errors import ZeroControl
from .hydro import one_form

# finite-difference step for Jacobians (one Richardson extrapolation on top)
_BRACKET_STEP = 1e-5


def field_X(j: int, s):
    """Spanning tangent field X_j (j in {1,2,3}) at s; broadcasts."""
    s = np.asarray(s, dtype=float)
    s1, s2, s3 = s[..., 0], s[..., 1], s[..., 2]
    zero = np.zeros_like(s1)
    if j == 1:
        comps = [3.0 * s3 * (1.0 - s1), zero, s1 * (s1 - 1.0)]
    elif j == 2:
        comps = [2.0 * s2 * (1.0 - s1), s1 * (s1 - 1.0), zero]
    elif j == 3:
        comps = [zero, 3.0 * s3 * (1.0 - s1), 2.0 * s2 * (s1 - 1.0)]
    else:
        raise ValueError(f"field index must be 1, 2 or 3, got {j}")
    return np.stack(comps, axis=-1)


def _lift(j: int, s):
    """Displacement-rate component of Z_j as an explicit polynomial.

    These are the expanded forms of L(X_j); the cross-module tests check them
    against one_form(s, X_j) pointwise.
    """
    s = np.asarray(s, dtype=float)
    s1, s2, s3 = s[..., 0], s[..., 1], s[..., 2]
    if j == 1:
        return 4.5 * s2 * s3 - 3.0 * s1 * s2 * s3 - 4.5 * s2 * s3**2 \
            - s1 * s2 + 1.5 * s1**2 * s2
    if j == 2:
        return 3.0 * s2**2 - 2.0 * s1 * s2**2 - 3.0 * s2**2 * s3 \
            - 0.5 * s1**2 - 2.0 * s1 * s3 + 0.5 * s1**3 + 1.5 * s1**2 * s3
    if j == 3:
        return 1.5 * s1 * s3 + 6.0 * s3**2 - 1.5 * s1**2 * s3 \
            - 4.5 * s1 * s3**2 - 2.0 * s2**2 + 3.0 * s1 * s2**2
    raise ValueError(f"field index must be 1, 2 or 3, got {j}")


def field_Z(j: int, xi):
    """Lifted field Z_j(xi) = (X_j(s), L_s(X_j(s))) as a 4-vector; broadcasts."""
    xi = np.asarray(xi, dtype=float)
    s = xi[..., :3]
    return np.concatenate([field_X(j, s), _lift(j, s)[..., None]], axis=-1)


def bracket_z1_z2(xi):
    """Closed form of the bracket [Z_1, Z_2]; the oracle for the numeric engine.

    Expanded symbolically from the Z fields under the convention
    [f, g] = Dg f - Df g used by lie_bracket.
    """
    xi = np.asarray(xi, dtype=float)
    s1, s2, s3 = xi[..., 0], xi[..., 1], xi[..., 2]
    zero = np.zeros_like(s1)
    fourth = (
        1.5 * s1 * s3 + 3.0 * s1**2 * s2**2 - 1.5 * s1**3 * s3
        - 4.5 * s1**2 * s3**2 + 10.5 * s1 * s3**2 + s1**2 - 6.0 * s3**2
        - s1**3 - 5.0 * s1 * s2**2 + 2.0 * s2**2
    )
    return np.stack(
        [
            zero,
            -3.0 * s3 * (2.0 * s1 - 1.0) * (s1 - 1.0),
            2.0 * s2 * (2.0 * s1 - 1.0) * (s1 - 1.0),
            fourth,
        ],
        axis=-1,
    )


def _jacobian(f, xi, step):
    """Central-difference Jacobian with one Richardson extrapolation."""
    xi = np.asarray(xi, dtype=float)
    n = xi.size

    def central(h):
        cols = []
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            cols.append((np.asarray(f(xi + e)) - np.asarray(f(xi - e))) / (2.0 * h))
        return np.stack(cols, axis=-1)

    j1 = central(step)
    j2 = central(step / 2.0)
    return (4.0 * j2 - j1) / 3.0


def lie_bracket(f, g, xi, step: float = _BRACKET_STEP):
    """[f, g](xi) = Dg(xi) f(xi) - Df(xi) g(xi) with numeric Jacobians."""
    xi = np.asarray(xi, dtype=float)
    df = _jacobian(f, xi, step)
    dg = _jacobian(g, xi, step)
    return dg @ np.asarray(f(xi)) - df @ np.asarray(g(xi))


def _bracket_closure(f, g):
    return lambda xi: lie_bracket(f, g, xi)


def _bracket_tower(depth: int):
    """Fields and iterated brackets, grouped by bracket depth."""
    base = [lambda xi, j=j: field_Z(j, xi) for j in (1, 2, 3)]
    levels = [base]
    for d in range(2, depth + 1):
        layer = []
        if d == 2:
            for a, b in combinations(base, 2):
                layer.append(_bracket_closure(a, b))
        else:
            for a in base:
                for b in levels[d - 2]:
                    layer.append(_bracket_closure(a, b))
            for i in range(1, d - 2):
                jj = d - 2 - i
                if jj > i:
                    for a in levels[i]:
                        for b in levels[jj]:
                            layer.append(_bracket_closure(a, b))
                elif jj == i:
                    for a, b in combinations(levels[i], 2):
                        layer.append(_bracket_closure(a, b))
        levels.append(layer)
    return levels


def lie_rank(xi, depth: int = 2, threshold: float = 1e-6) -> int:
    """Numerical rank of {Z_j and iterated brackets up to depth} at xi.

    Rank via SVD with a relative threshold; depth is capped at 4 because
    nested finite-difference Jacobians degrade beyond that.
    """
    if not 1 <= depth <= 4:
        raise ValueError("depth must lie in 1..4")
    xi = np.asarray(xi, dtype=float)
    cols = []
    for layer in _bracket_tower(depth):
        for fld in layer:
            cols.append(np.asarray(fld(xi), dtype=float))
    m = np.stack(cols, axis=-1)
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int((sv > threshold * sv[0]).sum())


def reparameterize_constant_speed(t, u, T_new: float):
    """Reparameterize a sampled control to constant norm on [0, T_new].

    Preserves the L1 norm and the traced curve; the output control has
    norm alpha = ||u||_L1 / T_new at every sample.  Raises ZeroControl for
    an essentially zero input.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    n = len(t) - 1
    if n < 64:
        raise ValueError("need at least 64 intervals to resolve the speed")

    v = np.linalg.norm(u, axis=1)
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])
    l1 = arc[-1]
    if l1 < 1e-14:
        raise ZeroControl("control has (numerically) zero L1 norm")
    alpha = l1 / T_new

    # invert the (weakly) monotone arclength profile; flats are collapsed
    keep = np.concatenate([[True], np.diff(arc) > 0.0])
    arc_m, t_m = arc[keep], t[keep]
    t_new = np.linspace(0.0, T_new, n + 1)
    t_src = np.interp(t_new * alpha, arc_m, t_m)

    u_src = np.stack([np.interp(t_src, t, u[:, k]) for k in range(u.shape[1])], axis=1)
    norms = np.linalg.norm(u_src, axis=1)
    bad = norms < 1e-12 * v.max()
    if np.any(bad):
        # dead-zone boundary: borrow the direction of the nearest live sample
        live = np.nonzero(~bad)[0]
        for i in np.nonzero(bad)[0]:
            u_src[i] = u_src[live[np.argmin(np.abs(live - i))]]
        norms = np.linalg.norm(u_src, axis=1)
    u_new = u_src * (alpha / norms)[:, None]
    return t_new, u_new
