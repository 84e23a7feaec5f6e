import numpy as np
import pytest

from strokeopt import manifold as mf
from strokeopt.stroke import SplineStroke, is_simple


@pytest.fixture(scope="session")
def cfg():
    return mf.SwimmerConfig(mu=0.3)


def random_manifold_points(mu, n, seed=0):
    """Random points on the ellipsoid (uniform on the sphere picture)."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(n, 3))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return w * (mu / np.sqrt(mf.ELLIPSOID_WEIGHTS))


def random_tangent(s, rng):
    """Random tangent vector at an ellipsoid point (ambient coordinates)."""
    n = mf.ELLIPSOID_WEIGHTS * s
    n = n / np.linalg.norm(n)
    v = rng.normal(size=3)
    v -= (v @ n) * n
    return v


def random_simple_strokes(count, seed=0, amp_range=(0.08, 0.35),
                          phi_margin=0.12, p=10):
    """Rejection-sampled simple single-chart strokes (PolarZ)."""
    rng = np.random.default_rng(seed)
    out = []
    t_check = np.linspace(0.0, 1.0, 512, endpoint=False)
    while len(out) < count:
        a0 = rng.uniform(-0.6 * np.pi, 0.6 * np.pi)
        b0 = rng.uniform(0.8, np.pi - 0.8)
        amp = rng.uniform(*amp_range)
        cand = SplineStroke(alpha=a0 + amp * rng.normal(size=p),
                            beta=b0 + amp * rng.normal(size=p))
        _, _, phi, _ = cand.chart_path(t_check)
        if phi.min() < phi_margin or phi.max() > np.pi - phi_margin:
            continue
        if not is_simple(cand):
            continue
        out.append(cand)
    return out
