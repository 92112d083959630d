"""Shared helpers for building small test instances."""

import numpy as np
import pytest

from flexsum import BatteryModel, build_base_set

WIDE = 1e4


def box_model(u_lo, u_hi, delta=1.0):
    """Battery model that is a pure power box (energy rows slack)."""
    T = len(u_hi)
    return BatteryModel(u_lo=u_lo, u_hi=u_hi, x_lo=[-WIDE] * T, x_hi=[WIDE] * T, delta=delta)


def random_battery_2d(rng, force_box=False):
    """Random nonempty full-dimensional 2D battery model.

    The energy band is centered on the cumulative profile of the power box
    midpoint, which keeps the set nonempty with a strict interior.
    """
    u_lo = rng.uniform(-3.0, -0.2, size=2)
    u_hi = rng.uniform(0.5, 3.0, size=2)
    if force_box:
        return box_model(u_lo, u_hi)
    mid = (u_lo + u_hi) / 2.0
    cum = np.cumsum(mid)
    span = rng.uniform(0.6, 2.5, size=2)
    return BatteryModel(u_lo=u_lo, u_hi=u_hi, x_lo=cum - span, x_hi=cum + span, delta=1.0)


def random_population_2d(rng, n=2, force_box=False):
    models = [random_battery_2d(rng, force_box=force_box) for _ in range(n)]
    return models, build_base_set(models)


def point_in_polygon(vertices, point, tol):
    """Tolerance-aware membership of a point in a convex CCW polygon."""
    v = np.asarray(vertices, dtype=float)
    p = np.asarray(point, dtype=float)
    scale = max(1.0, float(np.max(np.abs(v))))
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < -tol * scale:
            return False
    return True


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
