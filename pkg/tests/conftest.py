import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def unit_vectors():
    """Hypothesis strategy for unit 3-vectors (rejecting tiny raw vectors)."""
    coord = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
    return (
        st.tuples(coord, coord, coord)
        .map(np.array)
        .filter(lambda v: np.linalg.norm(v) > 1e-3)
        .map(lambda v: v / np.linalg.norm(v))
    )


def orient_exact(p, q, r) -> int:
    """Sign of (q - p) x (r - p) in exact rational arithmetic."""
    px, py, qx, qy, rx, ry = (Fraction(float(c)) for c in (*p, *q, *r))
    d = (qx - px) * (ry - py) - (qy - py) * (rx - px)
    return (d > 0) - (d < 0)


def segments_cross_exact(p1, q1, p2, q2):
    """True/False for a proper crossing, None for any touching or collinear case."""
    o1 = orient_exact(p1, q1, p2)
    o2 = orient_exact(p1, q1, q2)
    o3 = orient_exact(p2, q2, p1)
    o4 = orient_exact(p2, q2, q1)
    if 0 in (o1, o2, o3, o4):
        return None
    return o1 != o2 and o3 != o4


def gnomonic_oracle(a1, b1, a2, b2, margin=0.05):
    """Project to the tangent plane at the mean direction; arcs become segments.

    Returns None when the four points are not safely in one open hemisphere.
    """
    pts = np.array([a1, b1, a2, b2])
    c = pts.sum(axis=0)
    if np.linalg.norm(c) < 1e-6:
        return None
    c = c / np.linalg.norm(c)
    if np.min(pts @ c) < margin:
        return None
    e1 = np.cross(c, [1.0, 0.0, 0.0] if abs(c[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    proj = [(p @ e1 / (p @ c), p @ e2 / (p @ c)) for p in pts]
    return segments_cross_exact(*proj)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, k):
    v = rng.standard_normal((k, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


SQRT2_2 = math.sqrt(2.0) / 2.0


# one pass/fail line per acceptance criterion, printed in the terminal summary
_ACCEPTANCE: dict[int, list] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    detail = dict(report.user_properties).get("detail", "")
    _ACCEPTANCE.setdefault(crit, []).append((report.nodeid.split("::")[-1], report.outcome, detail))


def pytest_runtest_setup(item):
    m = item.get_closest_marker("acceptance")
    if m is not None:
        item.user_properties.append(("criterion", int(m.args[0])))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        runs = _ACCEPTANCE[crit]
        ok = all(outcome == "passed" for _, outcome, _ in runs)
        details = "; ".join(d for _, _, d in runs if d)
        terminalreporter.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}  {details}")


@pytest.fixture
def detail(request):
    """Attach a one-line summary to the acceptance report of the running test."""
    def put(text):
        request.node.user_properties.append(("detail", text))
    return put
