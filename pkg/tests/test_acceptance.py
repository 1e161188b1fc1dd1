"""Convergence studies on the registered problems. Run with ``pytest -m slow``."""
import numpy as np
import pytest

from cutspec.config import StudyConfig
from cutspec.problems import CircleEigen, CircleSource
from cutspec.study import compute_reference_eigenvalues, run_h_sweep, run_p_sweep, run_single

pytestmark = pytest.mark.slow


def _slope(slopes, quantity, stabilized=True):
    rows = slopes[(slopes["quantity"] == quantity) & (slopes["stabilized"] == stabilized)]
    return float(rows["slope"].iloc[0])


@pytest.fixture(scope="module")
def circle_h_sweep():
    config = StudyConfig("CircleSource", N=[8, 16, 32, 64], p=3, stabilization="both")
    return run_h_sweep(config, show_progress=False)


def test_circle_h_convergence(circle_h_sweep):
    _, slopes = circle_h_sweep
    assert 3.6 <= _slope(slopes, "l2") <= 4.4
    assert 2.6 <= _slope(slopes, "h1") <= 3.4


def test_circle_conditioning(circle_h_sweep):
    result, slopes = circle_h_sweep
    assert -2.6 <= _slope(slopes, "condA") <= -1.5
    finest = {r.stabilized: r for r in result.records if r.N == 64}
    assert finest[False].cond_A >= 10 * finest[True].cond_A


def test_circle_p_convergence():
    config = StudyConfig("CircleSource", sweep="p", N=16, p=[2, 3, 4, 5, 6], condition=False)
    result, decay = run_p_sweep(config, show_progress=False)
    assert decay[True].monotone
    assert decay[True].convex
    assert result.records[-1].l2 < 1e-8


def test_flower_h_convergence():
    config = StudyConfig("FlowerSource", N=[8, 16, 32, 64], p=3, condition=False)
    _, slopes = run_h_sweep(config, show_progress=False)
    assert 3.5 <= _slope(slopes, "l2") <= 4.5


def test_eigenvalue_h_convergence():
    config = StudyConfig("CircleEigen", N=[8, 16, 24, 32], p=3, k=3, condition=False)
    _, slopes = run_h_sweep(config, show_progress=False)
    for quantity in ("eig1", "eig2", "eig3"):
        assert 5.0 <= _slope(slopes, quantity) <= 7.0


def test_small_cut_robustness():
    errors = []
    for eps in (1e-3, 1e-6, 1e-9):
        result = run_single(CircleSource(shift=(eps, eps)), 16, 3, condition=False)
        errors.append(result.record.l2)
    assert np.all(np.isfinite(errors))
    assert max(errors) < 2 * min(errors)


def test_pinned_circle_eigen_reference_is_reproduced():
    problem = CircleEigen()
    pinned = problem.reference_eigenvalues(3)
    assert pinned is not None
    fresh = compute_reference_eigenvalues(problem, 3)
    np.testing.assert_allclose(fresh, pinned, rtol=1e-7)
