import numpy as np
import pandas as pd
import pytest

from cutspec.config import StudyConfig
from cutspec.errors import AssumptionViolated, CutSpecError, MalformedReport, NoRecords
from cutspec.problems import CircleSource, PlainEigen, PlainPoisson
from cutspec.study import (
    COLUMNS,
    ConvergenceRecord,
    ConvergenceStudy,
    Parallelize,
    emit_csv,
    fit_slope,
    prepare_mesh,
    read_csv,
    run_h_sweep,
    run_p_sweep,
    run_single,
    slopes_table,
    spectral_decay,
    to_dataframe,
)


class SmallCircle(CircleSource):
    radius = 0.3


def _records():
    return [
        ConvergenceRecord("CircleSource", 16, 0.125, 3, 1234, False, l2=1.5e-5, h1=3e-4, runtime=0.5),
        ConvergenceRecord("CircleSource", 8, 0.25, 3, 321, True, l2=2.0e-4, h1=1e-3, cond_A=1e3, cond_M=12.0),
        ConvergenceRecord("CircleSource", 16, 0.125, 3, 1234, True, l2=1.0e-5, h1=2.5e-4, cond_A=4e3),
        ConvergenceRecord("CircleEigen", 8, np.pi / 8, 3, 400, True, eig_errors=[1e-6, 2.5e-5]),
    ]


def test_fit_slope_recovers_power_law():
    h = np.array([0.5, 0.25, 0.125, 0.0625])
    assert fit_slope(h, h**3) == pytest.approx(3.0, abs=1e-9)
    assert fit_slope(h, 7 * h**-2) == pytest.approx(-2.0, abs=1e-9)


def test_fit_slope_uses_the_last_points():
    h = np.array([0.5, 0.25, 0.125, 0.0625])
    errors = np.array([1.0, h[1] ** 4, h[2] ** 4, h[3] ** 4])
    assert fit_slope(h, errors) == pytest.approx(4.0, abs=1e-9)
    assert np.isnan(fit_slope(h, [np.nan, np.nan, np.nan, 1.0]))


def test_spectral_decay():
    p = np.arange(2, 8)
    decay = spectral_decay(p, 10.0**-p)
    assert decay.monotone and decay.convex
    assert decay.rate == pytest.approx(1.0)
    assert decay.curvature == pytest.approx(0.0, abs=1e-12)
    stalled = spectral_decay(p, [1e-2, 1e-4, 1e-6, 1e-6, 2e-6, 1e-6])
    assert not stalled.monotone


def test_emit_csv_orders_records(tmp_path):
    path = emit_csv(_records(), tmp_path / "out" / "study.csv")
    table = pd.read_csv(path)
    assert list(table.columns) == COLUMNS
    assert list(zip(table["N"], table["stabilized"])) == [(8, True), (8, True), (16, True), (16, False)]


def test_emit_csv_needs_records(tmp_path):
    with pytest.raises(NoRecords) as error:
        emit_csv([], tmp_path / "study.csv")
    assert isinstance(error.value, CutSpecError)
    assert not (tmp_path / "study.csv").exists()


def test_single_record_file(tmp_path):
    path = emit_csv(_records()[:1], tmp_path / "study.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(COLUMNS)


def test_csv_round_trip(tmp_path):
    records = _records()
    records[0].l2 = 1 / 3
    path = emit_csv(records, tmp_path / "study.csv")
    parsed = read_csv(path)
    expected = to_dataframe(sorted(records, key=lambda r: r.sort_key))
    pd.testing.assert_frame_equal(to_dataframe(parsed), expected)
    assert parsed[-1].l2 == 1 / 3
    eigen = [r for r in parsed if r.problem == "CircleEigen"][0]
    assert eigen.eig_errors == [1e-6, 2.5e-5]
    assert np.isnan(eigen.l2)


def test_read_csv_needs_every_column(tmp_path):
    path = tmp_path / "partial.csv"
    pd.DataFrame({"problem": ["CircleSource"], "N": [8]}).to_csv(path, index=False)
    with pytest.raises(MalformedReport, match="Missing columns"):
        read_csv(path)


def test_slopes_table():
    h = [0.25, 0.125, 0.0625]
    records = [
        ConvergenceRecord("CircleSource", int(1 / x), x, 3, 0, True, l2=x**4, h1=x**3, cond_A=x**-2)
        for x in h
    ]
    table = slopes_table(records).set_index("quantity")
    assert table.loc["l2", "slope"] == pytest.approx(4.0)
    assert table.loc["h1", "slope"] == pytest.approx(3.0)
    assert table.loc["condA", "slope"] == pytest.approx(-2.0)
    assert table.loc["l2", "expected"] == 4
    assert "eig1" not in table.index


def test_run_single_poisson():
    result = run_single(PlainPoisson(), 4, 4)
    record = result.record
    assert record.dofs == 17**2
    assert record.l2 < 1e-3
    assert record.h1 > record.l2
    assert record.cond_A > 1
    assert record.runtime > 0
    assert result.solution is not None


def test_plain_poisson_is_unaffected_by_stabilization():
    stabilized = run_single(PlainPoisson(), 4, 3, True)
    plain = run_single(PlainPoisson(), 4, 3, False)
    # No interface, no ghost faces: both runs solve the same system
    np.testing.assert_allclose(
        stabilized.solution.coefficients, plain.solution.coefficients, rtol=1e-12, atol=1e-14
    )
    assert stabilized.record.l2 == pytest.approx(plain.record.l2, rel=1e-10)
    assert stabilized.record.cond_A == pytest.approx(plain.record.cond_A, rel=1e-8)


def test_run_single_eigen():
    problem = PlainEigen()
    reference = problem.reference_eigenvalues(3)
    result = run_single(problem, 4, 4, k=3, reference=reference, condition=False)
    assert len(result.record.eig_errors) == 3
    assert max(result.record.eig_errors) < 1e-3
    assert np.isnan(result.record.l2) and np.isnan(result.record.cond_A)
    assert result.eigen.eigenvectors.shape == (result.record.dofs, 3)


def test_prepare_mesh_checks_the_interface():
    problem = SmallCircle(shift=(0.5, 0.0))
    with pytest.raises(AssumptionViolated):
        prepare_mesh(problem, 2)
    mesh = prepare_mesh(problem, 2, override_assumption=True)
    assert mesh.is_classified


def test_study_runs_every_point():
    config = StudyConfig("PlainPoisson", N=[2, 4], p=2, stabilization="both", condition=False)
    study = ConvergenceStudy(config, show_progress=False)
    assert len(study.get_jobs()) == 4
    result = study()
    assert [(r.N, r.stabilized) for r in result.records] == [(2, True), (2, False), (4, True), (4, False)]
    assert result.skipped == []
    # Without interface the ghost penalty vanishes
    assert result.records[2].l2 == pytest.approx(result.records[3].l2, rel=1e-10)


def test_sequential_parallelize_matches_study():
    config = StudyConfig("PlainPoisson", N=[2, 4], p=2, condition=False)
    result = Parallelize(ConvergenceStudy(config, show_progress=False), num_workers=1)()
    assert [r.N for r in result.records] == [2, 4]


def test_h_sweep():
    config = StudyConfig("PlainPoisson", N=[2, 4, 8], p=3, condition=False)
    result, slopes = run_h_sweep(config, num_workers=1, show_progress=False)
    assert len(result.records) == 3
    l2 = slopes.set_index("quantity").loc["l2", "slope"]
    assert l2 > 2.5
    with pytest.raises(AssertionError):
        run_p_sweep(config, num_workers=1, show_progress=False)


def test_p_sweep():
    config = StudyConfig("PlainPoisson", sweep="p", N=2, p=[2, 3, 4, 5], condition=False)
    result, decay = run_p_sweep(config, num_workers=1, show_progress=False)
    assert [r.p for r in result.records] == [2, 3, 4, 5]
    assert decay[True].monotone
