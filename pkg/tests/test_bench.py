import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcalign.alignment import Method
from dcalign.bench import (
    SweepSpec,
    flops_hierarchy_holds,
    incremental_latency,
    ols_loglog,
    resolve_threads,
    run_sweep,
    sweep_anchors,
    write_sweep,
)
from dcalign.errors import FitError, ValidationError


def small_spec(**kw):
    base = dict(free_param="ell", fixed={"a": 60, "c": 3}, start=2, step=2, stop=6, repeats=1, seed=4)
    base.update(kw)
    return SweepSpec(**base)


def test_spec_values_and_validation():
    assert small_spec().values == [2, 4, 6]
    assert SweepSpec.from_dict({"free_param": "c", "fixed": {"a": 10, "ell": 2},
                                "range": [1, 1, 3]}).values == [1, 2, 3]
    with pytest.raises(ValidationError):
        small_spec(free_param="m")
    with pytest.raises(ValidationError):
        small_spec(fixed={"a": 60})
    with pytest.raises(ValidationError):
        small_spec(stop=1)
    with pytest.raises(ValidationError):
        small_spec(repeats=0)
    with pytest.raises(ValidationError):
        small_spec(methods=())
    assert SweepSpec.from_dict(small_spec().to_dict()) == small_spec()


def test_sweep_anchors_deterministic():
    s = small_spec()
    a1, a2 = sweep_anchors(s, 4), sweep_anchors(s, 4)
    assert len(a1) == 3 and a1[0].shape == (60, 4)
    assert all(np.array_equal(x, y) for x, y in zip(a1, a2))


def test_run_sweep_rows_and_output(tmp_path):
    result = run_sweep(small_spec(), threads=1)
    assert len(result.rows) == 9
    values = [r.value for r in result.rows]
    assert values == sorted(values)
    assert all(r.median_s > 0 and r.threads in (None, 1) for r in result.rows)
    assert result.metadata["flops_odc_below_baselines"] == {"2": True, "4": True, "6": True}
    csv_path, json_path = write_sweep(result, tmp_path / "out")
    with csv_path.open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["method", "free_param", "value", "median_s", "repeats", "threads", "svd_backend"]
    meta = json.loads(json_path.read_text())
    assert meta["sweep"]["free_param"] == "ell" and "host" in meta


def test_medians_by_method():
    result = run_sweep(small_spec(methods=("ODC",)))
    xs, ts = result.medians(Method.ODC)
    assert xs == [2, 4, 6] and len(ts) == 3


def test_threads_env(monkeypatch):
    monkeypatch.setenv("DC_MAX_THREADS", "2")
    assert resolve_threads() == 2
    assert resolve_threads(1) == 1
    monkeypatch.delenv("DC_MAX_THREADS")
    assert resolve_threads() is None


def test_hierarchy_helper():
    assert flops_hierarchy_holds(1000, 50, 50) is True
    assert flops_hierarchy_holds(1000, 950, 50) is False
    assert flops_hierarchy_holds(50, 50, 50) is None


# -- regressions ------------------------------------------------------------------

def test_exact_power_law():
    xs = np.array([50.0, 100, 150, 200, 400])
    fit = ols_loglog(xs, 5 * xs**2)
    assert abs(fit.alpha - 2) <= 1e-10 and abs(fit.kappa - np.log10(5)) <= 1e-10
    assert abs(fit.r_squared - 1) <= 1e-10


def test_constant_times():
    fit = ols_loglog([1, 2, 3, 4], [7.0] * 4)
    assert fit.alpha == pytest.approx(0.0, abs=1e-15) and fit.r_squared == 1.0


def test_noisy_power_law():
    rng = np.random.default_rng(0)
    xs = np.arange(50, 1001, 50, dtype=float)
    ts = 3 * xs**1.75 * (1 + 0.01 * rng.standard_normal(xs.size))
    fit = ols_loglog(xs, ts)
    assert 1.70 <= fit.alpha <= 1.80
    assert 0 <= fit.r_squared <= 1


def test_fit_errors():
    with pytest.raises(FitError):
        ols_loglog([2, 2, 2], [1, 2, 3])
    with pytest.raises(FitError):
        ols_loglog([1, 2], [1, 2])
    with pytest.raises(FitError):
        ols_loglog([1, 2, 3], [1, -2, 3])


def test_incremental_latency():
    cs = np.arange(50, 1001, 50)
    assert incremental_latency(cs, 0.001 * cs).slope == pytest.approx(0.001, abs=1e-15)
    fit = incremental_latency(cs, 2 + 0.003 * cs)
    assert abs(fit.slope - 0.003) <= 1e-10 and abs(fit.intercept - 2) <= 1e-10


@given(st.floats(-3, 3), st.floats(-2, 2), st.integers(3, 12))
def test_power_law_recovery_property(alpha, kappa, n):
    xs = np.geomspace(1, 1000, n)
    fit = ols_loglog(xs, 10**kappa * xs**alpha)
    assert abs(fit.alpha - alpha) <= 1e-10 and abs(fit.kappa - kappa) <= 1e-10
