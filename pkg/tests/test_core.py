import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mi_accountant.core import (
    BoundReport,
    Estimate,
    MechanismSchedule,
    NeighboringMode,
    ReplaceModeBounds,
    ScheduleError,
    ScheduleStep,
    ScheduleSummary,
    chunk_sizes,
    derive_seed,
    double_for_replace,
    hoeffding_halfwidth,
    normalize_dpsgd,
    round_sig,
    validate_schedule,
)


class TestValidateSchedule:
    def test_single_legal_step(self):
        s = MechanismSchedule((ScheduleStep(1.0, 1.0, 1.0),))
        assert validate_schedule(s) is s

    def test_zero_sigma(self):
        with pytest.raises(ScheduleError, match="sigma must be positive"):
            validate_schedule(MechanismSchedule((ScheduleStep(0.0, 1.0, 1.0),)))

    def test_empty(self):
        with pytest.raises(ScheduleError, match="schedule empty"):
            validate_schedule(MechanismSchedule(()))

    @pytest.mark.parametrize(
        "step, message",
        [
            (ScheduleStep(1.0, 1.5, 1.0), "q must lie in"),
            (ScheduleStep(1.0, -0.1, 1.0), "q must lie in"),
            (ScheduleStep(1.0, 0.5, -1.0), "r must be nonnegative"),
            (ScheduleStep(-2.0, 0.5, 1.0), "sigma must be positive"),
        ],
    )
    def test_reports_first_bad_index(self, step, message):
        s = MechanismSchedule((ScheduleStep(1.0), ScheduleStep(2.0), step, ScheduleStep(0.0)))
        with pytest.raises(ScheduleError, match=f"step 2: {message}"):
            validate_schedule(s)

    def test_boundary_values_are_legal(self):
        validate_schedule(MechanismSchedule((ScheduleStep(1e-9, 0.0, 0.0), ScheduleStep(1.0, 1.0, 0.0))))


class TestNormalizeDpsgd:
    def test_long_dpsgd_run(self):
        s = normalize_dpsgd(10.0, 2.0, 0.02, 2500)
        assert len(s) == 2500
        assert set(s.steps) == {ScheduleStep(2.0, 0.02, 1.0)}

    def test_identity(self):
        assert normalize_dpsgd(1.0, 1.0, 1.0, 1).steps == (ScheduleStep(1.0, 1.0, 1.0),)

    def test_clipping_is_irrelevant(self):
        assert normalize_dpsgd(5.0, 0.5, 0.1, 10) == normalize_dpsgd(1.0, 0.5, 0.1, 10)
        assert normalize_dpsgd(5.0, 0.5, 0.1, 10).steps == (ScheduleStep(0.5, 0.1, 1.0),) * 10

    @pytest.mark.parametrize("args", [(0, 1, 0.1, 1), (1, 0, 0.1, 1), (1, 1, 0.1, 0), (1, -1, 0.1, 5), (1, 1, 0.1, 2.5)])
    def test_rejects_nonpositive(self, args):
        with pytest.raises(ScheduleError):
            normalize_dpsgd(*args)


def test_schedule_is_immutable():
    s = MechanismSchedule.constant(1.0)
    with pytest.raises(dataclasses.FrozenInstanceError):
        s.steps = ()
    with pytest.raises(dataclasses.FrozenInstanceError):
        s.steps[0].sigma = 2.0


def test_homogeneity_uses_ratio():
    assert MechanismSchedule((ScheduleStep(1.0, 0.1, 1.0), ScheduleStep(2.0, 0.1, 2.0))).is_homogeneous
    assert not MechanismSchedule((ScheduleStep(1.0, 0.1, 1.0), ScheduleStep(1.0, 0.2, 1.0))).is_homogeneous


def test_summary_provenance():
    het = MechanismSchedule((ScheduleStep(1.0), ScheduleStep(2.0)), NeighboringMode.REPLACE)
    summary = ScheduleSummary.of(het)
    assert summary.provenance == "contribution-claim"
    assert summary.neighboring_mode == "replace"
    assert (summary.sigma_min, summary.sigma_max) == (1.0, 2.0)
    assert ScheduleSummary.of(MechanismSchedule.constant(1.0, steps=3)).provenance == "theorem"


def test_hoeffding_halfwidth():
    # sqrt(ln(200) / 2e6), evaluated with mpmath
    assert hoeffding_halfwidth(10**6, 0.99) == pytest.approx(0.001627623631, abs=1e-12)
    assert hoeffding_halfwidth(10**6, 0.99, value_range=2.0) == pytest.approx(2 * 0.001627623631, abs=1e-12)
    with pytest.raises(ValueError):
        hoeffding_halfwidth(0, 0.99)
    with pytest.raises(ValueError):
        hoeffding_halfwidth(10, 1.0)


def test_estimate_range():
    with pytest.raises(ValueError):
        Estimate(1.2, 0.01, 0.99, 10)
    e = Estimate(0.999, 0.01, 0.99, 10)
    assert e.upper == 1.0 and e.lower == pytest.approx(0.989)


@given(st.floats(0.0, 1.0))
def test_replace_doubling(v):
    doubled, vacuous = double_for_replace(v)
    assert doubled == min(1.0, 2.0 * v)
    assert vacuous == (2.0 * v > 1.0)


def test_replace_bounds_are_clamped_and_flagged():
    rb = ReplaceModeBounds.from_add_remove(Estimate(0.3, 0.01, 0.99, 100), 0.6, 0.97)
    assert rb.adv_tv == 0.6 and rb.adv_tv_ci == 0.02 and not rb.tv_vacuous
    assert rb.adv_pinsker == 1.0 and rb.pinsker_vacuous
    assert rb.adv_baseline_eps == 1.0 and rb.baseline_vacuous


def test_seed_policy():
    assert derive_seed(7, 0) == derive_seed(7, 0)
    assert len({derive_seed(7, i) for i in range(100)}) == 100
    assert derive_seed(7, 0) != derive_seed(8, 0)
    assert 0 <= derive_seed(2**63 - 1, 5) < 2**63


@settings(deadline=None)
@given(st.integers(1, 10**6), st.integers(16, 10**5))
def test_chunk_sizes_cover_total(total, size):
    sizes = chunk_sizes(total, size)
    assert sum(sizes) == total
    assert all(0 < s <= size for s in sizes)


def _report(**overrides):
    fields = dict(
        schedule=ScheduleSummary.of(MechanismSchedule.constant(1.0, 0.5, 1.0, 3, "replace")),
        adv_tv=Estimate(0.123456789123, 0.0016276236307, 0.99, 10**6),
        adv_pinsker=0.5,
        pinsker_alpha=1.0,
        pinsker_vacuous=False,
        adv_baseline_eps=0.9640275800758169,
        eps=4.000000000001,
        delta=1e-5,
        eps_alpha=7.0,
        replace=ReplaceModeBounds.from_add_remove(Estimate(0.123456789123, 0.0016, 0.99, 10**6), 0.5, 0.96),
        metadata={"seed": 3, "samples": 10**6},
    )
    fields.update(overrides)
    return BoundReport(**fields)


class TestBoundReport:
    def test_json_round_trip(self):
        r = _report()
        text = json.dumps(r.to_dict())
        back = BoundReport.from_dict(json.loads(text))
        assert back == r.rounded()
        assert json.dumps(back.to_dict()) == text

    def test_nine_significant_digits(self):
        d = _report().to_dict()
        assert d["adv_tv"]["value"] == 0.123456789
        assert d["eps"] == 4.0

    def test_round_trip_without_replace(self):
        r = _report(replace=None)
        assert BoundReport.from_dict(json.loads(json.dumps(r.to_dict()))) == r.rounded()

    def test_advantage_fields_in_range(self):
        with pytest.raises(ValueError):
            _report(adv_pinsker=1.5)


def test_round_sig_leaves_non_floats():
    assert round_sig({"a": [1, True, None, "x"], "b": 1 / 3}) == {"a": [1, True, None, "x"], "b": 0.333333333}
