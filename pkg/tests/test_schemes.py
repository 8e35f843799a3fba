from dataclasses import replace

import numpy as np
import pytest

from aerial_ris.objective import compute_rates
from aerial_ris.scenario import ScenarioConfig
from aerial_ris.schemes import (
    DEFAULT_SOLVER,
    SchemeSpec,
    compare_schemes,
    generate_scenario,
    initial_point,
    initial_points,
    po_position,
    run_scheme,
    run_seed,
)

FAST = replace(DEFAULT_SOLVER, max_iters=60)


@pytest.fixture(scope="module")
def scenario():
    return generate_scenario(4)


def test_generate_scenario_contract():
    a, b = generate_scenario(7), generate_scenario(7)
    np.testing.assert_array_equal(a.users, b.users)
    assert a.users.shape == (10, 3)
    assert np.all((a.users[:, :2] >= 0) & (a.users[:, :2] <= 1000)) and np.all(a.users[:, 2] == 0)
    assert generate_scenario(7, {"n_users": 3}).n_users == 3
    assert not np.array_equal(generate_scenario(8).users, a.users)
    with pytest.raises(ValueError):
        generate_scenario(0, {"z_bounds": (300.0, 150.0)})


def test_po_position():
    np.testing.assert_array_equal(po_position([[0, 0, 0], [100, 0, 0]], 150.0), [50.0, 0.0, 150.0])
    np.testing.assert_array_equal(po_position([[3.0, 4.0, 0.0]], 200.0), [3.0, 4.0, 200.0])
    for bad in (149.9, 300.1):
        with pytest.raises(ValueError):
            po_position([[0, 0, 0]], bad)


def test_scheme_spec_validation():
    assert SchemeSpec("plo").kind == "PLO"
    assert SchemeSpec("PO").mask == (1, 3)
    with pytest.raises(ValueError):
        SchemeSpec("XYZ")
    with pytest.raises(ValueError):
        SchemeSpec("PO", po_altitude="highest")


def test_initial_points_prefix_stable(scenario):
    one = initial_point(scenario, 5)
    three = initial_points(scenario, 5, 3)
    for a, b in zip(one.blocks(), three[0].blocks()):
        np.testing.assert_array_equal(a, b)
    assert not np.array_equal(three[1].position, three[0].position)


def test_pl_keeps_orientation_bit_exact(scenario):
    fixed = (0.0, 0.25, 1.0)
    res = run_scheme(SchemeSpec("PL", fixed_orientation=fixed), scenario, 1, FAST)
    for x in res.points:
        assert x.orientation.tobytes() == np.array(fixed).tobytes()
    assert len(res.points) == len(res.trace)


def test_po_keeps_position_and_uses_plo_altitude(scenario):
    plo, po = run_seed(2, [SchemeSpec("PO"), SchemeSpec("PLO")], lambda s: scenario, FAST)
    assert (plo.scheme, po.scheme) == ("PLO", "PO")
    z = plo.final.position[2]
    expected = po_position(scenario.users, z)
    for x in po.points:
        assert x.position.tobytes() == expected.tobytes()
    assert po.final.position[2] == z


def test_po_fallback_and_fixed_altitude(scenario):
    res = run_scheme(SchemeSpec("PO"), scenario, 0, replace(FAST, max_iters=2))
    assert res.final.position[2] == 150.0
    res = run_scheme(SchemeSpec("PO", po_altitude=222.0), scenario, 0, replace(FAST, max_iters=2), plo_altitude=170.0)
    assert res.final.position[2] == 222.0


def test_reported_rates_match_fresh_evaluation(scenario):
    for kind in ("PLO", "PL", "PO"):
        res = run_scheme(SchemeSpec(kind), scenario, 3, FAST)
        r = compute_rates(res.final, scenario)
        assert res.min_rate == pytest.approx(r.min(), rel=1e-9)
        assert res.avg_rate == pytest.approx(r.mean(), rel=1e-9)
        assert res.trace.metrics[-1]["min_rate"] == pytest.approx(r.min(), rel=1e-9)


@pytest.mark.parametrize("seed", [0, 1])
def test_plo_improves_on_its_start(seed):
    res = run_scheme(SchemeSpec("PLO"), generate_scenario(seed), seed, replace(DEFAULT_SOLVER, max_iters=400))
    assert res.min_rate >= res.trace.metrics[0]["min_rate"]


def test_more_starts_never_worse(scenario):
    one = run_scheme(SchemeSpec("PL"), scenario, 6, FAST, starts=1)
    two = run_scheme(SchemeSpec("PL"), scenario, 6, FAST, starts=2)
    assert two.trace.objective[-1] <= one.trace.objective[-1]
    with pytest.raises(ValueError):
        run_scheme(SchemeSpec("PL"), scenario, 6, FAST, starts=0)


def test_single_run_summary_is_the_trace():
    s = compare_schemes(None, [3], [SchemeSpec("PL")], FAST)
    (r,) = s.results
    np.testing.assert_array_equal(s.curves["PL"]["min_rate"], r.min_rate_curve())
    np.testing.assert_array_equal(s.curves["PL"]["avg_rate"], r.avg_rate_curve())
    assert s.finals["PL"]["min_rate"] == r.min_rate
    assert s.gains == {}


def test_duplicated_seeds_average_to_the_single_curve():
    single = compare_schemes(None, [5], [SchemeSpec("PLO")], FAST)
    double = compare_schemes(None, [5, 5], [SchemeSpec("PLO")], FAST)
    np.testing.assert_allclose(double.curves["PLO"]["min_rate"], single.curves["PLO"]["min_rate"], rtol=1e-15)


def test_seed_isolation_and_gains():
    cfg = ScenarioConfig(n_users=4)
    specs = [SchemeSpec("PLO"), SchemeSpec("PL"), SchemeSpec("PO")]
    alone = compare_schemes(cfg, [2], specs, FAST)
    batch = compare_schemes(cfg, [0, 2, 9], specs, FAST)
    pick = lambda s: {r.scheme: r for r in s.results if r.seed == 2}
    for kind, r in pick(alone).items():
        assert r.trace.objective == pick(batch)[kind].trace.objective
    finals = batch.finals
    for other in ("PL", "PO"):
        g = batch.gains[f"PLO_vs_{other}"]
        assert g["min_rate"] == pytest.approx(finals["PLO"]["min_rate"] / finals[other]["min_rate"] - 1)
        assert np.isfinite(g["avg_rate"])
    assert [row["seed"] for row in batch.per_seed] == [0, 2, 9]
    assert all(isinstance(row["PLO_beats_PL"], bool) for row in batch.per_seed)


def test_padding_holds_the_last_value():
    from aerial_ris.schemes import _padded_mean

    out = _padded_mean([np.array([1.0, 2.0, 3.0]), np.array([5.0])])
    np.testing.assert_array_equal(out, [3.0, 3.5, 4.0])


def test_compare_rejects_empty_input():
    with pytest.raises(ValueError):
        compare_schemes(None, [], [SchemeSpec("PL")], FAST)
    with pytest.raises(ValueError):
        compare_schemes(None, [1], [], FAST)
