import numpy as np
import pytest

from syncperm.distributions import NULL_STUDY_LAWS, DistributionSpec
from syncperm.errors import ConfigError
from syncperm.report import table_to_csv
from syncperm.simulation import (
    METHODS,
    EffectPattern,
    GridPoint,
    StudyConfig,
    build_power_setting,
    build_setting,
    generate_dataset,
    parse_config,
    replication_seed,
    run_replication,
    run_study,
)

R = 2 ** 0.25


class TestSettings:
    def test_null_examples(self):
        s = build_setting(1, 0)
        assert s.n == (5, 5, 5, 5) and s.sd == (1, 1, 1, 1)
        s = build_setting(5, 0)
        assert s.n == (5, 7, 10, 15) and s.sd == (2, 1.5, 1.3, 1)
        s = build_setting(5, 25)
        assert s.n == (30, 32, 35, 40) and s.sd == (2, 1.5, 1.3, 1)
        assert s.label == "negative-pairing"
        assert build_setting(4, 0).sd == (1, 1.3, 1.5, 2)

    def test_power_examples(self):
        assert build_power_setting(1).n == (10,) * 4
        s = build_power_setting(4)
        assert s.n == (9, 9, 15, 15) and s.sd == pytest.approx((1, 1, R, R))
        s = build_power_setting(5)
        assert s.n == (9, 9, 15, 15) and s.sd == pytest.approx((R, R, 1, 1))

    @pytest.mark.parametrize("args", [(0, 0), (6, 0), (1, 3)])
    def test_out_of_range(self, args):
        with pytest.raises(ConfigError):
            build_setting(*args)
        with pytest.raises(ConfigError):
            build_power_setting(9)


class TestEffectPattern:
    @pytest.mark.parametrize("cond,expected", [
        (1, (1, 1, -1, -1)), (2, (1, -1, 1, -1)), (3, (1, 0, -1, 0)),
    ])
    def test_cell_shifts(self, cond, expected):
        assert EffectPattern(cond, 1.0).cell_shifts == pytest.approx(expected)

    def test_zero_delta(self):
        assert EffectPattern(3, 0.0).cell_shifts == (0.0,) * 4

    def test_bad_condition(self):
        with pytest.raises(ConfigError):
            EffectPattern(4, 0.2)


def test_generate_dataset_shape_and_means():
    rng = np.random.default_rng(0)
    d = generate_dataset(build_power_setting(2), DistributionSpec("normal"), EffectPattern(1, 1.0), rng)
    assert tuple(d.n) == (9, 9, 15, 15)
    big = build_setting(1, 25)
    means = np.mean([
        [x.mean() for x in generate_dataset(big, DistributionSpec("lognormal"), EffectPattern(3, 1.0), rng).cells]
        for _ in range(400)
    ], axis=0)
    np.testing.assert_allclose(means, (1, 0, -1, 0), atol=0.05)


def test_replication_streams_are_distinct_and_stable():
    p = GridPoint("null", 1, 0, "normal", None, None)
    q = GridPoint("null", 1, 5, "normal", None, None)
    a = replication_seed(7, p, 0).generate_state(2)
    assert (a == replication_seed(7, p, 0).generate_state(2)).all()
    assert not (a == replication_seed(7, p, 1).generate_state(2)).all()
    assert not (a == replication_seed(7, q, 0).generate_state(2)).all()
    assert p.stable_hash() == GridPoint("null", 1, 0, "normal", None, None).stable_hash()


def test_replication_outcomes():
    cfg = StudyConfig(n_sim=1, n_perm=50)
    out = run_replication(cfg, GridPoint("null", 2, 0, "normal", None, None), 0)
    assert set(out) == {(e, m) for e in ("A", "AxB") for m in METHODS}
    assert set(out.values()) <= {"reject", "accept", "degenerate"}


def test_empty_study():
    assert len(run_study(StudyConfig(n_sim=0))) == 0


def test_null_grid_is_complete():
    cfg = StudyConfig(n_sim=1, n_perm=20)
    table = run_study(cfg)
    assert len(table) == 5 * 5 * 8 * 2 * 5 == 2000
    keys = {(r.setting, r.increment, r.distribution, r.effect, r.method) for r in table}
    assert len(keys) == 2000
    assert {r.distribution for r in table} == set(NULL_STUDY_LAWS)
    for r in table:
        assert r.rejections in (0, 1) and r.rate in (0.0, 1.0)


def test_conservation_of_counts():
    cfg = StudyConfig(settings=(3,), increments=(0,), distributions=("chi2_3",), n_sim=60, n_perm=50)
    for r in run_study(cfg, unit_size=25):
        assert 0 <= r.rejections <= r.n_sim - r.degenerate_count
        assert r.rate == r.rejections / r.n_sim


def test_strict_weighting_marks_skips():
    cfg = StudyConfig(settings=(1, 2), increments=(0,), distributions=("normal",),
                      n_sim=3, n_perm=20, sync_weighting="strict")
    table = run_study(cfg)
    for r in table:
        if r.setting == 2 and r.method in ("CSP", "USP"):
            assert r.skipped and r.rejections is None
        else:
            assert not r.skipped
    assert "skipped" in table_to_csv(table)


def test_power_grid():
    cfg = StudyConfig(study="power", settings=(1,), distributions=("normal",), conditions=(1,),
                      effects=("A",), methods=("WTS",), n_sim=4, n_perm=10)
    table = run_study(cfg)
    assert [r.delta for r in table] == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert all(r.condition == 1 for r in table)


def test_worker_count_does_not_change_output():
    cfg = StudyConfig(settings=(4,), increments=(0, 5), distributions=("normal", "mixed_skewed"),
                      n_sim=30, n_perm=40)
    one = table_to_csv(run_study(cfg, workers=1, unit_size=7))
    three = table_to_csv(run_study(cfg, workers=3, unit_size=7))
    default_units = table_to_csv(run_study(cfg, workers=1))
    assert one == three == default_units


class TestConfig:
    def test_parse(self):
        cfg = parse_config("""
            # a small run
            study = power
            settings = 1, 4
            distributions = normal, lognormal
            conditions = 1
            deltas = 0, 0.5, 1
            n_sim = 10
            seed = 99   # alias
            effects = A, A:B
        """)
        assert cfg.study == "power" and cfg.settings == (1, 4)
        assert cfg.master_seed == 99 and cfg.effects == ("A", "AxB")
        assert cfg.deltas == (0.0, 0.5, 1.0)

    def test_defaults(self):
        cfg = parse_config("")
        assert (cfg.n_sim, cfg.n_perm, cfg.alpha) == (5000, 5000, 0.05)
        assert cfg.distributions == NULL_STUDY_LAWS

    def test_unknown_keys_are_named(self):
        with pytest.raises(ConfigError, match="nsim, colour"):
            parse_config("nsim = 3\ncolour = red\n")

    @pytest.mark.parametrize("text", [
        "n_sim = lots", "study = pilot", "distributions = cauchy", "alpha = 1.5",
        "methods = WTS, FOO", "just a line", "n_perm = 0",
    ])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)
