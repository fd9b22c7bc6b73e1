"""Configuration parsing, normalization and round-tripping."""

import pytest
from numpy.testing import assert_allclose

from forcebench.config import RunConfig, emit_config, load_config, parse_config
from forcebench.errors import ConfigError


class TestDefaults:
    def test_empty_document_gets_all_defaults(self):
        cfg = parse_config("")
        assert cfg.J_m == 0.1 and cfg.K_tau == 0.5
        assert cfg.J_mn == cfg.J_m and cfg.K_tau_i == cfg.K_tau
        assert cfg.g_dob == 500.0 and cfg.T_s == 1e-3
        assert cfg.K_env == 4000.0 and cfg.D_env == 12.0
        assert cfg.m_bind == cfg.J_m
        assert cfg.contact == "bilateral" and cfg.substeps == 1
        assert not cfg.has_ratio_override

    def test_nominal_defaults_follow_plant(self):
        cfg = parse_config("[plant]\nJ_m = 0.2\nK_tau = 0.8\n")
        assert cfg.J_mn == 0.2 and cfg.K_tau_n == 0.8
        assert cfg.J_mi == 0.2 and cfg.K_tau_i == 0.8
        assert cfg.m_bind == 0.2


class TestValidation:
    def test_unknown_section_line_number(self):
        with pytest.raises(ConfigError, match="line 2") as info:
            parse_config("\n[gearbox]\nratio = 3\n")
        assert "gearbox" in str(info.value)

    def test_unknown_key_line_number(self):
        text = "[plant]\nJ_m = 0.1\nJ_x = 3.0\n"
        with pytest.raises(ConfigError, match="line 3"):
            parse_config(text)

    def test_type_errors(self):
        with pytest.raises(ConfigError, match="expected a number"):
            parse_config('[plant]\nJ_m = "heavy"\n')
        with pytest.raises(ConfigError, match="expected an integer"):
            parse_config("[simulation]\nsubsteps = 1.5\n")

    def test_syntax_error(self):
        with pytest.raises(ConfigError, match="syntax"):
            parse_config("[plant\nJ_m = 1\n")

    def test_domain_validation(self):
        with pytest.raises(ConfigError, match="J_m"):
            parse_config("[plant]\nJ_m = -1.0\n")
        with pytest.raises(ConfigError, match="contact"):
            parse_config('[simulation]\ncontact = "floating"\n')


class TestRatioOverride:
    def test_two_of_three_fill_in(self):
        cfg = parse_config("[ratio_override]\nalpha = 0.5\ndelta = 1.0\n")
        assert_allclose(cfg.ratio_beta, 0.5)
        # materialized servo realization
        assert_allclose(cfg.J_mn, 0.5 * cfg.J_m)
        assert_allclose(cfg.J_mi, 1.0 * cfg.J_m)
        assert cfg.K_tau_n == cfg.K_tau == cfg.K_tau_i

    def test_single_value_rejected(self):
        with pytest.raises(ConfigError, match="at least two"):
            parse_config("[ratio_override]\nalpha = 0.5\n")

    def test_inconsistent_triple_rejected(self):
        with pytest.raises(ConfigError, match="inconsistent"):
            parse_config("[ratio_override]\nalpha = 1.0\nbeta = 2.0\ndelta = 1.0\n")

    def test_override_drives_force_loop(self):
        cfg = parse_config("[ratio_override]\nalpha = 2.0\ndelta = 0.1\n")
        loop_cfg = cfg.force_loop()
        assert loop_cfg.ratio_override is not None
        assert_allclose(loop_cfg.ratios.alpha, 2.0)
        assert_allclose(loop_cfg.ratios.delta, 0.1)


class TestRoundTrip:
    def test_normalized_round_trip(self):
        text = """
[plant]
J_m = 0.25
[observer]
g_dob = 750.0
[simulation]
tau_ref_mode = "step"
tau_ref_value = 2.5
seed = 7
[ratio_override]
alpha = 1.5
delta = 0.75
[sweep]
alpha = [0.5, 1.0]
bode_points = 16384
"""
        cfg = parse_config(text)
        assert parse_config(emit_config(cfg)) == cfg

    def test_default_round_trip(self):
        cfg = parse_config("")
        assert parse_config(emit_config(cfg)) == cfg

    def test_samples_round_trip(self):
        cfg = parse_config(
            '[simulation]\ntau_ref_mode = "samples"\ntau_ref_samples = [0.0, 0.5, 1.0]\n')
        again = parse_config(emit_config(cfg))
        assert again.tau_ref_samples == (0.0, 0.5, 1.0)
        assert again == cfg


class TestScenario:
    def test_scenario_carries_seed_override(self):
        cfg = parse_config("[simulation]\nnoise_sigma = 0.001\nseed = 3\n")
        assert cfg.scenario().noise.seed == 3
        assert cfg.scenario(seed=9).noise.seed == 9

    def test_shipped_configs_load(self, tmp_path):
        import pathlib

        configs = pathlib.Path(__file__).resolve().parent.parent / "configs"
        for path in sorted(configs.glob("*.toml")):
            cfg = load_config(path)
            assert isinstance(cfg, RunConfig)
            cfg.force_loop()  # materializes without error
