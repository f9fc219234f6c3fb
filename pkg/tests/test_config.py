from __future__ import annotations

from pathlib import Path

import pytest

from models.config import SimConfig
from models.params import ContactParams, FrictionParams, MaterialParams, RssParams, SolverParams
from utils.errors import ConfigError

DEFAULT_TOML = Path(__file__).resolve().parent.parent / "resources" / "default.toml"


class TestDefaults:
    def test_derived_material_constants(self):
        mat = MaterialParams()
        assert mat.G == pytest.approx(1.0e6)
        assert mat.EI == pytest.approx(3.0e6 * 3.141592653589793 * 1e-12 / 4.0)
        assert MaterialParams(shear_modulus=2.0e6).G == 2.0e6

    def test_contact_tolerances(self):
        contact = ContactParams()
        assert contact.delta_m(1e-3) == pytest.approx(1e-8)
        assert contact.delta_bar(1e-3) == pytest.approx(1e-5)
        assert contact.K1(1e-3) == pytest.approx(1.5e6)
        assert ContactParams(delta=1e-6, delta_scaled=False).delta_bar(1e-3) == pytest.approx(1e-3)

    def test_friction_and_fluid(self):
        assert FrictionParams(slip_tolerance=1e-4).K2 == pytest.approx(1.5e5)
        assert RssParams().epsilon(1e-3) == pytest.approx(1.02e-3)

    def test_toml_matches_model_defaults(self):
        assert SimConfig.from_toml(DEFAULT_TOML) == SimConfig()


class TestValidation:
    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="friction.mew"):
            SimConfig.from_mapping({"friction": {"mew": 0.3}})

    def test_unknown_section(self):
        with pytest.raises(ConfigError):
            SimConfig.from_mapping({"gravity": {"g": 9.81}})

    def test_negative_friction(self):
        with pytest.raises(ConfigError, match="friction.mu"):
            SimConfig.from_mapping({"friction": {"mu": -0.1}})

    def test_line_search_constants(self):
        with pytest.raises(ValueError):
            SolverParams(m1=0.9, m2=0.1)

    def test_margin_must_exceed_tolerance(self):
        with pytest.raises(ConfigError, match="candidate_margin"):
            SimConfig.from_mapping({"contact": {"delta": 0.5, "candidate_margin": 0.2}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            SimConfig.from_toml(tmp_path / "absent.toml")

    def test_malformed_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[friction\nmu = 0.1\n")
        with pytest.raises(ConfigError):
            SimConfig.from_toml(path)


class TestOverrides:
    def test_applied(self):
        cfg = SimConfig().with_overrides(duration=0.5, stride=5, mu=0.3, num_flagella=3, out_dir="x")
        assert cfg.run.duration == 0.5
        assert cfg.run.stride == 5
        assert cfg.friction.mu == 0.3
        assert cfg.scenario.num_flagella == 3
        assert cfg.run.out_dir == "x"

    def test_untouched_when_none(self):
        cfg = SimConfig.from_mapping({"friction": {"mu": 0.2}})
        assert cfg.with_overrides() == cfg

    def test_validated(self):
        with pytest.raises(ConfigError):
            SimConfig().with_overrides(stride=0)

    def test_original_unchanged(self):
        cfg = SimConfig()
        cfg.with_overrides(mu=0.7)
        assert cfg.friction.mu == 0.0
