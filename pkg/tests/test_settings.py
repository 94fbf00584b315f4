import pytest

from schemas.errors import ConfigError
from schemas.settings import Settings, load_settings


def test_defaults_without_environment():
    s = load_settings({})
    assert s == Settings()
    assert s.alpha == 0.05
    assert s.samples == 100_000
    assert s.tau_tol == 1e-4
    assert s.workers == 1
    assert s.log_level == "WARNING"
    assert s.prevalence_tolerance == 0.05


def test_environment_overrides():
    s = load_settings({"OBSCAUSAL_ALPHA": "0.1", "OBSCAUSAL_SAMPLES": "5000", "OBSCAUSAL_LOG_LEVEL": "debug"})
    assert s.alpha == 0.1
    assert s.samples == 5000
    assert s.log_level == "DEBUG"


def test_unrelated_variables_are_ignored():
    assert load_settings({"PATH": "/usr/bin", "OBSCAUSAL_WORKERS": ""}) == Settings()


def test_unknown_setting_rejected():
    with pytest.raises(ConfigError, match="OBSCAUSAL_SEEDS"):
        load_settings({"OBSCAUSAL_SEEDS": "3"})


@pytest.mark.parametrize(
    "key, value",
    [
        ("OBSCAUSAL_ALPHA", "1.5"),
        ("OBSCAUSAL_SAMPLES", "0"),
        ("OBSCAUSAL_TAU_TOL", "-1"),
        ("OBSCAUSAL_LOG_LEVEL", "LOUD"),
        ("OBSCAUSAL_WORKERS", "many"),
    ],
)
def test_invalid_values_raise_config_error(key, value):
    with pytest.raises(ConfigError):
        load_settings({key: value})


def test_dotenv_file_is_read(tmp_path, monkeypatch):
    (tmp_path / ".env").write_text("OBSCAUSAL_TAU_TOL=1e-6\n")
    monkeypatch.chdir(tmp_path)
    # set then delete so teardown removes whatever load_dotenv writes
    monkeypatch.setenv("OBSCAUSAL_TAU_TOL", "1")
    monkeypatch.delenv("OBSCAUSAL_TAU_TOL")
    assert load_settings().tau_tol == 1e-6
