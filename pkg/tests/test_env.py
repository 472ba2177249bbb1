import pytest

import pyvhrnn.utils.env as env


def test_envs_success(monkeypatch):
    monkeypatch.setenv("PYVHRNN_LOG_LEVEL", " debug ")
    monkeypatch.setenv("PYVHRNN_WORKERS", "4")
    monkeypatch.setenv("PYVHRNN_SEED", "17")

    assert env.log_level() == "DEBUG", f"Expected DEBUG, got {env.log_level()}"
    assert env.workers() == 4, f"Expected 4, got {env.workers()}"
    assert env.seed() == 17, f"Expected 17, got {env.seed()}"


def test_envs_not_set(monkeypatch):
    for key in ("PYVHRNN_LOG_LEVEL", "PYVHRNN_WORKERS", "PYVHRNN_SEED"):
        monkeypatch.delenv(key, raising=False)

    assert env.log_level() is None
    assert env.workers() is None
    assert env.seed() is None


def test_envs_failed(monkeypatch):
    monkeypatch.setenv("PYVHRNN_WORKERS", "0")

    with pytest.raises(ValueError):
        env.workers()


def test_parse_env_first_key_wins(monkeypatch):
    monkeypatch.setenv("PYVHRNN_A", "first")
    monkeypatch.setenv("PYVHRNN_B", "second")

    value = env.parse_env(["PYVHRNN_A", "PYVHRNN_B"], str.upper)
    assert value == "FIRST", f"Expected FIRST, got {value}"


def test_parse_env_raises_when_missing(monkeypatch):
    monkeypatch.delenv("PYVHRNN_ABSENT", raising=False)

    with pytest.raises(ValueError):
        env.parse_env(["PYVHRNN_ABSENT"], str)
    assert env.parse_env(["PYVHRNN_ABSENT"], str, raise_if_not_found=False) is None
