"""Unit tests for config parsing, schemas and kind descriptions."""

import pytest

from heavytail.config import KINDS, SCHEMAS, describe_kind, load_config, validate
from heavytail.errors import ConfigError


def _write(tmp_path, text):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


def test_defaults_fill_in(tmp_path):
    cfg = load_config(_write(tmp_path, "[experiment]\nkind = subordinator\n"))
    assert cfg["kind"] == "subordinator"
    assert cfg["seed"] == 0
    assert cfg["samples"] == 100_000
    assert cfg["betas"] == (0.3, 0.5, 0.8)


def test_required_fields_enforced(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[experiment]\nkind = sssi\nalpha = 0.8\n"))


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(
            _write(tmp_path, "[experiment]\nkind = subordinator\nbogus = 1\n")
        )


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[experiment]\nkind = nonsense\n"))


def test_type_errors_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(
            _write(tmp_path, "[experiment]\nkind = subordinator\nsamples = many\n")
        )


def test_float_list_parsing(tmp_path):
    cfg = load_config(
        _write(tmp_path, "[experiment]\nkind = subordinator\nbetas = 0.2, 0.6\n")
    )
    assert cfg["betas"] == (0.2, 0.6)


def test_nonpositive_sizes_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(
            _write(tmp_path, "[experiment]\nkind = chain-fclt\nreplicates = 0\n")
        )


def test_seed_override_and_bounds(tmp_path):
    path = _write(tmp_path, "[experiment]\nkind = subordinator\nseed = 5\n")
    assert load_config(path)["seed"] == 5
    assert load_config(path, seed_override=9)["seed"] == 9
    with pytest.raises(ConfigError):
        validate({"kind": "subordinator", "seed": str(2**64)})


def test_missing_file_and_section(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.ini"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[other]\nkind = subordinator\n"))


def test_describe_lists_every_field():
    for kind in KINDS:
        text = describe_kind(kind)
        for f in SCHEMAS[kind]:
            assert f.name in text
    with pytest.raises(ConfigError):
        describe_kind("nope")
