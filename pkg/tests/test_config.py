"""Flat key=value configuration files: parsing, typing, validation."""

import pytest

from voxelcodec.config import (
    CodecConfig,
    config_from_values,
    load_config,
    parse_config_text,
)
from voxelcodec.errors import ConfigError


def test_parse_text_basics():
    text = """
    # a comment line
    depth = 10
    max_level=3          # trailing comment
    extension = yes

    model.64 = weights/m64.vxdw
    """
    values = parse_config_text(text)
    assert values == {"depth": "10", "max_level": "3", "extension": "yes",
                      "model.64": "weights/m64.vxdw"}


def test_parse_text_reports_line_numbers():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config_text("depth = 9\n\nnot-an-assignment\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("= 5\n")


def test_typed_config_from_values():
    cfg = config_from_values({"depth": "12", "max_level": "2",
                              "extension": "on", "single_model": "off",
                              "seed": "0x10", "model.32": "a.bin",
                              "model.64": "b.bin"})
    assert cfg.depth == 12
    assert cfg.max_level == 2
    assert cfg.use_extension is True
    assert cfg.single_model is False
    assert cfg.seed == 16
    assert cfg.model_paths == {32: "a.bin", 64: "b.bin"}


def test_defaults():
    cfg = config_from_values({})
    assert (cfg.depth, cfg.max_level) == (9, 5)
    assert cfg.use_extension is False and cfg.single_model is False
    assert cfg.model_paths == {}


@pytest.mark.parametrize("values,msg", [
    ({"unknown_key": "1"}, "unknown configuration key"),
    ({"depth": "banana"}, "expected an integer"),
    ({"extension": "maybe"}, "expected a boolean"),
    ({"depth": "6"}, "depth"),
    ({"depth": "17"}, "depth"),
    ({"max_level": "0"}, "max_level"),
    ({"max_level": "6"}, "max_level"),
    ({"extension": "1", "single_model": "1"}, "mutually exclusive"),
    ({"model.13": "x.bin"}, "unsupported block size"),
    ({"model.big": "x.bin"}, "bad model size"),
])
def test_invalid_configs_rejected(values, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_values(values)


def test_validate_returns_self():
    cfg = CodecConfig(depth=8)
    assert cfg.validate() is cfg


def test_load_config_file(tmp_path):
    p = tmp_path / "codec.cfg"
    p.write_text("depth = 8\nmodel.8 = m8.bin\n", encoding="utf-8")
    cfg = load_config(str(p))
    assert cfg.depth == 8
    assert cfg.model_paths == {8: "m8.bin"}
