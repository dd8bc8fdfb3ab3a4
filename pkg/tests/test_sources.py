import numpy as np
import pytest

from fracspec.exceptions import ConfigError
from fracspec.sources import (Source, abs_sin_shift, constant_source, parse_source, power_exp,
                              sin_shift, tabulated, zero_source)


def test_builtin_values():
    t = np.array([0.0, 0.25, 1.0])
    np.testing.assert_allclose(sin_shift(1.0)(t), np.sin(t - 0.5))
    np.testing.assert_allclose(abs_sin_shift(2.0)(t), np.abs(np.sin(t - 1.0)))
    np.testing.assert_allclose(power_exp(0.3)(t), t ** 0.3 * np.exp(t))
    assert np.all(zero_source()(t) == 0)
    np.testing.assert_allclose(constant_source(2.5)(t), 2.5)


def test_pieces_follow_breakpoints():
    assert abs_sin_shift(2.0).pieces(2.0) == [(0.0, 1.0), (1.0, 2.0)]
    assert sin_shift().pieces(1.0) == [(0.0, 1.0)]
    assert Source(np.cos, breakpoints=(3.0, 0.5)).pieces(1.0) == [(0.0, 0.5), (0.5, 1.0)]


def test_origin_power_validated():
    with pytest.raises(ConfigError):
        Source(np.exp, origin_power=-1.0)


@pytest.mark.parametrize("spec, expected", [
    ("sin-shift", "sin-shift"),
    ("abs-sin-shift", "abs-sin-shift"),
    ("power-exp:sigma=0.3", "power-exp:sigma=0.3"),
    ("power-exp:1", "power-exp:sigma=1"),
    ("zero", "zero"),
    ("const:2", "const:2.0"),
    ("const:c=3", "const:3.0"),
])
def test_parse_source(spec, expected):
    assert parse_source(spec).name == expected


def test_parse_source_power():
    src = parse_source("power-exp:sigma=0.5")
    assert src.origin_power == 0.5


@pytest.mark.parametrize("spec", ["cosine", "power-exp", "const:abc", "file:/nonexistent/x.txt"])
def test_parse_source_errors(spec):
    with pytest.raises(ConfigError):
        parse_source(spec)


def test_tabulated_source(tmp_path):
    t = np.linspace(0, 1, 41)
    path = tmp_path / "f.csv"
    np.savetxt(path, np.column_stack([t, t ** 2]), delimiter=",", header="t,f")
    src = parse_source(f"file:{path}")
    np.testing.assert_allclose(src(np.array([0.33, 0.71])), [0.33 ** 2, 0.71 ** 2], atol=1e-12)
    txt = tmp_path / "f.txt"
    np.savetxt(txt, np.column_stack([t, np.cos(t)]))
    np.testing.assert_allclose(tabulated(txt)(0.5), np.cos(0.5), atol=1e-6)


def test_tabulated_rejects_bad_tables(tmp_path):
    short = tmp_path / "short.txt"
    np.savetxt(short, np.array([[0, 1], [1, 2]]))
    with pytest.raises(ConfigError):
        tabulated(short)
    unsorted = tmp_path / "unsorted.txt"
    np.savetxt(unsorted, np.array([[0, 1], [0.5, 2], [0.2, 3], [1, 4]]))
    with pytest.raises(ConfigError):
        tabulated(unsorted)
