from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gromovdisc.reporting import digest_bytes, dumps, fmt_float, read_csv, rows_to_csv, schema_errors, to_plain


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_round_trips(x):
    assert float(fmt_float(x)) == x


def test_non_finite():
    assert [fmt_float(v) for v in (math.nan, math.inf, -math.inf)] == ["nan", "inf", "-inf"]
    assert to_plain({"a": math.inf, "b": 1 + 2j, "c": np.float64(0.5), "d": np.arange(2)}) == {
        "a": "inf",
        "b": [1.0, 2.0],
        "c": 0.5,
        "d": [0, 1],
    }
    with pytest.raises(TypeError):
        to_plain(object())


def test_dumps_sorted_and_stable():
    a = dumps({"b": 1, "a": {"y": 2.5, "x": [1, 2]}})
    b = dumps({"a": {"x": [1, 2], "y": 2.5}, "b": 1})
    assert a == b
    assert list(json.loads(a)) == ["a", "b"]
    assert digest_bytes(a.encode()) == digest_bytes(b.encode())


@given(
    st.lists(
        st.fixed_dictionaries(
            {
                "x": st.floats(allow_nan=False, allow_infinity=False),
                "n": st.integers(-10**6, 10**6),
                "s": st.text(alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1).filter(
                    lambda t: t.strip() == t and t not in ("true", "false", "nan", "inf", "-inf")
                ),
                "ok": st.booleans(),
            }
        ),
        max_size=6,
    )
)
def test_csv_round_trip(rows):
    text = rows_to_csv(rows, ("x", "n", "s", "ok"))
    header, back = read_csv(text)
    assert header == ["x", "n", "s", "ok"]
    assert len(back) == len(rows)
    for r, b in zip(rows, back):
        assert b["x"] == r["x"] and b["n"] == r["n"] and b["ok"] == r["ok"]
        # numeric-looking strings come back as numbers; all else verbatim
        assert str(b["s"]) == r["s"] or float(b["s"]) == float(r["s"])


def test_csv_quoting_and_line_ends():
    text = rows_to_csv([{"a": 'say "hi", twice', "b": None}], ("a", "b"))
    assert text == 'a,b\r\n"say ""hi"", twice",\r\n'
    assert rows_to_csv([], ("T", "E_T")) == "T,E_T\r\n"
    assert read_csv("") == ([], [])


def test_complex_cells():
    text = rows_to_csv([{"z": 1.5 - 2j}])
    assert read_csv(text)[1][0]["z"] == 1.5 - 2j


def test_schema_errors_paths():
    assert schema_errors({"tol": 1e-9}, "config") == []
    errs = schema_errors({"tol": -1}, "config")
    assert errs and errs[0].startswith("$.tol")
    with pytest.raises(KeyError):
        schema_errors({}, "nope")
