import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hiddencorr.decompositions import FitReport, ParafacModel, SdtModel, TuckerModel, reconstruct
from hiddencorr.io import (
    ParseError, format_tensor, load_model, parse_tensor, read_matrix, read_tensor, read_vector,
    save_model, write_json, write_matrix, write_tensor,
)


def test_tensor_text_layout(example_tensor):
    lines = format_tensor(example_tensor).splitlines()
    assert lines[0] == "dims 3 4 2"
    assert lines[1].split() == [str(v) for v in (1, 4, 7, 10, 13, 16, 19, 22)]


def test_tensor_roundtrip_int(example_tensor, tmp_path):
    write_tensor(tmp_path / "x.txt", example_tensor)
    back = read_tensor(tmp_path / "x.txt")
    assert back.dtype == np.int64
    np.testing.assert_array_equal(back, example_tensor)


@given(arrays(float, st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4)),
              elements=st.floats(-1e300, 1e300, allow_nan=False)))
def test_tensor_roundtrip_float_exact(t):
    back = parse_tensor(format_tensor(t))
    np.testing.assert_array_equal(back, t.astype(float))


def test_tensor_free_line_breaks():
    t = parse_tensor("dims 1 2 2\n1 2\n3\n4\n")
    assert t.shape == (1, 2, 2) and t[0, 1, 1] == 4


@pytest.mark.parametrize("text,line,msg", [
    ("", 1, "empty"),
    ("size 1 1 1\n1\n", 1, "dims I J K"),
    ("dims 1 1 x\n1\n", 1, "integers"),
    ("dims 1 1 2\n1\n", 2, "expected 2 values"),
    ("dims 1 1 1\n1 2\n", 2, "more than 1"),
    ("dims 1 1 1\nfoo\n", 2, "not a number"),
    ("dims 1 1 1\nnan\n", 2, "non-finite"),
])
def test_tensor_parse_errors(text, line, msg):
    with pytest.raises(ParseError, match=msg) as err:
        parse_tensor(text, "t.txt")
    assert err.value.line == line
    assert str(err.value).startswith(f"t.txt:{line}:")


def test_matrix_roundtrip(tmp_path, rng):
    m = rng.standard_normal((4, 3))
    write_matrix(tmp_path / "m.csv", m)
    np.testing.assert_array_equal(read_matrix(tmp_path / "m.csv"), m)
    write_matrix(tmp_path / "v.csv", m[:, :1])
    np.testing.assert_array_equal(read_vector(tmp_path / "v.csv"), m[:, 0])
    with pytest.raises(ParseError):
        read_vector(tmp_path / "m.csv")


def test_matrix_ragged(tmp_path):
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(ParseError, match="columns") as err:
        read_matrix(tmp_path / "r.csv")
    assert err.value.line == 2


def test_atomic_write_leaves_no_temp(tmp_path):
    write_json(tmp_path / "sub" / "a.json", {"x": np.float64(1.5), "y": np.arange(2)})
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.json"]
    assert '"x": 1.5' in (tmp_path / "sub" / "a.json").read_text()


@pytest.mark.parametrize("kind", ["parafac", "tucker", "sdt"])
def test_model_roundtrip(tmp_path, rng, kind):
    a, b, c = rng.standard_normal((4, 2)), rng.standard_normal((5, 2)), rng.standard_normal((3, 2))
    model = {
        "parafac": lambda: ParafacModel(a, b, c),
        "tucker": lambda: TuckerModel(a, b, c, rng.standard_normal((2, 2, 2))),
        "sdt": lambda: SdtModel(a, b, c, rng.standard_normal((2, 2))),
    }[kind]()
    rep = FitReport(1.0, 0.1, 5, True, 10, history=(2.0, 1.0))
    save_model(tmp_path, model, rep, seed=3)
    back = load_model(tmp_path)
    assert type(back) is type(model)
    np.testing.assert_array_equal(reconstruct(back), reconstruct(model))
