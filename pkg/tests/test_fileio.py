import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import graphs
from spgcl import fileio
from spgcl.errors import InputError


@given(graphs(min_nodes=0))
def test_graph_round_trip_keeps_isolated_nodes(tmp_path_factory, g):
    p = tmp_path_factory.mktemp("g") / "graph.tsv"
    fileio.write_graph(p, g)
    assert fileio.read_graph(p) == g


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 4)),
              elements=st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)))
def test_features_round_trip_exact(tmp_path_factory, x):
    p = tmp_path_factory.mktemp("x") / "features.csv"
    fileio.write_features(p, x)
    assert np.array_equal(fileio.read_features(p), x)


def test_labels_round_trip(tmp_path):
    fileio.write_labels(tmp_path / "y.txt", [0, 2, 1])
    assert fileio.read_labels(tmp_path / "y.txt").tolist() == [0, 2, 1]


@pytest.mark.parametrize("text", ["1.0,nan\n", "inf,2\n", "1,-Infinity\n"])
def test_features_reject_non_finite(tmp_path, text):
    (tmp_path / "x.csv").write_text(text)
    with pytest.raises(InputError):
        fileio.read_features(tmp_path / "x.csv")


def test_json_rejects_non_finite(tmp_path):
    (tmp_path / "c.json").write_text('{"lr": NaN}')
    with pytest.raises(InputError):
        fileio.read_json(tmp_path / "c.json")
    with pytest.raises(ValueError):
        fileio.dumps_json({"a": float("nan")})


def test_malformed_graph_line(tmp_path):
    (tmp_path / "g.tsv").write_text("0\t1\t2\n")
    with pytest.raises(InputError, match="g.tsv:1"):
        fileio.read_graph(tmp_path / "g.tsv")


def test_missing_file_is_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        fileio.read_graph(tmp_path / "absent.tsv")
    with pytest.raises(FileNotFoundError):
        fileio.load_tensors(tmp_path / "absent.bin")


def test_checkpoint_round_trip_is_bit_exact(tmp_path, rng):
    tensors = {"b": rng.normal(size=(3, 2)), "a": rng.normal(size=4)}
    fileio.save_tensors(tmp_path / "c.bin", tensors, {"k": 1})
    out, meta = fileio.load_tensors(tmp_path / "c.bin")
    assert list(out) == ["b", "a"] and meta == {"k": 1}
    assert all(np.array_equal(out[k], tensors[k]) for k in tensors)


def test_checkpoint_truncation_detected(tmp_path, rng):
    fileio.save_tensors(tmp_path / "c.bin", {"w": rng.normal(size=(4, 4))}, {})
    raw = (tmp_path / "c.bin").read_bytes()
    (tmp_path / "c.bin").write_bytes(raw[:-8])
    with pytest.raises(InputError, match="truncated"):
        fileio.load_tensors(tmp_path / "c.bin")
