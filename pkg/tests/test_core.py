import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ppclust.core import (
    ClusteringResult,
    PatternDataset,
    PointPattern,
    read_dataset,
    read_labels,
    validate_dataset,
    write_dataset,
    write_labels,
)
from ppclust.exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    LabelLengthMismatchError,
    NonFiniteCoordinateError,
    ParseError,
    PointPatternError,
)


def three_patterns():
    return PatternDataset.from_patterns(
        [[[0.0, 1.0]], [[2.0, 3.0], [4.0, 5.0]], []], labels=["a", "b", "a"])


def test_validate_returns_same_dataset():
    ds = three_patterns()
    assert validate_dataset(ds) is ds
    assert validate_dataset(validate_dataset(ds)) is ds
    assert ds.dim == 2 and len(ds) == 3
    assert ds.ids == ("0", "1", "2")
    assert list(ds.cardinalities) == [1, 2, 0]


def test_three_d_vector_in_two_d_dataset():
    with pytest.raises(DimensionMismatchError):
        PatternDataset.from_patterns([[[0.0, 0.0]], [[1.0, 2.0, 3.0]]])
    raw = PatternDataset((PointPattern([[0.0, 0.0]]), PointPattern([[1.0, 2.0, 3.0]])), dim=2)
    with pytest.raises(DimensionMismatchError):
        validate_dataset(raw)


def test_label_length_mismatch():
    with pytest.raises(LabelLengthMismatchError):
        PatternDataset.from_patterns([[[0.0]], [[1.0]], [[2.0]]], labels=["a", "b"])


def test_non_finite_and_empty():
    with pytest.raises(NonFiniteCoordinateError):
        PatternDataset.from_patterns([[[0.0, np.nan]]])
    with pytest.raises(NonFiniteCoordinateError):
        PatternDataset.from_patterns([[[np.inf]]])
    with pytest.raises(EmptyDatasetError):
        PatternDataset.from_patterns([])
    with pytest.raises(ParseError):
        PatternDataset.from_patterns([[[0.0]], [[1.0]]], ids=["x", "x"])


def test_errors_share_a_base_class():
    assert issubclass(DimensionMismatchError, PointPatternError)
    assert issubclass(PointPatternError, ValueError)


def test_point_pattern_is_read_only():
    P = PointPattern([[1.0, 2.0]])
    with pytest.raises(ValueError):
        P.points[0, 0] = 5.0
    assert P == PointPattern(np.array([[1.0, 2.0]]))
    assert hash(P) == hash(PointPattern([[1.0, 2.0]]))
    E = PointPattern([], dim=3)
    assert E.cardinality == 0 and E.dim == 3


def test_round_trip(tmp_path):
    ds = three_patterns()
    path = tmp_path / "d.jsonl"
    write_dataset(ds, path)
    assert read_dataset(path) == ds


def test_round_trip_unlabelled_with_ids(tmp_path):
    ds = PatternDataset.from_patterns([[[0.1, 0.2]], []], ids=["alpha", "beta"])
    path = tmp_path / "d.jsonl"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert back == ds and back.labels is None


def test_dimension_from_first_non_empty(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text('{"id":"a","points":[]}\n{"id":"b","points":[[1,2,3]]}\n')
    ds = read_dataset(path)
    assert ds.dim == 3 and ds[0].points.shape == (0, 3)


def test_all_empty_patterns(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text('{"id":"a","points":[]}\n')
    assert read_dataset(path).dim == 1


@pytest.mark.parametrize("body, line", [
    ('{"id":"a","points":[[1,2]]}\n{"id":"b","points":[[1,"x"]]}\n', 2),
    ('{"id":"a","points":[[1,2]]}\n{"id":"b","points":[[1,2],[3]]}\n', 2),
    ('{"id":"a","points":[[1,2]]}\n\n{"id":"b","points":[[1,2,3]]}\n', 3),
    ('{"id":"a","points":[[1,2]]\n', 1),
    ('{"points":[[1,2]]}\n', 1),
    ('{"id":"a","points":[[1,2]],"label":"x"}\n{"id":"b","points":[]}\n', 2),
    ('{"id":"a","points":[[1,2]],"label":3}\n', 1),
])
def test_parse_errors_carry_line(tmp_path, body, line):
    path = tmp_path / "bad.jsonl"
    path.write_text(body)
    with pytest.raises(ParseError) as info:
        read_dataset(path)
    assert info.value.line == line


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(EmptyDatasetError):
        read_dataset(path)


def test_labels_csv(tmp_path):
    path = tmp_path / "labels.csv"
    write_labels(path, ["p1", "p2"], [0, 3])
    assert path.read_text() == "id,label\np1,0\np2,3\n"
    assert read_labels(path) == {"p1": "0", "p2": "3"}
    path.write_text("who,what\n")
    with pytest.raises(ParseError):
        read_labels(path)


def test_clustering_result_invariants():
    r = ClusteringResult([0, 1, 1], memberships=[[1, 0], [0.25, 0.75], [0, 1]])
    assert r.n_clusters == 2
    with pytest.raises(ValueError):
        ClusteringResult([0, 1], memberships=[[0.5, 0.4], [0, 1]])
    with pytest.raises(ValueError):
        ClusteringResult([0, 2], exemplars=[0, 1])


finite = st.floats(allow_nan=False, allow_infinity=False)
pattern = st.integers(0, 4).flatmap(lambda m: arrays(np.float64, (m, 2), elements=finite))


@settings(max_examples=50, deadline=None)
@given(st.lists(pattern, min_size=1, max_size=5))
def test_round_trip_bit_exact(tmp_path_factory, patterns):
    ds = PatternDataset.from_patterns(patterns, dim=2)
    path = tmp_path_factory.mktemp("rt") / "d.jsonl"
    write_dataset(ds, path)
    back = read_dataset(path)
    for a, b in zip(ds.patterns, back.patterns):
        assert a.points.shape == b.points.shape
        assert a.points.tobytes() == b.points.tobytes()
