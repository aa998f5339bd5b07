import numpy as np
import pytest

from berbounds.validation import (
    as_float_matrix,
    as_two_class_labels,
    check_square_distances,
    class_split,
)


def test_vector_input_becomes_column_matrix():
    X = as_float_matrix([1.0, 2.0, 3.0])
    assert X.shape == (3, 1)
    assert X.dtype == np.float64


def test_matrix_input_passes_through():
    X = as_float_matrix([[1, 2], [3, 4]])
    assert X.shape == (2, 2)


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        as_float_matrix(np.empty((0, 3)))


def test_non_finite_values_rejected():
    with pytest.raises(ValueError, match="finite"):
        as_float_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError, match="finite"):
        as_float_matrix([[1.0, np.inf]])


def test_two_class_labels_map_smaller_value_to_class_one():
    mapped, classes = as_two_class_labels([5, 2, 5, 2])
    assert classes == (2, 5)
    assert mapped.tolist() == [2, 1, 2, 1]


def test_string_labels_supported():
    mapped, classes = as_two_class_labels(np.array(["b", "a", "b"]))
    assert classes == ("a", "b")
    assert mapped.tolist() == [2, 1, 2]


def test_single_class_rejected():
    with pytest.raises(ValueError, match="single class"):
        as_two_class_labels([1, 1, 1])


def test_three_classes_rejected():
    with pytest.raises(ValueError, match="more than two"):
        as_two_class_labels([1, 2, 3])


def test_label_length_checked_against_n():
    with pytest.raises(ValueError):
        as_two_class_labels([1, 2], n=3)


def test_class_split_partitions_rows():
    X = np.arange(8.0).reshape(4, 2)
    mapped, _ = as_two_class_labels([0, 1, 0, 1])
    x1, x2 = class_split(X, mapped)
    assert x1.tolist() == [[0, 1], [4, 5]]
    assert x2.tolist() == [[2, 3], [6, 7]]


def test_square_distance_validation_repairs_tiny_asymmetry():
    D = np.array([[0.0, 1.0], [1.0 + 1e-12, 0.0]])
    out = check_square_distances(D)
    assert out[0, 1] == out[1, 0]
    assert out[0, 0] == 0.0 and out[1, 1] == 0.0


def test_square_distance_validation_rejects_large_asymmetry():
    D = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(ValueError, match="asymmetr"):
        check_square_distances(D)


def test_negative_distance_named_by_position():
    D = np.zeros((3, 3))
    D[1, 2] = D[2, 1] = -0.5
    with pytest.raises(ValueError, match=r"\(1, 2\)"):
        check_square_distances(D)


def test_non_square_matrix_rejected():
    with pytest.raises(ValueError):
        check_square_distances(np.zeros((2, 3)))


def test_single_point_matrix_rejected():
    with pytest.raises(ValueError):
        check_square_distances(np.zeros((1, 1)))
