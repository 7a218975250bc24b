"""Tests for dataset validation, standardization and variable selection."""
import numpy as np
import pytest

from exceptions import (
    DuplicateNameError,
    EmptyDatasetError,
    GeographicRangeViolationError,
    InvalidSelectionError,
    MissingColumnError,
    NonFiniteValueError,
    ZeroVarianceError,
)
from models.spatial import SpatialDataset, VariableSelection
from services.spatial_service import (
    INTERCEPT,
    design_matrix,
    regression_inputs,
    resolve_selection,
    standardize,
    validate,
)
from tests.test_helpers import make_dataset


class TestValidate:
    def test_single_point_single_attribute_is_valid(self):
        ds = SpatialDataset(coords=[[0.0, 0.0]], attrs=[[1.0]], names=["v"])
        validate(ds)
        assert ds.n == 1 and ds.m == 1

    def test_non_finite_attribute_reports_row_and_column(self):
        ds = make_dataset(np.zeros((3, 2)), {"a": [1.0, np.nan, 3.0]})
        with pytest.raises(NonFiniteValueError) as exc_info:
            validate(ds)
        assert exc_info.value.details == {"row": 2, "column": "a"}

    def test_latitude_out_of_range(self):
        ds = make_dataset(np.array([[10.0, 91.0]]), {"v": [1.0]}, geographic=True)
        with pytest.raises(GeographicRangeViolationError):
            validate(ds)

    def test_projected_coordinates_are_not_range_checked(self):
        ds = make_dataset(np.array([[599500.0, 142200.0]]), {"v": [1.0]})
        validate(ds)

    def test_duplicate_names(self):
        ds = SpatialDataset(coords=np.zeros((2, 2)), attrs=np.ones((2, 2)), names=["a", "a"])
        with pytest.raises(DuplicateNameError):
            validate(ds)

    def test_empty_attributes(self):
        ds = SpatialDataset(coords=np.zeros((0, 2)), attrs=np.zeros((0, 1)), names=["a"])
        with pytest.raises(EmptyDatasetError):
            validate(ds)

    def test_dataset_arrays_are_read_only(self):
        ds = make_dataset(np.zeros((2, 2)), {"a": [1.0, 2.0]})
        with pytest.raises(ValueError):
            ds.attrs[0, 0] = 5.0


class TestStandardize:
    def test_three_point_column(self):
        ds = make_dataset(np.zeros((3, 2)), {"v": [1.0, 2.0, 3.0]})
        out = standardize(ds, ["v"])
        np.testing.assert_allclose(out.column("v"), [-1.0, 0.0, 1.0], atol=1e-12)

    def test_constant_column(self):
        ds = make_dataset(np.zeros((3, 2)), {"v": [4.0, 4.0, 4.0]})
        with pytest.raises(ZeroVarianceError):
            standardize(ds, ["v"])

    def test_random_columns_have_zero_mean_unit_sd(self):
        rng = np.random.default_rng(3)
        ds = SpatialDataset(coords=rng.normal(size=(50, 2)), attrs=rng.normal(5.0, 3.0, size=(50, 3)), names=["a", "b", "c"])
        out = standardize(ds, ["a", "b", "c"])
        np.testing.assert_allclose(out.attrs.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.attrs.std(axis=0, ddof=1), 1.0, atol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        ds = SpatialDataset(coords=rng.normal(size=(20, 2)), attrs=rng.normal(size=(20, 2)), names=["a", "b"])
        once = standardize(ds, ["a", "b"])
        twice = standardize(once, ["a", "b"])
        np.testing.assert_allclose(twice.attrs, once.attrs, atol=1e-12)

    def test_unselected_columns_untouched(self):
        ds = make_dataset(np.zeros((3, 2)), {"v": [1.0, 2.0, 3.0], "w": [10.0, 20.0, 40.0]})
        out = standardize(ds, ["v"])
        np.testing.assert_array_equal(out.column("w"), [10.0, 20.0, 40.0])


class TestSelection:
    def test_dependent_among_independents(self):
        ds = make_dataset(np.zeros((3, 2)), {"y": [1, 2, 3], "x": [3, 1, 2]})
        with pytest.raises(InvalidSelectionError):
            resolve_selection(ds, VariableSelection(dependent="y", independents=["y", "x"]))

    def test_unknown_column(self):
        ds = make_dataset(np.zeros((3, 2)), {"y": [1, 2, 3]})
        with pytest.raises(MissingColumnError):
            resolve_selection(ds, VariableSelection(independents=["nope"]))

    def test_regression_inputs_prepend_intercept(self):
        ds = make_dataset(np.zeros((3, 2)), {"y": [1, 2, 3], "x": [3, 1, 2]})
        X, y, names = regression_inputs(ds, VariableSelection(dependent="y", independents=["x"]))
        assert names == [INTERCEPT, "x"]
        np.testing.assert_array_equal(X[:, 0], 1.0)
        np.testing.assert_array_equal(y, [1, 2, 3])

    def test_design_matrix_shape(self):
        ds = make_dataset(np.zeros((4, 2)), {"a": [1, 2, 3, 4], "b": [0, 1, 0, 1]})
        assert design_matrix(ds, ["a", "b"]).shape == (4, 3)
