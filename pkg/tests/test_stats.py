import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist, pdist, squareform
from scipy.stats import norm
from scipy.stats import t as student_t

from accdist.errors import (
    DegenerateCorrelation,
    DegenerateGeometry,
    InsufficientData,
    InvalidDistanceMatrix,
    LengthMismatch,
    MissingRating,
    SampleTooSmall,
    SingularDesign,
    ZeroVariance,
)
from accdist.stats import (
    RatingsTable,
    classical_mds,
    cronbach_alpha,
    load_ratings,
    ols_regress,
    pearson,
    steiger_z,
)


class TestPearson:
    def test_identity_and_negation(self):
        x = [1.0, 2.0, 4.0, 8.0]
        assert pearson(x, x) == 1.0
        assert pearson(x, [-v for v in x]) == -1.0

    def test_closed_form_oracle(self):
        # r = sum((x-xm)(y-ym)) / sqrt(sum sq * sum sq), by hand:
        # x=[1,2,3] y=[2,4,7]: cov terms 7/3+0+8/3=5, denom sqrt(2*114/9)
        expected = 5.0 / math.sqrt(2.0 * (114.0 / 9.0))
        assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(expected, abs=1e-15)

    def test_constant_vector(self):
        with pytest.raises(ZeroVariance):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            pearson([1, 2, 3], [1, 2])

    def test_too_short(self):
        with pytest.raises(SampleTooSmall):
            pearson([1, 2], [3, 4])

    def test_affine_invariance(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=30)
        y = rng.normal(size=30)
        base = pearson(x, y)
        assert pearson(3.0 * x + 2.0, y) == pytest.approx(base, abs=1e-12)
        assert pearson(-2.0 * x + 1.0, y) == pytest.approx(-base, abs=1e-12)


def oracle_steiger(r_jk, r_jh, r_kh, n):
    """Independent coding of the pooled-estimate dependent-correlation Z."""
    rbar = 0.5 * (r_jk + r_jh)
    det = 1.0 - rbar * rbar
    psi = (r_kh * (1.0 - 2.0 * rbar * rbar)
           - 0.5 * rbar * rbar * (1.0 - 2.0 * rbar * rbar - r_kh * r_kh))
    cov = psi / (det * det)
    z1 = 0.5 * math.log((1.0 + r_jk) / (1.0 - r_jk))
    z2 = 0.5 * math.log((1.0 + r_jh) / (1.0 - r_jh))
    return (z1 - z2) * math.sqrt((n - 3.0) / (2.0 - 2.0 * cov))


class TestSteigerZ:
    def test_equal_correlations(self):
        z, p = steiger_z(-0.5, -0.5, 0.3, 100)
        assert z == 0.0
        assert p == 1.0

    def test_reported_magnitude(self):
        z, p = steiger_z(-0.87, -0.77, 0.80, 210)
        assert abs(z) > 3.0
        assert p < 0.001
        assert z == pytest.approx(oracle_steiger(-0.87, -0.77, 0.80, 210), abs=1e-9)

    def test_antisymmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b, c = rng.uniform(-0.8, 0.8, 3)
            n = int(rng.integers(5, 400))
            try:
                z_ab, _ = steiger_z(a, b, c, n)
                z_ba, _ = steiger_z(b, a, c, n)
            except DegenerateCorrelation:
                continue
            assert abs(z_ab + z_ba) <= 1e-12

    def test_oracle_battery_from_real_correlations(self):
        rng = np.random.default_rng(2)
        checked = 0
        while checked < 100:
            n = int(rng.integers(10, 500))
            data = rng.normal(size=(n, 3))
            data[:, 1] += 0.5 * data[:, 0]
            data[:, 2] += rng.uniform(-1, 1) * data[:, 0]
            corr = np.corrcoef(data, rowvar=False)
            r_jk, r_jh, r_kh = corr[0, 1], corr[0, 2], corr[1, 2]
            z, p = steiger_z(r_jk, r_jh, r_kh, n)
            assert z == pytest.approx(oracle_steiger(r_jk, r_jh, r_kh, n), abs=1e-9)
            assert p == pytest.approx(2.0 * norm.sf(abs(z)), abs=1e-12)
            checked += 1

    def test_small_sample(self):
        with pytest.raises(SampleTooSmall):
            steiger_z(0.5, 0.2, 0.1, 3)

    def test_degenerate_correlation(self):
        with pytest.raises(DegenerateCorrelation):
            steiger_z(1.0, 0.2, 0.1, 20)


def spreadsheet_alpha(matrix):
    """Cell-by-cell alpha computation (sample variances via explicit sums)."""
    rows = [r for r in matrix if not any(math.isnan(v) for v in r)]
    k = len(rows[0])
    n = len(rows)

    def var(values):
        mean = sum(values) / len(values)
        return sum((v - mean) ** 2 for v in values) / (len(values) - 1)

    item_vars = [var([row[j] for row in rows]) for j in range(k)]
    total_var = var([sum(row) for row in rows])
    return k / (k - 1) * (1 - sum(item_vars) / total_var)


class TestCronbachAlpha:
    def test_identical_items(self):
        raw = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        assert cronbach_alpha(raw) == pytest.approx(1.0)

    def test_hand_matrix(self):
        raw = [[2.0, 4.0, 3.0], [4.0, 5.0, 5.0], [3.0, 3.0, 4.0]]
        assert cronbach_alpha(raw) == pytest.approx(spreadsheet_alpha(raw), abs=1e-12)
        assert cronbach_alpha(raw) == pytest.approx(6.0 / 7.0, abs=1e-12)

    def test_all_missing_row_dropped(self):
        raw = [[2.0, 4.0, 3.0], [4.0, 5.0, 5.0], [3.0, 3.0, 4.0]]
        with_missing = raw + [[np.nan, np.nan, np.nan]]
        assert cronbach_alpha(with_missing) == cronbach_alpha(raw)

    def test_partial_missing_row_dropped(self):
        raw = [[2.0, 4.0, 3.0], [4.0, 5.0, 5.0], [3.0, 3.0, 4.0]]
        with_missing = raw + [[1.0, np.nan, 2.0]]
        assert cronbach_alpha(with_missing) == cronbach_alpha(raw)

    def test_insufficient_rows(self):
        with pytest.raises(InsufficientData):
            cronbach_alpha([[1.0, 2.0], [np.nan, 1.0]])


class TestOlsRegress:
    def test_exact_affine_fit(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(20, 3))
        beta = np.array([2.0, -1.0, 0.5])
        y = 4.0 + X @ beta
        fit = ols_regress(X, y)
        np.testing.assert_allclose(fit.coefficients, [4.0, 2.0, -1.0, 0.5],
                                   atol=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_four_point_closed_form(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        y = np.array([1.0, 3.0, 4.0, 7.0])
        fit = ols_regress(x, y)
        # hand-solved normal equations
        assert fit.coefficients[1] == pytest.approx(1.9, abs=1e-12)
        assert fit.coefficients[0] == pytest.approx(0.9, abs=1e-12)
        assert fit.standard_errors[1] == pytest.approx(math.sqrt(0.07), abs=1e-12)
        assert fit.standard_errors[0] == pytest.approx(math.sqrt(0.245), abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0 - 0.7 / 18.75, abs=1e-12)
        t_slope = 1.9 / math.sqrt(0.07)
        assert fit.t_values[1] == pytest.approx(t_slope, abs=1e-10)
        assert fit.p_values[1] == pytest.approx(
            2.0 * student_t.sf(t_slope, 2), abs=1e-12)
        assert fit.n == 4

    def test_report_schema(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        fit = ols_regress(X, y, names=("LD", "MFCC", "neural"))
        rows = list(fit.rows())
        assert [r[0] for r in rows] == ["(Intercept)", "LD", "MFCC", "neural"]
        for _, est, se, t, p in rows:
            assert t == pytest.approx(est / se, abs=1e-12)
            assert 0.0 <= p <= 1.0

    def test_singular_design(self):
        X = np.ones((10, 2))
        X[:, 1] = 2.0  # both columns constant -> collinear with intercept
        with pytest.raises(SingularDesign):
            ols_regress(X, np.arange(10.0))

    def test_sample_too_small(self):
        with pytest.raises(SampleTooSmall):
            ols_regress(np.zeros((3, 3)), np.zeros(3))


class TestClassicalMds:
    def test_collinear_points(self):
        positions = np.array([0.0, 1.0, 3.0, 7.0])
        D = np.abs(positions[:, None] - positions[None, :])
        result = classical_mds(D, k=1)
        assert result.explained_variance == pytest.approx(1.0, abs=1e-9)
        recovered = result.coordinates[:, 0]
        gaps = np.abs(np.diff(np.sort(recovered)))
        np.testing.assert_allclose(sorted(gaps), sorted(np.diff(positions)),
                                   atol=1e-9)

    def test_equilateral_triangle(self):
        D = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
        result = classical_mds(D, k=2)
        top = result.eigenvalues[:2]
        assert top[0] > 0 and top[1] > 0
        assert abs(top[0] - top[1]) / top[0] < 1e-10
        per_axis = top / result.eigenvalues[result.eigenvalues > 0].sum()
        np.testing.assert_allclose(per_axis, [0.5, 0.5], atol=1e-10)

    def test_random_2d_reconstruction(self):
        rng = np.random.default_rng(5)
        points = rng.normal(size=(20, 2))
        D = cdist(points, points)
        result = classical_mds(D, k=2)
        assert result.explained_variance >= 0.999
        recon = squareform(pdist(result.coordinates))
        np.testing.assert_allclose(recon, D, atol=1e-9)

    def test_coordinates_column_centered(self):
        rng = np.random.default_rng(6)
        points = rng.normal(size=(10, 3))
        D = cdist(points, points)
        result = classical_mds(D, k=3)
        np.testing.assert_allclose(result.coordinates.sum(axis=0), 0.0, atol=1e-9)

    def test_asymmetric_rejected(self):
        D = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(InvalidDistanceMatrix):
            classical_mds(D, k=1)

    def test_negative_rejected(self):
        D = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(InvalidDistanceMatrix):
            classical_mds(D, k=1)

    def test_nonzero_diagonal_rejected(self):
        D = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(InvalidDistanceMatrix):
            classical_mds(D, k=1)

    def test_zero_matrix_degenerate(self):
        with pytest.raises(DegenerateGeometry):
            classical_mds(np.zeros((3, 3)), k=1)

    def test_bad_k(self):
        D = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(ValueError):
            classical_mds(D, k=2)


class TestRatingsTable:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            RatingsTable(per_speaker_mean={"s": 9.0}, scale=(1, 7))

    def test_vector_for_missing(self):
        table = RatingsTable(per_speaker_mean={"a": 3.0}, scale=(1, 7))
        with pytest.raises(MissingRating):
            table.vector_for(["a", "b"])

    def test_load_ratings(self, tmp_path):
        path = tmp_path / "r.tsv"
        path.write_text("# scale: 1 7\ns1\t6.5\ns2\t2.0\n")
        table = load_ratings(path)
        assert table.per_speaker_mean == {"s1": 6.5, "s2": 2.0}
        assert table.scale == (1.0, 7.0)
        np.testing.assert_array_equal(table.vector_for(["s2", "s1"]), [2.0, 6.5])
