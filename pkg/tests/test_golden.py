import math

import pytest

from mixedfem.golden import TABLES


@pytest.mark.parametrize("name", sorted(TABLES))
def test_published_rates_match_published_errors(name):
    # rows 2..4 of each rate column are log2 ratios of consecutive error rows
    t = TABLES[name]
    for i in range(1, len(t.errors)):
        for j in range(len(t.norms)):
            rate = math.log2(t.errors[i - 1][j] / t.errors[i][j])
            # three significant digits in the errors; Table 4 rates carry one decimal
            tol = 0.06 if t.name != "table4" else 0.1
            assert abs(rate - t.rate_rows[i][j]) <= tol, (name, i, t.norms[j], rate)


@pytest.mark.parametrize("name", sorted(TABLES))
def test_shapes(name):
    t = TABLES[name]
    assert len(t.errors) == len(t.levels) == len(t.rate_rows)
    assert all(len(row) == len(t.norms) for row in t.errors + t.rate_rows)
    assert t.rates == t.rate_rows[-1]
    assert t.column(t.norms[0]) == [row[0] for row in t.errors]
    assert t.rate_level * 2 == t.levels[0]
