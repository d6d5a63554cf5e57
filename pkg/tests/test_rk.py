import numpy as np
import pytest

from eqrkdg import builtin, certify_algebraically_stable, parse_tableau, stability_matrix
from eqrkdg.rk import BUILTIN_NAMES, ButcherTableau, TableauParseError

S3 = np.sqrt(3.0)


def test_qz2_coefficients():
    t = builtin("qz2")
    assert np.array_equal(t.A, [[0.25, 0], [0.5, 0.25]])
    assert np.array_equal(t.b, [0.5, 0.5]) and np.array_equal(t.c, [0.25, 0.75])


def test_gl4_coefficients():
    t = builtin("gl4")
    assert np.allclose(t.A, [[0.25, 0.25 - S3 / 6], [0.25 + S3 / 6, 0.25]], atol=1e-16)
    assert np.allclose(t.c, [0.5 - S3 / 6, 0.5 + S3 / 6], atol=1e-16)


def test_backward_euler():
    t = builtin("backward-euler")
    assert t.s == 1 and t.A[0, 0] == 1 and t.b[0] == 1 and t.c[0] == 1


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_consistency(name):
    assert builtin(name).consistency_defect() <= 1e-14


def test_unknown_name():
    with pytest.raises(ValueError):
        builtin("rk4")


@pytest.mark.parametrize("name", ["qz2", "gl4", "implicit-midpoint"])
def test_zero_stability_matrix(name):
    M = stability_matrix(builtin(name))
    assert np.abs(M).max() <= 1e-14


def test_crouzeix_matrix():
    M = stability_matrix(builtin("crouzeix3"))
    c = 0.25 + S3 / 6
    assert np.abs(M - c * np.array([[1, -1], [-1, 1]])).max() <= 1e-14
    rep = certify_algebraically_stable(builtin("crouzeix3"))
    assert rep.stable
    assert np.allclose(np.sort(rep.eigenvalues), [0, 2 * c], atol=1e-14)
    assert 2 * c == pytest.approx(1.077350, abs=1e-6)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_matrix_symmetric_and_builtins_stable(name):
    M = stability_matrix(builtin(name))
    assert np.array_equal(M, M.T)
    assert certify_algebraically_stable(builtin(name)).stable


def test_forward_euler_unstable():
    t = ButcherTableau(np.array([[0.0]]), np.array([1.0]), np.array([0.0]), "fe")
    rep = certify_algebraically_stable(t)
    assert not rep.stable and np.allclose(rep.M, [[-1.0]])
    assert "semi-definite" in rep.reason


def test_negative_weight_unstable():
    t = ButcherTableau(np.array([[1.0, 0], [0, 1.0]]), np.array([1.5, -0.5]), np.array([1.0, 1.0]), "neg")
    assert not certify_algebraically_stable(t).stable


def test_tableau_immutable():
    t = builtin("gl4")
    with pytest.raises(ValueError):
        t.A[0, 0] = 1.0


def test_text_round_trip():
    for name in BUILTIN_NAMES:
        t = builtin(name)
        back = parse_tableau(t.to_text(), name)
        assert np.allclose(back.A, t.A, atol=1e-16) and np.allclose(back.b, t.b, atol=1e-16)


def test_parse_fractions_and_comments():
    text = "# two stage\n1/4 | 1/4 0\n3/4 | 1/2 1/4\n---\n| 1/2 1/2\n"
    assert parse_tableau(text) == builtin("qz2")


@pytest.mark.parametrize("text,line", [
    ("0 | 0\n---\n| 1/x\n", 3),
    ("0 | 0 0\n---\n| 1\n", 1),
    ("0 | 0\n| 1\n", None),
    ("abc\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(TableauParseError) as err:
        parse_tableau(text)
    if line is not None:
        assert err.value.line == line
