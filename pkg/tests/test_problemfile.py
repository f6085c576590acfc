import textwrap

import numpy as np
import pytest
from numpy.testing import assert_allclose

from netstab.errors import DimensionMismatch, InvariantViolation, ParseError
from netstab.problemfile import parse_problem_file

AWGN_DOC = textwrap.dedent(
    """\
    plant:
      A:
        - [4, 0, 0, 0]
        - [0, 2, 0, 0]
        - [0, 0, 1, 0]
        - [0, 0, 0, 1]
      B:
        - [1, 1]
        - [1, 1]
        - [1, 1]
        - [0, 1]
      x0: [1, 1, 1, 1]
    channels:
      kind: awgn
      power: [9.1, 3.1, 4.1]
      noise_density: [1, 1, 1]
    options:
      seed: 0
      epsilon: 0.1
    """
)


def test_parse_benchmark_document():
    pf = parse_problem_file(AWGN_DOC)
    assert pf.plant.n == 4 and pf.plant.m == 2
    assert_allclose(pf.plant.A, np.diag([4.0, 2.0, 1.0, 1.0]))
    assert_allclose(pf.plant.x0, np.ones(4))
    assert pf.channels.kind == "awgn"
    assert_allclose(pf.channels.power, [9.1, 3.1, 4.1])
    assert pf.options == {"seed": 0, "epsilon": 0.1}


def test_fading_document():
    doc = AWGN_DOC.replace(
        "kind: awgn", "kind: fading"
    ).replace("power: [9.1, 3.1, 4.1]", "mean: [2, 0.6, 0.9]").replace(
        "noise_density: [1, 1, 1]", "variance: [0.35, 0.2, 0.25]"
    )
    pf = parse_problem_file(doc)
    assert pf.channels.kind == "fading"
    assert_allclose(pf.channels.variance, [0.35, 0.2, 0.25])


def test_b_row_mismatch():
    doc = AWGN_DOC.replace("    - [0, 1]\n", "")
    assert doc != AWGN_DOC
    with pytest.raises(DimensionMismatch):
        parse_problem_file(doc)


def test_x0_length_mismatch():
    doc = AWGN_DOC.replace("x0: [1, 1, 1, 1]", "x0: [1, 1]")
    with pytest.raises(DimensionMismatch):
        parse_problem_file(doc)


def test_negative_noise_density():
    doc = AWGN_DOC.replace("noise_density: [1, 1, 1]", "noise_density: [1, -1, 1]")
    with pytest.raises(InvariantViolation):
        parse_problem_file(doc)


def test_duplicate_key_reports_line():
    doc = AWGN_DOC + "options:\n  seed: 1\n"
    with pytest.raises(ParseError) as err:
        parse_problem_file(doc)
    assert "duplicate" in str(err.value)
    assert err.value.line == AWGN_DOC.count("\n") + 1


def test_unknown_key_reports_line():
    doc = AWGN_DOC + "extra_section: 1\n"
    with pytest.raises(ParseError) as err:
        parse_problem_file(doc)
    assert "unknown key" in str(err.value)
    assert err.value.line == AWGN_DOC.count("\n") + 1


def test_unknown_nested_key():
    doc = AWGN_DOC.replace("  x0: [1, 1, 1, 1]", "  gain: [1, 1, 1, 1]")
    with pytest.raises(ParseError) as err:
        parse_problem_file(doc)
    assert "'plant'" in str(err.value)


def test_missing_required_section():
    with pytest.raises(ParseError):
        parse_problem_file("plant:\n  A: [[1]]\n  B: [[1]]\n")


def test_bad_matrix_literal():
    doc = AWGN_DOC.replace("- [0, 1]", "- [0, oops]")
    with pytest.raises(ParseError):
        parse_problem_file(doc)


def test_non_mapping_document():
    with pytest.raises(ParseError):
        parse_problem_file("- 1\n- 2\n")


def test_bad_option_values():
    with pytest.raises(InvariantViolation):
        parse_problem_file(AWGN_DOC.replace("epsilon: 0.1", "epsilon: -0.5"))
    with pytest.raises(InvariantViolation):
        parse_problem_file(AWGN_DOC.replace("epsilon: 0.1", "epsilon: 2.0"))
    with pytest.raises(ParseError):
        parse_problem_file(AWGN_DOC.replace("seed: 0", "seed: zero"))


def test_unstable_kind_rejected():
    with pytest.raises(ParseError):
        parse_problem_file(AWGN_DOC.replace("kind: awgn", "kind: quantized"))
