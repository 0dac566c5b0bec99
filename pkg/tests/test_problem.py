import numpy as np
import pytest

from persagg.problem import (
    SENSE_EQ,
    SENSE_LE,
    EquivClass,
    OmegaSpec,
    ProblemSpec,
    spec_from_json,
    spec_to_json,
    validate_problem,
)
from persagg.quadratics import BlockSet, quad1
from persagg.sep import build_line_cover, gen_sqp_instance, SQPParams


def interval_omega(lo=1.0, hi=2.0):
    on = BlockSet(1, (), np.array([lo]), np.array([hi]))
    return OmegaSpec(
        blocks=((on, BlockSet.zero(1)),),
        coupling_A=np.array([[1.0], [-1.0]]),
        coupling_b=np.array([1.0, 0.0]),
    )


def test_enumerate_binary_order():
    ys = interval_omega().enumerate_binary()
    assert [list(y) for y in ys] == [[0.0], [1.0]]


def test_equality_coupling_restricts():
    om = OmegaSpec(
        blocks=((BlockSet.zero(1), BlockSet.zero(1)),) * 2,
        coupling_A=np.array([[1.0, 1.0]]),
        coupling_b=np.array([1.0]),
        coupling_senses=(SENSE_EQ,),
    )
    ys = [list(y) for y in om.enumerate_binary()]
    assert ys == [[1.0, 0.0], [0.0, 1.0]]


def test_block_dim_mismatch_rejected():
    on = BlockSet(2, (), np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        OmegaSpec(
            blocks=((on, BlockSet.zero(1)),),
            coupling_A=np.array([[1.0]]),
            coupling_b=np.array([1.0]),
        )


def test_equiv_class_shape_checks():
    om = interval_omega()
    with pytest.raises(ValueError):
        EquivClass(omega=om, multiplicity=0, obj=(np.zeros(1),))
    with pytest.raises(ValueError):
        EquivClass(omega=om, multiplicity=1, obj=(np.zeros(2),))


def test_validation_flags_empty_on_set():
    # row x^2 <= -1 over [0, 1] is empty
    on = BlockSet(1, ((quad1(1.0, 0.0), -1.0),), np.array([0.0]), np.array([1.0]))
    om = OmegaSpec(
        blocks=((on, BlockSet.zero(1)),),
        coupling_A=np.array([[1.0], [-1.0]]),
        coupling_b=np.array([1.0, 0.0]),
    )
    spec = ProblemSpec(
        classes=(EquivClass(omega=om, multiplicity=1, obj=(np.zeros(1),)),),
        global_rows=(),
    )
    rep = validate_problem(spec)
    assert not rep.ok and "empty on-set" in str(rep)


def test_validation_flags_bad_polytope():
    om = OmegaSpec(
        blocks=((BlockSet.zero(1), BlockSet.zero(1)),),
        coupling_A=np.array([[-1.0]]),
        coupling_b=np.array([-2.0]),  # forces y >= 2, outside the unit box
    )
    spec = ProblemSpec(
        classes=(EquivClass(omega=om, multiplicity=1, obj=(np.zeros(1),)),),
        global_rows=(),
    )
    rep = validate_problem(spec)
    assert not rep.ok


def test_good_spec_validates():
    assert validate_problem(build_line_cover([(1.0, 1.0, 1.0, 2)], 1.0)).ok


def test_json_round_trip_byte_exact():
    spec, _ = gen_sqp_instance(SQPParams(T=3, N=2, m=2, seed=4))
    data = spec_to_json(spec, metadata={"k": 1})
    spec2 = spec_from_json(data)
    assert spec_to_json(spec2, metadata={"k": 1}) == data
    assert spec2.num_members == spec.num_members
    assert spec2.global_rows == spec.global_rows


def test_json_rejects_unknown_version():
    with pytest.raises(ValueError):
        spec_from_json(b'{"format_version": 99}')


def test_counts():
    spec = build_line_cover([(1.0, 1.0, 1.0, 2), (2.0, 1.0, 1.0, 3)], 1.0)
    assert spec.num_members == 5
    assert spec.num_binaries == 5
