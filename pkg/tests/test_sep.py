import numpy as np
import pytest

from persagg.branch_bound import solve_mip
from persagg.conic_model import emit_conic_text
from persagg.perspective import compile_per
from persagg.problem import SENSE_EQ, SENSE_LE, spec_to_json, validate_problem
from persagg.sep import (
    LCParams,
    SepClassParams,
    SQPParams,
    build_line_cover,
    build_sp,
    gen_lc_instance,
    gen_sqp_instance,
)


def test_param_invariants():
    with pytest.raises(ValueError):
        SepClassParams(a=-1.0, b=0.0, fixed_cost=0.0, lower=0.0, upper=1.0,
                       row_coeffs=(), multiplicity=1)
    with pytest.raises(ValueError):
        SepClassParams(a=0.0, b=0.0, fixed_cost=0.0, lower=0.0, upper=1.0,
                       row_coeffs=((-1.0, 0.0),), multiplicity=1)
    with pytest.raises(ValueError):
        SepClassParams(a=0.0, b=0.0, fixed_cost=0.0, lower=1.0, upper=0.0,
                       row_coeffs=(), multiplicity=1)


def test_epigraph_boxes_exact():
    cls = SepClassParams(a=1.0, b=0.0, fixed_cost=0.0, lower=-1.0, upper=1.0,
                         row_coeffs=((2.0, 5.0),), multiplicity=1)
    spec = build_sp([cls], [10.0], [SENSE_LE])
    on = spec.classes[0].omega.blocks[0][0]
    # coords: x, w, z
    assert on.lower[1] == pytest.approx(-3.0)  # min of 2x^2+5x on [-1,1]
    assert on.upper[1] == pytest.approx(7.0)
    assert on.lower[2] == pytest.approx(0.0)  # min of x^2 on [-1,1]
    assert on.upper[2] == pytest.approx(1.0)


def test_quadratic_row_in_equality_rejected():
    cls = SepClassParams(a=1.0, b=0.0, fixed_cost=0.0, lower=-1.0, upper=1.0,
                         row_coeffs=((1.0, 0.0),), multiplicity=1)
    with pytest.raises(ValueError):
        build_sp([cls], [1.0], [SENSE_EQ])


def test_line_cover_is_sp_special_case():
    lc = build_line_cover([(2.0, 3.0, 1.0, 2)], 1.0)
    sp = build_sp(
        [SepClassParams(a=2.0, b=0.0, fixed_cost=3.0, lower=0.0, upper=1.0,
                        row_coeffs=((0.0, 1.0),), multiplicity=2)],
        [1.0], [SENSE_EQ],
    )
    # identical compiled models row for row (only the name differs)
    a = compile_per(lc, "integer")
    b = compile_per(sp, "integer")
    a.name = b.name = "x"
    assert emit_conic_text(a) == emit_conic_text(b)


def test_two_sensor_values():
    spec = build_line_cover([(1.0, 1.0, 1.0, 2)], 1.0)
    res = solve_mip(compile_per(spec, "integer"))
    assert res.incumbent_value == pytest.approx(2.0, abs=1e-6)


def test_overloaded_line_is_infeasible():
    spec = build_line_cover([(1.0, 1.0, 1.0, 2)], 5.0)
    assert solve_mip(compile_per(spec, "integer")).status == "infeasible"


def test_lc_generator_ranges_and_determinism():
    params = LCParams(T=6, N=3, seed=21)
    spec, meta = gen_lc_instance(params)
    n = params.T * params.N
    assert meta["c_max"] in (10 * n, 20 * n, 30 * n)
    for cls in spec.classes:
        f = cls.omega.blocks[0][0].rows[-1][0]
        assert n <= f.quad[0] <= 30 * n
        assert cls.obj_y[0] == int(cls.obj_y[0]) and 1 <= cls.obj_y[0] <= n
        assert cls.multiplicity == params.N
    again, _ = gen_lc_instance(params)
    assert spec_to_json(spec) == spec_to_json(again)
    other, _ = gen_lc_instance(LCParams(T=6, N=3, seed=22))
    assert spec_to_json(spec) != spec_to_json(other)


def _row_functions(on):
    """g_l coefficients (a_l, b_l) per coupled row, read off the block rows.

    Quadratic rows occupy one inequality; affine rows occupy a tied pair.
    The final row is the objective epigraph and is skipped.
    """
    out = []
    i = 0
    rows = on.rows
    while i < len(rows) - 1:
        func = rows[i][0]
        out.append((float(func.quad[0]), float(func.lin[0])))
        i += 1 if func.quad[0] > 0 else 2
    return out


def test_sqp_generator_feasible_by_construction():
    spec, meta = gen_sqp_instance(SQPParams(T=3, N=2, m=2, seed=9))
    assert validate_problem(spec).ok
    # evaluate every global row at the hidden point with all members on
    for l, (sense, rhs) in enumerate(spec.global_rows):
        total = 0.0
        for t, cls in enumerate(spec.classes):
            al, bl = _row_functions(cls.omega.blocks[0][0])[l]
            xh = np.array(meta["xhat"][t])
            total += float(np.sum(al * xh**2 + bl * xh))
        if sense == "==":
            assert total == pytest.approx(rhs, abs=1e-9)
        else:
            assert total <= rhs + 1e-9


def test_sqp_optimum_below_witness():
    spec, meta = gen_sqp_instance(SQPParams(T=3, N=2, m=2, seed=9))
    res = solve_mip(compile_per(spec, "integer"))
    assert res.status == "optimal"
    witness = 0.0
    for t, cls in enumerate(spec.classes):
        on = cls.omega.blocks[0][0]
        f = on.rows[-1][0]
        xh = np.array(meta["xhat"][t])
        witness += float(np.sum(f.quad[0] * xh**2 + f.lin[0] * xh))
        witness += cls.obj_y[0] * len(xh)
    assert res.incumbent_value <= witness + 1e-6


def test_changing_m_keeps_objective_draws():
    a, _ = gen_sqp_instance(SQPParams(T=3, N=2, m=2, seed=4))
    b, _ = gen_sqp_instance(SQPParams(T=3, N=2, m=4, seed=4))
    for ca, cb in zip(a.classes, b.classes):
        fa = ca.omega.blocks[0][0].rows[-1][0]
        fb = cb.omega.blocks[0][0].rows[-1][0]
        assert fa.quad[0] == fb.quad[0] and fa.lin[0] == fb.lin[0]
        assert ca.obj_y[0] == cb.obj_y[0]
