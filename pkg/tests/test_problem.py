import json

import numpy as np
import pytest

from hjlab.problem import (
    DomainMode,
    DomainSpec,
    Field,
    ProblemSpec,
    box_measure,
    make_grid,
    spec_from_json,
    spec_from_kv,
    spec_to_dict,
    spec_to_json,
    spec_to_kv,
    validate_spec,
)


def test_validate_accepts_reference_parameters():
    spec = ProblemSpec(q=1.5, p=2.0, lam=0.0, gamma=1.0, nu=1.0, dim=1)
    assert validate_spec(spec).ok


def test_validate_rejects_small_q():
    report = validate_spec(ProblemSpec(q=0.9))
    assert "q must exceed 1" in report.violations


def test_validate_rejects_fully_degenerate_equation():
    report = validate_spec(ProblemSpec(nu=0.0, gamma=0.0))
    assert "degenerate: no diffusion and no absorption" in report.violations


def test_validate_p_laplacian_needs_diffusivity():
    report = validate_spec(ProblemSpec(p=3.0, nu=0.0, gamma=1.0))
    assert any("p != 2" in v for v in report.violations)


@pytest.mark.parametrize("bad", [dict(lam=-0.5), dict(gamma=-1.0), dict(nu=-1.0),
                                 dict(p=0.5), dict(dim=3), dict(horizon=-1.0)])
def test_validate_flags_each_bad_field(bad):
    assert not validate_spec(ProblemSpec(**bad)).ok


def test_make_grid_1d_spacing_and_node_count():
    g = make_grid(DomainSpec(half_width=1.0, cells_per_axis=8), 1)
    assert g.h == 0.25
    assert g.shape == (9,)
    assert g.axis[0] == -1.0 and g.axis[-1] == 1.0


def test_make_grid_2d_spacing_and_node_count():
    g = make_grid(DomainSpec(half_width=2.0, cells_per_axis=16), 2)
    assert g.h == 0.25
    assert g.shape == (17, 17)


def test_make_grid_rejects_coarse_domains():
    with pytest.raises(ValueError):
        make_grid(DomainSpec(half_width=1.0, cells_per_axis=4), 1)


@pytest.mark.parametrize("dim", [1, 2])
def test_index_coordinate_round_trip(dim):
    g = make_grid(DomainSpec(half_width=1.5, cells_per_axis=12), dim)
    for flat in range(int(np.prod(g.shape))):
        idx = np.unravel_index(flat, g.shape)
        assert g.node_index(g.node_coord(idx)) == idx


@pytest.mark.parametrize("dim", [1, 2])
def test_interior_quadrature_approximates_box_measure(dim):
    g = make_grid(DomainSpec(half_width=1.0, cells_per_axis=64), dim)
    exact = 2.0**dim
    assert abs(box_measure(g) - exact) <= 2 * dim * exact * g.h


def test_spec_kv_round_trip():
    spec = ProblemSpec(q=1.7, p=2.5, lam=0.5, gamma=0.3, nu=1.0, dim=2,
                       domain=DomainSpec(2.5, DomainMode.DIRICHLET, 32), horizon=0.75)
    assert spec_from_kv(spec_to_kv(spec)) == spec


def test_spec_json_round_trip_and_keys():
    spec = ProblemSpec()
    d = json.loads(spec_to_json(spec))
    assert set(d) == {"q", "p", "lambda", "gamma", "nu", "dim", "half_width",
                      "mode", "cells_per_axis", "horizon"}
    assert spec_from_json(spec_to_json(spec)) == spec


def test_spec_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        spec_from_kv("q = 1.5\nwibble = 3\n")


def test_field_shape_must_match_grid():
    g = make_grid(DomainSpec(cells_per_axis=8), 1)
    with pytest.raises(ValueError):
        Field(np.zeros(5), g)


def test_field_zero_boundary_and_finite_check():
    g = make_grid(DomainSpec(cells_per_axis=8), 2)
    f = Field(np.ones(g.shape), g)
    f.zero_boundary()
    assert f.values[0, :].sum() == 0 and f.values[:, -1].sum() == 0
    assert f.values[4, 4] == 1.0
    f.values[3, 3] = np.nan
    with pytest.raises(FloatingPointError):
        f.assert_finite()
