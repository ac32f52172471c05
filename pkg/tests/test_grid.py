import math

import numpy as np
import pytest

from kirchlab.grid import (FaceField, Grid, ScalarField, coeff_grad_inf,
                           coeff_node_gradient, dirichlet_lambda1, divergence,
                           face_average, grad_inner, grad_norm_sq, gradient,
                           integrate, laplacian, node_grad_sq, read_field,
                           write_field)

from conftest import field_from, smooth_random, unit_grid


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(0, 3, 0, 0, 0.1, 0.1)
    with pytest.raises(ValueError):
        Grid(3, 3, 0, 0, -0.1, 0.1)
    g = Grid.over_rectangle(3, 7, 2.0, 1.0)
    assert g.lx == pytest.approx(2.0) and g.ly == pytest.approx(1.0)
    assert g.hx == pytest.approx(0.5) and g.hy == pytest.approx(0.125)


def test_field_validation():
    g = unit_grid(3)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros(5))
    with pytest.raises(ValueError):
        ScalarField(g, np.full(9, np.nan))


def test_gradient_zero_field():
    g = unit_grid(4)
    F = gradient(ScalarField.zeros(g))
    assert not F.xfaces.any() and not F.yfaces.any()


def test_gradient_single_node_hand_stencil():
    g = Grid(1, 1, 0.0, 0.0, 0.5, 0.5)
    F = gradient(ScalarField(g, np.array([3.0])))
    assert F.xfaces.reshape(-1) == pytest.approx([6.0, -6.0])
    assert F.yfaces.reshape(-1) == pytest.approx([6.0, -6.0])


def test_gradient_interior_face_hand_stencil():
    g = Grid(3, 1, 0.0, 0.0, 0.25, 0.25)
    F = gradient(ScalarField(g, np.array([1.0, 2.0, 1.0])))
    assert F.xfaces[0, 1] == pytest.approx(4.0)  # between first and second node
    assert F.xfaces[0, 2] == pytest.approx(-4.0)


def test_divergence_zero_faces():
    g = unit_grid(5)
    F = FaceField(g, np.zeros((5, 6)), np.zeros((6, 5)))
    assert not divergence(F).values.any()


def test_divergence_hand_stencil():
    g = Grid(1, 1, 0.0, 0.0, 0.5, 0.5)
    F = FaceField(g, np.array([[6.0, -6.0]]), np.array([[6.0], [-6.0]]))
    assert divergence(F).values[0] == pytest.approx(-48.0)
    lap = laplacian(ScalarField(g, np.array([3.0])))
    assert lap.values[0] == pytest.approx(-48.0)


def test_laplacian_is_div_grad_bit_for_bit(rng):
    g = Grid.over_rectangle(9, 6, 1.3, 0.7)
    u = smooth_random(g, rng)
    lap = laplacian(u)
    ref = divergence(gradient(u))
    assert (lap.values == ref.values).all()


def test_laplacian_discrete_eigenvector():
    g = unit_grid(15)
    u = field_from(g, lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y))
    lam1 = dirichlet_lambda1(g)
    lap = laplacian(u)
    assert lap.values == pytest.approx(-lam1 * u.values, rel=1e-11, abs=1e-11)


def test_integrate_constant_and_zero():
    g = unit_grid(8)
    assert integrate(ScalarField.full(g, 1.0)) == pytest.approx(64 * g.hx * g.hy)
    assert integrate(ScalarField.zeros(g)) == 0.0


def test_integrate_sine_product_against_analytic():
    g = unit_grid(64)
    f = field_from(g, lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y))
    assert integrate(f) == pytest.approx(4.0 / math.pi ** 2, abs=1e-3)


def test_grad_norm_sq_hand_value():
    g = Grid(1, 1, 0.0, 0.0, 0.5, 0.5)
    assert grad_norm_sq(ScalarField(g, np.array([3.0]))) == pytest.approx(36.0)
    assert grad_norm_sq(ScalarField.zeros(g)) == 0.0


def test_grad_norm_sq_eigenvector_identity():
    # for the discrete eigenvector, the gradient energy is exactly lambda1 * mass
    g = unit_grid(17)
    v = field_from(g, lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y))
    lam1 = dirichlet_lambda1(g)
    mass = integrate(ScalarField(g, v.values ** 2))
    assert grad_norm_sq(v) == pytest.approx(lam1 * mass, rel=1e-13)


@pytest.mark.parametrize("nx,ny", [(1, 1), (3, 2), (8, 8), (17, 9), (33, 33)])
def test_summation_by_parts_adjointness(nx, ny, rng):
    g = Grid.over_rectangle(nx, ny, 1.1, 0.9)
    u = ScalarField(g, rng.normal(size=g.n_nodes))
    F = FaceField(g, rng.normal(size=(ny, nx + 1)), rng.normal(size=(ny + 1, nx)))
    lhs = g.cell_area * float(divergence(F).values @ u.values)
    Fu = gradient(u)
    rhs = -g.cell_area * float((F.xfaces * Fu.xfaces).sum() + (F.yfaces * Fu.yfaces).sum())
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("nx,ny", [(3, 3), (16, 8), (31, 31)])
def test_discrete_green_identity(nx, ny, rng):
    g = Grid.over_rectangle(nx, ny, 0.8, 1.4)
    u = ScalarField(g, rng.normal(size=g.n_nodes))
    lhs = grad_norm_sq(u)
    rhs = -integrate(ScalarField(g, u.values * laplacian(u).values))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_operator_linearity(rng):
    g = unit_grid(12)
    u = ScalarField(g, rng.normal(size=g.n_nodes))
    v = ScalarField(g, rng.normal(size=g.n_nodes))
    au, bv = 1.7, -0.3
    comb = ScalarField(g, au * u.values + bv * v.values)
    for op in (laplacian,):
        lhs = op(comb).values
        rhs = au * op(u).values + bv * op(v).values
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    Fc, Fu, Fv = gradient(comb), gradient(u), gradient(v)
    assert Fc.xfaces == pytest.approx(au * Fu.xfaces + bv * Fv.xfaces, rel=1e-12, abs=1e-12)
    assert grad_inner(u, v) == pytest.approx(
        0.25 * (grad_norm_sq(ScalarField(g, u.values + v.values))
                - grad_norm_sq(ScalarField(g, u.values - v.values))), rel=1e-10)


def test_coeff_node_gradient_linear_ramp():
    g = unit_grid(16)
    c = field_from(g, lambda X, Y: 1.0 + X)
    gx, gy = coeff_node_gradient(c)
    assert gx == pytest.approx(np.ones_like(gx), rel=1e-12)
    assert gy == pytest.approx(np.zeros_like(gy), abs=1e-12)
    assert coeff_grad_inf(c) == pytest.approx(1.0, rel=1e-12)


def test_face_average_one_sided_boundary():
    g = unit_grid(4)
    c = field_from(g, lambda X, Y: 1.0 + X)
    cf = face_average(c)
    assert cf.xfaces[0, 0] == pytest.approx(c.mat[0, 0])
    assert cf.xfaces[0, -1] == pytest.approx(c.mat[0, -1])
    assert cf.xfaces[0, 2] == pytest.approx(0.5 * (c.mat[0, 1] + c.mat[0, 2]))


def test_node_grad_sq_counts_interior_faces(rng):
    # integrating the four-face average recovers the energy up to boundary faces
    g = unit_grid(10)
    u = smooth_random(g, rng)
    F = gradient(u)
    boundary = 0.5 * g.cell_area * (
        float(F.xfaces[:, 0] @ F.xfaces[:, 0]) + float(F.xfaces[:, -1] @ F.xfaces[:, -1])
        + float(F.yfaces[0, :] @ F.yfaces[0, :]) + float(F.yfaces[-1, :] @ F.yfaces[-1, :]))
    assert integrate(node_grad_sq(u)) + boundary == pytest.approx(grad_norm_sq(u), rel=1e-12)


def test_dirichlet_lambda1_hand_value():
    g = unit_grid(3)
    assert dirichlet_lambda1(g) == pytest.approx(128.0 * math.sin(math.pi / 8) ** 2,
                                                 rel=1e-14)
    g64 = unit_grid(64)
    assert dirichlet_lambda1(g64) == pytest.approx(2.0 * math.pi ** 2, rel=1e-3)


def test_field_file_roundtrip(tmp_path, rng):
    g = Grid.over_rectangle(5, 4, 2.0, 3.0, x0=-1.0, y0=0.5)
    f = ScalarField(g, rng.normal(size=g.n_nodes))
    path = tmp_path / "f.field"
    write_field(f, path)
    back = read_field(path)
    assert back.grid == g
    assert back.values == pytest.approx(f.values, rel=0, abs=0)


def test_field_file_rejects_mismatched_count(tmp_path):
    path = tmp_path / "bad.field"
    path.write_text("# field 2 2 0 0 0.5 0.5\n1.0 2.0 3.0\n")
    with pytest.raises(ValueError, match="expected 4 values"):
        read_field(path)


def test_field_file_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.field"
    path.write_text("# notafield 2 2 0 0 0.5 0.5\n1 2 3 4\n")
    with pytest.raises(ValueError, match="malformed field header"):
        read_field(path)
