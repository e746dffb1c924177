import numpy as np
import pytest

from splitfem_rsw.closures import ClosureKind, ClosureSpec, close_state, close_to_nodal
from splitfem_rsw.errors import SingularSystemError, ValidationError
from splitfem_rsw.mesh import State, build_mesh, mesh_from_nodes
from splitfem_rsw.operators import build_operators, solve_counter

ALL_KINDS = [ClosureKind.GP1, ClosureKind.GP0, ClosureKind.AVG]


def odd_ops(n=9, length=1.0):
    return build_operators(build_mesh(n, length))


def test_kind_string_roundtrip():
    for kind in ALL_KINDS:
        assert ClosureKind.from_string(str(kind)) is kind
    with pytest.raises(ValidationError):
        ClosureKind.from_string("galerkin")


def test_spec_label_is_velocity_then_height():
    spec = ClosureSpec.from_label("gp1-gp0")
    assert spec.velocity is ClosureKind.GP1
    assert spec.height is ClosureKind.GP0
    assert spec.label == "gp1-gp0"
    assert spec.needs_odd_n()
    assert not ClosureSpec.from_label("avg-avg").needs_odd_n()


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_constancy_preserved(kind):
    for ops in (odd_ops(9), build_operators(mesh_from_nodes([0.0, 0.2, 0.5, 0.6, 0.8], 1.0))):
        out = close_to_nodal(kind, ops, np.full(ops.mesh.n, 3.25))
        assert np.max(np.abs(out - 3.25)) <= 1e-13


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_linearity(kind):
    ops = odd_ops(11)
    rng = np.random.default_rng(4)
    x = rng.standard_normal(11)
    y = rng.standard_normal(11)
    a, b = 1.7, -0.4
    lhs = close_to_nodal(kind, ops, a * x + b * y)
    rhs = a * close_to_nodal(kind, ops, x) + b * close_to_nodal(kind, ops, y)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_avg_two_point_means():
    ops = odd_ops(5)
    out = close_to_nodal(ClosureKind.AVG, ops, np.array([0.0, 1.0, 0.0, 1.0, 0.0]))
    # node l averages elements l-1 and l
    assert np.allclose(out, [0.0, 0.5, 0.5, 0.5, 0.5])


def test_gp1_matches_dense_l2_projection_oracle():
    # dense oracle: assemble M_nn and the P0->P1 pairing by quadrature, solve densely
    ops = odd_ops(8)
    mesh = ops.mesh
    rng = np.random.default_rng(9)
    c = rng.standard_normal(8)
    xi = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
    w = np.array([0.5, 0.5])
    n = mesh.n
    mass = np.zeros((n, n))
    load = np.zeros(n)
    for e in range(n):
        for l in range(n):
            if l == e:
                hat_l = 1.0 - xi
            elif l == (e + 1) % n:
                hat_l = xi
            else:
                continue
            load[l] += mesh.dx[e] * np.sum(w * hat_l * c[e])
            for lp in range(n):
                if lp == e:
                    hat_lp = 1.0 - xi
                elif lp == (e + 1) % n:
                    hat_lp = xi
                else:
                    continue
                mass[l, lp] += mesh.dx[e] * np.sum(w * hat_l * hat_lp)
    expect = np.linalg.solve(mass, load)
    got = close_to_nodal(ClosureKind.GP1, ops, c)
    assert np.max(np.abs(got - expect)) <= 1e-12


def test_gp1_residual_is_l2_orthogonal_to_hats():
    ops = odd_ops(13)
    mesh = ops.mesh
    rng = np.random.default_rng(12)
    c = rng.standard_normal(13)
    x = close_to_nodal(ClosureKind.GP1, ops, c)
    # assembled inner products <x_h - c_h, hat_l> = M_nn x - M_en c
    resid = ops.mass_nn.matvec(x) - ops.mass_en.matvec(c)
    assert np.max(np.abs(resid)) <= 1e-12


def test_gp0_reproduces_element_means():
    ops = odd_ops(9)
    rng = np.random.default_rng(3)
    c = rng.standard_normal(9)
    x = close_to_nodal(ClosureKind.GP0, ops, c)
    means = 0.5 * (x + np.roll(x, -1))
    assert np.max(np.abs(means - c)) <= 1e-12


def test_gp0_even_n_raises():
    ops = build_operators(build_mesh(8, 1.0))
    with pytest.raises(SingularSystemError):
        close_to_nodal(ClosureKind.GP0, ops, np.ones(8))


def test_non_finite_input_rejected():
    ops = odd_ops(5)
    bad = np.array([1.0, np.inf, 0.0, 0.0, 0.0])
    with pytest.raises(ValidationError):
        close_to_nodal(ClosureKind.AVG, ops, bad)


def test_avg_performs_no_linear_solve():
    ops = odd_ops(7)
    c = np.arange(7, dtype=float)
    before = solve_counter.count
    close_to_nodal(ClosureKind.AVG, ops, c)
    assert solve_counter.count == before
    close_to_nodal(ClosureKind.GP1, ops, c)
    assert solve_counter.count == before + 1
    close_to_nodal(ClosureKind.GP0, ops, c)
    assert solve_counter.count == before + 2


def test_close_state_rest_state_for_every_spec():
    ops = odd_ops(9)
    state = State.rest(ops.mesh, 2.0)
    for hk in ALL_KINDS:
        for vk in ALL_KINDS:
            h0, u0, v0 = close_state(ClosureSpec(height=hk, velocity=vk), ops, state)
            assert np.max(np.abs(h0 - 2.0)) <= 1e-13
            assert np.max(np.abs(u0)) == 0.0
            assert np.max(np.abs(v0)) == 0.0


def test_close_state_composes_single_field_closures():
    ops = odd_ops(9)
    rng = np.random.default_rng(8)
    state = State(ops.mesh, rng.standard_normal(9), rng.standard_normal(9), 1.0 + 0.1 * rng.standard_normal(9))
    spec = ClosureSpec(height=ClosureKind.GP0, velocity=ClosureKind.GP1)
    h0, u0, v0 = close_state(spec, ops, state)
    assert np.array_equal(h0, close_to_nodal(ClosureKind.GP0, ops, state.h))
    assert np.array_equal(u0, close_to_nodal(ClosureKind.GP1, ops, state.u))
    assert np.array_equal(v0, close_to_nodal(ClosureKind.GP1, ops, state.v))
