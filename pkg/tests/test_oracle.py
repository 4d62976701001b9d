import numpy as np
import pytest

from weaktraj.errors import MeshError
from weaktraj.gaussians import isotropic_gaussian
from weaktraj.oracle import (Mesh, grid_propagate, inner, l2_distance,
                             mesh_for_branches, sample_gaussian,
                             sample_superposition)
from weaktraj.propagation import propagate_forward


@pytest.fixture(scope="module")
def branch(params, grid_short):
    initial = isotropic_gaussian([0.0, 0.0], [17.0, 7.0], 1.3)
    return propagate_forward(initial, params, grid_short)


def test_mesh_geometry():
    mesh = Mesh(lo=[-1.0, -2.0], hi=[1.0, 2.0], n=(64, 128))
    assert mesh.dim == 2
    assert mesh.axis_coords(0).size == 64
    assert mesh.spacing(1) == pytest.approx(4.0 / 127)
    assert mesh.cell_volume() == pytest.approx(mesh.spacing(0) * mesh.spacing(1))


def test_mesh_margin_rejected(branch):
    with pytest.raises(MeshError):
        mesh_for_branches([branch], pad_sigmas=3.0)


def test_sampled_norm(branch):
    mesh = mesh_for_branches([branch], n=256)
    state = sample_gaussian(mesh, branch.state_at(0.0))
    assert state.norm_squared() == pytest.approx(1.0, abs=1e-10)


def test_inner_and_distance(branch):
    mesh = mesh_for_branches([branch], n=256)
    a = sample_gaussian(mesh, branch.state_at(0.0))
    assert inner(a, a).real == pytest.approx(1.0, abs=1e-10)
    assert l2_distance(a, a) == 0.0


def test_short_propagation_matches_analytic(params, branch):
    mesh = mesh_for_branches([branch], n=256)
    state = sample_gaussian(mesh, branch.state_at(0.0), t=0.0)
    state = grid_propagate(state, params, 0.1, dt=5e-4)
    target = sample_gaussian(mesh, branch.state_at(0.1), t=0.1)
    assert l2_distance(state, target) < 1e-5
    assert state.norm_squared() == pytest.approx(1.0, abs=1e-10)


def test_backward_propagation_inverts(params, branch):
    mesh = mesh_for_branches([branch], n=256)
    start = sample_gaussian(mesh, branch.state_at(0.0), t=0.0)
    there = grid_propagate(start, params, 0.1, dt=5e-4)
    back = grid_propagate(there, params, 0.0, dt=5e-4)
    assert l2_distance(back, start) < 1e-10


def test_coarse_dt_rejected(params, branch):
    mesh = mesh_for_branches([branch], n=256)
    state = sample_gaussian(mesh, branch.state_at(0.0), t=0.0)
    with pytest.raises(MeshError):
        grid_propagate(state, params, 0.5, dt=1.0)


def test_superposition_sampling(psi_short):
    mesh = mesh_for_branches(psi_short.branches, n=256)
    state = sample_superposition(mesh, psi_short, 0.0)
    from weaktraj.weak import postselection_overlap
    expected = postselection_overlap(psi_short, psi_short, 0.0).real
    assert state.norm_squared() == pytest.approx(expected, abs=1e-8)
