import numpy as np
import pytest

from aerocouple import model_io


def make_model(n_modes, seed=0, n_nodes=4, ratios=None, damping_matrix=None,
               diagonal=False):
    """Random non-degenerate model for property-style tests."""
    rng = np.random.default_rng(seed)
    coords = rng.normal(size=(n_nodes, 3))
    ids = np.arange(1, n_nodes + 1)
    u_mat = rng.normal(size=(6 * n_nodes, n_modes))
    if diagonal:
        freqs = rng.uniform(1.0, 20.0, size=n_modes)
        gen_mass = np.eye(n_modes)
        gen_stiff = np.diag(freqs**2)
    else:
        a = rng.normal(size=(n_modes, n_modes))
        gen_mass = a @ a.T + n_modes * np.eye(n_modes)
        b = rng.normal(size=(n_modes, n_modes))
        gen_stiff = b @ b.T + n_modes * np.eye(n_modes)
        freqs = np.sqrt(np.sort(np.linalg.eigvalsh(
            np.linalg.solve(gen_mass, gen_stiff))).clip(min=0))
    model = model_io.StructuralModel(
        node_ids=ids, node_coords=coords, mode_matrix=u_mat,
        frequencies=freqs, gen_mass=gen_mass, gen_stiff=gen_stiff,
        damping_ratios=ratios, damping_matrix=damping_matrix,
        diagonal=diagonal,
    )
    model.validate()
    return model


def make_oscillator(omega, xi=None):
    """Single-DOF diagonal model with natural frequency ``omega``."""
    u_mat = np.zeros((6, 1))
    u_mat[2, 0] = 1.0
    ratios = None if xi is None else np.array([xi])
    model = model_io.StructuralModel(
        node_ids=np.array([1]), node_coords=np.zeros((1, 3)),
        mode_matrix=u_mat, frequencies=np.array([omega]),
        gen_mass=np.eye(1), gen_stiff=np.array([[omega**2]]),
        damping_ratios=ratios, diagonal=True,
    )
    model.validate()
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
