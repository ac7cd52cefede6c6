import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)

FIG1 = dict(n_free=4, j_coupling=(1.0, 1.0, -0.6058), theta=np.pi / 2, phi=0.0, mu=1.0)
FIG2_MIXED = dict(n_free=4, j_coupling=(1.0, 1.7, -0.137), theta=2 * np.pi / 7, phi=0.0, mu=-0.7)
FIG3 = dict(n_free=1, j_coupling=(1.0, 2.3, -0.61), theta=0.0, phi=0.0, mu=1.0)


def brute_liouvillian(h, jumps):
    """Column j of the matrix is vec(L[E_j]) for the row-major matrix unit E_j.

    Independent of any Kronecker-product identity: the map is applied to
    each basis matrix with plain matrix products.
    """
    d = h.shape[0]
    out = np.zeros((d * d, d * d), dtype=complex)
    for col in range(d * d):
        e = np.zeros((d, d), dtype=complex)
        e[divmod(col, d)] = 1.0
        r = -1j * (h @ e - e @ h)
        for op, rate in jumps:
            od = op.conj().T
            r += rate * (op @ e @ od - 0.5 * (od @ op @ e + e @ od @ op))
        out[:, col] = r.reshape(-1)
    return out


def chain_hamiltonian(n_free, j):
    """XYZ chain written out with explicit loops over sites (oracle)."""
    n = n_free + 1
    h = 0
    for site in range(n_free):
        for coupling, s in zip(j, (SX, SY, SZ)):
            ops = [I2] * n
            ops[site] = s
            ops[site + 1] = s
            term = ops[0]
            for o in ops[1:]:
                term = np.kron(term, o)
            h = h + coupling * term
    return h


def boundary_jumps(theta, phi, mu, d1):
    s = np.array([np.cos(theta / 2) * np.exp(-0.5j * phi), np.sin(theta / 2) * np.exp(0.5j * phi)])
    sp = np.array([-np.sin(theta / 2) * np.exp(-0.5j * phi), np.cos(theta / 2) * np.exp(0.5j * phi)])
    l1 = np.outer(s, sp.conj())
    eye = np.eye(d1)
    return [(np.kron(l1, eye), (1 + mu) / 2), (np.kron(l1.conj().T, eye), (1 - mu) / 2)]


def match_cost(a, b):
    a, b = np.asarray(a), np.asarray(b)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c]


def multiset_distance(a, b):
    return float(np.max(match_cost(a, b), initial=0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
