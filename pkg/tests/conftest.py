import numpy as np
import pytest

from nhrotor import SystemParams, make_grid


def dft_matrix(grid):
    """W[k, i] = exp(i n_i theta_k) / sqrt(N), built element by element."""
    N = grid.size
    W = np.empty((N, N), dtype=complex)
    for k, th in enumerate(grid.theta):
        for i, n in enumerate(grid.n):
            W[k, i] = np.exp(1j * n * th) / np.sqrt(N)
    return W


def dense_floquet(params, grid):
    """Raw one-period matrix from explicit Kronecker products, no FFT code path."""
    W = dft_matrix(grid)
    W2 = np.kron(W, W)
    th1, th2 = np.meshgrid(grid.theta, grid.theta, indexing="ij")
    c1, c2 = np.cos(th1).ravel(), np.cos(th2).ravel()
    V_re = params.K1 * c1 + params.K2 * c2 + params.eps * params.hbar * c1 * c2
    V_im = params.lambda1 * c1 + params.lambda2 * c2
    kick = np.exp(-1j * V_re / params.hbar + V_im / params.hbar)
    n1, n2 = np.meshgrid(grid.n, grid.n, indexing="ij")
    free = np.exp(-0.5j * params.hbar * (n1.ravel() ** 2 + n2.ravel() ** 2))
    return free[:, None] * (W2.conj().T @ (kick[:, None] * W2))


@pytest.fixture
def ref_params():
    def make(lam, K=5.0, eps=0.3, hbar=0.06):
        return SystemParams.symmetric(K, lam, eps, hbar)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_amps(rng, N):
    return rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def report(request, capsys):
    """Record and print one pass/fail line for an acceptance criterion."""
    def emit(label, ok, detail):
        line = f"{label} {'PASS' if ok else 'FAIL'}: {detail}"
        request.config._acceptance_lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit
