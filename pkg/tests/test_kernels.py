import numpy as np
import pytest

from intervaldyn import kernels
from intervaldyn.zoo import make_logistic, make_lorenz


def python_orbit(f, x, n):
    out = [x]
    for _ in range(n):
        x = f.eval(x)
        out.append(x)
    return out


@pytest.mark.parametrize("f", [make_logistic(3.7), make_lorenz(0.5, 2, 2, 0.9, 0.1),
                               make_lorenz(0.4, 2.5, 1.5, 0.85, 0.2)], ids=lambda f: f.name)
def test_kernel_orbits_bitwise_equal_to_python_eval(backend, f):
    xs = np.random.default_rng(1).random(8)
    traj, status = kernels.trajectories(f.table(), xs, 200)
    for x, row, st in zip(xs, traj, status):
        assert st == kernels.OK
        ref = python_orbit(f, float(x), 200)
        assert row.tolist() == ref


def test_iterate_matches_trajectory_end(backend, logistic4):
    xs = np.linspace(0.01, 0.99, 37)
    xs = xs[xs != 0.5]
    end, st = kernels.iterate(logistic4.table(), xs, 50)
    traj, _ = kernels.trajectories(logistic4.table(), xs, 50)
    ok = st == kernels.OK
    assert np.array_equal(end[ok], traj[ok, -1])


def test_hit_exceptional_point_stops(backend, logistic4):
    _, st = kernels.iterate(logistic4.table(), [0.5, 0.25], 3)
    assert st[0] == kernels.HIT
    assert st[1] == kernels.OK


def test_backends_agree_on_omega_scan(logistic32):
    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled backend not built")
    xs = np.random.default_rng(3).random(40)
    res = []
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            res.append(kernels.omega_scan(logistic32.table(), xs, 1000, 2000, [1e-3, 1e-2]))
    a, b = res
    for key in ("period", "status", "mindist", "probe_count", "last"):
        assert np.array_equal(a[key], b[key]), key
    for oa, ob in zip(a["occupancy"], b["occupancy"]):
        assert np.array_equal(oa, ob)


@pytest.mark.parametrize("threads", [2, 3, 8])
def test_thread_count_does_not_change_results(backend, threads):
    f = make_lorenz(0.5, 2, 2, 0.9, 0.1)
    xs = np.random.default_rng(5).random(101)
    one = kernels.omega_scan(f.table(), xs, 500, 1000, [1e-3], threads=1)
    many = kernels.omega_scan(f.table(), xs, 500, 1000, [1e-3], threads=threads)
    assert np.array_equal(one["occupancy"][0], many["occupancy"][0])
    assert np.array_equal(one["last"], many["last"])


def test_lateral_orbit_kernel(backend, logistic4):
    coords, sides, idx, st = kernels.lateral_orbit(logistic4.table(), 0.5, -1, 5)
    assert coords.tolist() == [0.5, 1.0, 0.0, 0.0, 0.0, 0.0]
    assert sides.tolist() == [-1, -1, 1, 1, 1, 1]
    assert st == kernels.OK


def test_env_thread_default(monkeypatch):
    monkeypatch.setenv("INTERVALDYN_THREADS", "3")
    assert kernels.resolve_threads() == 3
    assert kernels.resolve_threads(5) == 5


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_env_forces_numpy_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, INTERVALDYN_BACKEND="python")
    out = subprocess.run([sys.executable, "-c",
                          "from intervaldyn import kernels; print(kernels.backend_name())"],
                         capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "python"
