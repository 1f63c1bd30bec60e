"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are collected and shown in the "acceptance criteria" section of
the pytest terminal summary.
"""
import math
import time
from contextlib import contextmanager

import numpy as np
from scipy import integrate

from ictmseg.cli import main
from ictmseg.drlse import (DrlseParams, dirac_eps, double_well_dp, drlse_run, drlse_step,
                           heaviside_eps)
from ictmseg.evalkit import (ball_structure, bbox_init, connected_components, dice, erode_init,
                             export_trace_csv, merging_fixture, read_trace_csv,
                             splitting_fixture, tiny_fixture)
from ictmseg.filters import EdgeParams, edge_indicator, heat_convolve, make_heat_kernel
from ictmseg.ictm import (IctmParams, IterationTrace, fixed_point_check, ictm_energy, ictm_run,
                          linearized_potential, threshold)
from ictmseg.io import encode_pgm, parse_pgm, read_metaimage, write_metaimage

import _report
import oracles


@contextmanager
def criterion(number, name):
    """Record PASS/FAIL for the block; the block sets ``state['detail']``."""
    state = {"detail": ""}
    start = time.perf_counter()
    try:
        yield state
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        _report.record(number, name, False, f"{state['detail']} {type(exc).__name__}: "
                       f"{str(exc).splitlines()[0] if str(exc) else ''} ({elapsed:.1f}s)".strip())
        print(f"criterion {number}: FAIL")
        raise
    elapsed = time.perf_counter() - start
    _report.record(number, name, True, f"{state['detail']} ({elapsed:.1f}s)".strip())
    print(f"criterion {number}: PASS")


def _within(limit, start):
    elapsed = time.perf_counter() - start
    assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"


def random_instance(rng, shape=(32, 32)):
    g = rng.uniform(0.05, 1.0, size=shape)
    init = rng.random(shape) < rng.uniform(0.1, 0.9)
    params = IctmParams(tau=float(rng.uniform(0.5, 4.0)), lam=float(rng.uniform(-1.0, 1.0)))
    return g, init, params


def structured_instance(rng, shape=(32, 32)):
    """Noisy discs for g and a random rectangle for the init."""
    yy, xx = np.indices(shape)
    image = np.zeros(shape)
    for _ in range(3):
        c, r = rng.uniform(4, 28, 2), rng.uniform(3, 9)
        image[(yy - c[0]) ** 2 + (xx - c[1]) ** 2 <= r * r] = 255.0
    image += rng.normal(0, 20, shape)
    g = edge_indicator(image, EdgeParams(sigma=1.0))
    init = np.zeros(shape, bool)
    (a, b), (c, d) = sorted(rng.integers(1, 31, 2)), sorted(rng.integers(1, 31, 2))
    init[a:b + 1, c:d + 1] = True
    params = IctmParams(tau=float(rng.uniform(0.5, 4.0)), lam=float(rng.uniform(-1.0, 1.0)))
    return g, init, params


def test_01_energy_decay():
    with criterion(1, "energy decay over 100+ random instances") as st:
        start = time.perf_counter()
        rng = np.random.default_rng(20240101)
        pairs = literal_misses = 0
        for i in range(120):
            g, init, p = (random_instance if i % 2 else structured_instance)(rng)
            e = ictm_run(g, init, p).trace.energies
            prev, nxt = e[:-1], e[1:]
            assert np.all(nxt <= prev + 1e-10 * np.abs(prev) + 1e-12), "energy increased"
            literal_misses += int(np.sum(nxt > prev * (1 + 1e-10) + 1e-12))
            pairs += len(nxt)
        _within(30, start)
        st["detail"] = (f"{pairs} pairs, 0 increases; literal E*(1+1e-10) form rejects "
                        f"{literal_misses} exact ties at negative energy")


def test_02_convolution_oracle():
    with criterion(2, "separable heat convolution vs direct n-D summation") as st:
        start = time.perf_counter()
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(60):
            ndim = int(rng.integers(2, 4))
            shape = tuple(int(n) for n in rng.integers(2, 10, size=ndim))
            tau = float(rng.uniform(0.5, 4.0)) if ndim == 2 else float(rng.uniform(0.5, 1.5))
            f = rng.normal(size=shape)
            got = heat_convolve(f, make_heat_kernel(tau))
            want = oracles.direct_heat(f, tau)
            rel = float(np.max(np.abs(got - want)) / np.max(np.abs(want)))
            worst = max(worst, rel)
            assert rel <= 1e-10
        _within(10, start)
        st["detail"] = f"60 seeds, worst relative error {worst:.1e}"


def test_03_energy_oracle():
    with criterion(3, "energy vs nested-sum evaluation on 6x6") as st:
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(50):
            g = rng.uniform(0.05, 1, size=(6, 6))
            u = rng.random((6, 6)) < 0.5
            tau, lam = float(rng.uniform(0.5, 4)), float(rng.uniform(-1, 1))
            want = oracles.nested_energy(g, u, tau, lam)
            got = ictm_energy(np.sqrt(g), u, IctmParams(tau=tau, lam=lam))
            rel = abs(got - want) / abs(want)
            worst = max(worst, rel)
            assert rel <= 1e-10
        st["detail"] = f"50 seeds, worst relative error {worst:.1e}"


def test_04_tiny_instance_optimality():
    with criterion(4, "4x4 bright square: ICTM reaches the enumerated minimum") as st:
        start = time.perf_counter()
        fx = tiny_fixture()
        g = edge_indicator(fx.image, fx.edge)
        energies, masks = oracles.all_energies(g, fx.ictm.tau, fx.ictm.lam)
        assert len(energies) == 65536
        best = masks[int(np.argmin(energies))].reshape(g.shape)
        res = ictm_run(g, fx.init, fx.ictm)
        assert res.converged
        assert np.array_equal(res.mask, best), "ICTM did not reach the global minimizer"
        rel = abs(res.final_energy - energies.min()) / abs(energies.min())
        assert rel <= 1e-12
        _within(60, start)
        st["detail"] = (f"minimizer has {int(best.sum())}/16 cells, {res.iterations} iterations, "
                        f"relative energy error {rel:.1e}")


def test_05_topology():
    with criterion(5, "splitting gives 2 components, merging gives 1") as st:
        start = time.perf_counter()
        counts = []
        for fx, want in ((splitting_fixture(), 2), (merging_fixture(), 1)):
            res = ictm_run(edge_indicator(fx.image, fx.edge), fx.init, fx.ictm)
            assert res.converged and res.iterations <= 5000 and res.trace[-1].flips == 0
            n = connected_components(res.mask)
            counts.append((n, res.iterations))
            assert n == want, f"expected {want} components, got {n}"
        _within(30, start)
        st["detail"] = (f"split {counts[0][0]} comps in {counts[0][1]} its, "
                        f"merge {counts[1][0]} comp in {counts[1][1]} its")


def test_06_baseline_comparison():
    with criterion(6, "ICTM iterations <= DRLSE/3, both dice >= 0.95") as st:
        start = time.perf_counter()
        fx = splitting_fixture()
        g = edge_indicator(fx.image, fx.edge)
        a = ictm_run(g, fx.init, fx.ictm)
        b = drlse_run(g, fx.init, fx.drlse)
        da, db = dice(a.mask, fx.truth), dice(b.mask, fx.truth)
        st["detail"] = (f"ICTM {a.iterations} its dice {da:.4f}, DRLSE {b.iterations} its "
                        f"dice {db:.4f}, ratio {b.iterations / a.iterations:.2f}")
        assert a.converged and b.converged
        assert 3 * a.iterations <= b.iterations
        assert da >= 0.95 and db >= 0.95
        _within(300, start)


def test_07_fixed_point_and_scale_invariance():
    with criterion(7, "converged results are fixed points; g -> 2g invariance") as st:
        rng = np.random.default_rng(7)
        checked = 0
        runs = [(edge_indicator(fx.image, fx.edge), fx.init, fx.ictm)
                for fx in (splitting_fixture(), merging_fixture(), tiny_fixture())]
        runs += [random_instance(rng) for _ in range(30)]
        for g, init, p in runs:
            res = ictm_run(g, init, p)
            if res.converged:
                assert fixed_point_check(g, res.mask, p)
                checked += 1
        for _ in range(25):
            g, init, p = random_instance(rng)
            a = threshold(linearized_potential(g, np.sqrt(g), init, p))
            b = threshold(linearized_potential(2 * g, np.sqrt(2 * g), init, p))
            assert np.array_equal(a, b)
        st["detail"] = f"{checked} converged runs checked, 25 scale pairs identical"


def test_08_drlse_numerics():
    with criterion(8, "DRLSE pointwise functions and stencil oracle") as st:
        gap = abs(math.sin(2 * math.pi) / (2 * math.pi) - (1.0 - 1.0) / 1.0)
        assert gap < 1e-6
        assert abs(double_well_dp(1 - 1e-7) - double_well_dp(1 + 1e-7)) < 1e-6
        eps = 1.5
        mass, _ = integrate.quad(lambda x: dirac_eps(x, eps), -eps, eps, epsabs=1e-13)
        assert abs(mass - 1) < 1e-6
        h = 1e-5
        for x in np.linspace(-1.45, 1.45, 59):
            fd = (heaviside_eps(x + h, eps) - heaviside_eps(x - h, eps)) / (2 * h)
            assert abs(fd - dirac_eps(x, eps)) < 1e-6
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(30):
            phi = rng.normal(scale=2.0, size=(8, 8))
            g = rng.uniform(0.05, 1, size=(8, 8))
            p = DrlseParams(lam=float(rng.uniform(-4, 4)))
            want = oracles.drlse_step_oracle(phi, g, p.alpha, p.lam, p.mu, p.dt, p.epsilon)
            err = float(np.max(np.abs(drlse_step(phi, g, p) - want)))
            worst = max(worst, err)
            assert err < 1e-12
        st["detail"] = f"branch gap {gap:.1e}, mass error {abs(mass - 1):.1e}, stencil {worst:.1e}"


def test_09_protocol_fidelity():
    with criterion(9, "bbox halving, radius-10 erosion, dice triple") as st:
        truth = np.zeros((30, 40), bool)
        truth[5:15, 10:30] = True
        expected = np.zeros_like(truth)
        expected[7:12, 15:25] = True  # 5 x 10, concentric
        assert np.array_equal(bbox_init(truth), expected)
        odd = np.zeros((20, 20), bool)
        odd[3:10, 4:9] = True  # 7 x 5 -> 4 x 3
        exp_odd = np.zeros_like(odd)
        exp_odd[4:8, 5:8] = True
        assert np.array_equal(bbox_init(odd), exp_odd)
        ball = ball_structure(10, 3)
        out = erode_init(ball, 10)
        assert out.sum() == 1 and out[10, 10, 10]
        from test_evalkit import erode_oracle
        blob = np.zeros((50, 60), bool)
        blob[5:45, 8:50] = True
        blob[20:30, 30:50] = False
        assert np.array_equal(erode_init(blob, 10), erode_oracle(blob, 10))
        a = np.zeros((4, 4), bool)
        a[0] = True
        b = np.zeros((4, 4), bool)
        b[0, :2] = b[1, :2] = True
        far = np.zeros((4, 4), bool)
        far[3, 3] = True
        assert (dice(a, a), dice(a, far), dice(a, b)) == (1.0, 0.0, 0.5)
        st["detail"] = "bbox 10x20 -> 5x10, 7x5 -> 4x3, ball -> center voxel, dice (1, 0, 0.5)"


def test_10_determinism_and_formats(tmp_path, capsys):
    with criterion(10, "byte-identical CLI reruns, exact round-trips, CSV normalization") as st:
        from test_cli import SPLIT_CFG
        outputs = []
        for run in ("a", "b"):
            d = tmp_path / run
            d.mkdir()
            assert main(["synth", "two-discs", "--seed", "5", "--noise", "3",
                         "--out-image", str(d / "img.pgm"), "--out-truth", str(d / "truth.pgm")]) == 0
            (d / "split.cfg").write_text(SPLIT_CFG)
            assert main(["segment", str(d / "split.cfg")]) == 0
            assert main(["compare", str(d / "split.cfg")]) == 0
            assert main(["eval", "--pred", str(d / "mask.pgm"), "--truth", str(d / "truth.pgm")]) == 0
            text = capsys.readouterr().out
            outputs.append((sorted((f.name, f.read_bytes()) for f in d.iterdir()),
                            "".join(l for l in text.splitlines(True) if l.startswith("dice="))))
        assert outputs[0] == outputs[1]
        rng = np.random.default_rng(10)
        img = rng.integers(0, 65536, size=(9, 13)).astype(float)
        assert np.array_equal(parse_pgm(encode_pgm(img, 65535)), img)
        vol = rng.normal(size=(4, 5, 6)).astype(np.float32).astype(float)
        write_metaimage(vol, "MET_FLOAT", tmp_path / "v.mha")
        assert np.array_equal(read_metaimage(tmp_path / "v.mha"), vol)
        trace = IterationTrace()
        for i, e in enumerate([10.0, 6.0, 4.0]):
            trace.append(i, e, 0, 0.0)
        export_trace_csv(trace, tmp_path / "t.csv")
        _, norm = read_trace_csv(tmp_path / "t.csv")
        assert norm.tolist() == [1.0, 1 / 3, 0.0]
        st["detail"] = f"{len(outputs[0][0])} artifacts identical across reruns"
