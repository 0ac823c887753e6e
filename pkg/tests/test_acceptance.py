"""Acceptance criteria, one test per criterion.

Each test records a ``criterion N: PASS|FAIL|N/A ...`` line; the lines are printed
as they are produced and again in an "acceptance criteria" section at the end
of the pytest run. Run just these with ``pytest -m acceptance``.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from ppclust.apcluster import run_ap, similarity_from_dissimilarity
from ppclust.combsolve import solve_assignment, solve_uniform_transport
from ppclust.datagen import generate_dataset, preset
from ppclust.emcluster import EmConfig, fit_em, map_assign
from ppclust.evaluate import rand_index
from ppclust.setdist import DistanceSpec, hausdorff, ospa, pairwise_dissimilarity, wasserstein

from conftest import ACCEPTANCE_LINES, brute_assignment, brute_rand, lp_transport

pytestmark = pytest.mark.acceptance


def record(number, ok, detail, status=None):
    status = status or ("PASS" if ok else "FAIL")
    line = f"criterion {number}: {status}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module", autouse=True)
def warm_jit():
    # load compiled kernels outside the timed sections
    solve_assignment(np.eye(2))
    solve_uniform_transport(np.ones((2, 3)))


def test_criterion_1_solver_oracles():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    assign_bad = 0
    for _ in range(500):
        n = int(rng.integers(1, 8))
        C = rng.uniform(0, 10, size=(n, n))
        _, total = solve_assignment(C)
        assign_bad += total != brute_assignment(C)
    worst = 0.0
    for _ in range(200):
        m, n = (int(v) for v in rng.integers(1, 7, size=2))
        C = rng.uniform(0, 10, size=(m, n))
        _, total = solve_uniform_transport(C)
        worst = max(worst, abs(total - lp_transport(C)))
    elapsed = time.perf_counter() - start
    ok = assign_bad == 0 and worst < 1e-9 and elapsed < 10
    assert record(1, ok, f"assignment mismatches={assign_bad}/500, transport max|err|={worst:.2e} "
                         f"over 200, {elapsed:.2f}s (limit 10s)")


def _pattern(rng, lo, hi):
    return rng.uniform(-5, 5, size=(int(rng.integers(lo, hi + 1)), 2))


def _axiom_violations(dist, triples, bound=None):
    worst = 0.0
    for X, Y, Z in triples:
        dxy, dyx = dist(X, Y), dist(Y, X)
        dxz, dzy, dyz = dist(X, Z), dist(Z, Y), dist(Y, Z)
        worst = max(worst, abs(dxy - dyx), dist(X, X),
                    dxy - (dxz + dzy), dxz - (dxy + dyz), dyz - (dxy + dxz))
        if bound is not None:
            worst = max(worst, dxy - bound, -dxy)
    return worst


def test_criterion_2_metric_axioms():
    rng = np.random.default_rng(2)
    c, p = 3.0, 2.0
    start = time.perf_counter()
    finite = [tuple(_pattern(rng, 1, 6) for _ in range(3)) for _ in range(1000)]
    with_empty = [tuple(_pattern(rng, 0, 6) for _ in range(3)) for _ in range(1000)]
    worst = {
        "hausdorff": _axiom_violations(hausdorff, finite),
        "wasserstein": _axiom_violations(lambda a, b: wasserstein(a, b, p), finite),
        "ospa": _axiom_violations(lambda a, b: ospa(a, b, p, c), with_empty, bound=c),
    }
    elapsed = time.perf_counter() - start
    ok = all(v <= 1e-9 for v in worst.values()) and elapsed < 30
    detail = ", ".join(f"{k} worst={v:.1e}" for k, v in worst.items())
    assert record(2, ok, f"1000 triples each: {detail}, {elapsed:.2f}s (limit 30s)")


def test_criterion_3_ospa_wasserstein_bridge():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        X, Y = rng.uniform(-5, 5, size=(n, 2)), rng.uniform(-5, 5, size=(n, 2))
        p = float(rng.choice([1.0, 2.0, 3.0]))
        c = float(np.sqrt(((X[:, None] - Y[None]) ** 2).sum(-1)).max()) + 1.0
        worst = max(worst, abs(ospa(X, Y, p, c) - wasserstein(X, Y, p)))
    assert record(3, worst < 1e-9, f"200 equal-cardinality pairs, max|ospa-wasserstein|={worst:.2e}")


def test_criterion_4_em_monotonicity():
    presets = ("separated", "card-only", "overlap")
    worst_drop = 0.0
    combos = set()
    for seed in range(50):
        family = ("poisson", "categorical")[seed % 2]
        K = 2 + (seed // 2) % 2
        combos.add((family, K))
        ds = generate_dataset(preset(presets[seed % 3], rng_seed=seed))
        _, trace = fit_em(ds, EmConfig(n_components=K, n_iterations=50, cardinality_family=family,
                                       rng_seed=seed, tol=-math.inf))
        lls = np.array([trace.initial_log_likelihood, *trace.log_likelihood])
        worst_drop = max(worst_drop, float(-np.diff(lls).min()))
    ok = worst_drop <= 1e-6 and len(combos) == 4
    assert record(4, ok, f"50 runs x 50 iterations over {sorted(combos)}, "
                         f"largest per-iteration decrease={worst_drop:.2e} (limit 1e-6)")


def test_criterion_5_simulated_em_accuracy():
    start = time.perf_counter()
    scores = []
    for seed in range(10):
        ds = generate_dataset(preset("separated", rng_seed=seed, patterns_per_component=100))
        model, _ = fit_em(ds, EmConfig(n_components=3, n_iterations=30, rng_seed=seed))
        scores.append(rand_index(map_assign(ds, model).hard_labels, ds.labels))
    elapsed = time.perf_counter() - start
    mean = float(np.mean(scores))
    ok = mean >= 0.90 and elapsed < 120
    assert record(5, ok, f"mean Rand index={mean:.4f} over 10 seeds (need >= 0.90), "
                         f"min={min(scores):.4f}, {elapsed:.2f}s (limit 120s)")


def _ap_rand(ds, spec):
    D = pairwise_dissimilarity(ds, spec)
    result = run_ap(similarity_from_dissimilarity(D, "median"))
    return rand_index(result.hard_labels, ds.labels)


def test_criterion_6_cardinality_sensitivity():
    ospa_scores, haus_scores = [], []
    for seed in range(5):
        ds = generate_dataset(preset("card-only", rng_seed=seed))
        ospa_scores.append(_ap_rand(ds, DistanceSpec("ospa", 2.0, 20.0)))
        haus_scores.append(_ap_rand(ds, DistanceSpec("hausdorff")))
    mo, mh = float(np.mean(ospa_scores)), float(np.mean(haus_scores))
    assert record(6, mo > mh, f"card-only, 5 seeds, preference=median: AP+OSPA(p=2, c=20) "
                              f"mean Rand={mo:.4f} vs AP+Hausdorff {mh:.4f}")


def test_criterion_7_rand_index_oracle():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(2, 51))
        a = rng.integers(0, int(rng.integers(1, n + 1)), size=n).tolist()
        b = rng.integers(0, int(rng.integers(1, n + 1)), size=n).tolist()
        mismatches += rand_index(a, b) != brute_rand(a, b)
    assert record(7, mismatches == 0, f"exact agreement on {100 - mismatches}/100 random partitions")


def test_criterion_8_texture_experiment():
    record(8, True, "the Texture image corpus and keypoint pipeline are out of scope; "
                    "criteria 5 and 6 stand in for it", status="N/A ")
    pytest.skip("Texture experiment is not reproducible without the image corpus")


def _cli(*argv):
    proc = subprocess.run([sys.executable, "-m", "ppclust", "-q", *map(str, argv)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_criterion_9_pipeline_determinism(tmp_path):
    files = []
    for run_dir in ("first", "second"):
        base = tmp_path / run_dir
        base.mkdir()
        _cli("gen", "--preset", "separated", "--seed", 7, "--patterns-per-component", 40,
             "--out", base / "d.jsonl", "--truth-out", base / "truth.csv")
        _cli("dist", "--metric", "ospa", "--p", 2, "--c", 20, "--in", base / "d.jsonl",
             "--out", base / "D.csv")
        _cli("ap", "--in", base / "D.csv", "--preference", "median", "--out", base / "ap.csv")
        _cli("em", "--in", base / "d.jsonl", "--k", 3, "--n-iter", 30, "--seed", 7,
             "--out", base / "em.csv")
        files.append({p.name: p.read_bytes() for p in sorted(base.iterdir())
                      if not p.name.endswith(".meta.json")})
    same = files[0] == files[1]
    labels_same = all(files[0][k] == files[1][k] for k in ("ap.csv", "em.csv"))
    assert record(9, same and labels_same,
                  f"two runs of gen/dist/ap/em: {len(files[0])} output files byte-identical={same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
