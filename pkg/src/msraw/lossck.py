"""Runtime verification of the consistency kernels (``msraw loss-check``).

Compares the vectorized losses with a literal loop over all terms, checks
analytic gradients against central differences away from kinks, and checks
the gradient reversal contract.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .consistency import MultiScaleFeatures, grad_reverse, inter_loss, intra_loss


def enumerate_intra(feats: MultiScaleFeatures) -> float:
    terms = []
    for u, v in zip(feats.U, feats.V):
        for b in range(feats.batch):
            for i, j in itertools.combinations(range(feats.sensors), 2):
                r = (v[b, i] - v[b, j]) - (u[b, i] - u[b, j])
                terms.append(np.mean(np.abs(r)))
    return float(np.mean(terms)) if terms else 0.0


def enumerate_inter(feats: MultiScaleFeatures) -> float:
    terms = []
    if feats.sensors < 2:
        return 0.0
    for u, v in zip(feats.U, feats.V):
        for m, n in itertools.combinations(range(feats.batch), 2):
            for i, j in itertools.product(range(feats.sensors), repeat=2):
                r = (v[m, i] - v[n, j]) - (u[m, i] - u[n, j])
                terms.append(np.mean(np.abs(r)))
    return float(np.mean(terms)) if terms else 0.0


def min_abs_residual(feats: MultiScaleFeatures, inter: bool) -> float:
    best = np.inf
    for u, v in zip(feats.U, feats.V):
        d = v - u
        if inter:
            for m, n in itertools.combinations(range(feats.batch), 2):
                for i, j in itertools.product(range(feats.sensors), repeat=2):
                    best = min(best, np.abs(d[m, i] - d[n, j]).min())
        else:
            for b in range(feats.batch):
                for i, j in itertools.combinations(range(feats.sensors), 2):
                    best = min(best, np.abs(d[b, i] - d[b, j]).min())
    return float(best)


def finite_difference_grads(loss_fn, feats: MultiScaleFeatures, h: float = 1e-5) -> list[np.ndarray]:
    grads = []
    for lvl, v in enumerate(feats.V):
        g = np.zeros_like(v)
        for idx in np.ndindex(v.shape):
            orig = v[idx]
            v[idx] = orig + h
            up = loss_fn(feats)[0]
            v[idx] = orig - h
            down = loss_fn(feats)[0]
            v[idx] = orig
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def random_features(rng: np.random.Generator, batch: int, sensors: int, shapes) -> MultiScaleFeatures:
    U = [rng.normal(size=(batch, sensors) + tuple(s)) for s in shapes]
    V = [rng.normal(size=(batch, sensors) + tuple(s)) for s in shapes]
    return MultiScaleFeatures(U, V)


def max_relative_error(a: list[np.ndarray], b: list[np.ndarray]) -> float:
    worst = 0.0
    for x, y in zip(a, b):
        scale = max(np.abs(x).max(), np.abs(y).max(), 1e-12)
        worst = max(worst, float(np.abs(x - y).max() / scale))
    return worst


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def run(seed: int = 0, trials: int = 20, kink_margin: float = 1e-3) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []

    worst_oracle = 0.0
    for _ in range(trials):
        feats = random_features(rng, int(rng.integers(1, 4)), int(rng.integers(1, 5)),
                                [(int(rng.integers(1, 5)), int(rng.integers(1, 5))) for _ in range(rng.integers(1, 3))])
        worst_oracle = max(worst_oracle, abs(intra_loss(feats)[0] - enumerate_intra(feats)),
                           abs(inter_loss(feats)[0] - enumerate_inter(feats)))
    results.append(CheckResult("oracle_equivalence", worst_oracle <= 1e-12, f"max |diff| = {worst_oracle:.3g}"))

    worst_grad, checked = 0.0, 0
    while checked < trials:
        feats = random_features(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)),
                                [(int(rng.integers(1, 5)), int(rng.integers(1, 5)))])
        for fn, inter in ((intra_loss, False), (inter_loss, True)):
            if min_abs_residual(feats, inter) < kink_margin:
                continue
            fd = finite_difference_grads(fn, feats)
            worst_grad = max(worst_grad, max_relative_error(fn(feats)[1], fd))
        checked += 1
    results.append(CheckResult("gradient_vs_fd", worst_grad <= 1e-4, f"max rel err = {worst_grad:.3g}"))

    ok = True
    for alpha in (0.0, 0.3, 1.0):
        x = rng.normal(size=(3, 4))
        y, backward = grad_reverse(x, alpha)
        upstream = np.ones_like(y)  # d sum(y) / dy
        ok &= np.array_equal(x, y) and np.array_equal(backward(upstream), -alpha * upstream)
    results.append(CheckResult("grad_reverse", bool(ok), "forward identity, backward -alpha * upstream"))
    return results


def report(results: list[CheckResult]) -> str:
    return "\n".join(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}" for r in results)


def main(seed: int = 0) -> bool:
    t0 = time.perf_counter()
    results = run(seed)
    print(report(results))
    print(f"loss-check finished in {time.perf_counter() - t0:.2f}s")
    return all(r.passed for r in results)
