"""Double-precision verification suites with measured errors vs tolerances.

Suites: dwt (round-trip + Parseval + hand case), oracle (fast transform vs
direct summation), grad (analytic vs central finite differences), mask (exact
counts + exhaustive rescale rules), loss (mask respect + loop reference).
Each returns a :class:`SuiteResult`; the CLI prints one line per check and
exits non-zero on any failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import model as model_mod
from ..dwt import dwt2_level, dwt2_multi, dwt2_oracle, idwt2_multi, image_energy
from ..loss import make_report, masked_distance
from ..masking import gen_block_mask, rescale_mask, PatchMask, exact_masked_count
from ..rng import Xoshiro256StarStar, derive_seed
from ..targets import build_targets, normalize_targets
from . import synth
from .config import desk_config, level_selection, model_config


@dataclass
class SuiteResult:
    name: str
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, label: str, passed: bool, detail: str) -> None:
        self.checks.append((label, passed, detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def lines(self) -> list[str]:
        out = []
        for label, ok, detail in self.checks:
            out.append(f"[{'PASS' if ok else 'FAIL'}] {self.name}/{label}: {detail}")
        return out


def _random_images(count: int, channels: int, side: int, seed: int) -> np.ndarray:
    rng = Xoshiro256StarStar(seed)
    return rng.uniform_array((count, channels, side, side), -1.0, 1.0)


def suite_dwt(seed: int = 2024) -> SuiteResult:
    res = SuiteResult("dwt")
    images = _random_images(100, 3, 32, seed)
    max_rt = 0.0
    max_parseval = 0.0
    for img in images:
        pyramid = dwt2_multi(img, 3)
        back = idwt2_multi(pyramid)
        max_rt = max(max_rt, float(np.max(np.abs(back - img))))
        e_img = image_energy(img)
        max_parseval = max(max_parseval, abs(pyramid.energy() - e_img) / e_img)
    res.add(
        "round-trip",
        max_rt < 1e-10,
        f"max abs reconstruction error {max_rt:.3e} (tol 1e-10, 100 images 32x32x3 depth 3)",
    )
    res.add(
        "parseval",
        max_parseval <= 1e-12,
        f"max relative energy mismatch {max_parseval:.3e} (tol 1e-12)",
    )
    ll, h, v, d = dwt2_level(np.array([[1.0, 3.0], [5.0, 7.0]]))
    hand = (float(ll[0, 0]), float(h[0, 0]), float(v[0, 0]), float(d[0, 0]))
    res.add(
        "hand-case",
        hand == (8.0, -2.0, -4.0, 0.0),
        f"dwt2_level([[1,3],[5,7]]) = {hand} (want (8, -2, -4, 0) exactly)",
    )
    const = np.full((1, 8, 8), 3.25)
    pyr = dwt2_multi(const, 3)
    max_detail = max(
        float(np.max(np.abs(p))) for planes in pyr.details for p in planes
    )
    res.add(
        "constant-annihilation",
        max_detail == 0.0,
        f"max |detail| on constant image = {max_detail:.3e} (want exactly 0)",
    )
    return res


def suite_oracle(seed: int = 2025) -> SuiteResult:
    res = SuiteResult("oracle")
    worst = 0.0
    cases = []
    for side in (8, 16):
        for depth in (1, 2, 3):
            img = _random_images(1, 2, side, derive_seed(seed, side * 10 + depth))[0]
            fast = dwt2_multi(img, depth)
            slow = dwt2_oracle(img, depth)
            diff = float(np.max(np.abs(fast.approx - slow.approx)))
            for (fh, fv, fd), (sh, sv, sd) in zip(fast.details, slow.details):
                diff = max(
                    diff,
                    float(np.max(np.abs(fh - sh))),
                    float(np.max(np.abs(fv - sv))),
                    float(np.max(np.abs(fd - sd))),
                )
            cases.append(f"{side}x{side}/J{depth}: {diff:.3e}")
            worst = max(worst, diff)
    res.add(
        "fast-vs-direct",
        worst < 1e-10,
        f"max abs difference {worst:.3e} (tol 1e-10) over " + ", ".join(cases),
    )
    return res


def measure_grad_error(seed: int = 7, coords: int = 200, step: float = 1e-5) -> float:
    """Max relative error of reverse-mode gradients vs central finite
    differences over ``coords`` uniformly sampled parameter coordinates, on
    the desk configuration in double precision. The relative error is
    ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``."""
    cfg = desk_config()
    mcfg = model_config(cfg)
    params = model_mod.init_params(mcfg, derive_seed(seed, 1))
    image = synth.synth_image(cfg.image_side, derive_seed(seed, 2))
    mask = gen_block_mask(mcfg.grid, cfg.ratio, cfg.block, derive_seed(seed, 3))
    pyramid = dwt2_multi(image, cfg.levels)
    targets = normalize_targets(build_targets(pyramid, level_selection(cfg)))

    analytic = model_mod.grad(params, mcfg, image, mask, targets, cfg.metric, cfg.weights)

    names = list(params.values.keys())
    sizes = [params.values[n].size for n in names]
    total_size = int(np.sum(sizes))
    offsets = np.cumsum([0] + sizes)

    def loss_at() -> float:
        report = model_mod.forward_loss(
            params, mcfg, image, mask, targets, cfg.metric, cfg.weights
        )
        return report.total

    rng = Xoshiro256StarStar(derive_seed(seed, 4))
    max_rel = 0.0
    for _ in range(coords):
        flat = rng.next_below(total_size)
        slot = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[slot]
        inner = flat - offsets[slot]
        arr = params.values[name]
        original = arr.flat[inner]
        arr.flat[inner] = original + step
        up = loss_at()
        arr.flat[inner] = original - step
        down = loss_at()
        arr.flat[inner] = original
        numeric = (up - down) / (2.0 * step)
        exact = analytic[name].flat[inner]
        rel = abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-8)
        max_rel = max(max_rel, rel)
    return max_rel


def suite_grad(seed: int = 7, coords: int = 200, step: float = 1e-5) -> SuiteResult:
    """Central finite differences against reverse-mode gradients on the desk
    configuration, double precision."""
    res = SuiteResult("grad")
    max_rel = measure_grad_error(seed, coords, step)
    res.add(
        "finite-difference",
        max_rel < 1e-4,
        f"max relative error {max_rel:.3e} over {coords} sampled coordinates "
        f"(tol 1e-4, step {step:g})",
    )
    return res


def _reference_rescale_all(flags: np.ndarray, side: int) -> np.ndarray:
    grid = flags.shape[0]
    factor = grid // side
    out = np.zeros((side, side), dtype=bool)
    for i in range(side):
        for j in range(side):
            cell = True
            for a in range(factor):
                for b in range(factor):
                    if not flags[i * factor + a, j * factor + b]:
                        cell = False
            out[i, j] = cell
    return out


def _reference_rescale_rep(flags: np.ndarray, side: int) -> np.ndarray:
    grid = flags.shape[0]
    factor = side // grid
    out = np.zeros((side, side), dtype=bool)
    for i in range(side):
        for j in range(side):
            out[i, j] = flags[i // factor, j // factor]
    return out


def suite_mask(seed: int = 99, trials: int = 1000) -> SuiteResult:
    res = SuiteResult("mask")
    worst_msg = "all counts exact"
    counts_ok = True
    for grid in (8, 14):
        for ratio in (0.4, 0.6, 0.75, 0.9):
            want = exact_masked_count(ratio, grid)
            for t in range(trials):
                pm = gen_block_mask(grid, ratio, 2, derive_seed(seed, grid * 100000 + int(ratio * 100) * 1000 + t))
                if pm.masked_count != want:
                    counts_ok = False
                    worst_msg = (
                        f"g={grid} r={ratio} trial {t}: {pm.masked_count} != {want}"
                    )
    res.add(
        "exact-count",
        counts_ok,
        f"{worst_msg} ({trials} trials x 8 (grid, ratio) pairs)",
    )

    rules_ok = True
    detail = "all 65536 4x4 masks match the all/replicate rules"
    for code in range(1 << 16):
        flags = np.array(
            [(code >> bit) & 1 for bit in range(16)], dtype=bool
        ).reshape(4, 4)
        pm = PatchMask(grid=4, ratio=0.5, block=1, seed=0, flags=flags)
        for side in (1, 2):
            got = rescale_mask(pm, side).flags
            want = _reference_rescale_all(flags, side)
            if not np.array_equal(got, want):
                rules_ok = False
                detail = f"all-rule mismatch at code {code}, side {side}"
        got = rescale_mask(pm, 8).flags
        want = _reference_rescale_rep(flags, 8)
        if not np.array_equal(got, want):
            rules_ok = False
            detail = f"replicate mismatch at code {code}"
        got = rescale_mask(pm, 4).flags
        if not np.array_equal(got, flags):
            rules_ok = False
            detail = f"identity mismatch at code {code}"
    res.add("rescale-rules", rules_ok, detail)
    return res


def suite_loss(seed: int = 31, cases: int = 100) -> SuiteResult:
    res = SuiteResult("loss")
    rng = Xoshiro256StarStar(seed)
    respect_ok = True
    detail = f"{cases} random visible-cell perturbations left reports bit-identical"
    for case in range(cases):
        grid = 8
        pm = gen_block_mask(grid, 0.75, 2, derive_seed(seed, 1000 + case))
        sm = rescale_mask(pm, grid)
        pred = rng.uniform_array((3, grid, grid), -2.0, 2.0)
        target = rng.uniform_array((3, grid, grid), -2.0, 2.0)
        metric = "l2" if case % 2 == 0 else "l1"
        before = make_report(
            [masked_distance(pred, target, sm, metric)], [1.1]
        )
        noisy = pred.copy()
        noisy[:, ~sm.flags] += rng.uniform_array((3, int((~sm.flags).sum())), -5.0, 5.0)
        after = make_report([masked_distance(noisy, target, sm, metric)], [1.1])
        if before != after:
            respect_ok = False
            detail = f"case {case}: report changed under visible perturbation"
    res.add("respect-the-mask", respect_ok, detail)

    max_diff = 0.0
    for case in range(50):
        grid = 8
        pm = gen_block_mask(grid, 0.6, 2, derive_seed(seed, 2000 + case))
        sm = rescale_mask(pm, grid)
        pred = rng.uniform_array((2, grid, grid), -3.0, 3.0)
        target = rng.uniform_array((2, grid, grid), -3.0, 3.0)
        for metric in ("l1", "l2"):
            mean, count = masked_distance(pred, target, sm, metric)
            acc = 0.0
            n = 0
            for ch in range(2):
                for i in range(grid):
                    for j in range(grid):
                        if sm.flags[i, j]:
                            d = pred[ch, i, j] - target[ch, i, j]
                            acc += abs(d) if metric == "l1" else d * d
                            n += 1
            ref = acc / n
            max_diff = max(max_diff, abs(ref - mean))
            if count * 2 != n:
                max_diff = np.inf
    res.add(
        "loop-reference",
        max_diff < 1e-12,
        f"max |fast - loop| = {max_diff:.3e} (tol 1e-12, 50 cases x 2 metrics)",
    )
    return res


SUITES = {
    "dwt": suite_dwt,
    "oracle": suite_oracle,
    "grad": suite_grad,
    "mask": suite_mask,
    "loss": suite_loss,
}


def run_suites(which: str) -> list[SuiteResult]:
    if which == "all":
        return [fn() for fn in SUITES.values()]
    if which not in SUITES:
        raise KeyError(f"unknown suite {which!r}; choose from {sorted(SUITES)} or 'all'")
    return [SUITES[which]()]
