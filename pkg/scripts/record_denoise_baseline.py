"""Run the brute-force mining + denoising oracle over the 100-scene benchmark and
print the wrong-label reduction to freeze into tests/test_acceptance.py."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import oracles  # noqa: E402
from scenarios import CFG, V, corrupted_case  # noqa: E402

N_SCENES = 100


def wrong(mask, gt):
    return sum(
        1 for i, row in enumerate(mask) for j, v in enumerate(row)
        if v != oracles.UNLABELED and v != gt[i][j]
    )


def main():
    steps = CFG.schedule("ntir").steps
    mined_total = distilled_total = improved = 0
    for seed in range(N_SCENES):
        ntir, gt, v_rb, v_fa = corrupted_case(seed)
        gt = gt.tolist()
        mined = oracles.mine_bruteforce(v_rb.tolist(), v_fa.tolist(), CFG.theta_fg, CFG.theta_bg, V.fg_ids)
        distilled = oracles.schedule_bruteforce(mined, [ntir.tolist()], steps)
        wm, wd = wrong(mined, gt), wrong(distilled, gt)
        mined_total += wm
        distilled_total += wd
        improved += wd < wm
    reduction = 1 - distilled_total / mined_total
    print(f"scenes improved: {improved}/{N_SCENES}")
    print(f"wrong labels: mined={mined_total} distilled={distilled_total}")
    print(f"reduction={reduction!r}")


if __name__ == "__main__":
    main()
