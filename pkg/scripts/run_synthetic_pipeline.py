"""End-to-end run on synthetic scenes: synth -> distill (+ memory) -> select -> eval.

Usage: python3 scripts/run_synthetic_pipeline.py [OUT_DIR] [--count N] [--seed S]
"""

import argparse
import json
import tempfile
from pathlib import Path

from thermcolor.cli import cmd_distill, cmd_eval, cmd_select, cmd_synth
from thermcolor.config import RunConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", nargs="?")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    out = Path(args.out or tempfile.mkdtemp(prefix="thermcolor_"))
    cfg = RunConfig()

    data = out / "data"
    cmd_synth(cfg, args.count, data, args.seed, with_probs=True)
    report, code = cmd_distill(cfg, data / "probs_rb", data / "probs_fa", data, out / "masks",
                               gt_dir=data, memory_dir=out / "memory")
    mined, distilled = report["wrong_mined_total"], report["wrong_distilled_total"]
    frac = sum(r["labeled_fraction"] for r in report["images"].values()) / max(len(report["images"]), 1)
    print(f"distill: {len(report['images'])} images, exit {code}, mean labeled fraction {frac:.3f}")
    print(f"wrong labels: mined {mined} -> distilled {distilled}"
          f" (reduction {1 - distilled / max(mined, 1):.3f})")

    sel = cmd_select(cfg, data / "scene_0000_gt.png", out / "memory", k=min(5, args.count), seed=args.seed)
    print("select:", json.dumps(sel["candidates"][:3]), "->", sel["selected"])

    ev, _ = cmd_eval(cfg, out / "masks", data)
    print(f"eval: pseudo-label mIoU vs ground truth {ev['miou']:.4f} over {ev['n_pixels']} labeled pixels")
    print("artifacts in", out)


if __name__ == "__main__":
    main()
