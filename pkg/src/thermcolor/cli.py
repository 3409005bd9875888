"""Command-line entry point: ``thermcolor {synth,distill,select,losses,eval}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import imageio as io
from .arraycore import UNLABELED, InvalidInputError, as_gray, nearest_resize_mask
from .config import RunConfig, load_config
from .distill import distill_ntir, mine_labels, wrong_label_count
from .losses import (
    TERMS,
    Phase,
    aca_loss,
    cgr_loss,
    class_weights_from_label,
    cycle_loss,
    draw_psi,
    rls_adversarial,
    seg_loss,
    seg_loss_total,
    sga_loss,
    sr_loss,
    total_loss,
    tv_loss,
)
from .memory import MemoryUnit, distribution_feature
from .metrics import ConfusionMatrix, apce_report, iou
from .synth import SceneSpec, corrupt_labels, generate_scene, soft_probs

log = logging.getLogger("thermcolor")

SCENE_SUFFIXES = {"ntir": "_ntir.png", "dc": "_dc.png", "gt": "_gt.png"}


class MissingInputError(ValueError):
    pass


def _stems(directory, suffix: str = ".png") -> list[str]:
    return sorted(p.name[: -len(suffix)] for p in Path(directory).glob(f"*{suffix}"))


# -- synth -----------------------------------------------------------------------

def cmd_synth(cfg: RunConfig, count: int, out, seed: int, with_probs: bool = False,
              corrupt_rate: float = 0.2) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    v = cfg.vocab
    swaps = [(v.id("sky"), v.id("vegetation")), (v.id("vegetation"), v.id("person"))]
    scenes = []
    for i in range(count):
        sid = f"scene_{i:04d}"
        spec = SceneSpec(**{**cfg.scene, "seed": seed + i})
        ntir, dc, gt = generate_scene(spec, v)
        io.write_image(out / f"{sid}_ntir.png", ntir)
        io.write_image(out / f"{sid}_dc.png", dc)
        io.write_mask(out / f"{sid}_gt.png", gt)
        entry = {"id": sid, "seed": seed + i, **{k: f"{sid}{s}" for k, s in SCENE_SUFFIXES.items()}}
        if with_probs:
            noisy = corrupt_labels(gt, swaps, corrupt_rate, seed=seed + i)
            for d in ("probs_rb", "probs_fa"):
                (out / d).mkdir(exist_ok=True)
                io.write_raw(out / d / f"{sid}{io.RAW_SUFFIX}", soft_probs(noisy, v.n_classes), kind="prob")
        scenes.append(entry)
    manifest = {"count": count, "seed": seed, "width": spec.width if count else None,
                "height": spec.height if count else None, "scenes": scenes}
    io.write_json(out / "manifest.json", manifest)
    return manifest


# -- distill ---------------------------------------------------------------------

def cmd_distill(cfg: RunConfig, rb_dir, fa_dir, image_dir, out, gt_dir=None, memory_dir=None,
                suffix: str = "_ntir.png") -> tuple[dict, int]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    params, sched = cfg.mining_params(), cfg.schedule("ntir")
    summary, errors = {}, {}
    masks = {}
    for stem in _stems(image_dir, suffix):
        try:
            f_rb, f_fa = io.find_prob(rb_dir, stem), io.find_prob(fa_dir, stem)
            if f_rb is None or f_fa is None:
                raise FileNotFoundError(f"missing probability pair for {stem}")
            v_rb, v_fa = io.read_prob(f_rb), io.read_prob(f_fa)
            ntir = io.read_image(Path(image_dir) / f"{stem}{suffix}")
            mined = mine_labels(v_rb, v_fa, params)
            mask = distill_ntir(v_rb, v_fa, ntir, params, sched)
        except (OSError, ValueError) as exc:
            errors[stem] = str(exc)
            log.error("%s: %s", stem, exc)
            continue
        io.write_mask(out / f"{stem}.png", mask)
        masks[stem] = mask
        rec = {"labeled_fraction": float((mask != UNLABELED).mean())}
        gt_path = Path(gt_dir) / f"{stem}_gt.png" if gt_dir else None
        if gt_path is not None and gt_path.exists():
            gt = io.read_mask(gt_path)
            rec["wrong_mined"] = wrong_label_count(mined, gt)
            rec["wrong_distilled"] = wrong_label_count(mask, gt)
        summary[stem] = rec
    if memory_dir is not None:
        cap = cfg.memory.capacity_target or len(masks) + len(errors)
        mem = MemoryUnit(cfg.vocab.small_sample_ids, cap, cfg.memory.min_fill)
        for stem, mask in masks.items():
            mem.store(stem, mask)
        mem.save(memory_dir)
    report = {"images": summary, "errors": errors}
    if gt_dir:
        report["wrong_mined_total"] = sum(r.get("wrong_mined", 0) for r in summary.values())
        report["wrong_distilled_total"] = sum(r.get("wrong_distilled", 0) for r in summary.values())
    io.write_json(out / "summary.json", report)
    return report, 1 if errors else 0


# -- select ----------------------------------------------------------------------

def cmd_select(cfg: RunConfig, dc_mask, memory_dir, k: int | None = None, seed: int | None = None) -> dict:
    mem = MemoryUnit.load(memory_dir)
    if cfg.memory.min_fill is not None:
        mem.min_fill = cfg.memory.min_fill
    k = cfg.memory.k if k is None else k
    seed = cfg.memory.seed if seed is None else seed
    fa = distribution_feature(io.read_mask(dc_mask), mem.c_ss)
    cands = mem.topk(fa, k)
    return {
        "selected": mem.recall_topk(fa, k, seed),
        "k": k,
        "seed": seed,
        "candidates": [{"id": i, "similarity": s} for i, s in cands],
    }


# -- losses ----------------------------------------------------------------------

def _load(args, name, reader):
    path = getattr(args, name)
    if path is None:
        return None
    return reader(path)


def _need(values: dict, term: str):
    missing = [k for k, v in values.items() if v is None]
    if missing:
        flags = ", ".join("--" + m.replace("_", "-") for m in missing)
        raise MissingInputError(f"term {term!r} requires {flags}")
    return values.values()


def _class_mask(mask, ids) -> np.ndarray:
    return np.isin(mask, list(ids))


def compute_terms(cfg: RunConfig, args) -> dict:
    w = cfg.loss_weights()
    v = cfg.vocab
    img, raw, msk = io.read_array, io.read_raw, io.read_mask
    given = dict(args.term or [])
    terms = {}

    def have(term):
        if term in given:
            terms[term] = given[term]
            return False
        return True

    if have("adv"):
        r, f = _need({"d_real": _load(args, "d_real", raw), "d_fake": _load(args, "d_fake", raw)}, "adv")
        terms["adv"] = rls_adversarial(r, f, args.adv_side)

    if have("cyc"):
        total, pairs = 0.0, 0
        for x_name, rec_name in (("real_a", "rec_a"), ("real_b", "rec_b")):
            x, rec = getattr(args, x_name), getattr(args, rec_name)
            if x is not None and rec is not None:
                total += cycle_loss(img(x), img(rec), w)
                pairs += 1
        if not pairs:
            raise MissingInputError("term 'cyc' requires --real-a/--rec-a or --real-b/--rec-b")
        terms["cyc"] = total

    if have("tv"):
        outs = [img(p) for p in (args.fake_a, args.fake_b) if p is not None]
        if not outs:
            raise MissingInputError("term 'tv' requires --fake-a or --fake-b")
        terms["tv"] = sum(tv_loss(o) for o in outs)

    if have("sga"):
        real_a, fake_b, label_a = _need({
            "real_a": _load(args, "real_a", img), "fake_b": _load(args, "fake_b", img),
            "label_a": _load(args, "label_a", msk)}, "sga")
        road = _class_mask(label_a, [v.id("road")])
        ped = _class_mask(label_a, [v.id("person")])
        terms["sga"] = sga_loss(real_a, fake_b, road, ped, w.theta_sga, w.eps)

    if have("seg_all"):
        lw = Phase(args.phase).weights
        branches = (("seg_ra", "label_a", w.boundary), ("seg_fb", "label_a", 0.0),
                    ("seg_rb", "label_b", 0.0), ("seg_fa", "label_b", 0.0))
        vals = []
        for on, (prob_name, label_name, bw) in zip(lw, branches):
            if not on:
                vals.append(0.0)
                continue
            prob, label = _need({prob_name: _load(args, prob_name, io.read_prob),
                                 label_name: _load(args, label_name, msk)}, "seg_all")
            cw = class_weights_from_label(label, prob.shape[0])
            vals.append(seg_loss(prob, label, cw, bw))
        terms["seg_all"] = seg_loss_total(*vals, args.phase)

    if have("aca"):
        f_ra, f_fa, m_a, m_b = _need({
            "feat_ra": _load(args, "feat_ra", raw), "feat_fa": _load(args, "feat_fa", raw),
            "label_a": _load(args, "label_a", msk), "label_b": _load(args, "label_b", msk)}, "aca")
        m_a = nearest_resize_mask(m_a, *f_ra.shape[1:])
        m_b = nearest_resize_mask(m_b, *f_fa.shape[1:])
        terms["aca"] = aca_loss(f_ra, f_fa, m_a, m_b, v.small_sample_ids, w, args.seed)

    if have("cgr"):
        real_b, fake_a, label_b = _need({
            "real_b": _load(args, "real_b", img), "fake_a": _load(args, "fake_a", img),
            "label_b": _load(args, "label_b", msk)}, "cgr")
        terms["cgr"] = cgr_loss(as_gray(real_b), fake_a, _class_mask(label_b, v.bg_ids))

    if have("sr"):
        psi = draw_psi(args.seed, args.epoch) if args.psi is None else args.psi
        total, doms = 0.0, 0
        for d in ("a", "b"):
            o, s, l = (getattr(args, f"sr_{d}_{x}") for x in ("o", "small", "large"))
            if o is None:
                continue
            need = s if psi < 0.5 else l
            if need is None:
                flag = f"--sr-{d}-small" if psi < 0.5 else f"--sr-{d}-large"
                raise MissingInputError(f"term 'sr' requires {flag} for psi={psi:.4f}")
            total += sr_loss(img(o), img(s) if s else None, img(l) if l else None, w, psi)
            doms += 1
        if not doms:
            raise MissingInputError("term 'sr' requires --sr-a-o or --sr-b-o")
        terms["sr"] = total
    return terms


def cmd_losses(cfg: RunConfig, args) -> dict:
    terms = compute_terms(cfg, args)
    return total_loss(terms, cfg.loss_weights()).to_dict()


# -- eval ------------------------------------------------------------------------

def cmd_eval(cfg: RunConfig, pred_dir, gt_dir, input_dir=None, translated_dir=None,
             gt_suffix: str = "_gt.png", input_suffix: str = "_ntir.png") -> tuple[dict, int]:
    cm = ConfusionMatrix(cfg.vocab.n_classes)
    errors = {}
    preds = _stems(pred_dir)
    for stem in preds:
        gt_path = Path(gt_dir) / f"{stem}{gt_suffix}"
        if not gt_path.exists():
            errors[stem] = f"no ground truth {gt_path.name}"
            continue
        try:
            cm.update(io.read_mask(Path(pred_dir) / f"{stem}.png"), io.read_mask(gt_path))
        except (OSError, ValueError) as exc:
            errors[stem] = str(exc)
    per_class, miou = iou(cm)
    report = {
        "per_class_iou": {n: (None if np.isnan(x) else float(x)) for n, x in zip(cfg.vocab.names, per_class)},
        "miou": None if np.isnan(miou) else miou,
        "n_pixels": cm.total,
    }
    if input_dir is not None and translated_dir is not None:
        ms = cfg.metrics
        per_t: dict[str, list[float]] = {}
        degenerate = {}
        for stem in _stems(input_dir, input_suffix):
            tr = Path(translated_dir) / f"{stem}.png"
            if not tr.exists():
                errors[stem + input_suffix] = f"no translated image {tr.name}"
                continue
            rep = apce_report(io.read_image(Path(input_dir) / f"{stem}{input_suffix}"),
                              io.read_image(tr), ms.thresholds, ms.match_tol, ms.low_ratio)
            for t, p in rep.to_dict()["apce_per_threshold"].items():
                per_t.setdefault(t, []).append(p)
            if rep.degenerate:
                degenerate[stem] = [f"{t:g}" for t in rep.degenerate]
        if per_t:
            report["apce_per_threshold"] = {t: float(np.mean(p)) for t, p in per_t.items()}
            report["apce"] = float(np.mean(list(report["apce_per_threshold"].values())))
            report["apce_degenerate"] = degenerate
    report["errors"] = errors
    return report, 1 if errors else 0


# -- argument parsing ------------------------------------------------------------

def _term(s: str):
    name, _, val = s.partition("=")
    if name not in TERMS or not val:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE with NAME in {TERMS}")
    return name, float(val)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermcolor", description=__doc__)
    p.add_argument("--config", help="JSON run config (default: $THERMCOLOR_CONFIG)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write synthetic scene triples and a manifest")
    s.add_argument("--out", required=True)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--width", type=int)
    s.add_argument("--height", type=int)
    s.add_argument("--noise", type=float)
    s.add_argument("--with-probs", action="store_true",
                   help="also write corrupted-label probability tensors for distill")
    s.add_argument("--corrupt-rate", type=float, default=0.2)

    d = sub.add_parser("distill", help="mine + denoise NTIR pseudo-labels")
    d.add_argument("--probs-rb", required=True, help="dir of S_B(x_b) probability files")
    d.add_argument("--probs-fa", required=True, help="dir of S_A(G_BA(x_b)) probability files")
    d.add_argument("--images", required=True, help="dir of NTIR PNGs")
    d.add_argument("--out", required=True)
    d.add_argument("--gt", help="dir of ground-truth masks for wrong-label reporting")
    d.add_argument("--memory-dir", help="also store the masks in a memory unit here")
    d.add_argument("--suffix", default="_ntir.png")
    d.add_argument("--theta-fg", type=float)
    d.add_argument("--theta-bg", type=float)

    se = sub.add_parser("select", help="memory-guided NTIR sample selection for one DC mask")
    se.add_argument("--dc-mask", required=True)
    se.add_argument("--memory-dir", required=True)
    se.add_argument("--k", type=int)
    se.add_argument("--seed", type=int)
    se.add_argument("--min-fill", type=int)
    se.add_argument("--out")

    lo = sub.add_parser("losses", help="evaluate every loss term and the total objective")
    for name in ("real-a", "real-b", "fake-a", "fake-b", "rec-a", "rec-b", "label-a", "label-b",
                 "d-real", "d-fake", "seg-ra", "seg-fb", "seg-rb", "seg-fa", "feat-ra", "feat-fa",
                 "sr-a-o", "sr-a-small", "sr-a-large", "sr-b-o", "sr-b-small", "sr-b-large"):
        lo.add_argument(f"--{name}")
    lo.add_argument("--adv-side", choices=("discriminator", "generator"), default="generator")
    lo.add_argument("--phase", choices=[ph.value for ph in Phase], default=Phase.CONSTRAIN.value)
    lo.add_argument("--psi", type=float)
    lo.add_argument("--epoch", type=int, default=0)
    lo.add_argument("--seed", type=int, default=0)
    lo.add_argument("--term", type=_term, action="append", help="supply a term value directly")
    lo.add_argument("--out")

    e = sub.add_parser("eval", help="IoU/mIoU and APCE reports")
    e.add_argument("--pred", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--inputs")
    e.add_argument("--translated")
    e.add_argument("--out")
    return p


def _emit(report: dict, out) -> None:
    if out:
        io.write_json(out, report)
    else:
        import json

        print(json.dumps(report, indent=2, sort_keys=True))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = load_config(args.config)
    try:
        if args.command == "synth":
            overrides = {k: getattr(args, k) for k in ("width", "height", "noise") if getattr(args, k) is not None}
            cfg = replace(cfg, scene={**cfg.scene, **overrides})
            seed = cfg.seed if args.seed is None else args.seed
            m = cmd_synth(cfg, args.count, args.out, seed, args.with_probs, args.corrupt_rate)
            log.info("wrote %d scenes to %s", m["count"], args.out)
            return 0
        if args.command == "distill":
            if args.theta_fg is not None:
                cfg = replace(cfg, theta_fg=args.theta_fg)
            if args.theta_bg is not None:
                cfg = replace(cfg, theta_bg=args.theta_bg)
            report, code = cmd_distill(cfg, args.probs_rb, args.probs_fa, args.images, args.out,
                                       args.gt, args.memory_dir, args.suffix)
            for stem, msg in report["errors"].items():
                print(f"error: {stem}: {msg}", file=sys.stderr)
            return code
        if args.command == "select":
            if args.min_fill is not None:
                cfg = replace(cfg, memory=replace(cfg.memory, min_fill=args.min_fill))
            _emit(cmd_select(cfg, args.dc_mask, args.memory_dir, args.k, args.seed), args.out)
            return 0
        if args.command == "losses":
            _emit(cmd_losses(cfg, args), args.out)
            return 0
        if args.command == "eval":
            report, code = cmd_eval(cfg, args.pred, args.gt, args.inputs, args.translated)
            _emit(report, args.out)
            return code
    except (MissingInputError, InvalidInputError, RuntimeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
