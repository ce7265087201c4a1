"""Command-line interface: segment, propose, learn, eval, boxes.

Every subcommand exits 0 on success and 1 on any error, with the message on
stderr. Identical inputs, config, and seed produce bitwise-identical output
files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .config import PipelineConfig
from .errors import McgError, ParameterError
from .evaluation import geometric_counts, quality_vs_count_curve
from .grouping import Proposal
from .pipeline import (HierarchySet, learn_from_corpus, pool_masks,
                       propose_pool, proposal_boxes, rank_pool,
                       segment_hierarchies)


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    return cfg


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON pipeline configuration")
    parser.add_argument("--seed", type=int, help="override the config seed")


def _load_hierarchy_dir(path: str) -> HierarchySet:
    files = sorted(Path(path).glob("*.ucm"))
    if not files:
        raise ParameterError(f"no .ucm files found in {path}")
    by_stem = {f.stem: fileio.load_ucm(f) for f in files}
    return HierarchySet.from_dict(by_stem)


def _read_manifest(path: str) -> list[tuple[str, str]]:
    pairs = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParameterError(
                f"manifest line {line_no} must be 'image<TAB>gt', got {line!r}"
            )
        pairs.append((parts[0], parts[1]))
    if not pairs:
        raise ParameterError(f"manifest {path} is empty")
    return pairs


def cmd_segment(args) -> None:
    cfg = _load_config(args)
    img = fileio.load_image(args.image)
    local_cue = fileio.load_contourmap(args.contours) if args.contours else None
    hierarchies = segment_hierarchies(img, cfg, local_cue)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for stem, u in hierarchies.items():
        fileio.save_ucm(u, out_dir / f"{stem}.ucm")


def _records_from_pool(pool: list[Proposal], scores) -> list[dict]:
    records = []
    for rank, p in enumerate(pool):
        records.append({
            "hierarchy": p.hierarchy_id,
            "nodes": list(p.node_ids),
            "rank": rank,
            "score": None if scores is None else scores[rank],
        })
    return records


def cmd_propose(args) -> None:
    cfg = _load_config(args)
    hset = _load_hierarchy_dir(args.hierarchies)
    params = None
    if args.params:
        counts, _ = fileio.load_front_params(args.params)
        params = counts
    regressor = None
    if args.regressor:
        from .ranking import OverlapRegressor
        regressor = OverlapRegressor.from_json(Path(args.regressor).read_text())
    pool = propose_pool(hset, cfg, params)
    pool, scores = rank_pool(pool, hset, regressor, cfg)
    if args.top is not None:
        pool = pool[: args.top]
        scores = None if scores is None else scores[: args.top]
    fileio.save_proposals(_records_from_pool(pool, scores), args.out)


def cmd_learn(args) -> None:
    cfg = _load_config(args)
    pairs = _read_manifest(args.manifest)
    images = []
    gts = []
    for image_path, gt_path in pairs:
        img = fileio.load_image(image_path)
        gt = fileio.load_instance_gt(gt_path)
        if img.shape[:2] != gt.shape:
            raise ParameterError(
                f"{image_path}: image dims {img.shape[:2]} != gt dims {gt.shape}"
            )
        images.append(img)
        gts.append(gt)
    result = learn_from_corpus(images, gts, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fileio.save_front_params(result.params.as_dict(), cfg.config_hash(),
                             out_dir / "params.json")
    fileio.atomic_write(out_dir / "regressor.json",
                        result.regressor.to_json().encode("utf-8"))
    if result.params.infeasible:
        print("warning: quality floor infeasible; stored the best-quality point",
              file=sys.stderr)


def _pool_from_records(records: list[dict], hset: HierarchySet) -> list[Proposal]:
    pool = []
    for rec in records:
        idx = int(rec["hierarchy"])
        if not 0 <= idx < len(hset):
            raise ParameterError(f"proposal references unknown hierarchy {idx}")
        pool.append(Proposal(idx, tuple(int(n) for n in rec["nodes"]), 0.0))
    return pool


def cmd_eval(args) -> None:
    cfg = _load_config(args)
    pairs = _read_manifest(args.manifest)
    if len(args.proposals) != len(pairs) or len(args.hierarchies) != len(pairs):
        raise ParameterError(
            "need one --proposals file and one --hierarchies dir per manifest line"
        )
    pools = []
    gts = []
    for (image_path, gt_path), prop_path, hier_dir in zip(
            pairs, args.proposals, args.hierarchies):
        img = fileio.load_image(image_path)
        gt = fileio.load_instance_gt(gt_path)
        if img.shape[:2] != gt.shape:
            raise ParameterError(
                f"{image_path}: image dims {img.shape[:2]} != gt dims {gt.shape}"
            )
        hset = _load_hierarchy_dir(hier_dir)
        records = fileio.load_proposals(prop_path)
        pool = _pool_from_records(records, hset)
        pools.append(pool_masks(pool, hset, gt.shape))
        gts.append(gt)
    if args.counts:
        counts = sorted({int(c) for c in args.counts.split(",")})
    else:
        longest = max((len(p) for p in pools), default=0)
        counts = sorted(set(geometric_counts(longest, 8)))
    rows = quality_vs_count_curve(pools, gts, counts)
    fileio.save_curve(rows, args.out)
    final = rows[-1]
    print(f"n={final[0]} j_i={final[1]:.4f} recall@0.5={final[2]:.4f} "
          f"recall@0.7={final[3]:.4f} recall@0.85={final[4]:.4f}")


def cmd_boxes(args) -> None:
    hset = _load_hierarchy_dir(args.hierarchies)
    records = fileio.load_proposals(args.proposals)
    boxes = proposal_boxes(records, hset)
    lines = ["min_row,min_col,max_row,max_col"]
    lines += [f"{r0},{c0},{r1},{c1}" for r0, c0, r1, c1 in boxes]
    fileio.atomic_write(args.out, "".join(l + "\n" for l in lines).encode("utf-8"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcg",
        description="Multiscale combinatorial grouping: hierarchies and proposals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="image -> per-scale and multiscale hierarchies")
    p.add_argument("image", help="binary PGM (P5) or PPM (P6) input")
    p.add_argument("--out", required=True, help="output directory for .ucm files")
    p.add_argument("--contours",
                   help="precomputed contour map replacing the built-in cue "
                        "(single-scale configs only)")
    _add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("propose", help="hierarchies -> ranked proposals")
    p.add_argument("--hierarchies", required=True, help="directory of .ucm files")
    p.add_argument("--params", help="learnt per-list counts (JSON)")
    p.add_argument("--regressor", help="learnt overlap regressor (JSON)")
    p.add_argument("--top", type=int, help="emit at most this many proposals")
    p.add_argument("--out", required=True, help="output JSON-lines file")
    _add_common(p)
    p.set_defaults(func=cmd_propose)

    p = sub.add_parser("learn", help="corpus -> front params + overlap regressor")
    p.add_argument("--manifest", required=True,
                   help="lines of 'image_path<TAB>gt_path'")
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="proposals vs ground truth -> quality curve")
    p.add_argument("--manifest", required=True,
                   help="lines of 'image_path<TAB>gt_path'")
    p.add_argument("--proposals", required=True, nargs="+",
                   help="one proposals file per manifest line")
    p.add_argument("--hierarchies", required=True, nargs="+",
                   help="one hierarchy directory per manifest line")
    p.add_argument("--counts", help="comma-separated prefix sizes")
    p.add_argument("--out", required=True, help="output CSV")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("boxes", help="proposals -> deduplicated bounding boxes")
    p.add_argument("--proposals", required=True)
    p.add_argument("--hierarchies", required=True, help="directory of .ucm files")
    p.add_argument("--out", required=True, help="output CSV")
    _add_common(p)
    p.set_defaults(func=cmd_boxes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except McgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
