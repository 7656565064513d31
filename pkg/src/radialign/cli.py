"""Command-line surface.

Thin shell over the library: every subcommand loads inputs, calls module
APIs, and emits rows of ``metric <TAB> item <TAB> value``.  Structured mode
emits the same rows as line-delimited JSON with full-precision values, so
structured output always equals direct API results exactly.

Exit codes: 0 success, 1 data error (store/schema/geometry failures),
2 usage error.
"""

from __future__ import annotations

import argparse
import fnmatch
import json
import sys
from typing import Sequence

import numpy as np

from .align import AlignConfig, align
from .errors import EmptyCandidates, RadialignError
from .geometry import (
    DEFAULT_EPSILON,
    cone_contains,
    cosine_sim,
    exterior_angle,
    half_aperture,
    root_distance,
)
from .losses import LossConfig, loss_ec_margin, loss_re
from .metrics import (
    EvalReport,
    breeds_eval,
    precision_recall,
    recall_at_k,
    spearman,
    tau_d,
)
from .retrieve import hierarchical_retrieve
from .store import (
    load_hierarchies,
    load_knn_task,
    load_label_task,
    load_pairs,
    read_store,
    write_metadata,
    write_store,
)

ROOT_KEY = ""


class _Row:
    """One output row; text mode truncates floats, structured mode keeps
    full precision."""

    def __init__(self, metric: str, item: str, value):
        self.metric = metric
        self.item = item
        self.value = value

    def as_text(self) -> str:
        value = self.value
        if isinstance(value, float):
            value = f"{value:.6f}"
        return f"{self.metric}\t{self.item}\t{value}"

    def as_json(self) -> str:
        return json.dumps(
            {"metric": self.metric, "item": self.item, "value": self.value}
        )


def _emit(rows: Sequence[_Row], args) -> None:
    structured = args.format == "structured"
    text = "\n".join(r.as_json() if structured else r.as_text() for r in rows) + "\n"
    if getattr(args, "out", None) and args.command != "align":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_rows(report: EvalReport) -> list[_Row]:
    rows = [_Row(report.metric, item, value) for item, value in report.items]
    rows.append(_Row(report.metric, "mean", report.mean))
    return rows


def _vector(store, key: str) -> np.ndarray:
    return store[key]


def cmd_probe(args) -> int:
    store = read_store(args.store)
    keys = args.keys
    root = _vector(store, ROOT_KEY)
    vectors = [_vector(store, k) for k in keys]
    eps = args.epsilon

    rows = []
    for key, vec in zip(keys, vectors):
        rows.append(_Row("d_r", key, float(root_distance(root, vec))))
        rows.append(_Row("theta", key, float(half_aperture(root, vec, eps))))

    def pair_rows(a, b, va, vb):
        xi = float(exterior_angle(root, va, vb))
        rows.append(_Row("xi", f"{a}->{b}", xi))
        rows.append(
            _Row("cone", f"{a}->{b}", bool(cone_contains(root, va, vb, eps)))
        )
        rows.append(
            _Row(
                "loss_ec_hinge",
                f"{a}->{b}",
                float(loss_ec_margin(root, va, vb, sign=+1, eps=eps, margin=0.0)),
            )
        )

    if len(keys) == 2:
        pair_rows(keys[0], keys[1], vectors[0], vectors[1])
        rows.append(
            _Row("sim", f"{keys[0]}~{keys[1]}", float(cosine_sim(vectors[0], vectors[1])))
        )
    else:
        anchor, positive, negative = keys
        pair_rows(anchor, positive, vectors[0], vectors[1])
        pair_rows(anchor, negative, vectors[0], vectors[2])
        rows.append(
            _Row(
                "loss_re",
                f"{anchor}->{positive}|{negative}",
                float(loss_re(root, vectors[0], vectors[1], vectors[2])),
            )
        )
    _emit(rows, args)
    return 0


def _candidate_pool(store, image_key: str, pattern: str) -> dict:
    pool = {}
    for key in store.keys():
        if key == ROOT_KEY or key == image_key:
            continue
        if fnmatch.fnmatchcase(key, pattern):
            pool[key] = store[key]
    if not pool:
        raise EmptyCandidates(f"no candidate key matches pattern {pattern!r}")
    return pool


def cmd_retrieve(args) -> int:
    store = read_store(args.store)
    root = _vector(store, ROOT_KEY)
    image = _vector(store, args.image_key)
    pool = _candidate_pool(store, args.image_key, args.candidates)
    result = hierarchical_retrieve(image, root, pool, steps=args.steps)

    rows = [_Row("target", args.image_key, result.target_key)]
    for rank, key in enumerate(result.hierarchy, start=1):
        rows.append(_Row("hierarchy", str(rank), key))
    if args.format == "structured":
        for step in result.steps:
            rows.append(
                _Row(
                    "step",
                    str(step.step),
                    {"radius": step.radius, "key": step.key},
                )
            )
    _emit(rows, args)
    return 0


def cmd_align(args) -> int:
    store = read_store(args.store)
    records = load_hierarchies(args.data, store=store)
    config = AlignConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        seed=args.seed,
        root_key=ROOT_KEY,
        loss=LossConfig(
            lambda_re=args.lambda_re,
            lambda_reg=args.lambda_reg,
            epsilon=args.epsilon,
        ),
    )
    state = align(records, store, config)

    table = {}
    for key in store.keys():
        if key == ROOT_KEY:
            table[key] = state.root
        elif key in state.table:
            table[key] = state.table[key]
        else:
            table[key] = store[key]
    write_store(args.out, table, dtype=store.dtype)
    write_metadata(
        args.out + ".meta",
        {
            "source_store": args.store,
            "dataset": args.data,
            "records": str(len(records)),
            "epochs": str(args.epochs),
            "batch_size": str(args.batch),
            "learning_rate": repr(args.lr),
            "lambda_re": repr(args.lambda_re),
            "lambda_reg": repr(args.lambda_reg),
            "epsilon": repr(args.epsilon),
            "seed": str(args.seed),
            "steps": str(state.step),
            "final_loss": repr(state.history[-1]) if state.history else "nan",
        },
    )

    rows = [
        _Row("align", "records", len(records)),
        _Row("align", "steps", state.step),
        _Row("align", "loss_first", state.history[0]),
        _Row("align", "loss_last", state.history[-1]),
        _Row("align", "loss_min", float(min(state.history))),
        _Row("align", "checkpoint", args.out),
    ]
    _emit(rows, args)
    return 0


def _eval_hier(args, store) -> list[_Row]:
    records = load_hierarchies(args.data, store=store)
    root = _vector(store, ROOT_KEY)
    pool = {}
    for record in records:
        for key in record.caption_keys():
            if key not in pool:
                pool[key] = store[key]

    p_items, r_items, t_items = [], [], []
    for record in records:
        image = _vector(store, record.image_key)
        result = hierarchical_retrieve(image, root, pool, steps=args.steps)
        truth = [c.key for c in record.positives]
        p, r = precision_recall(result.hierarchy, truth)
        p_items.append((record.image_id, p))
        r_items.append((record.image_id, r))
        t_items.append(
            (record.image_id, tau_d(root, [store[k] for k in truth]))
        )

    rows = []
    for name, items in (
        ("precision", p_items),
        ("recall", r_items),
        ("tau_d", t_items),
    ):
        rows.extend(_report_rows(EvalReport(metric=name, items=tuple(items))))
    return rows


def _eval_lexical(args, store) -> list[_Row]:
    pairs = load_pairs(args.data)
    root = _vector(store, ROOT_KEY)
    angles, golds = [], []
    by_pos: dict[str, tuple[list, list]] = {}
    for pair in pairs:
        angle = float(
            exterior_angle(root, _vector(store, pair.word1), _vector(store, pair.word2))
        )
        angles.append(angle)
        golds.append(pair.score)
        if pair.pos is not None:
            bucket = by_pos.setdefault(pair.pos, ([], []))
            bucket[0].append(angle)
            bucket[1].append(pair.score)

    rows = [_Row("spearman", "all", spearman(angles, golds))]
    for pos in sorted(by_pos):
        pos_angles, pos_golds = by_pos[pos]
        rows.append(_Row("spearman", f"pos:{pos}", spearman(pos_angles, pos_golds)))
    return rows


def _eval_pairs(args, store) -> list[_Row]:
    task = load_label_task(args.data)
    root = _vector(store, ROOT_KEY)
    label_vectors = {}
    for label in task.all_labels():
        if label.text not in label_vectors:
            label_vectors[label.text] = _vector(store, label.key)
    image_sims = {}
    for image in task.images:
        vec = _vector(store, image.key)
        image_sims[image.image_id] = {
            text: float(cosine_sim(vec, lvec)) for text, lvec in label_vectors.items()
        }

    rows = []
    for k in (1, 5):
        result = breeds_eval(task, label_vectors, image_sims, root, k=k)
        prefix = f"pairs_recall@{k}"
        rows.append(_Row(prefix, "mean", result.recall))
        rows.append(_Row(prefix, "fold0_constant", result.fold_constants[0]))
        rows.append(_Row(prefix, "fold1_constant", result.fold_constants[1]))
        rows.append(_Row(prefix, "fold0_pick_heldout", result.fold_recalls[0]))
        rows.append(_Row(prefix, "fold1_pick_heldout", result.fold_recalls[1]))
    return rows


def _eval_knn(args, store) -> list[_Row]:
    task = load_knn_task(args.data)
    query_keys = {key for key, _ in task.queries}
    if task.corpus is not None:
        corpus = {key: _vector(store, key) for key in task.corpus}
    else:
        corpus = {
            key: store[key]
            for key in store.keys()
            if key != ROOT_KEY and key not in query_keys
        }
    queries = [(_vector(store, key), gt) for key, gt in task.queries]
    value = recall_at_k(queries, corpus, k=args.k)
    return [_Row(f"recall@{args.k}", "mean", value)]


def cmd_eval(args) -> int:
    store = read_store(args.store)
    handler = {
        "hier": _eval_hier,
        "lexical": _eval_lexical,
        "pairs": _eval_pairs,
        "knn": _eval_knn,
    }[args.task]
    _emit(handler(args, store), args)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radialign",
        description="Probe, optimize, and evaluate radial hierarchy structure "
        "in joint embedding stores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=False):
        p.add_argument("--store", required=True, help="embedding store file")
        p.add_argument(
            "--format",
            choices=("text", "structured"),
            default="text",
            help="text rows or line-delimited JSON",
        )
        if out:
            p.add_argument("--out", help="write the report to this file")

    probe = sub.add_parser("probe", help="print geometry for a pair or triplet")
    common(probe)
    probe.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    probe.add_argument(
        "keys", nargs="+", help="two keys (entailing, entailed) or three "
        "(anchor, positive, negative)"
    )
    probe.set_defaults(func=cmd_probe)

    retrieve = sub.add_parser("retrieve", help="radial sweep for one image key")
    common(retrieve, out=True)
    retrieve.add_argument("--steps", type=int, default=50)
    retrieve.add_argument(
        "--candidates",
        default="*",
        help="glob over candidate keys (root and the image key are always excluded)",
    )
    retrieve.add_argument("image_key")
    retrieve.set_defaults(func=cmd_retrieve)

    align_p = sub.add_parser("align", help="optimize caption embeddings")
    common(align_p)
    align_p.add_argument("--data", required=True, help="hierarchy records (JSONL)")
    align_p.add_argument("--out", required=True, help="checkpoint store path")
    align_p.add_argument("--seed", type=int, default=0)
    align_p.add_argument("--lr", type=float, default=1e-3)
    align_p.add_argument("--batch", type=int, default=8)
    align_p.add_argument("--epochs", type=int, default=1)
    align_p.add_argument("--lambda-re", type=float, default=1.0)
    align_p.add_argument("--lambda-reg", type=float, default=10.0)
    align_p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    align_p.set_defaults(func=cmd_align)

    eval_p = sub.add_parser("eval", help="run an evaluation task")
    common(eval_p, out=True)
    eval_p.add_argument("task", choices=("hier", "lexical", "pairs", "knn"))
    eval_p.add_argument("--data", required=True, help="task data file")
    eval_p.add_argument("--steps", type=int, default=50)
    eval_p.add_argument("--k", type=int, default=1)
    eval_p.set_defaults(func=cmd_eval)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "probe" and len(args.keys) not in (2, 3):
        parser.error("probe takes exactly two or three keys")
    try:
        return args.func(args)
    except (RadialignError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
