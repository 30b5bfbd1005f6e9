"""Command-line pipeline: train, evaluate, grid, predict, importance,
gen-data, serve.

stdout carries data (JSON or CSV), diagnostics go to stderr.  Every
subcommand is reproducible from its flags and --seed.  Long flag lists can
live in a file referenced as @flags.txt.  Exit codes: 0 ok, 1 runtime
failure, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import ensemble, evaluate, features, ingest, pipeline
from .ensemble import BagConfig, ModelFormatError
from .features import DEVELOPER, USER
from .ingest import IngestError

_PAPERED_CLASSIFIERS = {USER: 11, DEVELOPER: 1}
_GRID_CLASSIFIERS = (3, 5, 7, 9, 11, 13, 15)
_GRID_SIZES = (2_000, 5_000, 10_000, 25_000, 50_000, 100_000)


class DataError(Exception):
    """Bad input data or files: exit code 2."""


def _eprint(*parts) -> None:
    print(*parts, file=sys.stderr)


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _load_model(path: str) -> ensemble.BagModel:
    try:
        return ensemble.load(path)
    except FileNotFoundError as exc:
        raise DataError(f"model file not found: {path}") from exc
    except ModelFormatError as exc:
        raise DataError(str(exc)) from exc


def _prepare_dataset(path: str, drop_report: Optional[str]):
    try:
        labeled, issues = pipeline.load_labeled_csv(path)
    except FileNotFoundError as exc:
        raise DataError(f"input file not found: {path}") from exc
    except IngestError as exc:
        raise DataError(str(exc)) from exc
    labeled, groups, manifest_issues = pipeline.resolve_manifests(labeled, os.path.dirname(path) or ".")
    issues = issues + manifest_issues
    if drop_report:
        with open(drop_report, "w", encoding="utf-8") as fh:
            ingest.write_drop_report(sorted(issues, key=lambda i: i.row), fh)
    if not labeled:
        raise DataError("no usable labeled records in input")
    _eprint(f"loaded {len(labeled)} labeled records ({len(issues)} rows dropped or invalid)")
    return labeled, groups


def cmd_train(args) -> int:
    labeled, groups = _prepare_dataset(args.infile, args.drop_report)
    schema, _profiles, X, y = pipeline.fit_and_vectorize(labeled, groups, args.variant)
    split = evaluate.SplitSpec(test_fraction=args.test_fraction, seed=args.seed)
    train_idx, test_idx = evaluate.stratified_split(y, split)
    val_idx = evaluate.draw_validation(y, train_idx, test_idx, seed=args.seed)

    n_classifiers = args.classifiers if args.classifiers else _PAPERED_CLASSIFIERS[args.variant]
    config = BagConfig(
        n_classifiers=n_classifiers,
        subset_size=args.subset_size,
        master_seed=args.seed,
        variant=args.variant,
        vote=args.vote,
    )
    bag = ensemble.train_bag(X[train_idx], y[train_idx], config, schema=schema, jobs=args.jobs)

    val_scores = ensemble.predict_score(bag, X[val_idx])
    _, val_auc = evaluate.roc_and_auc(val_scores, y[val_idx])
    if args.threshold == "fscore":
        threshold, f1 = evaluate.select_threshold(val_scores, y[val_idx])
    else:
        threshold = float(args.threshold)
        if not 0.0 <= threshold <= 1.0:
            raise DataError("--threshold must be 'fscore' or a value in [0, 1]")
        f1 = evaluate.f1_at(val_scores, y[val_idx], threshold)
    bag.threshold = threshold
    ensemble.save(bag, args.model_out)

    print(
        json.dumps(
            {
                "model_out": args.model_out,
                "variant": args.variant,
                "n_classifiers": n_classifiers,
                "subset_size": args.subset_size,
                "validation_auc": val_auc,
                "threshold": threshold,
                "f_score": f1,
            }
        )
    )
    return 0


def cmd_evaluate(args) -> int:
    bag = _load_model(args.model)
    labeled, groups = _prepare_dataset(args.infile, args.drop_report)
    X, y = pipeline.vectorize_labeled(labeled, groups, bag.schema)
    scores = ensemble.predict_score(bag, X)
    roc, auc = evaluate.roc_and_auc(scores, y)
    threshold = bag.threshold if bag.threshold is not None else 0.5
    tp, fp, tn, fn = evaluate.confusion_at(scores, y, threshold)
    report = evaluate.EvalReport(
        auc=auc,
        roc=roc,
        chosen_threshold=threshold,
        f_score_at_threshold=evaluate.f1_at(scores, y, threshold),
        importance_top=ensemble.aggregate_importance(bag)[:20],
    )
    doc = report.to_dict()
    doc["confusion"] = {"tp": tp, "fp": fp, "tn": tn, "fn": fn}
    if args.roc_out:
        with open(args.roc_out, "w", encoding="utf-8") as fh:
            evaluate.write_roc_csv(roc, fh)
    _eprint(f"auc={auc:.4f} threshold={threshold:.4f} tp={tp} fp={fp} tn={tn} fn={fn}")
    _eprint(f"{'feature':<32} importance")
    for name, score in report.importance_top[:10]:
        _eprint(f"{name:<32} {score:10.4f}")
    print(json.dumps(doc))
    return 0


def cmd_grid(args) -> int:
    labeled, groups = _prepare_dataset(args.infile, args.drop_report)
    _schema, _profiles, X, y = pipeline.fit_and_vectorize(labeled, groups, args.variant)
    split = evaluate.SplitSpec(test_fraction=args.test_fraction, seed=args.seed)
    train_idx, test_idx = evaluate.stratified_split(y, split)
    val_idx = evaluate.draw_validation(y, train_idx, test_idx, seed=args.seed)
    grid = evaluate.run_grid(
        X[train_idx],
        y[train_idx],
        X[val_idx],
        y[val_idx],
        args.classifiers,
        args.sizes,
        master_seed=args.seed,
        variant=args.variant,
        jobs=args.jobs,
    )
    _eprint(evaluate.format_grid_table(grid))
    print(
        json.dumps(
            [
                {"n_classifiers": k, "subset_size": s, "auc": a}
                for (k, s), a in sorted(grid.items())
            ]
        )
    )
    return 0


def cmd_predict(args) -> int:
    from .server import RequestError, _score_request

    bag = _load_model(args.model)
    threshold = bag.threshold if bag.threshold is not None else 0.5
    if args.infile.endswith(".json"):
        with open(args.infile, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        items = payload if isinstance(payload, list) else [payload]
        responses = []
        for attrs in items:
            try:
                score = _score_request(bag, attrs)
            except RequestError as exc:
                raise DataError(exc.message) from exc
            responses.append(
                {
                    "score": score,
                    "label": "Removed" if score > threshold else "Stable",
                    "threshold": threshold,
                }
            )
        print(json.dumps(responses[0] if not isinstance(payload, list) else responses))
        return 0
    # CSV: score every parseable row; labels are not needed.
    with open(args.infile, "r", encoding="utf-8", newline="") as fh:
        records, errors = ingest.parse_records(fh)
    for err in errors:
        _eprint(f"row {err.row}: {err.reason}")
    print("row,score,label")
    for record in records:
        perms, acts = pipeline.manifest_groups(record, os.path.dirname(args.infile) or ".")
        vector = features.vectorize(record, perms, acts, None, bag.schema)
        score = float(ensemble.predict_score(bag, vector))
        label = "Removed" if score > threshold else "Stable"
        print(f"{record.source_row},{score!r},{label}")
    return 0


def cmd_importance(args) -> int:
    bag = _load_model(args.model)
    ranked = ensemble.aggregate_importance(bag)
    print(json.dumps([{"feature": n, "score": s} for n, s in ranked]))
    return 0


def cmd_gen_data(args) -> int:
    spec = evaluate.STRONG_SIGNAL if args.signal == "strong" else evaluate.NO_SIGNAL
    data = evaluate.gen_synthetic(args.n, args.seed, spec)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        ingest.write_records(data.records, fh)
    if args.truth_out:
        with open(args.truth_out, "w", encoding="utf-8") as fh:
            fh.write("row,probability\n")
            for record, p in zip(data.records, data.probabilities):
                fh.write(f"{record.source_row},{p!r}\n")
    _eprint(f"wrote {len(data.records)} records to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(model_path=args.model, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="appkeep",
        description="Train and serve app-removal prediction models.",
        fromfile_prefix_chars="@",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_in=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        if model_in:
            p.add_argument("--model", required=True, help="model JSON file")

    p = sub.add_parser("train", help="fit a bagged model from a labeled CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--model-out", dest="model_out", required=True)
    p.add_argument("--variant", choices=[USER, DEVELOPER], default=DEVELOPER)
    p.add_argument("--classifiers", type=int, default=None, help="default: 11 user / 1 developer")
    p.add_argument("--subset-size", type=int, default=100_000)
    p.add_argument("--test-fraction", type=float, default=0.30)
    p.add_argument("--threshold", default="fscore", help="'fscore' or a fixed value in [0,1]")
    p.add_argument("--vote", choices=["mean", "majority"], default="mean")
    p.add_argument("--drop-report", default=None)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a labeled CSV with a trained model")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--roc-out", default=None, help="write ROC points as threshold,fpr,tpr CSV")
    p.add_argument("--drop-report", default=None)
    common(p, model_in=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="AUC grid over classifier counts and subset sizes")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--classifiers", type=_int_list, default=list(_GRID_CLASSIFIERS))
    p.add_argument("--sizes", type=_int_list, default=list(_GRID_SIZES))
    p.add_argument("--variant", choices=[USER, DEVELOPER], default=DEVELOPER)
    p.add_argument("--test-fraction", type=float, default=0.30)
    p.add_argument("--drop-report", default=None)
    common(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("predict", help="score apps from a JSON attribute object or a CSV")
    p.add_argument("--in", dest="infile", required=True)
    common(p, model_in=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("importance", help="ranked global feature importance")
    common(p, model_in=True)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("gen-data", help="synthetic labeled CSV with a known signal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--signal", choices=["strong", "none"], default="strong")
    p.add_argument("--truth-out", default=None, help="write true removal probabilities")
    common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("serve", help="run the HTTP prediction service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static-dir", default=None, help="serve a built web UI from this directory")
    common(p, model_in=True)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        _eprint(f"error: {exc}")
        return 2
    except ValueError as exc:
        _eprint(f"error: {exc}")
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        _eprint(f"failed: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
