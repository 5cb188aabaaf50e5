"""emgds command line: synth | features | train | evaluate | dendrogram.

Exit codes: 0 success, 1 runtime/data error, 2 usage error. Machine artifacts
go to files; stdout carries human summaries plus the effective configuration
of every run.
"""

from __future__ import annotations

import argparse
import sys

from . import errors, pipeline, svm
from .data import (Full, Holdout, KFold, Sliding, SynthConfig, ingest_csv,
                   split_keys, synth_corpus, write_csv)
from .features import (FeatureConfig, extract_corpus, read_features_csv,
                       write_features_csv)
from .grouping import class_separation, export_dendrogram, linkage
from .pca import ComponentCount, VarianceFraction, fit_pca, project_many
from .svm import KernelSpec


def _echo_config(name: str, pairs: dict) -> dict:
    text = " ".join(f"{k}={v}" for k, v in pairs.items())
    print(f"[{name}] config: {text}")
    return {k: v for k, v in pairs.items()}


def _parse_window(text: str):
    if text == "full":
        return Full()
    if text.startswith("sliding:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise errors.InvalidConfig("window must be 'full' or 'sliding:LEN:STEP'")
        try:
            return Sliding(int(parts[1]), int(parts[2]))
        except ValueError:
            raise errors.InvalidConfig("sliding window takes integer LEN and STEP") from None
    raise errors.InvalidConfig(f"unknown window {text!r}")


def _parse_gamma(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise errors.InvalidConfig("gamma must be a positive number or 'auto'") from None


def _kernel_from_args(args) -> KernelSpec:
    return KernelSpec(kind=args.kernel, gamma=_parse_gamma(args.gamma),
                      degree=args.degree, coef0=args.coef0)


def _retention_from_args(args):
    if getattr(args, "pca_dims", None) is not None:
        return ComponentCount(args.pca_dims)
    return VarianceFraction(args.pca_var)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args, parser):
    try:
        cfg = SynthConfig(subjects=args.subjects, reps_per_activity=args.reps,
                          rate_hz=args.rate, duration_s=args.duration,
                          seed=args.seed, power_rms_scale=args.power_rms_scale)
    except errors.InvalidConfig as exc:
        parser.error(str(exc))
    _echo_config("synth", {"out": args.out, "subjects": cfg.subjects,
                           "reps": cfg.reps_per_activity, "rate": cfg.rate_hz,
                           "duration": cfg.duration_s, "seed": cfg.seed,
                           "power_rms_scale": cfg.power_rms_scale})
    corpus = synth_corpus(cfg)
    write_csv(corpus, args.out)
    rows = sum(r.n_samples for r in corpus.recordings)
    print(f"[synth] wrote {len(corpus)} recordings ({rows} rows) to {args.out}")
    return 0


def cmd_features(args, parser):
    try:
        cfg = FeatureConfig(ar_order=args.ar_order)
        window = _parse_window(args.window)
    except errors.InvalidConfig as exc:
        parser.error(str(exc))
    _echo_config("features", {"in": args.input, "out": args.out,
                              "ar_order": cfg.ar_order, "window": args.window,
                              "rate": args.rate})
    corpus = ingest_csv(args.input, rate_hz=args.rate)
    rows = extract_corpus(corpus, cfg, window)
    write_features_csv(rows, args.out)
    print(f"[features] wrote {len(rows)} rows x {len(rows[0].vector)} features to {args.out}")
    return 0


def _split_descriptor(args) -> dict:
    if args.kfold is not None:
        return {"protocol": "kfold", "k": args.kfold, "fold": 0,
                "seed": args.seed, "subject": args.subject}
    return {"protocol": "holdout", "train_fraction": args.split,
            "seed": args.seed, "subject": args.subject}


def _resolve_split(rows, descriptor):
    subject = descriptor.get("subject")
    if subject is not None:
        rows = [r for r in rows if r.subject == subject]
        if not rows:
            raise errors.EmptyCorpus(f"no feature rows for subject {subject!r}")
    keys = [r.key for r in rows]
    if descriptor["protocol"] == "kfold":
        folds = split_keys(keys, KFold(descriptor["k"], descriptor["seed"]))
        train_keys, test_keys = folds[descriptor.get("fold", 0)]
    else:
        train_keys, test_keys = split_keys(
            keys, Holdout(descriptor["train_fraction"], descriptor["seed"])
        )
    train_set, test_set = set(train_keys), set(test_keys)
    train = [r for r in rows if r.key in train_set]
    test = [r for r in rows if r.key in test_set]
    return train, test


def cmd_train(args, parser):
    if args.kfold is not None and args.split_given:
        parser.error("--split and --kfold are mutually exclusive")
    try:
        kernel = _kernel_from_args(args)
        retain = _retention_from_args(args)
        descriptor = _split_descriptor(args)
        if args.kfold is not None:
            KFold(args.kfold, args.seed)
        else:
            Holdout(args.split, args.seed)
    except errors.InvalidConfig as exc:
        parser.error(str(exc))
    config = _echo_config("train", {
        "features": args.features, "mode": args.mode, "model": args.model,
        "kernel": args.kernel, "c": args.c, "gamma": args.gamma,
        "degree": args.degree, "coef0": args.coef0,
        "pca_var": args.pca_var, "pca_dims": args.pca_dims,
        "split": args.split if args.kfold is None else None, "kfold": args.kfold,
        "subject": args.subject, "seed": args.seed, "tol": args.tol,
        "max_passes": args.max_passes, "smo_backend": svm.SMO_BACKEND,
    })
    rows = read_features_csv(args.features)
    train_rows, test_rows = _resolve_split(rows, descriptor)
    settings = pipeline.TrainSettings(retain=retain, kernel=kernel, c=args.c,
                                      tol=args.tol, max_passes=args.max_passes,
                                      seed=args.seed)
    train_vecs = [r.vector for r in train_rows]
    if args.mode == "single":
        model = pipeline.train_single(train_vecs, settings)
        stages = {"pca_dims": model.pca.n_components,
                  "support_vectors": [m.n_support for m in model.classifier.models]}
    else:
        model = pipeline.train_dual(train_vecs, settings)
        stages = {
            "stage1_pca_dims": model.stage1.pca.n_components,
            "stage1_support_vectors": model.stage1.classifier.n_support,
            "stage2_power_pca_dims": model.stage2_power.pca.n_components,
            "stage2_power_support_vectors":
                [m.n_support for m in model.stage2_power.classifier.models],
            "stage2_precision_pca_dims": model.stage2_precision.pca.n_components,
            "stage2_precision_support_vectors":
                [m.n_support for m in model.stage2_precision.classifier.models],
        }
    pipeline.save_model(model, args.model, split_descriptor=descriptor)
    train_report = pipeline.evaluate(model, train_vecs)
    report_doc = {
        "format_version": pipeline.REPORT_FORMAT_VERSION,
        "kind": "train-report",
        "mode": args.mode,
        "config": config,
        "split": descriptor,
        "n_train": len(train_rows),
        "n_test_heldout": len(test_rows),
        "training_accuracy": train_report.accuracy,
        "stages": stages,
    }
    report_path = args.train_report or (args.model + ".train.json")
    try:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(pipeline.dumps_json(report_doc))
    except OSError as exc:
        raise errors.IoError(f"cannot write train report {report_path}: {exc}") from exc
    print(f"[train] mode={args.mode} n_train={len(train_rows)} "
          f"training_accuracy={train_report.accuracy:.4f} model={args.model}")
    return 0


def cmd_evaluate(args, parser):
    config = _echo_config("evaluate", {
        "features": args.features, "model": args.model, "report": args.report,
        "compare": args.compare,
    })
    model, descriptor = pipeline.load_model(args.model)
    if descriptor is None:
        raise errors.SchemaError(
            f"{args.model}: no split descriptor stored; cannot recover the held-out set"
        )
    rows = read_features_csv(args.features)
    _, test_rows = _resolve_split(rows, descriptor)
    if not test_rows:
        raise errors.EmptyTestSet("recovered held-out set is empty")
    test_vecs = [r.vector for r in test_rows]
    report = pipeline.evaluate(model, test_vecs)
    report = pipeline.with_run_metadata(report, split_descriptor=descriptor,
                                        seed=descriptor.get("seed"), config=config)
    print(f"[evaluate] mode={report.mode} n_test={report.n_test} "
          f"accuracy={report.accuracy:.4f}")
    if report.mode == "dual":
        def fmt(x):
            return "n/a" if x is None else f"{x:.4f}"
        print(f"[evaluate] stage1_accuracy={fmt(report.stage1_accuracy)} "
              f"power_routed={fmt(report.stage2_power_accuracy_routed)} "
              f"power_all={fmt(report.stage2_power_accuracy_all)} "
              f"precision_routed={fmt(report.stage2_precision_accuracy_routed)} "
              f"precision_all={fmt(report.stage2_precision_accuracy_all)}")
    if args.compare:
        other, other_desc = pipeline.load_model(args.compare)
        if other.mode == model.mode:
            parser.error("--compare requires one single-stage and one dual-stage model")
        other_report = pipeline.evaluate(other, test_vecs)
        single_acc = report.accuracy if model.mode == "single" else other_report.accuracy
        dual_acc = report.accuracy if model.mode == "dual" else other_report.accuracy
        if other_desc != descriptor:
            print("[evaluate] note: compared models store different split descriptors; "
                  "both evaluated on this model's held-out set")
        print(f"[evaluate] comparison on {report.n_test} test vectors: "
              f"single={single_acc:.4f} dual={dual_acc:.4f} "
              f"delta={dual_acc - single_acc:+.4f}")
    if args.report:
        pipeline.save_report(report, args.report)
        print(f"[evaluate] report written to {args.report}")
    return 0


def cmd_dendrogram(args, parser):
    if args.linkage not in ("single", "complete", "average"):
        parser.error(f"unknown linkage {args.linkage!r}")
    try:
        retain = _retention_from_args(args)
    except errors.InvalidConfig as exc:
        parser.error(str(exc))
    _echo_config("dendrogram", {
        "features": args.features, "pca_var": args.pca_var, "pca_dims": args.pca_dims,
        "linkage": args.linkage, "out": args.out, "dot": args.dot,
        "newick": args.newick,
    })
    rows = read_features_csv(args.features)
    vectors = [r.vector for r in rows]
    labels = [r.activity for r in rows]
    pca = fit_pca(vectors, retain)
    reduced = project_many(pca, vectors)
    separation = class_separation(reduced, labels)
    root = linkage(separation, method=args.linkage)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(export_dendrogram(root, "json"))
        if args.dot:
            with open(args.dot, "w", encoding="utf-8") as fh:
                fh.write(export_dendrogram(root, "dot"))
        if args.newick:
            with open(args.newick, "w", encoding="utf-8") as fh:
                fh.write(export_dendrogram(root, "newick"))
    except OSError as exc:
        raise errors.IoError(f"cannot write dendrogram output: {exc}") from exc
    left = "".join(sorted(root.left.leaves()))
    right = "".join(sorted(root.right.leaves()))
    print(f"[dendrogram] root split {{{left}}} | {{{right}}} at height {root.height:.6f} "
          f"(pca_dims={pca.n_components})")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _SplitAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        setattr(namespace, "split_given", True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emgds",
        description="Dual-stage sEMG grasp classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus CSV")
    p.add_argument("--out", required=True, help="output corpus CSV path")
    p.add_argument("--subjects", type=int, default=5)
    p.add_argument("--reps", type=int, default=30, help="repetitions per activity")
    p.add_argument("--rate", type=float, default=500.0, help="sampling rate in Hz")
    p.add_argument("--duration", type=float, default=6.0, help="grasp length in seconds")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--power-rms-scale", type=float, default=3.0,
                   help="power-group RMS relative to precision-group")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract feature vectors from a corpus CSV")
    p.add_argument("--in", dest="input", required=True, help="corpus CSV path")
    p.add_argument("--out", required=True, help="output features CSV path")
    p.add_argument("--ar-order", type=int, default=4)
    p.add_argument("--window", default="full", help="'full' or 'sliding:LEN:STEP'")
    p.add_argument("--rate", type=float, default=500.0,
                   help="sampling rate of the corpus (metadata only)")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a single- or dual-stage model")
    p.add_argument("--features", required=True)
    p.add_argument("--mode", choices=("single", "dual"), required=True)
    p.add_argument("--model", required=True, help="output model JSON path")
    p.add_argument("--kernel", choices=("linear", "rbf", "poly"), default="rbf")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--gamma", default="auto", help="RBF gamma or 'auto'")
    p.add_argument("--degree", type=int, default=3, help="polynomial kernel degree")
    p.add_argument("--coef0", type=float, default=0.0, help="polynomial kernel offset")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pca-var", type=float, default=0.95,
                       help="retained variance fraction")
    group.add_argument("--pca-dims", type=int, default=None,
                       help="fixed component count (overrides --pca-var)")
    p.add_argument("--split", type=float, default=0.7, action=_SplitAction,
                   help="holdout train fraction")
    p.add_argument("--kfold", type=int, default=None,
                   help="k-fold protocol; fold 0 is held out")
    p.add_argument("--subject", default=None, help="train on one subject only")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=float, default=1e-3, help="SMO KKT tolerance")
    p.add_argument("--max-passes", type=int, default=200)
    p.add_argument("--train-report", default=None,
                   help="train report path (default: <model>.train.json)")
    p.set_defaults(func=cmd_train, split_given=False)

    p = sub.add_parser("evaluate", help="evaluate a model on its held-out split")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report", default=None, help="write the EvalReport JSON here")
    p.add_argument("--compare", default=None,
                   help="second model (opposite mode) for a side-by-side line")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("dendrogram", help="class-separation dendrogram exports")
    p.add_argument("--features", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pca-var", type=float, default=0.95)
    group.add_argument("--pca-dims", type=int, default=None)
    p.add_argument("--linkage", choices=("single", "complete", "average"),
                   default="single")
    p.add_argument("--out", required=True, help="dendrogram JSON path")
    p.add_argument("--dot", default=None, help="also write Graphviz dot here")
    p.add_argument("--newick", default=None, help="also write Newick here")
    p.set_defaults(func=cmd_dendrogram)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except errors.EmgdsError as exc:
        print(f"emgds: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
