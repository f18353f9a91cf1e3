"""Command-line entry point for the full pipeline.

Exit codes: 0 success, 1 usage error, 2 data error (bad manifests, corrupt
files), 3 runtime error (I/O, unreachable backend). Every command that
writes artifacts also writes a run manifest (run.json next to the artifact)
echoing the exact invocation, so any run can be reproduced from it alone.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__, nn
from . import training as T
from .dataset import (
    DEFAULT_LABEL_FRACTION,
    DEFAULT_TRAIN_FRACTION,
    ManifestError,
    export_labeled_manifest,
    label_by_percentile,
    parse_labeled_manifest,
    parse_manifest,
    score_histogram,
    score_records,
    split_train_test,
)
from .features_io import read_features, write_features
from .forest import out_of_bag_accuracy, rf_predict, rf_train
from .imaging import decode_ppm, encode_ppm, mosaic
from .metrics import compute_metrics
from .svm import svm_predict, svm_train
from .synthetic import generate_corpus, quality_score_correlation


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected host:port, got {text!r}")
    return host, int(port)


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    out = getattr(args, "out_json", None)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _write_run_manifest(target: Path, args) -> None:
    run_path = target / "run.json" if target.is_dir() else target.with_name(target.name + ".run.json")
    config = {k: str(v) if isinstance(v, Path) else v
              for k, v in vars(args).items() if k not in ("func", "argv")}
    run_path.write_text(json.dumps({
        "command": args.command,
        "argv": args.argv,
        "config": config,
        "version": __version__,
    }, indent=2, sort_keys=True, default=str) + "\n")


def _image_root(args, manifest_attr: str) -> Path:
    if args.image_root is not None:
        return Path(args.image_root)
    return Path(getattr(args, manifest_attr)).parent


def _load_any_manifest_records(path: Path):
    try:
        return [p.record for p, _ in parse_labeled_manifest(path).photos()]
    except ManifestError:
        return parse_manifest(path)


def cmd_gen_synthetic(args) -> int:
    out_dir = Path(args.out)
    photos = generate_corpus(args.n, args.seed, out_dir, size=args.size,
                             reference_date=args.reference_date)
    _write_run_manifest(out_dir, args)
    _emit(args, {
        "n": len(photos),
        "out": str(out_dir),
        "manifest": str(out_dir / "manifest.csv"),
        "quality_score_correlation": quality_score_correlation(photos, args.reference_date),
    })
    return 0


def cmd_score_dataset(args) -> int:
    records = parse_manifest(args.manifest)
    scored = score_records(records, args.reference_date)
    labeled = label_by_percentile(scored, args.fraction)
    export_labeled_manifest(labeled, args.out)
    _write_run_manifest(Path(args.out), args)
    _emit(args, {
        "positives": len(labeled.positives),
        "negatives": len(labeled.negatives),
        "discarded": labeled.discarded_count,
        "out": str(args.out),
    })
    return 0


def cmd_split(args) -> int:
    labeled = parse_labeled_manifest(args.labeled)
    train_set, test_set = split_train_test(labeled, args.train_fraction, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    export_labeled_manifest(train_set, out_dir / "train.csv")
    export_labeled_manifest(test_set, out_dir / "test.csv")
    _write_run_manifest(out_dir, args)
    _emit(args, {
        "train": {"positives": len(train_set.positives), "negatives": len(train_set.negatives)},
        "test": {"positives": len(test_set.positives), "negatives": len(test_set.negatives)},
        "out_dir": str(out_dir),
    })
    return 0


def _train_config(args, multipliers=None) -> T.TrainConfig:
    return T.TrainConfig(
        base_lr=args.lr, momentum=args.momentum, batch_size=args.batch_size,
        max_iterations=args.iterations, eval_interval=args.eval_interval,
        seed=args.seed, lr_multipliers=multipliers,
    )


def _finish_training(args, net, params, log) -> int:
    nn.save_weights(params, net, args.out)
    _write_run_manifest(Path(args.out), args)
    if args.curves:
        T.export_learning_curves(log, args.curves)
    last = log.rows[-1]
    _emit(args, {
        "out": str(args.out),
        "iterations": last.iteration,
        "final_train_loss": last.train_loss,
        "final_test_loss": last.test_loss,
        "final_test_accuracy": last.test_accuracy,
    })
    return 0


def cmd_train(args) -> int:
    if args.label_source == "hue":
        if not args.manifest:
            raise UsageError("--label-source hue requires --manifest")
        records = _load_any_manifest_records(Path(args.manifest))
        net = nn.reference_network(args.name, input_hw=args.input_size)
        root = _image_root(args, "manifest")
        params, log = T.proxy_pretrain(net, records, _train_config(args), root)
        return _finish_training(args, net, params, log)

    if not (args.train and args.test):
        raise UsageError("--label-source manifest requires --train and --test")
    train_set = parse_labeled_manifest(args.train, "train")
    test_set = parse_labeled_manifest(args.test, "test")
    net = nn.reference_network(args.name, input_hw=args.input_size)
    root = _image_root(args, "train")
    params = nn.init_params(net, seed=args.seed)
    params, log = T.train(net, params, (train_set, test_set), _train_config(args), root)
    return _finish_training(args, net, params, log)


def cmd_finetune(args) -> int:
    net, pretrained = nn.load_weights(args.pretrained)
    if args.name:
        net = nn.NetworkSpec(args.name, net.input_shape, net.layers, net.channel_mean)
    train_set = parse_labeled_manifest(args.train, "train")
    test_set = parse_labeled_manifest(args.test, "test")
    root = _image_root(args, "train")
    params, log = T.finetune(net, pretrained, (train_set, test_set),
                             _train_config(args), root)
    return _finish_training(args, net, params, log)


def cmd_extract_features(args) -> int:
    net, params = nn.load_weights(args.weights)
    records = _load_any_manifest_records(Path(args.manifest))
    root = _image_root(args, "manifest")
    layer = args.layer if args.layer is not None else net.first_fc_index()
    X = np.stack([T.load_photo_tensor(r, net, root) for r in records])
    features = nn.extract_features(net, params, X, layer)
    write_features(features, args.out)
    _write_run_manifest(Path(args.out), args)
    _emit(args, {"rows": features.shape[0], "cols": features.shape[1],
                 "layer": layer, "out": str(args.out)})
    return 0


def _labels_from_manifest(path: Path) -> list[int]:
    return [label for _, label in parse_labeled_manifest(path).photos()]


def cmd_train_svm(args) -> int:
    X = read_features(args.features).astype(np.float64)
    y = _labels_from_manifest(Path(args.labels))
    gamma = 1.0 / (X.shape[1] * X.var()) if args.gamma == "scale" else float(args.gamma)
    model = svm_train(X, np.array(y), C=args.C, gamma=gamma, tol=args.tol,
                      max_passes=args.max_passes)
    train_preds = [svm_predict(model, x)[0] for x in X]
    result = {
        "gamma": gamma,
        "C": args.C,
        "support_vectors": int(model.support_vectors.shape[0]),
        "kkt_residual": model.kkt_residual,
        "train": vars(compute_metrics(train_preds, y)),
    }
    if args.test_features and args.test_labels:
        Xt = read_features(args.test_features).astype(np.float64)
        yt = _labels_from_manifest(Path(args.test_labels))
        preds = [svm_predict(model, x)[0] for x in Xt]
        result["test"] = vars(compute_metrics(preds, yt))
    _emit(args, result)
    return 0


def cmd_train_rf(args) -> int:
    X = read_features(args.features)
    y = _labels_from_manifest(Path(args.labels))
    model = rf_train(X, np.array(y), n_trees=args.trees, max_depth=args.max_depth,
                     seed=args.seed)
    train_preds = [rf_predict(model, x) for x in X]
    result = {
        "trees": args.trees,
        "max_depth": args.max_depth,
        "out_of_bag_accuracy": out_of_bag_accuracy(model, X, np.array(y)),
        "train": vars(compute_metrics(train_preds, y)),
    }
    if args.test_features and args.test_labels:
        Xt = read_features(args.test_features)
        yt = _labels_from_manifest(Path(args.test_labels))
        preds = [rf_predict(model, x) for x in Xt]
        result["test"] = vars(compute_metrics(preds, yt))
    _emit(args, result)
    return 0


def cmd_evaluate(args) -> int:
    net, params = nn.load_weights(args.weights)
    dataset = parse_labeled_manifest(args.manifest)
    metrics = T.evaluate(net, params, dataset, _image_root(args, "manifest"))
    _emit(args, {"model_id": net.name, "n": len(dataset), **vars(metrics)})
    return 0


def cmd_rank(args) -> int:
    net, params = nn.load_weights(args.weights)
    records = _load_any_manifest_records(Path(args.manifest))
    ranked = T.rank_by_aesthetics(net, params, records, _image_root(args, "manifest"))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("photo_id,p1\n")
        for photo_id, p1 in ranked:
            fh.write(f"{photo_id},{p1!r}\n")
    _write_run_manifest(Path(args.out), args)
    _emit(args, {"n": len(ranked), "out": str(args.out),
                 "best": ranked[0][0], "worst": ranked[-1][0]})
    return 0


def cmd_mosaic(args) -> int:
    by_id = {r.photo_id: r for r in _load_any_manifest_records(Path(args.manifest))}
    with open(args.ranking, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "photo_id,p1":
            raise ManifestError(f"expected ranking header photo_id,p1, got {header!r}")
        order = [line.split(",")[0] for line in fh if line.strip()]
    picked = order[:args.count] if args.select == "top" else order[-args.count:]
    root = _image_root(args, "manifest")
    images = []
    for photo_id in picked:
        if photo_id not in by_id:
            raise ManifestError(f"ranked photo {photo_id!r} missing from manifest")
        images.append(decode_ppm((root / by_id[photo_id].image_path).read_bytes()))
    grid = mosaic(images, columns=args.columns, cell=args.cell)
    Path(args.out).write_bytes(encode_ppm(grid))
    _write_run_manifest(Path(args.out), args)
    _emit(args, {"out": str(args.out), "images": len(images),
                 "width": grid.width, "height": grid.height})
    return 0


def cmd_histogram(args) -> int:
    labeled = parse_labeled_manifest(args.labeled)
    photos = [p for p, _ in labeled.photos()]
    bins = score_histogram(photos, args.bins)
    rows = [{"bin_low": lo, "bin_high": hi, "count": count} for lo, hi, count in bins]
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("bin_low,bin_high,count\n")
            for lo, hi, count in bins:
                fh.write(f"{lo!r},{hi!r},{count}\n")
        _write_run_manifest(Path(args.out), args)
    _emit(args, {"bins": rows, "total": sum(b[2] for b in bins)})
    return 0


def cmd_serve_backend(args) -> int:
    from .service.backend import create_backend_server

    server = create_backend_server(args.weights, args.bind)
    print(json.dumps({"listening": f"{server.address[0]}:{server.address[1]}"}), flush=True)
    with server:
        server.serve_forever()
    return 0


def cmd_serve_web(args) -> int:
    from .service.backend import probe_backend
    from .service.web import create_web_server

    if not probe_backend(args.backend):
        print(json.dumps({"warning": "backend unreachable; /api/score will answer 503"}),
              file=sys.stderr, flush=True)
    server = create_web_server(args.backend, args.bind, static_dir=args.static_dir,
                               max_upload=args.max_upload)
    print(json.dumps({"listening": f"{server.address[0]}:{server.address[1]}"}), flush=True)
    with server:
        server.serve_forever()
    return 0


def _add_training_flags(p: _Parser) -> None:
    p.add_argument("--image-root", type=Path, default=None,
                   help="base directory for image paths (default: manifest directory)")
    p.add_argument("--out", type=Path, required=True, help="weights file to write")
    p.add_argument("--curves", type=Path, default=None, help="learning-curve CSV to write")
    p.add_argument("--input-size", type=int, default=48)
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--eval-interval", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> _Parser:
    parser = _Parser(prog="aescore",
                     description="Photo aesthetics pipeline: dataset, training, baselines, serving.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--size", type=int, default=48)
    p.add_argument("--reference-date", type=date.fromisoformat, default=date(2017, 6, 1))
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("score-dataset", help="score photos and label by percentile")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--reference-date", type=date.fromisoformat, required=True)
    p.add_argument("--fraction", type=float, default=DEFAULT_LABEL_FRACTION)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_score_dataset)

    p = sub.add_parser("split", help="stratified train/test split of a labeled manifest")
    p.add_argument("--labeled", type=Path, required=True)
    p.add_argument("--train-fraction", type=float, default=DEFAULT_TRAIN_FRACTION)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the network from scratch")
    p.add_argument("--train", type=Path, default=None, help="labeled train manifest")
    p.add_argument("--test", type=Path, default=None, help="labeled test manifest")
    p.add_argument("--manifest", type=Path, default=None,
                   help="any manifest (for --label-source hue)")
    p.add_argument("--label-source", choices=("manifest", "hue"), default="manifest",
                   help="hue trains on the pixel-derived proxy task (pretraining)")
    p.add_argument("--name", default="scratch")
    _add_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("finetune", help="fine-tune pretrained weights with a new head")
    p.add_argument("--pretrained", type=Path, required=True)
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--name", default=None)
    _add_training_flags(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("extract-features", help="dump flattened activations to a sidecar file")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--image-root", type=Path, default=None)
    p.add_argument("--layer", type=int, default=None, help="default: first fc layer")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_extract_features)

    p = sub.add_parser("train-svm", help="train the RBF-kernel SVM baseline on features")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True, help="labeled manifest in feature order")
    p.add_argument("--test-features", type=Path, default=None)
    p.add_argument("--test-labels", type=Path, default=None)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--gamma", default="scale", help="float, or 'scale' for 1/(d*var)")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-passes", type=int, default=5)
    p.add_argument("--out", dest="out_json", type=Path, default=None)
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("train-rf", help="train the random-forest baseline on features")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--test-features", type=Path, default=None)
    p.add_argument("--test-labels", type=Path, default=None)
    p.add_argument("--trees", type=int, default=10)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="out_json", type=Path, default=None)
    p.set_defaults(func=cmd_train_rf)

    p = sub.add_parser("evaluate", help="metrics of a weights file on a labeled manifest")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--image-root", type=Path, default=None)
    p.add_argument("--out", dest="out_json", type=Path, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="rank photos by aesthetics probability")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--image-root", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("mosaic", help="thumbnail grid of the best or worst ranked photos")
    p.add_argument("--ranking", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--image-root", type=Path, default=None)
    p.add_argument("--select", choices=("top", "bottom"), default="top")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--columns", type=int, default=10)
    p.add_argument("--cell", type=int, default=32)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_mosaic)

    p = sub.add_parser("histogram", help="score histogram of a labeled manifest")
    p.add_argument("--labeled", type=Path, required=True)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("serve-backend", help="run the TCP inference backend")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--bind", type=_address, default=("127.0.0.1", 9090))
    p.set_defaults(func=cmd_serve_backend)

    p = sub.add_parser("serve-web", help="run the HTTP server and frontend")
    p.add_argument("--backend", type=_address, default=("127.0.0.1", 9090))
    p.add_argument("--bind", type=_address, default=("127.0.0.1", 8080))
    p.add_argument("--static-dir", type=Path, default=None)
    p.add_argument("--max-upload", type=int, default=8 * 1024 * 1024)
    p.set_defaults(func=cmd_serve_web)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ManifestError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 0
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
