"""Command-line pipeline: synth, split, transform, features, train, evaluate, infer.

Stages communicate through files (PPM/PGM images, CSV manifests and
feature tables, key=value model and report files), so any stage can be
rerun in isolation. Every command is deterministic for a given seed and
input set. Defaults are resolved flag > config file > SPECFOR_SEED env
var; on failure, files the failing command already wrote are removed
and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import augment, dataset, features, imagio, metrics, model, spectrum
from .errors import SpecforError

SEED_ENV_VAR = "SPECFOR_SEED"
DEFAULT_SIZE = 256
DEFAULT_RATIOS = (0.70, 0.15, 0.15)

_REPORT_KEYS = (
    "n", "tp", "tn", "fp", "fn", "accuracy", "f1", "auc", "ap",
    "mean_loss", "threshold", "domain", "schema",
)


def _pow2(text: str) -> int:
    value = int(text)
    if value < 4 or (value & (value - 1)) != 0:
        raise argparse.ArgumentTypeError(f"{value} is not a power of two >= 4")
    return value


def _ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


class _Outputs:
    """Tracks files written by the running command for failure cleanup."""

    def __init__(self) -> None:
        self.paths: list[Path] = []

    def register(self, path: str | Path) -> Path:
        p = Path(path)
        self.paths.append(p)
        return p

    def discard_all(self) -> None:
        for p in self.paths:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _fmt(value: float) -> str:
    return repr(float(value))


def _load_sized(path: Path, size: int) -> imagio.ImageTensor:
    img = imagio.load_image(path)
    if img.height != size or img.width != size:
        img = imagio.resize_bilinear(img, size, size)
    return img


def _domain_of_schema(schema_id: str) -> str:
    return "freq" if schema_id == "freq-v1" else "spatial"


def _extract(img: imagio.ImageTensor, domain: str) -> features.FeatureVector:
    if domain == "freq":
        return features.extract_freq_features(spectrum.transform_image(img))
    return features.extract_spatial_features(img)


def cmd_synth(args: argparse.Namespace, out: _Outputs) -> None:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    items: list[tuple[str, int]] = []
    for label, name, maker in (
        (0, "real", dataset.synth_real),
        (1, "fake", dataset.synth_fake),
    ):
        images = maker(args.n_per_class, args.size, args.alpha, args.seed)
        for i, img in enumerate(images):
            fname = f"{name}_{i:04d}.ppm"
            imagio.save_image(img, out.register(out_dir / fname))
            items.append((fname, label))
    manifest = dataset.DatasetManifest(
        [dataset.ManifestEntry(p, lab, "train") for p, lab in items], args.seed
    )
    dataset.save_manifest(manifest, out.register(out_dir / "manifest.csv"))
    print(f"wrote {len(items)} images and manifest.csv to {out_dir}")


def cmd_split(args: argparse.Namespace, out: _Outputs) -> None:
    manifest = dataset.load_manifest(args.manifest)
    out_path = Path(args.out)
    out_dir = out_path.parent if str(out_path.parent) else Path(".")
    items = []
    for e in manifest.entries:
        absolute = dataset.entry_abspath(args.manifest, e).resolve()
        items.append((os.path.relpath(absolute, out_dir.resolve()), e.label))
    split = dataset.split_manifest(items, args.ratios, args.seed)
    dataset.save_manifest(split, out.register(out_path))
    counts = {s: sum(1 for e in split.entries if e.split == s) for s in dataset.SPLITS}
    print(f"split {len(split.entries)} entries: {counts}")


def cmd_transform(args: argparse.Namespace, out: _Outputs) -> None:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.image:
        sources = [(Path(args.image).stem, Path(args.image))]
    else:
        manifest = dataset.load_manifest(args.manifest)
        sources = [
            (f"{i:05d}_{Path(e.path).stem}", dataset.entry_abspath(args.manifest, e))
            for i, e in enumerate(manifest.entries)
        ]
    count = 0
    for stem, path in sources:
        spec = spectrum.transform_image(_load_sized(path, args.size))
        for c in range(spec.channels):
            plane = imagio.ImageTensor(spec.data[:, :, c : c + 1])
            imagio.save_image(plane, out.register(out_dir / f"{stem}_c{c}.pgm"))
            count += 1
    print(f"wrote {count} spectrum planes to {out_dir}")


def cmd_features(args: argparse.Namespace, out: _Outputs) -> None:
    manifest = dataset.load_manifest(args.manifest)
    dim = features.SCHEMA_DIMS["freq-v1" if args.domain == "freq" else "spatial-v1"]
    with open(out.register(args.out), "w", encoding="utf-8", newline="") as fh:
        fh.write("path,schema," + ",".join(f"f{i}" for i in range(dim)) + "\n")
        for e in manifest.entries:
            fv = _extract(_load_sized(dataset.entry_abspath(args.manifest, e), args.size), args.domain)
            fh.write(f"{e.path},{fv.schema_id}," + ",".join(_fmt(v) for v in fv.values) + "\n")
    print(f"wrote {len(manifest.entries)} feature rows to {args.out}")


def cmd_train(args: argparse.Namespace, out: _Outputs) -> None:
    manifest = dataset.load_manifest(args.manifest)
    aug_cfg = augment.AugmentConfig(
        max_rotation_deg=args.max_rotation,
        max_shift_frac=args.max_shift,
        max_zoom_frac=args.max_zoom,
        hflip_prob=args.hflip_prob,
        enabled=not args.no_augment,
    )
    train_set: list[tuple[features.FeatureVector, int]] = []
    val_set: list[tuple[features.FeatureVector, int]] = []
    for idx, e in enumerate(manifest.entries):
        if e.split == "test":
            continue  # held out entirely; augmentation never touches evaluation data
        img = _load_sized(dataset.entry_abspath(args.manifest, e), args.size)
        if e.split == "train" and aug_cfg.enabled:
            img = augment.random_augment(img, aug_cfg, dataset.image_rng(args.seed, idx))
        fv = _extract(img, args.domain)
        (train_set if e.split == "train" else val_set).append((fv, e.label))
    cfg = model.TrainConfig(
        lr=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        early_stop_patience=args.early_stop_patience,
        early_stop_min_delta=args.min_delta,
        plateau_patience=args.plateau_patience,
        plateau_factor=args.plateau_factor,
        min_lr=args.min_lr,
        seed=args.seed,
    )
    fitted, history = model.train(train_set, val_set, cfg)
    model.save_model(fitted, out.register(args.model_out))
    if args.history_out:
        with open(out.register(args.history_out), "w", encoding="utf-8", newline="") as fh:
            fh.write("epoch,train_loss,val_loss,val_accuracy,lr\n")
            for r in history.epochs:
                fh.write(
                    f"{r.epoch},{_fmt(r.train_loss)},{_fmt(r.val_loss)},"
                    f"{_fmt(r.val_accuracy)},{_fmt(r.lr)}\n"
                )
    best = history.epochs[history.best_epoch - 1]
    print(
        f"trained {args.domain} model on {len(train_set)}/{len(val_set)} train/val: "
        f"best epoch {history.best_epoch} val_loss {best.val_loss:.6f} "
        f"val_accuracy {best.val_accuracy:.4f}"
    )


def cmd_evaluate(args: argparse.Namespace, out: _Outputs) -> None:
    fitted = model.load_model(args.model)
    domain = _domain_of_schema(fitted.schema_id)
    manifest = dataset.load_manifest(args.manifest)
    chosen = [e for e in manifest.entries if e.split == args.split]
    test_set = [
        (_extract(_load_sized(dataset.entry_abspath(args.manifest, e), args.size), domain), e.label)
        for e in chosen
    ]
    report = metrics.evaluate(fitted, test_set)
    values = {
        "n": report.n, "tp": report.tp, "tn": report.tn, "fp": report.fp,
        "fn": report.fn, "accuracy": _fmt(report.accuracy), "f1": _fmt(report.f1),
        "auc": _fmt(report.auc), "ap": _fmt(report.ap),
        "mean_loss": _fmt(report.mean_loss), "threshold": _fmt(report.threshold),
        "domain": domain, "schema": fitted.schema_id,
    }
    with open(out.register(args.report_out), "w", encoding="utf-8", newline="") as fh:
        for key in _REPORT_KEYS:
            fh.write(f"{key}={values[key]}\n")
    if args.roc_out:
        pts = metrics.roc_points([p for _, p in _scored(fitted, test_set)],
                                 [y for _, y in test_set])
        with open(out.register(args.roc_out), "w", encoding="utf-8", newline="") as fh:
            fh.write("fpr,tpr\n")
            for fpr, tpr in pts:
                fh.write(f"{_fmt(fpr)},{_fmt(tpr)}\n")
    ref = metrics.REFERENCE_RESULTS[domain]
    print(
        f"{fitted.schema_id} on {report.n} {args.split} samples: "
        f"accuracy {report.accuracy * 100:.2f}% f1 {report.f1:.3f} "
        f"auc {report.auc:.3f} ap {report.ap:.3f} mean_loss {report.mean_loss:.4f}"
    )
    print(
        f"reference resnet50 ({domain}): accuracy {ref['accuracy_pct']}% "
        f"f1 {ref['f1']} auc {ref['auc']} ap {ref['ap']}"
    )


def _scored(fitted: model.LinearModel, labeled) -> list[tuple[features.FeatureVector, float]]:
    return [(x, model.predict_proba(fitted, x)) for x, _ in labeled]


def cmd_infer(args: argparse.Namespace, out: _Outputs) -> None:
    fitted = model.load_model(args.model)
    domain = _domain_of_schema(fitted.schema_id)
    fv = _extract(_load_sized(Path(args.image), args.size), domain)
    p = model.predict_proba(fitted, fv)
    verdict = "FAKE" if p >= 0.5 else "REAL"
    print(f"{args.image}: p(fake) = {p:.6f} -> {verdict}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specfor",
        description="Fourier-domain forensics for GAN-generated images",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value defaults file")
        p.add_argument("--seed", type=int, help="RNG seed (default: SPECFOR_SEED or 0)")

    p = sub.add_parser("synth", help="generate a synthetic real/fake corpus")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-per-class", type=int, required=True)
    p.add_argument("--size", type=_pow2, default=DEFAULT_SIZE)
    p.add_argument("--alpha", type=float, default=1.0, help="spectral decay exponent")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="assign stratified train/val/test splits")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output manifest path")
    p.add_argument("--ratios", type=_ratios, default=DEFAULT_RATIOS, help="train,val,test")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("transform", help="write normalized log-magnitude spectra as PGM")
    common(p)
    p.add_argument("--manifest")
    p.add_argument("--image", help="transform a single image instead of a manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--size", type=_pow2, default=DEFAULT_SIZE)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("features", help="extract feature vectors to CSV")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--domain", choices=("freq", "spatial"), required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--size", type=_pow2, default=DEFAULT_SIZE)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a classifier on a split manifest")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--domain", choices=("freq", "spatial"), required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--history-out", help="per-epoch CSV (optional)")
    p.add_argument("--size", type=_pow2, default=DEFAULT_SIZE)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--early-stop-patience", type=int, default=10)
    p.add_argument("--min-delta", type=float, default=1e-4)
    p.add_argument("--plateau-patience", type=int, default=5)
    p.add_argument("--plateau-factor", type=float, default=0.5)
    p.add_argument("--min-lr", type=float, default=1e-7)
    p.add_argument("--no-augment", action="store_true", help="disable train-split augmentation")
    p.add_argument("--max-rotation", type=float, default=15.0, help="degrees")
    p.add_argument("--max-shift", type=float, default=0.10, help="fraction of each dimension")
    p.add_argument("--max-zoom", type=float, default=0.10, help="zoom range fraction")
    p.add_argument("--hflip-prob", type=float, default=0.5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model on one split")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report-out", required=True)
    p.add_argument("--split", choices=dataset.SPLITS, default="test")
    p.add_argument("--roc-out", help="optional ROC curve CSV (fpr,tpr)")
    p.add_argument("--size", type=_pow2, default=DEFAULT_SIZE)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("infer", help="classify one image")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--size", type=_pow2, default=DEFAULT_SIZE)
    p.set_defaults(func=cmd_infer)

    return parser


def _read_config(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SpecforError(f"{path}:{lineno}: expected key=value, got {line!r}")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _apply_defaults(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Fold SPECFOR_SEED and any --config file into parser defaults.

    Flags always win because explicit arguments override defaults.
    """
    defaults: dict[str, str] = {}
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        defaults["seed"] = env_seed
    config_path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif arg.startswith("--config="):
            config_path = arg.split("=", 1)[1]
    if config_path:
        defaults.update(_read_config(config_path))
    if not defaults:
        return
    # find every subparser action and push typed defaults into each
    subparsers = [
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    ]
    parsers = [parser] + [sp for a in subparsers for sp in a.choices.values()]
    known = set()
    for target in parsers:
        for action in target._actions:
            if action.dest in ("help", "command", "func"):
                continue
            known.add(action.dest)
            if action.dest not in defaults:
                continue
            raw = defaults[action.dest]
            if action.type is not None:
                value = action.type(raw)
            elif isinstance(action.const, bool) or isinstance(action.default, bool):
                value = raw.lower() in ("1", "true", "yes", "on")
            else:
                value = raw
            target.set_defaults(**{action.dest: value})
    unknown = set(defaults) - known
    if unknown:
        raise SpecforError(f"unknown config keys: {sorted(unknown)}")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_defaults(parser, argv)
        args = parser.parse_args(argv)
        if args.seed is None:
            args.seed = 0
        if args.command == "transform" and bool(args.manifest) == bool(args.image):
            parser.error("transform needs exactly one of --manifest or --image")
        outputs = _Outputs()
        try:
            args.func(args, outputs)
        except (SpecforError, OSError, ValueError) as exc:
            outputs.discard_all()
            print(f"error: {args.command}: {exc}", file=sys.stderr)
            return 1
    except SpecforError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
