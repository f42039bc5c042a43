"""``lanesig`` command-line front end.

Every command reads its inputs from files, writes its outputs to files, and
records its effective configuration as ``*.run.json`` beside them.  Feeding
that record back through ``--config`` repeats the run.  Diagnostics go to
stderr.  Exit codes: 0 success, 1 check failed, 2 invalid input, 3 training
diverged.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lanesig import __version__
from lanesig import eval as ev
from lanesig import io
from lanesig.augment import MANIFEST_FORMAT, AugmentPlan, iter_augmented, read_manifest, write_manifest
from lanesig.desk import DeskConfig, lane_surfaces, split_trips, trip_drives
from lanesig.drive import Drive
from lanesig.nnet import checkpoint
from lanesig.nnet.checkpoint import CheckpointError
from lanesig.nnet.gradcheck import grad_check, reference_problem
from lanesig.nnet.model import forward, init_model, input_dim_for, truncate
from lanesig.nnet.train import TrainConfig, TrainingDiverged, cell_dataset, train
from lanesig.pipeline import SegmentationConfig, preprocess, random_subdrive_sample, stitch_lane_changes
from lanesig.roadsim import Roughness

log = logging.getLogger("lanesig")

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2, 3
RUN_FORMAT = "lanesig-run v1"


class UsageError(ValueError):
    """Flag values that violate a module invariant."""


def count(text) -> int:
    """Sample counts with optional K/M suffix: ``50K`` is 50000."""
    if isinstance(text, (int, np.integer)):
        return int(text)
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*([kKmM]?)\s*", str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"not a sample count: {text!r}")
    value = float(m.group(1)) * {"": 1, "k": 1_000, "m": 1_000_000}[m.group(2).lower()]
    if value != int(value):
        raise argparse.ArgumentTypeError(f"{text!r} is not a whole number of samples")
    return int(value)


@dataclass
class RunConfig:
    """Effective parameters of one command, written beside its outputs."""

    command: str
    params: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        doc = {"format": RUN_FORMAT, "command": self.command, "version": self.version,
               "config": self.params}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def write(self, path) -> Path:
        Path(path).write_text(self.to_json())
        return Path(path)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        skip = {"func", "command", "config", "verbose"}
        params = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in skip}
        return cls(args.command, params)


def load_config(path, command: str) -> dict:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    if doc.get("format") == RUN_FORMAT:
        if doc.get("command") != command:
            raise UsageError(f"{path} records a '{doc.get('command')}' run, not '{command}'")
        doc = doc["config"]
    elif command in doc and isinstance(doc[command], dict):
        doc = doc[command]
    return {k.replace("-", "_"): v for k, v in doc.items()}


# ---------------------------------------------------------------- data sets

def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _drive_path(out: Path, drive: Drive, fmt: str) -> Path:
    name = re.sub(r"[^A-Za-z0-9_.+-]", "_", drive.drive_id)
    return out / f"{name}.{'bin' if fmt == 'bin' else 'csv'}"


def save_drives(out: Path, drives, splits, fmt: str, plan=None, extra=None) -> Path:
    paths = []
    for drive in drives:
        p = _drive_path(out, drive, fmt)
        io.write_drive(drive, p)
        paths.append(p.name)
    manifest = out / "manifest.json"
    write_manifest(manifest, drives, plan=plan, paths=paths, splits=splits, extra=extra)
    return manifest


def load_drives(manifest, splits=None) -> list[tuple[Drive, str | None]]:
    """Drives listed in a manifest with their split tags, optionally filtered."""
    manifest = Path(manifest)
    try:
        doc = read_manifest(manifest)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    out = []
    for entry in doc["drives"]:
        split = entry.get("split")
        if splits is not None and split not in splits:
            continue
        drive = io.read_drive(manifest.parent / entry["path"], drive_id=entry["drive_id"])
        drive.origin_id = entry["origin_id"]
        drive.seed = entry["seed"]
        drive.provenance = tuple(entry["provenance"])
        if [list(s) for s in drive.segments] != entry["segments"]:
            raise UsageError(f"{entry['path']}: segments disagree with the manifest")
        out.append((drive, split))
    return out


def _is_preprocessed(drive: Drive) -> bool:
    return any(step.get("kind") == "preprocessed" for step in drive.provenance)


def _prepare(drives, mode: str) -> list[Drive]:
    if mode == "always":
        return [preprocess(d) for d in drives]
    if mode == "never":
        return list(drives)
    return [d if _is_preprocessed(d) else preprocess(d) for d in drives]


def _segmentation(args) -> SegmentationConfig:
    try:
        return SegmentationConfig(ell=args.ell, s=args.stride, d=args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------- commands

def cmd_gen(args) -> int:
    if args.lanes < 2:
        raise UsageError("--lanes must be >= 2")
    if args.drives_per_lane < args.test_trips + args.val_trips + 1:
        raise UsageError("--drives-per-lane must leave at least one training trip")
    cfg = DeskConfig(n_lanes=args.lanes, length_m=args.length_m, roughness=Roughness.parse(args.road_class).value,
                     drives_per_lane=args.drives_per_lane, fs=args.fs, v_mean=args.v_mean,
                     noise_std=args.noise_std, test_trips=args.test_trips, val_trips=args.val_trips,
                     seed=args.seed)
    out = _out_dir(args.out)
    surfaces = lane_surfaces(cfg)
    for s in surfaces:
        np.savez(out / f"surface-l{s.lane_id}.npz", elevation=s.elevation,
                 anomaly_positions=s.anomaly_positions, length_m=s.length_m,
                 resolution_m=s.resolution_m, anomaly_rate=s.anomaly_rate, seed=s.seed)
    tag = {t: name for name, trips in split_trips(cfg).items() for t in trips}
    drives, splits = [], []
    for trip in range(cfg.drives_per_lane):
        for d in trip_drives(cfg, surfaces, trip):
            drives.append(d)
            splits.append(tag[trip])
    save_drives(out, drives, splits, args.format)
    RunConfig.from_args(args).write(out / "gen.run.json")
    log.info("wrote %d drives over %d lanes to %s", len(drives), cfg.n_lanes, out)
    return EXIT_OK


def cmd_augment(args) -> int:
    lo, hi = args.warp_sections
    try:
        plan = AugmentPlan(n_scale=args.n_scale, scale_sigma_max_frac=args.scale_sigma,
                           n_jitter=args.n_jitter, jitter_sigma_max_frac=args.jitter_sigma,
                           n_warp=args.n_warp, warp_sections_range=(lo, hi),
                           warp_speed_frac=args.warp_speed, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    targets = set(args.splits.split(","))
    drives, splits = [], []
    for drive, split in load_drives(args.data):
        base = _prepare([drive], args.preprocess)[0]
        variants = iter_augmented([base], plan) if split in targets else [base]
        for v in variants:
            drives.append(v)
            splits.append(split)
    out = _out_dir(args.out)
    save_drives(out, drives, splits, args.format, plan=plan)
    RunConfig.from_args(args).write(out / "augment.run.json")
    log.info("wrote %d drives to %s", len(drives), out)
    return EXIT_OK


def cmd_stitch(args) -> int:
    if args.alpha < 1:
        raise UsageError("--alpha must be >= 1")
    groups: dict[str, list[tuple[Drive, str | None]]] = defaultdict(list)
    for drive, split in load_drives(args.data):
        if drive.lane is not None:
            groups[drive.origin_id].append((drive, split))
    drives, splits = [], []
    for origin, members in sorted(groups.items()):
        members.sort(key=lambda p: p[0].lane)
        lane_drives = [d for d, _ in members]
        if len({d.lane for d in lane_drives}) < 2:
            log.warning("origin %s has a single lane; skipped", origin)
            continue
        starts = [d.lane for d in lane_drives] if args.start_lane is None else [args.start_lane]
        for start in starts:
            try:
                st = stitch_lane_changes(lane_drives, args.alpha, start)
            except ValueError as exc:
                raise UsageError(f"origin {origin}: {exc}") from None
            st.origin_id = origin
            drives.append(st)
            splits.append(members[0][1])
    if not drives:
        raise UsageError("no origin has drives on two or more lanes")
    out = _out_dir(args.out)
    save_drives(out, drives, None if None in splits else splits, args.format)
    RunConfig.from_args(args).write(out / "stitch.run.json")
    log.info("wrote %d stitched drives to %s", len(drives), out)
    return EXIT_OK


def cmd_train(args) -> int:
    seg = _segmentation(args)
    try:
        input_dim_for(seg.d, args.pool_kernel, args.pool_stride)
        config = TrainConfig(learning_rate=args.lr, batch_size=args.batch, max_epochs=args.epochs,
                             loss_mode=args.loss, seed=args.seed, precision=args.precision,
                             patience=args.patience, clip_norm=args.clip or None)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    entries = load_drives(args.data)
    n_lanes = args.lanes or max(2, 1 + max(l for d, _ in entries for l in d.lanes))
    tagged = {s for _, s in entries}
    train_drives = [d for d, s in entries if s == "train" or (s is None and tagged == {None})]
    val_drives = [d for d, s in entries if s == "val"]
    if not train_drives and args.epochs > 0:
        raise UsageError(f"{args.data} has no training drives")
    model = init_model(d=seg.d, n_cells=seg.n_cells, hidden_dim=args.hidden, n_lanes=n_lanes,
                       pool_kernel=args.pool_kernel, pool_stride=args.pool_stride, seed=args.seed,
                       dtype=config.dtype, shared_head=not args.per_cell_head, loss_mode=config.loss_mode)
    history = []
    if args.epochs > 0:
        def cells(drives):
            return cell_dataset(_prepare(drives, args.preprocess), seg, args.pool_kernel,
                                args.pool_stride, args.label_policy, config.dtype)
        train_set = cells(train_drives)
        val_set = cells(val_drives) if val_drives else None
        log.info("training on %d sub-drives (%d validation)", len(train_set),
                 0 if val_set is None else len(val_set))
        model, history = train(model, train_set, val_set, config, early_stop=not args.no_early_stop)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    size = checkpoint.save(model, out)
    with open(out.with_suffix(".history.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, ["epoch", "train_loss", "train_acc", "val_acc", "clipped_steps",
                                "clip_norm", "seconds"])
        w.writeheader()
        w.writerows(history)
    RunConfig.from_args(args).write(out.with_suffix(".run.json"))
    log.info("checkpoint %s: %d bytes, %d parameters", out, size, model.n_parameters())
    return EXIT_OK


def _eval_cells(drives, model, args):
    seg = SegmentationConfig(ell=model.subdrive_length, s=args.stride, d=model.cell_length)
    return cell_dataset(drives, seg, model.pool_kernel, model.pool_stride, args.label_policy, model.dtype)


def cmd_eval(args) -> int:
    model = checkpoint.load(args.model)
    if args.precision == "float64":
        model = model.astype(np.float64)
    drives = _prepare([d for d, _ in load_drives(args.data, splits={args.split})], args.preprocess)
    if not drives:
        raise UsageError(f"no '{args.split}' drives in {args.data}")
    single = [d for d in drives if d.lane is not None]
    out = _out_dir(args.out)
    if args.mode == "matrix":
        if not single:
            raise UsageError("matrix mode needs single-lane drives")
        report = ev.accuracy_matrix((model, _eval_cells(single, model, args)), batch_size=args.batch)
        ev.write_matrix_csv(report, out / "matrix.csv")
    elif args.mode == "windows":
        stitched = [d for d in drives if d.lane is None]
        if not stitched:
            raise UsageError("windows mode needs drives with lane changes")
        report = ev.window_accuracy(model, stitched)
        ev.write_json(report, out / "windows.json")
    elif args.mode == "roc":
        if not single:
            raise UsageError("roc mode needs single-lane drives")
        report = ev.roc_f1(model, _eval_cells(single, model, args))
        ev.write_json(report, out / "roc.json")
    else:
        report = _random_subdrive_report(model, drives, args)
        ev.write_json(report, out / "random_subdrive.json")
    if args.plot:
        if args.mode == "random-subdrive":
            log.warning("--plot has nothing to draw for random-subdrive mode")
        else:
            ev.write_gnuplot(report, out / f"{args.mode}.dat")
    RunConfig.from_args(args).write(out / f"eval-{args.mode}.run.json")
    return EXIT_OK


def _random_subdrive_report(model, drives, args) -> dict:
    seeds = np.random.SeedSequence(args.seed).generate_state(len(drives))
    ell, d = model.subdrive_length, model.cell_length
    rows = []
    for drive, seed in zip(drives, seeds):
        if len(drive) < ell:
            log.warning("drive %s shorter than ell=%d; skipped", drive.drive_id, ell)
            continue
        sub = random_subdrive_sample(drive, ell, int(seed), d=d, policy=args.label_policy)
        pred = forward(model, sub.samples[None].astype(model.dtype)).predictions[0]
        rows.append({"drive_id": drive.drive_id, "offset": sub.start_offset,
                     "targets": list(sub.cell_targets), "predicted": pred.tolist()})
    if not rows:
        raise UsageError(f"every drive is shorter than ell={ell}")
    hits = np.array([np.equal(r["targets"], r["predicted"]) for r in rows])
    return {"ell": ell, "d": d, "n": model.n_cells, "count": len(rows),
            "final_accuracy": float(hits[:, -1].mean()), "cell_accuracy": hits.mean(axis=0).tolist(),
            "subdrives": rows}


def cmd_truncate(args) -> int:
    model = checkpoint.load(args.model)
    try:
        short = truncate(model, args.cells)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    size = checkpoint.save(short, out)
    RunConfig.from_args(args).write(out.with_suffix(".run.json"))
    log.info("%d-cell model (ell=%d) written to %s, %d bytes", args.cells, short.subdrive_length, out, size)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    model, X, y = reference_problem(args.seed, hidden_dim=args.hidden, n_cells=args.cells,
                                    input_dim=args.input_dim, n_lanes=args.lanes, batch=args.batch)
    err = grad_check(model, X, y, args.loss, args.epsilon)
    ok = err < args.tolerance
    print(f"max relative error {err:.3e} ({'pass' if ok else 'FAIL'}, tolerance {args.tolerance:g})")
    if args.out:
        Path(args.out).write_text(json.dumps({"max_relative_error": err, "pass": ok,
                                              "config": RunConfig.from_args(args).params}, indent=1) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ingest(args) -> int:
    drives = []
    for path in args.files:
        try:
            d = io.ingest_csv(path, fs_hz=args.fs, lane=args.lane, column=args.column,
                              delimiter=args.delimiter, seed=args.seed)
        except io.DriveFormatError as exc:
            raise UsageError(str(exc)) from None
        d.origin_id = d.drive_id
        drives.append(d)
    out = _out_dir(args.out)
    save_drives(out, drives, [args.split] * len(drives) if args.split else None, args.format)
    RunConfig.from_args(args).write(out / "ingest.run.json")
    log.info("ingested %d drives into %s", len(drives), out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _version_text() -> str:
    return (f"lanesig {__version__}\n"
            f"drive csv: {io.CSV_VERSION}\n"
            f"drive binary: {io.BINARY_MAGIC.decode()}\n"
            f"checkpoint: {checkpoint.MAGIC.decode()} version {checkpoint.VERSION}\n"
            f"manifest: {MANIFEST_FORMAT}\n"
            f"run config: {RUN_FORMAT}")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON defaults; explicit flags win")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision", choices=["float32", "float64"], default="float32")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lanesig", description="Lane classification from road vibration.",
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=_version_text())
    sub = parser.add_subparsers(dest="command", required=True)
    cmds = {}

    def command(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        cmds[name] = p
        return p

    def drive_output(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", choices=["csv", "bin"], default="csv")

    def preprocessing(p):
        p.add_argument("--preprocess", choices=["auto", "always", "never"], default="auto",
                       help="z-score + Hampel filter; auto skips drives already processed")

    p = command("gen", cmd_gen, "simulate a multi-lane road and drives over it")
    p.add_argument("--lanes", type=int, default=2)
    p.add_argument("--length-m", type=float, default=500.0)
    p.add_argument("--class", dest="road_class", default="Red", help="Green, Yellow or Red")
    p.add_argument("--drives-per-lane", type=int, default=10)
    p.add_argument("--fs", type=float, default=1000.0)
    p.add_argument("--v-mean", type=float, default=12.0)
    p.add_argument("--noise-std", type=float, default=5.0)
    p.add_argument("--test-trips", type=int, default=2)
    p.add_argument("--val-trips", type=int, default=1)
    drive_output(p)

    p = command("augment", cmd_augment, "add scaled, jittered and warped variants")
    p.add_argument("--data", required=True, help="input manifest")
    p.add_argument("--n-scale", type=int, default=10)
    p.add_argument("--scale-sigma", type=float, default=0.7)
    p.add_argument("--n-jitter", type=int, default=10)
    p.add_argument("--jitter-sigma", type=float, default=0.1)
    p.add_argument("--n-warp", type=int, default=5)
    p.add_argument("--warp-sections", type=int, nargs=2, default=[3, 8], metavar=("LO", "HI"))
    p.add_argument("--warp-speed", type=float, default=0.2)
    p.add_argument("--splits", default="train,val", help="comma-separated splits to augment")
    preprocessing(p)
    drive_output(p)

    p = command("stitch", cmd_stitch, "build lane-change drives from aligned lane drives")
    p.add_argument("--data", required=True, help="input manifest")
    p.add_argument("--alpha", type=count, required=True, help="samples between lane switches")
    p.add_argument("--start-lane", type=int, default=None, help="default: one drive per start lane")
    drive_output(p)

    p = command("train", cmd_train, "train a model and write its checkpoint")
    p.add_argument("--data", required=True, help="manifest with train (and val) splits")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--ell", type=count, default=20_000)
    p.add_argument("--stride", type=count, default=1_000)
    p.add_argument("--d", type=count, default=4_000)
    p.add_argument("--pool-kernel", type=count, default=40)
    p.add_argument("--pool-stride", type=count, default=20)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--lanes", type=int, default=None, help="default: highest lane id + 1")
    p.add_argument("--loss", choices=["weighted", "uniform", "last-cell"], default="weighted")
    p.add_argument("--label-policy", choices=["mf", "lo"], default="lo")
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--batch", type=int, default=512)
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--patience", type=int, default=1)
    p.add_argument("--no-early-stop", action="store_true")
    p.add_argument("--clip", type=float, default=5.0, help="global gradient norm limit, 0 disables")
    p.add_argument("--per-cell-head", action="store_true")
    preprocessing(p)

    p = command("eval", cmd_eval, "accuracy matrix, window, ROC or random sub-drive reports")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--mode", choices=["matrix", "windows", "roc", "random-subdrive"], default="matrix")
    p.add_argument("--stride", type=count, default=1_000, help="sub-drive stride for test sets")
    p.add_argument("--label-policy", choices=["mf", "lo"], default="lo")
    p.add_argument("--batch", type=int, default=512)
    p.add_argument("--plot", action="store_true", help="also write gnuplot data")
    p.add_argument("--out", required=True, help="report directory")
    preprocessing(p)

    p = command("truncate", cmd_truncate, "cut a model down to its first cells")
    p.add_argument("--model", required=True)
    p.add_argument("--cells", type=int, required=True)
    p.add_argument("--out", required=True)

    p = command("gradcheck", cmd_gradcheck, "finite-difference check of the gradients")
    p.add_argument("--hidden", type=int, default=4)
    p.add_argument("--cells", type=int, default=3)
    p.add_argument("--input-dim", type=int, default=5)
    p.add_argument("--lanes", type=int, default=2)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--loss", choices=["weighted", "uniform", "last-cell"], default="weighted")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--out", default=None, help="optional JSON result")

    p = command("ingest", cmd_ingest, "validate external CSV drives and convert them")
    p.add_argument("files", nargs="+")
    p.add_argument("--fs", type=float, default=None, help="sample rate for plain CSV files")
    p.add_argument("--lane", type=int, default=None, help="lane id for plain CSV files")
    p.add_argument("--column", type=int, default=0)
    p.add_argument("--delimiter", default=None)
    p.add_argument("--split", choices=["train", "val", "test"], default=None)
    drive_output(p)
    return parser, cmds


def parse_args(argv=None) -> argparse.Namespace:
    """Parse flags on top of ``--config`` values on top of built-in defaults."""
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, cmds = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    command = next((a for a in rest if a in cmds), None)
    if known.config and command:
        cfg = load_config(known.config, command)
        sub = cmds[command]
        dests = {a.dest: a for a in sub._actions}
        unknown = sorted(set(cfg) - set(dests))
        if unknown:
            raise UsageError(f"{known.config}: unknown settings {', '.join(unknown)}")
        for key in cfg:
            dests[key].required = False
        sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (ValueError, OSError) as exc:
        print(f"lanesig: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="lanesig: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, CheckpointError, io.DriveFormatError, OSError) as exc:
        print(f"lanesig {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TrainingDiverged, FloatingPointError) as exc:
        print(f"lanesig {args.command}: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        print(f"lanesig {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
