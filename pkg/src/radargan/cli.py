"""Command-line entry point wiring the pipeline stages together.

Subcommands: ``dataset generate``, ``gan train``, ``gan generate``,
``eval rank``, ``eval spectrogram``, ``serve``. Every run writes a
reproducibility stamp (resolved parameters plus their hash) beside its
outputs; identical configurations and seeds reproduce byte-identical
numerical artifacts. Desk-scale defaults apply everywhere; ``--paper-scale``
(alias ``--full-scale`` on dataset generation) switches to the full-size
record length, sample counts, and epoch counts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import dataset as dataset_mod
from . import evaluation, gan, nn, plots, serve
from .errors import (ConfigError, DivergenceError, FormatError, RadarGanError,
                     TrainingDivergedError, ValidationError)
from .fdtd import ClassLabel

log = logging.getLogger("radargan")

CLASS_NAMES = {"no_object": ClassLabel.NO_OBJECT,
               "large_object": ClassLabel.LARGE_OBJECT,
               "small_object": ClassLabel.SMALL_OBJECT}

DESK_EPOCHS = 100
PAPER_EPOCHS = 400
DESK_RANK_N = 200
PAPER_RANK_N = 3000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: config: {message}", file=sys.stderr)
        raise SystemExit(2)


def write_stamp(out_dir, command: str, params: dict) -> None:
    """Reproducibility stamp: resolved parameters and their hash, no clocks."""
    canonical = json.dumps(params, sort_keys=True)
    stamp = {"command": command, "params": params,
             "config_sha256": hashlib.sha256(canonical.encode()).hexdigest()}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_stamp.json", "w", encoding="utf-8") as fh:
        json.dump(stamp, fh, indent=2)
        fh.write("\n")


def _require_path(path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

def cmd_dataset_generate(args) -> int:
    sim_cfg = config_mod.load_sim_config(args.config, paper_scale=args.paper_scale)
    counts = (dataset_mod.PAPER_COUNTS if args.paper_scale else dataset_mod.DESK_COUNTS)
    if args.counts:
        try:
            counts = tuple(int(c) for c in args.counts.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --counts {args.counts!r}: {exc}") from exc
    spec = dataset_mod.DatasetSpec(counts=counts, global_seed=args.seed, sim_cfg=sim_cfg)

    started = time.time()

    def progress(done, total):
        if done % 50 == 0 or done == total:
            log.info("simulated %d/%d traces (%.1fs)", done, total, time.time() - started)

    ds = dataset_mod.generate_dataset(spec, workers=args.workers, progress=progress)
    dataset_mod.save_dataset(ds, args.out)
    write_stamp(args.out, "dataset generate",
                {"counts": list(counts), "seed": args.seed,
                 "sim": config_mod._as_dict(sim_cfg)})
    log.info("wrote %d traces to %s (normalization %.6g)", ds.traces.shape[0],
             args.out, ds.normalization)
    return 0


# ---------------------------------------------------------------------------
# gan
# ---------------------------------------------------------------------------

def _gan_config(ds: dataset_mod.Dataset, label: ClassLabel, args) -> gan.GanConfig:
    epochs = args.epochs or (PAPER_EPOCHS if args.paper_scale else DESK_EPOCHS)
    trace_len = ds.traces.shape[1]
    batch = args.batch_size or gan.default_batch_size(label)
    return gan.GanConfig(
        trace_len=trace_len, batch_size=batch,
        stage1=gan.StageConfig("mse", 1e-3, epochs),
        stage2=gan.StageConfig("bce", 1e-4, epochs))


def _write_losses(out_dir: Path, stage: int, history) -> None:
    rows = np.array([[s.epoch, s.d_loss, s.g_loss] for s in history])
    plots.write_csv(out_dir / f"losses_stage{stage}.csv", rows,
                    header="epoch,d_loss,g_loss")


def cmd_gan_train(args) -> int:
    ds = dataset_mod.load_dataset(_require_path(args.dataset, "dataset"))
    label = CLASS_NAMES[args.class_name]
    traces = ds.class_traces(label, normalized=True)
    if traces.shape[0] == 0:
        raise ValidationError(f"dataset holds no {args.class_name} traces")
    cfg = _gan_config(ds, label, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    if args.stage == 1:
        bundle = gan.new_bundle(label, cfg, rng)
    else:
        if args.init_ckpt:
            init_path = Path(args.init_ckpt)
        elif args.stage1_dir:
            stats = evaluation.ensemble_stats(traces)
            n_rank = args.select_n or (PAPER_RANK_N if args.paper_scale else DESK_RANK_N)
            init_path = evaluation.select_best_checkpoint(
                _require_path(args.stage1_dir, "stage-1 checkpoint dir"), stats,
                n_gen=n_rank, seed=args.seed)
            log.info("stage 1 handoff: selected %s", init_path.name)
        else:
            raise ConfigError("stage 2 needs --stage1-dir (auto-select) or --init-ckpt")
        generator, meta = nn.load_network(init_path)
        if meta.get("trace_len") != cfg.trace_len:
            raise ValidationError(
                f"checkpoint trace_len {meta.get('trace_len')} != dataset {cfg.trace_len}")
        bundle = gan.new_bundle(label, cfg, rng)
        bundle.generator = generator
        gan.reset_discriminator(bundle, rng)

    started = time.time()

    def progress(stats):
        if stats.epoch % 10 == 0 or stats.epoch == 1:
            log.info("stage %d epoch %d: d=%.4f g=%.4f (%.0fs)", args.stage,
                     stats.epoch, stats.d_loss, stats.g_loss, time.time() - started)

    result = gan.train_stage(bundle, traces, args.stage, rng, ckpt_dir=out_dir,
                             norm_const=ds.normalization, dt_record=ds.dt_record,
                             progress=progress)
    _write_losses(out_dir, args.stage, result.history)
    write_stamp(out_dir, "gan train",
                {"class": args.class_name, "stage": args.stage, "seed": args.seed,
                 "epochs": cfg.stage(args.stage).epochs, "batch_size": cfg.batch_size,
                 "trace_len": cfg.trace_len, "dataset": str(args.dataset)})
    log.info("stage %d done: %d checkpoints in %s", args.stage,
             len(result.checkpoint_paths), out_dir)
    return 0


def cmd_gan_generate(args) -> int:
    generator, meta = nn.load_network(_require_path(args.ckpt, "checkpoint"))
    rng = np.random.default_rng(args.seed)
    samples = gan.generate_samples(generator, args.n, rng)
    dt_record = float(meta.get("dt_record", 0.0))
    if args.denormalize:
        samples = samples * float(meta.get("norm_const", 1.0))
    dataset_mod.save_traces(args.out, samples, dt_record)
    write_stamp(Path(args.out).parent, "gan generate",
                {"ckpt": str(args.ckpt), "n": args.n, "seed": args.seed,
                 "denormalize": bool(args.denormalize)})
    log.info("wrote %d generated traces to %s", args.n, args.out)
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval_rank(args) -> int:
    ds = dataset_mod.load_dataset(_require_path(args.dataset, "dataset"))
    ckpt_dir = _require_path(args.ckpt_dir, "checkpoint dir")
    paths = sorted(ckpt_dir.glob("*.ckpt"))
    if not paths:
        raise ValidationError(f"{ckpt_dir}: no checkpoints found")
    if args.class_name:
        traces = ds.class_traces(CLASS_NAMES[args.class_name], normalized=True)
    else:
        traces = ds.normalized()
    stats = evaluation.ensemble_stats(traces)
    scores = evaluation.rank_checkpoints(paths, stats, n_gen=args.n, seed=args.seed)
    for rank, score in enumerate(scores, 1):
        print(f"{rank:3d}  {score.mse:.6e}  {score.checkpoint_id}")
    if args.out:
        rows = [[i + 1, s.mse] for i, s in enumerate(scores)]
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("rank,variance_mse,checkpoint\n")
            for (rank, mse), score in zip(rows, scores):
                fh.write(f"{rank},{mse!r},{score.checkpoint_id}\n")
        write_stamp(Path(args.out).parent, "eval rank",
                    {"ckpt_dir": str(args.ckpt_dir), "dataset": str(args.dataset),
                     "n": args.n, "seed": args.seed})
    return 0


def cmd_eval_spectrogram(args) -> int:
    traces, dt_record = dataset_mod.load_traces(_require_path(args.infile, "trace file"))
    if not 0 <= args.index < traces.shape[0]:
        raise ValidationError(f"index {args.index} outside 0..{traces.shape[0] - 1}")
    spec = evaluation.spectrogram(traces[args.index], dt_record or 1.0)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = (f"spectrogram window={spec.window_len} overlap={spec.overlap} "
              f"window_fn={spec.window_name} dt_record={spec.dt_record!r}; "
              f"rows=frames cols=frequency_bins")
    plots.write_csv(out.with_suffix(".csv"), spec.magnitude, header=header)
    plots.write_heatmap_svg(out.with_suffix(".svg"), spec.magnitude,
                            title=f"trace {args.index}")
    log.info("wrote %s and %s (%d frames x %d bins)", out.with_suffix('.csv'),
             out.with_suffix('.svg'), *spec.magnitude.shape)
    return 0


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def cmd_serve(args) -> int:
    generator, meta = nn.load_network(_require_path(args.ckpt, "checkpoint"))
    ds = dataset_mod.load_dataset(_require_path(args.dataset, "dataset"))
    service = serve.BlindTestService(generator, ds,
                                     checkpoint_id=Path(args.ckpt).name,
                                     default_pairs=args.pairs, base_seed=args.seed,
                                     log_path=args.log)
    server = serve.make_server(service, port=args.port, ui_dir=args.ui_dir,
                               host=args.host)
    print(f"blind-test service on http://{server.server_address[0]}:"
          f"{server.server_address[1]}/ (ctrl-c to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# ---------------------------------------------------------------------------
# Parser assembly and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radargan",
                     description="UWB radar trace simulation and GAN pipeline")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ds = sub.add_parser("dataset", help="dataset generation").add_subparsers(
        dest="subcommand", required=True)
    p = p_ds.add_parser("generate", help="simulate a labeled trace dataset")
    p.add_argument("--config", help="key=value solver config file")
    p.add_argument("--out", required=True)
    p.add_argument("--counts", help="no_object,large,small (default scale preset)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-scale", "--full-scale", action="store_true",
                   dest="paper_scale")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_dataset_generate)

    p_gan = sub.add_parser("gan", help="train or sample generators").add_subparsers(
        dest="subcommand", required=True)
    p = p_gan.add_parser("train", help="run one training stage for one class")
    p.add_argument("--class", dest="class_name", required=True, choices=CLASS_NAMES)
    p.add_argument("--dataset", required=True)
    p.add_argument("--stage", type=int, required=True, choices=(1, 2))
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-scale", action="store_true", dest="paper_scale")
    p.add_argument("--stage1-dir", help="stage-1 checkpoints for automatic handoff")
    p.add_argument("--init-ckpt", help="manual stage-2 generator initialization")
    p.add_argument("--select-n", type=int, default=None,
                   help="samples per checkpoint for the handoff ranking")
    p.set_defaults(func=cmd_gan_train)
    p = p_gan.add_parser("generate", help="sample traces from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--denormalize", action="store_true")
    p.set_defaults(func=cmd_gan_generate)

    p_eval = sub.add_parser("eval", help="model scoring and plots").add_subparsers(
        dest="subcommand", required=True)
    p = p_eval.add_parser("rank", help="rank checkpoints by variance-MSE")
    p.add_argument("--ckpt-dir", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--class", dest="class_name", choices=CLASS_NAMES, default=None)
    p.add_argument("-n", type=int, default=PAPER_RANK_N)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_eval_rank)
    p = p_eval.add_parser("spectrogram", help="CSV + SVG spectrogram of one trace")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_eval_spectrogram)

    p = sub.add_parser("serve", help="host the blind-test service")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", default=None)
    p.add_argument("--log", default=None, help="append-only session log (JSONL)")
    p.add_argument("--pairs", type=int, default=serve.DEFAULT_PAIRS_PER_SESSION)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)
    return parser


def parse_and_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"error: format: {exc}", file=sys.stderr)
        return 3
    except (DivergenceError, TrainingDivergedError) as exc:
        print(f"error: divergence: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return 3
    except RadarGanError as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
