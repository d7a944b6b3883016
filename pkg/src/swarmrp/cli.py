"""Command-line driver: ``swarmrp {generate,train,detect,evaluate}``.

Settings come from built-in defaults, then ``--config FILE``, then flags.
Every text output starts with the effective configuration as ``#`` comments.
"""

import argparse
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import cvnn, datagen, metrics
from .config import ConfigError, RunConfig
from .mfcfar import mf_cfar_detect_full
from .signal import make_lfm_chirp

THREADS_ENV = "SWARMRP_THREADS"

_ALIASES = {
    "batch_size": ["--batch"],
    "lr_halving_period": ["--lr-half-every"],
    "positive_weight": ["--pos-weight"],
    "hidden_width": ["--hidden"],
}


class CliError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    for name in RunConfig.field_names():
        flags = ["--" + name.replace("_", "-")] + _ALIASES.get(name, [])
        common.add_argument(*flags, dest=name, default=None, metavar="VALUE")

    parser = argparse.ArgumentParser(prog="swarmrp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="simulate a dataset and write an RPDS file")
    sub.add_parser("train", parents=[common], help="train the detector network on a dataset")
    sub.add_parser("detect", parents=[common], help="per-bin CSV of both detectors for one profile")
    sub.add_parser("evaluate", parents=[common], help="subset Pd/Pfa report over a dataset")
    sub.add_parser("show-config", parents=[common], help="print the effective configuration")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for name in RunConfig.field_names():
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, RunConfig.convert(name, value))
    if cfg.threads is None and os.environ.get(THREADS_ENV):
        cfg.threads = int(os.environ[THREADS_ENV])
    return cfg


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise CliError("missing required setting(s): " + ", ".join(
            "--" + n.replace("_", "-") for n in missing))


def _header(cfg: RunConfig, command: str) -> list[str]:
    return [f"swarmrp {command}"] + cfg.to_lines()


def _write_text(path: str | None, header: list[str], body: str) -> None:
    text = "".join(f"# {line}\n" for line in header) + body
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_generate(cfg: RunConfig) -> None:
    _require(cfg, "dataset")
    spec = cfg.dataset_spec()
    ds = datagen.generate_dataset(spec)
    datagen.write_dataset(cfg.dataset, ds)
    counts = ds.meta["counts"]
    print(f"wrote {len(ds)} profiles to {cfg.dataset}: " +
          ", ".join(f"{k}={v}" for k, v in counts.items()))


def cmd_train(cfg: RunConfig) -> None:
    _require(cfg, "dataset", "model")
    train_set = datagen.read_dataset(cfg.dataset)
    valid_set = datagen.read_dataset(cfg.valid_dataset) if cfg.valid_dataset else None
    params, history = cvnn.train(train_set, valid_set, cfg.train_config(),
                                 log=lambda s: print(s, file=sys.stderr))
    cvnn.save_checkpoint(cfg.model, params)
    history_path = cfg.history or str(cfg.model) + ".history.csv"
    history.write_csv(history_path, _header(cfg, "train"))
    print(f"wrote {cfg.model} and {history_path} ({len(history.epoch)} epochs)")


def _models(cfg: RunConfig) -> dict[str, cvnn.NetworkParams]:
    if cfg.model is None:
        return {}
    paths = [p for p in cfg.model.split(",") if p]
    if len(paths) == 1:
        return {"nn": cvnn.load_checkpoint(paths[0])}
    return {f"nn:{Path(p).stem}": cvnn.load_checkpoint(p) for p in paths}


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def cmd_detect(cfg: RunConfig) -> None:
    _require(cfg, "dataset")
    ds = datagen.read_dataset(cfg.dataset)
    if not 0 <= cfg.profile_index < len(ds):
        raise CliError(f"profile index {cfg.profile_index} out of range [0, {len(ds)})")
    x = ds.samples[cfg.profile_index].astype(np.complex128)
    pulse = make_lfm_chirp(cfg.train_bandwidth_hz, cfg.duration_s, cfg.sample_rate_hz)
    mf = mf_cfar_detect_full(x, pulse, cfg.cfar_config())
    models = _models(cfg)
    nn_out = cvnn.predict(next(iter(models.values())), x) if models else None
    labels = ds.labels[cfg.profile_index]

    mf_len = ds.m - pulse.n + 1
    lines = ["bin,mf_db,cfar_threshold_db,mf_detect,nn_output,nn_detect,label"]
    with np.errstate(divide="ignore"):
        mf_db = 20 * np.log10(mf["linear"][0])
        thr_db = 20 * np.log10(mf["threshold"][0])
    for i in range(ds.m):
        has_mf = i < mf_len
        has_thr = bool(mf["valid"][0, i])
        row = [
            str(i),
            _fmt(mf_db[i]) if has_mf else "",
            _fmt(thr_db[i]) if has_thr else "",
            str(int(mf["detections"][0, i])) if has_thr else "",
            _fmt(nn_out[i]) if nn_out is not None else "",
            str(int(nn_out[i] > cfg.threshold)) if nn_out is not None else "",
            str(int(labels[i])),
        ]
        lines.append(",".join(row))
    _write_text(cfg.output, _header(cfg, "detect"), "\n".join(lines) + "\n")


def detector_outputs(cfg: RunConfig, ds: datagen.Dataset) -> dict[str, tuple[np.ndarray, np.ndarray | None]]:
    """``{name: (detections, valid_mask or None)}`` for each requested detector."""
    out = {}
    for name in cfg.detectors:
        if name == "mf":
            pulse = make_lfm_chirp(cfg.train_bandwidth_hz, cfg.duration_s, cfg.sample_rate_hz)
            full = mf_cfar_detect_full(ds.samples, pulse, cfg.cfar_config())
            out["mf+ca-cfar"] = (full["detections"], full["valid"])
        elif name == "nn":
            for label, params in _models(cfg).items():
                out[label] = (cvnn.predict(params, ds.samples, cfg.batch_size) > cfg.threshold, None)
        elif name == "oracle":
            out["oracle"] = (ds.labels.copy(), None)
        else:
            raise CliError(f"unknown detector {name!r} (choose from mf, nn, oracle)")
    return out


def evaluate(cfg: RunConfig, ds: datagen.Dataset) -> dict[str, dict[str, tuple]]:
    outputs = detector_outputs(cfg, ds)
    per_profile = {name: metrics.score_batch(det, ds, cfg.exclusion_window, valid)
                   for name, (det, valid) in outputs.items()}
    results = {}
    for row, filt in metrics.table_filters(ds).items():
        keep = np.flatnonzero(filt.mask(ds))
        results[row] = {name: metrics.aggregate(counts[i] for i in keep)
                        for name, counts in per_profile.items()}
    return results


def cmd_evaluate(cfg: RunConfig) -> None:
    _require(cfg, "dataset")
    ds = datagen.read_dataset(cfg.dataset)
    results = evaluate(cfg, ds)
    header = _header(cfg, "evaluate")
    if cfg.report is not None:
        _write_text(cfg.report, header, metrics.report_table(results, "csv"))
    print(metrics.report_table(results, "text"), end="")


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "show-config": lambda cfg: print(cfg.to_text(), end=""),
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        limits = nullcontext()
        if cfg.threads:
            from threadpoolctl import threadpool_limits
            limits = threadpool_limits(cfg.threads)
        with limits:
            COMMANDS[args.command](cfg)
    except (CliError, ConfigError, OSError, ValueError) as exc:
        print(f"swarmrp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
