"""
Command-line entry point.

    xia-motion synth --out-dir runs/synth --count 115
    xia-motion train --config exp.env --variant xia
    xia-motion eval --config exp.env
    xia-motion predict --checkpoint runs/xia/model.ckpt --sequence seq.csv --out pred.csv
    xia-motion triangulate --cameras cams.txt --observations obs.csv --out points.csv
    xia-motion report runs/xia/metrics.csv
    xia-motion plotdata runs/base/metrics.csv runs/xia/metrics.csv --out-dir figures

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric/training error.
"""

import logging
from pathlib import Path
from typing import List, Optional

import pandas as pd
import typer

from ..core import configure_logging, settings
from ..data import (
    CoupleSequence, load_dataset, load_sequences, make_split, parse_scenario, save_dataset,
    save_sequences, synthesize_dataset,
)
from ..geometry import load_cameras, normalize_couple, skeleton_for
from ..metrics import AVG, read_report_csv, render_table, write_report_csv
from ..models import VariantFactory
from ..motion import MotionSequence
from ..services import (
    GroundTruthForecaster, evaluation_service, load_model, rollout, training_service, triangulation_service,
)
from ..utils.common import AppError, ContractError, DataError, ParseError, UsageError, atomic_write, describe_error
from .experiment import ExperimentConfig, load_experiment

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, no_args_is_help=True,
                  help="Collaborative two-person motion prediction with cross-interaction attention.")


def _fail(error: Exception, context: str) -> None:
    details = describe_error(error, context)
    logger.error(details["error"])
    typer.echo(f"error: {details['error']}", err=True)
    raise typer.Exit(code=details["exit_code"])


def _dataset(config: ExperimentConfig) -> List[CoupleSequence]:
    if config.data_dir is None:
        raise UsageError("no data directory given (data_dir key or --data-dir)")
    if not config.data_dir.is_dir():
        raise DataError(f"data directory {config.data_dir} does not exist")
    return load_dataset(config.data_dir)


@app.callback()
def root(log_level: str = typer.Option(None, "--log-level", help="Logging level (default from XIA_LOG_LEVEL).")):
    configure_logging(log_level)


@app.command()
def synth(
    out_dir: Path = typer.Option(..., "--out-dir", help="Dataset directory to write."),
    seed: int = typer.Option(0, "--seed"),
    scenario: str = typer.Option("lagged-mirror", "--scenario",
                                 help="lagged-mirror | coupled-oscillator | orbit-lift"),
    count: int = typer.Option(115, "--count", help="Number of sequences (115 = five repetitions of every aerial)."),
    frames: int = typer.Option(400, "--frames", help="Frames per sequence at the source rate."),
):
    """Write synthetic couple sequences and their index."""
    try:
        try:
            scenario = parse_scenario(scenario).value
        except ContractError as e:
            raise UsageError(e.message) from None
        if count < 0:
            raise UsageError(f"--count must be non-negative, got {count}")
        sequences = synthesize_dataset(seed, scenario, count, frames)
        save_dataset(out_dir, sequences)
        typer.echo(f"wrote {len(sequences)} sequences to {out_dir}")
    except (AppError, OSError) as e:
        _fail(e, "synth")


@app.command()
def train(
    config: Optional[Path] = typer.Option(None, "--config", help="key=value experiment file."),
    data_dir: Optional[Path] = typer.Option(None, "--data-dir"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir"),
    split: Optional[str] = typer.Option(None, "--split", help="SA | CA | EA"),
    aerial: Optional[int] = typer.Option(None, "--aerial", help="Target aerial of the SA split."),
    variant: Optional[str] = typer.Option(None, "--variant", help="base | 2pcat | xia | xia-nores | xia-self"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    max_steps: Optional[int] = typer.Option(None, "--max-steps"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Train one variant on the train part of a split; writes checkpoint and loss curve."""
    try:
        experiment = load_experiment(config, data_dir=data_dir, out_dir=out_dir, split=split, aerial=aerial,
                                     variant=variant, epochs=epochs, max_steps=max_steps, seed=seed)
        model_config = experiment.to_model_config()
        train_config = experiment.to_train_config()
        split_spec = experiment.to_split()
        train_set, _ = make_split(_dataset(experiment), split_spec)
        model = VariantFactory.create(experiment.variant, model_config, seed=experiment.seed)
        result = training_service.train(model, train_set, train_config, experiment.out_dir)
        typer.echo(f"trained {model.kind.value} for {result.steps} steps; "
                   f"checkpoint {experiment.out_dir / settings.CHECKPOINT_NAME}")
    except (AppError, OSError) as e:
        _fail(e, "train")


@app.command("eval")
def evaluate(
    config: Optional[Path] = typer.Option(None, "--config"),
    checkpoint: Optional[Path] = typer.Option(None, "--checkpoint", help="Defaults to <out_dir>/model.ckpt."),
    ground_truth: bool = typer.Option(False, "--ground-truth", help="Score the true future instead of a model."),
    data_dir: Optional[Path] = typer.Option(None, "--data-dir"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir"),
    split: Optional[str] = typer.Option(None, "--split"),
    aerial: Optional[int] = typer.Option(None, "--aerial"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Evaluate on the test part of a split; writes metrics CSVs and the aerial table."""
    try:
        experiment = load_experiment(config, data_dir=data_dir, out_dir=out_dir, split=split,
                                     aerial=aerial, seed=seed)
        _, test_set = make_split(_dataset(experiment), experiment.to_split())
        if ground_truth:
            model = GroundTruthForecaster()
        else:
            path = checkpoint or experiment.out_dir / settings.CHECKPOINT_NAME
            if not path.is_file():
                raise DataError(f"checkpoint {path} does not exist")
            expected = experiment.to_model_config() if experiment.has_model_keys() else None
            model = load_model(path, expected)

        report = evaluation_service.evaluate(model, test_set, experiment.to_eval_config())
        out = experiment.out_dir
        out.mkdir(parents=True, exist_ok=True)
        metrics = report.to_frame()
        with atomic_write(out / settings.METRICS_NAME) as handle:
            write_report_csv(metrics, handle)
        with atomic_write(out / settings.JOINT_METRICS_NAME) as handle:
            write_report_csv(report.joints_frame(), handle)
        table = render_table(metrics, title=f"{report.variant} on {experiment.to_split().describe()}")
        with atomic_write(out / settings.TABLE_NAME) as handle:
            handle.write(table)
        typer.echo(table, nl=False)
    except (AppError, OSError) as e:
        _fail(e, "eval")


@app.command()
def predict(
    checkpoint: Path = typer.Option(..., "--checkpoint"),
    sequence: Path = typer.Option(..., "--sequence", help="Sequence CSV to continue."),
    out: Path = typer.Option(..., "--out"),
    seq_id: Optional[str] = typer.Option(None, "--seq-id", help="Sequence inside the file (default: first)."),
    horizon: int = typer.Option(25, "--horizon", help="Frames to predict."),
    in_len: int = typer.Option(50, "--in-len", help="Observed frames fed to the model."),
):
    """
    Roll a checkpoint forward from the last observed frames of a sequence.
    Predictions are written in the couple-normalized frame.
    """
    try:
        if not checkpoint.is_file():
            raise DataError(f"checkpoint {checkpoint} does not exist")
        model = load_model(checkpoint)
        sequences = load_sequences(sequence)
        chosen = [s for s in sequences if seq_id is None or s.seq_id == seq_id]
        if not chosen:
            raise DataError(f"{sequence} has no sequence {seq_id or ''}".rstrip())
        seq = chosen[0]
        if seq.num_frames < in_len:
            raise DataError(f"sequence {seq.seq_id} has {seq.num_frames} frames, fewer than --in-len {in_len}")
        leader, follower = normalize_couple(seq.leader.frames[-in_len:], seq.follower.frames[-in_len:],
                                            skeleton_for(seq.num_joints))
        pred_leader, pred_follower = rollout(model, leader, follower, horizon)
        predicted = CoupleSequence(
            seq_id=f"{seq.seq_id}-pred",
            leader=MotionSequence(pred_leader, seq.fps),
            follower=MotionSequence(pred_follower, seq.fps),
            aerial=seq.aerial,
            couple=seq.couple,
            rep=seq.rep,
        )
        save_sequences(out, [predicted])
        typer.echo(f"wrote {horizon} predicted frames to {out}")
    except (AppError, OSError) as e:
        _fail(e, "predict")


@app.command()
def triangulate(
    cameras: Path = typer.Option(..., "--cameras", help="Camera file, 21 values per camera."),
    observations: Path = typer.Option(..., "--observations", help="CSV point_id,cam_a,u_a,v_a,cam_b,u_b,v_b"),
    out: Path = typer.Option(..., "--out"),
):
    """Recover missing 3D points from pairs of pixel observations."""
    try:
        if not cameras.is_file():
            raise DataError(f"camera file {cameras} does not exist")
        rigs = load_cameras(cameras)
        points = triangulation_service.repair(rigs, triangulation_service.read_observations(observations))
        with atomic_write(out) as handle:
            points.to_csv(handle, index=False, lineterminator="\n", float_format="%.9f")
        failed = int((points["error"] != "").sum())
        typer.echo(f"wrote {len(points)} points to {out} ({failed} failed)")
    except (AppError, OSError) as e:
        _fail(e, "triangulate")


@app.command()
def report(metrics: Path = typer.Argument(..., help="Metrics CSV written by eval.")):
    """Print the per-aerial table of a metrics CSV."""
    try:
        if not metrics.is_file():
            raise DataError(f"metrics file {metrics} does not exist")
        frame = read_report_csv(metrics)
        for variant, rows in frame.groupby("variant", sort=False):
            typer.echo(render_table(rows, title=str(variant) or None), nl=False)
    except (AppError, OSError) as e:
        _fail(e, "report")


def plot_tables(frame: pd.DataFrame) -> dict:
    """(metric, role) -> horizon-by-variant table of AVG values."""
    frame = frame[(frame["aerial"] == AVG) & (frame["joint"].astype(str) == "")]
    duplicated = frame.duplicated(["variant", "metric", "role", "horizon_ms"])
    if duplicated.any():
        raise ParseError(f"metrics report repeats variant {frame[duplicated]['variant'].iloc[0]!r}")
    variants = list(dict.fromkeys(frame["variant"]))
    tables = {}
    for (metric, role), rows in frame.groupby(["metric", "role"], sort=False):
        table = rows.pivot(index="horizon_ms", columns="variant", values="value_mm").sort_index()
        tables[(metric, role)] = table.reindex(columns=[v for v in variants if v in table.columns])
    return tables


@app.command()
def plotdata(
    metrics: List[Path] = typer.Argument(..., help="One or more metrics CSVs."),
    out_dir: Path = typer.Option(Path("plotdata"), "--out-dir"),
):
    """Write one CSV per (metric, role): horizons on rows, variants on columns."""
    try:
        frames = []
        for path in metrics:
            if not path.is_file():
                raise DataError(f"metrics file {path} does not exist")
            frames.append(read_report_csv(path))
        tables = plot_tables(pd.concat(frames, ignore_index=True))
        out_dir.mkdir(parents=True, exist_ok=True)
        for (metric, role), table in tables.items():
            with atomic_write(out_dir / f"{metric}_{role}.csv") as handle:
                table.to_csv(handle, lineterminator="\n")
        typer.echo(f"wrote {len(tables)} tables to {out_dir}")
    except (AppError, OSError) as e:
        _fail(e, "plotdata")
