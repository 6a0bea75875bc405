"""
Sweep orchestration: NMSE over an axis (SNR, window size or synthetic
distance) with independent seeded trials per axis point.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from tqdm import tqdm

from fhss_common.errors import RecordingError
from fhss_common.logging import setup_logging
from fhss_common.models import PipelineConfig, Scenario, SweepConfig
from fhss_detect.pipeline import PipelineRunner
from fhss_eval.axes import get_axis
from fhss_eval.metrics import evaluate
from fhss_synth.scenarios import synthesize

log = setup_logging("fhss.eval")

SWEEP_HEADER = ["axis", "mean_nmse", "std_nmse", "detect_rate", "false_alarms"]


class TrialResult(BaseModel):
    seed: int
    nmse: float
    start_nmse: float
    n_expected: int
    n_detected: int
    n_false_alarms: int


class SweepRow(BaseModel):
    axis: float
    mean_nmse: float
    std_nmse: float
    detect_rate: float
    false_alarms: float
    trials: List[TrialResult] = Field(default_factory=list)


class SweepReport(BaseModel):
    axis_kind: str
    axis_label: str
    trials: int
    seed: int
    rows: List[SweepRow] = Field(default_factory=list)


def trial_seeds(seed: int, trials: int) -> List[int]:
    """Per-trial seeds; trial k uses the same seed at every axis point."""
    return [
        int(child.generate_state(1)[0])
        for child in np.random.SeedSequence(seed).spawn(trials)
    ]


def run_trial(task: Tuple[Dict[str, Any], Dict[str, Any], int, float]) -> TrialResult:
    """One synth -> detect -> evaluate run. Takes plain dicts so it pickles."""
    scenario_data, pipeline_data, seed, gate_frac = task
    setup_logging("fhss.detect", "WARNING")
    setup_logging("fhss.synth", "WARNING")

    scenario = Scenario.model_validate(scenario_data).with_seed(seed)
    synth = synthesize(scenario)
    result = PipelineRunner(PipelineConfig.model_validate(pipeline_data)).run(synth.recording)
    spec_bin = result.mask.bin_width_hz
    report = evaluate(
        synth.truth,
        result.hops,
        gate_frac=gate_frac,
        center_frequency_hz=scenario.center_frequency_hz,
        bin_width_hz=spec_bin,
        capture_id=synth.recording.capture_id,
    )
    return TrialResult(
        seed=seed,
        nmse=report.nmse,
        start_nmse=report.start_nmse,
        n_expected=report.n_expected,
        n_detected=report.n_detected,
        n_false_alarms=report.n_false_alarms,
    )


def _aggregate(value: float, results: List[TrialResult]) -> SweepRow:
    errs = np.array([r.nmse for r in results], dtype=np.float64)
    rates = np.array([r.n_detected / r.n_expected for r in results], dtype=np.float64)
    fas = np.array([r.n_false_alarms for r in results], dtype=np.float64)
    return SweepRow(
        axis=value,
        mean_nmse=float(errs.mean()),
        std_nmse=float(errs.std()),
        detect_rate=float(rates.mean()),
        false_alarms=float(fas.mean()),
        trials=results,
    )


def _execute(tasks: List[Tuple], jobs: int, progress: bool) -> Iterable[TrialResult]:
    bar = dict(total=len(tasks), desc="sweep", unit="trial", disable=not progress)
    if jobs <= 1:
        return [run_trial(t) for t in tqdm(tasks, **bar)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(tqdm(pool.map(run_trial, tasks), **bar))


def run_sweep(cfg: SweepConfig, jobs: int = 1, progress: bool = False) -> SweepReport:
    axis = get_axis(cfg.axis.kind)
    seeds = trial_seeds(cfg.seed, cfg.trials)

    tasks = []
    for value in cfg.axis.values:
        scenario, pipeline = axis.apply(cfg.axis, value, cfg.scenario, cfg.pipeline)
        s_data = scenario.model_dump()
        p_data = pipeline.model_dump()
        tasks.extend((s_data, p_data, seed, cfg.gate_frac) for seed in seeds)

    log.info(
        f"sweep_start axis={cfg.axis.kind} points={len(cfg.axis.values)} "
        f"trials={cfg.trials} jobs={jobs}"
    )
    results = list(_execute(tasks, jobs, progress))

    rows = []
    for k, value in enumerate(cfg.axis.values):
        chunk = results[k * cfg.trials : (k + 1) * cfg.trials]
        row = _aggregate(float(value), chunk)
        log.info(
            f"sweep_point axis={value} mean_nmse={row.mean_nmse:.6g} "
            f"detect_rate={row.detect_rate:.3f} false_alarms={row.false_alarms:.2f}"
        )
        rows.append(row)

    return SweepReport(
        axis_kind=cfg.axis.kind,
        axis_label=axis.label,
        trials=cfg.trials,
        seed=cfg.seed,
        rows=rows,
    )


def write_sweep_csv(path: Union[str, Path], report: SweepReport) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(SWEEP_HEADER)
            for r in report.rows:
                w.writerow(
                    [
                        f"{r.axis:g}",
                        f"{r.mean_nmse:.9g}",
                        f"{r.std_nmse:.9g}",
                        f"{r.detect_rate:.6f}",
                        f"{r.false_alarms:.6f}",
                    ]
                )
    except OSError as e:
        raise RecordingError(f"cannot write sweep CSV {p}: {e}") from e
    return p
