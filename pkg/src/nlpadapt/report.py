"""CSV trace export and the plain-text run summary."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import gamma_norm_sq, mismatch_l2_bound
from .excitation import PEMeasurement, RateCertificate, alpha_infinity, convergence_rate, sliding_lambda_min
from .errors import InsufficientSpan
from .integrate import Trace, signal_norm

FLOAT_FMT = "{:.17g}"


def _fmt(v) -> str:
    v = float(v)
    return "" if math.isnan(v) else FLOAT_FMT.format(v)


def csv_columns(trace: Trace) -> list:
    q, n = trace.q, trace.n
    d = trace.channel("theta_hat").shape[1]
    return (
        ["t"]
        + [f"x1_{i}" for i in range(q)]
        + [f"x2_{i}" for i in range(n - q)]
        + ["psi", "u"]
        + [f"theta_hat_{i}" for i in range(d)]
        + ["V", "eps", "pe_lambda_min"]
    )


def export_csv(trace: Trace, path, pe_series=None) -> None:
    """One header row then one row per trace sample, 17 significant digits.

    ``pe_series`` holds the sliding Gram minimum per sample (NaN before the
    first full window); it is left blank when omitted.
    """
    m = len(trace)
    pe = np.full(m, np.nan) if pe_series is None else np.asarray(pe_series, dtype=float)
    if pe.shape != (m,):
        raise ValueError(f"pe_series has shape {pe.shape}, expected ({m},)")
    block = np.column_stack(
        [
            trace.times,
            trace.x,
            trace.channel("psi"),
            trace.channel("u"),
            trace.channel("theta_hat"),
            trace.channel("V"),
            trace.channel("eps"),
        ]
    )
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_columns(trace))
        for row, p in zip(block, pe):
            w.writerow([_fmt(v) for v in row] + [_fmt(p)])


def read_csv(path) -> dict:
    """Columns of an exported trace as float arrays (blank cells become NaN)."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = list(zip(*body)) if body else [()] * len(header)
    return {h: np.array([float(c) if c else np.nan for c in col]) for h, col in zip(header, cols)}


@dataclass
class Analysis:
    """Post-run quantities that feed the summary."""

    terminal_error: float
    pe: PEMeasurement | None = None
    certificate: RateCertificate | None = None
    mismatch_l2: float | None = None
    mismatch_bound: float | None = None
    delta: float | None = None
    notes: list = field(default_factory=list)


def analyze(trace: Trace, pe_L=None, pe_stride=1, single_parameter=True, pe_delta=None) -> Analysis:
    """Terminal error, mismatch bound slack and, when ``pe_L`` is set, excitation.

    ``pe_delta`` is the required excitation level; without it the measured
    infimum is used. The rate certificate is issued only when the level is
    positive and met.
    """
    th = trace.channel("theta_hat")[-1]
    true = trace.channel("theta_true")[-1]
    out = Analysis(float(np.linalg.norm(th - true)))
    meta = trace.meta
    if single_parameter and "theta_true" in meta:
        th0 = trace.channel("theta_hat")[0]
        eps_l2 = signal_norm(trace, "eps", 2)
        out.mismatch_l2 = signal_norm(trace, "mismatch", 2)
        out.mismatch_bound = mismatch_l2_bound(th0, meta["theta_true"], meta["Gamma"], meta["D"], eps_l2, meta["D1"])
    if pe_L:
        try:
            pe = sliding_lambda_min(trace, pe_L, stride=pe_stride)
        except InsufficientSpan as exc:
            out.notes.append(f"excitation skipped: {exc}")
            return out
        out.pe = pe
        out.delta = pe.delta if pe_delta is None else float(pe_delta)
        if out.delta > 0 and pe.verdict(out.delta).satisfied:
            out.certificate = convergence_rate(out.delta, pe_L, meta["D"], meta["D1"], meta["Gamma"], alpha_infinity(trace))
        else:
            out.notes.append("excitation level not met; rate certificate not issued")
    return out


def summary_text(name, cfg, overrides, checks, trace: Trace, analysis: Analysis, braking=None) -> str:
    lines = [f"scenario: {name}"]
    lines.append("overrides: " + (", ".join(overrides) if overrides else "none"))
    lines.append(f"config: {cfg!r}")
    lines.append("preflight:")
    for c in checks:
        lines.append(f"  {c.name}: {'pass' if c.passed else 'FAIL'} ({c.detail})")
    lines.append(f"status: {trace.status}")
    lines.append(f"samples: {len(trace)}")
    lines.append(f"final time: {trace.times[-1]:.10g}")
    if analysis.pe is not None:
        pe = analysis.pe
        verdict = "satisfied" if pe.verdict(analysis.delta).satisfied else "not satisfied"
        lines.append(f"excitation: delta={analysis.delta:.10g} L={pe.L:.10g} lambda_min={pe.delta:.10g} ({verdict})")
    if analysis.certificate is not None:
        c = analysis.certificate
        lines.append(f"rate certificate: rho={c.rho:.10g} D_Gamma={c.D_Gamma:.10g} alpha_inf={c.alpha_inf:.10g}")
    if analysis.mismatch_bound is not None:
        slack = analysis.mismatch_bound - analysis.mismatch_l2
        lines.append(
            f"mismatch l2: {analysis.mismatch_l2:.10g} bound {analysis.mismatch_bound:.10g} slack {slack:.10g}"
        )
    lines.append(f"terminal |theta_hat - theta|: {analysis.terminal_error:.10g}")
    if braking is not None:
        lines.append(f"braking distance: {braking:.10g} m")
    lines.extend(analysis.notes)
    return "\n".join(lines) + "\n"


def gamma_error(trace: Trace) -> np.ndarray:
    """``||theta_hat - theta||^2`` in the ``Gamma^{-1}`` metric at every sample."""
    err = trace.channel("theta_hat") - trace.channel("theta_true")
    return gamma_norm_sq(err, trace.meta["Gamma"])
