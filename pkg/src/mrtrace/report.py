"""Report assembly: run every applicable analysis over a trace and emit
one JSON document plus per-figure TSV plot data.

Analyses whose dimensions are missing are skipped by name, never
zero-filled, and every randomized step records its seed so reruns are
byte-identical.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import compute_patterns as cp
from . import data_access as da
from . import temporal as ts
from .columns import columns
from .errors import MRTraceError
from .trace import FNV64_OFFSET_BASIS, HASH_ALGORITHM, OPTIONAL_FIELDS, Trace

DEFAULT_SEED = 42
DEFAULT_BUCKET_WIDTH = 3600
DEFAULT_K_MAX = 10
DEFAULT_CLUSTER_SAMPLE_CAP = 50_000
NAME_CUTOFF = 0.01
MAX_PLOT_POINTS = 20_000


def _sig9(x: float) -> float:
    return float(f"{x:.9g}")


def _clean(obj):
    """Round floats to 9 significant digits and unbox numpy scalars."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _sig9(float(obj))
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    return obj


def write_atomic(path: Path, text: str) -> None:
    """Write via temp file + rename so readers never see partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path: Path, obj) -> None:
    write_atomic(path, json.dumps(_clean(obj), indent=2) + "\n")


def write_tsv_atomic(path: Path, rows) -> None:
    lines = ["\t".join(_format_cell(c) for c in row) for row in rows]
    write_atomic(path, "\n".join(lines) + "\n")


def _format_cell(c) -> str:
    if isinstance(c, (np.floating, float)):
        return f"{float(c):.9g}"
    return str(c)


def _cdf_rows(cdf: da.EmpiricalCDF):
    """CDF points for plotting, decimated past MAX_PLOT_POINTS.

    Figures cannot resolve millions of steps; decimation keeps the first
    and last point so the curve still spans [min, 1.0].
    """
    values, fractions = cdf.values, cdf.fractions
    if values.size > MAX_PLOT_POINTS:
        idx = np.unique(np.linspace(0, values.size - 1, MAX_PLOT_POINTS).astype(np.int64))
        values, fractions = values[idx], fractions[idx]
    return list(zip(values.tolist(), fractions.tolist()))


def _cdf_section(cdf: da.EmpiricalCDF, excluded: int) -> dict:
    vals = cdf.values
    return {
        "sample_count": cdf.sample_count,
        "excluded_missing": excluded,
        "min": float(vals[0]),
        "median": float(vals[np.searchsorted(cdf.fractions, 0.5)]),
        "max": float(vals[-1]),
    }


class ReportBuilder:
    """Accumulates sections and plot payloads for one trace."""

    def __init__(
        self,
        trace: Trace,
        *,
        seed: int = DEFAULT_SEED,
        bucket_width: int = DEFAULT_BUCKET_WIDTH,
        k_max: int = DEFAULT_K_MAX,
        cluster_sample_cap: int = DEFAULT_CLUSTER_SAMPLE_CAP,
    ):
        self.trace = trace
        self.seed = seed
        self.bucket_width = bucket_width
        self.k_max = k_max
        self.cluster_sample_cap = cluster_sample_cap
        self.sections: dict = {}
        self.plots: dict[str, list] = {}
        self.skips: list[dict] = []
        self.cluster_table: Optional[str] = None

    def _run(self, name: str, fn) -> None:
        try:
            self.sections[name] = fn()
        except MRTraceError as exc:
            self.skips.append({"section": name, "reason": f"{type(exc).__name__}: {exc}"})

    def build(self) -> dict:
        t = self.trace
        self.sections["metadata"] = {
            "tool_version": __version__,
            "label": t.label,
            "machine_count": t.machine_count,
            "record_count": len(t.records),
            "span": list(t.span),
            "span_hours": (t.span[1] - t.span[0]) / 3600.0,
        }
        self.sections["missing_fields"] = self._missing_counts()

        for dim in ("input", "shuffle", "output"):
            self._run(f"data_sizes.{dim}", lambda d=dim: self._data_sizes(d))
        for side in ("input", "output"):
            self._run(f"zipf.{side}", lambda s=side: self._zipf(s))
            self._run(f"access_vs_size.{side}", lambda s=side: self._access_vs_size(s))
            self._run(f"eighty_x.{side}", lambda s=side: self._eighty_x(s))
        self._run("reaccess", self._reaccess)
        for dim in ("jobs_submitted", "data_size_bytes", "compute_time_task_seconds"):
            self._run(f"time_series.{dim}", lambda d=dim: self._series_section(d))
        self._run("time_series.occupancy_slots", self._occupancy_section)
        self._run("burstiness", self._burstiness)
        self._run("correlations", self._correlations)
        self._run("periodogram", self._periodogram)
        self._run("names", self._names)
        self._run("clusters", self._clusters)

        self.sections["decisions"] = {
            "seed": self.seed,
            "bucket_width": self.bucket_width,
            "path_hash": {"algorithm": HASH_ALGORITHM, "offset_basis": FNV64_OFFSET_BASIS},
            "percentile_scheme": "linear interpolation between order statistics",
            "file_size_rule": "max byte count observed per digest",
            "zipf_fit": "all entries, plus tail-trimmed (count >= 2) comparison fit",
            "reaccess_rule": "gap from any touch to the next input read, submit times",
            "occupancy_rule": "task-seconds spread uniformly over [submit, submit+duration]",
            "kmeans": {
                "transform": "log10(1+x) then z-score",
                "k_max": self.k_max,
                "improvement_threshold": 0.10,
                "restarts": 5,
                "sample_cap": self.cluster_sample_cap,
            },
            "name_cutoff_fraction": NAME_CUTOFF,
            "max_plot_points": MAX_PLOT_POINTS,
        }
        self.sections["skipped"] = self.skips
        return self.sections

    def _missing_counts(self) -> dict:
        cols = columns(self.trace)
        out = {}
        for name in OPTIONAL_FIELDS:
            if name == "name":
                out[name] = sum(1 for r in self.trace.records if r.name is None)
            elif name.endswith("_path_hash"):
                present = getattr(cols, name.replace("_path", "").replace("hash", "hash_present"))
                out[name] = int((~present).sum())
            else:
                out[name] = int(np.isnan(getattr(cols, name)).sum())
        return out

    def _data_sizes(self, dim: str) -> dict:
        cdf = da.data_size_cdf(self.trace, dim)
        self.plots[f"fig1_{dim}.tsv"] = _cdf_rows(cdf)
        out = {"operation": "data_size_cdf", "dimension": dim}
        out.update(_cdf_section(cdf, len(self.trace.records) - cdf.sample_count))
        return out

    def _zipf(self, side: str) -> dict:
        table = da.access_frequency_rank(self.trace, side)
        ranks = np.arange(1, len(table) + 1)
        counts = table.counts
        if len(table) > MAX_PLOT_POINTS:
            idx = np.unique(np.linspace(0, len(table) - 1, MAX_PLOT_POINTS).astype(np.int64))
            ranks, counts = ranks[idx], counts[idx]
        self.plots[f"fig2_{side}.tsv"] = list(zip(ranks.tolist(), counts.tolist()))
        out = {"operation": "access_frequency_rank + fit_zipf", "side": side,
               "n_files": len(table), "n_accesses": int(table.counts.sum())}
        for label, tbl in (("full", table), ("tail_trimmed", da.tail_trimmed(table))):
            try:
                fit = da.fit_zipf(tbl)
                out[label] = {
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "r_squared": fit.r_squared,
                    "n_points": fit.n_points,
                }
            except MRTraceError as exc:
                out[label] = {"skipped": str(exc)}
        return out

    def _access_vs_size(self, side: str) -> dict:
        jobs_cdf, bytes_cdf = da.access_vs_size_curves(self.trace, side)
        fig = "fig3" if side == "input" else "fig4"
        self.plots[f"{fig}_{side}_jobs.tsv"] = _cdf_rows(jobs_cdf)
        self.plots[f"{fig}_{side}_bytes.tsv"] = _cdf_rows(bytes_cdf)
        return {
            "operation": "access_vs_size_curves",
            "side": side,
            "jobs": cdf_summary(jobs_cdf),
            "stored_bytes": cdf_summary(bytes_cdf),
        }

    def _eighty_x(self, side: str) -> dict:
        x = da.eighty_x_rule(self.trace, side)
        return {"operation": "eighty_x_rule", "side": side,
                "access_quantile": 0.80, "x_percent_of_bytes": x}

    def _reaccess(self) -> dict:
        stats = da.reaccess_intervals(self.trace)
        self.plots["fig5_reaccess_intervals.tsv"] = _cdf_rows(stats.interval_cdf)
        self.plots["fig6_preexisting_input.tsv"] = [
            (self.trace.label, stats.reaccess_job_fraction)
        ]
        out = {
            "operation": "reaccess_intervals",
            "reaccess_job_fraction": stats.reaccess_job_fraction,
            "interval_count": stats.interval_cdf.sample_count,
        }
        if stats.interval_cdf.sample_count:
            gaps = stats.interval_cdf
            out["within_6h_fraction"] = gaps.fraction_at(6 * 3600)
            out["median_interval_seconds"] = float(
                gaps.values[np.searchsorted(gaps.fractions, 0.5)]
            )
        return out

    def _series(self, dim: str) -> ts.TimeSeries:
        if dim == "occupancy_slots":
            return ts.occupancy_series(self.trace, self.bucket_width)
        return ts.bucket_time_series(self.trace, dim, self.bucket_width)

    def _series_section(self, dim: str) -> dict:
        series = self._series(dim)
        self.plots[f"fig7_{dim}.tsv"] = list(
            zip(range(len(series)), series.values.tolist())
        )
        out = {"operation": "bucket_time_series", "dimension": dim}
        out.update(_series_stats(series))
        return out

    def _occupancy_section(self) -> dict:
        series = self._series("occupancy_slots")
        self.plots["fig7_occupancy_slots.tsv"] = list(
            zip(range(len(series)), series.values.tolist())
        )
        out = {"operation": "occupancy_series", "dimension": "occupancy_slots"}
        out.update(_series_stats(series))
        return out

    def _burstiness(self) -> dict:
        out = {"operation": "burstiness_curve", "percentile_grid": "1..100",
               "bucket_width": self.bucket_width}
        curves = {}
        for dim in ("jobs_submitted", "data_size_bytes", "compute_time_task_seconds"):
            try:
                series = self._series(dim)
                curve = ts.burstiness_curve(series)
                curves[dim] = curve
                ratio = dict((p, r) for r, p in curve.points)
                out[dim] = {
                    "median": curve.median,
                    "p50_ratio": ratio.get(50),
                    "p90_ratio": ratio.get(90),
                    "p99_ratio": ratio.get(99),
                    "peak_to_median": ts.peak_to_median(series),
                }
            except MRTraceError as exc:
                out[dim] = {"skipped": f"{type(exc).__name__}: {exc}"}
        if not curves:
            raise MRTraceError("no dimension supports a burstiness curve")
        if "compute_time_task_seconds" in curves:
            self.plots["fig8_tasktime.tsv"] = [
                (r, p) for r, p in curves["compute_time_task_seconds"].points
            ]
        buckets = max(24, len(self._series("jobs_submitted")))
        for kind, tag in (("range_equals_mean", "sine_mean"), ("range_equals_tenth_of_mean", "sine_tenth")):
            ref = ts.sine_reference(kind, buckets)
            self.plots[f"fig8_{tag}.tsv"] = [
                (r, p) for r, p in ts.burstiness_curve(ref).points
            ]
        return out

    def _correlations(self) -> dict:
        corr = ts.dimension_correlations(self.trace, self.bucket_width)
        rows = [
            ("jobs_vs_data", corr.r_jobs_data),
            ("jobs_vs_compute", corr.r_jobs_compute),
            ("data_vs_compute", corr.r_data_compute),
        ]
        self.plots["fig9_correlations.tsv"] = rows
        return {"operation": "dimension_correlations", "bucket_width": self.bucket_width} \
            | {name: r for name, r in rows} | {"n_buckets": corr.n_buckets}

    def _periodogram(self) -> dict:
        out = {"operation": "periodogram", "top_k": 5, "bucket_width": self.bucket_width}
        ran_any = False
        last_exc: Optional[MRTraceError] = None
        for dim in ("jobs_submitted", "data_size_bytes", "compute_time_task_seconds"):
            try:
                peaks = ts.periodogram(self._series(dim))
                out[dim] = {
                    "diurnal": peaks.diurnal,
                    "top_components": [
                        {"period_hours": p / 3600.0, "power_fraction": f}
                        for p, f in peaks.components
                    ],
                }
                ran_any = True
            except MRTraceError as exc:
                out[dim] = {"skipped": f"{type(exc).__name__}: {exc}"}
                last_exc = exc
        if not ran_any and last_exc is not None:
            raise last_exc
        return out

    def _names(self) -> dict:
        out = {"operation": "name_breakdown", "min_fraction": NAME_CUTOFF}
        for weighting in ("jobs", "io_bytes", "task_time"):
            breakdown = cp.name_breakdown(self.trace, weighting, NAME_CUTOFF)
            self.plots[f"fig10_{weighting}.tsv"] = list(breakdown.entries) + (
                [("<other>", breakdown.other_fraction)] if breakdown.other_fraction else []
            )
            out[weighting] = {
                "top": [{"word": w, "fraction": f} for w, f in breakdown.entries[:10]],
                "other_fraction": breakdown.other_fraction,
            }
        return out

    def _clusters(self) -> dict:
        matrix = cp.job_feature_vectors(self.trace)
        sampled_from = None
        if len(matrix) > self.cluster_sample_cap:
            sampled_from = len(matrix)
            rng = np.random.default_rng(self.seed)
            keep = rng.choice(len(matrix), size=self.cluster_sample_cap, replace=False)
            keep.sort()
            matrix = cp.JobFeatureMatrix(
                rows=matrix.rows[keep],
                raw=matrix.raw[keep],
                transform=matrix.transform,
                excluded_count=matrix.excluded_count,
                job_ids=matrix.job_ids[keep],
            )
        k_max = min(self.k_max, len(matrix))
        model = cp.elbow_fit(matrix, k_max, seed=self.seed)
        summary = cp.summarize_clusters(self.trace, model)
        self.cluster_table = render_cluster_table(summary)
        return {
            "operation": "job_feature_vectors + elbow_fit",
            "seed": self.seed,
            "k": model.k,
            "k_max": k_max,
            "residual_variance": model.residual_variance,
            "clustered_jobs": len(matrix),
            "excluded_jobs": matrix.excluded_count,
            "sampled_from": sampled_from,
            "clusters": [
                {
                    "job_count": row.job_count,
                    "medians": row.medians,
                    "suggested_label": row.suggested_label,
                    "label": row.label,
                }
                for row in summary.clusters
            ],
        }


def cdf_summary(cdf: da.EmpiricalCDF) -> dict:
    return {
        "points": int(cdf.values.size),
        "min": float(cdf.values[0]),
        "max": float(cdf.values[-1]),
    }


def _series_stats(series: ts.TimeSeries) -> dict:
    v = series.values
    gaps = ts.zero_runs(series)
    return {
        "buckets": len(series),
        "bucket_width": series.bucket_width,
        "total": float(v.sum()),
        "mean": float(v.mean()),
        "peak": float(v.max()),
        "suspected_logging_gaps": [
            {"start_bucket": s, "length": l} for s, l in gaps
        ],
    }


_SIZE_UNITS = ((1 << 40, "TB"), (1 << 30, "GB"), (1 << 20, "MB"), (1 << 10, "KB"))


def _human_bytes(n: float) -> str:
    for scale, unit in _SIZE_UNITS:
        if n >= scale:
            return f"{n / scale:.1f} {unit}"
    return f"{n:.0f} B"


def _human_duration(s: float) -> str:
    if s >= 3600:
        return f"{s / 3600:.1f} hrs"
    if s >= 60:
        return f"{s / 60:.1f} min"
    return f"{s:.0f} sec"


def render_cluster_table(summary: "cp.ClusterSummary") -> str:
    """Aligned-column text table of cluster sizes, centers, and labels."""
    header = ("# Jobs", "Input", "Shuffle", "Output", "Duration", "Map time", "Reduce time", "Label")
    rows = [header]
    for c in summary.clusters:
        m = c.medians
        rows.append(
            (
                str(c.job_count),
                _human_bytes(m["input_bytes"]),
                _human_bytes(m["shuffle_bytes"]),
                _human_bytes(m["output_bytes"]),
                _human_duration(m["duration"]),
                f"{m['map_task_seconds']:,.0f}",
                f"{m['reduce_task_seconds']:,.0f}",
                c.label or c.suggested_label,
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def write_report(
    trace: Trace,
    out_path: Optional[Path],
    plots_dir: Optional[Path],
    **kwargs,
) -> dict:
    """Assemble the report; write JSON and per-figure TSVs atomically."""
    builder = ReportBuilder(trace, **kwargs)
    report = builder.build()
    if out_path is not None:
        write_json_atomic(Path(out_path), report)
    if plots_dir is not None:
        plots_dir = Path(plots_dir)
        plots_dir.mkdir(parents=True, exist_ok=True)
        for name, rows in builder.plots.items():
            write_tsv_atomic(plots_dir / name, rows)
        if getattr(builder, "cluster_table", None):
            write_atomic(plots_dir / "table2_clusters.txt", builder.cluster_table)
    return report
