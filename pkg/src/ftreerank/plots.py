"""Deterministic SVG and CSV output for ROC reports.

The SVG is written by hand (no plotting library) so that identical
reports give byte-identical files.
"""
import csv
import os

from .errors import IoError

__all__ = ["emit_plots", "svg_roc"]

_SIZE = 400
_PAD = 40
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _xy(fpr, tpr):
    span = _SIZE - 2 * _PAD
    return f"{_PAD + fpr * span:.3f},{_SIZE - _PAD - tpr * span:.3f}"


def _polyline(points, color, dash=None, label=""):
    pts = " ".join(_xy(a, b) for a, b in points)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline class="roc" data-label="{label}" fill="none" stroke="{color}" stroke-width="1.5"{extra} points="{pts}"/>'


def _band(env, color):
    upper = list(zip(env["fpr"], env["upper"]))
    lower = list(zip(env["fpr"], env["lower"]))[::-1]
    pts = " ".join(_xy(a, b) for a, b in upper + lower)
    return f'<polygon class="envelope" fill="{color}" fill-opacity="0.2" stroke="none" points="{pts}"/>'


def svg_roc(series, envelopes=(), optimal=None, title=""):
    """SVG text with one polyline per ``(label, points)`` in ``series``."""
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_SIZE - 2 * _PAD}" height="{_SIZE - 2 * _PAD}" fill="none" stroke="#000"/>',
        f'<line x1="{_PAD}" y1="{_SIZE - _PAD}" x2="{_SIZE - _PAD}" y2="{_PAD}" stroke="#999" stroke-dasharray="2,2"/>',
        f'<text x="{_SIZE / 2}" y="{_SIZE - 8}" text-anchor="middle" font-size="12">false positive rate</text>',
        f'<text x="12" y="{_SIZE / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 12 {_SIZE / 2})">true positive rate</text>',
    ]
    if title:
        lines.append(f'<text x="{_SIZE / 2}" y="24" text-anchor="middle" font-size="13">{title}</text>')
    for i, env in enumerate(envelopes):
        lines.append(_band(env, _COLORS[i % len(_COLORS)]))
    for i, (label, pts) in enumerate(series):
        lines.append(_polyline(pts, _COLORS[i % len(_COLORS)], label=label))
    if optimal is not None:
        lines.append(_polyline(optimal, "#000", dash="5,3", label="optimal"))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _reports(report):
    if hasattr(report, "first"):
        return [("functional" if "functional" in report.first.config["learner"] else "first", report.first),
                ("filtered" if "filtered" in report.second.config["learner"] else "second", report.second)]
    return [(report.config["learner"], report)]


def _mean_curve(rep):
    # a single run is drawn as its own ROC curve, several as the pointwise mean
    if len(rep.runs) == 1:
        return rep.runs[0]["roc"]
    return list(zip(rep.envelope["fpr"], rep.envelope["mean"]))


def emit_plots(report, out_dir, prefix="roc"):
    """Write ``<prefix>.svg``, ``<prefix>_series.csv`` and ``<prefix>_envelope.csv``.

    ``report`` is an evaluation or a comparison report. The series CSV
    lists every per-run ROC curve (its trapezoid area is the run's AUC),
    the mean curves and the optimal ROC when known.
    """
    reps = _reports(report)
    try:
        os.makedirs(out_dir, exist_ok=True)
        series = [(label, _mean_curve(rep)) for label, rep in reps]
        envelopes = [rep.envelope for _, rep in reps if len(rep.runs) > 1]
        optimal = reps[0][1].optimal_roc
        svg = svg_roc(series, envelopes, optimal, title=" vs ".join(l for l, _ in reps))
        paths = {}
        paths["svg"] = os.path.join(out_dir, prefix + ".svg")
        with open(paths["svg"], "w") as fh:
            fh.write(svg)
        paths["series"] = os.path.join(out_dir, prefix + "_series.csv")
        with open(paths["series"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["series", "learner", "run", "fpr", "tpr"])
            for label, rep in reps:
                for r in rep.runs:
                    for a, b in r["roc"]:
                        w.writerow(["run", label, r["run"], repr(a), repr(b)])
                for a, b in _mean_curve(rep):
                    w.writerow(["mean", label, "", repr(a), repr(b)])
            if optimal is not None:
                for a, b in optimal:
                    w.writerow(["optimal", "", "", repr(a), repr(b)])
        paths["envelope"] = os.path.join(out_dir, prefix + "_envelope.csv")
        with open(paths["envelope"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["learner", "fpr", "lower", "mean", "upper", "width"])
            for label, rep in reps:
                e = rep.envelope
                for a, lo, mu, hi in zip(e["fpr"], e["lower"], e["mean"], e["upper"]):
                    w.writerow([label, repr(a), repr(lo), repr(mu), repr(hi), repr(hi - lo)])
    except OSError as exc:
        raise IoError(f"cannot write plots to {out_dir}: {exc}") from None
    return paths
