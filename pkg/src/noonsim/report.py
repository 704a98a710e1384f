"""Deterministic result serialization, CSV tables and optional figures.

Floats are written with 17 significant digits so that a result document
round-trips bit for bit and repeated runs are byte-identical.  Every file is
written to a temporary sibling and renamed into place, so an interrupted or
failed run never leaves a partial output behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = f"{x:.17g}"
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _plain(obj: Any) -> Any:
    """Convert numpy scalars, tuples and arrays into JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _emit(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [_emit(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(pad + i for i in items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(k, ensure_ascii=False)}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(pad + i for i in items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats and non-finite values as null."""
    return _emit(_plain(obj), indent, 0) + "\n"


def write_atomic(path: str | Path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8") if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        s = format_float(float(v))
        return "" if s == "null" else s
    if v is None:
        return ""
    return str(v)


# ---------------------------------------------------------------------------
# figures (optional; matplotlib imported lazily)


def render_figures(scheme: str, columns: Sequence[str], rows: list[Sequence[Any]],
                   summary: dict, out_dir: str | Path, stem: str) -> list[Path]:
    """Render the scheme's table to PNG files in ``out_dir``; returns the paths written."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not rows:
        return []
    data = {c: np.array([r[i] for r in rows]) for i, c in enumerate(columns)}
    drawers = {
        "qfg": _fig_outcomes,
        "bootstrap": _fig_outcomes,
        "ramsey": _fig_ramsey,
        "noon-gun": _fig_trajectory,
        "ghz-scan": _fig_ghz_scan,
    }
    draw = drawers.get(scheme)
    if draw is None:
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"figure.dpi": 100, "savefig.dpi": 150, "font.size": 9,
                         "axes.spines.top": False, "axes.spines.right": False}):
        fig = draw(plt, data, summary)
        path = out_dir / f"{stem}_{scheme}.png"
        buf = io.BytesIO()
        fig.savefig(buf, format="png", bbox_inches="tight", metadata={"Software": None})
        plt.close(fig)
    write_atomic(path, buf.getvalue())
    return [path]


def _fig_outcomes(plt, data, summary):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    labels = [f"{a},{b}" for a, b in zip(data["n_D1"], data["n_D2"])]
    x = np.arange(len(labels))
    colors = ["tab:blue" if h else "0.7" for h in data["heralded"]]
    ax.bar(x, data["probability"], color=colors)
    ax.set_xticks(x, labels, rotation=90 if len(labels) > 12 else 0)
    ax.set_xlabel("detector counts (D1, D2)")
    ax.set_ylabel("probability")
    ax2 = ax.twinx()
    ax2.plot(x, data["corrected_fidelity"], "o", color="tab:red", ms=3)
    ax2.set_ylim(0, 1.05)
    ax2.set_ylabel("corrected NOON fidelity", color="tab:red")
    return fig


def _fig_ramsey(plt, data, summary):
    fig, ax = plt.subplots(figsize=(4, 3))
    x = np.arange(len(data["atom_state"]))
    ax.bar(x - 0.2, data["probability"], 0.4, label="probability")
    ax.bar(x + 0.2, data["noon_fidelity"], 0.4, label="NOON fidelity")
    ax.set_xticks(x, list(data["atom_state"]))
    ax.set_ylim(0, 1.05)
    ax.legend(frameon=False)
    return fig


def _fig_trajectory(plt, data, summary):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 4.5), sharex=True)
    t = data["t"]
    ax1.plot(t, data["omega_p"], color="k")
    ax1.set_ylabel(r"$\Omega_P$")
    ax2.plot(t, data["photons_L"], label=r"$\langle n_L\rangle$")
    ax2.plot(t, data["photons_R"], label=r"$\langle n_R\rangle$")
    ax2.plot(t, data["excited"], label=r"$\langle n_{a'}+n_{b'}\rangle$")
    ax2.set_xlabel("t (1/g)")
    ax2.legend(frameon=False)
    return fig


def _fig_ghz_scan(plt, data, summary):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    for n in np.unique(data["N"]):
        sel = data["N"] == n
        ax.plot(data["eta_t"][sel], data["class_fidelity"][sel], lw=1, label=f"N={int(n)}")
    ax.axvline(math.pi, color="0.5", ls="--", lw=0.8)
    ax.set_xlabel(r"$\eta t$")
    ax.set_ylabel("GHZ-class fidelity")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False)
    return fig
