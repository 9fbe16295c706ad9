"""Figures rendered from run CSVs. Rendering never touches logged values."""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed salt so SVG element ids (and thus bytes) are reproducible
plt.rcParams["svg.hashsalt"] = "topobandit"


def _column(rows, name):
    out = []
    for r in rows:
        v = r.get(name, "")
        out.append(float(v) if v != "" else float("nan"))
    return out


def read_rounds(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def reward_curve(rounds_csv, out_path, title: str | None = None):
    """Observed vs predicted reward per round, from a ``rounds.csv``."""
    rows = read_rounds(rounds_csv)
    t = _column(rows, "t")
    observed = _column(rows, "observed_reward")
    predicted = _column(rows, "predicted_reward")

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(t, observed, lw=1.2, label="observed")
    if any(p == p for p in predicted):
        ax.plot(t, predicted, lw=1.0, ls="--", label="predicted")
    ax.set_xlabel("round")
    ax.set_ylabel("reward")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Date": None})
    plt.close(fig)


def comparison_chart(rows: list[dict], out_path, title: str | None = None):
    """Bar chart of mean trailing reward per policy."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    names = [r["policy"] for r in rows]
    ax.bar(names, [r["reward"] for r in rows], color="0.45")
    ax.set_ylabel("mean reward")
    ax.axhline(0, color="k", lw=0.6)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Date": None})
    plt.close(fig)
