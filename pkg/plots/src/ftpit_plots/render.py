"""Render figures from ftpit CSV result files.

Only the documented CSV schemas are consumed, never solver internals:
  residuals: run_id,block,step,rank,iteration,residual,status,fault
  heatmap:   strategy,step,iteration,k_total,k_add
  stress:    strategy,block,k_last_rank,k_add,n_faults
Rendering is read-only and, for vector output, byte-stable across calls.
"""

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "ftpit-plots"

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("residual-trace", "residual-heatmap", "kadd-heatmap", "kadd-bars")

REQUIRED_COLUMNS = {
    "residual-trace": ("block", "rank", "iteration", "residual", "fault"),
    "residual-heatmap": ("block", "rank", "iteration", "residual", "fault"),
    "kadd-heatmap": ("strategy", "step", "iteration", "k_total", "k_add"),
    "kadd-bars": ("strategy", "block", "k_last_rank", "k_add", "n_faults"),
}


class SchemaError(ValueError):
    """Input CSV does not carry the columns the figure kind needs."""


@dataclass
class RenderReport:
    """What was drawn; tests use it to check fault markers against the plan."""

    kind: str
    output: str
    fault_cells: list = field(default_factory=list)  # (step, iteration)


def read_rows(path, kind: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        columns = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in columns]
        if missing:
            raise SchemaError(
                f"{path}: missing column(s) {', '.join(missing)} for {kind}")
        return list(reader)


def _fault_cells(rows) -> list[tuple[int, int]]:
    return sorted({(int(r["step"]), int(r["iteration"]))
                   for r in rows if int(r["fault"])})


def _save(fig, path):
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg")
                else None)
    plt.close(fig)


def render_residual_trace(rows, output, block: int = 0) -> RenderReport:
    """Residual against iteration, one line per rank of the chosen block."""
    rows = [r for r in rows if int(r["block"]) == block]
    ranks = sorted({int(r["rank"]) for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    cells = _fault_cells(rows)
    for rank in ranks:
        mine = [r for r in rows if int(r["rank"]) == rank]
        its = [int(r["iteration"]) for r in mine]
        res = [max(float(r["residual"]), 1e-300) for r in mine]
        ax.semilogy(its, res, marker=".", lw=0.8, ms=3,
                    label=f"step {int(mine[0]['step'])}" if len(ranks) <= 8 else None)
        for r in mine:
            if int(r["fault"]):
                ax.semilogy([int(r["iteration"])],
                            [max(float(r["residual"]), 1e-300)],
                            marker="x", color="black", ms=9, mew=2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual")
    ax.set_title(f"residual per iteration, block {block}")
    if len(ranks) <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, output)
    return RenderReport(kind="residual-trace", output=str(output),
                        fault_cells=cells)


def render_residual_heatmap(rows, output, block: int = 0) -> RenderReport:
    """log10 residual on the (iteration, step) grid with faults marked 'x'."""
    rows = [r for r in rows if int(r["block"]) == block]
    ranks = sorted({int(r["rank"]) for r in rows})
    iters = sorted({int(r["iteration"]) for r in rows})
    grid = np.full((len(ranks), len(iters)), np.nan)
    for r in rows:
        grid[ranks.index(int(r["rank"])), iters.index(int(r["iteration"]))] = \
            np.log10(max(float(r["residual"]), 1e-300))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(
        np.array(iters + [iters[-1] + 1]) - 0.5,
        np.array(ranks + [ranks[-1] + 1]) - 0.5,
        grid, cmap="viridis_r")
    fig.colorbar(mesh, ax=ax, label="log10 residual")
    cells = _fault_cells(rows)
    steps_of = {int(r["rank"]): int(r["step"]) for r in rows}
    for step, iteration in cells:
        rank = next(k for k, v in steps_of.items() if v == step)
        ax.plot([iteration], [rank], marker="x", color="black", ms=10, mew=2.5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("step (rank)")
    ax.set_title(f"residual heatmap, block {block}")
    fig.tight_layout()
    _save(fig, output)
    return RenderReport(kind="residual-heatmap", output=str(output),
                        fault_cells=cells)


def render_kadd_heatmap(rows, output) -> RenderReport:
    """Extra iterations per fault cell, one panel per strategy."""
    strategies = sorted({r["strategy"] for r in rows})
    steps = sorted({int(r["step"]) for r in rows})
    iters = sorted({int(r["iteration"]) for r in rows})
    vals = [int(r["k_add"]) for r in rows]
    vmin, vmax = min(vals), max(vals)
    fig, axes = plt.subplots(1, len(strategies),
                             figsize=(3.2 * len(strategies) + 1.2, 3.6),
                             squeeze=False)
    for ax, strategy in zip(axes[0], strategies):
        grid = np.full((len(iters), len(steps)), np.nan)
        for r in rows:
            if r["strategy"] != strategy:
                continue
            grid[iters.index(int(r["iteration"])),
                 steps.index(int(r["step"]))] = int(r["k_add"])
        mesh = ax.pcolormesh(
            np.array(steps + [steps[-1] + 1]) - 0.5,
            np.array(iters + [iters[-1] + 1]) - 0.5,
            grid, cmap="Greys", vmin=vmin, vmax=vmax)
        ax.set_title(strategy, fontsize=9)
        ax.set_xlabel("step")
    axes[0][0].set_ylabel("fault iteration")
    fig.colorbar(mesh, ax=axes[0][-1], label="K_add")
    fig.tight_layout()
    _save(fig, output)
    return RenderReport(kind="kadd-heatmap", output=str(output))


def render_kadd_bars(rows, output) -> RenderReport:
    """Per-block extra iterations of the last rank, grouped by strategy."""
    strategies = sorted({r["strategy"] for r in rows})
    blocks = sorted({int(r["block"]) for r in rows})
    width = 0.8 / len(strategies)
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, strategy in enumerate(strategies):
        mine = {int(r["block"]): int(r["k_add"])
                for r in rows if r["strategy"] == strategy}
        xs = np.array(blocks) + (i - (len(strategies) - 1) / 2) * width
        ax.bar(xs, [mine.get(b, 0) for b in blocks], width=width,
               label=strategy)
    base = {int(r["block"]): int(r["k_last_rank"]) - int(r["k_add"])
            for r in rows}
    ax.step(np.array(blocks) - 0.5, [base[b] for b in blocks], where="post",
            color="black", lw=1.2, label="no-fault K")
    ax.set_xlabel("block")
    ax.set_ylabel("iterations")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, output)
    return RenderReport(kind="kadd-bars", output=str(output))


def render(kind: str, input_csv, output, block: int = 0) -> RenderReport:
    if kind not in KINDS:
        raise SchemaError(f"unknown figure kind: {kind!r}")
    rows = read_rows(input_csv, kind)
    if kind == "residual-trace":
        return render_residual_trace(rows, output, block=block)
    if kind == "residual-heatmap":
        return render_residual_heatmap(rows, output, block=block)
    if kind == "kadd-heatmap":
        return render_kadd_heatmap(rows, output)
    return render_kadd_bars(rows, output)
