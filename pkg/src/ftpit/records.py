"""Result persistence: CSV record files and JSON run summaries.

Schemas (headers are part of the interface):
  residuals: run_id,block,step,rank,iteration,residual,status,fault
  heatmap:   strategy,step,iteration,k_total,k_add
  stress:    strategy,block,k_last_rank,k_add,n_faults
"""

import csv
import io
import json

RESIDUAL_HEADER = ["run_id", "block", "step", "rank", "iteration",
                   "residual", "status", "fault"]
HEATMAP_HEADER = ["strategy", "step", "iteration", "k_total", "k_add"]
STRESS_HEADER = ["strategy", "block", "k_last_rank", "k_add", "n_faults"]


def _fmt(x: float) -> str:
    return repr(float(x))


def residual_rows(run_id: str, results) -> list[list]:
    rows = []
    for block in results:
        for iteration, rank, residual, status, fault in block.residual_records:
            step = block.block_index * len(block.k_per_rank) + rank
            rows.append([run_id, block.block_index, step, rank, iteration,
                         _fmt(residual), status, fault])
    return rows


def write_csv(path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(results, run_id: str, config: dict,
              baseline_k: list[int] | None = None) -> dict:
    """Per-block bookkeeping, embedding the resolved config for provenance."""
    blocks = []
    for i, block in enumerate(results):
        entry = {
            "block": block.block_index,
            "converged": block.converged,
            "iterations": block.iteration_count,
            "k_per_rank": list(block.k_per_rank),
            "k_last_rank": block.k_last_rank,
            "n_faults": sum(1 for e in block.fault_events if not e.get("skipped")),
            "fault_events": block.fault_events,
        }
        if baseline_k is not None:
            entry["k_add"] = block.k_last_rank - baseline_k[i]
        blocks.append(entry)
    return {
        "run_id": run_id,
        "config": config,
        "converged": all(b.converged for b in results),
        "blocks": blocks,
    }


def write_summary(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_summary(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def recompute_block_counts(residual_csv_rows: list[dict]) -> dict[int, list[int]]:
    """Rebuild per-rank iteration counts from a residual record file.

    A rank's count is the number of rows where it actually executed, i.e.
    every row whose status is not 'frozen'.
    """
    counts: dict[int, dict[int, int]] = {}
    for row in residual_csv_rows:
        if row["status"] == "frozen":
            continue
        block = int(row["block"])
        rank = int(row["rank"])
        counts.setdefault(block, {})
        counts[block][rank] = counts[block].get(rank, 0) + 1
    return {
        block: [ranks[r] for r in sorted(ranks)]
        for block, ranks in sorted(counts.items())
    }
