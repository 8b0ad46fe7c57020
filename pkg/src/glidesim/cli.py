"""Command-line entry points: run, batch, validate-map, report, serve.

Exit codes: 0 success, 1 fault (failed runs, map violations), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import statistics
import sys

from .config import SimConfig, bundled_asset_path
from .engine import EventLog, metrics as recount_metrics, run
from .errors import GlidesimError
from .floorplan import load_map, validate_map

EXIT_OK = 0
EXIT_FAULT = 1
EXIT_USAGE = 2


def _load_config(ref: str, seed: int | None = None) -> SimConfig:
    """Config reference: path to a scenario JSON, or a bundled scenario name."""
    path = ref if ref.endswith(".json") else bundled_asset_path("scenarios", ref)
    if not os.path.exists(path):
        raise GlidesimError(f"config not found: {ref}")
    with open(path) as f:
        doc = json.load(f)
    if seed is not None:
        doc["seed"] = seed
    return SimConfig(doc, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config, args.seed)
    except (GlidesimError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log, m = run(cfg)
    if args.out:
        log.write(args.out)
        with open(args.out + ".metrics.json", "w") as f:
            json.dump(m.to_dict(), f, indent=2)
    print(json.dumps({"reason": log.end["reason"], **m.to_dict()}))
    return EXIT_OK if m.completed else EXIT_FAULT


# ---------------------------------------------------------------------------
# batch


def _stats(values):
    vals = list(values)
    return {
        "avg": statistics.fmean(vals),
        "sd": statistics.stdev(vals) if len(vals) > 1 else 0.0,
        "min": min(vals),
        "max": max(vals),
    }


_METRICS = ("time", "misalignments", "collisions")
_STATS = ("avg", "sd", "min", "max")


def batch_rows(results):
    """Aggregate per-cell results into one row per mode x trial.

    results: list of dicts with mode, trial, user, completed, time,
    misalignments, collisions, ok.
    """
    rows = []
    keys = sorted({(r["mode"], r["trial"]) for r in results})
    for mode, trial in keys:
        cell = [r for r in results if r["mode"] == mode and r["trial"] == trial]
        good = [r for r in cell if r["ok"]]
        row = {"mode": mode, "trial": trial, "n": len(cell),
               "completed": sum(1 for r in good if r["completed"]),
               "incomplete": len(cell) - len(good)}
        for metric in _METRICS:
            st = _stats(r[metric] for r in good) if good else \
                {s: math.nan for s in _STATS}
            for s in _STATS:
                row[f"{metric}_{s}"] = st[s]
        rows.append(row)
    return rows


def write_batch_tables(rows, out_dir):
    fields = ["mode", "trial", "n", "completed", "incomplete"]
    fields += [f"{m}_{s}" for m in _METRICS for s in _STATS]
    csv_path = os.path.join(out_dir, "summary.csv")
    with open(csv_path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: round(v, 4) if isinstance(v, float) else v
                        for k, v in row.items()})
    json_path = os.path.join(out_dir, "summary.json")
    with open(json_path, "w") as f:
        json.dump({"rows": rows}, f, indent=2)
    return csv_path, json_path


def run_batch(spec: dict, base_dir: str, out_dir: str, keep_logs: bool = True):
    """Run every (config, user, trial) cell; returns (rows, results)."""
    configs = spec.get("configs")
    users = int(spec.get("users", 1))
    trials = int(spec.get("trials", 1))
    seed_base = int(spec.get("seed_base", 0))
    if not configs or users < 1 or trials < 1:
        raise GlidesimError("batch spec needs configs, users >= 1, trials >= 1")

    log_dir = os.path.join(out_dir, "logs")
    if keep_logs:
        os.makedirs(log_dir, exist_ok=True)
    results = []
    for entry in configs:
        label = entry.get("label") or entry["config"]
        ref = entry["config"]
        if ref.endswith(".json") and not os.path.isabs(ref):
            ref = os.path.join(base_dir, ref)
        for user in range(users):
            for trial in range(1, trials + 1):
                seed = seed_base + user * trials + (trial - 1)
                cell = {"mode": label, "user": user, "trial": trial,
                        "seed": seed}
                try:
                    cfg = _load_config(ref, seed)
                    log, m = run(cfg)
                    if keep_logs:
                        name = f"{label}_u{user}_t{trial}.ndjson"
                        log.write(os.path.join(log_dir, name))
                    cell.update(ok=m.completed, completed=m.completed,
                                time=m.time, misalignments=m.misalignment_events,
                                collisions=m.potential_collisions,
                                reason=log.end["reason"])
                except GlidesimError as exc:
                    cell.update(ok=False, completed=False, time=math.nan,
                                misalignments=0, collisions=0,
                                reason=f"error: {exc}")
                results.append(cell)
    return batch_rows(results), results


def cmd_batch(args) -> int:
    try:
        with open(args.spec) as f:
            spec = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out or spec.get("out", "batch_out")
    os.makedirs(out_dir, exist_ok=True)
    base_dir = os.path.dirname(os.path.abspath(args.spec))
    try:
        rows, results = run_batch(spec, base_dir, out_dir,
                                  keep_logs=not args.no_logs)
    except GlidesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    csv_path, _ = write_batch_tables(rows, out_dir)
    failed = [r for r in results if not r["ok"]]
    print(f"wrote {csv_path}: {len(rows)} rows, "
          f"{len(results) - len(failed)}/{len(results)} cells completed")
    for r in failed:
        print(f"  failed: {r['mode']} user={r['user']} trial={r['trial']} "
              f"({r['reason']})", file=sys.stderr)
    return EXIT_FAULT if failed else EXIT_OK


# ---------------------------------------------------------------------------
# validate-map


def cmd_validate_map(args) -> int:
    try:
        m = load_map(args.path)
    except GlidesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    violations = validate_map(m)
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_FAULT
    print(f"{m.name}: OK ({len(m.graph.nodes)} nodes, "
          f"{len(m.graph.edges)} edges, {len(m.destinations)} destinations)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def _render_trajectory(log: EventLog, cfg: SimConfig, out_dir: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    from .floorplan import OCCUPIED

    grid = cfg.scenario.grid
    truth = np.array([r["truth"] for r in log.records])
    est = np.array([r["est"] for r in log.records])

    fig, ax = plt.subplots(figsize=(8, 6))
    h, w = grid.cells.shape
    extent = (grid.origin[0], grid.origin[0] + w * grid.resolution,
              grid.origin[1], grid.origin[1] + h * grid.resolution)
    ax.imshow(grid.cells == OCCUPIED, origin="lower", extent=extent,
              cmap="gray_r", interpolation="nearest", alpha=0.8)
    ax.plot(truth[:, 0], truth[:, 1], "-", color="tab:blue", lw=1.5,
            label="true path")
    ax.plot(est[:, 0], est[:, 1], "--", color="tab:orange", lw=1.0,
            label="estimate")
    hits = [(r["truth"][0], r["truth"][1]) for r in log.records
            if any(e["kind"] == "potential_collision" for e in r["events"])]
    if hits:
        hx, hy = zip(*hits)
        ax.plot(hx, hy, "x", color="tab:red", ms=9, label="potential collision")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"{cfg.map_ref} / {cfg.mode} / seed {cfg.seed}")
    path = os.path.join(out_dir, "trajectory.png")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def _render_timeseries(log: EventLog, out_dir: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    t = np.array([r["t"] for r in log.records])
    v = np.array([r["handle"]["v"] for r in log.records])
    steer = np.array([r["steer"] for r in log.records])
    brake = np.array([1.0 if r["brake"] else 0.0 for r in log.records])

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 6))
    axes[0].plot(t, v, color="tab:blue")
    axes[0].set_ylabel("push speed [m/s]")
    axes[1].plot(t, steer, color="tab:orange")
    axes[1].set_ylabel("steering [rad]")
    axes[2].fill_between(t, brake, step="mid", color="tab:red", alpha=0.6)
    axes[2].set_ylabel("brake")
    axes[2].set_xlabel("t [s]")
    path = os.path.join(out_dir, "timeseries.png")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def _write_trial_csv(log: EventLog, out_dir: str):
    path = os.path.join(out_dir, "trial.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["k", "t", "x", "y", "heading", "est_x", "est_y",
                    "est_heading", "push_speed", "offset", "steer", "brake",
                    "advisory", "events"])
        for r in log.records:
            w.writerow([r["k"], r["t"], *r["truth"], *r["est"],
                        r["handle"]["v"], r["handle"]["e"], r["steer"],
                        int(r["brake"]), r["advisory"],
                        ";".join(e["kind"] for e in r["events"])])
    return path


def _render_batch(summary_path: str, out_dir: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    with open(summary_path) as f:
        rows = json.load(f)["rows"]
    labels = [f"{r['mode']}\ntrial {r['trial']}" for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    x = np.arange(len(rows))
    axes[0].bar(x, [r["time_avg"] for r in rows],
                yerr=[r["time_sd"] for r in rows], capsize=3,
                color="tab:blue")
    axes[0].set_xticks(x, labels, fontsize=7)
    axes[0].set_ylabel("completion time [s]")
    width = 0.4
    axes[1].bar(x - width / 2, [r["misalignments_avg"] for r in rows], width,
                label="misalignments", color="tab:orange")
    axes[1].bar(x + width / 2, [r["collisions_avg"] for r in rows], width,
                label="potential collisions", color="tab:red")
    axes[1].set_xticks(x, labels, fontsize=7)
    axes[1].set_ylabel("mean events per trial")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, "batch.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def cmd_report(args) -> int:
    out_dir = args.out or "report_out"
    os.makedirs(out_dir, exist_ok=True)
    written = []
    try:
        if args.log:
            log = EventLog.read(args.log)
            cfg = SimConfig(log.header["config"])
            written.append(_write_trial_csv(log, out_dir))
            written.append(_render_trajectory(log, cfg, out_dir))
            written.append(_render_timeseries(log, out_dir))
            m = recount_metrics(log)
            with open(os.path.join(out_dir, "metrics.json"), "w") as f:
                json.dump(m.to_dict(), f, indent=2)
            written.append(os.path.join(out_dir, "metrics.json"))
        elif args.batch:
            summary = args.batch if args.batch.endswith(".json") \
                else os.path.join(args.batch, "summary.json")
            written.append(_render_batch(summary, out_dir))
        else:
            print("error: report needs --log or --batch", file=sys.stderr)
            return EXIT_USAGE
    except (GlidesimError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc!r}", file=sys.stderr)
        return EXIT_USAGE
    for p in written:
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve


def cmd_serve(args) -> int:
    from .bridge import serve
    try:
        cfg = _load_config(args.config, args.seed)
    except (GlidesimError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    serve(cfg, host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glidesim",
                                description="Steer-only guided-mobility simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario headless")
    r.add_argument("--config", required=True,
                   help="scenario JSON path or bundled scenario name")
    r.add_argument("--seed", type=int, default=None, help="seed override")
    r.add_argument("--out", default=None, help="event log output path")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run a users x trials x modes batch")
    b.add_argument("spec", help="batch spec JSON")
    b.add_argument("--out", default=None, help="output directory")
    b.add_argument("--no-logs", action="store_true",
                   help="skip writing per-cell event logs")
    b.set_defaults(func=cmd_batch)

    v = sub.add_parser("validate-map", help="check map invariants")
    v.add_argument("path", help="map JSON path")
    v.set_defaults(func=cmd_validate_map)

    rep = sub.add_parser("report", help="render figures + CSV from logs")
    rep.add_argument("--log", default=None, help="event log to report on")
    rep.add_argument("--batch", default=None,
                     help="batch output directory or summary.json")
    rep.add_argument("--out", default=None, help="output directory")
    rep.set_defaults(func=cmd_report)

    s = sub.add_parser("serve", help="serve a live session for the cockpit UI")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8722)
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
