"""Command-line entry point: ``peakshift <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import dataset_io as dio
from .cocluster import build_cocluster_graph, girvan_newman, threshold_edges
from .dataset import DatasetError
from .estimator import EstimatorConfig, estimate
from .experiments import (
    DEFAULT_MARGINS,
    ExperimentError,
    dense_pairs,
    drop_one_university,
    dropped_schools_sweep,
    simulation_study,
)
from .metrics import margin_accuracy, rank_difference_histogram, rank_heatmap, spearman_rho, within_share
from .simulator import AssignmentError, SimulationParams, simulate
from .standardize import Mode

log = logging.getLogger("peakshift")

PATH_OPTIONS = ("data", "schools", "universities", "acceptance", "seeds_file", "truth", "estimated", "labels")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _add_dataset(p):
    p.add_argument("--data", help="directory holding schools.csv, universities.csv, acceptance.csv")
    p.add_argument("--schools")
    p.add_argument("--universities")
    p.add_argument("--acceptance")


def _add_estimator(p, repetitions=1000):
    p.add_argument("--seeds-file", required=True, help="seed (top) university ids, one per line")
    p.add_argument("--repetitions", type=int, default=repetitions)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.COLUMN_TOTAL.value)
    p.add_argument("--cumulative", action="store_true", help="select schools on all ranked universities")
    p.add_argument("--k-max", type=int, default=None)


def _add_simulation(p):
    d = SimulationParams()
    p.add_argument("--schools-count", type=int, default=d.school_count)
    p.add_argument("--students-per-school", type=int, default=d.students_per_school)
    p.add_argument("--universities-count", type=int, default=d.university_count)
    p.add_argument("--entrants", type=int, default=d.entrants_per_university)
    p.add_argument("--sigma-a", type=float, default=d.sigma_a)
    p.add_argument("--sigma-e", type=float, default=d.sigma_e)
    p.add_argument("--sigma-limit", type=float, default=d.school_sigma_limit)
    p.add_argument("--window", type=float, default=d.ability_window)
    p.add_argument("--max-retries", type=int, default=d.max_assignment_retries)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peakshift", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic admissions dataset")
    _add_simulation(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="estimate a difficulty ranking")
    _add_dataset(p)
    _add_estimator(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="compare an estimated ranking with the truth")
    p.add_argument("--estimated", required=True, help="ranking.csv")
    p.add_argument("--truth", required=True, help="truth.csv or universities.csv with true_rank")
    p.add_argument("--margins", type=_ints, default=list(DEFAULT_MARGINS))
    p.add_argument("--within", type=int, default=25)
    p.add_argument("--bin-width", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="robustness to randomly dropped schools")
    _add_dataset(p)
    _add_estimator(p)
    p.add_argument("--truth")
    p.add_argument("--ratios", type=_floats, default=[round(0.1 * i, 1) for i in range(10)])
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ablate", help="drop each university in turn")
    _add_dataset(p)
    _add_estimator(p)
    p.add_argument("--truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("cocluster", help="co-clustering network and communities")
    _add_dataset(p)
    _add_estimator(p)
    p.add_argument("--truth")
    p.add_argument("--labels", help="CSV university_id,label to annotate communities")
    p.add_argument("--min-weight", type=int, default=1)
    p.add_argument("--communities", type=int, default=None, help="target count (default: modularity peak)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("study", help="simulate and score many datasets")
    _add_simulation(p)
    p.add_argument("--n-datasets", type=int, default=1)
    p.add_argument("--repetitions", type=int, default=1000)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.COLUMN_TOTAL.value)
    p.add_argument("--margins", type=_ints, default=list(DEFAULT_MARGINS))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rerun", help="repeat the run recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def _params(args) -> SimulationParams:
    return SimulationParams(
        school_count=args.schools_count,
        students_per_school=args.students_per_school,
        sigma_a=args.sigma_a,
        sigma_e=args.sigma_e,
        school_sigma_limit=args.sigma_limit,
        university_count=args.universities_count,
        entrants_per_university=args.entrants,
        ability_window=args.window,
        rng_seed=args.seed,
        max_assignment_retries=args.max_retries,
    )


def _dataset(args):
    if args.data:
        return dio.load_dataset_dir(args.data)
    if not (args.schools and args.universities and args.acceptance):
        raise DatasetError("give --data or all of --schools, --universities, --acceptance")
    return dio.load_dataset(args.schools, args.universities, args.acceptance)


def _config(args) -> EstimatorConfig:
    return EstimatorConfig(
        seed_university_ids=dio.load_seeds(args.seeds_file),
        repetitions=args.repetitions,
        mode=args.mode,
        rng_seed=args.seed,
        k_max=args.k_max,
        cumulative=args.cumulative,
    )


def _truth(args, dataset):
    return dio.load_truth(args.truth) if getattr(args, "truth", None) else dataset.true_ranking()


def cmd_simulate(args, out: Path) -> list[Path]:
    sim = simulate(_params(args))
    dataset, dropped = sim.to_dataset()
    paths = dio.save_dataset(dataset, out)
    order = np.argsort(sim.true_ranks, kind="stable")
    uids = sim.university_ids
    paths.append(
        dio.write_csv(
            out / "truth.csv",
            ["university_id", "difficulty", "true_rank"],
            [(uids[j], dio.fmt(sim.difficulties[j]), int(sim.true_ranks[j])) for j in order],
        )
    )
    seeds = out / "seeds.txt"
    seeds.write_text(sim.top_university() + "\n", encoding="utf-8")
    paths.append(seeds)
    for name, matrix in (("candidates", sim.candidates), ("entrance", sim.entrance), ("acceptance", sim.acceptance)):
        paths.append(dio.save_dense(out / f"{name}_dense.csv", matrix, sim.school_ids, uids))
    if dropped:
        log.warning("left out universities without acceptances: %s", ", ".join(dropped))
    return paths


def cmd_estimate(args, out: Path) -> list[Path]:
    ranking, _ = estimate(_dataset(args), _config(args))
    return [dio.save_ranking(out / "ranking.csv", ranking)]


def cmd_evaluate(args, out: Path) -> list[Path]:
    ranking = dio.load_ranking(args.estimated)
    truth = dio.load_truth(args.truth)
    missing = [u for u in ranking.ids if u not in truth]
    if missing:
        raise DatasetError(f"true rank missing for {missing[:10]}")
    true, est = dense_pairs(ranking, truth)
    rho = spearman_rho(true, est)
    share = within_share(true, est, args.within)
    by_true = np.argsort(true, kind="stable")
    curves = {m: margin_accuracy(true, est, m) for m in args.margins}
    paths = [
        dio.write_csv(
            out / "metrics.csv",
            ["metric", "value"],
            [("spearman_rho", dio.fmt(rho)), (f"within_{args.within}", dio.fmt(share)), ("n", len(true))]
            + [(f"accuracy_margin_{m}", dio.fmt(curves[m][1])) for m in args.margins],
        ),
        dio.write_csv(
            out / "margin_accuracy.csv",
            ["true_rank", "university_id", "estimated_rank", *[f"margin_{m}" for m in args.margins]],
            [
                (int(true[i]), ranking.ids[i], int(est[i]), *[int(curves[m][0][pos]) for m in args.margins])
                for pos, i in enumerate(by_true)
            ],
        ),
        dio.write_csv(
            out / "histogram.csv",
            ["bin_lower", "count"],
            sorted(rank_difference_histogram(true, est, args.bin_width).items()),
        ),
    ]
    heat = rank_heatmap(true, est)
    paths.append(
        dio.write_csv(
            out / "heatmap.csv",
            ["true_rank", *[str(r + 1) for r in range(heat.shape[1])]],
            ([r + 1, *row.tolist()] for r, row in enumerate(heat)),
        )
    )
    print(f"spearman_rho={rho:.6f}")
    print(f"within_{args.within}={share:.6f}")
    return paths


def cmd_sweep(args, out: Path) -> list[Path]:
    dataset = _dataset(args)
    result = dropped_schools_sweep(dataset, _truth(args, dataset), args.ratios, _config(args), args.replicates, args.seed)
    cells = dio.write_csv(
        out / "sweep.csv",
        ["ratio", "replicate", "seed", "schools", "rho", "excluded"],
        [(c.ratio, c.replicate, c.seed, c.schools, dio.fmt(c.rho), ";".join(map(str, c.excluded))) for c in result.cells],
    )
    summary = dio.write_csv(
        out / "sweep_summary.csv",
        ["ratio", "mean_rho", "std_rho"],
        [(r, dio.fmt(m), dio.fmt(s)) for r, (m, s) in result.summary().items()],
    )
    return [cells, summary]


def cmd_ablate(args, out: Path) -> list[Path]:
    dataset = _dataset(args)
    result = drop_one_university(dataset, _truth(args, dataset), _config(args))
    rows = [(r.university_id, dio.fmt(r.rho), r.estimated_rank, r.true_rank, r.diff) for r in result.rows]
    return [
        dio.write_csv(out / "ablation.csv", ["university_id", "rho", "estimated_rank", "true_rank", "diff"], rows),
        dio.write_csv(out / "ablation_baseline.csv", ["metric", "value"], [("baseline_rho", dio.fmt(result.baseline_rho))]),
    ]


def cmd_cocluster(args, out: Path) -> list[Path]:
    dataset = _dataset(args)
    ranking, traces = estimate(dataset, _config(args))
    truth = _truth(args, dataset)
    labels = dio.load_labels(args.labels) if args.labels else {}
    graph = build_cocluster_graph(traces, dataset.university_ids)
    kept = threshold_edges(graph, args.min_weight)
    target = args.communities if args.communities is not None else "modularity"
    found = girvan_newman(kept, target, ranking.as_dict(), truth)
    paths = [
        dio.write_csv(out / "edges.csv", ["source", "target", "weight"], graph.edges_by_id()),
        dio.write_csv(out / "edges_thresholded.csv", ["source", "target", "weight"], kept.edges_by_id()),
    ]
    est = ranking.as_dict()
    rows = []
    for c, community in enumerate(found.communities, start=1):
        for uid in sorted(community.members, key=lambda u: est[u]):
            rows.append((c, uid, est[uid], "" if not truth or uid not in truth else truth[uid], labels.get(uid, "")))
    paths.append(
        dio.write_csv(out / "communities.csv", ["community", "university_id", "estimated_rank", "true_rank", "label"], rows)
    )
    paths.append(
        dio.write_csv(out / "community_summary.csv", ["metric", "value"],
                      [("modularity", dio.fmt(found.modularity)), ("communities", len(found.communities)),
                       ("removed_edges", found.removed_edges)])
    )
    return paths


def cmd_study(args, out: Path) -> list[Path]:
    params = _params(args)
    config = EstimatorConfig(seed_university_ids=("?",), repetitions=args.repetitions, mode=args.mode, rng_seed=args.seed)
    study, _ = simulation_study(params, args.n_datasets, config, args.margins, args.seed)
    paths = [
        dio.write_csv(out / "study_rho.csv", ["dataset", "sim_seed", "rho", "dropped"],
                      [(k, r.sim_seed, dio.fmt(r.rho), ";".join(r.dropped)) for k, r in enumerate(study.runs)]),
        dio.write_csv(
            out / "heatmap.csv",
            ["true_rank", *[str(r + 1) for r in range(study.heatmap.shape[1])]],
            ([r + 1, *row.tolist()] for r, row in enumerate(study.heatmap)),
        ),
        dio.write_csv(
            out / "margin_curves.csv",
            ["true_rank", *[f"margin_{m}" for m in study.margins]],
            ([r + 1, *[dio.fmt(study.curves[m][r]) for m in study.margins]] for r in range(study.heatmap.shape[0])),
        ),
    ]
    print(f"mean_rho={study.rhos.mean():.6f}")
    return paths


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
    "cocluster": cmd_cocluster,
    "study": cmd_study,
}


def _settings(args) -> dict:
    recorded = {}
    for k, v in sorted(vars(args).items()):
        if k in ("out", "verbose"):
            continue
        if k in PATH_OPTIONS and v is not None:
            v = str(Path(v).resolve())
        recorded[k] = v
    return recorded


def _run(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = COMMANDS[args.command](args, out)
    settings = _settings(args)
    dio.write_manifest(
        out / "manifest.txt",
        {"version": __version__, "command": args.command, "seed": settings.get("seed"),
         "args": json.dumps(settings, sort_keys=True)},
        paths,
    )
    return 0


def _replay(args) -> argparse.Namespace:
    manifest = dio.read_manifest(args.manifest)
    if "args" not in manifest:
        raise DatasetError(f"{args.manifest}: not a run manifest")
    recorded = json.loads(manifest["args"])
    return argparse.Namespace(**recorded, out=args.out, verbose=args.verbose)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "rerun":
            args = _replay(args)
        return _run(args)
    except (DatasetError, ExperimentError, AssignmentError, KeyError, ValueError, OSError) as exc:
        print(f"peakshift {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
