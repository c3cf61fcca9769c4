"""CSV formats and run manifests.

All files are UTF-8, comma separated, with a header row:

schools.csv       school_id, student_count
universities.csv  university_id, entrant_count, true_rank (may be blank)
acceptance.csv    school_id, university_id, count   (absent pairs are 0)
truth.csv         university_id, difficulty, true_rank
ranking.csv       university_id, mean_rank, final_rank
dense matrices    school_id, <one column per university id>
"""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import Dataset, DatasetError, HighSchool, Ranking, University, build_dataset

SCHOOLS = "schools.csv"
UNIVERSITIES = "universities.csv"
ACCEPTANCE = "acceptance.csv"


def _rows(path) -> tuple[list[str], list[dict]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetError(f"{path}: empty file")
        return list(reader.fieldnames), list(reader)


def _need(path, header, columns):
    missing = [c for c in columns if c not in header]
    if missing:
        raise DatasetError(f"{path}: missing column(s) {', '.join(missing)}")


def _int(path, line, column, text) -> int:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise DatasetError(f"{path} line {line}: {column}={text!r} is not a number") from None
    if not value.is_integer():
        raise DatasetError(f"{path} line {line}: {column}={text!r} is not an integer")
    return int(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def fmt(x: float) -> str:
    return repr(float(x))


def load_dataset(schools_csv, universities_csv, acceptance_csv) -> Dataset:
    """Read the three dataset files; row and column order follow the id files."""
    header, rows = _rows(schools_csv)
    _need(schools_csv, header, ["school_id", "student_count"])
    schools = [
        HighSchool(r["school_id"], _int(schools_csv, n, "student_count", r["student_count"]))
        for n, r in enumerate(rows, start=2)
    ]

    header, rows = _rows(universities_csv)
    _need(universities_csv, header, ["university_id", "entrant_count"])
    universities = []
    for n, r in enumerate(rows, start=2):
        rank = (r.get("true_rank") or "").strip()
        universities.append(
            University(
                r["university_id"],
                _int(universities_csv, n, "entrant_count", r["entrant_count"]),
                _int(universities_csv, n, "true_rank", rank) if rank else None,
            )
        )

    s_index = {s.id: i for i, s in enumerate(schools)}
    u_index = {u.id: j for j, u in enumerate(universities)}
    if len(s_index) != len(schools):
        raise DatasetError(f"{schools_csv}: duplicate school id")
    if len(u_index) != len(universities):
        raise DatasetError(f"{universities_csv}: duplicate university id")
    counts = np.zeros((len(schools), len(universities)), dtype=np.int64)
    seen = set()
    header, rows = _rows(acceptance_csv)
    _need(acceptance_csv, header, ["school_id", "university_id", "count"])
    for n, r in enumerate(rows, start=2):
        sid, uid = r["school_id"], r["university_id"]
        if sid not in s_index:
            raise DatasetError(f"{acceptance_csv} line {n}: unknown school id {sid!r}")
        if uid not in u_index:
            raise DatasetError(f"{acceptance_csv} line {n}: unknown university id {uid!r}")
        if (sid, uid) in seen:
            raise DatasetError(f"{acceptance_csv} line {n}: duplicate pair ({sid!r}, {uid!r})")
        seen.add((sid, uid))
        counts[s_index[sid], u_index[uid]] = _int(acceptance_csv, n, "count", r["count"])
    return build_dataset(schools, universities, counts)


def load_dataset_dir(directory) -> Dataset:
    d = Path(directory)
    return load_dataset(d / SCHOOLS, d / UNIVERSITIES, d / ACCEPTANCE)


def save_dataset(dataset: Dataset, directory) -> list[Path]:
    d = Path(directory)
    paths = [
        write_csv(d / SCHOOLS, ["school_id", "student_count"], [(s.id, s.student_count) for s in dataset.schools]),
        write_csv(
            d / UNIVERSITIES,
            ["university_id", "entrant_count", "true_rank"],
            [(u.id, u.entrant_count, "" if u.true_rank is None else u.true_rank) for u in dataset.universities],
        ),
    ]
    sids, uids = dataset.school_ids, dataset.university_ids
    cells = np.argwhere(dataset.acceptance > 0)
    paths.append(
        write_csv(
            d / ACCEPTANCE,
            ["school_id", "university_id", "count"],
            [(sids[i], uids[j], int(dataset.acceptance[i, j])) for i, j in cells],
        )
    )
    return paths


def save_dense(path, matrix: np.ndarray, row_ids: Sequence, col_ids: Sequence) -> Path:
    return write_csv(
        path,
        ["school_id", *col_ids],
        ([rid, *map(int, row)] for rid, row in zip(row_ids, matrix)),
    )


def load_seeds(path) -> list[str]:
    """One university id per line; blank lines and # comments ignored."""
    ids = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            ids.append(line)
    if not ids:
        raise DatasetError(f"{path}: no seed universities listed")
    return ids


def save_ranking(path, ranking: Ranking) -> Path:
    scores = ranking.scores or [float(r) for r in ranking.ranks]
    rows = sorted(zip(ranking.ids, scores, ranking.ranks), key=lambda r: r[2])
    return write_csv(path, ["university_id", "mean_rank", "final_rank"], [(u, fmt(s), r) for u, s, r in rows])


def load_ranking(path) -> Ranking:
    header, rows = _rows(path)
    _need(path, header, ["university_id", "final_rank"])
    ids = tuple(r["university_id"] for r in rows)
    ranks = tuple(_int(path, n, "final_rank", r["final_rank"]) for n, r in enumerate(rows, start=2))
    scores = tuple(float(r["mean_rank"]) for r in rows) if "mean_rank" in header else None
    return Ranking(ids, ranks, scores)


def load_truth(path) -> dict[str, int]:
    """University id -> true rank from a truth.csv or universities.csv."""
    header, rows = _rows(path)
    _need(path, header, ["university_id", "true_rank"])
    out = {}
    for n, r in enumerate(rows, start=2):
        text = (r["true_rank"] or "").strip()
        if text:
            out[r["university_id"]] = _int(path, n, "true_rank", text)
    return out


def load_labels(path) -> dict[str, str]:
    header, rows = _rows(path)
    _need(path, header, ["university_id", "label"])
    return {r["university_id"]: r["label"] for r in rows}


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, settings: dict, outputs: Sequence[Path]) -> Path:
    """Flat ``key=value`` file: settings, then a content hash per output."""
    lines = [f"{k}={v}" for k, v in settings.items()]
    for p in sorted(Path(o) for o in outputs):
        lines.append(f"sha256.{p.name}={sha256(p)}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out
