"""Batch pipeline driver: run curve scans and emit result tables.

Per geometry: ingest integrals, select a basis (VO or PT), optionally
optimize amplitudes and relax orbitals, build the subspace problem (exact
or finite-shot), compare against the exact-diagonalization reference, and
account sampling cost and circuit resources.  Outputs a curve CSV, a full
JSON report (deterministic for a fixed config and seed), and per-geometry
basis and cost files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import itertools
import json
import logging
import os
import re
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

from senqse.csfbasis import (
    default_selection_params,
    select_basis_pt,
    select_basis_vo,
    serialize_basis,
)
from senqse.fermion import jordan_wigner, load_fcidump, rotate_orbitals
from senqse.measure import allocate_and_score
from senqse.resources import estimate_pair
from senqse.solver import (
    SubspaceEngine,
    build_subspace,
    fci_oracle,
    ground_state,
    relax_orbitals,
    vo_optimize,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    fcidump_paths: tuple
    labels: tuple = ()
    method: str = "vo"  # vo | pt
    mode: str = "exact"  # exact | sampled
    shots: int = 100_000
    seed: int = 0
    eps1: float = 1e-4
    eps2: float = 1e-5
    n_active_occ: int = 3
    n_active_virt: int = 3
    root_window: float = 0.1
    relax_orbitals: bool = False
    constant_shift: bool = True
    taper: bool = True
    workers: int = 1
    out_dir: str = "runs"

    def __post_init__(self):
        if not self.fcidump_paths:
            raise ValueError("at least one FCIDUMP path is required")
        if self.method not in ("vo", "pt"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise ValueError("sampled mode needs shots >= 1")
        object.__setattr__(self, "fcidump_paths", tuple(self.fcidump_paths))
        labels = tuple(self.labels) or tuple(
            os.path.splitext(os.path.basename(p))[0] for p in self.fcidump_paths
        )
        if len(labels) != len(self.fcidump_paths):
            raise ValueError("labels must match fcidump_paths one to one")
        object.__setattr__(self, "labels", labels)


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def parse_config_file(path: str) -> dict:
    """Flat KEY=VALUE text; lists are comma separated, # starts a comment."""
    values: dict = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected KEY=VALUE, got {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            key = key.lower()
            if key in ("fcidump_paths", "labels"):
                values[key] = tuple(v.strip() for v in val.split(",") if v.strip())
            elif key in ("shots", "seed", "n_active_occ", "n_active_virt", "workers"):
                values[key] = int(val)
            elif key in ("eps1", "eps2", "root_window"):
                values[key] = float(val)
            elif key in ("relax_orbitals", "constant_shift", "taper"):
                values[key] = _BOOL[val.lower()]
            elif key in ("method", "mode", "out_dir"):
                values[key] = val
            else:
                raise ValueError(f"{path}:{ln}: unknown key {key!r}")
    return values


def bond_parameter(label: str, index: int) -> float:
    """Bond-length-like scan parameter: trailing float in the label, else index."""
    m = re.findall(r"\d+\.\d+", label)
    return float(m[-1]) if m else float(index)


def run_geometry(path: str, label: str, bond: float, config: RunConfig) -> dict:
    ints = load_fcidump(path)
    hq = jordan_wigner(ints)
    params = default_selection_params(
        ints,
        eps1=config.eps1,
        eps2=config.eps2,
        n_active_occ=config.n_active_occ,
        n_active_virt=config.n_active_virt,
        root_window=config.root_window,
    )
    if config.method == "vo":
        basis = select_basis_vo(ints, hq, params)
        basis, _, _ = vo_optimize(basis, hq, ints.n_elec)
    else:
        basis = select_basis_pt(ints, hq, params)

    relaxation = None
    if config.relax_orbitals:
        rot, e_relaxed, _ = relax_orbitals(basis, ints)
        ints = rotate_orbitals(ints, rot)
        hq = jordan_wigner(ints)
        relaxation = {"e_min": e_relaxed, "t_norm": float(np.linalg.norm(rot.t))}

    problem = build_subspace(
        basis,
        hq,
        ints.n_elec,
        mode=config.mode,
        shots=config.shots if config.mode == "sampled" else None,
        seed=config.seed if config.mode == "sampled" else None,
        taper=config.taper,
        constant_shift=config.constant_shift,
    )
    fci = fci_oracle(hq, ints.n_elec, 0.0)

    record = {
        "label": label,
        "bond": bond,
        "path": str(path),
        "method": config.method,
        "mode": config.mode,
        "n_orbitals": ints.n_orb,
        "n_electrons": ints.n_elec,
        "n_states": len(basis),
        "n_rotations_max": max((len(b.rotations) for b in basis), default=0),
        "e_min": problem.e_min,
        "e_fci": fci.energy,
        "error": problem.e_min - fci.energy,
        "hamiltonian_terms": hq.n_terms,
        "basis_text": serialize_basis(basis),
    }

    # sampling-cost accounting (needs the tapered machinery)
    if config.taper:
        exact = build_subspace(
            basis,
            hq,
            ints.n_elec,
            mode="exact",
            taper=True,
            constant_shift=config.constant_shift,
            compute_sigma=True,
        )
        _, c0 = ground_state(exact.hmat)
        report = allocate_and_score(
            exact.sigma,
            np.asarray(c0, dtype=float),
            exact.fragment_sigmas,
            system=label,
            bond=bond,
            method=config.method,
        )
        record["metric"] = report.metric
        record["cost_text"] = report.to_text()
        record["term_stats"] = tapering_stats(basis, hq, ints.n_elec)
    else:
        record["metric"] = None
        record["term_stats"] = {
            "avg_term_ratio": 1.0,
            "max_term_ratio": 1.0,
            "avg_norm_ratio": 1.0,
            "max_norm_ratio": 1.0,
            "original_terms": hq.n_terms,
        }
    if relaxation:
        record["relaxation"] = relaxation
    if problem.shots is not None:
        record["shots_total"] = int(sum(sum(v) for v in problem.shots.values()))

    # circuit resources over every distinct state pair
    costs = [
        estimate_pair(a, b, ints.n_orb, ints.n_elec)
        for a, b in itertools.combinations(basis, 2)
    ] or [estimate_pair(basis[0], basis[0], ints.n_orb, ints.n_elec)]
    record["cnots_avg"] = float(np.mean([c.cnots for c in costs]))
    record["cnots_max"] = int(max(c.cnots for c in costs))
    record["depth_avg"] = float(np.mean([c.depth for c in costs]))
    record["depth_max"] = int(max(c.depth for c in costs))
    return record


def tapering_stats(basis, hq, n_elec) -> dict:
    """Per-element tapered/original term-count and 1-norm ratios.

    Identity terms are excluded on both sides: they shift values without
    costing measurements.
    """
    engine = SubspaceEngine(basis, hq, n_elec, taper=True)
    n_full = sum(1 for (x, z), _ in hq.items() if (x, z) != (0, 0))
    norm_full = hq.one_norm(include_identity=False)
    term_ratios, norm_ratios = [], []
    for mu in range(engine.size):
        for nu in range(mu, engine.size):
            op = engine.xop(mu, nu)
            n_terms = sum(1 for (x, z), _ in op.items() if (x, z) != (0, 0))
            term_ratios.append(n_terms / n_full)
            norm_ratios.append(op.one_norm(include_identity=False) / norm_full)
    return {
        "avg_term_ratio": float(np.mean(term_ratios)),
        "max_term_ratio": float(np.max(term_ratios)),
        "avg_norm_ratio": float(np.mean(norm_ratios)),
        "max_norm_ratio": float(np.max(norm_ratios)),
        "original_terms": n_full,
    }


CSV_COLUMNS = [
    "bond",
    "label",
    "method",
    "mode",
    "n_states",
    "e_min",
    "e_fci",
    "error",
    "metric",
    "cnots_avg",
    "cnots_max",
    "depth_avg",
    "depth_max",
]


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run(config: RunConfig) -> dict:
    """Run every geometry, write outputs, and return the summary."""
    os.makedirs(config.out_dir, exist_ok=True)
    jobs = [
        (path, label, bond_parameter(label, idx))
        for idx, (path, label) in enumerate(zip(config.fcidump_paths, config.labels))
    ]
    records, failures = [], []
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(config.workers) as pool:
            futures = {
                pool.submit(run_geometry, path, label, bond, config): label
                for path, label, bond in jobs
            }
            results = {}
            for fut in concurrent.futures.as_completed(futures):
                label = futures[fut]
                try:
                    results[label] = fut.result()
                except Exception as exc:  # noqa: BLE001 - per-geometry isolation
                    log.error("geometry %s failed: %s", label, exc)
                    failures.append({"label": label, "error": str(exc)})
            records = [results[label] for _, label, _ in jobs if label in results]
    else:
        for path, label, bond in jobs:
            try:
                records.append(run_geometry(path, label, bond, config))
            except Exception as exc:  # noqa: BLE001 - per-geometry isolation
                log.error("geometry %s failed: %s", label, exc)
                failures.append({"label": label, "error": str(exc)})

    csv_path = os.path.join(config.out_dir, "results.csv")
    with open(csv_path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(_csv_cell(rec.get(col)) for col in CSV_COLUMNS) + "\n")

    for rec in records:
        stem = os.path.join(config.out_dir, rec["label"])
        with open(f"{stem}.basis.txt", "w") as fh:
            fh.write(rec.pop("basis_text"))
        cost_text = rec.pop("cost_text", None)
        if cost_text is not None:
            with open(f"{stem}.cost.txt", "w") as fh:
                fh.write(cost_text)

    report = {
        "config": asdict(config),
        "geometries": records,
        "failures": failures,
    }
    with open(os.path.join(config.out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="senqse",
        description="Seniority-symmetric subspace expansion over FCIDUMP inputs",
    )
    parser.add_argument("fcidump", nargs="*", help="FCIDUMP files, one per geometry")
    parser.add_argument("--config", help="flat KEY=VALUE config file")
    parser.add_argument("--method", choices=("vo", "pt"))
    parser.add_argument("--mode", choices=("exact", "sampled"))
    parser.add_argument("--shots", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", dest="out_dir")
    parser.add_argument("--eps1", type=float)
    parser.add_argument("--eps2", type=float)
    parser.add_argument("--root-window", dest="root_window", type=float)
    parser.add_argument("--active-occ", dest="n_active_occ", type=int)
    parser.add_argument("--active-virt", dest="n_active_virt", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument(
        "--no-taper", dest="taper", action="store_false", default=None
    )
    parser.add_argument(
        "--no-constant-shift",
        dest="constant_shift",
        action="store_false",
        default=None,
    )
    parser.add_argument(
        "--relax-orbitals", dest="relax_orbitals", action="store_true", default=None
    )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(args.config))
    if args.fcidump:
        values["fcidump_paths"] = tuple(args.fcidump)
    for key in (
        "method",
        "mode",
        "shots",
        "seed",
        "out_dir",
        "eps1",
        "eps2",
        "root_window",
        "n_active_occ",
        "n_active_virt",
        "workers",
        "taper",
        "constant_shift",
        "relax_orbitals",
    ):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    return RunConfig(**values)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run(config)
    for rec in report["geometries"]:
        print(
            f"{rec['label']}: e_min={rec['e_min']:.8f} "
            f"e_fci={rec['e_fci']:.8f} error={rec['error']:+.3e}"
        )
    for failure in report["failures"]:
        print(f"{failure['label']}: FAILED ({failure['error']})", file=sys.stderr)
    if report["failures"] and not report["geometries"]:
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
