"""Command-line front door: validate / sdm / audit / synth / gap.

Runs are driven by a single TOML config file; all outputs are JSON and carry
the config hash and toolkit version. Exit codes: 0 success, 1 validation
error, 2 runtime error.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, audit, dataio, gmm, reducer, slicer, synth
from .errors import SliceKitError

log = logging.getLogger("slicekit")


def _setup_logging():
    level = os.environ.get("SLICEKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _config_hash(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_config(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve(base, p):
    p = Path(p)
    return p if p.is_absolute() else Path(base).parent / p


def _load_bundle(cfg, config_path):
    paths = cfg["paths"]
    schema = dataio.load_schema(_resolve(config_path, paths["schema"]))
    emb = dataio.load_embeddings(_resolve(config_path, paths["embeddings"]))
    records, n_unknown = dataio.load_metadata(
        _resolve(config_path, paths["metadata"]), schema
    )
    if n_unknown:
        log.warning("%d attribute values mapped to unknown", n_unknown)
    if cfg.get("dedup", {}).get("one_per_patient", False):
        records = dataio.select_one_per_patient(records)
        keep = {r.sample_id for r in records}
        rows = [i for i, sid in enumerate(emb.sample_ids) if sid in keep]
        emb = dataio.EmbeddingMatrix(
            values=emb.values[rows],
            sample_ids=[emb.sample_ids[i] for i in rows],
        )
    return dataio.build_dataset(emb, records, schema)


def _module_configs(cfg, seed_override=None):
    seed = cfg.get("seed", 0) if seed_override is None else seed_override
    split_opts = {k: v for k, v in cfg.get("split", {}).items() if k != "n_resamples"}
    split = dataio.SplitSpec(**{"seed": seed, **split_opts})
    train = reducer.TrainConfig(**{"seed": seed, **cfg.get("train", {})})
    fit = gmm.FitConfig(**{"seed": seed, **cfg.get("fit", {})})
    boot = slicer.BootstrapConfig(**{"seed": seed, **cfg.get("bootstrap", {})})
    return seed, split, train, fit, boot


def _provenance(config_path):
    return {"config_hash": _config_hash(config_path), "version": __version__}


def cmd_validate(args):
    errors = []
    try:
        cfg = _load_config(args.config)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        _emit({"errors": [{"kind": type(exc).__name__, "detail": str(exc)}]})
        return 1
    paths = cfg.get("paths", {})
    schema, emb, records = None, None, None
    for key in ("embeddings", "metadata", "schema"):
        if key not in paths:
            errors.append({"kind": "MissingPath", "detail": key})
    if not errors:
        try:
            schema = dataio.load_schema(_resolve(args.config, paths["schema"]))
        except (OSError, json.JSONDecodeError) as exc:
            errors.append({"kind": type(exc).__name__, "detail": str(exc)})
        try:
            emb = dataio.load_embeddings(_resolve(args.config, paths["embeddings"]))
        except (SliceKitError, OSError) as exc:
            errors.append({"kind": type(exc).__name__, "detail": str(exc)})
        if schema is not None:
            try:
                records, _ = dataio.load_metadata(
                    _resolve(args.config, paths["metadata"]), schema
                )
            except (SliceKitError, OSError, ValueError) as exc:
                errors.append({"kind": type(exc).__name__, "detail": str(exc)})
        if emb is not None and records is not None:
            try:
                dataio.build_dataset(emb, records, schema)
            except SliceKitError as exc:
                errors.append({"kind": type(exc).__name__, "detail": str(exc)})
    _emit({"errors": errors, **_provenance(args.config)})
    print(f"{len(errors)} errors", file=sys.stderr)
    return 0 if not errors else 1


def _run_one_seed(dataset, cfg, config_path, seed):
    _, split, train, fit, boot = _module_configs(cfg, seed_override=seed)
    train_idx, _, test_idx = dataio.make_split(dataset, split)
    report = slicer.run_sdm(dataset, train_idx, test_idx, train, fit, boot)
    report["seed"] = seed
    report.update(_provenance(config_path))
    return report


def cmd_sdm(args):
    cfg = _load_config(args.config)
    dataset = _load_bundle(cfg, args.config)
    base_seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    n_resamples = cfg.get("split", {}).get("n_resamples", 1)
    out_dir = Path(args.output or cfg["paths"].get("output", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    seeds = [base_seed + i for i in range(n_resamples)]
    with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
        reports = list(
            pool.map(lambda s: _run_one_seed(dataset, cfg, args.config, s), seeds)
        )

    for seed, report in zip(seeds, reports):
        (out_dir / f"sdm_seed{seed:04d}.json").write_text(
            slicer.report_to_json(report)
        )
    aggregate = {
        "seeds": seeds,
        "per_seed": [
            {
                "seed": r["seed"],
                "best": {s: r["strata"][s]["best"] for s in r["strata"]},
                "worst": {s: r["strata"][s]["worst"] for s in r["strata"]},
            }
            for r in reports
        ],
        **_provenance(args.config),
    }
    (out_dir / "sdm_aggregate.json").write_text(slicer.report_to_json(aggregate))
    print(f"wrote {len(reports)} reports to {out_dir}", file=sys.stderr)
    return 0


def cmd_audit(args):
    cfg = _load_config(args.config)
    dataset = _load_bundle(cfg, args.config)
    audit_cfg = cfg.get("audit", {})
    group_attr = audit_cfg.get("group_attr", "sex")
    balance_attr = audit_cfg.get("balance_attr")
    metric = audit_cfg.get("metric", "auroc")
    comp_attrs = audit_cfg.get("composition_attrs", [])
    conf_attrs = audit_cfg.get("confidence_attrs", [])

    report_dir = Path(args.report)
    report_files = sorted(report_dir.glob("sdm_seed*.json"))
    if not report_files:
        print(f"no sdm_seed*.json reports in {report_dir}", file=sys.stderr)
        return 2

    index = dataset.index_of()
    per_seed = []
    gap_values = {}  # group -> list over seeds (unbalanced)
    gap_values_balanced = {}
    for path in report_files:
        rep = json.loads(path.read_text())
        seed = rep["seed"]
        eval_idx = np.array([index[sid] for sid in rep["eval_sample_ids"]])
        rows = audit.group_metric(dataset, eval_idx, group_attr, metric)
        entry = {
            "seed": seed,
            "group_metrics": [vars(r) for r in rows],
        }
        for r in rows:
            if r.value is not None:
                gap_values.setdefault(r.group, []).append(r.value)
        if balance_attr:
            plan = audit.balanced_resample(
                dataset, eval_idx, group_attr, balance_attr, seed
            )
            balanced_rows = audit.group_metric(
                dataset, plan.kept_indices, group_attr, metric
            )
            entry["balanced_group_metrics"] = [vars(r) for r in balanced_rows]
            entry["balance_plan"] = {
                "kept_sample_ids": [
                    dataset.records[i].sample_id for i in plan.kept_indices
                ],
                "targets": {
                    f"{label},{group}": t
                    for (label, group), t in sorted(plan.targets.items())
                },
                "n_excluded_unknown": plan.n_excluded_unknown,
            }
            for r in balanced_rows:
                if r.value is not None:
                    gap_values_balanced.setdefault(r.group, []).append(r.value)
        if comp_attrs:
            entry["composition"] = {}
            for stratum, sdata in rep["strata"].items():
                for role in ("best", "worst"):
                    cid = sdata[role]
                    if cid is None:
                        continue
                    members = sdata["slices"][cid]["member_sample_ids"]
                    entry["composition"][f"{stratum}/{role}"] = audit.slice_composition(
                        dataset, members, comp_attrs
                    )
        if conf_attrs:
            entry["confidence_summaries"] = audit.confidence_by_attribute(
                dataset, eval_idx, conf_attrs
            )
        per_seed.append(entry)

    out = {"per_seed": per_seed, "group_attr": group_attr, "metric": metric,
           **_provenance(args.config)}
    groups = sorted(gap_values)
    if len(groups) == 2:
        res = audit.gap_significance(gap_values[groups[0]], gap_values[groups[1]])
        out["gap_test_unbalanced"] = vars(res)
        out["gap_test_unbalanced"]["groups"] = groups
    if balance_attr and len(sorted(gap_values_balanced)) == 2:
        g = sorted(gap_values_balanced)
        res = audit.gap_significance(
            gap_values_balanced[g[0]], gap_values_balanced[g[1]]
        )
        out["gap_test_balanced"] = vars(res)
        out["gap_test_balanced"]["groups"] = g

    out_dir = Path(args.output or cfg["paths"].get("output", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "audit.json").write_text(slicer.report_to_json(out))
    print(f"wrote audit report to {out_dir / 'audit.json'}", file=sys.stderr)
    return 0


def _parse_synth_spec(obj):
    kind = obj.get("kind")
    if kind == "planted":
        clusters = [
            synth.PlantedCluster(
                center=c["center"],
                scale=c.get("scale", 1.0),
                size=c["size"],
                label=c["label"],
                error_rate=c.get("error_rate", 0.0),
            )
            for c in obj.get("clusters", [])
        ]
        return synth.PlantedSpec(
            dim=obj["dim"],
            clusters=clusters,
            seed=obj.get("seed", 0),
            confidence_noise=obj.get("confidence_noise", 0.05),
        )
    if kind == "shortcut":
        prevalence = {}
        for key, value in obj.get("prevalence", {}).items():
            group, label = key.split(",")
            prevalence[(group, int(label))] = value
        base = {}
        for key, value in obj.get("confidence_base", {}).items():
            label, state = key.split(",")
            base[(int(label), state == "present")] = value
        spec = synth.ShortcutSpec(
            group_sizes=dict(obj["groups"]),
            prevalence=prevalence,
            positive_rate=obj.get("positive_rate", 0.5),
            confidence_noise=obj.get("confidence_noise", 0.05),
            dim=obj.get("dim", 8),
            separation=obj.get("separation", 4.0),
            seed=obj.get("seed", 0),
        )
        if base:
            spec.confidence_base = base
        return spec
    raise synth.InvalidSpec(f"unknown synth kind {kind!r}")


def cmd_synth(args):
    with open(args.spec, "rb") as fh:
        obj = tomllib.load(fh)
    spec = _parse_synth_spec(obj)
    if args.seed is not None:
        spec.seed = args.seed
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    if isinstance(spec, synth.PlantedSpec):
        dataset, membership = synth.generate_planted(spec)
        truth = {sid: ci for ci, sids in membership.items() for sid in sids}
    else:
        dataset = synth.generate_shortcut(spec)
        truth = {
            r.sample_id: f"{r.label},{r.attributes['shortcut']}"
            for r in dataset.records
        }
    dataio.save_embeddings(out_dir / "embeddings.sdm1", dataset.embeddings)
    dataio.save_metadata(out_dir / "metadata.csv", dataset.records,
                         dataset.attribute_schema)
    (out_dir / "schema.json").write_text(
        json.dumps(dataset.attribute_schema, sort_keys=True, indent=2) + "\n"
    )
    (out_dir / "ground_truth.json").write_text(
        json.dumps(truth, sort_keys=True, separators=(",", ":")) + "\n"
    )
    print(f"wrote bundle to {out_dir}", file=sys.stderr)
    return 0


def cmd_gap(args):
    def read_column(path):
        values = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line.split(",")[-1]))
            except ValueError:
                continue  # header line
        return values

    a = read_column(args.csv_a)
    b = read_column(args.csv_b)
    res = audit.gap_significance(a, b)
    _emit(vars(res))
    return 0


def _emit(obj):
    print(json.dumps(obj, sort_keys=True, indent=2))


def build_parser():
    parser = argparse.ArgumentParser(prog="slicekit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        return p

    p = add("validate", cmd_validate)
    p.add_argument("--config", required=True)

    p = add("sdm", cmd_sdm)
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output")

    p = add("audit", cmd_audit)
    p.add_argument("--config", required=True)
    p.add_argument("--report", required=True, help="directory with sdm reports")
    p.add_argument("--output")

    p = add("synth", cmd_synth)
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", required=True)

    p = add("gap", cmd_gap)
    p.add_argument("csv_a")
    p.add_argument("csv_b")
    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SliceKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.exception("runtime failure")
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
