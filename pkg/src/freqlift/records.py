"""On-disk record formats: JSON-lines for bulk records, JSON for the model,
CSV for tabular reports.

Every JSONL file starts with one meta line carrying the schema name,
schema version, and a timestamp; every CSV starts with a '# generated'
comment line.  Those header lines are the only run-to-run difference for
identical inputs, so byte comparison modulo the first line is the
determinism contract.  Floats are serialized with repr (shortest
round-trip), circle points via circle.encode, so reloading is exact.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from . import circle
from .lifting import CompositeLink, Configuration, LinkRecord, ModulationModel

SCHEMA_VERSION = 1


def _timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def _canon(obj):
    """JSON-safe canonical form: floats via repr, circle points encoded."""
    if isinstance(obj, circle.CirclePoint):
        return {"circle": circle.encode(obj)}
    if isinstance(obj, float):
        return obj
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_canon(obj), sort_keys=True, separators=(",", ":"))


def write_jsonl(path: Path, schema: str, records) -> None:
    with open(path, "w") as f:
        meta = {"schema": schema, "version": SCHEMA_VERSION, "generated": _timestamp()}
        f.write(json.dumps(meta, sort_keys=True) + "\n")
        for rec in records:
            f.write(_dump(rec) + "\n")


def read_jsonl(path: Path, schema: str) -> list:
    with open(path) as f:
        meta = json.loads(f.readline())
        if meta.get("schema") != schema:
            raise ValueError(f"{path}: expected schema {schema}, got {meta.get('schema')}")
        return [json.loads(line) for line in f if line.strip()]


# -- configurations ----------------------------------------------------------


def configuration_records(cfg: Configuration):
    yield {
        "kind": "header", "level": cfg.level, "lo": cfg.lo, "hi": cfg.hi,
        "separation": cfg.separation, "c": cfg.c, "meta": cfg.meta,
    }
    for i, (x, alpha) in enumerate(cfg.entries):
        yield {"kind": "entry", "i": i, "x": x, "alpha": circle.encode(alpha)}


def write_configuration(path: Path, cfg: Configuration) -> None:
    write_jsonl(path, "freqlift/configuration", configuration_records(cfg))


def read_configuration(path: Path) -> Configuration:
    recs = read_jsonl(path, "freqlift/configuration")
    head = recs[0]
    entries = tuple(
        (r["x"], circle.decode(r["alpha"])) for r in recs[1:] if r["kind"] == "entry"
    )
    return Configuration(
        level=head["level"], lo=head["lo"], hi=head["hi"],
        separation=head["separation"], entries=entries, c=head["c"],
        meta=head.get("meta", {}),
    )


# -- links --------------------------------------------------------------------


def write_links(path: Path, links) -> None:
    def recs():
        for l in links:
            r = {"p": l.p, "source": l.source, "target": l.target,
                 "pos_residual": l.pos_residual, "phase_residual": l.phase_residual}
            if isinstance(l, CompositeLink):
                r["source_pos"] = l.source_pos
            yield r

    write_jsonl(path, "freqlift/links", recs())


def read_links(path: Path) -> list:
    out = []
    for r in read_jsonl(path, "freqlift/links"):
        if "source_pos" in r:
            out.append(CompositeLink(
                p=r["p"], source=r["source"], target=r["target"],
                pos_residual=r["pos_residual"], phase_residual=r["phase_residual"],
                source_pos=r["source_pos"],
            ))
        else:
            out.append(LinkRecord(
                p=r["p"], source=r["source"], target=r["target"],
                pos_residual=r["pos_residual"], phase_residual=r["phase_residual"],
            ))
    return out


# -- model and reports ----------------------------------------------------------


def write_model(path: Path, model: ModulationModel, extra: dict | None = None) -> None:
    doc = {
        "schema": "freqlift/model",
        "version": SCHEMA_VERSION,
        "a": model.a, "Q": model.Q, "T": model.T,
        "anchor": model.anchor, "quality": model.quality,
        "detail": _canon(model.entry_products),
    }
    if extra:
        doc.update(_canon(extra))
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True, indent=1)
        f.write("\n")


def read_model(path: Path) -> tuple[ModulationModel, dict]:
    with open(path) as f:
        doc = json.load(f)
    detail = doc.get("detail", {})
    if "per_entry" in detail:
        detail["per_entry"] = {int(k): v for k, v in detail["per_entry"].items()}
    model = ModulationModel(
        a=doc["a"], Q=doc["Q"], T=doc["T"], anchor=doc["anchor"],
        quality=doc["quality"], entry_products=detail,
    )
    return model, doc


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as f:
        f.write(f"# generated {_timestamp()}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def files_equal_modulo_header(a: Path, b: Path) -> bool:
    """Byte equality after dropping each file's first line."""
    la = a.read_bytes().split(b"\n", 1)
    lb = b.read_bytes().split(b"\n", 1)
    return la[1:] == lb[1:]
