"""JSON formats for templates, instances, assignments, and the bundled corpus."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Mapping

from .csp import CosetTemplate, Instance
from .groups import group_from_spec, group_to_spec

CORPUS_ENV = "COSETCSP_CORPUS"


def corpus_dir() -> Path:
    env = os.environ.get(CORPUS_ENV)
    if env:
        return Path(env)
    return Path(__file__).resolve().parent / "corpus"


def resolve(ref) -> Path:
    """Map a corpus name (``"T3"``, ``"witness_T3"``) or a path to a file path."""
    p = Path(ref)
    if p.suffix == ".json" and p.exists():
        return p
    cand = corpus_dir() / (p.name if p.suffix == ".json" else f"{ref}.json")
    if cand.exists():
        return cand
    if p.exists():
        return p
    raise FileNotFoundError(f"no file or corpus entry named {ref!r}")


def read_json(ref) -> dict:
    if isinstance(ref, Mapping):
        return dict(ref)
    with open(resolve(ref)) as f:
        return json.load(f)


def template_from_json(d: Mapping) -> CosetTemplate:
    carriers = {}
    for spec in d["carriers"]:
        g = group_from_spec(spec)
        carriers[g.label] = g
    rels = [(name, r["signature"], [tuple(t) for t in r["tuples"]]) for name, r in d["relations"].items()]
    return CosetTemplate(carriers, rels, add_identities=False)


def template_to_json(t: CosetTemplate, include_all: bool = False) -> dict:
    """Base relations only, or every materialized relation with ``include_all``."""
    names = list(t.relations) if include_all else t.base_names
    return {
        "carriers": [group_to_spec(g) for g in t.carriers.values()],
        "relations": {
            name: {
                "signature": list(t.relations[name].signature),
                "tuples": [list(m) for m in t.relations[name].coset.members],
            }
            for name in names
        },
    }


def load_template(ref) -> CosetTemplate:
    if isinstance(ref, CosetTemplate):
        return ref
    return template_from_json(read_json(ref))


def instance_from_json(d: Mapping) -> Instance:
    return Instance(d["elements"], [(c["rel"], tuple(c["args"])) for c in d["constraints"]])


def instance_to_json(inst: Instance) -> dict:
    return {
        "elements": list(inst.elements),
        "constraints": [{"rel": c.rel, "args": list(c.args)} for c in inst.constraints],
    }


def load_instance(ref) -> Instance:
    if isinstance(ref, Instance):
        return ref
    return instance_from_json(read_json(ref))


def assignment_from_json(d: Mapping) -> dict:
    return {k: int(v) for k, v in d["values"].items()}


def assignment_to_json(h: Mapping, inst: Instance | None = None) -> dict:
    keys = [e for e in inst.elements if e in h] if inst is not None else list(h)
    return {"values": {k: int(h[k]) for k in keys}}


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=False, separators=(",", ": "))


def load_problem(instance_ref, template_ref=None) -> tuple[Instance, CosetTemplate]:
    """Load an instance with its template.

    The template defaults to the instance file's ``"template"`` field.
    """
    d = read_json(instance_ref)
    if template_ref is None:
        if "template" not in d:
            raise KeyError("instance names no template; pass one explicitly")
        template_ref = d["template"]
    return instance_from_json(d), load_template(template_ref)


def load_adp(ref, node_cap: int | None = None):
    """An almost-direct product from a file.

    Files with ``"tuples"`` give R directly over the named template;
    witness instances (with an ``"anomaly"``) are run through the
    anomaly pipeline.
    """
    from .anomaly import adp_from_subgroup, helly_pipeline

    d = read_json(ref)
    t = load_template(d["template"])
    if "tuples" in d:
        return adp_from_subgroup(t, d["signature"], d["tuples"], S=d.get("S"), source=str(ref))
    inst = instance_from_json(d)
    anomaly = assignment_from_json(d["anomaly"]) if "anomaly" in d else None
    kw = {} if node_cap is None else {"node_cap": node_cap}
    adp = helly_pipeline(t, inst, anomaly, **kw)
    if adp is not None:
        adp.source = str(ref)
    return adp
