"""From reasoning paths to exported question/answer records."""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from geogen.deduction.chase import ChaseLimits
from geogen.deduction.state import Fact, State
from geogen.errors import GatewayError, GeoError, NoEligibleTarget, UnsatisfiedAfterRetries
from geogen.formal.expr import Equation
from geogen.formal.registry import Registry, core_registry, load_registry
from geogen.gateway import CompletionRequest, Gateway
from geogen.plotter.diagram import Diagram, SynthConfig
from geogen.plotter.render import render_png, render_svg
from geogen.plotter.synth import synthesize
from geogen.qa.templates import Templates, default_templates
from geogen.targets import NUMERIC, RELATION, ReasoningPath, TargetFilter, build_path, prepare_problem, select_targets

log = logging.getLogger(__name__)

VARIANTS = ("a", "b", "c")
SYNTH, EXPAND = "synth", "expand"

TRANSCRIBE_PROMPT_VERSION = "1"
TRANSCRIBE_SYSTEM = (
    "Rewrite each line of a geometry solution as fluent English. Keep every number, point name and "
    "theorem. Return exactly one line per input line and nothing else."
)
TRANSCRIBE_EXEMPLAR = (
    "Since D is the midpoint of AB, by the midpoint property, AD = BD.",
    "D is the midpoint of AB, so the midpoint property gives AD = BD.",
)


# -- records ------------------------------------------------------------------

@dataclass
class QAPair:
    id: str
    image: str
    question: str
    solution_nl: list[str]
    solution_formal: list[dict]
    answer: str
    meta: dict
    figure_description: str | None = None

    def __post_init__(self):
        if len(self.solution_nl) != len(self.solution_formal):
            raise ValueError("solution_nl and solution_formal must have equal length")

    @property
    def signature(self) -> str:
        return self.meta["signature"]

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["figure_description"] is None:
            del d["figure_description"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "QAPair":
        return cls(d["id"], d["image"], d["question"], list(d["solution_nl"]), list(d["solution_formal"]),
                   d["answer"], dict(d["meta"]), d.get("figure_description"))


@dataclass
class Drafts:
    steps: list[str]
    target: str       # rendered target fact (or measure, for numeric targets)
    givens: list[str]  # rendered given equations the path uses


def templatize(path: ReasoningPath, templates: Templates) -> Drafts:
    steps = [templates.step_text(s) for s in path.steps]
    if path.kind == NUMERIC:
        target = templates.expr_text(path.target.text.split("=")[0])
    else:
        target = templates.fact_text(path.target)
    givens = [templates.fact_text(g) for g in path.givens if isinstance(g, Equation)]
    return Drafts(steps, target, givens)


def transcribe(drafts: Sequence[str], gateway: Gateway, request_id: str = "") -> list[str]:
    """One polished line per draft; raises GatewayError on a count mismatch."""
    if not drafts:
        return []
    req = CompletionRequest("\n".join(drafts), TRANSCRIBE_SYSTEM, TRANSCRIBE_EXEMPLAR, request_id)
    resp = gateway.complete(req)
    lines = [ln.strip() for ln in resp.text.strip().splitlines() if ln.strip()]
    if len(lines) != len(drafts):
        raise GatewayError(f"transcription returned {len(lines)} lines for {len(drafts)} steps")
    return lines


def figure_description(diagram: Diagram, templates: Templates, registry: Registry) -> str:
    facts: list[Fact] = [registry.parse_literal(t) for t in diagram.literals]
    facts += [Equation.parse(t) for t in diagram.givens]
    return " ".join(_sentence(templates.fact_text(f)) for f in facts)


def _sentence(text: str) -> str:
    return text[0].upper() + text[1:] + "."


def make_questions(path: ReasoningPath, diagram: Diagram, modes: Iterable[str], templates: Templates,
                   registry: Registry, *, image: str, key: str, seed: int, source: str = SYNTH,
                   steps_nl: list[str] | None = None) -> list[QAPair]:
    """Variants (a) described figure, (b) target only, (c) proof-style.

    (a) and (b) apply to numeric targets, (c) to relation targets.
    """
    drafts = templatize(path, templates)
    nl = steps_nl if steps_nl is not None else drafts.steps
    formal = [s.to_dict() for s in path.steps]
    meta = {"signature": path.signature, "depth": path.depth, "source": source, "seed": seed}
    desc = figure_description(diagram, templates, registry)
    out = []
    for v in sorted(set(modes)):
        if v not in VARIANTS:
            raise ValueError(f"unknown question variant {v!r}")
        fd = None
        if path.kind == NUMERIC and v == "a":
            q, fd = f"{desc} Find {drafts.target}.", desc
        elif path.kind == NUMERIC and v == "b":
            given = f"given {'; '.join(drafts.givens)}, " if drafts.givens else ""
            q = f"In the figure, {given}find {drafts.target}."
        elif path.kind == RELATION and v == "c":
            q, fd = f"{desc} Prove that {drafts.target}.", desc
        else:
            continue
        out.append(QAPair(f"{key}{v}", image, q, list(nl), formal, path.answer, dict(meta), fd))
    return out


def dedup_and_cap(pairs: Iterable[QAPair], cap: int = 400) -> list[QAPair]:
    """Drop exact (question, answer, image) repeats, then keep at most ``cap``
    records per signature, earliest by (seed, id)."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    ordered = sorted(pairs, key=lambda p: (p.meta["seed"], p.id))
    seen: set[tuple] = set()
    per_sig: Counter = Counter()
    out = []
    for p in ordered:
        k = (p.question, p.answer, p.image)
        if k in seen:
            continue
        seen.add(k)
        if per_sig[p.signature] >= cap:
            continue
        per_sig[p.signature] += 1
        out.append(p)
    return out


def export(pairs: Sequence[QAPair], out_dir: str | Path, images: dict[str, bytes] | None = None,
           sidecars: dict[str, str] | None = None, extra: dict | None = None) -> dict:
    """Write data.jsonl, images/, diagrams/ and manifest.json; returns the manifest."""
    out = Path(out_dir)
    try:
        (out / "images").mkdir(parents=True, exist_ok=True)
        (out / "diagrams").mkdir(parents=True, exist_ok=True)
        with open(out / "data.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for p in pairs:
                fh.write(p.to_json() + "\n")
        used = {p.image for p in pairs}
        for name, data in sorted((images or {}).items()):
            if name in used or name.replace(".png", ".svg") in used:
                (out / name).write_bytes(data)
        for name, text in sorted((sidecars or {}).items()):
            (out / name).write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise OSError(f"export to {out} failed: {e}") from e
    manifest = build_manifest(pairs, extra)
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest


def build_manifest(pairs: Sequence[QAPair], extra: dict | None = None) -> dict:
    steps = Counter(len(p.solution_formal) for p in pairs)
    sigs = Counter(p.signature for p in pairs)
    variants = Counter(p.id[-1] for p in pairs)
    digest = hashlib.sha256("".join(p.to_json() + "\n" for p in pairs).encode()).hexdigest()
    m = {
        "count": len(pairs),
        "step_histogram": {str(k): steps[k] for k in sorted(steps)},
        "signature_histogram": {k: sigs[k] for k in sorted(sigs)},
        "signatures": len(sigs),
        "max_per_signature": max(sigs.values(), default=0),
        "variants": {k: variants[k] for k in sorted(variants)},
        "data_sha256": digest,
    }
    if extra:
        m.update(extra)
    return m


# -- dataset generation ---------------------------------------------------------

@dataclass(frozen=True)
class DatasetConfig:
    seed: int = 0
    diagrams: int = 100
    targets_per_image: int = 3
    cap: int = 400
    modes: tuple[str, ...] = VARIANTS
    png: bool = False
    workers: int = 1
    max_givens: int = 3
    synth: SynthConfig = field(default_factory=SynthConfig)
    limits: ChaseLimits = field(default_factory=ChaseLimits)
    min_depth: int = 1
    max_depth: int = 6
    max_steps: int = 12

    def __post_init__(self):
        if self.diagrams < 0 or self.targets_per_image < 1:
            raise ValueError("diagrams must be >= 0 and targets_per_image >= 1")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")

    def target_filter(self) -> TargetFilter:
        return TargetFilter(self.min_depth, self.max_depth, self.max_steps, count=(1, self.targets_per_image))


@dataclass
class DiagramOutcome:
    index: int
    status: str  # ok | unsatisfied | no_target | error
    pairs: list[QAPair] = field(default_factory=list)
    images: dict[str, bytes] = field(default_factory=dict)
    sidecar: tuple[str, str] | None = None
    message: str = ""


def diagram_outcome(index: int, cfg: DatasetConfig, registry: Registry, templates: Templates) -> DiagramOutcome:
    """Everything derived from one (seed, index): pure, so workers can run it."""
    try:
        d = synthesize(cfg.seed, index, registry, cfg.synth)
    except UnsatisfiedAfterRetries as e:
        return DiagramOutcome(index, "unsatisfied", message=str(e))
    rng = np.random.default_rng([cfg.seed, index, 1])
    try:
        prob = prepare_problem(d, registry, rng, cfg.limits, cfg.max_givens)
        targets = select_targets(prob.graph, cfg.target_filter(), rng, registry)
    except NoEligibleTarget as e:
        return DiagramOutcome(index, "no_target", message=str(e))
    except GeoError as e:
        return DiagramOutcome(index, "error", message=f"{e.code}: {e}")
    d = prob.diagram
    image = f"images/{d.id}.svg"
    res = DiagramOutcome(index, "ok")
    res.images[image] = render_svg(d)
    if cfg.png:
        res.images[f"images/{d.id}.png"] = render_png(d)
    res.sidecar = (f"diagrams/{d.id}.json", d.to_json() + "\n")
    for k, t in enumerate(targets):
        try:
            path = build_path(prob.graph, t, registry)
        except GeoError as e:
            log.warning("%s: dropping target %s: %s", d.id, t, e)
            continue
        res.pairs += make_questions(path, d, cfg.modes, templates, registry, image=image,
                                    key=f"{d.id}-{k}", seed=cfg.seed)
    return res


@lru_cache(maxsize=4)
def _worker_registry(text: str | None) -> Registry:
    return core_registry() if text is None else load_registry(text)


def _work(args: tuple) -> DiagramOutcome:
    index, cfg, reg_text = args
    return diagram_outcome(index, cfg, _worker_registry(reg_text), default_templates())


def generate(cfg: DatasetConfig, registry_text: str | None = None) -> list[DiagramOutcome]:
    """Outcomes in index order whatever the worker count."""
    jobs = [(i, cfg, registry_text) for i in range(cfg.diagrams)]
    if cfg.workers <= 1:
        return [_work(j) for j in jobs]
    with ProcessPoolExecutor(cfg.workers) as ex:
        return list(ex.map(_work, jobs, chunksize=4))


def apply_transcription(pairs: list[QAPair], gateway: Gateway) -> int:
    """Replace NL steps by transcribed text; on failure keep the drafts.
    Returns the number of records that fell back."""
    fallbacks = 0
    cache: dict[tuple[str, ...], list[str]] = {}
    for p in pairs:
        key = tuple(p.solution_nl)
        if key not in cache:
            try:
                cache[key] = transcribe(p.solution_nl, gateway, request_id=p.id)
            except GatewayError as e:
                log.warning("%s: transcription failed, keeping drafts: %s", p.id, e)
                cache[key] = list(p.solution_nl)
                fallbacks += 1
        p.solution_nl = list(cache[key])
    return fallbacks


def synth_dataset(cfg: DatasetConfig, out_dir: str | Path, registry_text: str | None = None,
                  gateway: Gateway | None = None) -> dict:
    outcomes = generate(cfg, registry_text)
    pairs = [p for o in outcomes for p in o.pairs]
    kept = dedup_and_cap(pairs, cfg.cap)
    fallbacks = apply_transcription(kept, gateway) if gateway is not None else 0
    images = {k: v for o in outcomes for k, v in o.images.items()}
    sidecars = dict(o.sidecar for o in outcomes if o.sidecar)
    status = Counter(o.status for o in outcomes)
    extra = {
        "seed": cfg.seed,
        "diagrams": cfg.diagrams,
        "plotter": {"attempted": cfg.diagrams, "emitted": cfg.diagrams - status["unsatisfied"],
                    "yield": (cfg.diagrams - status["unsatisfied"]) / cfg.diagrams if cfg.diagrams else None},
        "outcomes": {k: status[k] for k in sorted(status)},
        "generated_pairs": len(pairs),
        "cap": cfg.cap,
        "transcribed": gateway is not None,
        "transcription_fallbacks": fallbacks,
        "transcribe_prompt_version": TRANSCRIBE_PROMPT_VERSION,
    }
    return export(kept, out_dir, images, sidecars, extra)


def verify_record(pair: QAPair, diagram: Diagram, registry: Registry) -> list[dict]:
    """Strict verdict for each formal step of a record, replayed in order."""
    from geogen.deduction.chase import ReasoningStep
    from geogen.verifier.check import StepTriple, commit, verify_strict

    facts: list[Fact] = [registry.parse_literal(t) for t in diagram.initial]
    facts += [Equation.parse(t) for t in diagram.givens]
    state = State.from_facts(facts)
    out = []
    for sd in pair.solution_formal:
        tri = StepTriple.from_step(ReasoningStep.from_dict(sd, registry))
        v = verify_strict(state, tri, registry)
        out.append(v.to_dict())
        if v.valid:
            commit(state, tri)
    return out


# -- expansion of existing formal annotations ---------------------------------

def annotation_facts(ann: dict, registry: Registry) -> tuple[list[str], list[Fact]]:
    """``(generating literal texts, layer-0 facts)`` of an annotation or sidecar.

    Accepts ``literals``/``initial`` literal lists and ``givens`` equations.
    """
    lits = [registry.parse_literal(t) for t in ann.get("initial") or ann.get("literals") or []]
    facts: list[Fact] = list(registry.closure(lits))
    facts += [Equation.parse(t) for t in ann.get("givens", [])]
    shown = list(ann.get("literals") or ann.get("initial") or [])
    return shown, facts


def expand_annotation(ann: dict, index: int, cfg: DatasetConfig, registry: Registry,
                      templates: Templates) -> list[QAPair]:
    """QA records from one annotation, without drawing a new diagram."""
    from geogen.deduction.chase import forward_chase

    shown, facts = annotation_facts(ann, registry)
    graph = forward_chase(facts, registry, cfg.limits)
    rng = np.random.default_rng([cfg.seed, index, 2])
    try:
        targets = select_targets(graph, cfg.target_filter(), rng, registry)
    except NoEligibleTarget:
        return []
    d = Diagram(literals=shown, givens=[f.text for f in facts if isinstance(f, Equation)],
                id=str(ann.get("id", f"x{index:06d}")), seed=cfg.seed)
    out = []
    for k, t in enumerate(targets):
        try:
            path = build_path(graph, t, registry)
        except GeoError as e:
            log.warning("%s: dropping target %s: %s", d.id, t, e)
            continue
        out += make_questions(path, d, cfg.modes, templates, registry, image=str(ann.get("image", "")),
                              key=f"{d.id}-{k}", seed=cfg.seed, source=EXPAND)
    return out
