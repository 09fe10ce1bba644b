"""Command-line entry point: ``geogen <command> [flags]``.

Settings come from built-in defaults, then an optional TOML file
(``--config``), then flags; flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from geogen.deduction.chase import forward_chase, linearize, traceback
from geogen.errors import GeoError
from geogen.formal.registry import Registry, core_registry, load_registry
from geogen.gateway import EchoBackend, Gateway, GatewayConfig, HttpBackend, ScriptedBackend

log = logging.getLogger("geogen")


@dataclass
class RunConfig:
    registry: str | None = None
    seed: int = 0
    diagrams: int = 100
    targets_per_image: int = 3
    cap: int = 400
    out: str = "out"
    transcribe: bool = False
    mode: str = "strict"
    width: int = 4
    workers: int = 1
    png: bool = False
    max_iterations: int = 32
    gateway: dict = field(default_factory=dict)

    def __post_init__(self):
        if min(self.seed, self.diagrams, self.workers) < 0:
            raise ValueError("seed, diagrams and workers must be >= 0")
        if self.cap < 1 or self.targets_per_image < 1 or self.width < 1:
            raise ValueError("cap, targets_per_image and width must be >= 1")
        if self.mode not in ("strict", "fast"):
            raise ValueError("mode must be strict or fast")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


def load_registry_arg(path: str | None) -> tuple[Registry, str | None]:
    if not path:
        return core_registry(), None
    text = Path(path).read_text(encoding="utf-8")
    return load_registry(text), text


def make_gateway(cfg: RunConfig, script: str | None = None) -> Gateway:
    """Backend from ``--script``, else the ``[gateway]`` table's ``backend``
    key: ``echo`` (default), ``http`` or ``script:<path>``."""
    g = dict(cfg.gateway)
    backend_spec = g.pop("backend", "echo")
    gcfg = GatewayConfig(**g)
    if script:
        return Gateway(gcfg, ScriptedBackend.from_file(script))
    if backend_spec == "echo":
        return Gateway(gcfg, EchoBackend())
    if backend_spec == "http":
        return Gateway(gcfg, HttpBackend())
    if backend_spec.startswith("script:"):
        return Gateway(gcfg, ScriptedBackend.from_file(backend_spec[len("script:"):]))
    raise ValueError(f"unknown gateway backend {backend_spec!r}")


def _load_json(path: str) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _emit(obj: Any, out: str | None = None) -> None:
    text = obj if isinstance(obj, str) else json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=1)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


# -- commands -------------------------------------------------------------------

def cmd_synth(args, cfg: RunConfig) -> int:
    from geogen.qa.pipeline import DatasetConfig, synth_dataset

    _, reg_text = load_registry_arg(cfg.registry)
    dcfg = DatasetConfig(seed=cfg.seed, diagrams=cfg.diagrams, targets_per_image=cfg.targets_per_image,
                         cap=cfg.cap, png=cfg.png, workers=cfg.workers)
    gw = make_gateway(cfg) if cfg.transcribe else None
    manifest = synth_dataset(dcfg, cfg.out, reg_text, gw)
    _emit({"out": cfg.out, "count": manifest["count"], "signatures": manifest["signatures"],
           "plotter": manifest["plotter"]})
    return 0


def cmd_expand(args, cfg: RunConfig) -> int:
    from geogen.qa.pipeline import DatasetConfig, apply_transcription, dedup_and_cap, expand_annotation, export
    from geogen.qa.templates import default_templates

    reg, _ = load_registry_arg(cfg.registry)
    dcfg = DatasetConfig(seed=cfg.seed, targets_per_image=cfg.targets_per_image, cap=cfg.cap)
    pairs = []
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(ln for ln in lines if ln.strip()):
        pairs += expand_annotation(json.loads(line), i, dcfg, reg, default_templates())
    kept = dedup_and_cap(pairs, cfg.cap)
    fallbacks = apply_transcription(kept, make_gateway(cfg)) if cfg.transcribe else 0
    m = export(kept, cfg.out, extra={"seed": cfg.seed, "source": "expand", "generated_pairs": len(pairs),
                                     "transcription_fallbacks": fallbacks})
    _emit({"out": cfg.out, "count": m["count"], "signatures": m["signatures"]})
    return 0


def cmd_solve(args, cfg: RunConfig) -> int:
    from geogen.qa.pipeline import annotation_facts
    from geogen.targets import build_path, score_targets

    reg, _ = load_registry_arg(cfg.registry)
    _, facts = annotation_facts(_load_json(args.problem), reg)
    graph = forward_chase(facts, reg)
    out: dict[str, Any] = {"nodes": len(graph.nodes), "edges": len(graph.edges), "layers": graph.depth,
                           "truncated": graph.truncated}
    if args.graph:
        out["graph"] = graph.to_dict()
    if args.target:
        path = build_path(graph, args.target, reg)
        out["path"] = {"target": path.target.text, "answer": path.answer, "signature": path.signature,
                       "depth": path.depth, "steps": [s.to_dict() for s in path.steps]}
    else:
        out["targets"] = [{"fact": s.fact, "depth": s.depth, "steps": s.step_count}
                          for s in score_targets(graph, reg) if s.kind is not None]
    _emit(out, args.output)
    return 0


def _read_steps(path: str) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        return [str(s) for s in json.loads(text)]
    return [ln for ln in text.splitlines() if ln.strip()]


def cmd_verify(args, cfg: RunConfig) -> int:
    from geogen.deduction.state import State
    from geogen.plotter.diagram import Diagram
    from geogen.qa.pipeline import QAPair, annotation_facts, verify_record
    from geogen.qa.templates import default_templates
    from geogen.verifier.check import Figure, RuleTranslator, commit, verify

    reg, _ = load_registry_arg(cfg.registry)
    rows = []
    if args.dataset:
        root = Path(args.dataset)
        for line in (root / "data.jsonl").read_text(encoding="utf-8").splitlines():
            pair = QAPair.from_dict(json.loads(line))
            stem = Path(pair.image).stem
            d = Diagram.from_dict(_load_json(str(root / "diagrams" / f"{stem}.json")))
            for i, v in enumerate(verify_record(pair, d, reg)):
                rows.append({"id": pair.id, "step": i, **v})
    else:
        if not (args.problem and args.steps):
            raise ValueError("verify needs --problem and --steps, or --dataset")
        prob = _load_json(args.problem)
        _, facts = annotation_facts(prob, reg)
        state = State.from_facts(facts)
        fig = Figure.from_diagram(Diagram.from_dict(prob)) if "points" in prob else Figure.from_facts(facts)
        tr = RuleTranslator(default_templates(), reg)
        for i, text in enumerate(_read_steps(args.steps)):
            try:
                tri = tr.translate(text)
                v = verify(cfg.mode, state, fig, tri, reg).to_dict()
                if v["valid"]:
                    commit(state, tri)
            except GeoError as e:
                v = {"valid": False, "mode": cfg.mode, "code": e.code, "message": str(e)}
            rows.append({"step": i, "text": text, **v})
    _emit("\n".join(json.dumps(r, sort_keys=True, ensure_ascii=False) for r in rows), args.output)
    return 0 if all(r["valid"] for r in rows) else 3


def cmd_search(args, cfg: RunConfig) -> int:
    from geogen.plotter.diagram import Diagram
    from geogen.qa.pipeline import annotation_facts
    from geogen.qa.templates import default_templates
    from geogen.verifier.check import RuleTranslator
    from geogen.verifier.search import GatewayGenerator, SearchConfig, SearchProblem, tree_search

    reg, _ = load_registry_arg(cfg.registry)
    prob = _load_json(args.problem)
    _, facts = annotation_facts(prob, reg)
    diagram = Diagram.from_dict(prob) if "points" in prob else None
    problem = SearchProblem(prob.get("question", args.prompt or ""), facts, diagram)
    gen = GatewayGenerator(make_gateway(cfg, args.script))
    hist = tree_search(problem, gen, RuleTranslator(default_templates(), reg), reg,
                       SearchConfig(cfg.width, cfg.max_iterations, cfg.mode, cfg.seed))
    _emit(hist.to_json(reg), args.output)
    return 0


def cmd_stats(args, cfg: RunConfig) -> int:
    m = _load_json(str(Path(args.dataset or cfg.out) / "manifest.json"))
    keys = ("count", "step_histogram", "signature_histogram", "signatures", "max_per_signature", "plotter",
            "variants")
    _emit({k: m[k] for k in keys if k in m})
    return 0


COMMANDS = {"synth": cmd_synth, "expand": cmd_expand, "solve": cmd_solve, "verify": cmd_verify,
            "search": cmd_search, "stats": cmd_stats}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with default settings")
    common.add_argument("--registry", help="registry DSL file (default: built-in core registry)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--mode", choices=["strict", "fast"])
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="geogen", description="Symbolic plane-geometry data engine.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate diagrams and QA records")
    s.add_argument("--diagrams", type=int)
    s.add_argument("--targets-per-image", dest="targets_per_image", type=int)
    s.add_argument("--cap", type=int)
    s.add_argument("--transcribe", action="store_true", default=None)
    s.add_argument("--png", action="store_true", default=None)

    e = sub.add_parser("expand", parents=[common], help="QA records from a formal-annotation JSONL file")
    e.add_argument("input")
    e.add_argument("--targets-per-image", dest="targets_per_image", type=int)
    e.add_argument("--cap", type=int)
    e.add_argument("--transcribe", action="store_true", default=None)

    so = sub.add_parser("solve", parents=[common], help="forward chase and path dump for one problem")
    so.add_argument("problem")
    so.add_argument("--target")
    so.add_argument("--graph", action="store_true", help="include the full deduction graph")
    so.add_argument("-o", "--output")

    v = sub.add_parser("verify", parents=[common], help="per-step verdicts as JSONL")
    v.add_argument("--problem")
    v.add_argument("--steps")
    v.add_argument("--dataset", help="verify every record of an exported dataset")
    v.add_argument("-o", "--output")

    se = sub.add_parser("search", parents=[common], help="step-level tree search")
    se.add_argument("problem")
    se.add_argument("--script", help="JSONL script for the scripted generator")
    se.add_argument("--width", type=int)
    se.add_argument("--max-iterations", dest="max_iterations", type=int)
    se.add_argument("--prompt")
    se.add_argument("-o", "--output")

    st = sub.add_parser("stats", parents=[common], help="manifest histograms")
    st.add_argument("dataset", nargs="?")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except GeoError as e:
        print(json.dumps(e.to_dict(), sort_keys=True))
        return 1
    except (OSError, ValueError, KeyError, tomllib.TOMLDecodeError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}, sort_keys=True))
        return 1


if __name__ == "__main__":
    sys.exit(main())
