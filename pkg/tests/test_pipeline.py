import json

import pytest

from geogen.errors import GatewayError
from geogen.formal.registry import core_registry
from geogen.gateway import Gateway, GatewayConfig, ScriptedBackend, echo_gateway
from geogen.plotter.diagram import Diagram
from geogen.qa.pipeline import (
    DatasetConfig,
    QAPair,
    apply_transcription,
    dedup_and_cap,
    diagram_outcome,
    expand_annotation,
    export,
    synth_dataset,
    transcribe,
    verify_record,
)


def pair(i, sig, seed=0, question=None, image="images/x.svg"):
    return QAPair(f"p{i:05d}a", image, question or f"q{i}", ["s"], [{"conditions": [], "theorem": {}, "conclusion": ""}],
                  "1", {"signature": sig, "depth": 1, "source": "synth", "seed": seed})


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    m = synth_dataset(DatasetConfig(seed=5, diagrams=12), out)
    recs = [QAPair.from_dict(json.loads(l)) for l in (out / "data.jsonl").read_text().splitlines()]
    return out, m, recs


def test_record_schema(small):
    out, m, recs = small
    assert recs and m["count"] == len(recs)
    for line in (out / "data.jsonl").read_text().splitlines():
        d = json.loads(line)
        assert set(d) - {"figure_description"} == {"id", "image", "question", "solution_nl", "solution_formal",
                                                   "answer", "meta"}
        assert set(d["meta"]) == {"signature", "depth", "source", "seed"}
        for s in d["solution_formal"]:
            assert set(s) == {"conditions", "theorem", "conclusion"}
            assert set(s["theorem"]) == {"id", "name", "binding"}
        assert (out / d["image"]).exists()


def test_manifest_histograms(small):
    _, m, recs = small
    assert sum(m["step_histogram"].values()) == m["count"]
    assert sum(m["signature_histogram"].values()) == m["count"]
    assert m["plotter"]["attempted"] == 12


def test_variants_follow_target_kind(small):
    _, _, recs = small
    for r in recs:
        v = r.id[-1]
        if v == "c":
            assert r.question.split(" Prove that ")[-1].rstrip(".")
        else:
            assert "find" in r.question.lower() and "=" not in r.answer


def test_records_verify_strictly(small):
    out, _, recs = small
    reg = core_registry()
    for r in recs:
        d = Diagram.from_dict(json.loads((out / "diagrams" / (r.image.split("/")[-1][:-4] + ".json")).read_text()))
        assert all(v["valid"] for v in verify_record(r, d, reg)), r.id


def test_empty_modes(reg, templates):
    o = diagram_outcome(0, DatasetConfig(seed=5, diagrams=1, modes=()), reg, templates)
    assert o.pairs == []


def test_cap_is_enforced():
    pairs = [pair(i, "6-7-1000") for i in range(500)] + [pair(1000 + i, "5") for i in range(10)]
    kept = dedup_and_cap(pairs, 400)
    assert sum(p.signature == "6-7-1000" for p in kept) == 400
    assert sum(p.signature == "5" for p in kept) == 10
    assert [p.id for p in kept[:3]] == ["p00000a", "p00001a", "p00002a"]


def test_dedup():
    kept = dedup_and_cap([pair(1, "a", question="same"), pair(2, "a", question="same"),
                          pair(3, "a", question="same", image="images/y.svg")])
    assert [p.id for p in kept] == ["p00001a", "p00003a"]


def test_record_parity():
    with pytest.raises(ValueError):
        QAPair("x", "i", "q", ["a", "b"], [{}], "1", {"signature": "", "depth": 0, "source": "", "seed": 0})


def test_reexport_is_byte_identical(small, tmp_path):
    out, m, recs = small
    m2 = export(recs, tmp_path, extra={k: v for k, v in m.items()
                                       if k not in ("count", "step_histogram", "signature_histogram",
                                                    "signatures", "max_per_signature", "variants", "data_sha256")})
    assert (tmp_path / "data.jsonl").read_bytes() == (out / "data.jsonl").read_bytes()
    assert (tmp_path / "manifest.json").read_bytes() == (out / "manifest.json").read_bytes()


def test_echo_transcription_is_identity(small):
    _, _, recs = small
    copies = [QAPair.from_dict(r.to_dict()) for r in recs[:5]]
    assert apply_transcription(copies, echo_gateway()) == 0
    assert [c.solution_nl for c in copies] == [r.solution_nl for r in recs[:5]]


def test_scripted_transcription():
    g = Gateway(GatewayConfig(), ScriptedBackend(["one\ntwo", "only one"]), sleep=lambda _: None)
    assert transcribe(["a", "b"], g) == ["one", "two"]
    with pytest.raises(GatewayError):
        transcribe(["a", "b"], g)


def test_transcription_failure_keeps_drafts():
    g = Gateway(GatewayConfig(), ScriptedBackend(["x\ny\nz"]), sleep=lambda _: None)
    p = pair(1, "a")
    p.solution_nl = ["d1"]
    assert apply_transcription([p], g) == 1 and p.solution_nl == ["d1"]


def test_expand_annotation(reg, templates):
    ann = {"id": "ann1", "image": "img/1.png",
           "initial": ["Triangle(ABC)", "IsMidpointOfLine(D,AB)", "IsMidpointOfLine(E,AC)", "Line(DE)"],
           "givens": ["LengthOfLine(BC)=8"]}
    recs = expand_annotation(ann, 0, DatasetConfig(seed=1, targets_per_image=3), reg, templates)
    assert recs and all(r.meta["source"] == "expand" and r.image == "img/1.png" for r in recs)
    assert all(r.id.startswith("ann1-") for r in recs)


def test_config_validation():
    with pytest.raises(ValueError):
        DatasetConfig(cap=0)
