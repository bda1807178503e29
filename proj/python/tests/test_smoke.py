import shutil
from pathlib import Path

import pytest

import isaac

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_percentiles_and_skewness():
    ranks = isaac.percentile_rank([10.0, 30.0, 20.0, 20.0])
    assert ranks == [0.125, 0.875, 0.5, 0.5]
    assert isaac.skewness([1.0, 2.0, 3.0]) == 0.0
    with pytest.raises(isaac.IsaacError) as info:
        isaac.skewness([1.0, 1.0, 1.0])
    assert info.value.code == "DegenerateSample"


def test_parse_ratings():
    books, warnings = isaac.parse_ratings((FIXTURES / "ratings_98.csv").read_text())
    assert len(books) == 98
    assert warnings == []
    assert sum(b["percentile"] for b in books) == pytest.approx(49.0)


@pytest.fixture
def project(tmp_path):
    rows = (FIXTURES / "ratings_98.csv").read_text().splitlines()
    rated = "\n".join(rows[:91]) + "\n"
    candidates = "title,author\n" + "\n".join(",".join(r.split(",")[:2]) for r in rows[91:]) + "\n"
    p = isaac.Project.create(tmp_path / "proj", seed=3, mock_corpus=FIXTURES / "mock_corpus.json")
    p.ingest_ratings(rated)
    p.ingest_ratings(candidates, candidates=True)
    yield p
    shutil.rmtree(tmp_path / "proj", ignore_errors=True)


def test_pipeline_and_lock(project):
    report = project.annotate(workers=2)
    assert report["annotated"] == 98
    cov = report["coverage"]
    assert (cov["wikipedia"], cov["goodreads"], cov["both"]) == (79, 79, 65)

    project.register_expectations({"gr_avg_rating": {"sign": "+"}})
    effects = project.effects()
    assert any(r["dimension_id"] == "gr_avg_rating" for r in effects["rows"])
    with pytest.raises(isaac.ApiError) as info:
        project.register_expectations({"gr_avg_rating": {"sign": "-"}})
    assert info.value.status == 409
    assert info.value.code == "ExpectationsLocked"
    assert project.register_expectations({"gr_avg_rating": {"sign": "-"}}, post_hoc=True)["post_hoc"]

    project.set_mask({"mood_happy": "spoils the ending"})
    rec = project.recommend(k=3, model="ridge")
    assert rec["excluded"] == ["mood_happy"]
    assert len(rec["items"]) == 3
    assert all(c["dimension_id"] != "mood_happy" for i in rec["items"] for c in i["explanation"])

    state = project.state()
    types = [e["type"] for e in state["events"]]
    assert types.count("effects_viewed") == 1
    assert state["lock"]["locked"]


def test_idempotency_key(project):
    a = project.request("POST", "/api/mask", {"excluded": ["mood_happy"]}, idempotency_key="k1")
    b = project.request("POST", "/api/mask", {"excluded": ["mood_happy"]}, idempotency_key="k1")
    assert a == b
    assert [e["type"] for e in project.state()["events"]].count("mask_changed") == 1
