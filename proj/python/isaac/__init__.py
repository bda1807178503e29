"""Python interface to the isaac reading-preference toolkit.

A :class:`Project` speaks the same JSON API as ``isaac serve``; every method
returns the decoded response payload.
"""
import json

from ._isaac import IsaacError, percentile_rank, skewness
from . import _isaac

__all__ = ["ApiError", "IsaacError", "Project", "agreement", "default_schema", "parse_ratings",
           "percentile_rank", "skewness"]


class ApiError(Exception):
    """A request the project refused. ``code`` is the machine-readable error name."""

    def __init__(self, status, code, message):
        super().__init__(message)
        self.status = status
        self.code = code


def parse_ratings(text, format="auto", dnf="include"):
    """Returns (books, warnings); each book is a dict with its percentile set."""
    books, warnings = _isaac.parse_ratings(text, format, dnf)
    return json.loads(books), list(warnings)


def agreement(human_csv, project):
    return json.loads(_isaac.agreement(human_csv, str(project)))


def default_schema():
    return json.loads(_isaac.default_schema())


class Project:
    def __init__(self, native):
        self._native = native

    @classmethod
    def create(cls, root, seed=42, mock_corpus=None):
        return cls(_isaac._Project.create(str(root), seed, None if mock_corpus is None else str(mock_corpus)))

    @classmethod
    def open(cls, root, mock_corpus=None):
        return cls(_isaac._Project.open(str(root), None if mock_corpus is None else str(mock_corpus)))

    def request(self, method, path, payload=None, query=None, idempotency_key=""):
        body = "" if payload is None else json.dumps(payload)
        query = {k: str(v) for k, v in (query or {}).items()}
        status, text = self._native.request(method, path, body, query, idempotency_key)
        data = json.loads(text)
        if status != 200:
            err = data.get("error", {})
            raise ApiError(status, err.get("code"), err.get("message"))
        return data

    def state(self):
        return self.request("GET", "/api/project")

    def ingest_ratings(self, text, format="auto", dnf="include", candidates=False):
        return self.request("POST", "/api/ratings", {"text": text, "format": format, "dnf": dnf,
                                                     "candidates": candidates})

    def attach_notes(self, text):
        return self.request("POST", "/api/ratings", {"notes": text})

    def annotate(self, workers=1, max_books=None):
        payload = {"workers": workers}
        if max_books is not None:
            payload["max_books"] = max_books
        return self.request("POST", "/api/annotate", payload)

    def effects(self, min_n=3):
        """Viewing effects locks the expectation set."""
        return self.request("GET", "/api/effects", query={"min_n": min_n})

    def register_expectations(self, expectations, post_hoc=False):
        return self.request("POST", "/api/expectations", {"expectations": expectations, "post_hoc": post_hoc})

    def concordance(self, min_n=3):
        return self.request("GET", "/api/concordance", query={"min_n": min_n})

    def set_mask(self, excluded):
        """``excluded`` is a list of ids or a dict id -> reason."""
        if isinstance(excluded, dict):
            excluded = [{"dimension_id": k, "reason": v} for k, v in excluded.items()]
        return self.request("POST", "/api/mask", {"excluded": list(excluded)})

    def model_report(self):
        return self.request("GET", "/api/model-report")

    def recommend(self, k=10, model=None):
        return self.request("POST", "/api/recommend", _rank_payload(k, model))

    def explore(self, k=10, model=None):
        return self.request("POST", "/api/explore", _rank_payload(k, model))


def _rank_payload(k, model):
    payload = {"k": k}
    if model is not None:
        payload["model"] = model
    return payload
