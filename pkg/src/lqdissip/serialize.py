"""JSON serialization of bundles and solutions, and atomic file writes.

Floats are written with Python's shortest round-trip representation, so a
dump followed by a load reproduces every matrix bit for bit.
"""
import json
import os
import tempfile

import numpy as np

from .dissipative import StateSpaceSystem, SupplyRate
from .lure_lq import LureSolution
from .models import ModelBundle

BUNDLE_FIELDS = ("A", "B", "C", "D", "gram", "Q", "S", "R", "out_gram", "P")
SOLUTION_FIELDS = ("P_w", "E", "F", "eps_schedule", "converged")


def _rows(M):
    M = np.asarray(M, dtype=float)
    return [[float(v) for v in row] for row in M.reshape(M.shape[0], -1)]


def _matrix(doc, key, cols=None):
    if key not in doc:
        raise KeyError(key)
    M = np.array(doc[key], dtype=float)
    if M.size == 0:
        return M.reshape(len(doc[key]), 0 if cols is None else cols)
    if M.ndim != 2:
        raise ValueError(f"field {key!r} must be a 2-D array")
    return M


def bundle_to_dict(bundle, cert=None):
    sys, sr = bundle.sys, bundle.sr
    doc = {
        "A": _rows(sys.A), "B": _rows(sys.B), "C": _rows(sys.C), "D": _rows(sys.D),
        "gram": _rows(sys.gram),
        "Q": _rows(sr.Q), "S": _rows(sr.S), "R": _rows(sr.R), "out_gram": _rows(sr.out_gram),
        "P": _rows(bundle.P),
        "meta": dict(bundle.meta),
    }
    if cert is not None:
        doc["K"] = _rows(cert.K)
        doc["L"] = _rows(cert.L)
    return doc


def dumps_bundle(bundle, cert=None):
    return json.dumps(bundle_to_dict(bundle, cert), indent=1)


def loads_bundle(text):
    doc = json.loads(text)
    missing = [k for k in BUNDLE_FIELDS if k not in doc]
    if missing:
        raise KeyError(f"bundle is missing fields {missing}")
    n = len(doc["A"])
    sys = StateSpaceSystem(
        A=_matrix(doc, "A", n), B=_matrix(doc, "B"), C=_matrix(doc, "C", n),
        D=_matrix(doc, "D"), gram=_matrix(doc, "gram", n),
    )
    sr = SupplyRate(Q=_matrix(doc, "Q"), S=_matrix(doc, "S"), R=_matrix(doc, "R"),
                    out_gram=_matrix(doc, "out_gram"))
    meta = dict(doc.get("meta", {}))
    meta.setdefault("model", "file")
    meta.setdefault("n", n)
    return ModelBundle(sys=sys, sr=sr, P=_matrix(doc, "P", n), meta=meta)


def dumps_solution(sol, extra=None):
    doc = {
        "P_w": _rows(sol.P_w), "E": _rows(sol.E), "F": _rows(sol.F),
        "eps_schedule": [float(e) for e in sol.eps_schedule],
        "converged": bool(sol.converged),
        "increments": [float(v) for v in sol.increments],
    }
    if extra:
        for key, val in extra.items():
            doc[key] = _rows(val) if isinstance(val, np.ndarray) else val
    return json.dumps(doc, indent=1)


def loads_solution(text):
    doc = json.loads(text)
    missing = [k for k in SOLUTION_FIELDS if k not in doc]
    if missing:
        raise KeyError(f"solution is missing fields {missing}")
    P_w = _matrix(doc, "P_w")
    n = P_w.shape[0]
    E = np.array(doc["E"], dtype=float).reshape(-1, n)
    F = _matrix(doc, "F") if doc["F"] and doc["F"][0] else np.zeros((E.shape[0], 0))
    return LureSolution(P_w=P_w, E=E, F=F.reshape(E.shape[0], -1),
                        eps_schedule=tuple(doc["eps_schedule"]), P_w_per_eps=(),
                        converged=bool(doc["converged"]),
                        increments=tuple(doc.get("increments", ())))


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
