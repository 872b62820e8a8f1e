"""Regenerate the bundled demo scenario files."""
import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "nqs_geom" / "scenarios"


def cm(rows):
    """Encode a real/complex nested list as [re, im] pairs."""
    out = []
    for row in rows:
        r = []
        for x in row:
            z = complex(x)
            r.append([z.real, z.imag])
        out.append(r)
    return out


PROJ0_2 = [[1, 0], [0, 0]]
SX = [[0, 1], [1, 0]]
SMINUS = [[0, 1], [0, 0]]

markov = {
    "version": "nqs-geom/1",
    "description": "Three-context chain: reset dynamics, mixing certificates, "
                   "self-consistent charges, and the continuum check.",
    "options": {"doeblin_t0": 1.0, "seed": 7},
    "contexts": [
        {
            "id": "C1",
            "dim": 2,
            "generator": {"form": "reset", "rate": 0.5,
                          "target": cm([[0.6, 0], [0, 0.4]])},
            "cartan": {"labels": ["p"], "matrices": [cm(PROJ0_2)]},
            "functional": {"kind": "quadratic", "stiffness": [[1.0]],
                           "preferred": [0.0]},
        },
        {
            "id": "C2",
            "dim": 2,
            "generator": {"form": "reset", "rate": 1.0,
                          "target": cm([[0.7, 0], [0, 0.3]])},
            "cartan": {"labels": ["p"], "matrices": [cm(PROJ0_2)]},
            "functional": {"kind": "quadratic", "stiffness": [[1.0]],
                           "preferred": [1.0]},
        },
        {
            "id": "C3",
            "dim": 2,
            "generator": {"form": "reset", "rate": 2.0,
                          "target": cm([[0.5, 0], [0, 0.5]])},
            "cartan": {"labels": ["p"], "matrices": [cm(PROJ0_2)]},
            "functional": {"kind": "quadratic", "stiffness": [[1.0]],
                           "preferred": [0.0]},
        },
    ],
    "graph": {"edges": [
        {"a": "C1", "b": "C2", "weight": 1.0},
        {"a": "C2", "b": "C3", "weight": 1.0},
    ]},
    "tasks": [
        {"id": "analyze-c1", "kind": "analyze-context", "context": "C1"},
        {"id": "analyze-c2", "kind": "analyze-context", "context": "C2"},
        {"id": "analyze-c3", "kind": "analyze-context", "context": "C3"},
        {"id": "solve-chain", "kind": "solve-graph"},
        {"id": "sense-c2", "kind": "sensitivity", "context": "C2",
         "perturbation": {"kind": "hamiltonian", "matrix": cm(SX)}},
        {"id": "response-c2", "kind": "response-chain", "context": "C2",
         "perturbation": {"kind": "jump", "matrix": cm(SMINUS)}},
        {"id": "chain-50", "kind": "chain-demo", "n": 50, "weight": 1.0,
         "function": "sin-pi"},
    ],
}

s3 = 1.0 / math.sqrt(3.0)
L3 = [[1, 0, 0], [0, -1, 0], [0, 0, 0]]
L8 = [[s3, 0, 0], [0, s3, 0], [0, 0, -2 * s3]]
L1 = [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
USWAP = [[0, 1, 0], [1, 0, 0], [0, 0, 1]]
I3 = [[1 / 3, 0, 0], [0, 1 / 3, 0], [0, 0, 1 / 3]]

qutrit_metric = {
    "version": "nqs-geom/1",
    "description": "Three-level system: information metric of the diagonal "
                   "Gibbs family against the charge covariance.",
    "contexts": [
        {
            "id": "Q",
            "dim": 3,
            "generator": {"form": "reset", "rate": 1.0, "target": cm(I3)},
            "cartan": {"labels": ["t3", "t8"], "matrices": [cm(L3), cm(L8)]},
        },
    ],
    "tasks": [
        {"id": "worked-example", "kind": "qutrit-demo"},
        {"id": "fisher-at-zero", "kind": "metric", "context": "Q",
         "method": "fisher", "anchor": [0.0, 0.0]},
        {"id": "covariance-stationary", "kind": "metric", "context": "Q",
         "method": "covariance", "state": "stationary"},
    ],
}

qutrit_holonomy = {
    "version": "nqs-geom/1",
    "description": "Charge transport around a two-edge unitary loop and "
                   "through a full basis swap.",
    "contexts": [
        {
            "id": "Q1",
            "dim": 3,
            "cartan": {"labels": ["t3", "t8"], "matrices": [cm(L3), cm(L8)]},
        },
        {"id": "Q2", "dim": 3},
    ],
    "tasks": [
        {
            "id": "loop-fit",
            "kind": "holonomy",
            "cartan_context": "Q1",
            "thetas": [0.1, 0.05, 0.025, 0.0],
            "loop": [
                {"kind": "unitary", "generator": cm(L1), "theta_scale": 1.0,
                 "source": "Q1", "target": "Q2"},
                {"kind": "unitary", "generator": cm(L1), "theta_scale": -1.0,
                 "source": "Q2", "target": "Q1"},
            ],
        },
        {
            "id": "full-swap",
            "kind": "transport",
            "cartan_context": "Q1",
            "channel": {"kind": "partial_swap", "unitary": cm(USWAP),
                        "theta": 1.0},
            "source": "Q1",
            "target": "Q2",
        },
    ],
}

for name, doc in [
    ("markov_chain.nqs", markov),
    ("qutrit_metric.nqs", qutrit_metric),
    ("qutrit_holonomy.nqs", qutrit_holonomy),
]:
    path = OUT / name
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")
