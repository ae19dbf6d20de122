"""Identity-symbol (a = 1) variants of the continuity scenarios.

With matching source and target spaces the operator is the identity, so each
reports a maximal ratio of exactly one up to rounding.
"""

_CONST = {"kind": "constant", "c": 1.0}


def _one(dim):
    return {"form": "one", "dim": dim}


TRIVIAL = {
    "p32": {"symbol": _CONST, "omega0": _one(2)},
    "p32b": {"symbol": _CONST, "omega0": _one(2)},
    "opcont3": {"symbol": _CONST, "omega0": _one(2)},
    "propopcont": {"symbol": _CONST, "omega0": _one(4), "omega1": _one(2), "omega2": _one(2)},
    "sobolev": {"symbol": _CONST, "r0": 0.0},
    "weightedl2": {"symbol": _CONST, "r0": 0.0},
}
