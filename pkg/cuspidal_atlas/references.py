"""
Reference manipulators of the family with their known classification.

Rows (a)-(h) span the three cusp classes; "fig1" is the classic cuspidal
example d3 = 2, d4 = 1.5, r2 = 1 with four cusps and a four-posture pocket.
"""

from dataclasses import dataclass
from typing import Optional

from .kinematics import DesignParams


@dataclass(frozen=True)
class ReferenceManipulator:
    key: str
    params: DesignParams
    cell: Optional[str]
    kind: str
    generic: bool
    aspects: int
    cusps: int
    class_label: str

    @property
    def cuspidal(self):
        return self.cusps > 0


def _ref(key, cell, d3, r2, d4, kind, generic, aspects, cusps, class_label):
    return ReferenceManipulator(key, DesignParams(d3=d3, r2=r2, d4=d4), cell, kind,
                                generic, aspects, cusps, class_label)


REFERENCES = {
    r.key: r for r in (
        _ref("a", "(1,1,1)", 0.21, 0.10, 0.05, "binary", True, 2, 0, "binary"),
        _ref("b", "(1,2,6)", 0.21, 0.19, 0.25, "binary", True, 4, 0, "binary"),
        # d3 = d4: tangent axial line at θ3 = π
        _ref("c", "(1,3,4)", 0.21, 0.20, 0.21, "quaternary", False, 4, 4, "n.g"),
        _ref("d", "(4,2,2)", 1.36, 0.35, 0.75, "quaternary", True, 2, 4, "2(1,0)"),
        _ref("e", "(2,4,5)", 0.75, 0.52, 0.85, "quaternary", False, 4, 2, "n.g"),
        _ref("f", "(3,1,6)", 1.11, 0.13, 1.40, "quaternary", False, 4, 2, "n.g"),
        _ref("g", "(5,1,1)", 1.97, 1.00, 0.10, "binary", True, 2, 0, "binary"),
        _ref("h", "(5,1,3)", 1.97, 1.00, 1.54, "quaternary", True, 2, 4, "2(1,0)"),
        _ref("fig1", None, 2.0, 1.0, 1.5, "quaternary", True, 2, 4, "2(1,0)"),
    )
}

TABLE_ROWS = tuple("abcdefgh")


def reference(key: str) -> ReferenceManipulator:
    try:
        return REFERENCES[key]
    except KeyError:
        raise ValueError(f"unknown reference manipulator '{key}' (choose from {', '.join(REFERENCES)})") from None
