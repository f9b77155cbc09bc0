"""Ranks and partition-rank decompositions of matrices of multilinear forms."""

from .field import FieldCtx, FieldElem, field_make, field_of_order
from .kernels import BACKEND
from .mform import MultilinearForm, Poly
from .mlmatrix import FormMatrix, ScalarMatrix

__all__ = ["BACKEND", "FieldCtx", "FieldElem", "FormMatrix", "MultilinearForm", "Poly",
           "ScalarMatrix", "field_make", "field_of_order"]
__version__ = "0.1.0"
