"""Differentiable complex matrix algebra"""

from .ctensor import (
    CTensor,
    abs2,
    cabs2,
    cadd,
    ceye,
    chermitian,
    cmatmul,
    cmul_real,
    csolve,
    csub,
)

__all__ = [
    "CTensor",
    "abs2",
    "cabs2",
    "cadd",
    "ceye",
    "chermitian",
    "cmatmul",
    "cmul_real",
    "csolve",
    "csub",
]
