"""Complex matrices as pairs of real tensors"""

from typing import Tuple

import numpy as np

from ..autodiff import ops
from ..autodiff.tape import Tape, Tensor
from ..errors import ShapeError


class CTensor:
    """Complex matrix stored as (re, im) real tensors of identical shape"""

    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        """
        Initialize complex tensor

        Args:
            re: Real part (Tensor or array-like)
            im: Imaginary part; zeros when omitted
        """
        re = ops.as_tensor(re)
        im = Tensor(np.zeros(re.shape)) if im is None else ops.as_tensor(im)
        if re.shape != im.shape:
            raise ShapeError(f"real part {re.shape} and imaginary part {im.shape} differ")
        self.re = re
        self.im = im

    @classmethod
    def from_numpy(cls, z) -> "CTensor":
        """Constant (untracked) complex tensor from a numpy array"""
        z = np.asarray(z, dtype=np.complex128)
        return cls(Tensor(z.real), Tensor(z.imag))

    @classmethod
    def leaf(cls, tape: Tape, z) -> "CTensor":
        """Register both parts of a complex array as differentiable inputs"""
        z = np.asarray(z, dtype=np.complex128)
        return cls(tape.leaf(z.real), tape.leaf(z.imag))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.re.shape

    def numpy(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data

    def detach(self) -> "CTensor":
        return CTensor(self.re.detach(), self.im.detach())

    @property
    def H(self) -> "CTensor":
        return chermitian(self)

    def __add__(self, other: "CTensor") -> "CTensor":
        return cadd(self, other)

    def __sub__(self, other: "CTensor") -> "CTensor":
        return csub(self, other)

    def __matmul__(self, other: "CTensor") -> "CTensor":
        return cmatmul(self, other)

    def __repr__(self) -> str:
        return f"CTensor(shape={self.shape})"


def cadd(a: CTensor, b: CTensor) -> CTensor:
    return CTensor(ops.add(a.re, b.re), ops.add(a.im, b.im))


def csub(a: CTensor, b: CTensor) -> CTensor:
    return CTensor(ops.sub(a.re, b.re), ops.sub(a.im, b.im))


def cmul_real(a: CTensor, r: Tensor) -> CTensor:
    """Elementwise product with a real tensor of the same shape"""
    return CTensor(ops.mul(a.re, r), ops.mul(a.im, r))


def cmatmul(a: CTensor, b: CTensor) -> CTensor:
    """
    Complex matrix product

    Args:
        a: m×n complex matrix
        b: n×p complex matrix

    Returns:
        (a.re·b.re − a.im·b.im, a.re·b.im + a.im·b.re)

    Raises:
        ShapeError: Inner dimensions disagree
    """
    if len(a.shape) != 2 or len(b.shape) != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cmatmul: cannot multiply {a.shape} by {b.shape}")
    re = ops.sub(ops.matmul(a.re, b.re), ops.matmul(a.im, b.im))
    im = ops.add(ops.matmul(a.re, b.im), ops.matmul(a.im, b.re))
    return CTensor(re, im)


def chermitian(a: CTensor) -> CTensor:
    """Conjugate transpose"""
    return CTensor(ops.transpose(a.re), ops.neg(ops.transpose(a.im)))


def abs2(a: CTensor) -> Tensor:
    """Elementwise squared modulus"""
    return ops.add(ops.square(a.re), ops.square(a.im))


def csolve(a: CTensor, b: CTensor) -> CTensor:
    """
    Solve the complex system A·X = B through its real block embedding

    Args:
        a: Nonsingular n×n complex matrix
        b: n×k complex right-hand side

    Returns:
        X with A·X = B

    Raises:
        ShapeError: A is not square or B does not match
        SingularMatrixError: The 2n×2n real system is ill-conditioned
    """
    n = a.shape[0]
    if len(a.shape) != 2 or a.shape[1] != n:
        raise ShapeError(f"csolve: A must be square, got {a.shape}")
    if len(b.shape) != 2 or b.shape[0] != n:
        raise ShapeError(f"csolve: B shape {b.shape} does not match A {a.shape}")
    # [[re, −im], [im, re]] · [X.re; X.im] = [B.re; B.im]
    top = ops.concat([a.re, ops.neg(a.im)], axis=1)
    bottom = ops.concat([a.im, a.re], axis=1)
    block = ops.concat([top, bottom], axis=0)
    rhs = ops.concat([b.re, b.im], axis=0)
    x_re, x_im = ops.split(ops.solve(block, rhs), [n, n], axis=0)
    return CTensor(x_re, x_im)


def cabs2(a: CTensor, b: CTensor) -> Tensor:
    """
    Squared modulus of the inner product aᴴb

    Args:
        a: n×1 complex column
        b: n×1 complex column

    Returns:
        1×1 tensor (Re aᴴb)² + (Im aᴴb)²

    Raises:
        ShapeError: Inputs are not columns of equal length
    """
    if a.shape != b.shape or len(a.shape) != 2 or a.shape[1] != 1:
        raise ShapeError(f"cabs2 needs two columns of equal length, got {a.shape} and {b.shape}")
    return abs2(cmatmul(chermitian(a), b))


def ceye(n: int) -> CTensor:
    return CTensor(np.eye(n), np.zeros((n, n)))
