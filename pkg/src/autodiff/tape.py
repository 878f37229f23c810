"""Tape-based reverse-mode automatic differentiation core"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import NonFiniteError, ShapeError, TapeError

logger = logging.getLogger(__name__)

VjpFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """Dense float64 array, optionally registered on a tape"""

    __slots__ = ("data", "tape", "node")

    def __init__(self, data, tape: Optional["Tape"] = None, node: Optional[int] = None):
        """
        Initialize tensor

        Args:
            data: Array-like values, stored as contiguous float64
            tape: Tape this tensor was recorded on (None for constants)
            node: Index of the producing node on the tape
        """
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.tape = tape
        self.node = node

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Return a copy of the values detached from any tape"""
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        where = f"node={self.node}" if self.tape is not None else "const"
        return f"Tensor(shape={self.shape}, {where})"


@dataclass
class Node:
    """One recorded primitive application"""

    op: str
    inputs: Tuple[Optional[int], ...]
    vjp: Optional[VjpFn]
    shape: Tuple[int, ...]


class Tape:
    """Append-only record of primitive applications for one instance"""

    def __init__(self):
        self.nodes: List[Node] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, value, validated: bool = False) -> Tensor:
        """
        Register a differentiable input

        Args:
            value: Array-like initial values (copied)
            validated: value is a finite float64 array that is never written to;
                it is used as is, without copying or checking

        Returns:
            Tensor recorded as a leaf node
        """
        if validated:
            data = value
        else:
            data = np.array(value, dtype=np.float64)
            check_finite("leaf", data)
        self.nodes.append(Node("leaf", (), None, data.shape))
        return Tensor(data, self, len(self.nodes) - 1)

    def record(self, op: str, data: np.ndarray, inputs: Sequence[Tensor], vjp: VjpFn) -> Tensor:
        """
        Append a primitive result to the tape

        Args:
            op: Primitive name
            data: Forward result
            inputs: Operand tensors, in the order the vjp returns gradients
            vjp: Maps the output cotangent to one cotangent per input

        Returns:
            Tensor handle of the new node
        """
        handles = tuple(t.node if t.tape is self else None for t in inputs)
        self.nodes.append(Node(op, handles, vjp, data.shape))
        return Tensor(data, self, len(self.nodes) - 1)


def check_finite(op: str, data: np.ndarray) -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{op} produced non-finite values")


def tape_of(*tensors: Tensor) -> Optional[Tape]:
    """
    Find the shared tape of the operands

    Args:
        tensors: Operands of a primitive

    Returns:
        The tape, or None when every operand is a constant

    Raises:
        TapeError: Operands live on different tapes
    """
    found: Optional[Tape] = None
    for t in tensors:
        if t.tape is None:
            continue
        if found is None:
            found = t.tape
        elif t.tape is not found:
            raise TapeError("operands are recorded on different tapes")
    return found


class GradientMap:
    """Gradients of a scalar root with respect to tape nodes"""

    def __init__(self, tape: Tape, grads: Dict[int, np.ndarray]):
        self.tape = tape
        self._grads = grads

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        if tensor.tape is not self.tape:
            raise TapeError("tensor is not recorded on this tape")
        grad = self._grads.get(tensor.node)
        if grad is None:
            return np.zeros(tensor.shape)
        return grad

    def __contains__(self, tensor: Tensor) -> bool:
        return tensor.tape is self.tape and tensor.node in self._grads

    def __len__(self) -> int:
        return len(self._grads)


def backward(tape: Tape, root: Tensor) -> GradientMap:
    """
    Reverse-mode sweep from a scalar root

    Args:
        tape: Tape holding every node reachable from root
        root: Single-element tensor recorded on tape

    Returns:
        Gradient map; leaves the root does not depend on get zeros

    Raises:
        TapeError: Root is not scalar or not recorded on this tape
    """
    if root.size != 1:
        raise TapeError(f"backward needs a scalar root, got shape {root.shape}")
    if root.tape is not tape:
        raise TapeError("root is not recorded on this tape")

    grads: Dict[int, np.ndarray] = {root.node: np.ones(root.shape)}
    leaves: Dict[int, np.ndarray] = {}

    for idx in range(root.node, -1, -1):
        g = grads.pop(idx, None)
        if g is None:
            continue
        node = tape.nodes[idx]
        if node.vjp is None:
            leaves[idx] = g
            continue
        for parent, pg in zip(node.inputs, node.vjp(g)):
            if parent is None or pg is None:
                continue
            prev = grads.get(parent)
            grads[parent] = pg if prev is None else prev + pg

    logger.debug(f"backward visited {root.node + 1} nodes, {len(leaves)} leaves reached")
    return GradientMap(tape, leaves)
