"""Named trainable arrays and encoder hyperparameters"""

from collections import OrderedDict
from dataclasses import asdict, dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from ..autodiff.tape import Tape, Tensor
from ..errors import ConfigError, ShapeError


@dataclass(frozen=True)
class EncoderHyper:
    """Architecture of the encoding block"""

    d: int = 128
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 512

    def __post_init__(self):
        for name in ("d", "n_layers", "n_heads", "d_ff"):
            if getattr(self, name) < 1:
                raise ConfigError(f"encoder.{name} must be >= 1, got {getattr(self, name)}")
        if self.d % self.n_heads:
            raise ConfigError(f"encoder.d={self.d} is not divisible by n_heads={self.n_heads}")

    @property
    def d_head(self) -> int:
        return self.d // self.n_heads

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


def attention_block_shapes(prefix: str, hyper: EncoderHyper) -> "OrderedDict[str, Tuple[int, ...]]":
    """Shapes of one self-attention sublayer: T heads, two norms, the feed-forward pair"""
    d, dh, dff = hyper.d, hyper.d_head, hyper.d_ff
    shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    for t in range(hyper.n_heads):
        head = f"{prefix}.head{t}"
        shapes[f"{head}.wq"] = (dh, d)
        shapes[f"{head}.wk"] = (dh, d)
        shapes[f"{head}.wv"] = (dh, d)
        shapes[f"{head}.wo"] = (d, dh)
    shapes[f"{prefix}.norm1.gain"] = (d, 1)
    shapes[f"{prefix}.norm1.bias"] = (d, 1)
    shapes[f"{prefix}.ff1.weight"] = (dff, d)
    shapes[f"{prefix}.ff1.bias"] = (dff, 1)
    shapes[f"{prefix}.ff2.weight"] = (d, dff)
    shapes[f"{prefix}.ff2.bias"] = (d, 1)
    shapes[f"{prefix}.norm2.gain"] = (d, 1)
    shapes[f"{prefix}.norm2.bias"] = (d, 1)
    return shapes


def embedding_shapes(hyper: EncoderHyper, n_antennas: int) -> "OrderedDict[str, Tuple[int, ...]]":
    return OrderedDict([("embed.weight", (hyper.d, 2 * n_antennas)), ("embed.bias", (hyper.d, 1))])


def expected_shapes(hyper: EncoderHyper, n_antennas: int) -> "OrderedDict[str, Tuple[int, ...]]":
    """Every encoder parameter in storage order; nothing depends on K or M"""
    shapes = embedding_shapes(hyper, n_antennas)
    for layer in range(hyper.n_layers):
        shapes.update(attention_block_shapes(f"layer{layer}.u1", hyper))
        shapes.update(attention_block_shapes(f"layer{layer}.u2", hyper))
    shapes["deembed.weight"] = (3, hyper.d)
    shapes["deembed.bias"] = (3, 1)
    return shapes


def parameter_count(hyper: EncoderHyper, n_antennas: int) -> int:
    """Closed-form size of the encoder parameter set"""
    d, dff = hyper.d, hyper.d_ff
    per_sublayer = 4 * d * d + 2 * d * dff + dff + d + 4 * d
    return 2 * n_antennas * d + d + hyper.n_layers * 2 * per_sublayer + 3 * d + 3


class ModelParams:
    """Ordered collection of named float64 parameter arrays"""

    def __init__(self, arrays: Mapping[str, np.ndarray]):
        """
        Initialize parameter set

        Args:
            arrays: Name to array, in storage order (copied and made read-only)
        """
        self.arrays: "OrderedDict[str, np.ndarray]" = OrderedDict(
            (name, np.array(value, dtype=np.float64)) for name, value in arrays.items()
        )
        for name, value in self.arrays.items():
            if not np.all(np.isfinite(value)):
                raise ShapeError(f"parameter {name} has non-finite entries")
            value.flags.writeable = False

    @classmethod
    def initialize(cls, shapes: Mapping[str, Tuple[int, ...]], rng: np.random.Generator) -> "ModelParams":
        """
        Draw fresh parameters

        Projection matrices get uniform(±1/√fan_in), biases zeros,
        normalization gains ones.
        """
        arrays = OrderedDict()
        for name, shape in shapes.items():
            if name.endswith(".bias"):
                arrays[name] = np.zeros(shape)
            elif name.endswith(".gain"):
                arrays[name] = np.ones(shape)
            else:
                bound = 1.0 / np.sqrt(shape[1])
                arrays[name] = rng.uniform(-bound, bound, size=shape)
        return cls(arrays)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def __len__(self) -> int:
        return len(self.arrays)

    def names(self) -> List[str]:
        return list(self.arrays)

    def shapes(self) -> "OrderedDict[str, Tuple[int, ...]]":
        return OrderedDict((name, value.shape) for name, value in self.arrays.items())

    @property
    def size(self) -> int:
        return int(sum(value.size for value in self.arrays.values()))

    def copy(self) -> "ModelParams":
        return ModelParams(self.arrays)

    def check_shapes(self, expected: Mapping[str, Tuple[int, ...]]) -> None:
        """
        Raises:
            ShapeError: Names or shapes differ from the expected layout
        """
        if list(expected) != self.names():
            missing = sorted(set(expected) - set(self.arrays))
            extra = sorted(set(self.arrays) - set(expected))
            raise ShapeError(f"parameter names differ: missing {missing[:5]}, unexpected {extra[:5]}")
        for name, shape in expected.items():
            if self.arrays[name].shape != tuple(shape):
                raise ShapeError(f"parameter {name} has shape {self.arrays[name].shape}, expected {tuple(shape)}")

    def bind(self, tape: Optional[Tape] = None) -> Dict[str, Tensor]:
        """Tensors for a forward pass: tape leaves, or constants when tape is None"""
        if tape is None:
            return {name: Tensor(value) for name, value in self.arrays.items()}
        return {name: tape.leaf(value, validated=True) for name, value in self.arrays.items()}

    def flatten(self) -> np.ndarray:
        if not self.arrays:
            return np.zeros(0)
        return np.concatenate([value.reshape(-1) for value in self.arrays.values()])

    @classmethod
    def unflatten(cls, shapes: Mapping[str, Tuple[int, ...]], vector: np.ndarray) -> "ModelParams":
        total = int(sum(np.prod(shape, dtype=int) for shape in shapes.values()))
        if vector.size != total:
            raise ShapeError(f"flat parameter vector has {vector.size} entries, expected {total}")
        arrays, offset = OrderedDict(), 0
        for name, shape in shapes.items():
            size = int(np.prod(shape, dtype=int))
            arrays[name] = vector[offset : offset + size].reshape(shape)
            offset += size
        return cls(arrays)
