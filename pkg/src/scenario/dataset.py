"""Dataset files: one instance per JSON line, or a packed little-endian binary"""

import json
import logging
import struct
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Iterable, List, Union

import numpy as np

from ..errors import DatasetError, InvalidInstanceError
from .channel import ChannelInstance, db_to_lin, dbm_to_watt, lin_to_db, watt_to_dbm

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class DatasetCodec(ABC):
    """Abstract base class for dataset file formats"""

    @abstractmethod
    def write(self, path: PathLike, instances: Iterable[ChannelInstance]) -> int:
        """
        Write instances to a file, replacing it

        Args:
            path: Output file
            instances: Instances in file order

        Returns:
            Number of instances written
        """
        pass

    @abstractmethod
    def read(self, path: PathLike) -> List[ChannelInstance]:
        """
        Read every instance of a file

        Raises:
            DatasetError: File is malformed
        """
        pass


class TextDatasetCodec(DatasetCodec):
    """
    One JSON object per line:
    {"n": N, "gamma_db": [...], "noise_dbm": p, "groups": [[[[re, im], ...], ...], ...]}
    """

    def encode(self, inst: ChannelInstance) -> str:
        if not np.all(inst.sigma2 == inst.sigma2[0]):
            raise DatasetError("text datasets need one noise power shared by all users")
        groups = []
        for m in range(inst.n_groups):
            block = inst.group(m)
            groups.append([[[float(z.real), float(z.imag)] for z in block[:, k]] for k in range(block.shape[1])])
        record = {
            "n": inst.n_antennas,
            "gamma_db": [float(g) for g in lin_to_db(inst.gamma_lin)],
            "noise_dbm": float(watt_to_dbm(inst.sigma2[0])),
            "groups": groups,
        }
        return json.dumps(record)

    def decode(self, line: str) -> ChannelInstance:
        try:
            record = json.loads(line)
            n = int(record["n"])
            columns = []
            sizes = []
            for users in record["groups"]:
                sizes.append(len(users))
                for user in users:
                    pairs = np.asarray(user, dtype=np.float64)
                    if pairs.shape != (n, 2):
                        raise DatasetError(f"user channel has shape {pairs.shape}, expected ({n}, 2)")
                    columns.append(pairs[:, 0] + 1j * pairs[:, 1])
            return ChannelInstance(
                h=np.stack(columns, axis=1) if columns else np.zeros((n, 0), dtype=np.complex128),
                group_sizes=tuple(sizes),
                sigma2=np.full(len(columns), float(dbm_to_watt(record["noise_dbm"]))),
                gamma_lin=db_to_lin(record["gamma_db"]),
            )
        except InvalidInstanceError as e:
            raise DatasetError(str(e)) from e
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetError(f"malformed dataset line: {e}") from e

    def write(self, path: PathLike, instances: Iterable[ChannelInstance]) -> int:
        count = 0
        with open(path, "w", encoding="utf-8") as f:
            for inst in instances:
                f.write(self.encode(inst) + "\n")
                count += 1
        return count

    def read(self, path: PathLike) -> List[ChannelInstance]:
        instances = []
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    instances.append(self.decode(line))
                except DatasetError as e:
                    raise DatasetError(f"{path}:{lineno}: {e}") from e
        return instances


class BinaryDatasetCodec(DatasetCodec):
    """
    Concatenated records, each:
    int32 N, M, K_1..K_M; then per user N (re, im) f64 pairs;
    then K noise powers and M linear SINR targets as f64. All little-endian.
    """

    def encode(self, inst: ChannelInstance) -> bytes:
        header = np.asarray([inst.n_antennas, inst.n_groups, *inst.group_sizes], dtype="<i4")
        # column-major per user, re/im interleaved
        interleaved = np.stack([inst.h.real.T, inst.h.imag.T], axis=-1)
        body = [
            interleaved.astype("<f8").tobytes(),
            inst.sigma2.astype("<f8").tobytes(),
            inst.gamma_lin.astype("<f8").tobytes(),
        ]
        return header.tobytes() + b"".join(body)

    def write(self, path: PathLike, instances: Iterable[ChannelInstance]) -> int:
        count = 0
        with open(path, "wb") as f:
            for inst in instances:
                f.write(self.encode(inst))
                count += 1
        return count

    def read(self, path: PathLike) -> List[ChannelInstance]:
        blob = Path(path).read_bytes()
        instances = []
        pos = 0
        while pos < len(blob):
            try:
                n, m = struct.unpack_from("<ii", blob, pos)
                pos += 8
                if n < 1 or m < 1:
                    raise DatasetError(f"bad header N={n}, M={m}")
                sizes = np.frombuffer(blob, dtype="<i4", count=m, offset=pos).astype(int)
                pos += 4 * m
                if np.any(sizes < 1):
                    raise DatasetError(f"bad group sizes {sizes.tolist()}")
                k = int(sizes.sum())
                values = np.frombuffer(blob, dtype="<f8", count=2 * n * k + k + m, offset=pos)
                pos += 8 * values.size
            except (struct.error, ValueError) as e:
                raise DatasetError(f"{path}: truncated record at byte {pos}") from e
            pairs = values[: 2 * n * k].reshape(k, n, 2)
            try:
                instances.append(
                    ChannelInstance(
                        h=(pairs[..., 0] + 1j * pairs[..., 1]).T,
                        group_sizes=tuple(sizes.tolist()),
                        sigma2=values[2 * n * k : 2 * n * k + k].copy(),
                        gamma_lin=values[2 * n * k + k :].copy(),
                    )
                )
            except InvalidInstanceError as e:
                raise DatasetError(f"{path}: {e}") from e
        return instances


def codec_for(path: PathLike) -> DatasetCodec:
    """Binary codec for .bin files, text otherwise"""
    return BinaryDatasetCodec() if Path(path).suffix == ".bin" else TextDatasetCodec()


def write_dataset(path: PathLike, instances: Iterable[ChannelInstance]) -> int:
    count = codec_for(path).write(path, instances)
    logger.info(f"Wrote {count} instances to {path}")
    return count


def read_dataset(path: PathLike) -> List[ChannelInstance]:
    if not Path(path).exists():
        raise DatasetError(f"dataset {path} does not exist")
    instances = codec_for(path).read(path)
    logger.info(f"Read {len(instances)} instances from {path}")
    return instances
