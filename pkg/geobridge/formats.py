"""
Binary file formats. All integers are unsigned 32-bit and all reals float64, little-endian.

Checkpoint::

    b"GDB1" | version | len + UTF-8 config echo |
    { len + UTF-8 name | rank | shape[rank] | prod(shape) float64 } until end of file

Trajectories::

    b"GDBTRAJ1" | n_records | n_atoms | N | sigma |
    { atom ids[n_atoms] | coords[(N + 1) * n_atoms * 3] } * n_records
"""
import struct
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path

import numpy as np

from .datasets import TrajectoryDataset, TrajectorySample
from .errors import FormatError


__all__ = ["CHECKPOINT_MAGIC",
           "CHECKPOINT_VERSION",
           "TRAJECTORY_MAGIC",
           "Checkpoint",
           "TrajectoryFile"]


logger = getLogger(__name__)

CHECKPOINT_MAGIC = b"GDB1"
CHECKPOINT_VERSION = 1
TRAJECTORY_MAGIC = b"GDBTRAJ1"

_U32 = struct.Struct("<I")
_TRAJ_HEADER = struct.Struct("<IIId")
_F64 = np.dtype("<f8")
_U32_ARRAY = np.dtype("<u4")


class _Reader:
    """Sequential reader over a byte buffer that turns truncation into FormatError."""
    def __init__(self, data: bytes):
        self.__data = memoryview(data)
        self.__offset = 0

    @property
    def exhausted(self) -> bool:
        """True once every byte has been consumed."""
        return self.__offset == len(self.__data)

    def take(self, size: int) -> bytes:
        """Next ``size`` bytes."""
        end = self.__offset + size
        if end > len(self.__data):
            raise FormatError(f"truncated file: need {size} bytes at offset {self.__offset}")
        chunk = bytes(self.__data[self.__offset:end])
        self.__offset = end
        return chunk

    def u32(self) -> int:
        """Next unsigned 32-bit integer."""
        return _U32.unpack(self.take(_U32.size))[0]

    def text(self) -> str:
        """Next length-prefixed UTF-8 string."""
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"invalid UTF-8 string: {e}") from e

    def array(self, dtype: np.dtype, shape: tuple[int, ...]) -> np.ndarray:
        """Next array of ``dtype`` with ``shape``, as a writable native copy."""
        count = int(np.prod(shape, dtype=np.int64))
        raw = self.take(count * dtype.itemsize)
        return np.frombuffer(raw, dtype=dtype).astype(dtype.newbyteorder("="))\
            .reshape(shape)


def _text_bytes(text: str) -> bytes:
    raw = text.encode("utf-8")
    return _U32.pack(len(raw)) + raw


@dataclass(frozen=True, eq=False)
class Checkpoint:
    """
    Trained parameters and the config they were trained with.

    :ivar config_text: Canonical config echo.
    :ivar arrays: Parameter name to float64 array, in file order.
    """
    config_text: str
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def encode(self) -> bytes:
        """Serialises the checkpoint."""
        parts = [CHECKPOINT_MAGIC, _U32.pack(CHECKPOINT_VERSION), _text_bytes(self.config_text)]
        for name, array in self.arrays.items():
            array = np.asarray(array, dtype=_F64)
            parts.append(_text_bytes(name))
            parts.append(_U32.pack(array.ndim))
            parts.extend(_U32.pack(dim) for dim in array.shape)
            parts.append(array.tobytes(order="C"))
        return b"".join(parts)

    @classmethod
    def decode(cls, data: bytes) -> "Checkpoint":
        """
        Parses serialised checkpoint bytes.

        :raises FormatError: On a wrong magic or version, truncation or repeated names.
        """
        reader = _Reader(data)
        if reader.take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise FormatError("not a checkpoint: bad magic")
        version = reader.u32()
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        config_text = reader.text()
        arrays = {}
        while not reader.exhausted:
            name = reader.text()
            if name in arrays:
                raise FormatError(f"duplicate parameter block {name!r}")
            shape = tuple(reader.u32() for _ in range(reader.u32()))
            arrays[name] = reader.array(_F64, shape)
        return cls(config_text=config_text, arrays=arrays)

    def write(self, path: Path | str):
        """Writes the checkpoint to ``path``."""
        Path(path).write_bytes(self.encode())
        logger.info("Wrote checkpoint with %d parameter blocks to %s", len(self.arrays), path)

    @classmethod
    def read(cls, path: Path | str) -> "Checkpoint":
        """Reads a checkpoint from ``path``."""
        return cls.decode(Path(path).read_bytes())


@dataclass(frozen=True, eq=False)
class TrajectoryFile:
    """
    Contents of a trajectory file.

    :ivar coords: Coordinates ``(n_records, N + 1, n_atoms, 3)``.
    :ivar features: Atom ids ``(n_records, n_atoms)``.
    :ivar sigma: Diffusion coefficient recorded with the data.
    """
    coords: np.ndarray
    features: np.ndarray
    sigma: float

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        features = np.asarray(self.features, dtype=np.int64)
        if coords.ndim != 4 or coords.shape[-1] != 3 or coords.shape[1] < 1:
            raise FormatError(f"coords must have shape (records, N+1, n, 3), got {coords.shape}")
        if features.shape != (coords.shape[0], coords.shape[2]):
            raise FormatError(f"features shape {features.shape} does not match coords "
                              f"{coords.shape}")
        if np.any(features < 0) or np.any(features > np.iinfo(np.uint32).max):
            raise FormatError("atom ids must fit in u32")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def n_records(self) -> int:
        """Number of records."""
        return self.coords.shape[0]

    @property
    def N(self) -> int:  # pylint: disable=invalid-name
        """Segments per record."""
        return self.coords.shape[1] - 1

    @property
    def n_atoms(self) -> int:
        """Atoms per record."""
        return self.coords.shape[2]

    @classmethod
    def from_dataset(cls, dataset: TrajectoryDataset, sigma: float,
                     n_atoms: int = 0) -> "TrajectoryFile":
        """
        Packs a dataset; ``n_atoms`` is only used for an empty dataset.
        """
        if len(dataset) == 0:
            return cls(coords=np.zeros((0, 1, n_atoms, 3)),
                       features=np.zeros((0, n_atoms), dtype=np.int64),
                       sigma=sigma)
        coords, features = dataset.stacked()
        return cls(coords=coords, features=features, sigma=sigma)

    def to_dataset(self) -> TrajectoryDataset:
        """Unpacks into validated trajectory samples."""
        return TrajectoryDataset(samples=tuple(TrajectorySample.from_arrays(coords, features)
                                               for coords, features
                                               in zip(self.coords, self.features)))

    def encode(self) -> bytes:
        """Serialises the file contents."""
        parts = [TRAJECTORY_MAGIC,
                 _TRAJ_HEADER.pack(self.n_records, self.n_atoms, self.N, self.sigma)]
        for coords, features in zip(self.coords, self.features):
            parts.append(features.astype(_U32_ARRAY).tobytes())
            parts.append(coords.astype(_F64).tobytes(order="C"))
        return b"".join(parts)

    @classmethod
    def decode(cls, data: bytes) -> "TrajectoryFile":
        """
        Parses serialised trajectory bytes.

        :raises FormatError: On a wrong magic, a length that disagrees with the header
            or non-finite coordinates.
        """
        reader = _Reader(data)
        if reader.take(len(TRAJECTORY_MAGIC)) != TRAJECTORY_MAGIC:
            raise FormatError("not a trajectory file: bad magic")
        n_records, n_atoms, n_segments, sigma = _TRAJ_HEADER.unpack(
            reader.take(_TRAJ_HEADER.size))
        expected = len(TRAJECTORY_MAGIC) + _TRAJ_HEADER.size + n_records * (
            n_atoms * _U32_ARRAY.itemsize + (n_segments + 1) * n_atoms * 3 * _F64.itemsize)
        if len(data) != expected:
            raise FormatError(f"file length {len(data)} does not match header ({expected})")
        features = np.empty((n_records, n_atoms), dtype=np.int64)
        coords = np.empty((n_records, n_segments + 1, n_atoms, 3))
        for index in range(n_records):
            features[index] = reader.array(_U32_ARRAY, (n_atoms,))
            coords[index] = reader.array(_F64, (n_segments + 1, n_atoms, 3))
        if not np.all(np.isfinite(coords)):
            raise FormatError("trajectory file holds non-finite coordinates")
        return cls(coords=coords, features=features, sigma=sigma)

    def write(self, path: Path | str):
        """Writes the trajectories to ``path``."""
        Path(path).write_bytes(self.encode())
        logger.info("Wrote %d records (N=%d, n_atoms=%d) to %s",
                    self.n_records, self.N, self.n_atoms, path)

    @classmethod
    def read(cls, path: Path | str) -> "TrajectoryFile":
        """Reads trajectories from ``path``."""
        return cls.decode(Path(path).read_bytes())
