"""
File helpers for the CLI: all-or-nothing output files and chunked XOR streaming
"""

from contextlib import contextmanager
import os
from pathlib import Path
import tempfile
from typing import BinaryIO, Iterator, Union

from dicing.engine import BLOCK_SIZE, KeystreamGenerator
from dicing.exceptions import ContractViolation
from utils.observability import ComponentType, get_logger

logger = get_logger(ComponentType.CLI)

PathLike = Union[str, Path]

DEFAULT_CHUNK_SIZE = 64 * 1024


@contextmanager
def atomic_output(path: PathLike) -> Iterator[BinaryIO]:
    """Write to a temporary sibling of path and move it into place on success

    On any exception the temporary file is removed and path is left untouched.
    """
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "wb") as handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def write_bytes_atomic(path: PathLike, data: bytes) -> None:
    with atomic_output(path) as handle:
        handle.write(data)


def xor_file(
    generator: KeystreamGenerator,
    source: PathLike,
    destination: PathLike,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> int:
    """destination = source xor keystream, read and written chunk by chunk

    Returns the number of bytes processed. Memory use is bounded by chunk_size.
    """
    if chunk_size < BLOCK_SIZE or chunk_size % BLOCK_SIZE:
        raise ContractViolation(
            f"chunk size must be a positive multiple of {BLOCK_SIZE}, got {chunk_size}"
        )

    processed = 0
    with open(source, "rb") as reader, atomic_output(destination) as writer:
        while True:
            chunk = reader.read(chunk_size)
            if not chunk:
                break
            writer.write(generator.xor(chunk))
            processed += len(chunk)

    logger.debug("File processed", n_bytes=processed, chunk_size=chunk_size)
    return processed
