"""Token-to-vector embedding banks and their binary file format.

An EmbeddingBank is an ordered token -> vector table with a single fixed
dimension. Banks are stored in the EMBK binary format:

    magic   b"EMBK"
    u32 LE  version (currently 1)
    u32 LE  entry count
    u32 LE  dimension
    per entry:
        u16 LE  token byte length
        UTF-8   token bytes
        f32 LE  dimension values, row-major

The format is bit-exact: writing a bank and reading it back yields
identical float32 rows, which keeps bank-dependent tests reproducible.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ValidationError

EMBK_MAGIC = b"EMBK"
EMBK_VERSION = 1


class EmbeddingBank:
    """Ordered token -> float32 vector table of one fixed dimension."""

    def __init__(self, tokens, matrix):
        matrix = np.asarray(matrix, dtype=np.float32)
        if matrix.ndim != 2:
            raise ValidationError("bank matrix must be 2-D (count x dim)")
        if len(tokens) != matrix.shape[0]:
            raise ValidationError(
                f"bank has {len(tokens)} tokens but {matrix.shape[0]} rows"
            )
        if len(set(tokens)) != len(tokens):
            raise ValidationError("bank tokens must be unique")
        self.tokens = list(tokens)
        self.matrix = matrix
        self._index = {tok: i for i, tok in enumerate(self.tokens)}

    @property
    def dim(self):
        return int(self.matrix.shape[1])

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def vector(self, token):
        try:
            return self.matrix[self._index[token]]
        except KeyError:
            raise KeyError(f"token not in bank: {token!r}") from None

    def index_of(self, token):
        return self._index[token]

    def subset(self, tokens):
        """Bank restricted to `tokens`, in the given order."""
        rows = [self._index[t] for t in tokens]
        return EmbeddingBank(list(tokens), self.matrix[rows])

    def unit_normalized(self):
        """Copy with every row scaled to unit L2 norm (zero rows rejected)."""
        norms = np.linalg.norm(self.matrix, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            bad = self.tokens[int(np.argmax(norms == 0.0))]
            raise ValidationError(f"cannot normalize zero vector for {bad!r}")
        return EmbeddingBank(self.tokens, self.matrix / norms)

    def max_row_norm_error(self):
        """Largest |norm - 1| over rows; used by unit-norm invariant checks."""
        return float(np.max(np.abs(np.linalg.norm(self.matrix, axis=1) - 1.0)))


def write_bank(bank: EmbeddingBank, path):
    with open(path, "wb") as fh:
        fh.write(EMBK_MAGIC)
        fh.write(struct.pack("<II", EMBK_VERSION, len(bank)))
        fh.write(struct.pack("<I", bank.dim))
        for i, token in enumerate(bank.tokens):
            raw = token.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValidationError(f"token too long for EMBK format: {token[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(bank.matrix[i].astype("<f4").tobytes())


def read_bank(path) -> EmbeddingBank:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EMBK_MAGIC:
            raise ValidationError(f"{path}: bad magic {magic!r}, expected EMBK")
        header = fh.read(12)
        if len(header) != 12:
            raise ValidationError(f"{path}: truncated EMBK header")
        version, count, dim = struct.unpack("<III", header)
        if version != EMBK_VERSION:
            raise ValidationError(f"{path}: unsupported EMBK version {version}")
        tokens = []
        rows = np.empty((count, dim), dtype=np.float32)
        for i in range(count):
            (tok_len,) = struct.unpack("<H", fh.read(2))
            token = fh.read(tok_len).decode("utf-8")
            data = fh.read(4 * dim)
            if len(data) != 4 * dim:
                raise ValidationError(f"{path}: truncated vector for entry {i}")
            tokens.append(token)
            rows[i] = np.frombuffer(data, dtype="<f4")
        trailing = fh.read(1)
        if trailing:
            raise ValidationError(f"{path}: trailing bytes after {count} entries")
    return EmbeddingBank(tokens, rows)


def random_unit_bank(tokens, dim, seed) -> EmbeddingBank:
    """Seeded bank of uniformly distributed unit vectors (test/synthetic use)."""
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((len(tokens), dim))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    return EmbeddingBank(tokens, mat.astype(np.float32))
