import numpy as np
import pytest

from anchorlab.embeddings import (
    EmbeddingBank,
    random_unit_bank,
    read_bank,
    write_bank,
)
from anchorlab.errors import ValidationError


def test_round_trip_is_bit_exact(tmp_path):
    bank = random_unit_bank([f"w{i}" for i in range(20)], dim=17, seed=3)
    path = tmp_path / "bank.embk"
    write_bank(bank, path)
    loaded = read_bank(path)
    assert loaded.tokens == bank.tokens
    assert loaded.matrix.dtype == np.float32
    assert np.array_equal(loaded.matrix, bank.matrix)


def test_write_twice_identical_bytes(tmp_path):
    bank = random_unit_bank(["alpha", "beta"], dim=5, seed=0)
    a, b = tmp_path / "a.embk", tmp_path / "b.embk"
    write_bank(bank, a)
    write_bank(bank, b)
    assert a.read_bytes() == b.read_bytes()


def test_unicode_tokens_survive(tmp_path):
    mat = np.eye(3, dtype=np.float32)
    bank = EmbeddingBank(["naive", "café", "中文"], mat)
    path = tmp_path / "u.embk"
    write_bank(bank, path)
    assert read_bank(path).tokens == ["naive", "café", "中文"]


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.embk"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValidationError, match="magic"):
        read_bank(path)


def test_truncated_file_rejected(tmp_path):
    bank = random_unit_bank(["a", "b"], dim=4, seed=0)
    path = tmp_path / "t.embk"
    write_bank(bank, path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(ValidationError, match="truncated"):
        read_bank(path)


def test_trailing_bytes_rejected(tmp_path):
    bank = random_unit_bank(["a"], dim=4, seed=0)
    path = tmp_path / "t.embk"
    write_bank(bank, path)
    path.write_bytes(path.read_bytes() + b"x")
    with pytest.raises(ValidationError, match="trailing"):
        read_bank(path)


def test_duplicate_tokens_rejected():
    with pytest.raises(ValidationError, match="unique"):
        EmbeddingBank(["a", "a"], np.eye(2, dtype=np.float32))


def test_subset_preserves_order_and_rows():
    bank = random_unit_bank(["a", "b", "c", "d"], dim=6, seed=1)
    sub = bank.subset(["c", "a"])
    assert sub.tokens == ["c", "a"]
    assert np.array_equal(sub.vector("c"), bank.vector("c"))


def test_unit_normalized_rows():
    mat = np.array([[3.0, 4.0], [0.5, 0.0]], dtype=np.float32)
    bank = EmbeddingBank(["x", "y"], mat).unit_normalized()
    assert bank.max_row_norm_error() < 1e-6
    assert np.allclose(bank.vector("x"), [0.6, 0.8])


def test_zero_row_cannot_normalize():
    mat = np.array([[0.0, 0.0]], dtype=np.float32)
    with pytest.raises(ValidationError, match="zero vector"):
        EmbeddingBank(["z"], mat).unit_normalized()


def test_random_unit_bank_deterministic():
    a = random_unit_bank(["p", "q"], dim=9, seed=11)
    b = random_unit_bank(["p", "q"], dim=9, seed=11)
    assert np.array_equal(a.matrix, b.matrix)
    assert a.max_row_norm_error() < 1e-6
