"""Labelled seed derivation: each pipeline stage draws from its own stream, so
changing one stage's sample count never shifts another stage's randomness."""
import hashlib


def derive_seed(master: int, label: str, index: int = 0) -> int:
    digest = hashlib.blake2b(f"{int(master)}/{label}/{int(index)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")
