"""Reproducible per-task random streams."""

from __future__ import annotations

import hashlib
import random

UPPER_WALK = 0
ANCHOR = 1
TOUR = 2
SEED = 3


def derive_seed(master_seed: int, *task_id: int) -> int:
    """128-bit seed for ``task_id`` under ``master_seed`` (stable across platforms).

    BLAKE2b over the decimal ids, with the master seed as a separate
    personalised field so ``(1, 2)`` and ``(12,)`` never collide.
    """
    msg = ",".join(str(int(x)) for x in task_id).encode()
    h = hashlib.blake2b(msg, digest_size=16, key=str(int(master_seed)).encode()[:64])
    return int.from_bytes(h.digest(), "big")


def derive_rng(master_seed: int, *task_id: int) -> random.Random:
    return random.Random(derive_seed(master_seed, *task_id))
