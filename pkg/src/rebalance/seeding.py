"""Labeled sub-seeding of a single master seed.

Every random consumer in the pipeline (the split, each sampler, each
classifier) draws from its own PCG64 stream. A stream is identified by the
master seed plus a tuple of labels; the labels are hashed with SHA-256 into
32-bit words and fed to ``numpy.random.SeedSequence``. The mapping is
platform independent, so identical labels always give identical streams.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_words(labels: tuple) -> list[int]:
    text = "\x1f".join(str(part) for part in labels).encode("utf-8")
    digest = hashlib.sha256(text).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def derive_seed(master: int, *labels) -> int:
    """Return a 63-bit integer seed for the stream ``(master, *labels)``."""
    master = int(master) & 0xFFFFFFFFFFFFFFFF
    seq = np.random.SeedSequence([master & 0xFFFFFFFF, master >> 32, *_label_words(labels)])
    return int(seq.generate_state(1, dtype=np.uint64)[0]) >> 1


def stream(seed: int, *labels) -> np.random.Generator:
    """A PCG64 generator for ``seed`` optionally narrowed by ``labels``."""
    if labels:
        seed = derive_seed(seed, *labels)
    return np.random.Generator(np.random.PCG64(int(seed)))
