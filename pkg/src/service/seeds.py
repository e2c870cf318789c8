import hashlib


def derive_seed(master_seed: int, *labels) -> int:
    """
    A 63-bit seed for one labeled subsystem (or one indexed item of it), so that
    every random stream of a run follows from a single master seed.
    """
    key = "/".join([str(master_seed), *(str(label) for label in labels)])
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1
