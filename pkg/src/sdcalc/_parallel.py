"""Fixed-chunk data parallelism capped by ``SDCALC_THREADS``."""

import os
from concurrent.futures import ThreadPoolExecutor

CHUNK = 64


def threads():
    try:
        return max(1, int(os.environ.get("SDCALC_THREADS", "1")))
    except ValueError:
        return 1


def chunked(fn, n, serial=False, chunk=CHUNK):
    """Run ``fn(slice)`` over fixed-size chunks; results come back in input order.

    Chunk boundaries do not depend on the thread count, so results are
    bit-identical for any ``SDCALC_THREADS``.
    """
    slices = [slice(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    workers = 1 if serial else min(threads(), len(slices))
    if workers <= 1:
        return [fn(sl) for sl in slices]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, slices))
