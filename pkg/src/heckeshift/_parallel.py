"""Ordered thread-pool map.

All batch operations parallelize over independent work items (CRT primes,
shift values h, phases alpha) and collect results by index, so the output
is identical for any thread count.
"""

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, threads=1):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
