"""Fan per-location work out over a thread pool"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

T = TypeVar("T")


def map_locations(func: Callable[[int], T], count: int, threads: Optional[int] = 1) -> List[T]:
    """
    Evaluate ``func(i)`` for i in 0..count-1 and return the results in location order.

    Args:
        func: Work for a single location; must not depend on other locations
        count: Number of locations
        threads: Worker threads (None or <= 1 runs inline)

    Returns:
        List of results indexed by location
    """
    if not threads or threads <= 1 or count <= 1:
        return [func(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(threads, count)) as pool:
        return list(pool.map(func, range(count)))
